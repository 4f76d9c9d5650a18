// qbound: Holevo bounds, accessible regions, homodyne simulations and the
// verification suite from the command line.
//
// Exit codes: 0 success, 1 verification failure, 2 invalid configuration,
// 3 solver non-convergence, 4 statistical acceptance failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "qbound/closed_forms.hpp"
#include "qbound/measurement.hpp"
#include "qbound/region.hpp"
#include "qbound/verify.hpp"

using nlohmann::json;
using namespace qbound;

namespace {

enum Exit { kOk = 0, kVerifyFailed = 1, kInvalid = 2, kNotConverged = 3, kStatFailed = 4 };

std::string num(double x) {
  if (std::isnan(x)) return "";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

json jnum(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json jvec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(jnum(v(i)));
  return a;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

// Squeezing sources; at most one may be set per mode.
struct Squeezing {
  std::optional<double> r, db, r1, db1, r2, db2;

  static double from(std::optional<double> r, std::optional<double> db, const char* name) {
    if (r && db) throw InvalidArgument(std::string("both r and dB given for ") + name);
    if (db) {
      if (*db < 0.0) throw InvalidArgument("squeezing in dB must be non-negative");
      return squeezing_from_db(*db);
    }
    return r.value_or(0.0);
  }

  std::pair<double, double> resolve() const {
    if ((r || db) && (r1 || db1 || r2 || db2))
      throw InvalidArgument("--r/--db set both modes; do not combine with per-mode squeezing");
    if (r || db) {
      const double v = from(r, db, "the probe");
      return {v, v};
    }
    return {from(r1, db1, "mode 1"), from(r2, db2, "mode 2")};
  }
};

struct RunConfig {
  std::string config_file;
  std::string output;
  std::string format = "csv";
  int modes = 2;
  Squeezing sq;
  double phi = 0.0;
  std::optional<double> phi1, phi2;
  double t = 0.5;
  double wx = 1.0, wy = 1.0;
  bool auto_config = false;
  int restarts = 8;
  // region
  bool closed_form = false, numeric = false;
  int n_t = 50, n_phi = 25, n_w = 50, points = 200, bins = 400;
  double t_min = 0.4, t_max = 0.9, ratio_span = 100.0;
  // simulate
  std::string scheme = "balanced";
  std::int64_t shots = 100000;
  std::uint64_t seed = 1;
  std::uint64_t verify_seed = 20240611;
  std::string theta = "0,0";
  // verify
  std::vector<std::string> only;
  double perturb_envelope = 0.0;
  std::int64_t verify_shots = 1'000'000;
};

void add_probe_options(CLI::App* app, RunConfig& c) {
  app->add_option("--modes", c.modes, "number of probe modes (1 or 2)")->check(CLI::IsMember({1, 2}));
  app->add_option("--r", c.sq.r, "squeezing parameter (both modes when two-mode)");
  app->add_option("--db", c.sq.db, "squeezing in dB, -10 log10(e^{-2r})");
  app->add_option("--r1", c.sq.r1, "squeezing of input mode 1");
  app->add_option("--r2", c.sq.r2, "squeezing of input mode 2");
  app->add_option("--db1", c.sq.db1, "squeezing of input mode 1 in dB");
  app->add_option("--db2", c.sq.db2, "squeezing of input mode 2 in dB");
  app->add_option("--phi", c.phi, "single-mode squeezing angle");
  app->add_option("--phi1", c.phi1, "rotation of input mode 1");
  app->add_option("--phi2", c.phi2, "rotation of input mode 2");
  app->add_option("--t", c.t, "mixer transmissivity");
  app->add_option("--wx", c.wx, "weight of theta_x");
  app->add_option("--wy", c.wy, "weight of theta_y");
}

void add_common(CLI::App* app, RunConfig& c) {
  app->add_option("--config", c.config_file, "JSON file of option values; flags override it");
  app->add_option("--output,-o", c.output, "output file (default stdout)");
}

ProbeConfig<double> probe_of(const RunConfig& c) {
  const auto [r1, r2] = c.sq.resolve();
  if (c.modes == 1) {
    if (c.sq.r2 || c.sq.db2) throw InvalidArgument("a one-mode probe has no second squeezing");
    return ProbeConfig<double>::single(r1, c.phi1.value_or(c.phi));
  }
  ProbeConfig<double> p{2, r1, r2, c.phi1.value_or(0.0), c.phi2.value_or(c.phi1.value_or(0.0) + std::numbers::pi / 2.0),
                        c.t};
  p.validate();
  return p;
}

// w_x v_x + w_y v_y, where a zero weight drops its (possibly infinite) variance.
double weighted(const Weights& w, double v_x, double v_y) {
  return (w.w_x > 0.0 ? w.w_x * v_x : 0.0) + (w.w_y > 0.0 ? w.w_y * v_y : 0.0);
}

json probe_json(const ProbeConfig<double>& p) {
  json j{{"modes", p.n_modes}, {"r1", p.r1}, {"phi1", p.phi1}};
  if (p.n_modes == 2) {
    j["r2"] = p.r2;
    j["phi2"] = p.phi2;
    j["t"] = p.t;
  }
  j["db1"] = squeezing_to_db(p.r1);
  if (p.n_modes == 2) j["db2"] = squeezing_to_db(p.r2);
  return j;
}

int cmd_bound(const RunConfig& c) {
  const Weights w(c.wx, c.wy);
  auto probe = probe_of(c);
  json crosscheck = nullptr;
  bool swapped = false;
  if (c.auto_config) {
    if (probe.n_modes != 2) throw InvalidArgument("--auto-config needs a two-mode probe");
    const auto opt = optimal_config(w, probe.r1, probe.r2);
    swapped = opt.swapped;
    probe = opt.probe(std::min(probe.r1, probe.r2), std::max(probe.r1, probe.r2));
    crosscheck = {{"kind", "optimal-config"}, {"v_x", jnum(opt.v_x)}, {"v_y", jnum(opt.v_y)}};
  }
  const auto state = build_probe(probe);
  SolveOptions opts;
  opts.restarts = c.restarts;
  const auto res = solve(state.cov(), w, opts);
  if (!res.converged) {
    std::cerr << "solver did not converge\n";
    return kNotConverged;
  }
  const Eigen::Vector2d v = tangency_point(res, w);

  if (probe.n_modes == 1) {
    const double ref = single_mode_line(w, probe.r1, probe.phi1);
    crosscheck = {{"kind", "single-mode"}, {"f_hcr", ref}, {"agrees", std::abs(ref - res.f_hcr) <= 1e-9 * ref}};
  } else if (c.auto_config) {
    const auto opt = optimal_config(w, probe.r1, probe.r2);
    const double ref = weighted(w, opt.v_x, opt.v_y);
    crosscheck["f_hcr"] = ref;
    crosscheck["agrees"] = std::abs(ref - res.f_hcr) <= 1e-6 * std::max(1.0, ref);
  } else {
    // Any fixed configuration is bounded below by the optimal one.
    const auto opt = optimal_config(w, probe.r1, probe.r2);
    const double floor = weighted(w, opt.v_x, opt.v_y);
    crosscheck = {{"kind", "envelope-floor"}, {"f_hcr", floor}, {"agrees", res.f_hcr >= floor - 1e-9 * std::max(1.0, floor)}};
  }

  json out{{"command", "bound"},
           {"probe", probe_json(probe)},
           {"weights", {{"w_x", w.w_x}, {"w_y", w.w_y}}},
           {"f_hcr", res.f_hcr},
           {"v_x", jnum(v(0))},
           {"v_y", jnum(v(1))},
           {"duals", {{"c_x", jvec(res.duals.c_x)}, {"c_y", jvec(res.duals.c_y)}}},
           {"commutator", res.z_imag(0, 1)},
           {"converged", res.converged},
           {"method", res.method},
           {"swapped", swapped},
           {"closed_form_crosscheck", crosscheck}};
  write_output(c.output, out.dump(2) + "\n");
  return kOk;
}

int cmd_region(const RunConfig& c) {
  const auto probe = probe_of(c);
  std::vector<RegionSample> rows;
  if (probe.n_modes == 1) {
    rows = single_mode_region(probe.r1, probe.phi1, c.points);
  } else {
    const bool closed = c.closed_form || !c.numeric;
    if (closed) rows = closed_form_region(probe.r1, probe.r2, c.points);
    if (c.numeric) {
      const auto grid = EnvelopeGrid::logistic(c.n_t, c.n_phi, c.n_w, c.t_min, c.t_max, c.ratio_span);
      const auto env = envelope(probe.r1, probe.r2, grid);
      for (const auto& s : env.binned(c.bins)) {
        if (!s.converged) {
          std::cerr << "solver did not converge for a sweep sample\n";
          return kNotConverged;
        }
        rows.push_back(s);
      }
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.v_x < b.v_x; });

  std::string text;
  if (c.format == "csv") {
    text = "v_x,v_y,segment,source,t,phi1,w_ratio\n";
    for (const auto& s : rows)
      text += num(s.v_x) + "," + num(s.v_y) + "," + s.segment + "," + to_string(s.source) + "," + num(s.t) + "," +
              num(s.phi1) + "," + num(s.w_ratio) + "\n";
  } else {
    json a = json::array();
    for (const auto& s : rows)
      a.push_back({{"v_x", jnum(s.v_x)},
                   {"v_y", jnum(s.v_y)},
                   {"segment", s.segment},
                   {"source", to_string(s.source)},
                   {"t", jnum(s.t)},
                   {"phi1", jnum(s.phi1)},
                   {"w_ratio", jnum(s.w_ratio)}});
    text = a.dump(2) + "\n";
  }
  write_output(c.output, text);
  return kOk;
}

ChannelParams<double> parse_theta(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw InvalidArgument("--theta expects x,y");
  auto parse = [&](std::string_view part) {
    double v = 0.0;
    const auto res = std::from_chars(part.data(), part.data() + part.size(), v);
    if (res.ec != std::errc() || res.ptr != part.data() + part.size() || !std::isfinite(v))
      throw InvalidArgument("--theta expects two numbers x,y");
    return v;
  };
  const std::string_view sv(s);
  return {parse(sv.substr(0, comma)), parse(sv.substr(comma + 1))};
}

int cmd_simulate(const RunConfig& c) {
  if (c.shots < static_cast<std::int64_t>(kMinShots)) throw InvalidArgument("--shots must be at least 100");
  const auto kind = scheme_kind_from_string(c.scheme);
  const Weights w(c.wx, c.wy);
  const auto theta = parse_theta(c.theta);
  const auto [r1, r2] = c.sq.resolve();
  SchemeParams p;
  p.r1 = r1;
  p.r2 = r2;
  p.phi1 = c.phi1.value_or(0.0);
  p.phi2 = c.phi2.value_or(kind == SchemeKind::example1 ? 0.0 : p.phi1 + std::numbers::pi / 2.0);
  p.t = c.t;
  p.weights = w;

  const auto scheme = build_scheme(kind, p);
  const auto report = run_scheme(scheme, scheme.probe, theta, static_cast<std::uint64_t>(c.shots), c.seed);
  const auto bound = solve(build_probe(scheme.probe).cov(), w);
  if (!bound.converged) return kNotConverged;
  const bool optimal = kind != SchemeKind::example1;
  const auto verdict = compare_to_bound(report, bound.f_hcr, w, optimal);
  const bool on_target = ((report.variance - report.target_variance).array().abs() <=
                          5.0 * report.variance_se.array())
                             .all();
  const bool bias_ok = unbiased(report);

  json out{{"command", "simulate"},
           {"scheme", report.scheme},
           {"probe", probe_json(scheme.probe)},
           {"angles", {scheme.angles[0], scheme.angles[1]}},
           {"unmix_t", scheme.unmix_t},
           {"shots", report.shots},
           {"seed", report.seed},
           {"theta_true", {report.theta.theta_x, report.theta.theta_y}},
           {"mean", jvec(report.mean)},
           {"variance", jvec(report.variance)},
           {"covariance", report.covariance},
           {"mean_se", jvec(report.mean_se)},
           {"variance_se", jvec(report.variance_se)},
           {"target_variance", jvec(report.target_variance)},
           {"weights", {{"w_x", w.w_x}, {"w_y", w.w_y}}},
           {"f_hcr", bound.f_hcr},
           {"verdict",
            {{"pass", verdict.pass},
             {"weighted_sum", verdict.weighted_sum},
             {"standard_error", verdict.standard_error},
             {"z_score", verdict.z_score},
             {"message", verdict.message},
             {"on_target", on_target},
             {"unbiased", bias_ok}}}};
  write_output(c.output, out.dump(2) + "\n");
  return verdict.pass && on_target && bias_ok ? kOk : kStatFailed;
}

int cmd_verify(const RunConfig& c) {
  VerifyOptions opts;
  for (const auto& f : c.only) {
    std::stringstream ss(f);
    std::string part;
    while (std::getline(ss, part, ','))
      if (!part.empty()) opts.only.push_back(part);
  }
  opts.perturb_envelope = c.perturb_envelope;
  opts.seed = c.verify_seed;
  if (c.verify_shots < static_cast<std::int64_t>(kMinShots)) throw InvalidArgument("--shots must be at least 100");
  opts.shots = static_cast<std::uint64_t>(c.verify_shots);

  std::string lines;
  const auto results = run_verify(opts, [&](const CheckResult& r) {
    const json j{{"check", r.name},   {"pass", r.pass},     {"value", jnum(r.value)},
                 {"tolerance", r.tolerance}, {"detail", r.detail}, {"seconds", r.seconds}};
    lines += j.dump() + "\n";
    if (c.output.empty()) std::cout << j.dump() << std::endl;
  });
  if (!c.output.empty()) write_output(c.output, lines);

  int failed = 0;
  std::cerr << "\n";
  for (const auto& r : results) {
    std::cerr << (r.pass ? "PASS  " : "FAIL  ") << r.name;
    for (std::size_t i = r.name.size(); i < 28; ++i) std::cerr << ' ';
    std::cerr << num(r.value) << " (tol " << num(r.tolerance) << ")\n";
    failed += !r.pass;
  }
  std::cerr << results.size() - failed << "/" << results.size() << " checks passed\n";
  return failed ? kVerifyFailed : kOk;
}

// Turns a JSON config object into flag arguments placed before the real ones.
std::vector<std::string> config_args(const std::string& path, const std::set<std::string>& given) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read config file " + path);
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument("config file is not valid JSON: " + std::string(e.what()));
  }
  if (!cfg.is_object()) throw InvalidArgument("config file must hold a JSON object");
  // A squeezing flag on the command line replaces every file source for that mode.
  const std::vector<std::set<std::string>> groups{{"r", "db", "r1", "db1"}, {"r", "db", "r2", "db2"}};
  auto overridden = [&](const std::string& key) {
    if (given.count(key)) return true;
    for (const auto& g : groups)
      if (g.count(key))
        for (const auto& k : g)
          if (given.count(k)) return true;
    return false;
  };
  std::vector<std::string> args;
  for (const auto& [raw, value] : cfg.items()) {
    std::string key = raw;
    std::replace(key.begin(), key.end(), '_', '-');
    if (key == "config") continue;
    if ((key == "r" || key == "db") && !given.count("r") && !given.count("db") && overridden(key)) {
      // the file's both-mode value still applies to a mode the flags leave alone
      const std::string v = value.dump();
      if (!given.count("r1") && !given.count("db1")) args.insert(args.end(), {"--" + key + "1", v});
      if (!given.count("r2") && !given.count("db2")) args.insert(args.end(), {"--" + key + "2", v});
      continue;
    }
    if (overridden(key)) continue;
    const std::string flag = "--" + key;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) {
        const std::string s = v.is_string() ? v.get<std::string>() : v.dump();
        if (key == "only") {
          args.push_back(flag);
          args.push_back(s);
        } else {
          joined += (joined.empty() ? "" : ",") + s;
        }
      }
      if (key != "only") {
        args.push_back(flag);
        args.push_back(joined);
      }
    } else {
      args.push_back(flag);
      args.push_back(value.is_string() ? value.get<std::string>() : value.dump());
    }
  }
  return args;
}

std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::string file;
  std::set<std::string> given;
  for (std::size_t i = 1; i < args.size(); ++i) {
    const auto& a = args[i];
    if (a.rfind("--", 0) != 0) continue;
    std::string key = a.substr(2);
    const auto eq = key.find('=');
    if (eq != std::string::npos) key = key.substr(0, eq);
    given.insert(key);
    if (key == "config") {
      if (eq != std::string::npos) file = a.substr(a.find('=') + 1);
      else if (i + 1 < args.size()) file = args[i + 1];
    }
  }
  if (file.empty() || args.size() < 2) return args;
  auto extra = config_args(file, given);
  // insert right after the subcommand name
  args.insert(args.begin() + 2, extra.begin(), extra.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig c;
  CLI::App app{"Holevo bounds for two conjugate displacements with Gaussian probes"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  auto* bound = app.add_subcommand("bound", "weighted Holevo bound for one probe");
  add_common(bound, c);
  add_probe_options(bound, c);
  bound->add_flag("--auto-config", c.auto_config, "use the optimal two-mode configuration for the weights");
  bound->add_option("--restarts", c.restarts, "Nelder-Mead polish restarts")->check(CLI::NonNegativeNumber);

  auto* region = app.add_subcommand("region", "accessible (v_x, v_y) region boundary");
  add_common(region, c);
  add_probe_options(region, c);
  region->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  region->add_flag("--closed-form", c.closed_form, "closed-form envelope rows (default)");
  region->add_flag("--numeric", c.numeric, "numeric envelope rows from a configuration sweep");
  region->add_option("--n-t", c.n_t, "sweep: transmissivity values")->check(CLI::PositiveNumber);
  region->add_option("--n-phi", c.n_phi, "sweep: phi1 values")->check(CLI::PositiveNumber);
  region->add_option("--n-w", c.n_w, "sweep: weight ratios")->check(CLI::PositiveNumber);
  region->add_option("--t-min", c.t_min, "sweep: smallest transmissivity");
  region->add_option("--t-max", c.t_max, "sweep: largest transmissivity");
  region->add_option("--ratio-span", c.ratio_span, "sweep: ratios span [1/x, x]")->check(CLI::PositiveNumber);
  region->add_option("--points", c.points, "closed-form samples")->check(CLI::Range(2, 1000000));
  region->add_option("--bins", c.bins, "numeric envelope bins")->check(CLI::Range(2, 1000000));

  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo dual-homodyne run");
  add_common(simulate, c);
  add_probe_options(simulate, c);
  simulate->add_option("--scheme", c.scheme, "example1, balanced or general");
  simulate->add_option("--shots", c.shots, "number of shots (>= 100)");
  simulate->add_option("--seed", c.seed, "generator seed");
  simulate->add_option("--theta", c.theta, "true displacement x,y");

  auto* verify = app.add_subcommand("verify", "run the cross-verification suite");
  add_common(verify, c);
  verify->add_option("--only", c.only, "check group or name (repeatable, comma separated)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  verify->add_option("--perturb-envelope", c.perturb_envelope, "test hook: relative shift of the numeric envelope");
  verify->add_option("--seed", c.verify_seed, "generator seed");
  verify->add_option("--shots", c.verify_shots, "Monte-Carlo shots per run");

  try {
    auto args = expand_config(argc, argv);
    std::reverse(args.begin() + 1, args.end());  // CLI11 consumes a reversed vector
    args.erase(args.begin());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return e.get_exit_code() == 0 ? code : kInvalid;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  }

  try {
    if (*bound) return cmd_bound(c);
    if (*region) return cmd_region(c);
    if (*simulate) return cmd_simulate(c);
    return cmd_verify(c);
  } catch (const NotConverged& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNotConverged;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const Infeasible& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const PoleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kVerifyFailed;
  }
}
