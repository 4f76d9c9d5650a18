#include "qbound/region.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "qbound/parallel.hpp"

namespace qbound {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> log_space(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
  return out;
}

std::vector<double> lin_space(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return out;
}

Weights ratio_weights(double ratio) {
  if (!std::isfinite(ratio) || ratio <= 0.0) throw InvalidArgument("weight ratios must be positive and finite");
  return {ratio / (1.0 + ratio), 1.0 / (1.0 + ratio)};
}

}  // namespace

std::string to_string(SampleSource s) {
  return s == SampleSource::closed_form ? "closed-form" : "numeric-solver";
}

double bound_for_ratio(const Eigen::MatrixXd& cov, double ratio, const SolveOptions& options) {
  return solve(cov, ratio_weights(ratio), options).f_hcr;
}

RegionSample tangency_for_ratio(const ProbeConfig<double>& probe, const Eigen::MatrixXd& cov, double ratio,
                                const BoundaryOptions& options) {
  const Weights w = ratio_weights(ratio);
  const double h = options.fd_step;
  bool converged = true;
  auto f = [&](double wx, double wy) {
    const auto res = solve(cov, Weights(wx, wy), options.solve);
    converged = converged && res.converged;
    return res.f_hcr;
  };
  RegionSample s;
  s.v_x = (f(w.w_x * (1.0 + h), w.w_y) - f(w.w_x * (1.0 - h), w.w_y)) / (2.0 * h * w.w_x);
  s.v_y = (f(w.w_x, w.w_y * (1.0 + h)) - f(w.w_x, w.w_y * (1.0 - h))) / (2.0 * h * w.w_y);
  s.t = probe.n_modes == 2 ? probe.t : kNaN;
  s.phi1 = probe.phi1;
  s.w_ratio = ratio;
  s.source = SampleSource::numeric_solver;
  s.converged = converged;
  return s;
}

std::vector<RegionSample> boundary_for_config(const ProbeConfig<double>& probe, const std::vector<double>& w_grid,
                                              const BoundaryOptions& options) {
  if (w_grid.empty()) throw InvalidArgument("weight grid is empty");
  const auto state = build_probe(probe);
  std::vector<RegionSample> raw;
  raw.reserve(w_grid.size());
  for (double ratio : w_grid) raw.push_back(tangency_for_ratio(probe, state.cov(), ratio, options));
  std::sort(raw.begin(), raw.end(), [](const auto& a, const auto& b) {
    return a.v_x < b.v_x || (a.v_x == b.v_x && a.v_y > b.v_y);
  });

  std::vector<RegionSample> out;
  for (const auto& s : raw) {
    if (!std::isfinite(s.v_x) || !std::isfinite(s.v_y)) continue;
    if (!out.empty()) {
      const auto& last = out.back();
      const double tol = 1e-12 * std::max(1.0, std::abs(last.v_y));
      if (s.v_y >= last.v_y - tol) continue;
      if (s.v_x <= last.v_x + 1e-12 * std::max(1.0, std::abs(last.v_x))) continue;
    }
    out.push_back(s);
  }
  return out;
}

EnvelopeGrid EnvelopeGrid::uniform(int n_t, int n_phi, int n_w, double t_min, double ratio_span) {
  if (n_t < 1 || n_phi < 1 || n_w < 1) throw InvalidArgument("grid sizes must be positive");
  EnvelopeGrid g;
  g.t = lin_space(t_min, 1.0 - t_min, n_t);
  g.phi1 = lin_space(0.0, std::numbers::pi / 2.0, n_phi);
  g.w_ratio = log_space(1.0 / ratio_span, ratio_span, n_w);
  return g;
}

EnvelopeGrid EnvelopeGrid::logistic(int n_t, int n_phi, int n_w, double t_lo, double t_hi, double ratio_span) {
  if (!(t_lo > 0.0 && t_lo <= t_hi && t_hi < 1.0)) throw InvalidArgument("need 0 < t_lo <= t_hi < 1");
  EnvelopeGrid g = uniform(n_t, n_phi, n_w, 0.01, ratio_span);
  for (double& u : g.t = lin_space(std::log(t_lo / (1.0 - t_lo)), std::log(t_hi / (1.0 - t_hi)), n_t))
    u = 1.0 / (1.0 + std::exp(-u));
  return g;
}

NumericEnvelope::NumericEnvelope(double r1, double r2, std::vector<ConfigCurve> curves, BoundaryOptions options,
                                 bool refine)
    : r1_(std::min(r1, r2)),
      r2_(std::max(r1, r2)),
      curves_(std::move(curves)),
      options_(std::move(options)),
      refine_(refine) {}

std::optional<RegionSample> NumericEnvelope::refine_at(const ConfigCurve& curve, std::size_t hi, double v_x) const {
  const auto& a = curve.points[hi - 1];
  const auto& b = curve.points[hi];
  const auto cov = build_probe(curve.probe).cov();
  // v_x of the tangency point decreases as the weight ratio grows.
  auto g = [&](double u) { return tangency_for_ratio(curve.probe, cov, std::exp(u), options_).v_x - v_x; };
  const double u_lo = std::log(b.w_ratio), u_hi = std::log(a.w_ratio);
  const double g_lo = b.v_x - v_x, g_hi = a.v_x - v_x;
  if (!(u_lo < u_hi) || !(g_lo >= 0.0) || !(g_hi <= 0.0)) return std::nullopt;
  double u;
  if (g_lo == 0.0) {
    u = u_lo;
  } else if (g_hi == 0.0) {
    u = u_hi;
  } else {
    std::uintmax_t iters = 60;
    const auto br = boost::math::tools::toms748_solve(g, u_lo, u_hi, g_lo, g_hi,
                                                      boost::math::tools::eps_tolerance<double>(45), iters);
    u = 0.5 * (br.first + br.second);
  }
  auto s = tangency_for_ratio(curve.probe, cov, std::exp(u), options_);
  // step along the supporting line to the requested abscissa
  s.v_y -= s.w_ratio * (v_x - s.v_x);
  s.v_x = v_x;
  return s;
}

std::optional<RegionSample> NumericEnvelope::at(double v_x) const {
  struct Candidate {
    std::size_t curve, hi;
    double lower;
  };
  std::optional<RegionSample> best;
  std::vector<Candidate> candidates;
  for (std::size_t c = 0; c < curves_.size(); ++c) {
    const auto& pts = curves_[c].points;
    if (pts.size() < 2 || v_x < pts.front().v_x || v_x > pts.back().v_x) continue;
    auto it = std::lower_bound(pts.begin(), pts.end(), v_x, [](const auto& p, double x) { return p.v_x < x; });
    if (it == pts.begin()) ++it;
    const auto lo = it - 1, hi = it;
    const double s = (v_x - lo->v_x) / (hi->v_x - lo->v_x);
    const double chord = lo->v_y + s * (hi->v_y - lo->v_y);
    const double lower = std::max(lo->v_y - lo->w_ratio * (v_x - lo->v_x), hi->v_y - hi->w_ratio * (v_x - hi->v_x));
    candidates.push_back({c, static_cast<std::size_t>(hi - pts.begin()), lower});
    if (!best || chord < best->v_y) {
      RegionSample r = *lo;
      r.v_x = v_x;
      r.v_y = chord;
      r.w_ratio = std::exp(std::log(lo->w_ratio) + s * (std::log(hi->w_ratio) - std::log(lo->w_ratio)));
      r.converged = lo->converged && hi->converged;
      best = r;
    }
  }
  if (!refine_ || !best) return best;

  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) { return a.lower < b.lower; });
  for (const auto& cand : candidates) {
    if (cand.lower >= best->v_y) break;
    const auto r = refine_at(curves_[cand.curve], cand.hi, v_x);
    if (r && r->v_y < best->v_y) best = r;
  }
  return best;
}

std::pair<double, double> NumericEnvelope::coverage() const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& c : curves_) {
    if (c.points.size() < 2) continue;
    lo = std::min(lo, c.points.front().v_x);
    hi = std::max(hi, c.points.back().v_x);
  }
  return {lo, hi};
}

std::vector<RegionSample> NumericEnvelope::binned(int bins) const {
  std::vector<RegionSample> out;
  for (double v_x : log_space(1.001 * std::exp(-2.0 * r2_), 10.0 * std::exp(2.0 * r2_), bins))
    if (auto s = at(v_x)) out.push_back(*s);
  return out;
}

NumericEnvelope envelope(double r1, double r2, const EnvelopeGrid& grid, const BoundaryOptions& options,
                         bool refine) {
  if (grid.t.empty() || grid.phi1.empty() || grid.w_ratio.empty()) throw InvalidArgument("envelope grids must be nonempty");
  if (grid.exhaustive_phi2 && grid.phi2.empty()) throw InvalidArgument("exhaustive phi2 sweep needs a phi2 grid");
  if (r1 > r2) std::swap(r1, r2);

  std::vector<ProbeConfig<double>> configs;
  for (double t : grid.t)
    for (double p1 : grid.phi1) {
      if (grid.exhaustive_phi2) {
        for (double p2 : grid.phi2) configs.push_back({2, r1, r2, p1, p2, t});
      } else {
        configs.push_back({2, r1, r2, p1, p1 + std::numbers::pi / 2.0, t});
      }
    }
  for (const auto& c : configs) c.validate();

  std::vector<ConfigCurve> curves(configs.size());
  parallel_for(configs.size(), [&](std::size_t i) {
    curves[i] = {configs[i], boundary_for_config(configs[i], grid.w_ratio, options)};
  });
  return NumericEnvelope(r1, r2, std::move(curves), options, refine);
}

std::vector<RegionSample> closed_form_region(double r1, double r2, int n_points) {
  if (n_points < 2) throw InvalidArgument("need at least two points");
  if (r1 > r2) std::swap(r1, r2);
  const double e1 = std::exp(-2.0 * r1), e2 = std::exp(-2.0 * r2), g = std::exp(-r1 - r2);
  const double s = std::exp(-r1) + std::exp(-r2);
  const double skew = std::exp(r2 - r1);

  std::vector<RegionSample> out;
  for (double v_x : log_space(1.001 * e2, 10.0 * std::exp(2.0 * r2), n_points)) {
    const auto p = two_mode_envelope(v_x, r1, r2);
    RegionSample row;
    row.v_x = p.v_x;
    row.v_y = p.v_y;
    row.source = SampleSource::closed_form;
    row.segment = to_string(p.segment);
    switch (p.segment) {
      case Segment::high: {
        const double rho = g / (v_x - e1);  // sqrt(w_x / w_y)
        row.w_ratio = rho * rho;
        row.t = 1.0 / (1.0 + skew * rho);
        row.phi1 = 0.0;
        break;
      }
      case Segment::low: {
        const double rho = (v_x - e2) / g;  // sqrt(w_y / w_x)
        row.w_ratio = 1.0 / (rho * rho);
        row.t = 1.0 / (1.0 + skew * rho);
        row.phi1 = std::numbers::pi / 2.0;
        break;
      }
      case Segment::middle: {
        row.w_ratio = 1.0;
        row.t = 1.0 / (1.0 + skew);
        const double c = e1 == e2 ? 1.0 : std::clamp((2.0 * v_x - s * s) / (e1 - e2), -1.0, 1.0);
        row.phi1 = 0.5 * std::acos(c);
        break;
      }
    }
    out.push_back(row);
  }
  return out;
}

std::vector<RegionSample> single_mode_region(double r, double phi, int n_points) {
  if (n_points < 2) throw InvalidArgument("need at least two points");
  const auto [va, vb] = projected_variances(r, phi);
  std::vector<RegionSample> out;
  // offsets v_x - v_a from 1e-2 to 1e2, i.e. weight ratios 1e4 .. 1e-4
  for (double delta : log_space(1e-2, 1e2, n_points)) {
    RegionSample row;
    row.v_x = va + delta;
    row.v_y = single_mode_tradeoff(row.v_x, r, phi);
    row.phi1 = phi;
    row.w_ratio = 1.0 / (delta * delta);
    row.source = SampleSource::closed_form;
    row.segment = "single";
    out.push_back(row);
  }
  return out;
}

SqlCheck sql_feasible(double r1, double r2) {
  const auto cor = scalar_corollaries(r1, r2);
  const double s = std::exp(-std::min(r1, r2)) + std::exp(-std::max(r1, r2));
  const double v = 0.5 * s * s;
  SqlCheck out;
  out.balanced_point = {v, v};
  out.feasible = v < 1.0;
  if (out.feasible) out.witness = std::pair{v, v};
  out.resource_product = cor.resource_product;
  out.product_criterion = cor.sql_feasible;
  return out;
}

}  // namespace qbound
