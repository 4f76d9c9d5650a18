#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "qbound/closed_forms.hpp"
#include "qbound/measurement.hpp"
#include "qbound/parallel.hpp"

namespace qbound {

namespace {

constexpr std::uint64_t kChunk = 1u << 16;
constexpr double kBand = 5.0;

void require_open_t(double t) {
  if (!(t > 0.0 && t < 1.0)) throw Infeasible("estimator needs 0 < t < 1");
}

// Running moments of the estimator pair.
struct Moments {
  double n = 0.0;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d comoment = Eigen::Matrix2d::Zero();

  void push(const Eigen::Vector2d& x) {
    n += 1.0;
    const Eigen::Vector2d d = x - mean;
    mean += d / n;
    comoment += d * (x - mean).transpose();
  }

  void merge(const Moments& o) {
    if (o.n == 0.0) return;
    const double total = n + o.n;
    const Eigen::Vector2d d = o.mean - mean;
    comoment += o.comoment + d * d.transpose() * (n * o.n / total);
    mean += d * (o.n / total);
    n = total;
  }
};

void check_unbiased(const MeasurementScheme& s) {
  const Eigen::Matrix2d response = s.estimator * s.measured_functionals().leftCols<2>();
  if ((response - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() > 1e-10)
    throw std::logic_error("scheme estimator is not locally unbiased");
}

}  // namespace

HomodyneDistribution homodyne_distribution(const GaussianState<double>& state, const std::array<double, 2>& angles) {
  if (state.n_modes() != 2) throw InvalidArgument("dual homodyne needs a two-mode state");
  if (!validate(state).physical) throw InvalidArgument("state is not physical");
  Eigen::Matrix<double, 2, 4> u = Eigen::Matrix<double, 2, 4>::Zero();
  for (int k = 0; k < 2; ++k) {
    u(k, 2 * k) = std::cos(angles[k]);
    u(k, 2 * k + 1) = std::sin(angles[k]);
  }
  HomodyneDistribution d;
  d.mean = u * state.mean();
  d.cov = u * state.cov() * u.transpose();
  d.cov(1, 0) = d.cov(0, 1);
  // Exact 2x2 Cholesky; a zero variance (infinitely squeezed) is allowed.
  const double l00 = std::sqrt(std::max(d.cov(0, 0), 0.0));
  const double l10 = l00 > 0.0 ? d.cov(1, 0) / l00 : 0.0;
  const double l11 = std::sqrt(std::max(d.cov(1, 1) - l10 * l10, 0.0));
  d.chol << l00, 0.0, l10, l11;
  return d;
}

MeasurementScheme build_scheme(SchemeKind kind, const SchemeParams& p) {
  MeasurementScheme s;
  s.kind = kind;
  switch (kind) {
    case SchemeKind::example1: {
      require_open_t(p.t);
      s.probe = {2, 0.0, p.r2, 0.0, p.phi2, p.t};
      s.unmix_t = p.t;
      s.disentangler = probe_unmixer(p.t);
      s.angles = {p.phi2 + std::numbers::pi / 2.0, p.phi2};
      const double a = 1.0 / std::sqrt(1.0 - p.t);
      const double b = 1.0 / std::sqrt(p.t);
      s.estimator << -std::sin(p.phi2) * a, std::cos(p.phi2) * b,  //
          std::cos(p.phi2) * a, std::sin(p.phi2) * b;
      break;
    }
    case SchemeKind::balanced: {
      const double t = balanced_transmissivity(p.weights);
      require_open_t(t);
      s.probe = {2, p.r1, p.r1, 0.0, std::numbers::pi / 2.0, t};
      s.unmix_t = t;
      s.disentangler = probe_unmixer(t);
      s.angles = {0.0, std::numbers::pi / 2.0};
      s.estimator << 1.0 / std::sqrt(1.0 - t), 0.0, 0.0, 1.0 / std::sqrt(t);
      break;
    }
    case SchemeKind::general: {
      const ProbeConfig<double> probe{2, p.r1, p.r2, p.phi1, p.phi2, p.t};
      const auto state = build_probe(probe);
      const auto bound = solve(state.cov(), p.weights);
      if (!bound.converged) throw NotConverged("bound did not converge");
      auto extracted = extract_measurement(bound, state.cov(), p.weights);
      if (!extracted.scheme) throw Infeasible(extracted.diagnostic);
      s = *extracted.scheme;
      s.probe = probe;
      break;
    }
  }
  check_unbiased(s);
  s.predicted_variances = s.variances_for(build_probe(s.probe).cov());
  return s;
}

SimulationReport run_scheme(const MeasurementScheme& scheme, const ProbeConfig<double>& probe,
                            const ChannelParams<double>& theta, std::uint64_t shots, std::uint64_t seed) {
  if (shots < kMinShots) throw InvalidArgument("need at least 100 shots");
  if (probe.n_modes != 2 || scheme.disentangler.n_modes() != 2)
    throw InvalidArgument("dual-homodyne schemes need a two-mode probe");
  if (!std::isfinite(theta.theta_x) || !std::isfinite(theta.theta_y)) throw InvalidArgument("theta must be finite");

  const auto state = apply(scheme.disentangler, displace(build_probe(probe), theta));
  const auto dist = homodyne_distribution(state, scheme.angles);
  const Eigen::Matrix2d estimator = scheme.estimator;

  const std::uint64_t chunks = (shots + kChunk - 1) / kChunk;
  std::vector<Moments> partial(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
    std::mt19937_64 rng(seq);
    const std::uint64_t begin = c * kChunk;
    const std::uint64_t count = std::min(kChunk, shots - begin);
    Moments m;
    for (std::uint64_t i = 0; i < count; ++i) m.push(estimator * homodyne_joint_sample(dist, rng));
    partial[c] = m;
  });
  Moments total;
  for (const auto& m : partial) total.merge(m);

  SimulationReport r;
  r.scheme = to_string(scheme.kind);
  r.shots = shots;
  r.seed = seed;
  r.theta = theta;
  r.mean = total.mean;
  const double n = total.n;
  const Eigen::Matrix2d c = total.comoment / (n - 1.0);
  r.variance = c.diagonal();
  r.covariance = c(0, 1);
  r.mean_se = (r.variance / n).cwiseSqrt();
  r.variance_se = r.variance * std::sqrt(2.0 / n);
  r.target_variance = scheme.predicted_variances;
  return r;
}

Verdict compare_to_bound(const SimulationReport& report, double bound, const Weights& w, bool expect_optimal) {
  Verdict v;
  v.bound = bound;
  const double vx = report.variance(0), vy = report.variance(1);
  v.weighted_sum = w.w_x * vx + w.w_y * vy;
  v.standard_error = std::sqrt(2.0 / static_cast<double>(report.shots)) *
                     std::sqrt(w.w_x * w.w_x * vx * vx + w.w_y * w.w_y * vy * vy +
                               2.0 * w.w_x * w.w_y * report.covariance * report.covariance);
  v.z_score = v.standard_error > 0.0 ? (v.weighted_sum - bound) / v.standard_error : 0.0;
  const bool below = v.weighted_sum < bound - kBand * v.standard_error;
  const bool above = v.weighted_sum > bound + kBand * v.standard_error;
  v.pass = !below && !(expect_optimal && above);
  if (below)
    v.message = "weighted sum is statistically below the bound";
  else if (expect_optimal && above)
    v.message = "optimal scheme does not reach the bound";
  else
    v.message = expect_optimal ? "weighted sum matches the bound" : "weighted sum respects the bound";
  return v;
}

bool unbiased(const SimulationReport& report) {
  const Eigen::Vector2d theta(report.theta.theta_x, report.theta.theta_y);
  return ((report.mean - theta).cwiseAbs().array() <= kBand * report.mean_se.array()).all();
}

}  // namespace qbound
