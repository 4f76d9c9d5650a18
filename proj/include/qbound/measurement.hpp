#pragma once

// Monte-Carlo simulation of dual-homodyne schemes on displaced probes.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "qbound/error.hpp"
#include "qbound/gaussian.hpp"
#include "qbound/holevo.hpp"
#include "qbound/scheme.hpp"

namespace qbound {

/// Mean and covariance of the homodyne outcomes (M1, M2) measured at `angles`
/// on the two modes of `state`.
struct HomodyneDistribution {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
  /// Lower Cholesky factor of cov.
  Eigen::Matrix2d chol = Eigen::Matrix2d::Identity();
};

HomodyneDistribution homodyne_distribution(const GaussianState<double>& state, const std::array<double, 2>& angles);

/// One joint draw of the two commuting homodyne outcomes.
template <typename Rng>
Eigen::Vector2d homodyne_joint_sample(const HomodyneDistribution& dist, Rng& rng) {
  std::normal_distribution<double> normal;
  const double z0 = normal(rng);
  const double z1 = normal(rng);
  return dist.mean + dist.chol * Eigen::Vector2d(z0, z1);
}

template <typename Rng>
Eigen::Vector2d homodyne_joint_sample(const GaussianState<double>& state, const std::array<double, 2>& angles,
                                      Rng& rng) {
  return homodyne_joint_sample(homodyne_distribution(state, angles), rng);
}

struct SchemeParams {
  double r1 = 0.0;
  double r2 = 0.0;
  double phi1 = 0.0;
  double phi2 = 0.0;
  /// Transmissivity; example1 and general use it, balanced derives t* from the
  /// weights.
  double t = 0.5;
  Weights weights{};
};

/// example1: vacuum in mode 1, squeezed (r2, phi2) in mode 2, mixed at t;
///   homodyne angles (phi2 + pi/2, phi2) after unmixing.
/// balanced: equal squeezing r1 (r2 is ignored), phi = (0, pi/2),
///   t = t*(W); X on mode 1, Y on mode 2.
/// general: the certificate extracted from the optimal duals of the probe
///   (r1, r2, phi1, phi2, t); throws Infeasible when none exists.
/// A transmissivity of 0 or 1 leaves an estimator undefined and throws
/// Infeasible.
MeasurementScheme build_scheme(SchemeKind kind, const SchemeParams& params);

struct SimulationReport {
  std::string scheme;
  std::uint64_t shots = 0;
  std::uint64_t seed = 0;
  ChannelParams<double> theta{};
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Vector2d variance = Eigen::Vector2d::Zero();
  /// Sample covariance of the two estimators.
  double covariance = 0.0;
  /// Standard errors of the means and of the variances.
  Eigen::Vector2d mean_se = Eigen::Vector2d::Zero();
  Eigen::Vector2d variance_se = Eigen::Vector2d::Zero();
  Eigen::Vector2d target_variance = Eigen::Vector2d::Zero();
};

inline constexpr std::uint64_t kMinShots = 100;

/// Builds the probe, displaces mode 1 by theta, applies the scheme and draws
/// `shots` joint outcomes. Shots are split into fixed-size chunks, each with
/// its own generator seeded from (seed, chunk index), and the per-chunk
/// moments are merged in chunk order, so the report depends only on the seed.
SimulationReport run_scheme(const MeasurementScheme& scheme, const ProbeConfig<double>& probe,
                            const ChannelParams<double>& theta, std::uint64_t shots, std::uint64_t seed);

struct Verdict {
  bool pass = false;
  /// Empirical w_x v_x + w_y v_y and its standard error.
  double weighted_sum = 0.0;
  double standard_error = 0.0;
  double bound = 0.0;
  /// Signed distance from the bound in standard errors.
  double z_score = 0.0;
  std::string message;
};

/// Fails when the weighted sum is more than 5 SE below the bound, or, for an
/// optimal scheme, more than 5 SE above it.
Verdict compare_to_bound(const SimulationReport& report, double bound, const Weights& w, bool expect_optimal);

/// |mean - theta| <= 5 SE in each component.
bool unbiased(const SimulationReport& report);

}  // namespace qbound
