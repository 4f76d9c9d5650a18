#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>

#include "qbound/gaussian.hpp"

namespace qbound {

enum class SchemeKind { example1, balanced, general };

std::string to_string(SchemeKind kind);
SchemeKind scheme_kind_from_string(const std::string& name);

/// Dual-homodyne measurement: a passive disentangling transform, one homodyne
/// angle per output mode, and a linear estimator mapping outcomes (M1, M2) to
/// (theta_x_hat, theta_y_hat).
struct MeasurementScheme {
  SchemeKind kind = SchemeKind::general;
  SymplecticTransform<double> disentangler = SymplecticTransform<double>::identity(2);
  /// Transmissivity t of the probe mixer this transform undoes.
  double unmix_t = 0.0;
  std::array<double, 2> angles{0.0, 0.0};
  Eigen::Matrix2d estimator = Eigen::Matrix2d::Identity();
  /// Estimator variances predicted from the probe covariance.
  Eigen::Vector2d predicted_variances = Eigen::Vector2d::Zero();
  /// Probe this scheme was designed for.
  ProbeConfig<double> probe{};

  /// Rows are the quadrature functionals, in (X1, Y1, X2, Y2) coordinates of
  /// the probe, that the two homodyne detectors measure.
  Eigen::Matrix<double, 2, 4> measured_functionals() const;

  /// Functionals of the two estimators: estimator * measured_functionals().
  Eigen::Matrix<double, 2, 4> estimator_functionals() const { return estimator * measured_functionals(); }

  /// Variances of the estimators on a probe with covariance `cov` (4x4).
  Eigen::Vector2d variances_for(const Eigen::MatrixXd& cov) const;
};

}  // namespace qbound
