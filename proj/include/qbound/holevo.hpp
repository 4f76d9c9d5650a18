#pragma once

// Holevo Cramer-Rao bound for estimating the displacement (theta_x, theta_y)
// of mode 1 with a zero-mean Gaussian probe.
//
// The dual observables are restricted to linear combinations of quadratures,
// X_j = c_j . R. Local unbiasedness fixes the mode-1 part of each vector:
//   c_x = (1, 0, a, b),  c_y = (0, 1, c, d)
// and Z_jk = c_j^T (cov + i Omega) c_k, so the objective is
//   h = w_x c_x^T cov c_x + w_y c_y^T cov c_y + 2 sqrt(w_x w_y) |c_x^T Omega c_y|.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "qbound/error.hpp"
#include "qbound/gaussian.hpp"
#include "qbound/scheme.hpp"

namespace qbound {

struct Weights {
  double w_x = 1.0;
  double w_y = 1.0;

  Weights() = default;
  Weights(double wx, double wy) : w_x(wx), w_y(wy) {
    if (!std::isfinite(wx) || !std::isfinite(wy) || wx < 0.0 || wy < 0.0 || wx + wy <= 0.0)
      throw InvalidArgument("weights must be finite, non-negative and not both zero");
  }

  Weights scaled(double c) const { return {c * w_x, c * w_y}; }
  Weights swapped() const { return {w_y, w_x}; }
  double coupling() const { return std::sqrt(w_x * w_y); }
};

template <typename Scalar = double>
struct DualCoefficients {
  Vector<Scalar> c_x;
  Vector<Scalar> c_y;

  int n_modes() const { return static_cast<int>(c_x.size() / 2); }

  /// Mode-2 entries (a, b, c, d); empty for a single mode.
  Vector<Scalar> free_parameters() const {
    if (n_modes() == 1) return Vector<Scalar>(0);
    Vector<Scalar> u(4);
    u << c_x(2), c_x(3), c_y(2), c_y(3);
    return u;
  }
};

/// Number of free real parameters left by the unbiasedness constraints.
inline int free_parameter_count(int n_modes) {
  detail::require_modes(n_modes);
  return n_modes == 1 ? 0 : 4;
}

/// Locally unbiased duals: c_x = (1, 0, a, b), c_y = (0, 1, c, d).
template <typename Scalar = double>
DualCoefficients<Scalar> unbiased_duals(int n_modes, const Vector<Scalar>& free = Vector<Scalar>()) {
  detail::require_modes(n_modes);
  const int nfree = free_parameter_count(n_modes);
  if (free.size() != 0 && free.size() != nfree) throw InvalidArgument("wrong number of free dual parameters");
  DualCoefficients<Scalar> d{Vector<Scalar>::Zero(2 * n_modes), Vector<Scalar>::Zero(2 * n_modes)};
  d.c_x(0) = Scalar(1);
  d.c_y(1) = Scalar(1);
  if (n_modes == 2 && free.size() == 4) {
    d.c_x(2) = free(0);
    d.c_x(3) = free(1);
    d.c_y(2) = free(2);
    d.c_y(3) = free(3);
  }
  return d;
}

/// c_x^T Omega c_y, i.e. Im Z_xy.
template <typename Scalar>
Scalar commutator_term(const DualCoefficients<Scalar>& d) {
  const auto omega = symplectic_form<Scalar>(d.n_modes());
  return d.c_x.dot(omega * d.c_y);
}

/// h_theta evaluated at the given duals.
template <typename Scalar>
Scalar objective(const Matrix<Scalar>& cov, const Weights& w, const DualCoefficients<Scalar>& d) {
  using std::abs;
  using std::sqrt;
  if (cov.rows() != d.c_x.size() || cov.cols() != d.c_x.size() || d.c_y.size() != d.c_x.size())
    throw InvalidArgument("covariance and dual dimensions disagree");
  const Scalar wx(w.w_x), wy(w.w_y);
  return wx * d.c_x.dot(cov * d.c_x) + wy * d.c_y.dot(cov * d.c_y) +
         Scalar(2) * sqrt(wx * wy) * abs(commutator_term(d));
}

struct BoundResult {
  double f_hcr = 0.0;
  DualCoefficients<double> duals;
  Eigen::Matrix2d z_real = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d z_imag = Eigen::Matrix2d::Zero();
  bool converged = false;
  int iterations = 0;
  /// Saddle multiplier in [-1, 1] attached to the commutator term.
  double multiplier = 0.0;
  std::string method;
};

struct SolveOptions {
  /// Nelder-Mead polish runs after the saddle-point solve; 0 skips the polish.
  int restarts = 8;
  std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
  /// Absolute objective change that ends a polish run.
  double tolerance = 1e-12;
  int max_evaluations = 4000;
};

/// Closed single-mode bound w_x cov_11 + w_y cov_22 + 2 sqrt(w_x w_y).
BoundResult single_mode_closed(const Eigen::MatrixXd& cov, const Weights& w);

/// Minimizes h_theta over the unbiased linear duals.
BoundResult solve(const Eigen::MatrixXd& cov, const Weights& w, const SolveOptions& options = {});

/// Fills z_real/z_imag/f_hcr of `result` from its duals.
void evaluate_at(BoundResult& result, const Eigen::MatrixXd& cov, const Weights& w);

/// Optimal (v_x, v_y) for the weights, i.e. the gradient of f_hcr with respect
/// to (w_x, w_y), from the envelope theorem at the reported duals. A component
/// whose weight is zero is +inf unless the commutator term vanishes.
Eigen::Vector2d tangency_point(const BoundResult& result, const Weights& w);

struct MeasurementExtraction {
  std::optional<MeasurementScheme> scheme;
  std::string diagnostic;
};

/// Turns optimal duals into a product dual-homodyne measurement when their
/// commutator vanishes (then both duals can be measured jointly); otherwise
/// reports that no product-homodyne certificate exists.
MeasurementExtraction extract_measurement(const BoundResult& result, const Eigen::MatrixXd& cov,
                                          const Weights& w);

}  // namespace qbound
