#pragma once

// Gaussian states of one or two optical modes in quadrature representation.
//
// Conventions: [X, Y] = 2i, so the vacuum covariance is the identity and a
// squeezed quadrature has variance e^{-2r}. Quadratures are ordered
// (X1, Y1, X2, Y2) and the symplectic form is block-diagonal with blocks
// [[0, 1], [-1, 0]].

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "qbound/error.hpp"

namespace qbound {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr double kSymmetryTolerance = 1e-10;
inline constexpr double kSymplecticTolerance = 1e-10;
inline constexpr double kPhysicalityFloor = -1e-9;
inline constexpr double kPurityTolerance = 1e-9;

namespace detail {
inline void require_modes(int n_modes) {
  if (n_modes != 1 && n_modes != 2)
    throw InvalidArgument("only 1- and 2-mode states are supported, got " +
                          std::to_string(n_modes));
}
}  // namespace detail

template <typename Scalar = double>
Matrix<Scalar> symplectic_form(int n_modes) {
  detail::require_modes(n_modes);
  Matrix<Scalar> omega = Matrix<Scalar>::Zero(2 * n_modes, 2 * n_modes);
  for (int k = 0; k < n_modes; ++k) {
    omega(2 * k, 2 * k + 1) = Scalar(1);
    omega(2 * k + 1, 2 * k) = Scalar(-1);
  }
  return omega;
}

/// Converts squeezing quoted in dB to the squeezing parameter r, using
/// dB = -10 log10(e^{-2r}).
template <typename Scalar = double>
Scalar squeezing_from_db(Scalar db) {
  using std::log;
  return db * log(Scalar(10)) / Scalar(20);
}

template <typename Scalar = double>
Scalar squeezing_to_db(Scalar r) {
  using std::log;
  return Scalar(20) * r / log(Scalar(10));
}

template <typename Scalar = double>
class GaussianState {
 public:
  GaussianState(Vector<Scalar> mean, Matrix<Scalar> cov)
      : mean_(std::move(mean)), cov_(std::move(cov)) {
    const auto dim = cov_.rows();
    if (dim % 2 != 0 || cov_.cols() != dim || mean_.size() != dim)
      throw InvalidArgument("mean/covariance dimensions disagree");
    detail::require_modes(static_cast<int>(dim / 2));
    using std::abs;
    if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > Scalar(kSymmetryTolerance))
      throw InvalidArgument("covariance matrix is not symmetric");
  }

  static GaussianState vacuum(int n_modes) {
    detail::require_modes(n_modes);
    return {Vector<Scalar>::Zero(2 * n_modes),
            Matrix<Scalar>::Identity(2 * n_modes, 2 * n_modes)};
  }

  int n_modes() const { return static_cast<int>(cov_.rows() / 2); }
  const Vector<Scalar>& mean() const { return mean_; }
  const Matrix<Scalar>& cov() const { return cov_; }

  /// Reduced 2x2 covariance of one mode.
  Eigen::Matrix<Scalar, 2, 2> marginal_cov(int mode) const {
    if (mode < 0 || mode >= n_modes()) throw InvalidArgument("bad mode index");
    return cov_.template block<2, 2>(2 * mode, 2 * mode);
  }

 private:
  Vector<Scalar> mean_;
  Matrix<Scalar> cov_;
};

/// Linear quadrature map R -> S R with S Omega S^T = Omega.
template <typename Scalar = double>
class SymplecticTransform {
 public:
  explicit SymplecticTransform(Matrix<Scalar> matrix) : matrix_(std::move(matrix)) {
    if (matrix_.rows() != matrix_.cols() || matrix_.rows() % 2 != 0)
      throw InvalidArgument("symplectic matrix must be square of even size");
    detail::require_modes(static_cast<int>(matrix_.rows() / 2));
    if (symplectic_defect() > Scalar(kSymplecticTolerance))
      throw InvalidArgument("matrix does not preserve the symplectic form");
  }

  static SymplecticTransform identity(int n_modes) {
    detail::require_modes(n_modes);
    return SymplecticTransform(Matrix<Scalar>::Identity(2 * n_modes, 2 * n_modes));
  }

  int n_modes() const { return static_cast<int>(matrix_.rows() / 2); }
  const Matrix<Scalar>& matrix() const { return matrix_; }

  /// max |S Omega S^T - Omega|
  Scalar symplectic_defect() const {
    const auto omega = symplectic_form<Scalar>(n_modes());
    return (matrix_ * omega * matrix_.transpose() - omega).cwiseAbs().maxCoeff();
  }

  SymplecticTransform inverse() const {
    // S^{-1} = -Omega S^T Omega for symplectic S.
    const auto omega = symplectic_form<Scalar>(n_modes());
    return SymplecticTransform(Matrix<Scalar>(-omega * matrix_.transpose() * omega));
  }

  friend SymplecticTransform operator*(const SymplecticTransform& a,
                                       const SymplecticTransform& b) {
    if (a.n_modes() != b.n_modes()) throw InvalidArgument("mode count mismatch");
    return SymplecticTransform(Matrix<Scalar>(a.matrix_ * b.matrix_));
  }

 private:
  Matrix<Scalar> matrix_;
};

template <typename Scalar = double>
Eigen::Matrix<Scalar, 2, 2> rotation_block(Scalar phi) {
  using std::cos;
  using std::sin;
  Eigen::Matrix<Scalar, 2, 2> r;
  r << cos(phi), -sin(phi), sin(phi), cos(phi);
  return r;
}

/// Phase rotation by phi on `target_mode`, identity elsewhere.
template <typename Scalar = double>
SymplecticTransform<Scalar> rotation(Scalar phi, int n_modes = 1, int target_mode = 0) {
  detail::require_modes(n_modes);
  if (target_mode < 0 || target_mode >= n_modes)
    throw InvalidArgument("rotation target mode out of range");
  Matrix<Scalar> s = Matrix<Scalar>::Identity(2 * n_modes, 2 * n_modes);
  s.template block<2, 2>(2 * target_mode, 2 * target_mode) = rotation_block(phi);
  return SymplecticTransform<Scalar>(std::move(s));
}

/// Real beam splitter of transmissivity t: mode 1 out = sqrt(t) m1 + sqrt(1-t) m2,
/// mode 2 out = -sqrt(1-t) m1 + sqrt(t) m2, identically on X and Y.
template <typename Scalar = double>
SymplecticTransform<Scalar> beam_splitter(Scalar t) {
  using std::isfinite;
  using std::sqrt;
  if (!(t >= Scalar(0) && t <= Scalar(1)))
    throw InvalidArgument("beam-splitter transmissivity must lie in [0, 1]");
  const Scalar a = sqrt(t);
  const Scalar b = sqrt(Scalar(1) - t);
  Matrix<Scalar> s = Matrix<Scalar>::Zero(4, 4);
  for (int q = 0; q < 2; ++q) {
    s(q, q) = a;
    s(q, 2 + q) = b;
    s(2 + q, q) = -b;
    s(2 + q, 2 + q) = a;
  }
  return SymplecticTransform<Scalar>(std::move(s));
}

/// Vacuum squeezed to variance e^{-2r} along X, then rotated by phi.
template <typename Scalar = double>
GaussianState<Scalar> make_squeezed(Scalar r, Scalar phi = Scalar(0)) {
  using std::exp;
  using std::isfinite;
  if (!isfinite(r) || r < Scalar(0))
    throw InvalidArgument("squeezing parameter must be finite and non-negative");
  if (!isfinite(phi)) throw InvalidArgument("rotation angle must be finite");
  const auto rot = rotation_block(phi);
  Eigen::Matrix<Scalar, 2, 2> d = Eigen::Matrix<Scalar, 2, 2>::Zero();
  d(0, 0) = exp(-Scalar(2) * r);
  d(1, 1) = exp(Scalar(2) * r);
  Matrix<Scalar> cov = rot * d * rot.transpose();
  cov = Scalar(0.5) * (cov + cov.transpose()).eval();
  return {Vector<Scalar>::Zero(2), std::move(cov)};
}

template <typename Scalar>
GaussianState<Scalar> tensor(const GaussianState<Scalar>& a, const GaussianState<Scalar>& b) {
  const auto da = a.cov().rows();
  const auto db = b.cov().rows();
  Vector<Scalar> mean(da + db);
  mean << a.mean(), b.mean();
  Matrix<Scalar> cov = Matrix<Scalar>::Zero(da + db, da + db);
  cov.topLeftCorner(da, da) = a.cov();
  cov.bottomRightCorner(db, db) = b.cov();
  return {std::move(mean), std::move(cov)};
}

template <typename Scalar>
GaussianState<Scalar> apply(const SymplecticTransform<Scalar>& s, const GaussianState<Scalar>& state) {
  if (s.n_modes() != state.n_modes())
    throw InvalidArgument("transform and state have different mode counts");
  const auto& m = s.matrix();
  Matrix<Scalar> cov = m * state.cov() * m.transpose();
  cov = Scalar(0.5) * (cov + cov.transpose()).eval();
  return {Vector<Scalar>(m * state.mean()), std::move(cov)};
}

template <typename Scalar = double>
struct ChannelParams {
  Scalar theta_x{0};
  Scalar theta_y{0};
};

/// Displacement channel acting on mode 1: (X1, Y1) means shift by (theta_x, theta_y).
template <typename Scalar>
GaussianState<Scalar> displace(const GaussianState<Scalar>& state, const ChannelParams<Scalar>& theta) {
  Vector<Scalar> mean = state.mean();
  mean(0) += theta.theta_x;
  mean(1) += theta.theta_y;
  return {std::move(mean), state.cov()};
}

/// Resource description: squeezings r1, r2, rotations phi1, phi2 and the
/// transmissivity t of the mixing beam splitter. The probed mode (mode 1 after
/// mixing) is sqrt(1-t) * mode1 + sqrt(t) * mode2, so t is the fraction of the
/// second squeezed state sent through the channel.
template <typename Scalar = double>
struct ProbeConfig {
  int n_modes = 2;
  Scalar r1{0};
  Scalar r2{0};
  Scalar phi1{0};
  Scalar phi2{0};
  Scalar t{Scalar(0.5)};

  static ProbeConfig single(Scalar r, Scalar phi) { return {1, r, Scalar(0), phi, Scalar(0), Scalar(1)}; }

  void validate() const {
    using std::isfinite;
    detail::require_modes(n_modes);
    if (!isfinite(r1) || r1 < Scalar(0) || !isfinite(r2) || r2 < Scalar(0))
      throw InvalidArgument("squeezing parameters must be finite and non-negative");
    if (!isfinite(phi1) || !isfinite(phi2)) throw InvalidArgument("angles must be finite");
    if (n_modes == 2 && !(t >= Scalar(0) && t <= Scalar(1)))
      throw InvalidArgument("transmissivity must lie in [0, 1]");
  }

  /// True when r1 <= r2.
  bool canonical() const { return n_modes == 1 || r1 <= r2; }

  /// Exchanges the two input modes (t -> 1-t) so that r1 <= r2. The probed
  /// mode is unchanged; the ancilla picks up a sign, which no bound sees.
  ProbeConfig canonicalized() const {
    if (canonical()) return *this;
    return {n_modes, r2, r1, phi2, phi1, Scalar(1) - t};
  }
};

/// Squeezed inputs, rotated, then mixed. A one-mode config is just the
/// rotated squeezed state (r1, phi1).
template <typename Scalar>
GaussianState<Scalar> build_probe(const ProbeConfig<Scalar>& config) {
  config.validate();
  if (config.n_modes == 1) return make_squeezed(config.r1, config.phi1);
  const auto inputs = tensor(make_squeezed(config.r1, config.phi1), make_squeezed(config.r2, config.phi2));
  return apply(beam_splitter(Scalar(1) - config.t), inputs);
}

/// Inverse of the probe mixer: maps the probe back to the two squeezed inputs.
template <typename Scalar = double>
SymplecticTransform<Scalar> probe_unmixer(Scalar t) {
  return SymplecticTransform<Scalar>(Matrix<Scalar>(beam_splitter(Scalar(1) - t).matrix().transpose()));
}

template <typename Scalar = double>
struct StateDiagnostics {
  Scalar symmetry_defect{0};
  /// Smallest eigenvalue of cov + i Omega; negative means unphysical.
  Scalar min_eigenvalue{0};
  std::vector<Scalar> symplectic_eigenvalues;
  bool physical = false;
  bool pure = false;
};

template <typename Scalar>
StateDiagnostics<Scalar> validate(const GaussianState<Scalar>& state) {
  using Complex = std::complex<Scalar>;
  using ComplexMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
  StateDiagnostics<Scalar> out;
  const auto& cov = state.cov();
  const auto omega = symplectic_form<Scalar>(state.n_modes());
  out.symmetry_defect = (cov - cov.transpose()).cwiseAbs().maxCoeff();

  ComplexMatrix h = cov.template cast<Complex>() + Complex(0, 1) * omega.template cast<Complex>();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> herm(h, Eigen::EigenvaluesOnly);
  out.min_eigenvalue = herm.eigenvalues().minCoeff();

  // Eigenvalues of Omega*cov come in pairs +-i nu.
  Eigen::EigenSolver<Matrix<Scalar>> es(Matrix<Scalar>(omega * cov), false);
  std::vector<Scalar> nus;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) nus.push_back(std::abs(es.eigenvalues()(i)));
  std::sort(nus.begin(), nus.end());
  for (std::size_t i = 0; i < nus.size(); i += 2) out.symplectic_eigenvalues.push_back((nus[i] + nus[i + 1]) / 2);

  out.physical = out.symmetry_defect <= Scalar(kSymmetryTolerance) && out.min_eigenvalue >= Scalar(kPhysicalityFloor);
  out.pure = out.physical && std::all_of(out.symplectic_eigenvalues.begin(), out.symplectic_eigenvalues.end(),
                                         [](Scalar nu) { return std::abs(nu - Scalar(1)) <= Scalar(kPurityTolerance); });
  return out;
}

}  // namespace qbound
