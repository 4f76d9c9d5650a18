#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <utility>

#include "qbound/holevo.hpp"
#include "qbound/scheme.hpp"

namespace qbound {

std::string to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::example1: return "example1";
    case SchemeKind::balanced: return "balanced";
    case SchemeKind::general: return "general";
  }
  return "general";
}

SchemeKind scheme_kind_from_string(const std::string& name) {
  if (name == "example1") return SchemeKind::example1;
  if (name == "balanced") return SchemeKind::balanced;
  if (name == "general") return SchemeKind::general;
  throw InvalidArgument("unknown scheme '" + name + "'");
}

Eigen::Matrix<double, 2, 4> MeasurementScheme::measured_functionals() const {
  // Homodyne at angle a on output mode k measures cos(a) X'_k + sin(a) Y'_k
  // with R' = S R, so the functional is u(a)^T S[2k:2k+2, :].
  Eigen::Matrix<double, 2, 4> f;
  const auto& s = disentangler.matrix();
  for (int k = 0; k < 2; ++k) {
    const Eigen::RowVector2d u(std::cos(angles[k]), std::sin(angles[k]));
    f.row(k) = u * s.block(2 * k, 0, 2, 4);
  }
  return f;
}

Eigen::Vector2d MeasurementScheme::variances_for(const Eigen::MatrixXd& cov) const {
  if (cov.rows() != 4 || cov.cols() != 4) throw InvalidArgument("scheme needs a two-mode covariance");
  const Eigen::Matrix<double, 2, 4> g = estimator_functionals();
  const Eigen::Matrix2d c = g * cov * g.transpose();
  return c.diagonal();
}

namespace {

using Complex = std::complex<double>;

Eigen::Vector2cd complexify(const Eigen::VectorXd& v) { return {Complex(v(0), v(1)), Complex(v(2), v(3))}; }

double wrap_angle(double a) {
  a = std::fmod(a, std::numbers::pi);
  return a < 0.0 ? a + std::numbers::pi : a;
}

}  // namespace

MeasurementExtraction extract_measurement(const BoundResult& result, const Eigen::MatrixXd& cov, const Weights& w) {
  if (!result.converged) throw NotConverged("extract_measurement needs a converged bound");
  if (result.duals.n_modes() == 1)
    return {std::nullopt, "single-mode probe: conjugate quadratures of one mode cannot be measured jointly"};
  if (cov.rows() != 4) throw InvalidArgument("covariance does not match the duals");

  const double im = commutator_term(result.duals);
  if (std::abs(im) > 1e-8)
    return {std::nullopt, "no product-homodyne certificate: optimal duals do not commute"};

  // The commuting duals span a Lagrangian plane L. In complex coordinates
  // z = (X1 + i Y1, X2 + i Y2) it is spanned by rows of a real orthogonal B
  // times phases e^{i a_k}; A = Z conj(Z)^{-1} = B^T diag(e^{2i a_k}) B is
  // independent of the basis, and B^T diagonalizes it.
  Eigen::Matrix2cd z;
  z.col(0) = complexify(result.duals.c_x);
  z.col(1) = complexify(result.duals.c_y);
  const Eigen::Matrix2cd zc = z.conjugate();
  if (std::abs(zc.determinant()) < 1e-12) return {std::nullopt, "degenerate dual pair"};
  const Eigen::Matrix2cd a = z * zc.inverse();

  Eigen::Matrix2d o;
  Eigen::Vector2cd diag;
  bool found = false;
  for (double kappa : {0.7, 1.9, 0.0, 1.5707963267948966}) {
    const Eigen::Matrix2d m = std::cos(kappa) * a.real() + std::sin(kappa) * a.imag();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m);
    o = es.eigenvectors();
    const Eigen::Matrix2cd d = o.transpose().cast<Complex>() * a * o.cast<Complex>();
    if (std::abs(d(0, 1)) < 1e-8 && std::abs(d(1, 0)) < 1e-8) {
      diag = d.diagonal();
      found = true;
      break;
    }
  }
  if (!found) return {std::nullopt, "could not diagonalize the dual plane"};

  Eigen::Matrix2d b = o.transpose();
  std::array<double, 2> angles{0.5 * std::arg(diag(0)), 0.5 * std::arg(diag(1))};

  // Bring B to the inverse-mixer form [[c, -s], [s, c]] with c, s >= 0.
  // Negating a row flips the sign of that homodyne outcome only.
  if (b.determinant() < 0.0) b.row(1) *= -1.0;
  if (b(0, 0) < 0.0) b *= -1.0;
  if (b(0, 1) > 0.0) {
    b.row(0).swap(b.row(1));
    std::swap(angles[0], angles[1]);
    b.row(0) *= -1.0;
  }
  const double unmix_t = std::clamp(b(1, 0) * b(1, 0), 0.0, 1.0);

  MeasurementScheme scheme;
  scheme.kind = SchemeKind::general;
  scheme.unmix_t = unmix_t;
  scheme.disentangler = probe_unmixer(unmix_t);
  scheme.angles = {wrap_angle(angles[0]), wrap_angle(angles[1])};

  const Eigen::Matrix<double, 2, 4> f = scheme.measured_functionals();
  // Displacing mode 1 by theta shifts the outcomes by mode1 * theta.
  const Eigen::Matrix2d mode1 = f.leftCols<2>();
  if (std::abs(mode1.determinant()) < 1e-12)
    return {std::nullopt, "measured quadratures carry no independent mode-1 information"};
  scheme.estimator = mode1.inverse();

  Eigen::Matrix<double, 2, 4> target;
  target.row(0) = result.duals.c_x.transpose();
  target.row(1) = result.duals.c_y.transpose();
  if ((scheme.estimator_functionals() - target).cwiseAbs().maxCoeff() > 1e-7)
    return {std::nullopt, "dual plane is not reachable by a beam splitter and two homodynes"};

  scheme.predicted_variances = scheme.variances_for(cov);
  const double predicted = w.w_x * scheme.predicted_variances(0) + w.w_y * scheme.predicted_variances(1);
  if (std::abs(predicted - result.f_hcr) > 1e-6 * std::max(1.0, result.f_hcr))
    return {std::nullopt, "product-homodyne variances do not reach the bound"};
  return {scheme, "product dual-homodyne certificate"};
}

}  // namespace qbound
