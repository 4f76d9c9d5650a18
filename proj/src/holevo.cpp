#include "qbound/holevo.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <array>
#include <limits>
#include <random>
#include <vector>

#include "nelder_mead.hpp"

namespace qbound {

namespace {

using Vector4 = Eigen::Vector4d;

// Two-mode objective written in the free coordinates u = (a, b, c, d):
//   q(u)    = w_x (A11 + 2 gx.p + p^T D p) + w_y (A22 + 2 gy.q + q^T D q)
//   beta(u) = 1 + p^T Om q
// where p = (a, b), q = (c, d), A/B/D are the blocks of cov and gx, gy the
// rows of the cross block B.
class TwoModeProblem {
 public:
  TwoModeProblem(const Eigen::MatrixXd& cov, const Weights& w)
      : cov_(cov), wx_(w.w_x), wy_(w.w_y), k_(w.coupling()) {
    d_ = cov.block<2, 2>(2, 2);
    const Eigen::Matrix2d b = cov.block<2, 2>(0, 2);
    gx_ = b.row(0).transpose();
    gy_ = b.row(1).transpose();
    om_ << 0.0, 1.0, -1.0, 0.0;
  }

  DualCoefficients<double> duals(const Vector4& u) const { return unbiased_duals<double>(2, u); }

  double beta(const Vector4& u) const { return 1.0 + u.head<2>().dot(om_ * u.tail<2>()); }

  double value(const Vector4& u) const { return objective<double>(cov_, Weights(wx_, wy_), duals(u)); }

  // Minimizer of q(u) + 2 k mu beta(u). Positive definite for |mu| < 1; at
  // the endpoints the Hessian may be singular, where the minimum-norm
  // minimizer is returned.
  Eigen::Matrix4d hessian(double mu) const {
    Eigen::Matrix4d h;
    h.block<2, 2>(0, 0) = wx_ * d_;
    h.block<2, 2>(0, 2) = k_ * mu * om_;
    h.block<2, 2>(2, 0) = k_ * mu * om_.transpose();
    h.block<2, 2>(2, 2) = wy_ * d_;
    return h;
  }

  Vector4 minimizer(double mu) const {
    const Eigen::Matrix4d h = hessian(mu);
    Vector4 rhs;
    rhs << -wx_ * gx_, -wy_ * gy_;
    if (std::abs(mu) < 1.0) {
      Eigen::LLT<Eigen::Matrix4d> llt(h);
      if (llt.info() == Eigen::Success) return llt.solve(rhs);
    }
    return h.completeOrthogonalDecomposition().solve(rhs);
  }

  // At mu = +-1 the Lagrangian is flat along the null space of its Hessian,
  // so every point u0 + N z with beta of unchanged sign is optimal too. Moves
  // to such a point with beta = 0 (commuting duals) when one exists.
  Vector4 commuting_on_face(const Vector4& u0, double mu) const {
    const Eigen::JacobiSVD<Eigen::Matrix4d> svd(hessian(mu), Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int rank = 0;
    while (rank < 4 && sv(rank) > 1e-10 * std::max(1.0, sv(0))) ++rank;
    if (rank == 4) return u0;
    const Eigen::MatrixXd n = svd.matrixV().rightCols(4 - rank);

    // beta(u0 + N z) = b0 + g.z + z^T M z
    Eigen::Matrix4d k = Eigen::Matrix4d::Zero();
    k.block<2, 2>(0, 2) = om_;
    k.block<2, 2>(2, 0) = om_.transpose();
    const double b0 = beta(u0);
    const Eigen::VectorXd g = n.transpose() * (k * u0);
    const Eigen::MatrixXd m = 0.5 * n.transpose() * k * n;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);

    std::vector<Eigen::VectorXd> directions;
    if (g.norm() > 0.0) directions.push_back(g.normalized());
    for (Eigen::Index i = 0; i < es.eigenvectors().cols(); ++i) directions.push_back(es.eigenvectors().col(i));

    const double base = value(u0);
    for (const auto& d : directions) {
      const double a = d.dot(m * d), b = g.dot(d);
      double step;
      if (std::abs(a) < 1e-14) {
        if (b == 0.0) continue;
        step = -b0 / b;
      } else {
        const double disc = b * b - 4.0 * a * b0;
        if (disc < 0.0) continue;
        const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
        const double s1 = q / a, s2 = q != 0.0 ? b0 / q : s1;
        step = std::abs(s1) < std::abs(s2) ? s1 : s2;
      }
      const Vector4 u = u0 + n * (step * d);
      if (std::abs(beta(u)) <= 1e-12 && value(u) <= base + 1e-12 * std::max(1.0, base)) return u;
    }
    return u0;
  }

  // Separate minimization of each variance; used when a weight vanishes.
  Vector4 decoupled_minimizer() const {
    const auto cod = d_.completeOrthogonalDecomposition();
    Vector4 u;
    u << -cod.solve(gx_), -cod.solve(gy_);
    return u;
  }

 private:
  Eigen::MatrixXd cov_;
  double wx_, wy_, k_;
  Eigen::Matrix2d d_;
  Eigen::Vector2d gx_, gy_;
  Eigen::Matrix2d om_;
};

struct SaddleResult {
  Vector4 u;
  double multiplier;
  int iterations;
  bool converged;
};

// The dual function g(mu) = min_u q + 2 k mu beta is concave with
// g'(mu) = 2 k beta(u*(mu)), so the optimal multiplier is the root of
// beta(u*(mu)) in (-1, 1), or an endpoint when beta keeps one sign.
SaddleResult saddle_point(const TwoModeProblem& problem) {
  constexpr double kEdge = 1e-9;
  auto beta_at = [&](double mu) { return problem.beta(problem.minimizer(mu)); };
  const double lo = -1.0 + kEdge;
  const double hi = 1.0 - kEdge;
  const double beta_lo = beta_at(lo);
  const double beta_hi = beta_at(hi);

  auto endpoint = [&](double sign) {
    const Vector4 exact = problem.minimizer(sign);
    const Vector4 near = problem.minimizer(sign * hi);
    Vector4 best = problem.value(exact) <= problem.value(near) ? exact : near;
    const Vector4 flat = problem.commuting_on_face(exact, sign);
    if (problem.value(flat) <= problem.value(best) + 1e-12 * std::max(1.0, problem.value(best))) best = flat;
    return SaddleResult{best, sign, 2, true};
  };
  if (beta_lo <= 0.0) return endpoint(-1.0);
  if (beta_hi >= 0.0) return endpoint(1.0);

  std::uintmax_t max_iter = 200;
  const auto bracket = boost::math::tools::toms748_solve(beta_at, lo, hi, beta_lo, beta_hi,
                                                         boost::math::tools::eps_tolerance<double>(), max_iter);
  const double mu = 0.5 * (bracket.first + bracket.second);
  return SaddleResult{problem.minimizer(mu), mu, static_cast<int>(max_iter) + 2, max_iter < 200};
}

void fill_from_duals(BoundResult& out, const Eigen::MatrixXd& cov, const Weights& w) {
  const auto& cx = out.duals.c_x;
  const auto& cy = out.duals.c_y;
  out.z_real << cx.dot(cov * cx), cx.dot(cov * cy), cy.dot(cov * cx), cy.dot(cov * cy);
  out.z_real = 0.5 * (out.z_real + out.z_real.transpose()).eval();
  const double im = commutator_term(out.duals);
  out.z_imag << 0.0, im, -im, 0.0;
  out.f_hcr = objective<double>(cov, w, out.duals);
}

void require_cov(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols() || (cov.rows() != 2 && cov.rows() != 4))
    throw InvalidArgument("covariance must be 2x2 or 4x4");
  if (!cov.allFinite()) throw InvalidArgument("covariance has non-finite entries");
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance)
    throw InvalidArgument("covariance is not symmetric");
}

}  // namespace

void evaluate_at(BoundResult& result, const Eigen::MatrixXd& cov, const Weights& w) {
  require_cov(cov);
  fill_from_duals(result, cov, w);
}

BoundResult single_mode_closed(const Eigen::MatrixXd& cov, const Weights& w) {
  require_cov(cov);
  if (cov.rows() != 2) throw InvalidArgument("single_mode_closed needs a 2x2 covariance");
  BoundResult out;
  out.duals = unbiased_duals<double>(1);
  out.z_real = cov;
  out.z_imag << 0.0, 1.0, -1.0, 0.0;
  out.f_hcr = w.w_x * cov(0, 0) + w.w_y * cov(1, 1) + 2.0 * w.coupling();
  out.converged = true;
  out.method = "closed-single-mode";
  return out;
}

BoundResult solve(const Eigen::MatrixXd& cov, const Weights& w, const SolveOptions& options) {
  require_cov(cov);
  if (cov.rows() == 2) return single_mode_closed(cov, w);

  const TwoModeProblem problem(cov, w);
  BoundResult out;

  if (w.w_x == 0.0 || w.w_y == 0.0) {
    out.duals = problem.duals(problem.decoupled_minimizer());
    out.converged = true;
    out.method = "quadratic";
    fill_from_duals(out, cov, w);
    return out;
  }

  const SaddleResult saddle = saddle_point(problem);
  Vector4 best_u = saddle.u;
  double best = problem.value(best_u);
  out.multiplier = saddle.multiplier;
  out.iterations = saddle.iterations;
  out.converged = saddle.converged;
  out.method = "saddle";

  if (options.restarts > 0) {
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double scale = 1.0 + best_u.cwiseAbs().maxCoeff();
    NelderMeadOptions nm;
    nm.tolerance = options.tolerance;
    nm.max_evaluations = options.max_evaluations;
    auto f = [&](const Eigen::VectorXd& u) { return problem.value(Vector4(u)); };
    const double accept = 1e-11 * std::max(1.0, best);
    for (int start = 0; start < options.restarts; ++start) {
      Eigen::VectorXd x0(4);
      if (start == 0) {
        x0 = best_u;
      } else {
        for (int i = 0; i < 4; ++i) x0(i) = scale * normal(rng);
      }
      const auto run = nelder_mead(f, x0, 0.1 * scale, nm);
      out.iterations += run.evaluations;
      if (run.value < best - accept) {
        best = run.value;
        best_u = run.x;
        out.method = "multistart";
      }
    }
  }

  out.duals = problem.duals(best_u);
  fill_from_duals(out, cov, w);
  return out;
}

Eigen::Vector2d tangency_point(const BoundResult& result, const Weights& w) {
  const double im = std::abs(result.z_imag(0, 1));
  constexpr double inf = std::numeric_limits<double>::infinity();
  auto component = [&](double own, double other, double variance) {
    if (own > 0.0) return variance + std::sqrt(other / own) * im;
    return im <= 1e-12 ? variance : inf;
  };
  return {component(w.w_x, w.w_y, result.z_real(0, 0)), component(w.w_y, w.w_x, result.z_real(1, 1))};
}

}  // namespace qbound
