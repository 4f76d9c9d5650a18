#include "qbound/closed_forms.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace qbound {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kHalfPi = std::numbers::pi / 2.0;

void check_squeezing(double r, const char* name) {
  if (!std::isfinite(r) || r < 0.0 || r > kMaxSqueezing)
    throw InvalidArgument(std::string(name) + " must lie in [0, 20]");
}

struct Resource {
  double r1, r2;
  double e1, e2, g;  // e^{-2r1}, e^{-2r2}, e^{-r1-r2}
  bool swapped;
};

Resource canonical_resource(double r1, double r2) {
  check_squeezing(r1, "r1");
  check_squeezing(r2, "r2");
  const bool swapped = r1 > r2;
  if (swapped) std::swap(r1, r2);
  return {r1, r2, std::exp(-2.0 * r1), std::exp(-2.0 * r2), std::exp(-r1 - r2), swapped};
}

}  // namespace

std::string to_string(Segment s) {
  switch (s) {
    case Segment::low: return "low";
    case Segment::middle: return "middle";
    case Segment::high: return "high";
  }
  return "middle";
}

std::pair<double, double> projected_variances(double r, double phi) {
  check_squeezing(r, "r");
  const double c2 = std::cos(phi) * std::cos(phi);
  const double s2 = std::sin(phi) * std::sin(phi);
  const double lo = std::exp(-2.0 * r);
  const double hi = std::exp(2.0 * r);
  return {lo * c2 + hi * s2, lo * s2 + hi * c2};
}

double single_mode_line(const Weights& w, double r, double phi) {
  const auto [va, vb] = projected_variances(r, phi);
  return w.w_x * va + w.w_y * vb + 2.0 * w.coupling();
}

double single_mode_tradeoff(double v_x, double r, double phi) {
  const auto [va, vb] = projected_variances(r, phi);
  if (!(v_x > va)) throw Infeasible("v_x must exceed the projected variance v_a");
  return vb + 1.0 / (v_x - va);
}

double single_mode_precision_sum(double v_x, double v_y, double r) {
  check_squeezing(r, "r");
  if (!(v_x > 0.0) || !(v_y > 0.0)) throw InvalidArgument("variances must be positive");
  return std::exp(-2.0 * r) / v_x + std::exp(2.0 * r) / v_y;
}

std::pair<double, double> envelope_breakpoints(double r1, double r2) {
  const auto res = canonical_resource(r1, r2);
  return {res.e2 + res.g, res.e1 + res.g};
}

EnvelopePoint two_mode_envelope(double v_x, double r1, double r2) {
  const auto res = canonical_resource(r1, r2);
  if (!(v_x > res.e2)) throw Infeasible("v_x must exceed e^{-2 r2}");
  const double vc = res.e2 + res.g;
  const double vd = res.e1 + res.g;
  EnvelopePoint p{v_x, 0.0, Segment::middle, res.swapped};
  if (v_x < vc) {
    p.v_y = v_x * res.e1 / (v_x - res.e2);
    p.segment = Segment::low;
  } else if (v_x <= vd) {
    const double s = std::exp(-res.r1) + std::exp(-res.r2);
    p.v_y = s * s - v_x;
  } else {
    p.v_y = v_x * res.e2 / (v_x - res.e1);
    p.segment = Segment::high;
  }
  return p;
}

OptimalConfig optimal_config(const Weights& w, double r1, double r2, double family_phi1) {
  const auto res = canonical_resource(r1, r2);
  OptimalConfig c;
  c.swapped = res.swapped;
  if (w.w_x == 0.0) {
    c = {1.0, 0.0, kHalfPi, kInf, res.e2, res.swapped};
  } else if (w.w_y == 0.0) {
    c = {1.0, kHalfPi, 0.0, res.e2, kInf, res.swapped};
  } else if (w.w_x < w.w_y) {
    const double rho = std::sqrt(w.w_x / w.w_y);
    // e^{r1}/(e^{r1} + e^{r2} rho), divided through by e^{r1}
    c.t = 1.0 / (1.0 + std::exp(res.r2 - res.r1) * rho);
    c.phi1 = 0.0;
    c.phi2 = kHalfPi;
    c.v_x = res.e1 + res.g / rho;
    c.v_y = res.e2 + res.g * rho;
  } else if (w.w_y < w.w_x) {
    const double rho = std::sqrt(w.w_y / w.w_x);
    c.t = 1.0 / (1.0 + std::exp(res.r2 - res.r1) * rho);
    c.phi1 = kHalfPi;
    c.phi2 = 0.0;
    c.v_x = res.e2 + res.g * rho;
    c.v_y = res.e1 + res.g / rho;
  } else {
    const double s = std::exp(-res.r1) + std::exp(-res.r2);
    const double spread = 0.5 * std::cos(2.0 * family_phi1) * (res.e1 - res.e2);
    c.t = 1.0 / (1.0 + std::exp(res.r2 - res.r1));
    c.phi1 = family_phi1;
    c.phi2 = family_phi1 + kHalfPi;
    c.v_x = 0.5 * s * s + spread;
    c.v_y = 0.5 * s * s - spread;
  }
  return c;
}

std::vector<double> gamma_quartic(double ratio, double r) {
  const double tr = std::tanh(2.0 * r);
  return {ratio, -ratio * tr, 0.0, tr, -1.0};
}

double gamma_quartic_residual(double gamma, double ratio, double r) {
  const auto c = gamma_quartic(ratio, r);
  double acc = 0.0;
  for (double coeff : c) acc = acc * gamma + coeff;
  return acc;
}

Example2Params gamma_quartic_root(double ratio, double r) {
  check_squeezing(r, "r");
  if (std::isnan(ratio) || ratio < 0.0) throw InvalidArgument("weight ratio must be non-negative");
  Example2Params out;
  out.r = r;
  out.t = 0.5;
  const double tr = std::tanh(2.0 * r);

  if (std::isinf(ratio)) {
    // w_x = 0: the quartic reduces to g^3 (g - T) = 0
    out.gamma = tr;
  } else if (r == 0.0) {
    if (ratio == 0.0) throw Infeasible("quartic has no positive root for r = 0 and w_y = 0");
    out.gamma = std::pow(ratio, -0.25);
  } else if (ratio == 0.0) {
    out.gamma = 1.0 / tr;
  } else {
    // Monic companion matrix of g^4 - T g^3 + (T/ratio) g - 1/ratio.
    Eigen::Matrix4d companion = Eigen::Matrix4d::Zero();
    const double a3 = -tr, a2 = 0.0, a1 = tr / ratio, a0 = -1.0 / ratio;
    companion.row(0) << -a3, -a2, -a1, -a0;
    companion(1, 0) = companion(2, 1) = companion(3, 2) = 1.0;
    Eigen::EigenSolver<Eigen::Matrix4d> es(companion, false);

    std::vector<double> positive;
    for (int i = 0; i < 4; ++i) {
      const auto z = es.eigenvalues()(i);
      if (z.real() > 0.0 && std::abs(z.imag()) <= 1e-8 * std::max(1.0, std::abs(z.real())))
        positive.push_back(z.real());
    }
    std::sort(positive.begin(), positive.end());
    double gamma = std::numeric_limits<double>::quiet_NaN();
    if (!positive.empty()) {
      // numerically coincident roots are merged by averaging
      if (positive.back() - positive.front() <= 1e-8) {
        double sum = 0.0;
        for (double v : positive) sum += v;
        gamma = sum / static_cast<double>(positive.size());
      } else {
        gamma = *std::min_element(positive.begin(), positive.end(), [&](double a, double b) {
          return std::abs(gamma_quartic_residual(a, ratio, r)) < std::abs(gamma_quartic_residual(b, ratio, r));
        });
      }
    }

    // The positive root lies in (T, 1/T], where the quartic is increasing.
    const double lo = tr;
    const double hi = 1.0 / tr;
    if (!(gamma > lo * (1.0 - 1e-12)) || !(gamma <= hi * (1.0 + 1e-12))) {
      std::uintmax_t iters = 200;
      auto f = [&](double g) { return gamma_quartic_residual(g, ratio, r); };
      const auto br = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(), iters);
      gamma = 0.5 * (br.first + br.second);
    }

    for (int it = 0; it < 8; ++it) {
      const double f = gamma_quartic_residual(gamma, ratio, r);
      const double df = 4.0 * ratio * gamma * gamma * gamma - 3.0 * ratio * tr * gamma * gamma + tr;
      if (df == 0.0) break;
      const double next = gamma - f / df;
      if (!(next > 0.0) || std::abs(gamma_quartic_residual(next, ratio, r)) >= std::abs(f)) break;
      gamma = next;
    }
    out.gamma = gamma;
  }
  out.residual = std::isinf(ratio) ? 0.0 : std::abs(gamma_quartic_residual(out.gamma, ratio, r));
  if (ratio == 0.0 && r > 0.0) {
    out.lambda = -std::exp(r) / (std::numbers::sqrt2 * std::sinh(2.0 * r));
  } else {
    out.lambda = -std::exp(-r) * (1.0 + out.gamma) / std::numbers::sqrt2;
  }
  return out;
}

std::pair<double, double> example2_parametric(double lambda, double r, double t) {
  check_squeezing(r, "r");
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("transmissivity must lie in [0, 1]");
  if (t == 1.0) throw PoleError("f_y has a pole at t = 1");
  const double st = std::sqrt(t);
  const double shift = lambda + st * std::exp(-r);
  if (std::abs(shift) <= 1e-15 * std::max(1.0, std::abs(lambda))) throw PoleError("f_x has a pole at lambda = -sqrt(t) e^{-r}");
  const double a = 1.0 + lambda * st * std::exp(r);
  const double e2 = std::exp(-2.0 * r);
  const double num = a * a + lambda * lambda * (1.0 - t) * e2;
  return {num / (shift * shift), num / ((1.0 - t) * e2)};
}

ScalarCorollaries scalar_corollaries(double r1, double r2) {
  const auto res = canonical_resource(r1, r2);
  ScalarCorollaries out;
  out.resource_product = res.e1 * res.e2;
  out.two_mode_product_floor = 4.0 * out.resource_product;
  if (res.r1 == res.r2) out.balanced_precision_sum = std::exp(2.0 * res.r1);
  out.sql_feasible = out.resource_product < 0.25;
  return out;
}

double example1_relation(double v_x, double v_y, double r2, Favoured which) {
  check_squeezing(r2, "r2");
  if (!(v_x > 0.0) || !(v_y > 0.0)) throw InvalidArgument("variances must be positive");
  const double e2 = std::exp(-2.0 * r2);
  return which == Favoured::y ? 1.0 / v_x + e2 / v_y : e2 / v_x + 1.0 / v_y;
}

std::pair<double, double> example1_variances(double t, double r2, Favoured which) {
  check_squeezing(r2, "r2");
  if (!(t > 0.0 && t < 1.0)) throw PoleError("example-1 variances need 0 < t < 1");
  const double e2 = std::exp(-2.0 * r2);
  const double vacuum_arm = 1.0 / (1.0 - t);
  const double squeezed_arm = e2 / t;
  return which == Favoured::y ? std::pair{vacuum_arm, squeezed_arm} : std::pair{squeezed_arm, vacuum_arm};
}

double balanced_bound(const Weights& w, double r) {
  check_squeezing(r, "r");
  const double s = std::sqrt(w.w_x) + std::sqrt(w.w_y);
  return s * s * std::exp(-2.0 * r);
}

double balanced_transmissivity(const Weights& w) {
  return std::sqrt(w.w_y) / (std::sqrt(w.w_x) + std::sqrt(w.w_y));
}

}  // namespace qbound
