#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "qbound/closed_forms.hpp"
#include "qbound/holevo.hpp"

using namespace qbound;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Positive root of ratio g^3 (g - T) + g T - 1 by bisection. For ratio >= 1
// the root is in [T, 1], otherwise in [1, 1/T].
double quartic_bisect(double ratio, double r) {
  const double T = std::tanh(2 * r);
  auto q = [&](double g) { return ratio * g * g * g * (g - T) + g * T - 1.0; };
  double lo = ratio >= 1.0 ? T : 1.0, hi = ratio >= 1.0 ? 1.0 : 1.0 / T;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (q(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double numeric_bound(const OptimalConfig& c, double r1, double r2, const Weights& w) {
  return solve(build_probe(c.probe(r1, r2)).cov(), w).f_hcr;
}

}  // namespace

TEST(SingleMode, ProjectedVariances) {
  const auto [va, vb] = projected_variances(0.5 * std::log(2.0), kPi / 6.0);
  EXPECT_NEAR(va, 0.875, 1e-14);
  EXPECT_NEAR(vb, 1.625, 1e-14);
  const auto [a, b] = projected_variances(0.4, kPi / 4.0);
  EXPECT_NEAR(a, std::cosh(0.8), 1e-14);
  EXPECT_NEAR(b, std::cosh(0.8), 1e-14);
}

TEST(SingleMode, LineAndTradeoff) {
  const double r = 0.45;
  for (double phi : {0.0, 0.3, 1.2}) EXPECT_NEAR(single_mode_line(Weights(1, 1), r, phi), 2 * (1 + std::cosh(2 * r)), 1e-12);
  EXPECT_NEAR(single_mode_line(Weights(1, 0), r, 0.3), projected_variances(r, 0.3).first, 1e-14);
  EXPECT_NEAR(single_mode_tradeoff(2 * std::exp(-2 * r), r, 0.0), 2 * std::exp(2 * r), 1e-12);
  EXPECT_NEAR(single_mode_tradeoff(2.0, 0.0, 0.0), 2.0, 1e-14);
  EXPECT_THROW(single_mode_tradeoff(std::exp(-2 * r), r, 0.0), Infeasible);
}

TEST(SingleMode, PrecisionSumOnBoundary) {
  const double r = 0.7;
  for (double vx : {0.3, 1.0, 5.0, 40.0}) {
    if (vx <= std::exp(-2 * r)) continue;
    EXPECT_NEAR(single_mode_precision_sum(vx, single_mode_tradeoff(vx, r, 0.0), r), 1.0, 1e-12);
  }
  EXPECT_NEAR(single_mode_precision_sum(4.0, 4.0, 0.0), 0.5, 1e-15);
}

TEST(Envelope, BranchesSatisfyPrecisionRelations) {
  const double r1 = 0.35, r2 = 0.69;
  const double e1 = std::exp(-2 * r1), e2 = std::exp(-2 * r2);
  const double s = std::exp(-r1) + std::exp(-r2);
  const auto [vc, vd] = envelope_breakpoints(r1, r2);
  EXPECT_NEAR(vc, e2 + std::exp(-r1 - r2), 1e-15);
  EXPECT_NEAR(vd, e1 + std::exp(-r1 - r2), 1e-15);
  for (double vx = e2 * 1.01; vx < 50.0; vx *= 1.07) {
    const auto p = two_mode_envelope(vx, r1, r2);
    if (vx < vc) {
      EXPECT_EQ(p.segment, Segment::low);
      EXPECT_NEAR(e2 / vx + e1 / p.v_y, 1.0, 1e-12);
    } else if (vx < vd) {
      EXPECT_EQ(p.segment, Segment::middle);
      EXPECT_NEAR(vx + p.v_y, s * s, 1e-12);
    } else {
      EXPECT_EQ(p.segment, Segment::high);
      EXPECT_NEAR(e1 / vx + e2 / p.v_y, 1.0, 1e-12);
    }
  }
  EXPECT_NEAR(vc, 0.6051, 1e-4);
  EXPECT_NEAR(two_mode_envelope(vc, r1, r2).v_y, vd, 1e-12);
  EXPECT_NEAR(vd, 0.8501, 1e-4);
  EXPECT_THROW(two_mode_envelope(e2, r1, r2), Infeasible);
}

TEST(Envelope, VacuumIsHyperbola) {
  for (double vx : {1.1, 2.0, 7.0}) EXPECT_NEAR(two_mode_envelope(vx, 0.0, 0.0).v_y, vx / (vx - 1.0), 1e-14);
}

TEST(Envelope, BalancedPointAndLimit) {
  const double r = 0.5 * std::log(4.0);
  const auto p = two_mode_envelope(0.5, r, r);
  EXPECT_NEAR(p.v_y, 0.5, 1e-15);
  EXPECT_EQ(p.segment, Segment::middle);
  EXPECT_NEAR(two_mode_envelope(1e9, 0.2, 0.8).v_y, std::exp(-1.6), 1e-8);
}

TEST(Envelope, SwapCanonicalizes) {
  const auto a = two_mode_envelope(0.9, 0.69, 0.35);
  const auto b = two_mode_envelope(0.9, 0.35, 0.69);
  EXPECT_TRUE(a.swapped);
  EXPECT_FALSE(b.swapped);
  EXPECT_DOUBLE_EQ(a.v_y, b.v_y);
}

TEST(EnvelopeProperty, ContinuitySymmetryMonotonicityAndFloors) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    double r1 = 1.5 * u(rng), r2 = 1.5 * u(rng);
    if (r1 > r2) std::swap(r1, r2);
    const auto [vc, vd] = envelope_breakpoints(r1, r2);
    const double eps = 1e-12;
    ASSERT_NEAR(two_mode_envelope(vc * (1 - eps), r1, r2).v_y, vd, 1e-9);
    ASSERT_NEAR(two_mode_envelope(vd * (1 - eps), r1, r2).v_y, two_mode_envelope(vd, r1, r2).v_y, 1e-9);
    const double e2 = std::exp(-2 * r2);
    const double vx = e2 * (1.0 + 100.0 * u(rng) * u(rng)) + 1e-6;
    const double vy = two_mode_envelope(vx, r1, r2).v_y;
    ASSERT_NEAR(two_mode_envelope(vy, r1, r2).v_y, vx, 1e-9 * std::max(1.0, vx));
    ASSERT_GE(two_mode_envelope(vx * 1.01, r1, r2).v_y, 0.0);
    ASSERT_LE(two_mode_envelope(vx * 1.01, r1, r2).v_y, vy + 1e-12);
    ASSERT_GE(vx * vy, 4.0 * std::exp(-2 * r1 - 2 * r2) - 1e-9);
    // an ancilla never hurts
    const double phi = kPi * u(rng);
    const double va = projected_variances(r2, phi).first;
    if (vx > va) ASSERT_GE(single_mode_tradeoff(vx, r2, phi), two_mode_envelope(vx, 0.0, r2).v_y - 1e-12);
  }
}

TEST(OptimalConfig, UnequalWeightFormulas) {
  const double r1 = 0.3, r2 = 0.8;
  const Weights w(1.0, 3.0);
  const auto c = optimal_config(w, r1, r2);
  const double rho = std::sqrt(w.w_x / w.w_y);
  EXPECT_NEAR(c.t, std::exp(r1) / (std::exp(r1) + std::exp(r2) * rho), 1e-14);
  EXPECT_NEAR(c.v_x, std::exp(-2 * r1) + std::exp(-r1 - r2) / rho, 1e-14);
  EXPECT_NEAR(c.v_y, std::exp(-2 * r2) + std::exp(-r1 - r2) * rho, 1e-14);
  EXPECT_DOUBLE_EQ(c.phi1, 0.0);
  EXPECT_DOUBLE_EQ(c.phi2, kPi / 2);
  const auto m = optimal_config(w.swapped(), r1, r2);
  EXPECT_NEAR(m.v_x, c.v_y, 1e-14);
  EXPECT_NEAR(m.v_y, c.v_x, 1e-14);
}

TEST(OptimalConfig, DocumentedExamples) {
  const double r2 = std::log(2.0);
  const auto a = optimal_config(Weights(1, 1), 0.0, r2);
  EXPECT_NEAR(a.t, 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(a.v_x, 1.5, 1e-14);
  EXPECT_NEAR(a.v_y, 0.75, 1e-14);
  EXPECT_NEAR(1.0 / a.v_x + 0.25 / a.v_y, 1.0, 1e-14);
  const double r = 0.4, e = std::exp(-2 * r);
  const auto b = optimal_config(Weights(1, 4), r, r);
  EXPECT_NEAR(b.t, 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(b.v_x, 3 * e, 1e-14);
  EXPECT_NEAR(b.v_y, 1.5 * e, 1e-14);
}

TEST(OptimalConfig, ZeroWeightLimits) {
  const auto c = optimal_config(Weights(1, 0), 0.2, 0.6);
  EXPECT_NEAR(c.v_x, std::exp(-1.2), 1e-15);
  EXPECT_EQ(c.v_y, kInf);
  const auto d = optimal_config(Weights(0, 1), 0.2, 0.6);
  EXPECT_NEAR(d.v_y, std::exp(-1.2), 1e-15);
}

TEST(OptimalConfigProperty, OnEnvelopeAndAttainedBySolver) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    double r1 = 1.2 * u(rng), r2 = 1.2 * u(rng);
    if (r1 > r2) std::swap(r1, r2);
    const Weights w(0.05 + u(rng), 0.05 + u(rng));
    const auto c = optimal_config(w, r1, r2, kPi * u(rng));
    ASSERT_NEAR(c.v_y, two_mode_envelope(c.v_x, r1, r2).v_y, 1e-9 * std::max(1.0, c.v_y)) << i;
    if (i < 60) {
      const double f = w.w_x * c.v_x + w.w_y * c.v_y;
      ASSERT_NEAR(numeric_bound(c, r1, r2, w), f, 1e-8 * f) << i;
    }
  }
}

TEST(OptimalConfig, MinimumOverRandomConfigurations) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r1 = 0.35, r2 = 0.69;
  const Weights w(1.0, 2.5);
  const auto c = optimal_config(w, r1, r2);
  const double best = w.w_x * c.v_x + w.w_y * c.v_y;
  for (int i = 0; i < 200; ++i) {
    const ProbeConfig<double> p{2, r1, r2, kPi * u(rng), kPi * u(rng), 0.01 + 0.98 * u(rng)};
    ASSERT_GE(solve(build_probe(p).cov(), w, {.restarts = 0}).f_hcr, best - 1e-9);
  }
}

TEST(Quartic, AgreesWithBisection) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double ratio = std::exp(8 * (u(rng) - 0.5));
    const double r = 0.05 + 1.5 * u(rng);
    const auto p = gamma_quartic_root(ratio, r);
    ASSERT_NEAR(p.gamma, quartic_bisect(ratio, r), 1e-10 * p.gamma);
    ASSERT_NEAR(p.lambda, -std::exp(-r) * (1 + p.gamma) / std::sqrt(2.0), 1e-12);
    ASSERT_LE(std::abs(gamma_quartic_residual(p.gamma, ratio, r)), 1e-10);
  }
}

TEST(Quartic, SpecialRatios) {
  for (double r : {0.1, 0.5, 0.693, 1.4}) {
    const auto eq = gamma_quartic_root(1.0, r);
    EXPECT_DOUBLE_EQ(eq.gamma, 1.0);
    EXPECT_NEAR(eq.lambda, -std::sqrt(2.0) * std::exp(-r), 1e-15);
    const auto zero = gamma_quartic_root(0.0, r);
    EXPECT_NEAR(zero.gamma, 1.0 / std::tanh(2 * r), 1e-12);
    EXPECT_NEAR(zero.lambda, -std::exp(r) / (std::sqrt(2.0) * std::sinh(2 * r)), 1e-12);
    EXPECT_NEAR(gamma_quartic_root(kInf, r).gamma, std::tanh(2 * r), 1e-15);
  }
  EXPECT_THROW(gamma_quartic_root(-1.0, 0.3), InvalidArgument);
  EXPECT_THROW(gamma_quartic_root(std::nan(""), 0.3), InvalidArgument);
}

TEST(Quartic, CoefficientsMatchDefinition) {
  const double ratio = 2.5, r = 0.4, T = std::tanh(0.8);
  const auto c = gamma_quartic(ratio, r);
  ASSERT_EQ(c.size(), 5u);
  EXPECT_NEAR(c[0], ratio, 1e-15);
  EXPECT_NEAR(c[1], -ratio * T, 1e-15);
  EXPECT_NEAR(c[2], 0.0, 1e-15);
  EXPECT_NEAR(c[3], T, 1e-15);
  EXPECT_NEAR(c[4], -1.0, 1e-15);
}

TEST(Example2, ParametricSpecialValues) {
  const double r = 0.5;
  const auto [fx, fy] = example2_parametric(-std::sqrt(2.0) * std::exp(-r), r, 0.5);
  EXPECT_NEAR(fx, 2 * std::exp(-2 * r), 1e-13);
  EXPECT_NEAR(fy, 2 * std::exp(-2 * r), 1e-13);
  const auto [gx, gy] = example2_parametric(-std::exp(r) / (std::sqrt(2.0) * std::sinh(2 * r)), r, 0.5);
  EXPECT_NEAR(gx, 1.0 / std::cosh(2 * r), 1e-13);
  (void)gy;
  const Weights w(1.0, 4.0);
  const double ts = balanced_transmissivity(w);
  const auto [hx, hy] = example2_parametric(-std::exp(-r) / std::sqrt(ts), r, ts);
  EXPECT_NEAR(hx + 4 * hy, 9 * std::exp(-2 * r), 1e-12);
}

TEST(Example2, PolesThrow) {
  EXPECT_THROW(example2_parametric(-std::sqrt(0.5) * std::exp(-0.3), 0.3, 0.5), PoleError);
  EXPECT_THROW(example2_parametric(-1.0, 0.3, 1.0), PoleError);
}

TEST(Example2, MultiplierPathMatchesSolver) {
  const double r = 0.6;
  const auto cov = build_probe(ProbeConfig<double>{2, r, r, 0.0, kPi / 2, 0.5}).cov();
  for (double ratio : {0.05, 0.3, 1.0, 2.0, 7.0}) {
    const Weights w(1.0, ratio);
    const auto p = gamma_quartic_root(ratio, r);
    const auto [fx, fy] = example2_parametric(p.lambda, r, 0.5);
    const auto res = solve(cov, w);
    EXPECT_NEAR(fx + ratio * fy, res.f_hcr, 1e-9 * res.f_hcr) << ratio;
    const auto v = tangency_point(res, w);
    EXPECT_NEAR(fx, v(0), 1e-7) << ratio;
    EXPECT_NEAR(fy, v(1), 1e-7) << ratio;
  }
}

TEST(Corollaries, ProductFloorsAndThreshold) {
  const auto z = scalar_corollaries(0.0, 0.0);
  EXPECT_DOUBLE_EQ(z.single_mode_product_floor, 4.0);
  EXPECT_DOUBLE_EQ(z.two_mode_product_floor, 4.0);
  EXPECT_FALSE(z.sql_feasible);
  const double r = -0.5 * std::log(0.49);
  const auto c = scalar_corollaries(r, r);
  EXPECT_NEAR(c.two_mode_product_floor, 0.9604, 1e-12);
  EXPECT_TRUE(c.sql_feasible);
  ASSERT_TRUE(c.balanced_precision_sum);
  EXPECT_NEAR(*c.balanced_precision_sum, std::exp(2 * r), 1e-12);
  // 1/v_x + 1/v_y at the balanced point 2 e^{-2r}
  EXPECT_NEAR(2.0 / (2 * 0.49), *c.balanced_precision_sum, 1e-12);
  EXPECT_FALSE(scalar_corollaries(0.2, 0.3).balanced_precision_sum);
}

TEST(Example1, RelationSaturation) {
  const double r2 = 0.55, e = std::exp(-2 * r2);
  EXPECT_NEAR(example1_relation(2.0, 2 * e, r2, Favoured::y), 1.0, 1e-14);
  EXPECT_NEAR(example1_relation(2 * e, 2.0, r2, Favoured::x), 1.0, 1e-14);
  const double tmin = 1.0 / (1.0 + std::exp(r2));
  for (double t = tmin; t < 1.0; t += 0.07) {
    const auto [vx, vy] = example1_variances(t, r2, Favoured::y);
    EXPECT_NEAR(vx, 1.0 / (1.0 - t), 1e-14);
    EXPECT_NEAR(vy, e / t, 1e-14);
    EXPECT_NEAR(example1_relation(vx, vy, r2, Favoured::y), 1.0, 1e-12);
  }
  const auto [a, b] = example1_variances(1.0 / 3.0, std::log(2.0), Favoured::y);
  EXPECT_NEAR(a, 1.5, 1e-14);
  EXPECT_NEAR(b, 0.75, 1e-14);
  EXPECT_NEAR(example1_relation(4.0, 4.0, 0.0, Favoured::y), 0.5, 1e-15);
}

TEST(Balanced, BoundAndTransmissivity) {
  const double r = 0.35;
  EXPECT_NEAR(balanced_transmissivity(Weights(1, 4)), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(balanced_transmissivity(Weights(1, 1)), 0.5, 1e-15);
  EXPECT_NEAR(balanced_bound(Weights(1, 4), r), 9 * std::exp(-2 * r), 1e-14);
}

TEST(ClosedForms, RejectsHugeSqueezing) {
  EXPECT_THROW(two_mode_envelope(1.0, 0.1, 21.0), InvalidArgument);
  EXPECT_THROW(gamma_quartic_root(1.0, 25.0), InvalidArgument);
  EXPECT_THROW(projected_variances(-0.1, 0.0), InvalidArgument);
}
