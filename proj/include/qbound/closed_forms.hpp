#pragma once

// Analytic bounds, optima and parametric curves for one- and two-mode
// squeezed probes. Formulas are evaluated through e^{-2r} where possible;
// squeezing parameters above kMaxSqueezing are rejected.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qbound/holevo.hpp"

namespace qbound {

inline constexpr double kMaxSqueezing = 20.0;

enum class Segment { low, middle, high };
std::string to_string(Segment s);

struct EnvelopePoint {
  double v_x = 0.0;
  double v_y = 0.0;
  Segment segment = Segment::middle;
  /// Inputs had r1 > r2 and were swapped into canonical order.
  bool swapped = false;
};

/// Variances of a squeezed state rotated by phi projected on X and on Y.
std::pair<double, double> projected_variances(double r, double phi);

/// Single-mode bound w_x v_a + w_y v_b + 2 sqrt(w_x w_y).
double single_mode_line(const Weights& w, double r, double phi);

/// Smallest v_y compatible with v_x for a fixed single-mode probe:
/// v_y = v_b + 1 / (v_x - v_a). Throws Infeasible when v_x <= v_a.
double single_mode_tradeoff(double v_x, double r, double phi);

/// e^{-2r}/v_x + e^{2r}/v_y for an X-squeezed probe; at most 1 when achievable.
double single_mode_precision_sum(double v_x, double v_y, double r);

/// Lower boundary v_y*(v_x) of the two-mode accessible region.
EnvelopePoint two_mode_envelope(double v_x, double r1, double r2);

/// The two breakpoints (v_c, v_d) of the two-mode envelope, canonical order.
std::pair<double, double> envelope_breakpoints(double r1, double r2);

struct OptimalConfig {
  double t = 0.0;
  double phi1 = 0.0;
  double phi2 = 0.0;
  double v_x = 0.0;
  double v_y = 0.0;
  bool swapped = false;

  ProbeConfig<double> probe(double r1, double r2) const { return {2, r1, r2, phi1, phi2, t}; }
};

/// Best use of two squeezed states for weights w. For w_x == w_y the optimum
/// is a family parameterized by `family_phi1` (phi2 = phi1 + pi/2). A zero
/// weight returns the single-parameter limit: t = 1, the unweighted variance
/// +inf.
OptimalConfig optimal_config(const Weights& w, double r1, double r2, double family_phi1 = 0.0);

struct Example2Params {
  double lambda = 0.0;
  double gamma = 0.0;
  double r = 0.0;
  double t = 0.5;
  double residual = 0.0;
};

/// Coefficients (highest degree first) of ratio g^4 - ratio T g^3 + T g - 1
/// with T = tanh 2r, whose positive root is gamma.
std::vector<double> gamma_quartic(double ratio, double r);
double gamma_quartic_residual(double gamma, double ratio, double r);

/// Positive root gamma of the balanced-splitter quartic for ratio = w_y/w_x
/// and the optimal multiplier lambda* = -e^{-r} (1 + gamma) / sqrt 2.
/// ratio = 0 and ratio = +inf return the single-parameter limits.
Example2Params gamma_quartic_root(double ratio, double r);

/// (f_x, f_y) of the equal-squeezing family at multiplier lambda and
/// transmissivity t. Throws PoleError at lambda = -sqrt(t) e^{-r} or t = 1.
std::pair<double, double> example2_parametric(double lambda, double r, double t);

struct ScalarCorollaries {
  double single_mode_product_floor = 4.0;
  double two_mode_product_floor = 0.0;
  /// 1/v_x + 1/v_y on the balanced relation; only set when r1 == r2.
  std::optional<double> balanced_precision_sum;
  /// e^{-2r1} e^{-2r2} < 1/4, the condition for v_x v_y < 1.
  bool sql_feasible = false;
  double resource_product = 0.0;
};

ScalarCorollaries scalar_corollaries(double r1, double r2);

enum class Favoured { x, y };

/// One squeezed state plus vacuum: y-favoured returns 1/v_x + e^{-2r2}/v_y,
/// x-favoured the mirror e^{-2r2}/v_x + 1/v_y. At most 1 when achievable.
double example1_relation(double v_x, double v_y, double r2, Favoured which);

/// Variances of the one-squeezed-state scheme at transmissivity t:
/// y-favoured (1/(1-t), e^{-2r2}/t), x-favoured mirrored.
std::pair<double, double> example1_variances(double t, double r2, Favoured which);

/// Holevo bound of the balanced configuration (r1 = r2 = r, phi1 = 0,
/// phi2 = pi/2, t = t*(w)): (sqrt w_x + sqrt w_y)^2 e^{-2r}.
double balanced_bound(const Weights& w, double r);

/// t* = sqrt(w_y) / (sqrt(w_x) + sqrt(w_y)) for equal squeezing.
double balanced_transmissivity(const Weights& w);

}  // namespace qbound
