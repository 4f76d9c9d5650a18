#pragma once

// Accessible (v_x, v_y) regions. A fixed probe's region is bounded by the
// tangency points of its weighted bounds, (df/dw_x, df/dw_y); the two-mode
// envelope is the pointwise minimum of those boundaries over probe settings.

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qbound/closed_forms.hpp"
#include "qbound/gaussian.hpp"
#include "qbound/holevo.hpp"

namespace qbound {

enum class SampleSource { numeric_solver, closed_form };
std::string to_string(SampleSource s);

struct RegionSample {
  double v_x = 0.0;
  double v_y = 0.0;
  /// Generating configuration; NaN where not applicable.
  double t = std::numeric_limits<double>::quiet_NaN();
  double phi1 = std::numeric_limits<double>::quiet_NaN();
  double w_ratio = std::numeric_limits<double>::quiet_NaN();
  SampleSource source = SampleSource::numeric_solver;
  /// Branch label for closed-form rows ("low", "middle", "high", "single").
  std::string segment;
  bool converged = true;
};

struct BoundaryOptions {
  /// Relative central-difference step on each weight.
  double fd_step = 1e-5;
  SolveOptions solve{.restarts = 0};
};

/// f_hcr for weights (ratio/(1+ratio), 1/(1+ratio)).
double bound_for_ratio(const Eigen::MatrixXd& cov, double ratio, const SolveOptions& options = {.restarts = 0});

/// Tangency point for one weight ratio w_x/w_y, by central differences of the
/// weight-parameterized bound.
RegionSample tangency_for_ratio(const ProbeConfig<double>& probe, const Eigen::MatrixXd& cov, double ratio,
                                const BoundaryOptions& options = {});

/// Lower-left boundary of one probe's accessible region, sorted by v_x with
/// v_y strictly decreasing (duplicate tangency points are dropped).
std::vector<RegionSample> boundary_for_config(const ProbeConfig<double>& probe, const std::vector<double>& w_grid,
                                              const BoundaryOptions& options = {});

struct EnvelopeGrid {
  std::vector<double> t;
  std::vector<double> phi1;
  std::vector<double> w_ratio;
  /// Sweep phi2 over `phi2` instead of fixing phi2 = phi1 + pi/2.
  bool exhaustive_phi2 = false;
  std::vector<double> phi2;

  /// Uniform t in [t_min, 1 - t_min], phi1 in [0, pi/2] inclusive, ratios
  /// log-uniform in [1/ratio_span, ratio_span].
  static EnvelopeGrid uniform(int n_t, int n_phi, int n_w, double t_min = 0.01, double ratio_span = 1e2);

  /// As uniform(), but t uniform in log(t / (1 - t)) over [t_lo, t_hi].
  static EnvelopeGrid logistic(int n_t, int n_phi, int n_w, double t_lo, double t_hi, double ratio_span = 1e2);
};

struct ConfigCurve {
  ProbeConfig<double> probe;
  std::vector<RegionSample> points;
};

class NumericEnvelope {
 public:
  /// With `refine`, at() locates each competitive configuration's boundary
  /// exactly at the requested v_x (root-finding the weight ratio between the
  /// bracketing grid samples); otherwise it uses chords between samples.
  NumericEnvelope(double r1, double r2, std::vector<ConfigCurve> curves, BoundaryOptions options = {},
                  bool refine = true);

  /// Minimum over configurations of v_y at v_x; empty when no configuration
  /// covers v_x. A fixed probe's boundary is convex, so it lies between the
  /// chord and the tangent lines of the bracketing samples; configurations
  /// whose tangent lines are above the best value so far are skipped.
  std::optional<RegionSample> at(double v_x) const;

  /// Samples at `bins` log-spaced v_x over [1.001 e^{-2 r2}, 10 e^{2 r2}],
  /// skipping uncovered bins.
  std::vector<RegionSample> binned(int bins = 400) const;

  /// Range of v_x covered by at least one configuration.
  std::pair<double, double> coverage() const;

  const std::vector<ConfigCurve>& curves() const { return curves_; }
  double r1() const { return r1_; }
  double r2() const { return r2_; }

 private:
  std::optional<RegionSample> refine_at(const ConfigCurve& curve, std::size_t hi, double v_x) const;

  double r1_, r2_;
  std::vector<ConfigCurve> curves_;
  BoundaryOptions options_;
  bool refine_;
};

/// Sweeps every grid configuration of a two-mode probe with squeezings
/// (r1, r2). Configurations are independent work items run in parallel and
/// stored in grid order.
NumericEnvelope envelope(double r1, double r2, const EnvelopeGrid& grid, const BoundaryOptions& options = {},
                         bool refine = true);

/// Closed-form envelope samples (log-spaced v_x) labelled by branch and by
/// the configuration that attains each point.
std::vector<RegionSample> closed_form_region(double r1, double r2, int n_points = 200);

/// Fixed single-mode probe boundary (v_y - v_b)(v_x - v_a) = 1.
std::vector<RegionSample> single_mode_region(double r, double phi, int n_points = 200);

struct SqlCheck {
  /// Some accessible point has v_x < 1 and v_y < 1.
  bool feasible = false;
  /// Balanced envelope point (v, v), the one minimizing max(v_x, v_y).
  std::pair<double, double> balanced_point{0.0, 0.0};
  std::optional<std::pair<double, double>> witness;
  /// e^{-2r1} e^{-2r2} and whether it is below 1/4.
  double resource_product = 0.0;
  bool product_criterion = false;
};

SqlCheck sql_feasible(double r1, double r2);

}  // namespace qbound
