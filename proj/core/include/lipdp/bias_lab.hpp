#ifndef LIPDP_BIAS_LAB_HPP
#define LIPDP_BIAS_LAB_HPP

#include <limits>
#include <utility>
#include <vector>

#include "lipdp/optim.hpp"
#include "lipdp/rng.hpp"

namespace lipdp {

/// One-dimensional regression y = a x + b + e with x uniform on [0,1]
/// and a finite-support noise distribution. The per-sample squared-loss
/// gradient at theta = (slope, intercept) is (2 r x, 2 r) with residual
/// r = (slope - a) x + (intercept - b) - e; clipping it to norm C
/// shifts where the expected gradient vanishes.
struct BiasScenario {
  double a = 0.0;
  double b = 0.0;
  struct ErrorAtom {
    double value = 0.0;
    double probability = 0.0;
  };
  std::vector<ErrorAtom> errors;
  /// Per-sample gradient clip bound; infinity disables clipping.
  double clip_threshold = std::numeric_limits<double>::infinity();

  /// Probabilities nonnegative summing to 1 (within 1e-12), positive
  /// clip threshold. Throws std::invalid_argument.
  void validate() const;

  /// Skewed two-atom noise, e = -9 with probability 0.1 and e = +1 with
  /// probability 0.9 (mean zero), around the line through the origin,
  /// clipped at C = 1. The expected clipped gradient at the true
  /// parameters has norm about 0.779 and its zero sits at
  /// (a + 0.01765, b + 0.94221).
  static BiasScenario asymmetric_example();
};

struct GradientEstimate {
  double slope = 0.0;      // d/d theta_1
  double intercept = 0.0;  // d/d theta_2
  double norm() const;
};

/// Exact per-sample gradient at one (x, e) draw, clipped to the
/// scenario threshold when clipped is set.
GradientEstimate point_gradient(const BiasScenario& scenario, double theta1,
                                double theta2, double x, double error,
                                bool clipped);

/// E over e and x of the (optionally clipped) per-sample gradient, by
/// adaptive quadrature per error atom to abs_tol per component.
GradientEstimate expected_gradient(const BiasScenario& scenario,
                                   double theta1, double theta2, bool clipped,
                                   double abs_tol = 1e-6);

struct FixedPointResult {
  double theta1 = 0.0;
  double theta2 = 0.0;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Zero of the expected clipped gradient via damped Newton seeded at
/// (a, b), the zero of the unclipped expectation for centered noise.
/// Non-convergence is reported through the flag with the last iterate
/// kept, never thrown.
FixedPointResult find_clipped_fixed_point(const BiasScenario& scenario,
                                          double tol = 1e-6,
                                          int max_iterations = 200);

/// Samples n points of the scenario's data law: x uniform on [0,1],
/// label a x + b + e. Features are single-column, within norm bound 1.
Dataset make_regression_dataset(const BiasScenario& scenario, std::size_t n,
                                RngState& rng);

/// Runs classic (gradient-clipping) training on the dataset and reports
/// per iteration the distance between the noiseless batch-average
/// gradient and its clipped counterpart, paired with the clipped
/// average's norm.
std::vector<std::pair<double, double>> clip_error_trajectory(
    const ModelSpec& model, const Dataset& data, const TrainConfig& cfg,
    RngState& rng);

}  // namespace lipdp

#endif  // LIPDP_BIAS_LAB_HPP
