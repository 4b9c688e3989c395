#include "lipdp/bias_lab.hpp"

#include <cmath>
#include <stdexcept>

#include "lipdp/quadrature.hpp"

namespace lipdp {

void BiasScenario::validate() const {
  if (errors.empty())
    throw std::invalid_argument("BiasScenario: no error atoms");
  double total = 0.0;
  for (const auto& atom : errors) {
    if (!(atom.probability >= 0.0))
      throw std::invalid_argument("BiasScenario: negative probability");
    total += atom.probability;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("BiasScenario: probabilities sum to " +
                                std::to_string(total) + ", expected 1");
  if (!(clip_threshold > 0.0))
    throw std::invalid_argument("BiasScenario: clip threshold must be > 0");
}

BiasScenario BiasScenario::asymmetric_example() {
  // Mean-zero two-point noise: a rare large error on one side, a frequent
  // small one on the other.  With C = 1 the rare branch is always clipped
  // while near the fixed point the frequent branch is not, which is what
  // shifts the root of the expected clipped gradient away from (a, b).
  // This orientation puts the root at (a + 0.01765, b + 0.94221); flipping
  // every error sign mirrors it to (a - 0.01765, b - 0.94221).
  BiasScenario s;
  s.a = 0.0;
  s.b = 0.0;
  s.errors = {{-9.0, 0.1}, {1.0, 0.9}};
  s.clip_threshold = 1.0;
  return s;
}

double GradientEstimate::norm() const {
  return std::sqrt(slope * slope + intercept * intercept);
}

GradientEstimate point_gradient(const BiasScenario& scenario, double theta1,
                                double theta2, double x, double error,
                                bool clipped) {
  const double r = (theta1 - scenario.a) * x + (theta2 - scenario.b) - error;
  GradientEstimate g{2.0 * r * x, 2.0 * r};
  if (clipped && std::isfinite(scenario.clip_threshold)) {
    const double norm = g.norm();
    if (norm > scenario.clip_threshold) {
      const double scale = scenario.clip_threshold / norm;
      g.slope *= scale;
      g.intercept *= scale;
    }
  }
  return g;
}

GradientEstimate expected_gradient(const BiasScenario& scenario,
                                   double theta1, double theta2, bool clipped,
                                   double abs_tol) {
  scenario.validate();
  GradientEstimate total;
  for (const auto& atom : scenario.errors) {
    const double g1 = integrate(
        [&](double x) {
          return point_gradient(scenario, theta1, theta2, x, atom.value,
                                clipped)
              .slope;
        },
        0.0, 1.0, abs_tol);
    const double g2 = integrate(
        [&](double x) {
          return point_gradient(scenario, theta1, theta2, x, atom.value,
                                clipped)
              .intercept;
        },
        0.0, 1.0, abs_tol);
    total.slope += atom.probability * g1;
    total.intercept += atom.probability * g2;
  }
  return total;
}

FixedPointResult find_clipped_fixed_point(const BiasScenario& scenario,
                                          double tol, int max_iterations) {
  scenario.validate();
  // Quadrature noise in the residual caps how precisely Newton can
  // land, so the inner integrals run an order tighter than tol.
  const double quad_tol = tol * 1e-2;
  FixedPointResult result;
  result.theta1 = scenario.a;
  result.theta2 = scenario.b;
  GradientEstimate g = expected_gradient(scenario, result.theta1,
                                         result.theta2, true, quad_tol);
  result.residual_norm = g.norm();

  const double h = 1e-5;
  for (int it = 0; it < max_iterations && result.residual_norm > tol; ++it) {
    result.iterations = it + 1;
    const auto at = [&](double t1, double t2) {
      return expected_gradient(scenario, t1, t2, true, quad_tol);
    };
    const GradientEstimate gx1 = at(result.theta1 + h, result.theta2);
    const GradientEstimate gx0 = at(result.theta1 - h, result.theta2);
    const GradientEstimate gy1 = at(result.theta1, result.theta2 + h);
    const GradientEstimate gy0 = at(result.theta1, result.theta2 - h);
    const double j11 = (gx1.slope - gx0.slope) / (2.0 * h);
    const double j21 = (gx1.intercept - gx0.intercept) / (2.0 * h);
    const double j12 = (gy1.slope - gy0.slope) / (2.0 * h);
    const double j22 = (gy1.intercept - gy0.intercept) / (2.0 * h);
    const double det = j11 * j22 - j12 * j21;
    double d1;
    double d2;
    if (std::abs(det) > 1e-14) {
      d1 = (j22 * g.slope - j12 * g.intercept) / det;
      d2 = (j11 * g.intercept - j21 * g.slope) / det;
    } else {
      // Singular local Jacobian: fall back on a gradient-descent move.
      d1 = g.slope;
      d2 = g.intercept;
    }

    double step = 1.0;
    bool improved = false;
    for (int half = 0; half < 40; ++half, step *= 0.5) {
      const GradientEstimate trial = at(result.theta1 - step * d1,
                                        result.theta2 - step * d2);
      if (trial.norm() < result.residual_norm) {
        result.theta1 -= step * d1;
        result.theta2 -= step * d2;
        g = trial;
        result.residual_norm = trial.norm();
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  result.converged = result.residual_norm <= tol;
  return result;
}

Dataset make_regression_dataset(const BiasScenario& scenario, std::size_t n,
                                RngState& rng) {
  scenario.validate();
  if (n == 0)
    throw std::invalid_argument("make_regression_dataset: n must be >= 1");
  Dataset data;
  data.input_norm_bound = 1.0;
  data.features = Tensor::zeros({n, 1});
  data.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform();
    double pick = rng.uniform();
    double e = scenario.errors.back().value;
    for (const auto& atom : scenario.errors) {
      if (pick < atom.probability) {
        e = atom.value;
        break;
      }
      pick -= atom.probability;
    }
    data.features.at(i, 0) = x;
    data.labels[i] = scenario.a * x + scenario.b + e;
  }
  return data;
}

std::vector<std::pair<double, double>> clip_error_trajectory(
    const ModelSpec& model, const Dataset& data, const TrainConfig& cfg,
    RngState& rng) {
  TrainOptions options;
  options.record_clip_error = true;
  const TrainResult result =
      train(model, data, cfg, TrainVariant::kClassic, rng, options);
  std::vector<std::pair<double, double>> series;
  series.reserve(result.diagnostics.size());
  for (const auto& rec : result.diagnostics)
    series.emplace_back(rec.clip_error, rec.clipped_grad_norm);
  return series;
}

}  // namespace lipdp
