#include "lipdp/sensitivity.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace lipdp {

std::string SensitivityReport::to_text(const ModelSpec& model) const {
  std::string out = "layer  name            X_k          l_k          delta_k      u_k\n";
  char line[160];
  for (std::size_t k = 0; k < delta.size(); ++k) {
    std::snprintf(line, sizeof(line), "%-6zu %-15s %-12.6g %-12.6g %-12.6g %-12.6g\n",
                  k, layer_name(model.layers[k]).c_str(),
                  input_norm_bounds[k], loss_grad_bounds[k], delta[k],
                  weight_norms[k]);
    out += line;
  }
  std::snprintf(line, sizeof(line), "%-6s %-15s %-12.6g %-12.6g\n", "out",
                loss_name(model.loss).c_str(), input_norm_bounds.back(),
                loss_grad_bounds.back());
  out += line;
  return out;
}

SensitivityReport layer_sensitivity(const ModelSpec& model,
                                    const Params& params,
                                    const std::vector<double>& u_theta,
                                    double input_norm_bound,
                                    double loss_grad_bound,
                                    const SensitivityOptions& options) {
  model.validate();
  validate_params(model, params);
  const std::size_t K = model.layers.size();
  if (u_theta.size() != K)
    throw std::invalid_argument("layer_sensitivity: expected " +
                                std::to_string(K) + " weight norms, got " +
                                std::to_string(u_theta.size()));
  if (!(input_norm_bound > 0.0) || !std::isfinite(input_norm_bound))
    throw std::invalid_argument(
        "layer_sensitivity: input_norm_bound must be positive and finite");
  if (!(loss_grad_bound >= 0.0) || !std::isfinite(loss_grad_bound))
    throw std::invalid_argument(
        "layer_sensitivity: loss_grad_bound must be nonnegative and finite");

  if (options.verify_clipped) {
    for (std::size_t k = 0; k < K; ++k) {
      if (!layer_has_params(model.layers[k])) continue;
      const double actual = weight_norm(model.layers[k], params[k],
                                        options.norm_kind,
                                        options.lipschitz.power);
      if (actual > u_theta[k] + options.clip_tolerance)
        throw std::invalid_argument(
            "layer_sensitivity: layer " + std::to_string(k) +
            " parameter norm " + std::to_string(actual) +
            " exceeds its declared clipped norm " +
            std::to_string(u_theta[k]));
    }
  }

  SensitivityReport report;
  report.weight_norms = u_theta;
  report.input_norm_bounds.resize(K + 1);
  report.loss_grad_bounds.resize(K + 1);
  report.delta.assign(K, 0.0);

  report.input_norm_bounds[0] = input_norm_bound;
  for (std::size_t k = 0; k < K; ++k)
    report.input_norm_bounds[k + 1] = propagate_norm_bound(
        model.layers[k], report.input_norm_bounds[k], u_theta[k]);

  report.loss_grad_bounds[K] = loss_grad_bound;
  for (std::size_t k = K; k-- > 0;) {
    const double downstream = report.loss_grad_bounds[k + 1];
    report.loss_grad_bounds[k] =
        downstream *
        input_lipschitz(model.layers[k], params[k], options.lipschitz);
    if (layer_has_params(model.layers[k]))
      report.delta[k] =
          downstream *
          param_lipschitz(model.layers[k], report.input_norm_bounds[k]);
  }
  return report;
}

SensitivityReport layer_sensitivity(const ModelSpec& model,
                                    const Params& params,
                                    double input_norm_bound,
                                    const SensitivityOptions& options) {
  model.validate();
  validate_params(model, params);
  std::vector<double> u(model.layers.size(), 0.0);
  for (std::size_t k = 0; k < model.layers.size(); ++k)
    if (layer_has_params(model.layers[k]))
      u[k] = weight_norm(model.layers[k], params[k], options.norm_kind,
                         options.lipschitz.power);
  SensitivityOptions opts = options;
  opts.verify_clipped = false;  // u is the actual norm by construction
  return layer_sensitivity(model, params, u, input_norm_bound,
                           loss_lipschitz(model.loss), opts);
}

}  // namespace lipdp
