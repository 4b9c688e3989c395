#include "lipdp/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lipdp {
namespace {

std::size_t fan_in(const LayerSpec& layer) {
  if (const auto* d = std::get_if<DenseSpec>(&layer)) return d->in_dim;
  const auto& c = std::get<Conv2DSpec>(layer);
  return c.c_in * c.filter_h * c.filter_w;
}

}  // namespace

void validate_params(const ModelSpec& model, const Params& params) {
  if (params.size() != model.layers.size())
    throw std::invalid_argument(
        "expected " + std::to_string(model.layers.size()) +
        " parameter tensors, got " + std::to_string(params.size()));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto want = layer_param_shape(model.layers[k]);
    if (want.empty()) {
      if (!params[k].empty())
        throw std::invalid_argument("layer " + std::to_string(k) +
                                    " takes no parameters");
    } else if (params[k].shape() != want) {
      throw std::invalid_argument("layer " + std::to_string(k) +
                                  ": parameter shape mismatch");
    }
  }
}

Params init_params(const ModelSpec& model, RngState& rng) {
  model.validate();
  Params params;
  params.reserve(model.layers.size());
  for (const auto& layer : model.layers) {
    const auto shape = layer_param_shape(layer);
    if (shape.empty()) {
      params.emplace_back();
      continue;
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in(layer)));
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i)
      t[i] = rng.uniform(-bound, bound);
    params.push_back(std::move(t));
  }
  return params;
}

std::vector<Tensor> forward_activations(const ModelSpec& model,
                                        const Params& params,
                                        const Tensor& input) {
  validate_params(model, params);
  std::vector<Tensor> acts;
  acts.reserve(model.layers.size() + 1);
  acts.push_back(input);
  for (std::size_t k = 0; k < model.layers.size(); ++k)
    acts.push_back(forward(model.layers[k], params[k], acts.back()));
  return acts;
}

Tensor predict(const ModelSpec& model, const Params& params,
               const Tensor& input) {
  return forward_activations(model, params, input).back();
}

GradientResult per_sample_gradient(const ModelSpec& model,
                                   const Params& params, const Tensor& input,
                                   double label) {
  const auto acts = forward_activations(model, params, input);
  const LossEval at_output = loss_value_and_grad(model.loss, acts.back(), label);

  GradientResult result;
  result.loss = at_output.value;
  result.grads.resize(model.layers.size());
  Tensor upstream = at_output.grad;
  for (std::size_t k = model.layers.size(); k-- > 0;) {
    VjpResult step = vjp(model.layers[k], params[k], acts[k], upstream);
    result.grads[k] = std::move(step.grad_params);
    upstream = std::move(step.grad_input);
  }
  return result;
}

}  // namespace lipdp
