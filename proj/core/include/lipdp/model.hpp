#ifndef LIPDP_MODEL_HPP
#define LIPDP_MODEL_HPP

#include <vector>

#include "lipdp/layers.hpp"
#include "lipdp/rng.hpp"
#include "lipdp/tensor.hpp"

namespace lipdp {

/// One tensor per layer, empty for parameterless layers.
using Params = std::vector<Tensor>;

/// Throws std::invalid_argument unless params has one entry per layer
/// with the shape reported by layer_param_shape.
void validate_params(const ModelSpec& model, const Params& params);

/// Parameter tensors drawn i.i.d. uniform on (-1/sqrt(fan_in),
/// 1/sqrt(fan_in)); fan_in is the dense input width or the conv
/// receptive field size c_in * filter_h * filter_w.
Params init_params(const ModelSpec& model, RngState& rng);

/// Activations x_1 .. x_{K+1}: the input followed by every layer
/// output, so the result has layers.size() + 1 entries.
std::vector<Tensor> forward_activations(const ModelSpec& model,
                                        const Params& params,
                                        const Tensor& input);

/// Model output for a single input (last entry of the activation chain).
Tensor predict(const ModelSpec& model, const Params& params,
               const Tensor& input);

struct GradientResult {
  double loss = 0.0;
  Params grads;  // same layout as the parameters
};

/// Loss and exact parameter gradient for one example via reverse-mode
/// accumulation through the layer vector-Jacobian products.
GradientResult per_sample_gradient(const ModelSpec& model,
                                   const Params& params, const Tensor& input,
                                   double label);

}  // namespace lipdp

#endif  // LIPDP_MODEL_HPP
