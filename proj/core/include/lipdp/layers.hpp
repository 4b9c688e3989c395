#ifndef LIPDP_LAYERS_HPP
#define LIPDP_LAYERS_HPP

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "lipdp/linalg.hpp"
#include "lipdp/tensor.hpp"

namespace lipdp {

// ---------------------------------------------------------------------------
// Layer descriptions
// ---------------------------------------------------------------------------

enum class ActivationKind { kReLU, kTanh, kSigmoid };

/// Fully connected layer computing W^T x (+ B). Parameters are stored as
/// one matrix of shape (in_dim, out_dim), or (in_dim + 1, out_dim) with
/// the bias in the last row so that the layer acts on the augmented
/// input (x, 1) and weight clipping covers weights and bias jointly.
struct DenseSpec {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  bool with_bias = false;
};

/// 2D convolution, stride 1, zero padding, output spatial size equal to
/// the input's. Input and output are flat vectors in (channel, row, col)
/// row-major order; the filter bank has shape
/// (c_out, c_in, filter_h, filter_w).
struct Conv2DSpec {
  std::size_t c_in = 0;
  std::size_t c_out = 0;
  std::size_t in_h = 0;
  std::size_t in_w = 0;
  std::size_t filter_h = 0;
  std::size_t filter_w = 0;
};

/// Group normalization with a clamped denominator: per group,
/// (x - mean) / max(alpha, sqrt(var + kappa)). The clamp makes the layer
/// (1/alpha)-Lipschitz regardless of the data. No trainable parameters.
struct GroupNormSpec {
  std::vector<std::vector<std::size_t>> groups;
  double alpha = 1.0;
  double kappa = 1e-5;

  /// Contiguous equal-size groups over [0, dim). dim must be divisible
  /// by group_count.
  static GroupNormSpec contiguous(std::size_t dim, std::size_t group_count,
                                  double alpha, double kappa = 1e-5);
};

struct ActivationSpec {
  ActivationKind kind = ActivationKind::kReLU;
  std::size_t dim = 0;
};

using LayerSpec =
    std::variant<DenseSpec, Conv2DSpec, GroupNormSpec, ActivationSpec>;

std::size_t layer_in_dim(const LayerSpec& layer);
std::size_t layer_out_dim(const LayerSpec& layer);
bool layer_has_params(const LayerSpec& layer);

/// Shape of the parameter tensor; empty for parameterless layers.
std::vector<std::size_t> layer_param_shape(const LayerSpec& layer);

std::string layer_name(const LayerSpec& layer);

/// Validates internal consistency (partition disjoint and covering,
/// positive hyperparameters, positive dims). Throws std::invalid_argument
/// with the layer index on failure.
void validate_layer(const LayerSpec& layer, std::size_t index);

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// Cross entropy of softmax(logits / temperature) against an integer
/// class label. Gradient norm is bounded by sqrt(2) / temperature.
struct SoftmaxCrossEntropy {
  double temperature = 1.0;
};

/// max(0, margin/2 - <output, onehot(label)>); gradient norm at most 1.
struct MulticlassHinge {
  double margin = 1.0;
};

/// 1 - cos(output, onehot(label)). The gradient bound
/// 1 / min_output_norm only holds for outputs with norm at least
/// min_output_norm; smaller outputs are rejected.
struct CosineSimilarity {
  double min_output_norm = 0.1;
};

/// (output[0] - target)^2 for scalar regression heads. The caller
/// declares gradient_bound >= 2 |output - target| over the admissible
/// data; evaluations outside that range are rejected so the declared
/// loss-gradient bound stays valid.
struct SquaredError {
  double gradient_bound = 1.0;
};

using LossSpec = std::variant<SoftmaxCrossEntropy, MulticlassHinge,
                              CosineSimilarity, SquaredError>;

std::string loss_name(const LossSpec& loss);
void validate_loss(const LossSpec& loss);

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

struct ModelSpec {
  std::vector<LayerSpec> layers;
  LossSpec loss;

  std::size_t input_dim() const;
  std::size_t output_dim() const;

  /// Checks every layer plus the dimension chain between consecutive
  /// layers. Throws std::invalid_argument naming the offending layer.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Layer output x_{k+1}. params must match layer_param_shape (empty for
/// parameterless layers); dimension mismatches throw.
Tensor forward(const LayerSpec& layer, const Tensor& params, const Tensor& x);

struct VjpResult {
  Tensor grad_input;
  Tensor grad_params;  // empty for parameterless layers
};

/// Exact vector-Jacobian products: upstream^T dx_{k+1}/dx_k and
/// upstream^T dx_{k+1}/dtheta_k.
VjpResult vjp(const LayerSpec& layer, const Tensor& params, const Tensor& x,
              const Tensor& upstream);

struct LossEval {
  double value = 0.0;
  Tensor grad;  // w.r.t. the model output
};

/// For classification losses, label is the class index; for SquaredError
/// it is the real-valued target.
LossEval loss_value_and_grad(const LossSpec& loss, const Tensor& output,
                             double label);

// ---------------------------------------------------------------------------
// Lipschitz bounds
// ---------------------------------------------------------------------------

struct LipschitzOptions {
  /// Table value 1/2 for the sigmoid by default; the sharp constant 1/4
  /// is available behind this flag.
  bool tight_sigmoid = false;
  SpectralOptions power;
};

/// Upper bound on ||d layer(x) / dx||_2 over admissible inputs:
/// Dense -> ||W||_2 (weight block only), Conv2D ->
/// sqrt(h'w') ||theta||_2 of the (c_out, c_in h'w') matricization,
/// GroupNorm -> 1/alpha, ReLU/Tanh -> 1, Sigmoid -> 1/2 (or 1/4).
double input_lipschitz(const LayerSpec& layer, const Tensor& params,
                       const LipschitzOptions& options = {});

/// Upper bound on ||d layer(x) / dtheta||_2 given ||x|| <= input_bound:
/// Dense -> input_bound (sqrt(input_bound^2 + 1) with bias), Conv2D ->
/// sqrt(h'w') input_bound, parameterless layers -> 0.
double param_lipschitz(const LayerSpec& layer, double input_bound);

/// Forward rule for the maximal output norm given ||x|| <= input_bound
/// and a clipped weight norm of at most weight_norm_bound:
/// Dense -> u X (u sqrt(X^2+1) with bias), Conv2D -> sqrt(h'w') u X,
/// GroupNorm -> min(sqrt(dim), X/alpha), ReLU/Tanh -> X,
/// Sigmoid -> sqrt(dim) (bounded range; sigmoid(0) != 0 rules out the
/// ratio rule).
double propagate_norm_bound(const LayerSpec& layer, double input_bound,
                            double weight_norm_bound);

/// Upper bound on the loss gradient norm over admissible outputs:
/// SoftmaxCE -> sqrt(2)/tau, Hinge -> 1, Cosine -> 1/min_output_norm,
/// SquaredError -> the declared gradient_bound.
double loss_lipschitz(const LossSpec& loss);

/// Norm of a layer's parameter tensor under the matricization used for
/// weight clipping: Dense uses the stored matrix, Conv2D the
/// (c_out, c_in h'w') flattening.
double weight_norm(const LayerSpec& layer, const Tensor& params,
                   WeightNorm kind, const SpectralOptions& options = {});

}  // namespace lipdp

#endif  // LIPDP_LAYERS_HPP
