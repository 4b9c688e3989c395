#ifndef LIPDP_SENSITIVITY_HPP
#define LIPDP_SENSITIVITY_HPP

#include <string>
#include <vector>

#include "lipdp/layers.hpp"
#include "lipdp/model.hpp"

namespace lipdp {

/// Per-layer gradient-sensitivity bounds from a forward pass over input
/// norm bounds and a backward pass over loss-gradient bounds.
struct SensitivityReport {
  /// X_1 .. X_{K+1}: max input norm per position (layers.size() + 1).
  std::vector<double> input_norm_bounds;
  /// l_1 .. l_{K+1}: loss gradient norm bound per position.
  std::vector<double> loss_grad_bounds;
  /// Delta_k = l_{k+1} * param_lipschitz(layer k, X_k); zero for
  /// parameterless layers.
  std::vector<double> delta;
  /// The clipped weight norms u_k the forward pass was run with.
  std::vector<double> weight_norms;

  /// One diagnostic line per layer: index, name, X_k, l_k, Delta_k, u_k,
  /// plus a trailing line for the output position.
  std::string to_text(const ModelSpec& model) const;
};

struct SensitivityOptions {
  /// Norm used for the clipped-parameter precondition check; must match
  /// the norm the weights were clipped with.
  WeightNorm norm_kind = WeightNorm::kSpectral;
  double clip_tolerance = 1e-6;
  /// The declared u_k must dominate the actual parameter norms or the
  /// noise calibration built on this report would be invalid; set to
  /// false only when the caller guarantees it.
  bool verify_clipped = true;
  LipschitzOptions lipschitz;
};

/// Forward pass: X_{k+1} = propagate_norm_bound(layer k, X_k, u_k), the
/// parameterized layers using the declared clipped norms u_theta.
/// Backward pass: l_{K+1} = loss_grad_bound, l_k = l_{k+1} *
/// input_lipschitz(layer k), Delta_k = l_{k+1} * param_lipschitz(layer
/// k, X_k). Throws std::invalid_argument when a parameter norm exceeds
/// its declared u_k by more than clip_tolerance. loss_grad_bound = 0 is
/// accepted and yields all-zero bounds.
SensitivityReport layer_sensitivity(const ModelSpec& model,
                                    const Params& params,
                                    const std::vector<double>& u_theta,
                                    double input_norm_bound,
                                    double loss_grad_bound,
                                    const SensitivityOptions& options = {});

/// Convenience form: u_theta taken as the actual parameter norms and
/// the loss bound as loss_lipschitz(model.loss).
SensitivityReport layer_sensitivity(const ModelSpec& model,
                                    const Params& params,
                                    double input_norm_bound = 1.0,
                                    const SensitivityOptions& options = {});

}  // namespace lipdp

#endif  // LIPDP_SENSITIVITY_HPP
