#ifndef LIPDP_OPTIM_HPP
#define LIPDP_OPTIM_HPP

#include <cstddef>
#include <vector>

#include "lipdp/accountant.hpp"
#include "lipdp/model.hpp"
#include "lipdp/rng.hpp"
#include "lipdp/sensitivity.hpp"

namespace lipdp {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class TrainVariant {
  /// Weight clipping plus per-layer sensitivity-calibrated noise.
  kLip,
  /// Per-sample gradient clipping plus single-scale noise.
  kClassic,
  /// Like kLip but weights are rescaled to norm exactly C every step.
  kFix,
};

enum class StepRule { kFixed, kAdam };

/// Divisor of the noised gradient sum: the expected batch size s keeps
/// the averaged query's sensitivity data-independent; the realized
/// batch size |V| matches the update rule as classically written but
/// makes sensitivity depend on the draw.
enum class AveragingMode { kExpectedBatch, kRealizedBatch };

struct TrainConfig {
  long long epochs = 1;                 // T; one noised step per epoch
  double noise_multiplier = 0.0;        // sigma
  std::size_t expected_batch_size = 1;  // s
  double clip_threshold = 1.0;          // C, bounds weight norms (lip/fix)
                                        // or per-sample gradients (classic)
  double learning_rate = 0.1;           // eta, constant across steps
  StepRule step_rule = StepRule::kFixed;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  AveragingMode averaging = AveragingMode::kExpectedBatch;
  double l2_weight = 0.0;  // gamma, public post-noise regularizer
  WeightNorm clip_norm = WeightNorm::kSpectral;
  double input_norm_bound = 1.0;  // X1 the dataset guarantees
  SensitivityOptions sensitivity;

  /// Throws std::invalid_argument on out-of-range fields or
  /// expected_batch_size > dataset_size.
  void validate(std::size_t dataset_size) const;
};

// ---------------------------------------------------------------------------
// Data
// ---------------------------------------------------------------------------

struct Dataset {
  Tensor features;  // n x p, every row norm <= input_norm_bound
  std::vector<double> labels;
  double input_norm_bound = 1.0;

  std::size_t size() const { return labels.size(); }
  Tensor row(std::size_t i) const;

  /// Checks the feature matrix shape, label count, and the row-norm
  /// bound (within 1e-9). Throws std::invalid_argument.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

/// Each index enters independently with probability s/n; the draw is
/// repeated until the batch is non-empty.
std::vector<std::size_t> poisson_sample(std::size_t n, std::size_t s,
                                        RngState& rng);

struct ClipResult {
  std::vector<double> u_theta;  // min(C, pre-clip norm) per layer
  Params params;
};

/// Rescales each parameterized layer with norm above C back to norm C
/// and records u_k = min(C, norm); layers at or below C pass through.
/// force_exact rescales every layer to norm C and reports u_k = C
/// (zero tensors stay zero). The norm is measured per `kind` on the
/// layer's clipping matricization.
ClipResult clip_weights(const ModelSpec& model, Params params, double c,
                        WeightNorm kind = WeightNorm::kSpectral,
                        bool force_exact = false,
                        const SpectralOptions& options = {});

/// Mean loss and dataset-average gradient, noiseless and unclipped.
GradientResult dataset_gradient(const ModelSpec& model, const Params& params,
                                const Dataset& data);

// ---------------------------------------------------------------------------
// Steps
// ---------------------------------------------------------------------------

struct OptimizerState {
  long long step_count = 0;
  Params first_moment;   // allocated on first Adam step
  Params second_moment;
};

struct StepDiagnostics {
  double mean_loss = 0.0;
  std::size_t batch_size = 0;
  /// Norm of the noiseless batch-average gradient (realized-batch
  /// divisor), all layers concatenated.
  double grad_norm = 0.0;
  /// Classic steps only: norm of the batch average of clipped
  /// per-sample gradients, and its distance to the unclipped average.
  double clipped_grad_norm = 0.0;
  double clip_error = 0.0;
};

struct StepResult {
  Params params;
  /// Clipped weight norms after the trailing weight clip; empty for
  /// classic steps, which do not clip weights.
  std::vector<double> u_theta;
  StepDiagnostics diag;
};

/// One update of the weight-clipping algorithm: per layer, the batch
/// gradient sum plus N(0, (sigma Delta_k)^2) noise per coordinate,
/// divided by the averaging-mode batch size, plus gamma theta_k, is fed
/// to the step rule; weights are clipped afterwards. report must come
/// from the current (already clipped) params. force_exact_clip selects
/// the kFix behavior.
StepResult lip_dp_sgd_step(const ModelSpec& model, const Params& params,
                           const Dataset& data,
                           const std::vector<std::size_t>& batch,
                           const SensitivityReport& report,
                           const TrainConfig& cfg, RngState& rng,
                           OptimizerState& opt, bool force_exact_clip = false);

/// One update of the gradient-clipping algorithm: each per-sample
/// gradient is scaled by min(1, C / norm) over the concatenation of all
/// layers, summed, noised with per-coordinate std sigma C, averaged,
/// regularized, and applied. Weights are not clipped.
/// record_clip_error additionally fills the clipped/unclipped average
/// comparison in the diagnostics.
StepResult dp_sgd_step(const ModelSpec& model, const Params& params,
                       const Dataset& data,
                       const std::vector<std::size_t>& batch,
                       const TrainConfig& cfg, RngState& rng,
                       OptimizerState& opt, bool record_clip_error = false);

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct IterationRecord {
  long long iteration = 0;
  double mean_loss = 0.0;
  std::size_t batch_size = 0;
  std::vector<double> weight_norms;  // per layer after the step
  std::vector<double> delta;         // per layer; empty for classic
  double grad_norm = 0.0;
  double clipped_grad_norm = 0.0;
  double clip_error = 0.0;
};

struct TrainOptions {
  bool record_diagnostics = true;
  /// Classic variant: also record the clip-error pair each iteration.
  bool record_clip_error = false;
};

struct TrainResult {
  Params params;
  std::vector<double> u_theta;  // empty for classic
  RdpLedger ledger;
  std::vector<IterationRecord> diagnostics;
};

/// Initializes parameters uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)),
/// clips them (lip/fix), then runs epochs noised steps of the selected
/// variant, one Poisson batch per step, refreshing the sensitivity
/// bounds from the current weights before every step. The ledger
/// records (q = s/n, sigma, step count). Throws std::runtime_error
/// naming the iteration if the batch loss turns non-finite.
TrainResult train(const ModelSpec& model, const Dataset& data,
                  const TrainConfig& cfg, TrainVariant variant, RngState& rng,
                  const TrainOptions& options = {});

}  // namespace lipdp

#endif  // LIPDP_OPTIM_HPP
