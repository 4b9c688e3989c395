#include "lipdp/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lipdp {
namespace {

double concat_norm_sq(const Params& grads) {
  double total = 0.0;
  for (const auto& g : grads)
    for (std::size_t i = 0; i < g.size(); ++i) total += g[i] * g[i];
  return total;
}

void accumulate(Params& into, const Params& add, double scale) {
  for (std::size_t k = 0; k < into.size(); ++k)
    for (std::size_t i = 0; i < into[k].size(); ++i)
      into[k][i] += scale * add[k][i];
}

Params zeros_like(const ModelSpec& model) {
  Params out;
  out.reserve(model.layers.size());
  for (const auto& layer : model.layers) {
    const auto shape = layer_param_shape(layer);
    if (shape.empty())
      out.emplace_back();
    else
      out.push_back(Tensor::zeros(shape));
  }
  return out;
}

// Applies the configured step rule to the prepared gradient g (already
// noised, averaged, and regularized).
void apply_update(const ModelSpec& model, Params& params, const Params& g,
                  const TrainConfig& cfg, OptimizerState& opt) {
  if (cfg.step_rule == StepRule::kFixed) {
    for (std::size_t k = 0; k < params.size(); ++k)
      for (std::size_t i = 0; i < params[k].size(); ++i)
        params[k][i] -= cfg.learning_rate * g[k][i];
    return;
  }
  if (opt.first_moment.empty()) {
    opt.first_moment = zeros_like(model);
    opt.second_moment = zeros_like(model);
  }
  opt.step_count += 1;
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(opt.step_count));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(opt.step_count));
  for (std::size_t k = 0; k < params.size(); ++k)
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      double& m = opt.first_moment[k][i];
      double& v = opt.second_moment[k][i];
      m = b1 * m + (1.0 - b1) * g[k][i];
      v = b2 * v + (1.0 - b2) * g[k][i] * g[k][i];
      params[k][i] -= cfg.learning_rate * (m / c1) /
                      (std::sqrt(v / c2) + cfg.adam_epsilon);
    }
}

void check_batch(const std::vector<std::size_t>& batch, std::size_t n) {
  if (batch.empty()) throw std::invalid_argument("batch must be non-empty");
  for (std::size_t i : batch)
    if (i >= n) throw std::invalid_argument("batch index out of range");
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration and data
// ---------------------------------------------------------------------------

void TrainConfig::validate(std::size_t dataset_size) const {
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (!(noise_multiplier >= 0.0))
    throw std::invalid_argument("noise_multiplier must be >= 0");
  if (expected_batch_size < 1 || expected_batch_size > dataset_size)
    throw std::invalid_argument(
        "expected_batch_size must be in [1, dataset size = " +
        std::to_string(dataset_size) + "]");
  if (!(clip_threshold > 0.0))
    throw std::invalid_argument("clip_threshold must be > 0");
  if (!(learning_rate > 0.0))
    throw std::invalid_argument("learning_rate must be > 0");
  if (!(adam_beta1 >= 0.0) || adam_beta1 >= 1.0 || !(adam_beta2 >= 0.0) ||
      adam_beta2 >= 1.0 || !(adam_epsilon > 0.0))
    throw std::invalid_argument("adam parameters out of range");
  if (!(l2_weight >= 0.0)) throw std::invalid_argument("l2_weight must be >= 0");
  if (!(input_norm_bound > 0.0))
    throw std::invalid_argument("input_norm_bound must be > 0");
}

Tensor Dataset::row(std::size_t i) const {
  if (features.rank() != 2 || i >= features.dim(0))
    throw std::invalid_argument("dataset row index out of range");
  const std::size_t p = features.dim(1);
  Tensor out = Tensor::zeros({p});
  for (std::size_t j = 0; j < p; ++j) out[j] = features.at(i, j);
  return out;
}

void Dataset::validate() const {
  if (features.rank() != 2)
    throw std::invalid_argument("dataset features must be an n x p matrix");
  if (features.dim(0) != labels.size())
    throw std::invalid_argument("dataset has " +
                                std::to_string(features.dim(0)) +
                                " feature rows but " +
                                std::to_string(labels.size()) + " labels");
  if (labels.empty()) throw std::invalid_argument("dataset is empty");
  if (!(input_norm_bound > 0.0))
    throw std::invalid_argument("dataset input_norm_bound must be > 0");
  for (std::size_t i = 0; i < features.dim(0); ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < features.dim(1); ++j)
      sq += features.at(i, j) * features.at(i, j);
    if (std::sqrt(sq) > input_norm_bound + 1e-9)
      throw std::invalid_argument("dataset row " + std::to_string(i) +
                                  " violates the input norm bound");
  }
}

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

std::vector<std::size_t> poisson_sample(std::size_t n, std::size_t s,
                                        RngState& rng) {
  if (s < 1 || s > n)
    throw std::invalid_argument("poisson_sample: need 1 <= s <= n");
  const double p = static_cast<double>(s) / static_cast<double>(n);
  std::vector<std::size_t> batch;
  while (batch.empty()) {
    for (std::size_t i = 0; i < n; ++i)
      if (rng.bernoulli(p)) batch.push_back(i);
  }
  return batch;
}

ClipResult clip_weights(const ModelSpec& model, Params params, double c,
                        WeightNorm kind, bool force_exact,
                        const SpectralOptions& options) {
  if (!(c > 0.0)) throw std::invalid_argument("clip_weights: C must be > 0");
  validate_params(model, params);
  ClipResult result;
  result.u_theta.assign(model.layers.size(), 0.0);
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    if (!layer_has_params(model.layers[k])) continue;
    const double norm =
        weight_norm(model.layers[k], params[k], kind, options);
    if (force_exact) {
      // The fixed-norm variant pins every layer to the clipping sphere;
      // an all-zero tensor has no direction and is left in place.
      result.u_theta[k] = c;
      if (norm > 0.0) params[k] *= c / norm;
      continue;
    }
    result.u_theta[k] = std::min(c, norm);
    if (norm > c) params[k] *= c / norm;
  }
  result.params = std::move(params);
  return result;
}

GradientResult dataset_gradient(const ModelSpec& model, const Params& params,
                                const Dataset& data) {
  data.validate();
  GradientResult total;
  total.grads = zeros_like(model);
  for (std::size_t i = 0; i < data.size(); ++i) {
    GradientResult one =
        per_sample_gradient(model, params, data.row(i), data.labels[i]);
    total.loss += one.loss;
    accumulate(total.grads, one.grads, 1.0);
  }
  const double inv = 1.0 / static_cast<double>(data.size());
  total.loss *= inv;
  for (auto& g : total.grads) g *= inv;
  return total;
}

// ---------------------------------------------------------------------------
// Steps
// ---------------------------------------------------------------------------

StepResult lip_dp_sgd_step(const ModelSpec& model, const Params& params,
                           const Dataset& data,
                           const std::vector<std::size_t>& batch,
                           const SensitivityReport& report,
                           const TrainConfig& cfg, RngState& rng,
                           OptimizerState& opt, bool force_exact_clip) {
  check_batch(batch, data.size());
  if (report.delta.size() != model.layers.size())
    throw std::invalid_argument("sensitivity report does not match the model");

  Params sum = zeros_like(model);
  double loss_total = 0.0;
  for (std::size_t i : batch) {
    GradientResult one =
        per_sample_gradient(model, params, data.row(i), data.labels[i]);
    loss_total += one.loss;
    accumulate(sum, one.grads, 1.0);
  }

  const double realized = static_cast<double>(batch.size());
  const double divisor = cfg.averaging == AveragingMode::kExpectedBatch
                             ? static_cast<double>(cfg.expected_batch_size)
                             : realized;

  StepResult result;
  result.diag.mean_loss = loss_total / realized;
  result.diag.batch_size = batch.size();
  result.diag.grad_norm = std::sqrt(concat_norm_sq(sum)) / realized;

  Params update = zeros_like(model);
  Params noised = std::move(sum);
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    if (!layer_has_params(model.layers[k])) continue;
    const Tensor noise =
        gaussian_noise(noised[k].shape(),
                       cfg.noise_multiplier * report.delta[k], rng);
    for (std::size_t i = 0; i < noised[k].size(); ++i)
      update[k][i] = (noised[k][i] + noise[i]) / divisor +
                     cfg.l2_weight * params[k][i];
  }

  result.params = params;
  apply_update(model, result.params, update, cfg, opt);
  ClipResult clipped =
      clip_weights(model, std::move(result.params), cfg.clip_threshold,
                   cfg.clip_norm, force_exact_clip,
                   cfg.sensitivity.lipschitz.power);
  result.params = std::move(clipped.params);
  result.u_theta = std::move(clipped.u_theta);
  return result;
}

StepResult dp_sgd_step(const ModelSpec& model, const Params& params,
                       const Dataset& data,
                       const std::vector<std::size_t>& batch,
                       const TrainConfig& cfg, RngState& rng,
                       OptimizerState& opt, bool record_clip_error) {
  check_batch(batch, data.size());

  Params clipped_sum = zeros_like(model);
  Params raw_sum = zeros_like(model);
  double loss_total = 0.0;
  for (std::size_t i : batch) {
    GradientResult one =
        per_sample_gradient(model, params, data.row(i), data.labels[i]);
    loss_total += one.loss;
    const double norm = std::sqrt(concat_norm_sq(one.grads));
    const double scale =
        norm > cfg.clip_threshold ? cfg.clip_threshold / norm : 1.0;
    accumulate(clipped_sum, one.grads, scale);
    accumulate(raw_sum, one.grads, 1.0);
  }

  const double realized = static_cast<double>(batch.size());
  const double divisor = cfg.averaging == AveragingMode::kExpectedBatch
                             ? static_cast<double>(cfg.expected_batch_size)
                             : realized;

  StepResult result;
  result.diag.mean_loss = loss_total / realized;
  result.diag.batch_size = batch.size();
  result.diag.grad_norm = std::sqrt(concat_norm_sq(raw_sum)) / realized;
  if (record_clip_error) {
    double diff_sq = 0.0;
    for (std::size_t k = 0; k < raw_sum.size(); ++k)
      for (std::size_t i = 0; i < raw_sum[k].size(); ++i) {
        const double d = (raw_sum[k][i] - clipped_sum[k][i]) / realized;
        diff_sq += d * d;
      }
    result.diag.clip_error = std::sqrt(diff_sq);
    result.diag.clipped_grad_norm =
        std::sqrt(concat_norm_sq(clipped_sum)) / realized;
  }

  Params update = zeros_like(model);
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    if (!layer_has_params(model.layers[k])) continue;
    const Tensor noise = gaussian_noise(
        clipped_sum[k].shape(),
        cfg.noise_multiplier * cfg.clip_threshold, rng);
    for (std::size_t i = 0; i < clipped_sum[k].size(); ++i)
      update[k][i] = (clipped_sum[k][i] + noise[i]) / divisor +
                     cfg.l2_weight * params[k][i];
  }

  result.params = params;
  apply_update(model, result.params, update, cfg, opt);
  return result;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

TrainResult train(const ModelSpec& model, const Dataset& data,
                  const TrainConfig& cfg, TrainVariant variant, RngState& rng,
                  const TrainOptions& options) {
  model.validate();
  data.validate();
  cfg.validate(data.size());
  if (data.input_norm_bound > cfg.input_norm_bound + 1e-9)
    throw std::invalid_argument(
        "dataset norm bound exceeds the configured input_norm_bound");

  const std::size_t n = data.size();
  const double q = static_cast<double>(cfg.expected_batch_size) /
                   static_cast<double>(n);

  Params params = init_params(model, rng);
  std::vector<double> u_theta;
  if (variant != TrainVariant::kClassic) {
    ClipResult clipped = clip_weights(model, std::move(params),
                                      cfg.clip_threshold, cfg.clip_norm,
                                      variant == TrainVariant::kFix,
                                      cfg.sensitivity.lipschitz.power);
    params = std::move(clipped.params);
    u_theta = std::move(clipped.u_theta);
  }

  TrainResult result{{}, {}, RdpLedger(q, cfg.noise_multiplier), {}};
  OptimizerState opt;
  SensitivityOptions sens = cfg.sensitivity;
  sens.norm_kind = cfg.clip_norm;
  sens.verify_clipped = false;  // the loop clips before every report

  for (long long t = 0; t < cfg.epochs; ++t) {
    StepResult step;
    std::vector<double> delta;
    if (variant == TrainVariant::kClassic) {
      const auto batch = poisson_sample(n, cfg.expected_batch_size, rng);
      step = dp_sgd_step(model, params, data, batch, cfg, rng, opt,
                         options.record_clip_error);
    } else {
      const SensitivityReport report = layer_sensitivity(
          model, params, u_theta, cfg.input_norm_bound,
          loss_lipschitz(model.loss), sens);
      delta = report.delta;
      const auto batch = poisson_sample(n, cfg.expected_batch_size, rng);
      step = lip_dp_sgd_step(model, params, data, batch, report, cfg, rng,
                             opt, variant == TrainVariant::kFix);
      u_theta = step.u_theta;
    }
    params = std::move(step.params);
    result.ledger.add_steps(1);

    if (!std::isfinite(step.diag.mean_loss))
      throw std::runtime_error("training aborted at iteration " +
                               std::to_string(t) + ": non-finite loss");

    if (options.record_diagnostics) {
      IterationRecord rec;
      rec.iteration = t;
      rec.mean_loss = step.diag.mean_loss;
      rec.batch_size = step.diag.batch_size;
      rec.grad_norm = step.diag.grad_norm;
      rec.clipped_grad_norm = step.diag.clipped_grad_norm;
      rec.clip_error = step.diag.clip_error;
      rec.delta = delta;
      if (variant == TrainVariant::kClassic) {
        rec.weight_norms.assign(model.layers.size(), 0.0);
        for (std::size_t k = 0; k < model.layers.size(); ++k)
          if (layer_has_params(model.layers[k]))
            rec.weight_norms[k] =
                weight_norm(model.layers[k], params[k], cfg.clip_norm,
                            cfg.sensitivity.lipschitz.power);
      } else {
        rec.weight_norms = u_theta;
      }
      result.diagnostics.push_back(std::move(rec));
    }
  }

  result.params = std::move(params);
  result.u_theta = std::move(u_theta);
  return result;
}

}  // namespace lipdp
