#include "lipdp/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace lipdp {
namespace {

std::size_t conv_spatial(const Conv2DSpec& c) { return c.in_h * c.in_w; }

std::size_t group_total(const GroupNormSpec& g) {
  std::size_t n = 0;
  for (const auto& idx : g.groups) n += idx.size();
  return n;
}

void require_param_shape(const LayerSpec& layer, const Tensor& params) {
  const auto want = layer_param_shape(layer);
  if (want.empty()) {
    if (!params.empty())
      throw std::invalid_argument(layer_name(layer) +
                                  ": layer takes no parameters");
    return;
  }
  if (params.shape() != want)
    throw std::invalid_argument(layer_name(layer) +
                                ": parameter shape mismatch");
}

void require_input(const LayerSpec& layer, const Tensor& x) {
  if (x.rank() != 1 || x.size() != layer_in_dim(layer))
    throw std::invalid_argument(layer_name(layer) + ": input size mismatch");
}

std::size_t class_index(const std::string& loss, double label,
                        std::size_t dim) {
  if (!(label >= 0) || label >= static_cast<double>(dim) ||
      label != std::floor(label))
    throw std::invalid_argument(loss + ": label " + std::to_string(label) +
                                " is not a class index below " +
                                std::to_string(dim));
  return static_cast<std::size_t>(label);
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

// ---------------------------------------------------------------------------
// Specs
// ---------------------------------------------------------------------------

GroupNormSpec GroupNormSpec::contiguous(std::size_t dim,
                                        std::size_t group_count, double alpha,
                                        double kappa) {
  if (group_count == 0 || dim % group_count != 0)
    throw std::invalid_argument(
        "GroupNorm: dim must be divisible by group_count");
  GroupNormSpec spec;
  spec.alpha = alpha;
  spec.kappa = kappa;
  const std::size_t size = dim / group_count;
  for (std::size_t g = 0; g < group_count; ++g) {
    std::vector<std::size_t> idx(size);
    for (std::size_t i = 0; i < size; ++i) idx[i] = g * size + i;
    spec.groups.push_back(std::move(idx));
  }
  return spec;
}

std::size_t layer_in_dim(const LayerSpec& layer) {
  return std::visit(
      [](const auto& l) -> std::size_t {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, DenseSpec>) return l.in_dim;
        if constexpr (std::is_same_v<T, Conv2DSpec>)
          return l.c_in * conv_spatial(l);
        if constexpr (std::is_same_v<T, GroupNormSpec>) return group_total(l);
        if constexpr (std::is_same_v<T, ActivationSpec>) return l.dim;
      },
      layer);
}

std::size_t layer_out_dim(const LayerSpec& layer) {
  return std::visit(
      [](const auto& l) -> std::size_t {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, DenseSpec>) return l.out_dim;
        if constexpr (std::is_same_v<T, Conv2DSpec>)
          return l.c_out * conv_spatial(l);
        if constexpr (std::is_same_v<T, GroupNormSpec>) return group_total(l);
        if constexpr (std::is_same_v<T, ActivationSpec>) return l.dim;
      },
      layer);
}

bool layer_has_params(const LayerSpec& layer) {
  return std::holds_alternative<DenseSpec>(layer) ||
         std::holds_alternative<Conv2DSpec>(layer);
}

std::vector<std::size_t> layer_param_shape(const LayerSpec& layer) {
  if (const auto* d = std::get_if<DenseSpec>(&layer))
    return {d->in_dim + (d->with_bias ? 1 : 0), d->out_dim};
  if (const auto* c = std::get_if<Conv2DSpec>(&layer))
    return {c->c_out, c->c_in, c->filter_h, c->filter_w};
  return {};
}

std::string layer_name(const LayerSpec& layer) {
  return std::visit(
      [](const auto& l) -> std::string {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, DenseSpec>)
          return l.with_bias ? "Dense+bias" : "Dense";
        if constexpr (std::is_same_v<T, Conv2DSpec>) return "Conv2D";
        if constexpr (std::is_same_v<T, GroupNormSpec>) return "GroupNorm";
        if constexpr (std::is_same_v<T, ActivationSpec>) {
          switch (l.kind) {
            case ActivationKind::kReLU: return "ReLU";
            case ActivationKind::kTanh: return "Tanh";
            case ActivationKind::kSigmoid: return "Sigmoid";
          }
          return "Activation";
        }
      },
      layer);
}

void validate_layer(const LayerSpec& layer, std::size_t index) {
  const std::string where = "layer " + std::to_string(index) + " (" +
                            layer_name(layer) + "): ";
  if (const auto* d = std::get_if<DenseSpec>(&layer)) {
    if (d->in_dim == 0 || d->out_dim == 0)
      throw std::invalid_argument(where + "dimensions must be positive");
  } else if (const auto* c = std::get_if<Conv2DSpec>(&layer)) {
    if (c->c_in == 0 || c->c_out == 0 || c->in_h == 0 || c->in_w == 0 ||
        c->filter_h == 0 || c->filter_w == 0)
      throw std::invalid_argument(where + "dimensions must be positive");
  } else if (const auto* g = std::get_if<GroupNormSpec>(&layer)) {
    if (!(g->alpha > 0.0))
      throw std::invalid_argument(where + "alpha must be positive");
    if (!(g->kappa >= 0.0))
      throw std::invalid_argument(where + "kappa must be nonnegative");
    const std::size_t dim = group_total(*g);
    if (dim == 0) throw std::invalid_argument(where + "no indices");
    std::vector<bool> seen(dim, false);
    for (const auto& idx : g->groups) {
      if (idx.empty()) throw std::invalid_argument(where + "empty group");
      for (std::size_t i : idx) {
        if (i >= dim || seen[i])
          throw std::invalid_argument(
              where + "groups must partition the coordinate range");
        seen[i] = true;
      }
    }
  } else if (const auto* a = std::get_if<ActivationSpec>(&layer)) {
    if (a->dim == 0)
      throw std::invalid_argument(where + "dim must be positive");
  }
}

std::string loss_name(const LossSpec& loss) {
  return std::visit(
      [](const auto& l) -> std::string {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, SoftmaxCrossEntropy>)
          return "SoftmaxCrossEntropy";
        if constexpr (std::is_same_v<T, MulticlassHinge>)
          return "MulticlassHinge";
        if constexpr (std::is_same_v<T, CosineSimilarity>)
          return "CosineSimilarity";
        if constexpr (std::is_same_v<T, SquaredError>) return "SquaredError";
      },
      loss);
}

void validate_loss(const LossSpec& loss) {
  if (const auto* s = std::get_if<SoftmaxCrossEntropy>(&loss)) {
    if (!(s->temperature > 0.0))
      throw std::invalid_argument(
          "SoftmaxCrossEntropy: temperature must be positive");
  } else if (const auto* h = std::get_if<MulticlassHinge>(&loss)) {
    if (!(h->margin > 0.0))
      throw std::invalid_argument("MulticlassHinge: margin must be positive");
  } else if (const auto* c = std::get_if<CosineSimilarity>(&loss)) {
    if (!(c->min_output_norm > 0.0))
      throw std::invalid_argument(
          "CosineSimilarity: min_output_norm must be positive");
  } else if (const auto* q = std::get_if<SquaredError>(&loss)) {
    if (!(q->gradient_bound > 0.0))
      throw std::invalid_argument(
          "SquaredError: gradient_bound must be positive");
  }
}

std::size_t ModelSpec::input_dim() const {
  if (layers.empty()) throw std::invalid_argument("model has no layers");
  return layer_in_dim(layers.front());
}

std::size_t ModelSpec::output_dim() const {
  if (layers.empty()) throw std::invalid_argument("model has no layers");
  return layer_out_dim(layers.back());
}

void ModelSpec::validate() const {
  if (layers.empty()) throw std::invalid_argument("model has no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    validate_layer(layers[k], k);
    if (k + 1 < layers.size() &&
        layer_out_dim(layers[k]) != layer_in_dim(layers[k + 1]))
      throw std::invalid_argument(
          "layer " + std::to_string(k) + " outputs " +
          std::to_string(layer_out_dim(layers[k])) + " values but layer " +
          std::to_string(k + 1) + " expects " +
          std::to_string(layer_in_dim(layers[k + 1])));
  }
  validate_loss(loss);
  if (std::holds_alternative<SquaredError>(loss) && output_dim() != 1)
    throw std::invalid_argument(
        "SquaredError requires a one-dimensional model output");
}

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

namespace {

Tensor dense_forward(const DenseSpec& d, const Tensor& w, const Tensor& x) {
  Tensor y = Tensor::zeros({d.out_dim});
  for (std::size_t j = 0; j < d.out_dim; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < d.in_dim; ++i) acc += w.at(i, j) * x[i];
    if (d.with_bias) acc += w.at(d.in_dim, j);
    y[j] = acc;
  }
  return y;
}

// Stride-1 convolution with zero padding keeping the spatial size. The
// filter is anchored so that output (r, c) reads input rows
// r - pad_h .. r - pad_h + filter_h - 1, pad_h = (filter_h - 1) / 2.
Tensor conv_forward(const Conv2DSpec& c, const Tensor& k, const Tensor& x) {
  const std::size_t ph = (c.filter_h - 1) / 2;
  const std::size_t pw = (c.filter_w - 1) / 2;
  Tensor y = Tensor::zeros({c.c_out * conv_spatial(c)});
  for (std::size_t co = 0; co < c.c_out; ++co)
    for (std::size_t r = 0; r < c.in_h; ++r)
      for (std::size_t col = 0; col < c.in_w; ++col) {
        double acc = 0.0;
        for (std::size_t ci = 0; ci < c.c_in; ++ci)
          for (std::size_t fr = 0; fr < c.filter_h; ++fr) {
            const std::ptrdiff_t ir =
                static_cast<std::ptrdiff_t>(r + fr) -
                static_cast<std::ptrdiff_t>(ph);
            if (ir < 0 || ir >= static_cast<std::ptrdiff_t>(c.in_h)) continue;
            for (std::size_t fc = 0; fc < c.filter_w; ++fc) {
              const std::ptrdiff_t ic =
                  static_cast<std::ptrdiff_t>(col + fc) -
                  static_cast<std::ptrdiff_t>(pw);
              if (ic < 0 || ic >= static_cast<std::ptrdiff_t>(c.in_w))
                continue;
              acc += k[((co * c.c_in + ci) * c.filter_h + fr) * c.filter_w +
                       fc] *
                     x[(ci * c.in_h + static_cast<std::size_t>(ir)) * c.in_w +
                       static_cast<std::size_t>(ic)];
            }
          }
        y[(co * c.in_h + r) * c.in_w + col] = acc;
      }
  return y;
}

Tensor group_norm_forward(const GroupNormSpec& g, const Tensor& x) {
  Tensor y = Tensor::zeros({x.size()});
  for (const auto& idx : g.groups) {
    const double n = static_cast<double>(idx.size());
    double mean = 0.0;
    for (std::size_t i : idx) mean += x[i];
    mean /= n;
    double var = 0.0;
    for (std::size_t i : idx) var += (x[i] - mean) * (x[i] - mean);
    var /= n;
    const double denom = std::max(g.alpha, std::sqrt(var + g.kappa));
    for (std::size_t i : idx) y[i] = (x[i] - mean) / denom;
  }
  return y;
}

Tensor activation_forward(const ActivationSpec& a, const Tensor& x) {
  Tensor y = Tensor::zeros({x.size()});
  for (std::size_t i = 0; i < x.size(); ++i) {
    switch (a.kind) {
      case ActivationKind::kReLU: y[i] = std::max(0.0, x[i]); break;
      case ActivationKind::kTanh: y[i] = std::tanh(x[i]); break;
      case ActivationKind::kSigmoid: y[i] = sigmoid(x[i]); break;
    }
  }
  return y;
}

}  // namespace

Tensor forward(const LayerSpec& layer, const Tensor& params, const Tensor& x) {
  require_param_shape(layer, params);
  require_input(layer, x);
  if (const auto* d = std::get_if<DenseSpec>(&layer))
    return dense_forward(*d, params, x);
  if (const auto* c = std::get_if<Conv2DSpec>(&layer))
    return conv_forward(*c, params, x);
  if (const auto* g = std::get_if<GroupNormSpec>(&layer))
    return group_norm_forward(*g, x);
  return activation_forward(std::get<ActivationSpec>(layer), x);
}

// ---------------------------------------------------------------------------
// Vector-Jacobian products
// ---------------------------------------------------------------------------

namespace {

VjpResult dense_vjp(const DenseSpec& d, const Tensor& w, const Tensor& x,
                    const Tensor& u) {
  VjpResult out;
  out.grad_input = Tensor::zeros({d.in_dim});
  out.grad_params = Tensor::zeros({d.in_dim + (d.with_bias ? 1 : 0),
                                   d.out_dim});
  for (std::size_t i = 0; i < d.in_dim; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d.out_dim; ++j) {
      acc += w.at(i, j) * u[j];
      out.grad_params.at(i, j) = x[i] * u[j];
    }
    out.grad_input[i] = acc;
  }
  if (d.with_bias)
    for (std::size_t j = 0; j < d.out_dim; ++j)
      out.grad_params.at(d.in_dim, j) = u[j];
  return out;
}

VjpResult conv_vjp(const Conv2DSpec& c, const Tensor& k, const Tensor& x,
                   const Tensor& u) {
  const std::size_t ph = (c.filter_h - 1) / 2;
  const std::size_t pw = (c.filter_w - 1) / 2;
  VjpResult out;
  out.grad_input = Tensor::zeros({c.c_in * conv_spatial(c)});
  out.grad_params =
      Tensor::zeros({c.c_out, c.c_in, c.filter_h, c.filter_w});
  for (std::size_t co = 0; co < c.c_out; ++co)
    for (std::size_t r = 0; r < c.in_h; ++r)
      for (std::size_t col = 0; col < c.in_w; ++col) {
        const double up = u[(co * c.in_h + r) * c.in_w + col];
        if (up == 0.0) continue;
        for (std::size_t ci = 0; ci < c.c_in; ++ci)
          for (std::size_t fr = 0; fr < c.filter_h; ++fr) {
            const std::ptrdiff_t ir =
                static_cast<std::ptrdiff_t>(r + fr) -
                static_cast<std::ptrdiff_t>(ph);
            if (ir < 0 || ir >= static_cast<std::ptrdiff_t>(c.in_h)) continue;
            for (std::size_t fc = 0; fc < c.filter_w; ++fc) {
              const std::ptrdiff_t ic =
                  static_cast<std::ptrdiff_t>(col + fc) -
                  static_cast<std::ptrdiff_t>(pw);
              if (ic < 0 || ic >= static_cast<std::ptrdiff_t>(c.in_w))
                continue;
              const std::size_t ki =
                  ((co * c.c_in + ci) * c.filter_h + fr) * c.filter_w + fc;
              const std::size_t xi =
                  (ci * c.in_h + static_cast<std::size_t>(ir)) * c.in_w +
                  static_cast<std::size_t>(ic);
              out.grad_input[xi] += k[ki] * up;
              out.grad_params[ki] += x[xi] * up;
            }
          }
      }
  return out;
}

VjpResult group_norm_vjp(const GroupNormSpec& g, const Tensor& x,
                         const Tensor& u) {
  VjpResult out;
  out.grad_input = Tensor::zeros({x.size()});
  for (const auto& idx : g.groups) {
    const double n = static_cast<double>(idx.size());
    double mean = 0.0;
    for (std::size_t i : idx) mean += x[i];
    mean /= n;
    double var = 0.0;
    for (std::size_t i : idx) var += (x[i] - mean) * (x[i] - mean);
    var /= n;
    const double s = std::sqrt(var + g.kappa);
    double ubar = 0.0;
    for (std::size_t i : idx) ubar += u[i];
    ubar /= n;
    if (s <= g.alpha) {
      // Clamped branch: the denominator is the constant alpha, only the
      // centering contributes to the Jacobian.
      for (std::size_t i : idx) out.grad_input[i] = (u[i] - ubar) / g.alpha;
    } else {
      double uc = 0.0;
      for (std::size_t i : idx) uc += u[i] * (x[i] - mean);
      for (std::size_t i : idx)
        out.grad_input[i] =
            (u[i] - ubar) / s - (x[i] - mean) * uc / (n * s * s * s);
    }
  }
  return out;
}

VjpResult activation_vjp(const ActivationSpec& a, const Tensor& x,
                         const Tensor& u) {
  VjpResult out;
  out.grad_input = Tensor::zeros({x.size()});
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = 0.0;
    switch (a.kind) {
      case ActivationKind::kReLU: d = x[i] > 0.0 ? 1.0 : 0.0; break;
      case ActivationKind::kTanh: {
        const double t = std::tanh(x[i]);
        d = 1.0 - t * t;
        break;
      }
      case ActivationKind::kSigmoid: {
        const double s = sigmoid(x[i]);
        d = s * (1.0 - s);
        break;
      }
    }
    out.grad_input[i] = d * u[i];
  }
  return out;
}

}  // namespace

VjpResult vjp(const LayerSpec& layer, const Tensor& params, const Tensor& x,
              const Tensor& upstream) {
  require_param_shape(layer, params);
  require_input(layer, x);
  if (upstream.rank() != 1 || upstream.size() != layer_out_dim(layer))
    throw std::invalid_argument(layer_name(layer) +
                                ": upstream size mismatch");
  if (const auto* d = std::get_if<DenseSpec>(&layer))
    return dense_vjp(*d, params, x, upstream);
  if (const auto* c = std::get_if<Conv2DSpec>(&layer))
    return conv_vjp(*c, params, x, upstream);
  if (const auto* g = std::get_if<GroupNormSpec>(&layer))
    return group_norm_vjp(*g, x, upstream);
  return activation_vjp(std::get<ActivationSpec>(layer), x, upstream);
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

LossEval loss_value_and_grad(const LossSpec& loss, const Tensor& output,
                             double label) {
  if (output.rank() != 1 || output.empty())
    throw std::invalid_argument(loss_name(loss) +
                                ": output must be a nonempty vector");
  const std::size_t dim = output.size();
  LossEval eval;
  eval.grad = Tensor::zeros({dim});

  if (const auto* s = std::get_if<SoftmaxCrossEntropy>(&loss)) {
    const std::size_t y = class_index("SoftmaxCrossEntropy", label, dim);
    const double tau = s->temperature;
    double zmax = output[0] / tau;
    for (std::size_t i = 1; i < dim; ++i) zmax = std::max(zmax, output[i] / tau);
    double total = 0.0;
    for (std::size_t i = 0; i < dim; ++i)
      total += std::exp(output[i] / tau - zmax);
    const double lse = zmax + std::log(total);
    eval.value = lse - output[y] / tau;
    for (std::size_t i = 0; i < dim; ++i) {
      const double p = std::exp(output[i] / tau - lse);
      eval.grad[i] = (p - (i == y ? 1.0 : 0.0)) / tau;
    }
    return eval;
  }

  if (const auto* h = std::get_if<MulticlassHinge>(&loss)) {
    const std::size_t y = class_index("MulticlassHinge", label, dim);
    const double slack = h->margin / 2.0 - output[y];
    if (slack > 0.0) {
      eval.value = slack;
      eval.grad[y] = -1.0;
    }
    return eval;
  }

  if (const auto* c = std::get_if<CosineSimilarity>(&loss)) {
    const std::size_t y = class_index("CosineSimilarity", label, dim);
    const double norm = euclidean_norm(output);
    if (norm < c->min_output_norm)
      throw std::domain_error(
          "CosineSimilarity: output norm " + std::to_string(norm) +
          " is below the declared minimum " +
          std::to_string(c->min_output_norm));
    const double cosine = output[y] / norm;
    eval.value = 1.0 - cosine;
    for (std::size_t i = 0; i < dim; ++i)
      eval.grad[i] = cosine * output[i] / (norm * norm) -
                     (i == y ? 1.0 : 0.0) / norm;
    return eval;
  }

  const auto& q = std::get<SquaredError>(loss);
  if (dim != 1)
    throw std::invalid_argument("SquaredError: output must be scalar");
  const double r = output[0] - label;
  if (std::abs(2.0 * r) > q.gradient_bound)
    throw std::domain_error(
        "SquaredError: |gradient| " + std::to_string(std::abs(2.0 * r)) +
        " exceeds the declared bound " + std::to_string(q.gradient_bound));
  eval.value = r * r;
  eval.grad[0] = 2.0 * r;
  return eval;
}

// ---------------------------------------------------------------------------
// Lipschitz bounds
// ---------------------------------------------------------------------------

namespace {

// Dense weights without the bias row; the input-Lipschitz constant only
// involves the part multiplying x.
Tensor dense_weight_block(const DenseSpec& d, const Tensor& w) {
  if (!d.with_bias) return w;
  Tensor block = Tensor::zeros({d.in_dim, d.out_dim});
  for (std::size_t i = 0; i < d.in_dim; ++i)
    for (std::size_t j = 0; j < d.out_dim; ++j) block.at(i, j) = w.at(i, j);
  return block;
}

Tensor conv_matricized(const Conv2DSpec& c, const Tensor& k) {
  return k.reshaped({c.c_out, c.c_in * c.filter_h * c.filter_w});
}

}  // namespace

double input_lipschitz(const LayerSpec& layer, const Tensor& params,
                       const LipschitzOptions& options) {
  require_param_shape(layer, params);
  if (const auto* d = std::get_if<DenseSpec>(&layer))
    return spectral_norm(dense_weight_block(*d, params), options.power).value;
  if (const auto* c = std::get_if<Conv2DSpec>(&layer))
    return std::sqrt(static_cast<double>(c->filter_h * c->filter_w)) *
           spectral_norm(conv_matricized(*c, params), options.power).value;
  if (const auto* g = std::get_if<GroupNormSpec>(&layer)) return 1.0 / g->alpha;
  const auto& a = std::get<ActivationSpec>(layer);
  switch (a.kind) {
    case ActivationKind::kReLU:
    case ActivationKind::kTanh: return 1.0;
    case ActivationKind::kSigmoid: return options.tight_sigmoid ? 0.25 : 0.5;
  }
  return 1.0;
}

double param_lipschitz(const LayerSpec& layer, double input_bound) {
  if (!(input_bound >= 0.0))
    throw std::invalid_argument("param_lipschitz: input_bound must be >= 0");
  if (const auto* d = std::get_if<DenseSpec>(&layer))
    return d->with_bias ? std::sqrt(input_bound * input_bound + 1.0)
                        : input_bound;
  if (const auto* c = std::get_if<Conv2DSpec>(&layer))
    return std::sqrt(static_cast<double>(c->filter_h * c->filter_w)) *
           input_bound;
  return 0.0;
}

double propagate_norm_bound(const LayerSpec& layer, double input_bound,
                            double weight_norm_bound) {
  if (!(input_bound >= 0.0))
    throw std::invalid_argument(
        "propagate_norm_bound: input_bound must be >= 0");
  if (layer_has_params(layer) && !(weight_norm_bound >= 0.0))
    throw std::invalid_argument(
        "propagate_norm_bound: weight_norm_bound must be >= 0");
  if (const auto* d = std::get_if<DenseSpec>(&layer)) {
    const double reach = d->with_bias
                             ? std::sqrt(input_bound * input_bound + 1.0)
                             : input_bound;
    return weight_norm_bound * reach;
  }
  if (const auto* c = std::get_if<Conv2DSpec>(&layer))
    return std::sqrt(static_cast<double>(c->filter_h * c->filter_w)) *
           weight_norm_bound * input_bound;
  if (const auto* g = std::get_if<GroupNormSpec>(&layer))
    return std::min(std::sqrt(static_cast<double>(group_total(*g))),
                    input_bound / g->alpha);
  const auto& a = std::get<ActivationSpec>(layer);
  switch (a.kind) {
    case ActivationKind::kReLU:
    case ActivationKind::kTanh:
      // Both fix 0 and are 1-Lipschitz, so the input bound carries over.
      return input_bound;
    case ActivationKind::kSigmoid:
      // sigmoid(0) != 0, so only the bounded range gives a norm bound.
      return std::sqrt(static_cast<double>(a.dim));
  }
  return input_bound;
}

double loss_lipschitz(const LossSpec& loss) {
  if (const auto* s = std::get_if<SoftmaxCrossEntropy>(&loss))
    return std::sqrt(2.0) / s->temperature;
  if (std::holds_alternative<MulticlassHinge>(loss)) return 1.0;
  if (const auto* c = std::get_if<CosineSimilarity>(&loss))
    return 1.0 / c->min_output_norm;
  return std::get<SquaredError>(loss).gradient_bound;
}

double weight_norm(const LayerSpec& layer, const Tensor& params,
                   WeightNorm kind, const SpectralOptions& options) {
  require_param_shape(layer, params);
  if (!layer_has_params(layer)) return 0.0;
  Tensor mat = params;
  if (const auto* c = std::get_if<Conv2DSpec>(&layer))
    mat = conv_matricized(*c, params);
  return kind == WeightNorm::kSpectral ? spectral_norm(mat, options).value
                                       : frobenius_norm(mat);
}

}  // namespace lipdp
