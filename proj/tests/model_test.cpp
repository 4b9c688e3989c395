#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "lipdp/layers.hpp"
#include "lipdp/model.hpp"
#include "lipdp/rng.hpp"
#include "lipdp/tensor.hpp"

using lipdp::ActivationKind;
using lipdp::ActivationSpec;
using lipdp::Conv2DSpec;
using lipdp::DenseSpec;
using lipdp::GroupNormSpec;
using lipdp::ModelSpec;
using lipdp::Params;
using lipdp::RngState;
using lipdp::SoftmaxCrossEntropy;
using lipdp::Tensor;

namespace {

ModelSpec small_mlp() {
  ModelSpec model;
  model.layers = {DenseSpec{3, 4, true},
                  ActivationSpec{ActivationKind::kTanh, 4},
                  DenseSpec{4, 2, true}};
  model.loss = SoftmaxCrossEntropy{1.0};
  model.validate();
  return model;
}

ModelSpec conv_stack() {
  ModelSpec model;
  model.layers = {Conv2DSpec{1, 2, 3, 3, 3, 3},
                  GroupNormSpec::contiguous(18, 2, 0.05, 1e-5),
                  ActivationSpec{ActivationKind::kSigmoid, 18},
                  DenseSpec{18, 3, false}};
  model.loss = SoftmaxCrossEntropy{1.0};
  model.validate();
  return model;
}

Tensor random_input(std::size_t dim, RngState& rng) {
  Tensor x = Tensor::zeros({dim});
  for (std::size_t i = 0; i < dim; ++i) x[i] = rng.normal();
  return x;
}

}  // namespace

TEST_CASE("init draws stay inside the fan-in envelope") {
  const ModelSpec model = small_mlp();
  RngState rng(5);
  const Params params = lipdp::init_params(model, rng);
  REQUIRE(params.size() == 3);
  CHECK(params[1].empty());

  const double bound0 = 1.0 / std::sqrt(3.0);
  double max_abs = 0.0;
  for (std::size_t i = 0; i < params[0].size(); ++i) {
    CHECK(std::abs(params[0][i]) < bound0);
    max_abs = std::max(max_abs, std::abs(params[0][i]));
  }
  // A degenerate all-zero init would hide scaling bugs downstream.
  CHECK(max_abs > 0.01 * bound0);

  const double bound2 = 1.0 / std::sqrt(4.0);
  for (std::size_t i = 0; i < params[2].size(); ++i)
    CHECK(std::abs(params[2][i]) < bound2);
}

TEST_CASE("conv init uses the receptive field as fan-in") {
  ModelSpec model;
  model.layers = {Conv2DSpec{2, 1, 2, 2, 2, 2}};
  model.loss = SoftmaxCrossEntropy{1.0};
  RngState rng(6);
  const Params params = lipdp::init_params(model, rng);
  const double bound = 1.0 / std::sqrt(8.0);
  for (std::size_t i = 0; i < params[0].size(); ++i)
    CHECK(std::abs(params[0][i]) < bound);
}

TEST_CASE("activation chain has one entry per position") {
  const ModelSpec model = small_mlp();
  RngState rng(7);
  const Params params = lipdp::init_params(model, rng);
  const Tensor x = random_input(3, rng);

  const std::vector<Tensor> acts =
      lipdp::forward_activations(model, params, x);
  REQUIRE(acts.size() == 4);
  CHECK(acts[0].size() == 3);
  CHECK(acts[1].size() == 4);
  CHECK(acts[2].size() == 4);
  CHECK(acts[3].size() == 2);
  for (std::size_t i = 0; i < 3; ++i) CHECK(acts[0][i] == x[i]);

  const Tensor out = lipdp::predict(model, params, x);
  for (std::size_t i = 0; i < out.size(); ++i)
    CHECK(out[i] == acts.back()[i]);

  // Middle position is the tanh image of the first dense output.
  const Tensor dense0 = lipdp::forward(model.layers[0], params[0], x);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(acts[2][i] == doctest::Approx(std::tanh(dense0[i])));
}

TEST_CASE("per-sample gradient matches finite differences of the loss") {
  RngState rng(11);
  const double h = 1e-6;
  const auto check_model = [&](const ModelSpec& model, double label) {
    Params params = lipdp::init_params(model, rng);
    const Tensor x = random_input(model.input_dim(), rng);
    const lipdp::GradientResult got =
        lipdp::per_sample_gradient(model, params, x, label);
    REQUIRE(got.grads.size() == params.size());

    const auto loss_at = [&](const Params& p) {
      const Tensor out = lipdp::predict(model, p, x);
      return lipdp::loss_value_and_grad(model.loss, out, label).value;
    };
    CHECK(got.loss == doctest::Approx(loss_at(params)));

    for (std::size_t k = 0; k < params.size(); ++k) {
      if (params[k].empty()) {
        CHECK(got.grads[k].empty());
        continue;
      }
      for (std::size_t i = 0; i < params[k].size(); ++i) {
        Params lo = params, hi = params;
        lo[k][i] -= h;
        hi[k][i] += h;
        const double fd = (loss_at(hi) - loss_at(lo)) / (2 * h);
        CHECK(got.grads[k][i] ==
              doctest::Approx(fd).epsilon(1e-4).scale(1.0));
      }
    }
  };

  for (int trial = 0; trial < 3; ++trial) check_model(small_mlp(), 1.0);
  check_model(conv_stack(), 2.0);
}

TEST_CASE("validate_params rejects wrong layouts") {
  const ModelSpec model = small_mlp();
  RngState rng(13);
  Params params = lipdp::init_params(model, rng);
  lipdp::validate_params(model, params);

  Params missing(params.begin(), params.begin() + 2);
  CHECK_THROWS_AS(lipdp::validate_params(model, missing),
                  std::invalid_argument);

  Params wrong_shape = params;
  wrong_shape[0] = Tensor::zeros({3, 4});  // bias row missing
  CHECK_THROWS_AS(lipdp::validate_params(model, wrong_shape),
                  std::invalid_argument);

  Params nonempty_gap = params;
  nonempty_gap[1] = Tensor::zeros({4});
  CHECK_THROWS_AS(lipdp::validate_params(model, nonempty_gap),
                  std::invalid_argument);
}

TEST_CASE("per-sample gradients are deterministic given the same inputs") {
  const ModelSpec model = small_mlp();
  RngState rng(17);
  const Params params = lipdp::init_params(model, rng);
  const Tensor x = random_input(3, rng);
  const auto a = lipdp::per_sample_gradient(model, params, x, 0.0);
  const auto b = lipdp::per_sample_gradient(model, params, x, 0.0);
  CHECK(a.loss == b.loss);
  for (std::size_t k = 0; k < a.grads.size(); ++k)
    for (std::size_t i = 0; i < a.grads[k].size(); ++i)
      CHECK(a.grads[k][i] == b.grads[k][i]);
}
