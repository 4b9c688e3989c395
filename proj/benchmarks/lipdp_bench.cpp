#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "lipdp/accountant.hpp"
#include "lipdp/linalg.hpp"
#include "lipdp/model.hpp"
#include "lipdp/optim.hpp"
#include "lipdp/rng.hpp"
#include "lipdp/sensitivity.hpp"
#include "lipdp/tensor.hpp"

namespace {

lipdp::Tensor random_matrix(std::size_t rows, std::size_t cols, lipdp::RngState& rng) {
  lipdp::Tensor m = lipdp::Tensor::zeros({rows, cols});
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.normal();
  return m;
}

lipdp::ModelSpec bench_model(std::size_t width) {
  lipdp::ModelSpec model;
  model.layers = {
      lipdp::DenseSpec{width, width, true},
      lipdp::ActivationSpec{lipdp::ActivationKind::kReLU, width},
      lipdp::DenseSpec{width, width, true},
      lipdp::ActivationSpec{lipdp::ActivationKind::kTanh, width},
      lipdp::DenseSpec{width, 4, true},
  };
  model.loss = lipdp::SoftmaxCrossEntropy{1.0};
  model.validate();
  return model;
}

void BM_SpectralNorm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  lipdp::RngState rng(7);
  lipdp::Tensor m = random_matrix(n, n, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lipdp::spectral_norm(m));
  }
}
BENCHMARK(BM_SpectralNorm)->Arg(16)->Arg(64)->Arg(256);

void BM_PerSampleGradient(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(0));
  lipdp::ModelSpec model = bench_model(width);
  lipdp::RngState rng(11);
  lipdp::Params params = lipdp::init_params(model, rng);
  lipdp::Tensor x = lipdp::Tensor::zeros({width});
  for (std::size_t i = 0; i < width; ++i) x[i] = rng.normal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(lipdp::per_sample_gradient(model, params, x, 1.0));
  }
}
BENCHMARK(BM_PerSampleGradient)->Arg(16)->Arg(64);

void BM_LayerSensitivity(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(0));
  lipdp::ModelSpec model = bench_model(width);
  lipdp::RngState rng(13);
  lipdp::Params params = lipdp::init_params(model, rng);
  auto clipped = lipdp::clip_weights(model, params, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lipdp::layer_sensitivity(model, clipped.params, 1.0));
  }
}
BENCHMARK(BM_LayerSensitivity)->Arg(16)->Arg(64);

void BM_RdpStep(benchmark::State& state) {
  for (auto _ : state) {
    double acc = 0.0;
    for (double order : lipdp::default_rdp_orders()) {
      acc += lipdp::rdp_step(0.01, 1.1, order);
    }
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(BM_RdpStep);

void BM_TrainStep(benchmark::State& state) {
  const std::size_t width = 16;
  lipdp::ModelSpec model = bench_model(width);
  lipdp::RngState rng(17);
  lipdp::Params params = lipdp::init_params(model, rng);
  auto clipped = lipdp::clip_weights(model, params, 1.0);

  lipdp::Dataset data;
  data.input_norm_bound = 1.0;
  const std::size_t n = 256;
  data.features = lipdp::Tensor::zeros({n, width});
  data.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double norm2 = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
      double v = rng.normal();
      data.features.at(i, j) = v;
      norm2 += v * v;
    }
    double norm = std::sqrt(norm2);
    if (norm > 1.0) {
      for (std::size_t j = 0; j < width; ++j) data.features.at(i, j) /= norm;
    }
    data.labels[i] = static_cast<double>(i % 4);
  }

  lipdp::TrainConfig cfg;
  cfg.epochs = 1;
  cfg.noise_multiplier = 1.1;
  cfg.expected_batch_size = 64;
  cfg.clip_threshold = 1.0;
  cfg.learning_rate = 0.1;
  cfg.input_norm_bound = 1.0;

  lipdp::OptimizerState opt;
  auto report = lipdp::layer_sensitivity(model, clipped.params, 1.0);
  for (auto _ : state) {
    lipdp::RngState step_rng(state.iterations());
    std::vector<std::size_t> batch =
        lipdp::poisson_sample(n, cfg.expected_batch_size, step_rng);
    benchmark::DoNotOptimize(lipdp::lip_dp_sgd_step(model, clipped.params, data, batch,
                                                    report, cfg, step_rng, opt));
  }
}
BENCHMARK(BM_TrainStep);

}  // namespace

BENCHMARK_MAIN();
