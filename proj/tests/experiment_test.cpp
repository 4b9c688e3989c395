#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "doctest.h"
#include "lipdp/dataset.hpp"
#include "lipdp/experiment.hpp"
#include "lipdp/layers.hpp"
#include "lipdp/model.hpp"
#include "lipdp/optim.hpp"
#include "lipdp/rng.hpp"
#include "lipdp/tensor.hpp"

using lipdp::ActivationKind;
using lipdp::ActivationSpec;
using lipdp::AveragingMode;
using lipdp::Conv2DSpec;
using lipdp::CosineSimilarity;
using lipdp::Dataset;
using lipdp::DatasetHandle;
using lipdp::DenseSpec;
using lipdp::ExperimentConfig;
using lipdp::ExperimentResult;
using lipdp::GroupNormSpec;
using lipdp::ModelSpec;
using lipdp::MulticlassHinge;
using lipdp::Params;
using lipdp::RngState;
using lipdp::SoftmaxCrossEntropy;
using lipdp::SquaredError;
using lipdp::StepRule;
using lipdp::Tensor;
using lipdp::TrainConfig;
using lipdp::TrainVariant;
using lipdp::WeightNorm;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("lipdp_" + name))
      .string();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  REQUIRE(out.good());
  out << text;
  REQUIRE(out.good());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

template <typename Fn>
void expect_error_containing(Fn&& fn, const std::string& needle) {
  bool threw = false;
  try {
    fn();
  } catch (const std::exception& e) {
    threw = true;
    CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos,
                  "message was: ", e.what());
  }
  CHECK_MESSAGE(threw, "expected an exception mentioning '", needle, "'");
}

ExperimentConfig small_synthetic_config() {
  ExperimentConfig cfg;
  cfg.dataset.kind = "synthetic";
  cfg.dataset.n = 160;
  cfg.dataset.dim = 4;
  cfg.dataset.classes = 2;
  cfg.dataset.separation = 3.0;
  cfg.dataset.input_norm_bound = 1.0;
  cfg.model.layers = "dense 4 2 bias";
  cfg.model.loss = "softmax_ce 1";
  cfg.train.variant = "lip";
  cfg.train.epochs = 4;
  cfg.train.noise_multiplier = 0.8;
  cfg.train.expected_batch_size = 32;
  cfg.train.clip_threshold = 1.0;
  cfg.train.learning_rate = 0.2;
  cfg.run.seed = 123;
  cfg.run.test_fraction = 0.25;
  return cfg;
}

}  // namespace

TEST_CASE("config text round-trips through serialization") {
  ExperimentConfig cfg;
  cfg.dataset.kind = "idx";
  cfg.dataset.path = "train-images";
  cfg.dataset.labels_path = "train-labels";
  cfg.dataset.csv_columns = "num,label";
  cfg.dataset.has_header = true;
  cfg.dataset.n = 321;
  cfg.dataset.dim = 5;
  cfg.dataset.classes = 3;
  cfg.dataset.separation = 2.25;
  cfg.dataset.input_norm_bound = 1.5;
  cfg.model.layers = "dense 5 7 bias | relu 7 | dense 7 3";
  cfg.model.loss = "hinge 2";
  cfg.train.variant = "fix";
  cfg.train.epochs = 17;
  cfg.train.noise_multiplier = 1.1;
  cfg.train.expected_batch_size = 40;
  cfg.train.clip_threshold = 0.75;
  cfg.train.learning_rate = 0.015;
  cfg.train.step_rule = "adam";
  cfg.train.averaging = "realized";
  cfg.train.l2_weight = 0.002;
  cfg.train.clip_norm = "frobenius";
  cfg.run.seed = 99;
  cfg.run.delta = 1e-6;
  cfg.run.test_fraction = 0.3;
  cfg.run.output_dir = "out/runs";

  const std::string text = lipdp::serialize_experiment_config(cfg);
  const ExperimentConfig back = lipdp::parse_experiment_config(text);

  CHECK(back.dataset.kind == cfg.dataset.kind);
  CHECK(back.dataset.path == cfg.dataset.path);
  CHECK(back.dataset.labels_path == cfg.dataset.labels_path);
  CHECK(back.dataset.csv_columns == cfg.dataset.csv_columns);
  CHECK(back.dataset.has_header == cfg.dataset.has_header);
  CHECK(back.dataset.n == cfg.dataset.n);
  CHECK(back.dataset.dim == cfg.dataset.dim);
  CHECK(back.dataset.classes == cfg.dataset.classes);
  CHECK(back.dataset.separation == cfg.dataset.separation);
  CHECK(back.dataset.input_norm_bound == cfg.dataset.input_norm_bound);
  CHECK(back.model.layers == cfg.model.layers);
  CHECK(back.model.loss == cfg.model.loss);
  CHECK(back.train.variant == cfg.train.variant);
  CHECK(back.train.epochs == cfg.train.epochs);
  CHECK(back.train.noise_multiplier == cfg.train.noise_multiplier);
  CHECK(back.train.expected_batch_size == cfg.train.expected_batch_size);
  CHECK(back.train.clip_threshold == cfg.train.clip_threshold);
  CHECK(back.train.learning_rate == cfg.train.learning_rate);
  CHECK(back.train.step_rule == cfg.train.step_rule);
  CHECK(back.train.averaging == cfg.train.averaging);
  CHECK(back.train.l2_weight == cfg.train.l2_weight);
  CHECK(back.train.clip_norm == cfg.train.clip_norm);
  CHECK(back.run.seed == cfg.run.seed);
  CHECK(back.run.delta == cfg.run.delta);
  CHECK(back.run.test_fraction == cfg.run.test_fraction);
  CHECK(back.run.output_dir == cfg.run.output_dir);

  CHECK(lipdp::serialize_experiment_config(back) == text);
}

TEST_CASE("config parser rejects unknown names with line numbers") {
  expect_error_containing(
      [] { lipdp::parse_experiment_config("[data]\nkind = synthetic\n"); },
      "line 1");
  expect_error_containing(
      [] { lipdp::parse_experiment_config("[data]\nkind = synthetic\n"); },
      "unknown section");
  expect_error_containing(
      [] { lipdp::parse_experiment_config("[train]\nfoo = 1\n"); },
      "unknown key train.foo");
  expect_error_containing(
      [] { lipdp::parse_experiment_config("[dataset\nkind = synthetic\n"); },
      "malformed section header");
  expect_error_containing(
      [] { lipdp::parse_experiment_config("kind = synthetic\n"); },
      "outside any section");
  expect_error_containing(
      [] { lipdp::parse_experiment_config("\n\n[train]\nepochs\n"); },
      "line 4");
  expect_error_containing(
      [] { lipdp::parse_experiment_config("[train]\nepochs = abc\n"); },
      "train.epochs expects a number");
  expect_error_containing(
      [] { lipdp::parse_experiment_config("[train]\nepochs = 1.5\n"); },
      "expects an integer");
  expect_error_containing(
      [] { lipdp::parse_experiment_config("[dataset]\nn = -3\n"); },
      "must be nonnegative");
  expect_error_containing(
      [] { lipdp::parse_experiment_config("[dataset]\nhas_header = maybe\n"); },
      "expects true or false");
}

TEST_CASE("config parser skips comments and blank lines") {
  const ExperimentConfig cfg = lipdp::parse_experiment_config(
      "# leading comment\n"
      "; alt comment style\n"
      "\n"
      "[train]\n"
      "epochs = 3\n"
      "  learning_rate =  0.25  \n");
  CHECK(cfg.train.epochs == 3);
  CHECK(cfg.train.learning_rate == 0.25);
  CHECK(cfg.dataset.kind == "synthetic");  // untouched defaults remain
}

TEST_CASE("config files load from disk") {
  const std::string path = tmp_path("exp.ini");
  write_file(path, "[run]\nseed = 77\n");
  const ExperimentConfig cfg = lipdp::load_experiment_config(path);
  CHECK(cfg.run.seed == 77);
  expect_error_containing(
      [] { lipdp::load_experiment_config("/nonexistent/exp.ini"); },
      "cannot open");
}

TEST_CASE("model DSL builds the declared stack") {
  ExperimentConfig cfg;
  cfg.model.layers =
      "dense 4 8 bias | relu 8 | groupnorm 8 2 0.5 0.001 | tanh 8 | "
      "dense 8 3";
  cfg.model.loss = "hinge 2";
  const ModelSpec model = lipdp::build_model(cfg);
  REQUIRE(model.layers.size() == 5);

  const auto& d0 = std::get<DenseSpec>(model.layers[0]);
  CHECK(d0.in_dim == 4);
  CHECK(d0.out_dim == 8);
  CHECK(d0.with_bias);

  const auto& a1 = std::get<ActivationSpec>(model.layers[1]);
  CHECK(a1.kind == ActivationKind::kReLU);
  CHECK(a1.dim == 8);

  const auto& g2 = std::get<GroupNormSpec>(model.layers[2]);
  CHECK(g2.alpha == 0.5);
  CHECK(g2.kappa == 0.001);
  REQUIRE(g2.groups.size() == 2);
  REQUIRE(g2.groups[0] == std::vector<std::size_t>{0, 1, 2, 3});

  const auto& a3 = std::get<ActivationSpec>(model.layers[3]);
  CHECK(a3.kind == ActivationKind::kTanh);

  const auto& d4 = std::get<DenseSpec>(model.layers[4]);
  CHECK(!d4.with_bias);

  const auto& loss = std::get<MulticlassHinge>(model.loss);
  CHECK(loss.margin == 2.0);

  ExperimentConfig conv_cfg;
  conv_cfg.model.layers = "conv 2 3 5 5 3 3 | sigmoid 75";
  conv_cfg.model.loss = "cosine 0.2";
  const ModelSpec conv_model = lipdp::build_model(conv_cfg);
  const auto& cv = std::get<Conv2DSpec>(conv_model.layers[0]);
  CHECK(cv.c_in == 2);
  CHECK(cv.c_out == 3);
  CHECK(cv.in_h == 5);
  CHECK(cv.in_w == 5);
  CHECK(cv.filter_h == 3);
  CHECK(cv.filter_w == 3);
  CHECK(std::get<ActivationSpec>(conv_model.layers[1]).kind ==
        ActivationKind::kSigmoid);
  CHECK(std::get<CosineSimilarity>(conv_model.loss).min_output_norm == 0.2);

  ExperimentConfig gn_default;
  gn_default.model.layers = "dense 4 1 | groupnorm 1 1 0.25";
  gn_default.model.loss = "squared_error 9";
  const ModelSpec gn_model = lipdp::build_model(gn_default);
  CHECK(std::get<GroupNormSpec>(gn_model.layers[1]).kappa == 1e-5);
  CHECK(std::get<SquaredError>(gn_model.loss).gradient_bound == 9.0);
}

TEST_CASE("model DSL rejects malformed layer and loss strings") {
  const auto with_layers = [](const std::string& layers,
                              const std::string& loss = "softmax_ce 1") {
    ExperimentConfig cfg;
    cfg.model.layers = layers;
    cfg.model.loss = loss;
    return lipdp::build_model(cfg);
  };
  expect_error_containing([&] { with_layers("dense 4"); },
                          "missing output dim");
  expect_error_containing([&] { with_layers("dense 4 8 nobias"); },
                          "unexpected token");
  expect_error_containing([&] { with_layers("swish 4"); },
                          "unknown layer type");
  expect_error_containing([&] { with_layers("groupnorm 8 2"); },
                          "missing alpha");
  expect_error_containing(
      [&] { with_layers("dense 4 8", "l2 1"); }, "unknown loss");
  // Dimension chain mismatches surface through model validation.
  CHECK_THROWS_AS(with_layers("dense 4 8 | relu 16"), std::invalid_argument);
}

TEST_CASE("train section maps onto the optimizer config") {
  ExperimentConfig cfg;
  cfg.train.epochs = 7;
  cfg.train.noise_multiplier = 1.3;
  cfg.train.expected_batch_size = 33;
  cfg.train.clip_threshold = 0.9;
  cfg.train.learning_rate = 0.05;
  cfg.train.step_rule = "adam";
  cfg.train.averaging = "realized";
  cfg.train.l2_weight = 0.01;
  cfg.train.clip_norm = "frobenius";
  cfg.dataset.input_norm_bound = 2.5;

  const TrainConfig tc = lipdp::build_train_config(cfg);
  CHECK(tc.epochs == 7);
  CHECK(tc.noise_multiplier == 1.3);
  CHECK(tc.expected_batch_size == 33);
  CHECK(tc.clip_threshold == 0.9);
  CHECK(tc.learning_rate == 0.05);
  CHECK(tc.step_rule == StepRule::kAdam);
  CHECK(tc.averaging == AveragingMode::kRealizedBatch);
  CHECK(tc.l2_weight == 0.01);
  CHECK(tc.clip_norm == WeightNorm::kFrobenius);
  CHECK(tc.input_norm_bound == 2.5);

  cfg.train.step_rule = "sgd";
  expect_error_containing([&] { lipdp::build_train_config(cfg); },
                          "unknown step_rule");
  cfg.train.step_rule = "fixed";
  cfg.train.averaging = "mean";
  expect_error_containing([&] { lipdp::build_train_config(cfg); },
                          "unknown averaging");
  cfg.train.averaging = "expected";
  cfg.train.clip_norm = "nuclear";
  expect_error_containing([&] { lipdp::build_train_config(cfg); },
                          "unknown clip_norm");

  CHECK(lipdp::parse_variant("lip") == TrainVariant::kLip);
  CHECK(lipdp::parse_variant("classic") == TrainVariant::kClassic);
  CHECK(lipdp::parse_variant("fix") == TrainVariant::kFix);
  CHECK_THROWS_AS(lipdp::parse_variant("dpsgd"), std::invalid_argument);
}

TEST_CASE("evaluate counts argmax matches and resolves ties downward") {
  ModelSpec model;
  model.layers = {DenseSpec{2, 3, false}};
  model.loss = SoftmaxCrossEntropy{1.0};
  model.validate();

  Params params(1);
  params[0] = lipdp::Tensor::zeros({2, 3});
  // Row (1,0) maps to (0.2, 0.9, 0.9): classes 1 and 2 tie, 1 wins.
  params[0].at(0, 0) = 0.2;
  params[0].at(0, 1) = 0.9;
  params[0].at(0, 2) = 0.9;
  // Row (0,1) maps to (0.5, 0.5, 0.1): classes 0 and 1 tie, 0 wins.
  params[0].at(1, 0) = 0.5;
  params[0].at(1, 1) = 0.5;
  params[0].at(1, 2) = 0.1;

  Dataset data;
  data.input_norm_bound = 1.0;
  data.features = Tensor::zeros({3, 2});
  data.features.at(0, 0) = 1.0;
  data.features.at(1, 1) = 1.0;
  data.features.at(2, 1) = 1.0;
  data.labels = {1.0, 1.0, 0.0};

  // Rows: tie resolved to 1 (correct), tie resolved to 0 against label 1
  // (wrong), tie resolved to 0 against label 0 (correct).
  CHECK(lipdp::evaluate(model, params, data) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("experiment runs are reproducible given a seed") {
  const ExperimentConfig cfg = small_synthetic_config();
  const ExperimentResult first = lipdp::run_experiment(cfg);
  const ExperimentResult second = lipdp::run_experiment(cfg);

  CHECK(first.variant == "lip");
  CHECK(first.seed == 123);
  CHECK(first.accuracy == second.accuracy);
  CHECK(first.epsilon == second.epsilon);
  CHECK(first.ledger_json == second.ledger_json);
  REQUIRE(first.final_weight_norms == second.final_weight_norms);
  REQUIRE(first.diagnostics.size() == second.diagnostics.size());
  for (std::size_t i = 0; i < first.diagnostics.size(); ++i)
    CHECK(first.diagnostics[i].mean_loss == second.diagnostics[i].mean_loss);

  // The 160-row draw splits 120/40, so the default delta is 1/120.
  CHECK(first.delta == doctest::Approx(1.0 / 120.0).epsilon(1e-12));
  CHECK(first.epsilon > 0.0);
  CHECK(first.runtime_s >= 0.0);
  for (double u : first.final_weight_norms)
    CHECK(u <= cfg.train.clip_threshold + 1e-9);

  ExperimentConfig other = cfg;
  other.run.seed = 124;
  const ExperimentResult third = lipdp::run_experiment(other);
  REQUIRE(!third.diagnostics.empty());
  CHECK(third.diagnostics[0].mean_loss != first.diagnostics[0].mean_loss);
}

TEST_CASE("zero epochs spend no privacy and huge noise ruins accuracy") {
  ExperimentConfig idle = small_synthetic_config();
  idle.train.epochs = 0;
  const ExperimentResult spent_nothing = lipdp::run_experiment(idle);
  CHECK(spent_nothing.epsilon == 0.0);
  CHECK(spent_nothing.diagnostics.empty());
  CHECK(spent_nothing.accuracy >= 0.0);
  CHECK(spent_nothing.accuracy <= 1.0);

  ExperimentConfig noisy = small_synthetic_config();
  noisy.train.epochs = 3;
  noisy.train.noise_multiplier = 1e6;
  const ExperimentResult drowned = lipdp::run_experiment(noisy);
  // Balanced two-class test split: accuracy should hover near chance.
  CHECK(drowned.accuracy <= 0.75);
  // The conversion cannot drop below log(1/delta) / (alpha_max - 1)
  // whatever sigma is, so compare against that floor plus slack.
  const double floor = std::log(120.0) / 63.0;
  CHECK(drowned.epsilon <= floor + 1e-6);
}

TEST_CASE("experiment writes its artifact files") {
  ExperimentConfig cfg = small_synthetic_config();
  cfg.train.epochs = 2;
  const std::string dir = tmp_path("run_artifacts");
  std::filesystem::remove_all(dir);
  cfg.run.output_dir = dir;

  const ExperimentResult result = lipdp::run_experiment(cfg);

  namespace fs = std::filesystem;
  REQUIRE(fs::exists(fs::path(dir) / "results.csv"));
  REQUIRE(fs::exists(fs::path(dir) / "ledger.json"));
  REQUIRE(fs::exists(fs::path(dir) / "diagnostics.csv"));
  REQUIRE(fs::exists(fs::path(dir) / "config.resolved.ini"));

  const std::string results = read_file((fs::path(dir) / "results.csv").string());
  CHECK(results == result.to_csv());
  CHECK(results.rfind("variant,seed,epsilon,delta,accuracy", 0) == 0);

  const std::string ledger =
      read_file((fs::path(dir) / "ledger.json").string());
  CHECK(ledger.find("sigma") != std::string::npos);

  std::istringstream diag(
      read_file((fs::path(dir) / "diagnostics.csv").string()));
  std::string header;
  std::getline(diag, header);
  CHECK(header ==
        "iteration,layer,weight_norm,delta,loss,clip_error,clipped_grad_norm");
  std::string row;
  std::size_t data_rows = 0;
  while (std::getline(diag, row))
    if (!row.empty()) ++data_rows;
  CHECK(data_rows == 2);  // one parameterized layer, two iterations

  const ExperimentConfig resolved = lipdp::parse_experiment_config(
      read_file((fs::path(dir) / "config.resolved.ini").string()));
  CHECK(resolved.dataset.kind == cfg.dataset.kind);
  CHECK(resolved.train.epochs == cfg.train.epochs);
  CHECK(resolved.run.seed == cfg.run.seed);
}

TEST_CASE("dataset section materializes each source kind") {
  RngState rng(5);
  ExperimentConfig cfg;
  cfg.dataset.kind = "synthetic";
  cfg.dataset.n = 30;
  cfg.dataset.dim = 3;
  cfg.dataset.classes = 3;
  const DatasetHandle synth = lipdp::load_experiment_dataset(cfg, rng);
  CHECK(synth.data.size() == 30);
  CHECK(synth.num_classes == 3);

  cfg.dataset.kind = "regression";
  cfg.dataset.n = 12;
  const DatasetHandle reg = lipdp::load_experiment_dataset(cfg, rng);
  CHECK(reg.data.size() == 12);
  CHECK(reg.num_classes == 0);
  CHECK(reg.source == "regression");

  const std::string csv = tmp_path("exp_data.csv");
  write_file(csv,
             "1.0,0,red\n"
             "2.0,1,blue\n");
  cfg.dataset.kind = "csv";
  cfg.dataset.path = csv;
  cfg.dataset.csv_columns = "num,label,cat";
  cfg.dataset.has_header = false;
  const DatasetHandle from_csv = lipdp::load_experiment_dataset(cfg, rng);
  CHECK(from_csv.data.features.dim(1) == 3);  // 1 numeric + 2 colors
  CHECK(from_csv.num_classes == 2);

  const std::string saved = tmp_path("exp_data.bin");
  lipdp::save_dataset(from_csv, saved);
  cfg.dataset.kind = "binary";
  cfg.dataset.path = saved;
  const DatasetHandle reloaded = lipdp::load_experiment_dataset(cfg, rng);
  CHECK(reloaded.digest == from_csv.digest);

  cfg.dataset.kind = "csv";
  cfg.dataset.csv_columns = "num,foo,cat";
  expect_error_containing([&] { lipdp::load_experiment_dataset(cfg, rng); },
                          "unknown column role 'foo'");
  cfg.dataset.csv_columns = "label,label,cat";
  expect_error_containing([&] { lipdp::load_experiment_dataset(cfg, rng); },
                          "multiple label columns");
  cfg.dataset.csv_columns = "num,num,cat";
  expect_error_containing([&] { lipdp::load_experiment_dataset(cfg, rng); },
                          "declares no label");
  cfg.dataset.kind = "mnist";
  expect_error_containing([&] { lipdp::load_experiment_dataset(cfg, rng); },
                          "unknown kind");
}

TEST_CASE("experiment rejects regression runs and mismatched models") {
  ExperimentConfig reg = small_synthetic_config();
  reg.dataset.kind = "regression";
  expect_error_containing([&] { lipdp::run_experiment(reg); }, "bias-lab");

  ExperimentConfig narrow = small_synthetic_config();
  narrow.model.layers = "dense 3 2 bias";
  expect_error_containing([&] { lipdp::run_experiment(narrow); },
                          "expects 3 inputs");

  ExperimentConfig shallow = small_synthetic_config();
  shallow.model.layers = "dense 4 1 bias";
  expect_error_containing([&] { lipdp::run_experiment(shallow); },
                          "2 classes");

  ExperimentConfig bad_frac = small_synthetic_config();
  bad_frac.run.test_fraction = 1.0;
  expect_error_containing([&] { lipdp::run_experiment(bad_frac); },
                          "test_fraction");
}
