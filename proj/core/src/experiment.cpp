#include "lipdp/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "lipdp/bias_lab.hpp"

namespace lipdp {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size())
    throw std::invalid_argument("config: " + key + " expects a number, got '" +
                                value + "'");
  return v;
}

long long to_ll(const std::string& key, const std::string& value) {
  const double v = to_double(key, value);
  if (v != std::floor(v))
    throw std::invalid_argument("config: " + key + " expects an integer");
  return static_cast<long long>(v);
}

std::size_t to_size(const std::string& key, const std::string& value) {
  const long long v = to_ll(key, value);
  if (v < 0)
    throw std::invalid_argument("config: " + key + " must be nonnegative");
  return static_cast<std::size_t>(v);
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument("config: " + key + " expects true or false");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config text format
// ---------------------------------------------------------------------------

ExperimentConfig parse_experiment_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "dataset" && section != "model" && section != "train" &&
          section != "run")
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": unknown section [" + section + "]");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string qualified = section + "." + key;

    if (section == "dataset") {
      auto& d = cfg.dataset;
      if (key == "kind") d.kind = value;
      else if (key == "path") d.path = value;
      else if (key == "labels_path") d.labels_path = value;
      else if (key == "csv_columns") d.csv_columns = value;
      else if (key == "has_header") d.has_header = to_bool(qualified, value);
      else if (key == "n") d.n = to_size(qualified, value);
      else if (key == "dim") d.dim = to_size(qualified, value);
      else if (key == "classes") d.classes = to_size(qualified, value);
      else if (key == "separation") d.separation = to_double(qualified, value);
      else if (key == "input_norm_bound")
        d.input_norm_bound = to_double(qualified, value);
      else
        throw std::invalid_argument("config: unknown key " + qualified);
    } else if (section == "model") {
      auto& m = cfg.model;
      if (key == "layers") m.layers = value;
      else if (key == "loss") m.loss = value;
      else
        throw std::invalid_argument("config: unknown key " + qualified);
    } else if (section == "train") {
      auto& t = cfg.train;
      if (key == "variant") t.variant = value;
      else if (key == "epochs") t.epochs = to_ll(qualified, value);
      else if (key == "noise_multiplier")
        t.noise_multiplier = to_double(qualified, value);
      else if (key == "expected_batch_size")
        t.expected_batch_size = to_size(qualified, value);
      else if (key == "clip_threshold")
        t.clip_threshold = to_double(qualified, value);
      else if (key == "learning_rate")
        t.learning_rate = to_double(qualified, value);
      else if (key == "step_rule") t.step_rule = value;
      else if (key == "averaging") t.averaging = value;
      else if (key == "l2_weight") t.l2_weight = to_double(qualified, value);
      else if (key == "clip_norm") t.clip_norm = value;
      else
        throw std::invalid_argument("config: unknown key " + qualified);
    } else if (section == "run") {
      auto& r = cfg.run;
      if (key == "seed")
        r.seed = static_cast<unsigned long long>(to_ll(qualified, value));
      else if (key == "delta") r.delta = to_double(qualified, value);
      else if (key == "test_fraction")
        r.test_fraction = to_double(qualified, value);
      else if (key == "output_dir") r.output_dir = value;
      else
        throw std::invalid_argument("config: unknown key " + qualified);
    } else {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": key outside any section");
    }
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_experiment_config(buffer.str());
}

std::string serialize_experiment_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "[dataset]\n";
  out << "kind = " << c.dataset.kind << "\n";
  out << "path = " << c.dataset.path << "\n";
  out << "labels_path = " << c.dataset.labels_path << "\n";
  out << "csv_columns = " << c.dataset.csv_columns << "\n";
  out << "has_header = " << (c.dataset.has_header ? "true" : "false") << "\n";
  out << "n = " << c.dataset.n << "\n";
  out << "dim = " << c.dataset.dim << "\n";
  out << "classes = " << c.dataset.classes << "\n";
  out << "separation = " << fmt(c.dataset.separation) << "\n";
  out << "input_norm_bound = " << fmt(c.dataset.input_norm_bound) << "\n";
  out << "\n[model]\n";
  out << "layers = " << c.model.layers << "\n";
  out << "loss = " << c.model.loss << "\n";
  out << "\n[train]\n";
  out << "variant = " << c.train.variant << "\n";
  out << "epochs = " << c.train.epochs << "\n";
  out << "noise_multiplier = " << fmt(c.train.noise_multiplier) << "\n";
  out << "expected_batch_size = " << c.train.expected_batch_size << "\n";
  out << "clip_threshold = " << fmt(c.train.clip_threshold) << "\n";
  out << "learning_rate = " << fmt(c.train.learning_rate) << "\n";
  out << "step_rule = " << c.train.step_rule << "\n";
  out << "averaging = " << c.train.averaging << "\n";
  out << "l2_weight = " << fmt(c.train.l2_weight) << "\n";
  out << "clip_norm = " << c.train.clip_norm << "\n";
  out << "\n[run]\n";
  out << "seed = " << c.run.seed << "\n";
  out << "delta = " << fmt(c.run.delta) << "\n";
  out << "test_fraction = " << fmt(c.run.test_fraction) << "\n";
  out << "output_dir = " << c.run.output_dir << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

ModelSpec build_model(const ExperimentConfig& config) {
  ModelSpec model;
  std::stringstream chunks(config.model.layers);
  std::string chunk;
  while (std::getline(chunks, chunk, '|')) {
    std::istringstream tok(trim(chunk));
    std::string name;
    tok >> name;
    if (name.empty()) continue;
    auto next = [&](const char* what) {
      std::size_t v;
      if (!(tok >> v))
        throw std::invalid_argument("model layer '" + trim(chunk) +
                                    "': missing " + what);
      return v;
    };
    if (name == "dense") {
      DenseSpec d;
      d.in_dim = next("input dim");
      d.out_dim = next("output dim");
      std::string flag;
      if (tok >> flag) {
        if (flag != "bias")
          throw std::invalid_argument("model layer '" + trim(chunk) +
                                      "': unexpected token '" + flag + "'");
        d.with_bias = true;
      }
      model.layers.push_back(d);
    } else if (name == "conv") {
      Conv2DSpec cv;
      cv.c_in = next("input channels");
      cv.c_out = next("output channels");
      cv.in_h = next("height");
      cv.in_w = next("width");
      cv.filter_h = next("filter height");
      cv.filter_w = next("filter width");
      model.layers.push_back(cv);
    } else if (name == "groupnorm") {
      const std::size_t dim = next("dim");
      const std::size_t groups = next("group count");
      double alpha;
      if (!(tok >> alpha))
        throw std::invalid_argument("model layer '" + trim(chunk) +
                                    "': missing alpha");
      double kappa = 1e-5;
      tok >> kappa;
      model.layers.push_back(
          GroupNormSpec::contiguous(dim, groups, alpha, kappa));
    } else if (name == "relu" || name == "tanh" || name == "sigmoid") {
      ActivationSpec a;
      a.dim = next("dim");
      a.kind = name == "relu" ? ActivationKind::kReLU
               : name == "tanh" ? ActivationKind::kTanh
                                : ActivationKind::kSigmoid;
      model.layers.push_back(a);
    } else {
      throw std::invalid_argument("model: unknown layer type '" + name + "'");
    }
  }

  std::istringstream loss_tok(config.model.loss);
  std::string loss_name;
  double param = 0.0;
  loss_tok >> loss_name >> param;
  if (loss_name == "softmax_ce")
    model.loss = SoftmaxCrossEntropy{param > 0.0 ? param : 1.0};
  else if (loss_name == "hinge")
    model.loss = MulticlassHinge{param > 0.0 ? param : 1.0};
  else if (loss_name == "cosine")
    model.loss = CosineSimilarity{param > 0.0 ? param : 0.1};
  else if (loss_name == "squared_error")
    model.loss = SquaredError{param > 0.0 ? param : 1.0};
  else
    throw std::invalid_argument("model: unknown loss '" + loss_name + "'");

  model.validate();
  return model;
}

TrainConfig build_train_config(const ExperimentConfig& config) {
  TrainConfig tc;
  tc.epochs = config.train.epochs;
  tc.noise_multiplier = config.train.noise_multiplier;
  tc.expected_batch_size = config.train.expected_batch_size;
  tc.clip_threshold = config.train.clip_threshold;
  tc.learning_rate = config.train.learning_rate;
  if (config.train.step_rule == "fixed") tc.step_rule = StepRule::kFixed;
  else if (config.train.step_rule == "adam") tc.step_rule = StepRule::kAdam;
  else
    throw std::invalid_argument("train: unknown step_rule '" +
                                config.train.step_rule + "'");
  if (config.train.averaging == "expected")
    tc.averaging = AveragingMode::kExpectedBatch;
  else if (config.train.averaging == "realized")
    tc.averaging = AveragingMode::kRealizedBatch;
  else
    throw std::invalid_argument("train: unknown averaging '" +
                                config.train.averaging + "'");
  tc.l2_weight = config.train.l2_weight;
  if (config.train.clip_norm == "spectral")
    tc.clip_norm = WeightNorm::kSpectral;
  else if (config.train.clip_norm == "frobenius")
    tc.clip_norm = WeightNorm::kFrobenius;
  else
    throw std::invalid_argument("train: unknown clip_norm '" +
                                config.train.clip_norm + "'");
  tc.input_norm_bound = config.dataset.input_norm_bound;
  return tc;
}

TrainVariant parse_variant(const std::string& name) {
  if (name == "lip") return TrainVariant::kLip;
  if (name == "classic") return TrainVariant::kClassic;
  if (name == "fix") return TrainVariant::kFix;
  throw std::invalid_argument("train: unknown variant '" + name + "'");
}

DatasetHandle load_experiment_dataset(const ExperimentConfig& config,
                                      RngState& rng) {
  const auto& d = config.dataset;
  if (d.kind == "synthetic")
    return make_synthetic_classification(d.n, d.dim, d.classes, d.separation,
                                         rng, d.input_norm_bound);
  if (d.kind == "regression") {
    DatasetHandle handle;
    handle.data =
        make_regression_dataset(BiasScenario::asymmetric_example(), d.n, rng);
    handle.num_classes = 0;
    handle.source = "regression";
    handle.digest = dataset_digest(handle.data, 0);
    return handle;
  }
  if (d.kind == "csv") {
    CsvSchema schema;
    schema.has_header = d.has_header;
    schema.input_norm_bound = d.input_norm_bound;
    std::size_t label_column = 0;
    bool saw_label = false;
    std::stringstream cols(d.csv_columns);
    std::string tok;
    while (std::getline(cols, tok, ',')) {
      tok = trim(tok);
      if (tok == "num") schema.columns.push_back(ColumnKind::kNumeric);
      else if (tok == "cat") schema.columns.push_back(ColumnKind::kCategorical);
      else if (tok == "ignore") schema.columns.push_back(ColumnKind::kIgnore);
      else if (tok == "label") {
        if (saw_label)
          throw std::invalid_argument("dataset: multiple label columns");
        label_column = schema.columns.size();
        schema.columns.push_back(ColumnKind::kIgnore);
        saw_label = true;
      } else {
        throw std::invalid_argument("dataset: unknown column role '" + tok +
                                    "'");
      }
    }
    if (!saw_label)
      throw std::invalid_argument("dataset: csv_columns declares no label");
    return load_csv(d.path, label_column, schema).handle;
  }
  if (d.kind == "idx")
    return load_idx(d.path, d.labels_path, d.input_norm_bound);
  if (d.kind == "binary") return load_dataset(d.path);
  throw std::invalid_argument("dataset: unknown kind '" + d.kind + "'");
}

// ---------------------------------------------------------------------------
// Evaluation and orchestration
// ---------------------------------------------------------------------------

double evaluate(const ModelSpec& model, const Params& params,
                const Dataset& data) {
  data.validate();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Tensor out = predict(model, params, data.row(i));
    std::size_t best = 0;
    for (std::size_t j = 1; j < out.size(); ++j)
      if (out[j] > out[best]) best = j;
    if (static_cast<double>(best) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

std::string ExperimentResult::to_csv() const {
  std::ostringstream out;
  out << "variant,seed,epsilon,delta,accuracy,runtime_s,final_weight_norms\n";
  out << variant << "," << seed << "," << fmt(epsilon) << "," << fmt(delta)
      << "," << fmt(accuracy) << "," << fmt(runtime_s) << ",";
  for (std::size_t k = 0; k < final_weight_norms.size(); ++k) {
    if (k) out << ";";
    out << fmt(final_weight_norms[k]);
  }
  out << "\n";
  return out.str();
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  if (config.dataset.kind == "regression")
    throw std::invalid_argument(
        "run_experiment handles classification tasks; use the bias-lab "
        "tools for the regression scenario");
  if (!(config.run.test_fraction >= 0.0) || config.run.test_fraction >= 1.0)
    throw std::invalid_argument("run: test_fraction must be in [0,1)");

  RngState rng(config.run.seed);
  const DatasetHandle handle = load_experiment_dataset(config, rng);
  Dataset train_data = handle.data;
  Dataset test_data = handle.data;
  if (config.run.test_fraction > 0.0) {
    const SplitIndices split = stratified_split(
        handle.data.labels, config.run.test_fraction, rng);
    train_data = subset(handle.data, split.train);
    test_data = subset(handle.data, split.test);
  }

  const ModelSpec model = build_model(config);
  if (model.input_dim() != train_data.features.dim(1))
    throw std::invalid_argument(
        "model expects " + std::to_string(model.input_dim()) +
        " inputs but the dataset has " +
        std::to_string(train_data.features.dim(1)) + " features");
  if (handle.num_classes > 0 && model.output_dim() < handle.num_classes)
    throw std::invalid_argument(
        "model emits " + std::to_string(model.output_dim()) +
        " outputs but the dataset has " +
        std::to_string(handle.num_classes) + " classes");

  const TrainConfig tc = build_train_config(config);
  const TrainVariant variant = parse_variant(config.train.variant);
  const TrainResult trained = train(model, train_data, tc, variant, rng);

  ExperimentResult result;
  result.variant = config.train.variant;
  result.seed = config.run.seed;
  result.delta = config.run.delta > 0.0
                     ? config.run.delta
                     : 1.0 / static_cast<double>(train_data.size());
  const PrivacySpend spend = trained.ledger.to_epsilon_delta(result.delta);
  result.epsilon = spend.epsilon;
  result.accuracy = evaluate(model, trained.params, test_data);
  result.ledger_json = trained.ledger.to_json(result.delta);
  result.diagnostics = trained.diagnostics;
  if (!trained.u_theta.empty()) {
    result.final_weight_norms = trained.u_theta;
  } else {
    result.final_weight_norms.assign(model.layers.size(), 0.0);
    for (std::size_t k = 0; k < model.layers.size(); ++k)
      if (layer_has_params(model.layers[k]))
        result.final_weight_norms[k] =
            weight_norm(model.layers[k], trained.params[k], tc.clip_norm);
  }
  result.runtime_s = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - started)
                         .count();

  if (!config.run.output_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(config.run.output_dir);
    const fs::path dir(config.run.output_dir);
    std::ofstream(dir / "results.csv") << result.to_csv();
    std::ofstream(dir / "ledger.json") << result.ledger_json << "\n";
    {
      std::ofstream diag(dir / "diagnostics.csv");
      diag << "iteration,layer,weight_norm,delta,loss,clip_error,"
              "clipped_grad_norm\n";
      for (const auto& rec : result.diagnostics)
        for (std::size_t k = 0; k < rec.weight_norms.size(); ++k)
          diag << rec.iteration << "," << k << ","
               << fmt(rec.weight_norms[k]) << ","
               << fmt(rec.delta.empty() ? 0.0 : rec.delta[k]) << ","
               << fmt(rec.mean_loss) << "," << fmt(rec.clip_error) << ","
               << fmt(rec.clipped_grad_norm) << "\n";
    }
    std::ofstream(dir / "config.resolved.ini")
        << serialize_experiment_config(config);
  }
  return result;
}

}  // namespace lipdp
