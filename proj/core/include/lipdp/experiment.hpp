#ifndef LIPDP_EXPERIMENT_HPP
#define LIPDP_EXPERIMENT_HPP

#include <string>
#include <vector>

#include "lipdp/dataset.hpp"
#include "lipdp/optim.hpp"

namespace lipdp {

/// A full experiment description, loadable from and serializable to an
/// INI-style text file with [dataset], [model], [train], and [run]
/// sections. Serialization writes every field explicitly so a run's
/// stored config has no hidden defaults.
struct ExperimentConfig {
  struct DatasetSection {
    /// synthetic | regression | csv | idx | binary
    std::string kind = "synthetic";
    std::string path;
    std::string labels_path;  // idx only
    /// Per-column roles for csv, comma separated: num, cat, ignore,
    /// label (exactly one label).
    std::string csv_columns;
    bool has_header = false;
    std::size_t n = 2000;        // synthetic / regression row count
    std::size_t dim = 8;         // synthetic feature count
    std::size_t classes = 2;     // synthetic class count
    double separation = 3.0;     // synthetic class-mean radius
    double input_norm_bound = 1.0;
  } dataset;

  struct ModelSection {
    /// Pipe-separated layer list, e.g.
    /// "dense 8 16 bias | relu 16 | dense 16 2 bias". Layer forms:
    /// dense IN OUT [bias]; conv CIN COUT H W FH FW;
    /// groupnorm DIM GROUPS ALPHA [KAPPA]; relu N; tanh N; sigmoid N.
    std::string layers = "dense 8 2 bias";
    /// softmax_ce TAU | hinge MARGIN | cosine MIN_NORM |
    /// squared_error BOUND
    std::string loss = "softmax_ce 1";
  } model;

  struct TrainSection {
    std::string variant = "lip";  // lip | classic | fix
    long long epochs = 10;
    double noise_multiplier = 0.0;
    std::size_t expected_batch_size = 100;
    double clip_threshold = 1.0;
    double learning_rate = 0.1;
    std::string step_rule = "fixed";  // fixed | adam
    std::string averaging = "expected";  // expected | realized
    double l2_weight = 0.0;
    std::string clip_norm = "spectral";  // spectral | frobenius
  } train;

  struct RunSection {
    unsigned long long seed = 1;
    /// 0 selects the 1/n default at the training-set size.
    double delta = 0.0;
    double test_fraction = 0.2;
    std::string output_dir;
  } run;
};

/// Parses the INI text; unknown sections or keys are errors so typos
/// cannot silently fall back to defaults.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

/// Fully explicit INI rendering of the config.
std::string serialize_experiment_config(const ExperimentConfig& config);

/// Builds the layer stack and loss from the [model] strings.
ModelSpec build_model(const ExperimentConfig& config);

/// Builds the TrainConfig from the [train] section.
TrainConfig build_train_config(const ExperimentConfig& config);
TrainVariant parse_variant(const std::string& name);

/// Materializes the [dataset] section (generating, or loading and
/// preprocessing files).
DatasetHandle load_experiment_dataset(const ExperimentConfig& config,
                                      RngState& rng);

/// Fraction of rows whose argmax prediction matches the label; ties
/// resolve to the lowest class index.
double evaluate(const ModelSpec& model, const Params& params,
                const Dataset& data);

struct ExperimentResult {
  std::string variant;
  unsigned long long seed = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  double accuracy = 0.0;
  double runtime_s = 0.0;
  std::vector<double> final_weight_norms;
  std::string ledger_json;
  std::vector<IterationRecord> diagnostics;

  /// Header plus the one data row, matching the columns written by
  /// run_experiment.
  std::string to_csv() const;
};

/// Loads data, splits it (stratified, seeded), trains the configured
/// variant, evaluates held-out accuracy, and queries the accountant at
/// delta. When output_dir is set, writes results.csv, ledger.json,
/// diagnostics.csv, and config.resolved.ini there.
ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace lipdp

#endif  // LIPDP_EXPERIMENT_HPP
