// Command-line front end: train models, probe the clipping-bias
// scenario, query the privacy accountant, and print sensitivity
// reports. Every failure path exits nonzero with a single
// "error: ..." line on stderr.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "lipdp/accountant.hpp"
#include "lipdp/bias_lab.hpp"
#include "lipdp/experiment.hpp"
#include "lipdp/sensitivity.hpp"

namespace {

int run_train(const std::string& config_path, const std::string& output_dir,
              long long seed_override, const std::string& variant_override) {
  lipdp::ExperimentConfig config =
      lipdp::load_experiment_config(config_path);
  if (!output_dir.empty()) config.run.output_dir = output_dir;
  if (seed_override >= 0)
    config.run.seed = static_cast<unsigned long long>(seed_override);
  if (!variant_override.empty()) config.train.variant = variant_override;
  const lipdp::ExperimentResult result = lipdp::run_experiment(config);
  std::cout << result.to_csv();
  return 0;
}

int run_bias_lab(double a, double b, double clip, int grid_steps,
                 double grid_half_width, const std::string& field_path) {
  lipdp::BiasScenario scenario = lipdp::BiasScenario::asymmetric_example();
  scenario.a = a;
  scenario.b = b;
  scenario.clip_threshold = clip;

  const lipdp::GradientEstimate at_truth =
      lipdp::expected_gradient(scenario, a, b, true);
  std::printf("expected clipped gradient at (a, b): (%.6f, %.6f), norm %.6f\n",
              at_truth.slope, at_truth.intercept, at_truth.norm());

  const lipdp::FixedPointResult fp =
      lipdp::find_clipped_fixed_point(scenario);
  std::printf("clipped fixed point: (%.6f, %.6f), residual %.3g after %d "
              "iterations%s\n",
              fp.theta1, fp.theta2, fp.residual_norm, fp.iterations,
              fp.converged ? "" : " (did not converge)");

  if (!field_path.empty()) {
    std::ofstream out(field_path);
    if (!out)
      throw std::runtime_error("cannot open " + field_path + " for writing");
    out << "theta1,theta2,clipped_g1,clipped_g2,unclipped_g1,unclipped_g2\n";
    for (int i = 0; i <= grid_steps; ++i)
      for (int j = 0; j <= grid_steps; ++j) {
        const double t1 =
            a - grid_half_width + 2.0 * grid_half_width * i / grid_steps;
        const double t2 =
            b - grid_half_width + 2.0 * grid_half_width * j / grid_steps;
        const auto gc = lipdp::expected_gradient(scenario, t1, t2, true);
        const auto gu = lipdp::expected_gradient(scenario, t1, t2, false);
        char line[200];
        std::snprintf(line, sizeof(line), "%.8g,%.8g,%.8g,%.8g,%.8g,%.8g\n",
                      t1, t2, gc.slope, gc.intercept, gu.slope, gu.intercept);
        out << line;
      }
    std::printf("gradient field written to %s\n", field_path.c_str());
  }
  return 0;
}

int run_accountant(double q, double sigma, long long steps, double delta,
                   bool calibrate, double epsilon, double sensitivity) {
  if (calibrate) {
    std::printf("%.12g\n",
                lipdp::gaussian_sigma_for(epsilon, delta, sensitivity));
    return 0;
  }
  lipdp::RdpLedger ledger(q, sigma);
  ledger.add_steps(steps);
  std::cout << ledger.to_json(delta) << "\n";
  return 0;
}

int run_sensitivity_report(const std::string& config_path) {
  const lipdp::ExperimentConfig config =
      lipdp::load_experiment_config(config_path);
  const lipdp::ModelSpec model = lipdp::build_model(config);
  const lipdp::TrainConfig tc = lipdp::build_train_config(config);
  lipdp::RngState rng(config.run.seed);
  lipdp::Params params = lipdp::init_params(model, rng);
  const lipdp::ClipResult clipped = lipdp::clip_weights(
      model, std::move(params), tc.clip_threshold, tc.clip_norm);
  const lipdp::SensitivityReport report = lipdp::layer_sensitivity(
      model, clipped.params, clipped.u_theta, tc.input_norm_bound,
      lipdp::loss_lipschitz(model.loss));
  std::cout << report.to_text(model);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private training with weight clipping and "
               "per-layer sensitivity bounds"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  long long seed_override = -1;
  std::string variant_override;
  auto* train_cmd =
      app.add_subcommand("train", "Run one training experiment from a config");
  train_cmd->add_option("--config", config_path, "Experiment config file")
      ->required();
  train_cmd->add_option("--output-dir", output_dir,
                        "Where to write results (overrides the config)");
  train_cmd->add_option("--seed", seed_override, "Seed override");
  train_cmd->add_option("--variant", variant_override,
                        "Variant override: lip, classic, or fix");

  double a = 0.0;
  double b = 0.0;
  double clip = 1.0;
  int grid_steps = 20;
  double grid_half_width = 1.5;
  std::string field_path;
  auto* bias_cmd = app.add_subcommand(
      "bias-lab", "Expected-gradient analysis of the skewed regression task");
  bias_cmd->add_option("--a", a, "True slope");
  bias_cmd->add_option("--b", b, "True intercept");
  bias_cmd->add_option("--clip", clip, "Per-sample gradient clip bound");
  bias_cmd->add_option("--grid-steps", grid_steps,
                       "Vector-field grid subdivisions per axis");
  bias_cmd->add_option("--grid-half-width", grid_half_width,
                       "Vector-field half width around (a, b)");
  bias_cmd->add_option("--field-csv", field_path,
                       "Write the gradient vector field to this CSV");

  double q = 0.01;
  double sigma = 1.0;
  long long steps = 1;
  double delta = 1e-5;
  bool calibrate = false;
  double epsilon = 1.0;
  double sensitivity = 1.0;
  auto* acct_cmd = app.add_subcommand(
      "accountant", "Privacy accounting for subsampled Gaussian steps");
  acct_cmd->add_option("--q", q, "Sampling rate s/n");
  acct_cmd->add_option("--sigma", sigma, "Noise multiplier");
  acct_cmd->add_option("--steps", steps, "Number of composed steps");
  acct_cmd->add_option("--delta", delta, "Target delta");
  acct_cmd->add_flag("--calibrate", calibrate,
                     "Print the Gaussian-mechanism sigma for epsilon/delta/"
                     "sensitivity instead of composing");
  acct_cmd->add_option("--epsilon", epsilon, "Target epsilon (calibrate)");
  acct_cmd->add_option("--sensitivity", sensitivity,
                       "Query sensitivity (calibrate)");

  std::string report_config;
  auto* report_cmd = app.add_subcommand(
      "sensitivity-report",
      "Print per-layer sensitivity bounds for a config's model at "
      "clipped random initialization");
  report_cmd->add_option("--config", report_config, "Experiment config file")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed())
      return run_train(config_path, output_dir, seed_override,
                       variant_override);
    if (bias_cmd->parsed())
      return run_bias_lab(a, b, clip, grid_steps, grid_half_width, field_path);
    if (acct_cmd->parsed())
      return run_accountant(q, sigma, steps, delta, calibrate, epsilon,
                            sensitivity);
    if (report_cmd->parsed()) return run_sensitivity_report(report_config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand selected\n";
  return 1;
}
