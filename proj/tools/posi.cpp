// posi: assumption-lean simultaneous post-selection inference for OLS
// submodels. Every command is a pure function of (flags, input files, seed);
// reruns reproduce output bytes.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "posi/posi.hpp"

namespace {

struct CliValues {
  std::string input;
  std::string output;
  std::string config_path;
  std::string kind;
  std::string policy = "common-threshold";
  std::vector<int> model;
  std::vector<double> theta;
  double alpha = 0.1;
  int b = 1000;
  std::uint64_t seed = 0;
  int k_override = 0;
  long points = 1000000;
  bool mc_volume = false;
  int response_column = 0;
  bool with_header = false;
  bool add_intercept = false;
};

posi::Dataset read_dataset(const CliValues& values) {
  posi::LoadOptions options;
  options.header = values.with_header;
  options.response_column = values.response_column;
  options.add_intercept = values.add_intercept;
  return posi::load_dataset(values.input, options);
}

posi::BootstrapConfig bootstrap_config(const CliValues& values) {
  posi::BootstrapConfig config;
  config.b = values.b;
  config.alpha = values.alpha;
  config.seed = values.seed;
  config.policy = posi::policy_from_label(values.policy);
  return config;
}

void emit(const nlohmann::ordered_json& j, const std::string& output) {
  std::string text = j.dump(2);
  text += '\n';
  if (output.empty())
    std::cout << text;
  else
    posi::atomic_write_text(output, text);
}

posi::ExperimentConfig read_experiment_config(const CliValues& values) {
  std::ifstream stream(values.config_path);
  if (!stream) throw posi::data_error("config: cannot open '" + values.config_path + "'");
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(stream);
  } catch (const nlohmann::json::exception& e) {
    throw posi::data_error("config: " + values.config_path + ": " + e.what());
  }
  posi::ExperimentConfig config = posi::experiment_config_from_json(parsed);
  if (values.k_override > 0) config.k = values.k_override;
  return config;
}

void cmd_fit(const CliValues& values) {
  const posi::Dataset data = read_dataset(values);
  const posi::MomentPair moments = posi::sample_moments(data);
  const posi::ModelIndex model = posi::ModelIndex::from_one_based(values.model);
  model.check_within(data.p());
  emit(posi::fit_result_to_json(posi::fit(moments, model)), values.output);
}

void cmd_quantiles(const CliValues& values) {
  const posi::Dataset data = read_dataset(values);
  const posi::BootstrapConfig config = bootstrap_config(values);
  emit(posi::quantile_pair_to_json(posi::estimate_quantiles(data, config), config), values.output);
}

void cmd_region(const CliValues& values) {
  const posi::Dataset data = read_dataset(values);
  const posi::MomentPair moments = posi::sample_moments(data);
  const posi::ModelIndex model = posi::ModelIndex::from_one_based(values.model);
  model.check_within(data.p());
  const posi::BootstrapConfig config = bootstrap_config(values);
  const posi::QuantilePair quantiles = posi::estimate_quantiles(data, config);
  const posi::RegionKind kind = posi::region_kind_from_label(values.kind);
  const posi::RegionSpec region = posi::make_region(kind, data, moments, model, quantiles);
  if (values.theta.empty()) {
    emit(posi::region_to_json(region), values.output);
    return;
  }
  const Eigen::VectorXd theta =
      Eigen::Map<const Eigen::VectorXd>(values.theta.data(), static_cast<Eigen::Index>(values.theta.size()));
  nlohmann::ordered_json j;
  j["kind"] = posi::region_kind_label(kind);
  j["model"] = model.one_based();
  j["theta"] = values.theta;
  j["contains"] = posi::contains(region, theta);
  emit(j, values.output);
}

void cmd_test(const CliValues& values) {
  const posi::Dataset data = read_dataset(values);
  const posi::MomentPair moments = posi::sample_moments(data);
  const posi::ModelIndex model = posi::ModelIndex::from_one_based(values.model);
  model.check_within(data.p());
  const posi::BootstrapConfig config = bootstrap_config(values);
  const posi::QuantilePair quantiles = posi::estimate_quantiles(data, config);
  const posi::TestVariant variant = posi::test_variant_from_label(values.kind);
  const posi::FitResult fit_result = posi::fit(moments, model);
  const posi::TestResult result = posi::significance_test(fit_result, moments, quantiles, variant);
  nlohmann::ordered_json j;
  j["model"] = model.one_based();
  j["variant"] = values.kind;
  j["alpha"] = values.alpha;
  j["statistic"] = result.statistic;
  j["threshold"] = result.threshold;
  j["reject"] = result.reject;
  emit(j, values.output);
}

void cmd_volume(const CliValues& values) {
  const posi::RegionKind kind = posi::region_kind_from_label(values.kind);
  if (kind != posi::RegionKind::dagger && kind != posi::RegionKind::rip)
    throw posi::argument_error("volume unavailable for kind=" + values.kind +
                               "; use simulate --mc-volume");
  const posi::Dataset data = read_dataset(values);
  const posi::MomentPair moments = posi::sample_moments(data);
  const posi::ModelIndex model = posi::ModelIndex::from_one_based(values.model);
  model.check_within(data.p());
  const posi::BootstrapConfig config = bootstrap_config(values);
  const posi::QuantilePair quantiles = posi::estimate_quantiles(data, config);
  const posi::RegionSpec region = posi::make_region(kind, data, moments, model, quantiles);
  if (kind == posi::RegionKind::dagger) {
    emit(posi::volume_report_to_json(posi::dagger_volume(region)), values.output);
    return;
  }
  nlohmann::ordered_json j;  // rip: exact axis-aligned box
  j["model"] = model.one_based();
  j["radius"] = quantiles.c_gamma;
  j["infinite"] = false;
  j["volume"] = std::pow(2.0 * quantiles.c_gamma, model.size());
  emit(j, values.output);
}

void cmd_mc_volume(const CliValues& values) {
  if (values.input.empty() || values.model.empty() || values.kind.empty())
    throw posi::argument_error("simulate --mc-volume requires --input, --model and --kind");
  const posi::Dataset data = read_dataset(values);
  const posi::MomentPair moments = posi::sample_moments(data);
  const posi::ModelIndex model = posi::ModelIndex::from_one_based(values.model);
  model.check_within(data.p());
  const posi::BootstrapConfig config = bootstrap_config(values);
  const posi::QuantilePair quantiles = posi::estimate_quantiles(data, config);
  const posi::RegionKind kind = posi::region_kind_from_label(values.kind);
  const posi::RegionSpec region = posi::make_region(kind, data, moments, model, quantiles);
  const posi::McVolumeResult result =
      posi::mc_region_volume(region, values.points, posi::derive_seed(values.seed, 0xACEULL));
  emit(posi::mc_volume_to_json(result, region), values.output);
}

void cmd_simulate(const CliValues& values) {
  if (values.mc_volume) {
    cmd_mc_volume(values);
    return;
  }
  if (values.config_path.empty())
    throw posi::argument_error("simulate requires --config (or --mc-volume)");
  const posi::ExperimentConfig config = read_experiment_config(values);
  nlohmann::ordered_json j;
  switch (config.experiment) {
    case posi::ExperimentKind::coverage: {
      const posi::CoverageReport report = posi::run_coverage_experiment(config);
      j = posi::coverage_report_to_json(report, config);
      if (!config.events_csv.empty())
        posi::atomic_write_text(config.events_csv, posi::events_to_csv(report));
      std::cerr << "coverage: " << report.reps << " reps in " << report.runtime_seconds << " s\n";
      break;
    }
    case posi::ExperimentKind::volume_rate: {
      const posi::VolumeRateReport report = posi::run_volume_rate_experiment(config);
      j = posi::volume_rate_report_to_json(report, config);
      std::cerr << "volumeRate: " << report.runtime_seconds << " s\n";
      break;
    }
    case posi::ExperimentKind::max_t: {
      const posi::MaxTReport report = posi::run_max_t_comparison(config);
      j = posi::max_t_report_to_json(report, config);
      std::cerr << "maxT: " << report.runtime_seconds << " s\n";
      break;
    }
  }
  emit(j, values.output);
}

void cmd_compare(const CliValues& values) {
  const posi::ExperimentConfig config = read_experiment_config(values);
  const posi::MaxTReport report = posi::run_max_t_comparison(config);
  std::cerr << "maxT: " << report.runtime_seconds << " s\n";
  emit(posi::max_t_report_to_json(report, config), values.output);
}

void add_io_flags(CLI::App* cmd, CliValues& values) {
  cmd->add_option("--input", values.input, "input CSV (covariate columns then response)")->required();
  cmd->add_option("--response", values.response_column,
                  "1-based response column (default: last column)");
  cmd->add_flag("--with-header", values.with_header, "skip the first CSV line");
  cmd->add_flag("--add-intercept", values.add_intercept, "prepend a constant-1 covariate");
  cmd->add_option("--output", values.output, "write JSON here (atomic); default stdout");
}

void add_bootstrap_flags(CLI::App* cmd, CliValues& values, bool required) {
  auto* alpha = cmd->add_option("--alpha", values.alpha, "miscoverage level in (0,1)");
  auto* b = cmd->add_option("--B", values.b, "bootstrap replicates (>= 100)");
  auto* seed = cmd->add_option("--seed", values.seed, "bootstrap seed");
  cmd->add_option("--policy", values.policy, "common-threshold | marginal-search");
  if (required) {
    alpha->required();
    b->required();
    seed->required();
  }
}

void add_model_flag(CLI::App* cmd, CliValues& values) {
  cmd->add_option("--model", values.model, "comma-separated 1-based covariate indices")
      ->required()
      ->delimiter(',');
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"assumption-lean simultaneous post-selection inference for OLS submodels"};
  app.require_subcommand(1);
  CliValues values;

  CLI::App* fit_cmd = app.add_subcommand("fit", "min-norm OLS coefficients for one submodel");
  add_io_flags(fit_cmd, values);
  add_model_flag(fit_cmd, values);

  CLI::App* quantiles_cmd =
      app.add_subcommand("quantiles", "multiplier-bootstrap joint deviation quantiles");
  add_io_flags(quantiles_cmd, values);
  add_bootstrap_flags(quantiles_cmd, values, true);

  CLI::App* region_cmd = app.add_subcommand("region", "simultaneous confidence region for one submodel");
  add_io_flags(region_cmd, values);
  add_model_flag(region_cmd, values);
  add_bootstrap_flags(region_cmd, values, false);
  region_cmd->add_option("--kind", values.kind,
                         "finite | dagger | rip | lassoFinite | lassoDagger | sqrtLassoFinite | sqrtLassoDagger")
      ->required();
  region_cmd->add_option("--theta", values.theta, "comma-separated point; reports membership")
      ->delimiter(',');

  CLI::App* test_cmd = app.add_subcommand("test", "post-selection significance test of beta(M) = 0");
  add_io_flags(test_cmd, values);
  add_model_flag(test_cmd, values);
  add_bootstrap_flags(test_cmd, values, false);
  test_cmd->add_option("--kind", values.kind, "finite | dagger")->required();

  CLI::App* volume_cmd = app.add_subcommand("volume", "closed-form region volume (dagger, rip)");
  add_io_flags(volume_cmd, values);
  add_model_flag(volume_cmd, values);
  add_bootstrap_flags(volume_cmd, values, false);
  volume_cmd->add_option("--kind", values.kind, "dagger | rip")->required();

  CLI::App* simulate_cmd =
      app.add_subcommand("simulate", "run a coverage / volumeRate / maxT experiment from a config file");
  simulate_cmd->add_option("--config", values.config_path, "experiment config JSON");
  simulate_cmd->add_option("--output", values.output, "write the report here (atomic); default stdout");
  simulate_cmd->add_option("--k", values.k_override, "override the config's model-size cap");
  simulate_cmd->add_flag("--mc-volume", values.mc_volume,
                         "hit-or-miss Monte Carlo volume for any region kind (needs --input/--model/--kind)");
  simulate_cmd->add_option("--input", values.input, "input CSV for --mc-volume");
  simulate_cmd->add_option("--response", values.response_column, "1-based response column for --mc-volume");
  simulate_cmd->add_flag("--with-header", values.with_header, "skip the first CSV line");
  simulate_cmd->add_flag("--add-intercept", values.add_intercept, "prepend a constant-1 covariate");
  simulate_cmd->add_option("--model", values.model, "submodel for --mc-volume")->delimiter(',');
  simulate_cmd->add_option("--kind", values.kind, "region kind for --mc-volume");
  simulate_cmd->add_option("--points", values.points, "Monte Carlo points for --mc-volume (>= 1000)");
  add_bootstrap_flags(simulate_cmd, values, false);

  CLI::App* compare_cmd = app.add_subcommand("compare", "max-|t| vs dagger comparison from a config file");
  compare_cmd->add_option("--config", values.config_path, "experiment config JSON")->required();
  compare_cmd->add_option("--output", values.output, "write the report here (atomic); default stdout");
  compare_cmd->add_option("--k", values.k_override, "override the config's model-size cap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(fit_cmd)) cmd_fit(values);
    else if (app.got_subcommand(quantiles_cmd)) cmd_quantiles(values);
    else if (app.got_subcommand(region_cmd)) cmd_region(values);
    else if (app.got_subcommand(test_cmd)) cmd_test(values);
    else if (app.got_subcommand(volume_cmd)) cmd_volume(values);
    else if (app.got_subcommand(simulate_cmd)) cmd_simulate(values);
    else if (app.got_subcommand(compare_cmd)) cmd_compare(values);
    return 0;
  } catch (const posi::argument_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const posi::data_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const posi::capability_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
}
