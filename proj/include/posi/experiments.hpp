#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "posi/bootstrap.hpp"
#include "posi/dataset.hpp"
#include "posi/errors.hpp"
#include "posi/moments.hpp"
#include "posi/numeric.hpp"
#include "posi/ols.hpp"
#include "posi/parallel.hpp"
#include "posi/regions.hpp"
#include "posi/rng.hpp"
#include "posi/simulator.hpp"

namespace posi {

// Atomic text write: temp file in the target directory, then rename.
inline void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path temp = path.string() + ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("write: cannot open '" + temp.string() + "'");
    out << content;
    if (!out) throw data_error("write: failure on '" + temp.string() + "'");
  }
  std::filesystem::rename(temp, path);
}

// ---------------------------------------------------------------------------
// Quantile rule. Random designs use the configured joint bootstrap policy.
// Frozen designs have dSigma identically zero, so their experiments drop the
// Gram block: cGamma is the marginal order-statistic quantile of the sI
// stream and cSigma = 0 (the generic joint policy cannot know the design is
// fixed and would inflate both constants).
// ---------------------------------------------------------------------------
enum class QuantileRule { automatic, joint, fixed_design };

inline std::string quantile_rule_label(QuantileRule rule) {
  switch (rule) {
    case QuantileRule::automatic: return "auto";
    case QuantileRule::joint: return "joint";
    case QuantileRule::fixed_design: return "fixedDesign";
  }
  throw argument_error("quantile rule: unknown value");
}

inline QuantileRule quantile_rule_from_label(const std::string& label) {
  if (label == "auto") return QuantileRule::automatic;
  if (label == "joint") return QuantileRule::joint;
  if (label == "fixedDesign") return QuantileRule::fixed_design;
  throw argument_error("quantile rule: unknown label '" + label + "' (auto | joint | fixedDesign)");
}

inline QuantilePair fixed_design_quantiles(const ReplicateStats& stats, const BootstrapConfig& config) {
  config.validate();
  const Eigen::Index b = stats.s_gamma.size();
  QuantilePair pair;
  pair.c_gamma = order_statistic_quantile(
      std::vector<double>(stats.s_gamma.data(), stats.s_gamma.data() + b), config.alpha);
  pair.c_sigma = 0.0;
  std::vector<double> maxes(static_cast<std::size_t>(b));
  for (Eigen::Index j = 0; j < b; ++j)
    maxes[static_cast<std::size_t>(j)] = std::max(stats.s_gamma(j), stats.s_sigma(j));
  pair.c_max = order_statistic_quantile(std::move(maxes), config.alpha);
  long covered = 0;
  for (Eigen::Index j = 0; j < b; ++j)
    if (stats.s_gamma(j) <= pair.c_gamma) ++covered;
  pair.achieved_coverage = static_cast<double>(covered) / static_cast<double>(b);
  return pair;
}

// ---------------------------------------------------------------------------
// Experiment configuration (the simulate/compare config file schema).
// ---------------------------------------------------------------------------
enum class ExperimentKind { coverage, volume_rate, max_t };

inline std::string experiment_kind_label(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::coverage: return "coverage";
    case ExperimentKind::volume_rate: return "volumeRate";
    case ExperimentKind::max_t: return "maxT";
  }
  throw argument_error("experiment: unknown kind");
}

inline ExperimentKind experiment_kind_from_label(const std::string& label) {
  if (label == "coverage") return ExperimentKind::coverage;
  if (label == "volumeRate") return ExperimentKind::volume_rate;
  if (label == "maxT") return ExperimentKind::max_t;
  throw argument_error("experiment: unknown kind '" + label + "' (coverage | volumeRate | maxT)");
}

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::coverage;
  DgpSpec dgp;
  int k = 1;
  BootstrapConfig bootstrap;
  std::vector<std::string> region_kinds = {"finite", "dagger", "intersection"};
  long reps = 100;
  std::uint64_t seed = 0;
  QuantileRule quantile_rule = QuantileRule::automatic;
  std::vector<Eigen::Index> n_grid;  // volumeRate
  std::vector<int> k_grid;           // maxT
  double work_budget = 5e11;         // ceiling on reps * B * n * q
  std::string events_csv;            // optional per-rep event dump

  QuantileRule resolved_rule() const {
    if (quantile_rule != QuantileRule::automatic) return quantile_rule;
    return dgp.kind == DgpKind::fixed_design ? QuantileRule::fixed_design : QuantileRule::joint;
  }
};

inline void check_experiment_budget(const ExperimentConfig& config, double rep_count) {
  const double projected = rep_count * static_cast<double>(config.bootstrap.b) *
                           static_cast<double>(config.dgp.n) *
                           static_cast<double>(w_column_count(static_cast<int>(config.dgp.p)));
  if (projected > config.work_budget)
    throw capability_error("experiment: projected bootstrap work " + std::to_string(projected) +
                           " multiply-adds exceeds the budget " + std::to_string(config.work_budget) +
                           "; lower reps/B or raise workBudget");
}

// ---------------------------------------------------------------------------
// Coverage experiment.
// ---------------------------------------------------------------------------
struct KindReport {
  std::string kind;  // region kind label or "intersection"
  double simultaneous = 0.0;
  double simultaneous_se = 0.0;
  std::vector<std::pair<ModelIndex, double>> per_model;
  double adversarial = 0.0;
  double adversarial_se = 0.0;
  double max_correlation = 0.0;
  double max_correlation_se = 0.0;
  double practical = 0.0;
  double practical_se = 0.0;
  std::vector<std::pair<ModelIndex, double>> mean_volume;  // closed-form kinds only
  long adversarial_mismatches = 0;
};

struct RepEventRow {
  long rep = 0;
  std::string kind;
  bool simultaneous = false;
  bool adversarial = false;
  bool max_correlation = false;
  bool practical = false;
};

struct CoverageReport {
  long reps = 0;
  double alpha = 0.0;
  std::string quantile_rule;
  std::vector<KindReport> kinds;
  std::vector<RepEventRow> events;  // CSV export; not part of the JSON report
  double runtime_seconds = 0.0;     // stderr logging only; never serialized
};

namespace detail {

struct ResolvedKinds {
  std::vector<RegionKind> concrete;
  bool intersection = false;
};

inline ResolvedKinds resolve_region_kinds(const std::vector<std::string>& labels) {
  ResolvedKinds resolved;
  for (const std::string& label : labels) {
    if (label == "intersection")
      resolved.intersection = true;
    else
      resolved.concrete.push_back(region_kind_from_label(label));
  }
  if (resolved.concrete.empty() && resolved.intersection)
    resolved.concrete = {RegionKind::finite, RegionKind::dagger, RegionKind::lasso_finite};
  if (resolved.concrete.empty()) throw argument_error("experiment: regionKinds must name at least one kind");
  return resolved;
}

}  // namespace detail

inline CoverageReport run_coverage_experiment(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  validate_dgp(config.dgp);
  config.bootstrap.validate();
  if (config.reps < 1) throw argument_error("experiment: reps must be >= 1");
  detail::check_sweep_caps(config.dgp.p, config.k, "run_coverage_experiment");
  check_experiment_budget(config, static_cast<double>(config.reps));

  const detail::ResolvedKinds resolved = detail::resolve_region_kinds(config.region_kinds);
  const QuantileRule rule = config.resolved_rule();
  const ModelFamily family = enumerate_models(static_cast<int>(config.dgp.p), config.k);
  const std::size_t n_models = family.members.size();
  const std::size_t n_concrete = resolved.concrete.size();
  const std::size_t n_kinds = n_concrete + (resolved.intersection ? 1 : 0);

  // Population targets are seed-independent; compute them once.
  DgpSpec probe = config.dgp;
  probe.seed = derive_seed(config.seed, 0);
  const PopulationOracle oracle = generate(probe).second;
  std::vector<Eigen::VectorXd> targets;
  targets.reserve(n_models);
  for (const ModelIndex& model : family.members) targets.push_back(oracle.target(model));
  std::map<ModelIndex, std::size_t> model_slot;
  for (std::size_t i = 0; i < n_models; ++i) model_slot.emplace(family.members[i], i);

  struct RepOutcome {
    std::vector<std::vector<std::uint8_t>> covered;  // kind x model
    std::size_t max_corr_slot = 0;
    std::size_t practical_slot = 0;
    std::vector<double> dagger_volume_per_model;  // filled when dagger is among the kinds
    double c_gamma = 0.0;
  };
  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(config.reps));

  const auto dagger_position = [&]() -> std::ptrdiff_t {
    for (std::size_t kind_i = 0; kind_i < n_concrete; ++kind_i)
      if (resolved.concrete[kind_i] == RegionKind::dagger) return static_cast<std::ptrdiff_t>(kind_i);
    return -1;
  }();

  parallel_for(static_cast<std::size_t>(config.reps), [&](std::size_t r) {
    DgpSpec dgp_r = config.dgp;
    dgp_r.seed = derive_seed(config.seed, 2 * static_cast<std::uint64_t>(r));
    const Dataset data = generate(dgp_r).first;
    const MomentPair moments = sample_moments(data);

    BootstrapConfig boot_r = config.bootstrap;
    boot_r.seed = derive_seed(config.seed, 2 * static_cast<std::uint64_t>(r) + 1);
    const ReplicateStats stats = run_replicates(build_w_matrix(data), boot_r);
    const QuantilePair quantiles = rule == QuantileRule::fixed_design
                                       ? fixed_design_quantiles(stats, boot_r)
                                       : joint_quantiles(stats, boot_r);

    RepOutcome& outcome = outcomes[r];
    outcome.c_gamma = quantiles.c_gamma;
    outcome.covered.assign(n_kinds, std::vector<std::uint8_t>(n_models, 0));
    if (dagger_position >= 0) outcome.dagger_volume_per_model.assign(n_models, 0.0);

    for (std::size_t kind_i = 0; kind_i < n_concrete; ++kind_i) {
      const RegionKind kind = resolved.concrete[kind_i];
      for (std::size_t m = 0; m < n_models; ++m) {
        const RegionSpec region = make_region(kind, data, moments, family.members[m], quantiles);
        outcome.covered[kind_i][m] = contains(region, targets[m]) ? 1 : 0;
        if (kind == RegionKind::dagger)
          outcome.dagger_volume_per_model[m] = dagger_volume(region).volume;
      }
    }
    if (resolved.intersection) {
      for (std::size_t m = 0; m < n_models; ++m) {
        std::uint8_t all = 1;
        for (std::size_t kind_i = 0; kind_i < n_concrete; ++kind_i) all &= outcome.covered[kind_i][m];
        outcome.covered[n_concrete][m] = all;
      }
    }
    outcome.max_corr_slot = model_slot.at(select_max_correlation(data));
    outcome.practical_slot =
        model_slot.at(select_practical(data, PracticalMethod::forward_stepwise, config.k));
  });

  // Sequential aggregation keeps the report bit-identical across thread counts.
  CoverageReport report;
  report.reps = config.reps;
  report.alpha = config.bootstrap.alpha;
  report.quantile_rule = quantile_rule_label(rule);
  report.kinds.resize(n_kinds);
  report.events.reserve(static_cast<std::size_t>(config.reps) * n_kinds);
  for (std::size_t kind_i = 0; kind_i < n_kinds; ++kind_i) {
    KindReport& kr = report.kinds[kind_i];
    kr.kind = kind_i < n_concrete ? region_kind_label(resolved.concrete[kind_i]) : "intersection";
    std::vector<long> model_hits(n_models, 0);
    long sim_hits = 0, adv_hits = 0, mc_hits = 0, pr_hits = 0;
    for (long r = 0; r < config.reps; ++r) {
      const RepOutcome& outcome = outcomes[static_cast<std::size_t>(r)];
      const auto& covered = outcome.covered[kind_i];
      bool simultaneous = true;
      std::size_t adversarial_slot = 0;
      bool found_miss = false;
      for (std::size_t m = 0; m < n_models; ++m) {
        model_hits[m] += covered[m];
        if (!covered[m] && !found_miss) {
          adversarial_slot = m;  // first failure in canonical order
          found_miss = true;
        }
        simultaneous = simultaneous && covered[m];
      }
      const bool adversarial = covered[adversarial_slot] != 0;
      if (adversarial != simultaneous) ++kr.adversarial_mismatches;  // must never happen
      const bool max_corr = covered[outcome.max_corr_slot] != 0;
      const bool practical = covered[outcome.practical_slot] != 0;
      sim_hits += simultaneous;
      adv_hits += adversarial;
      mc_hits += max_corr;
      pr_hits += practical;
      report.events.push_back({r, kr.kind, simultaneous, adversarial, max_corr, practical});
    }
    const auto reps_d = static_cast<double>(config.reps);
    kr.simultaneous = static_cast<double>(sim_hits) / reps_d;
    kr.simultaneous_se = coverage_standard_error(kr.simultaneous, config.reps);
    kr.adversarial = static_cast<double>(adv_hits) / reps_d;
    kr.adversarial_se = coverage_standard_error(kr.adversarial, config.reps);
    kr.max_correlation = static_cast<double>(mc_hits) / reps_d;
    kr.max_correlation_se = coverage_standard_error(kr.max_correlation, config.reps);
    kr.practical = static_cast<double>(pr_hits) / reps_d;
    kr.practical_se = coverage_standard_error(kr.practical, config.reps);
    for (std::size_t m = 0; m < n_models; ++m)
      kr.per_model.emplace_back(family.members[m], static_cast<double>(model_hits[m]) / reps_d);

    if (kind_i < n_concrete && resolved.concrete[kind_i] == RegionKind::dagger) {
      for (std::size_t m = 0; m < n_models; ++m) {
        double total = 0.0;
        for (const RepOutcome& outcome : outcomes) total += outcome.dagger_volume_per_model[m];
        kr.mean_volume.emplace_back(family.members[m], total / static_cast<double>(config.reps));
      }
    }
    if (kind_i < n_concrete && resolved.concrete[kind_i] == RegionKind::rip) {
      for (std::size_t m = 0; m < n_models; ++m) {
        double total = 0.0;
        for (const RepOutcome& outcome : outcomes)
          total += std::pow(2.0 * outcome.c_gamma, family.members[m].size());
        kr.mean_volume.emplace_back(family.members[m], total / static_cast<double>(config.reps));
      }
    }
  }
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// ---------------------------------------------------------------------------
// Volume-rate experiment: mean dagger volume per model over an n grid, with
// log-log slopes of meanVolume^{1/|M|} against n.
// ---------------------------------------------------------------------------
struct VolumeRateRow {
  Eigen::Index n = 0;
  ModelIndex model;
  double mean_volume = 0.0;
};

struct VolumeRateReport {
  std::vector<Eigen::Index> n_grid;
  std::vector<VolumeRateRow> rows;  // grid-major, family order inside a grid point
  std::vector<std::pair<ModelIndex, double>> slope_per_model;
  std::vector<std::pair<int, double>> slope_per_size;
  double runtime_seconds = 0.0;
};

inline VolumeRateReport run_volume_rate_experiment(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  validate_dgp(config.dgp);
  config.bootstrap.validate();
  if (config.reps < 1) throw argument_error("experiment: reps must be >= 1");
  if (config.n_grid.size() < 2) throw argument_error("volumeRate: nGrid needs at least two points");
  detail::check_sweep_caps(config.dgp.p, config.k, "run_volume_rate_experiment");
  double total_n = 0.0;
  for (const Eigen::Index n : config.n_grid) {
    if (n < 1) throw argument_error("volumeRate: grid n must be >= 1");
    total_n += static_cast<double>(n);
  }
  {
    ExperimentConfig scaled = config;
    scaled.dgp.n = static_cast<Eigen::Index>(total_n);
    check_experiment_budget(scaled, static_cast<double>(config.reps));
  }

  const ModelFamily family = enumerate_models(static_cast<int>(config.dgp.p), config.k);
  const std::size_t n_models = family.members.size();
  const QuantileRule rule = config.resolved_rule();

  VolumeRateReport report;
  report.n_grid = config.n_grid;
  std::vector<std::vector<double>> mean_volumes(config.n_grid.size(), std::vector<double>(n_models, 0.0));

  for (std::size_t grid_i = 0; grid_i < config.n_grid.size(); ++grid_i) {
    std::vector<std::vector<double>> per_rep(static_cast<std::size_t>(config.reps));
    const std::uint64_t grid_seed = derive_seed(config.seed, 0xBEEF0000ULL + grid_i);
    parallel_for(static_cast<std::size_t>(config.reps), [&](std::size_t r) {
      DgpSpec dgp_r = config.dgp;
      dgp_r.n = config.n_grid[grid_i];
      dgp_r.seed = derive_seed(grid_seed, 2 * static_cast<std::uint64_t>(r));
      const Dataset data = generate(dgp_r).first;
      const MomentPair moments = sample_moments(data);
      BootstrapConfig boot_r = config.bootstrap;
      boot_r.seed = derive_seed(grid_seed, 2 * static_cast<std::uint64_t>(r) + 1);
      const ReplicateStats stats = run_replicates(build_w_matrix(data), boot_r);
      const QuantilePair quantiles = rule == QuantileRule::fixed_design
                                         ? fixed_design_quantiles(stats, boot_r)
                                         : joint_quantiles(stats, boot_r);
      per_rep[r].resize(n_models);
      for (std::size_t m = 0; m < n_models; ++m) {
        const RegionSpec region = make_region(RegionKind::dagger, moments, family.members[m], quantiles);
        per_rep[r][m] = dagger_volume(region).volume;
      }
    });
    for (std::size_t m = 0; m < n_models; ++m) {
      double total = 0.0;
      for (const auto& volumes : per_rep) total += volumes[m];
      mean_volumes[grid_i][m] = total / static_cast<double>(config.reps);
      report.rows.push_back({config.n_grid[grid_i], family.members[m], mean_volumes[grid_i][m]});
    }
  }

  std::vector<double> log_n;
  log_n.reserve(config.n_grid.size());
  for (const Eigen::Index n : config.n_grid) log_n.push_back(std::log(static_cast<double>(n)));
  for (std::size_t m = 0; m < n_models; ++m) {
    std::vector<double> log_scaled;
    log_scaled.reserve(config.n_grid.size());
    for (std::size_t grid_i = 0; grid_i < config.n_grid.size(); ++grid_i)
      log_scaled.push_back(std::log(mean_volumes[grid_i][m]) / family.members[m].size());
    report.slope_per_model.emplace_back(family.members[m], ols_slope(log_n, log_scaled));
  }
  for (int size = 1; size <= config.k; ++size) {
    std::vector<double> log_scaled;
    log_scaled.reserve(config.n_grid.size());
    for (std::size_t grid_i = 0; grid_i < config.n_grid.size(); ++grid_i) {
      double total = 0.0;
      long count = 0;
      for (std::size_t m = 0; m < n_models; ++m) {
        if (family.members[m].size() != size) continue;
        total += std::pow(mean_volumes[grid_i][m], 1.0 / size);
        ++count;
      }
      log_scaled.push_back(std::log(total / static_cast<double>(count)));
    }
    report.slope_per_size.emplace_back(size, ols_slope(log_n, log_scaled));
  }
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// ---------------------------------------------------------------------------
// Max-|t| comparison on a frozen design: the simultaneous max-|t| constant
// C_{n,k}(alpha) against the dagger region's k-free half-width.
// ---------------------------------------------------------------------------
struct MaxTKRow {
  int k = 0;
  double c_max_t = 0.0;
  double maxt_half_width_size1 = 0.0;  // mean over singleton models
  double ratio_size1 = 0.0;            // maxt / dagger half-width
  std::vector<std::pair<int, double>> volume_ratio_per_size;
};

struct MaxTReport {
  std::vector<int> k_grid;
  double dagger_half_width_size1 = 0.0;
  std::vector<MaxTKRow> rows;
  double runtime_seconds = 0.0;
};

inline MaxTReport run_max_t_comparison(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  validate_dgp(config.dgp);
  config.bootstrap.validate();
  if (config.dgp.kind != DgpKind::fixed_design)
    throw argument_error("maxT: comparison needs the fixedDesign kind (exact coordinate sds)");
  if (config.reps < 2) throw argument_error("maxT: reps must be >= 2");
  if (config.k_grid.empty()) throw argument_error("maxT: kGrid must be non-empty");
  int k_max = 0;
  for (const int k : config.k_grid) {
    if (k < 1) throw argument_error("maxT: grid k must be >= 1");
    k_max = std::max(k_max, k);
  }
  detail::check_sweep_caps(config.dgp.p, k_max, "run_max_t_comparison");
  check_experiment_budget(config, static_cast<double>(config.reps));

  const ModelFamily family = enumerate_models(static_cast<int>(config.dgp.p), k_max);
  const std::size_t n_models = family.members.size();
  const Eigen::Index n = config.dgp.n;
  const double sqrt_n = std::sqrt(static_cast<double>(n));

  // Frozen design: factorizations, targets and coordinate sds are constant.
  DgpSpec probe = config.dgp;
  probe.seed = derive_seed(config.seed, 0);
  const PopulationOracle oracle = generate(probe).second;
  const MomentPair gram{oracle.moments.sigma, oracle.moments.gamma, Provenance::population};
  std::vector<Eigen::LLT<Eigen::MatrixXd>> factors(n_models);
  std::vector<Eigen::VectorXd> targets(n_models);
  std::vector<Eigen::VectorXd> coordinate_sd(n_models);
  std::vector<double> det_sigma(n_models);
  for (std::size_t m = 0; m < n_models; ++m) {
    const Eigen::MatrixXd sigma_m = sigma_sub(gram, family.members[m]);
    factors[m].compute(sigma_m);
    if (factors[m].info() != Eigen::Success)
      throw data_error("maxT: frozen Gram submatrix not positive definite for model " +
                       family.members[m].label());
    targets[m] = factors[m].solve(gamma_sub(gram, family.members[m]));
    const Eigen::MatrixXd inverse = factors[m].solve(
        Eigen::MatrixXd::Identity(family.members[m].size(), family.members[m].size()));
    coordinate_sd[m] = config.dgp.params.noise_scale * inverse.diagonal().cwiseSqrt();
    det_sigma[m] = sigma_m.determinant();
  }

  // Per replication: the running max-|t| per model size, the dagger radius.
  std::vector<std::vector<double>> max_t_by_size(static_cast<std::size_t>(config.reps),
                                                 std::vector<double>(static_cast<std::size_t>(k_max), 0.0));
  std::vector<double> radius(static_cast<std::size_t>(config.reps), 0.0);
  parallel_for(static_cast<std::size_t>(config.reps), [&](std::size_t r) {
    DgpSpec dgp_r = config.dgp;
    dgp_r.seed = derive_seed(config.seed, 2 * static_cast<std::uint64_t>(r));
    const Dataset data = generate(dgp_r).first;
    const MomentPair moments = sample_moments(data);
    for (std::size_t m = 0; m < n_models; ++m) {
      const Eigen::VectorXd beta_hat = factors[m].solve(gamma_sub(moments, family.members[m]));
      const double stat =
          (sqrt_n * (beta_hat - targets[m]).cwiseQuotient(coordinate_sd[m])).cwiseAbs().maxCoeff();
      auto& by_size = max_t_by_size[r][static_cast<std::size_t>(family.members[m].size() - 1)];
      by_size = std::max(by_size, stat);
    }
    BootstrapConfig boot_r = config.bootstrap;
    boot_r.seed = derive_seed(config.seed, 2 * static_cast<std::uint64_t>(r) + 1);
    const ReplicateStats stats = run_replicates(build_w_matrix(data), boot_r);
    radius[r] = fixed_design_quantiles(stats, boot_r).c_gamma;  // dagger radius, cSigma = 0
  });

  // Dagger half-width for singletons: radius / SigmaHat(j,j), averaged.
  double inverse_diag_mean = 0.0;
  for (Eigen::Index j = 0; j < config.dgp.p; ++j) inverse_diag_mean += 1.0 / gram.sigma(j, j);
  inverse_diag_mean /= static_cast<double>(config.dgp.p);
  double mean_radius = 0.0;
  for (const double rad : radius) mean_radius += rad;
  mean_radius /= static_cast<double>(config.reps);

  // Mean dagger volume per model (radius varies per rep, geometry does not).
  std::vector<double> mean_dagger_volume(n_models, 0.0);
  for (std::size_t m = 0; m < n_models; ++m) {
    const int size = family.members[m].size();
    double total = 0.0;
    for (const double rad : radius) total += std::pow(2.0 * rad, size);
    mean_dagger_volume[m] = total / static_cast<double>(config.reps) / std::abs(det_sigma[m]);
  }

  MaxTReport report;
  report.k_grid = config.k_grid;
  report.dagger_half_width_size1 = mean_radius * inverse_diag_mean;
  for (const int k : config.k_grid) {
    // Families are nested in k, so the per-rep statistic is the cumulative
    // max over sizes <= k and C is monotone in k by construction.
    std::vector<double> stat_per_rep(static_cast<std::size_t>(config.reps), 0.0);
    for (std::size_t r = 0; r < static_cast<std::size_t>(config.reps); ++r)
      for (int size = 1; size <= k; ++size)
        stat_per_rep[r] = std::max(stat_per_rep[r], max_t_by_size[r][static_cast<std::size_t>(size - 1)]);
    MaxTKRow row;
    row.k = k;
    row.c_max_t = order_statistic_quantile(std::move(stat_per_rep), config.bootstrap.alpha);
    double maxt_hw = 0.0;
    for (std::size_t m = 0; m < n_models; ++m)
      if (family.members[m].size() == 1)
        maxt_hw += row.c_max_t * coordinate_sd[m](0) / sqrt_n;
    row.maxt_half_width_size1 = maxt_hw / static_cast<double>(config.dgp.p);
    row.ratio_size1 = row.maxt_half_width_size1 / report.dagger_half_width_size1;
    for (int size = 1; size <= k; ++size) {
      double ratio_total = 0.0;
      long count = 0;
      for (std::size_t m = 0; m < n_models; ++m) {
        if (family.members[m].size() != size) continue;
        double maxt_volume = 1.0;
        for (Eigen::Index j = 0; j < size; ++j)
          maxt_volume *= 2.0 * row.c_max_t * coordinate_sd[m](j) / sqrt_n;
        ratio_total += maxt_volume / mean_dagger_volume[m];
        ++count;
      }
      row.volume_ratio_per_size.emplace_back(size, ratio_total / static_cast<double>(count));
    }
    report.rows.push_back(std::move(row));
  }
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// ---------------------------------------------------------------------------
// Hit-or-miss Monte Carlo volume estimation (simulator utility; the CLI
// routes `volume --kind finite` here). Samples uniformly from an analytic
// bounding box of the requested region.
// ---------------------------------------------------------------------------
struct McVolumeResult {
  double volume = 0.0;
  double standard_error = 0.0;
  double hit_fraction = 0.0;
  long points = 0;
  bool unbounded = false;
};

namespace detail {

// Bounding box half-widths around a center; throws capability_error when the
// region cannot be certified bounded.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> region_bounding_box(const RegionSpec& region) {
  const Eigen::Index m = region.fit.beta.size();
  const double c_gamma = region.quantiles.c_gamma;
  const double c_sigma = region.quantiles.c_sigma;
  const double l1_fit = region.fit.beta.cwiseAbs().sum();
  switch (region.kind) {
    case RegionKind::rip:
      return {region.fit.beta, Eigen::VectorXd::Constant(m, c_gamma)};
    case RegionKind::finite:
    case RegionKind::dagger: {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(region.sigma_m);
      if (!lu.isInvertible())
        throw capability_error("mc volume: singular Sigma(M), region is unbounded");
      const Eigen::MatrixXd inverse = lu.inverse();
      const Eigen::VectorXd row_sums = inverse.cwiseAbs().rowwise().sum();
      double limit;  // sup-norm bound on the slack vector u
      if (region.kind == RegionKind::dagger) {
        limit = c_gamma + c_sigma * l1_fit;
      } else {
        const double total = inverse.cwiseAbs().sum();
        if (c_sigma * total >= 1.0)
          throw capability_error("mc volume: finite region not certifiably bounded (cSigma too large)");
        limit = (c_gamma + c_sigma * l1_fit) / (1.0 - c_sigma * total);
      }
      return {region.fit.beta, (row_sums * limit).eval()};
    }
    default: {
      // Empirical-risk kinds: bound ||theta||_2 through the risk quadratic
      //   lambda_min t^2 - 2 ||gamma(M)|| t + mean(y^2) <= rhs(t).
      if (region.x_m.size() == 0) throw argument_error("mc volume: region built without dataset");
      const Eigen::Index n = region.y.size();
      Eigen::VectorXd gamma_m(region.x_m.cols());
      for (Eigen::Index j = 0; j < region.x_m.cols(); ++j)
        gamma_m(j) = mean_product(region.x_m.col(j).data(), region.y.data(), n);
      const double mean_y2 = mean_product(region.y.data(), region.y.data(), n);
      const double lambda_min = lambda_min_of(region.sigma_m);
      const double c = region.quantiles.c_max;
      const double sqrt_m = std::sqrt(static_cast<double>(m));
      double a = 0.0, b = 0.0, constant = 0.0;
      if (region.kind == RegionKind::lasso_finite || region.kind == RegionKind::lasso_dagger) {
        const double theta_l1_coef = region.kind == RegionKind::lasso_finite ? 2.0 * c : 0.0;
        const double theta_l1sq_coef = region.kind == RegionKind::lasso_finite ? c : 0.0;
        const double free = region.kind == RegionKind::lasso_finite
                                ? region.risk_at_fit + 2.0 * c * l1_fit + c * l1_fit * l1_fit
                                : region.risk_at_fit + 4.0 * c * l1_fit + 2.0 * c * l1_fit * l1_fit;
        a = lambda_min - theta_l1sq_coef * static_cast<double>(m);
        b = 2.0 * gamma_m.norm() + theta_l1_coef * sqrt_m;
        constant = mean_y2 - free;
      } else {
        const double root_fit = std::sqrt(region.risk_at_fit);
        const double k_free = region.kind == RegionKind::sqrt_lasso_finite
                                  ? root_fit + std::sqrt(c) * (2.0 + l1_fit)
                                  : root_fit + 2.0 * std::sqrt(c) * (1.0 + l1_fit);
        const double theta_coef = region.kind == RegionKind::sqrt_lasso_finite ? std::sqrt(c) : 0.0;
        a = lambda_min - theta_coef * theta_coef * static_cast<double>(m);
        b = 2.0 * gamma_m.norm() + 2.0 * k_free * theta_coef * sqrt_m;
        constant = mean_y2 - k_free * k_free;
      }
      if (!(a > 0.0))
        throw capability_error("mc volume: risk region not certifiably bounded (cMax too large)");
      const double disc = std::max(b * b - 4.0 * a * constant, 0.0);
      const double t_max = (b + std::sqrt(disc)) / (2.0 * a);
      return {Eigen::VectorXd::Zero(m), Eigen::VectorXd::Constant(m, t_max)};
    }
  }
}

}  // namespace detail

inline McVolumeResult mc_region_volume(const RegionSpec& region, long points, std::uint64_t seed) {
  if (points < 1000) throw argument_error("mc volume: need at least 1000 points");
  const auto [center, half_width] = detail::region_bounding_box(region);
  const Eigen::Index m = center.size();
  double box_volume = 1.0;
  for (Eigen::Index j = 0; j < m; ++j) box_volume *= 2.0 * half_width(j);
  Rng rng(derive_seed(seed, 0x7CBULL));
  long hits = 0;
  Eigen::VectorXd theta(m);
  for (long i = 0; i < points; ++i) {
    for (Eigen::Index j = 0; j < m; ++j)
      theta(j) = center(j) + half_width(j) * (2.0 * rng.uniform01() - 1.0);
    if (contains(region, theta)) ++hits;
  }
  McVolumeResult result;
  result.points = points;
  result.hit_fraction = static_cast<double>(hits) / static_cast<double>(points);
  result.volume = box_volume * result.hit_fraction;
  result.standard_error =
      box_volume * coverage_standard_error(result.hit_fraction, points);
  return result;
}

// ---------------------------------------------------------------------------
// Wire formats.
// ---------------------------------------------------------------------------
inline nlohmann::ordered_json experiment_config_to_json(const ExperimentConfig& config) {
  nlohmann::ordered_json j;
  j["experiment"] = experiment_kind_label(config.experiment);
  j["dgp"] = dgp_to_json(config.dgp);
  j["k"] = config.k;
  nlohmann::ordered_json boot;
  boot["B"] = config.bootstrap.b;
  boot["alpha"] = config.bootstrap.alpha;
  boot["seed"] = config.bootstrap.seed;
  boot["policy"] = policy_label(config.bootstrap.policy);
  j["bootstrap"] = std::move(boot);
  j["regionKinds"] = config.region_kinds;
  j["reps"] = config.reps;
  j["seed"] = config.seed;
  j["quantileRule"] = quantile_rule_label(config.quantile_rule);
  if (!config.n_grid.empty()) j["nGrid"] = config.n_grid;
  if (!config.k_grid.empty()) j["kGrid"] = config.k_grid;
  j["workBudget"] = config.work_budget;
  if (!config.events_csv.empty()) j["eventsCsv"] = config.events_csv;
  return j;
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  try {
    ExperimentConfig config;
    config.experiment = experiment_kind_from_label(j.value("experiment", "coverage"));
    config.dgp = dgp_from_json(j.at("dgp"));
    config.k = j.value("k", 1);
    if (j.contains("bootstrap")) {
      const auto& boot = j.at("bootstrap");
      config.bootstrap.b = boot.value("B", 1000);
      config.bootstrap.alpha = boot.value("alpha", 0.1);
      config.bootstrap.seed = boot.value("seed", std::uint64_t{0});
      config.bootstrap.policy = policy_from_label(boot.value("policy", "common-threshold"));
    }
    if (j.contains("regionKinds")) config.region_kinds = j.at("regionKinds").get<std::vector<std::string>>();
    config.reps = j.value("reps", 100L);
    config.seed = j.value("seed", std::uint64_t{0});
    config.quantile_rule = quantile_rule_from_label(j.value("quantileRule", "auto"));
    if (j.contains("nGrid")) config.n_grid = j.at("nGrid").get<std::vector<Eigen::Index>>();
    if (j.contains("kGrid")) config.k_grid = j.at("kGrid").get<std::vector<int>>();
    config.work_budget = j.value("workBudget", 5e11);
    config.events_csv = j.value("eventsCsv", std::string());
    return config;
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("experiment config: ") + e.what());
  }
}

inline nlohmann::ordered_json coverage_report_to_json(const CoverageReport& report,
                                                      const ExperimentConfig& config) {
  nlohmann::ordered_json j;
  j["experiment"] = "coverage";
  j["config"] = experiment_config_to_json(config);
  j["reps"] = report.reps;
  j["alpha"] = report.alpha;
  j["quantileRule"] = report.quantile_rule;
  auto kinds = nlohmann::ordered_json::array();
  for (const KindReport& kr : report.kinds) {
    nlohmann::ordered_json entry;
    entry["kind"] = kr.kind;
    entry["simultaneousCoverage"] = kr.simultaneous;
    entry["simultaneousSe"] = kr.simultaneous_se;
    nlohmann::ordered_json per_model;
    for (const auto& [model, freq] : kr.per_model) per_model[model.label()] = freq;
    entry["perModelCoverage"] = std::move(per_model);
    nlohmann::ordered_json selectors;
    selectors["adversarial"] = kr.adversarial;
    selectors["maxCorrelation"] = kr.max_correlation;
    selectors["practical"] = kr.practical;
    entry["selectorCoverage"] = std::move(selectors);
    nlohmann::ordered_json selector_se;
    selector_se["adversarial"] = kr.adversarial_se;
    selector_se["maxCorrelation"] = kr.max_correlation_se;
    selector_se["practical"] = kr.practical_se;
    entry["selectorSe"] = std::move(selector_se);
    if (!kr.mean_volume.empty()) {
      nlohmann::ordered_json volumes;
      for (const auto& [model, volume] : kr.mean_volume) volumes[model.label()] = volume;
      entry["meanVolumePerModel"] = std::move(volumes);
    }
    entry["adversarialMismatches"] = kr.adversarial_mismatches;
    kinds.push_back(std::move(entry));
  }
  j["kinds"] = std::move(kinds);
  return j;
}

inline std::string events_to_csv(const CoverageReport& report) {
  std::string csv = "rep,kind,simultaneous,adversarial,maxCorrelation,practical\n";
  for (const RepEventRow& row : report.events) {
    csv += std::to_string(row.rep);
    csv += ',';
    csv += row.kind;
    csv += ',';
    csv += row.simultaneous ? '1' : '0';
    csv += ',';
    csv += row.adversarial ? '1' : '0';
    csv += ',';
    csv += row.max_correlation ? '1' : '0';
    csv += ',';
    csv += row.practical ? '1' : '0';
    csv += '\n';
  }
  return csv;
}

inline nlohmann::ordered_json volume_rate_report_to_json(const VolumeRateReport& report,
                                                         const ExperimentConfig& config) {
  nlohmann::ordered_json j;
  j["experiment"] = "volumeRate";
  j["config"] = experiment_config_to_json(config);
  j["nGrid"] = report.n_grid;
  auto rows = nlohmann::ordered_json::array();
  for (const VolumeRateRow& row : report.rows) {
    nlohmann::ordered_json entry;
    entry["n"] = row.n;
    entry["model"] = row.model.label();
    entry["meanVolume"] = row.mean_volume;
    rows.push_back(std::move(entry));
  }
  j["rows"] = std::move(rows);
  nlohmann::ordered_json per_model;
  for (const auto& [model, slope] : report.slope_per_model) per_model[model.label()] = slope;
  j["slopePerModel"] = std::move(per_model);
  nlohmann::ordered_json per_size;
  for (const auto& [size, slope] : report.slope_per_size) per_size[std::to_string(size)] = slope;
  j["slopePerSize"] = std::move(per_size);
  return j;
}

inline nlohmann::ordered_json max_t_report_to_json(const MaxTReport& report,
                                                   const ExperimentConfig& config) {
  nlohmann::ordered_json j;
  j["experiment"] = "maxT";
  j["config"] = experiment_config_to_json(config);
  j["kGrid"] = report.k_grid;
  j["daggerHalfWidthSize1"] = report.dagger_half_width_size1;
  auto rows = nlohmann::ordered_json::array();
  for (const MaxTKRow& row : report.rows) {
    nlohmann::ordered_json entry;
    entry["k"] = row.k;
    entry["cMaxT"] = row.c_max_t;
    entry["maxtHalfWidthSize1"] = row.maxt_half_width_size1;
    entry["ratioSize1"] = row.ratio_size1;
    nlohmann::ordered_json ratios;
    for (const auto& [size, ratio] : row.volume_ratio_per_size) ratios[std::to_string(size)] = ratio;
    entry["volumeRatioPerSize"] = std::move(ratios);
    rows.push_back(std::move(entry));
  }
  j["rows"] = std::move(rows);
  return j;
}

inline nlohmann::ordered_json mc_volume_to_json(const McVolumeResult& result, const RegionSpec& region) {
  nlohmann::ordered_json j;
  j["kind"] = region_kind_label(region.kind);
  j["model"] = region.model.one_based();
  j["volume"] = result.volume;
  j["standardError"] = result.standard_error;
  j["hitFraction"] = result.hit_fraction;
  j["points"] = result.points;
  return j;
}

}  // namespace posi
