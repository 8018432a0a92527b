#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "posi/dataset.hpp"
#include "posi/errors.hpp"
#include "posi/moments.hpp"
#include "posi/numeric.hpp"
#include "posi/parallel.hpp"
#include "posi/rng.hpp"

namespace posi {

enum class QuantilePolicy { common_threshold, marginal_search };

inline std::string policy_label(QuantilePolicy p) {
  return p == QuantilePolicy::common_threshold ? "common-threshold" : "marginal-search";
}

inline QuantilePolicy policy_from_label(const std::string& label) {
  if (label == "common-threshold") return QuantilePolicy::common_threshold;
  if (label == "marginal-search") return QuantilePolicy::marginal_search;
  throw argument_error("policy: unknown label '" + label + "' (common-threshold | marginal-search)");
}

struct BootstrapConfig {
  int b = 1000;
  double alpha = 0.1;
  std::uint64_t seed = 0;
  QuantilePolicy policy = QuantilePolicy::common_threshold;
  double work_budget = 1e11;  // ceiling on B*n*q multiply-adds per call

  void validate() const {
    if (b < 100) throw argument_error("bootstrap: B must be >= 100 (quantiles unstable below that)");
    if (!(alpha > 0.0 && alpha < 1.0)) throw argument_error("bootstrap: alpha must lie in (0,1)");
  }
};

// Per-replicate sup-norm statistics: block I (the p cross-moment coordinates)
// and block II (the Gram coordinates).
struct ReplicateStats {
  Eigen::VectorXd s_gamma;  // length B
  Eigen::VectorXd s_sigma;  // length B
};

struct QuantilePair {
  double c_gamma = 0.0;
  double c_sigma = 0.0;
  double c_max = 0.0;  // order-statistic quantile of max(sI, sII), all policies
  double achieved_coverage = 0.0;
};

// ---------------------------------------------------------------------------
// Multiplier bootstrap replicates: replicate j draws fresh standard normal
// multipliers e from its own counter-derived substream and records
//   s*_j = (1/n) sum_i e_i (W_i - Wbar),
// split into the two block sup-norms. Substream seeding makes parallel and
// serial execution bit-identical.
// ---------------------------------------------------------------------------
inline ReplicateStats run_replicates(const WMatrix& wm, const BootstrapConfig& config) {
  config.validate();
  const Eigen::Index n = wm.n();
  const Eigen::Index q = wm.q();
  const Eigen::Index p = wm.p;
  if (n < 1 || q < 1) throw argument_error("bootstrap: empty W matrix");
  const double work = static_cast<double>(config.b) * static_cast<double>(n) * static_cast<double>(q);
  if (work > config.work_budget)
    throw capability_error("bootstrap: B*n*q = " + std::to_string(work) + " exceeds the work budget " +
                           std::to_string(config.work_budget) + "; lower B or raise the budget");

  const Eigen::VectorXd means = w_column_means(wm);
  const Eigen::MatrixXd centered = wm.w.rowwise() - means.transpose();

  ReplicateStats stats;
  stats.s_gamma.resize(config.b);
  stats.s_sigma.resize(config.b);
  parallel_for(static_cast<std::size_t>(config.b), [&](std::size_t j) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(j)));
    Eigen::VectorXd multipliers(n);
    for (Eigen::Index i = 0; i < n; ++i) multipliers(i) = rng.normal();
    const Eigen::VectorXd s = (centered.transpose() * multipliers) / static_cast<double>(n);
    stats.s_gamma(static_cast<Eigen::Index>(j)) = s.head(p).cwiseAbs().maxCoeff();
    stats.s_sigma(static_cast<Eigen::Index>(j)) = s.tail(q - p).cwiseAbs().maxCoeff();
  });
  return stats;
}

namespace detail {

inline long joint_count(const Eigen::VectorXd& s1, const Eigen::VectorXd& s2, double c1, double c2) {
  long count = 0;
  for (Eigen::Index j = 0; j < s1.size(); ++j)
    if (s1(j) <= c1 && s2(j) <= c2) ++count;
  return count;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Joint quantile selection, the step-3 condition: empirical joint coverage
// over the replicates must reach 1 - alpha.
//
// common-threshold (default): one threshold t, the ceil((1-alpha)B)-th order
// statistic of max(sI_j, sII_j); cGamma = cSigma = t.
//
// marginal-search: binary search over the order-statistic index r (the
// sub-level alpha' = 1 - r/B applied to both marginal quantiles), returning
// the smallest r whose joint empirical coverage reaches 1 - alpha. Documented
// heuristic: symmetric in the two blocks, no minimality claim.
// ---------------------------------------------------------------------------
inline QuantilePair joint_quantiles(const ReplicateStats& stats, const BootstrapConfig& config) {
  config.validate();
  const Eigen::Index b = stats.s_gamma.size();
  if (b != stats.s_sigma.size() || b < 1) throw argument_error("joint_quantiles: malformed replicate stats");
  const auto needed =
      std::clamp<long>(static_cast<long>(std::ceil((1.0 - config.alpha) * static_cast<double>(b) - 1e-12)),
                       1, static_cast<long>(b));

  std::vector<double> maxes(static_cast<std::size_t>(b));
  for (Eigen::Index j = 0; j < b; ++j)
    maxes[static_cast<std::size_t>(j)] = std::max(stats.s_gamma(j), stats.s_sigma(j));
  std::sort(maxes.begin(), maxes.end());

  QuantilePair pair;
  pair.c_max = maxes[static_cast<std::size_t>(needed - 1)];

  if (config.policy == QuantilePolicy::common_threshold) {
    pair.c_gamma = pair.c_max;
    pair.c_sigma = pair.c_max;
  } else {
    std::vector<double> s1(stats.s_gamma.data(), stats.s_gamma.data() + b);
    std::vector<double> s2(stats.s_sigma.data(), stats.s_sigma.data() + b);
    std::sort(s1.begin(), s1.end());
    std::sort(s2.begin(), s2.end());
    // Joint coverage is nondecreasing in r, so the bisection is exact.
    long lo = needed, hi = static_cast<long>(b);
    while (lo < hi) {
      const long mid = lo + (hi - lo) / 2;
      const long count = detail::joint_count(stats.s_gamma, stats.s_sigma,
                                             s1[static_cast<std::size_t>(mid - 1)],
                                             s2[static_cast<std::size_t>(mid - 1)]);
      if (count >= needed)
        hi = mid;
      else
        lo = mid + 1;
    }
    pair.c_gamma = s1[static_cast<std::size_t>(lo - 1)];
    pair.c_sigma = s2[static_cast<std::size_t>(lo - 1)];
  }
  pair.achieved_coverage =
      static_cast<double>(detail::joint_count(stats.s_gamma, stats.s_sigma, pair.c_gamma, pair.c_sigma)) /
      static_cast<double>(b);
  return pair;
}

inline QuantilePair estimate_quantiles(const Dataset& data, const BootstrapConfig& config) {
  return joint_quantiles(run_replicates(build_w_matrix(data), config), config);
}

inline nlohmann::ordered_json quantile_pair_to_json(const QuantilePair& pair, const BootstrapConfig& config) {
  nlohmann::ordered_json j;
  j["cGamma"] = pair.c_gamma;
  j["cSigma"] = pair.c_sigma;
  j["cMax"] = pair.c_max;
  j["alpha"] = config.alpha;
  j["B"] = config.b;
  j["seed"] = config.seed;
  j["policy"] = policy_label(config.policy);
  return j;
}

}  // namespace posi
