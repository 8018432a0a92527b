#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/QR>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "posi/dataset.hpp"
#include "posi/errors.hpp"
#include "posi/moments.hpp"
#include "posi/ols.hpp"
#include "posi/rng.hpp"

namespace posi {

// ---------------------------------------------------------------------------
// Data-generating processes. Every kind has closed-form population targets:
// the random-X kinds by construction (stationary marginals / Gaussian moment
// identities), the fixed-design kind because the population Gram matrix *is*
// the frozen sample Gram matrix.
// ---------------------------------------------------------------------------
enum class DgpKind {
  gaussian_linear,
  misspecified_quadratic,
  heteroskedastic,
  fixed_design,
  ar1_dependent,
};

inline std::string dgp_kind_label(DgpKind kind) {
  switch (kind) {
    case DgpKind::gaussian_linear: return "gaussianLinear";
    case DgpKind::misspecified_quadratic: return "misspecifiedQuadratic";
    case DgpKind::heteroskedastic: return "heteroskedastic";
    case DgpKind::fixed_design: return "fixedDesign";
    case DgpKind::ar1_dependent: return "ar1Dependent";
  }
  throw argument_error("dgp kind: unknown value");
}

inline DgpKind dgp_kind_from_label(const std::string& label) {
  if (label == "gaussianLinear") return DgpKind::gaussian_linear;
  if (label == "misspecifiedQuadratic") return DgpKind::misspecified_quadratic;
  if (label == "heteroskedastic") return DgpKind::heteroskedastic;
  if (label == "fixedDesign") return DgpKind::fixed_design;
  if (label == "ar1Dependent") return DgpKind::ar1_dependent;
  throw argument_error("dgp kind: unknown label '" + label + "'");
}

// Design covariance families.
struct DesignCovSpec {
  enum class Type { identity, equicorrelation, ar1 } type = Type::identity;
  double rho = 0.0;

  Eigen::MatrixXd matrix(Eigen::Index p) const {
    Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(p, p);
    switch (type) {
      case Type::identity:
        break;
      case Type::equicorrelation: {
        // SPD iff -1/(p-1) < rho < 1.
        const double lower = p > 1 ? -1.0 / static_cast<double>(p - 1) : -1.0;
        if (!(rho > lower && rho < 1.0))
          throw argument_error("designCov: equicorrelation rho outside SPD range");
        for (Eigen::Index r = 0; r < p; ++r)
          for (Eigen::Index c = 0; c < p; ++c)
            if (r != c) cov(r, c) = rho;
        break;
      }
      case Type::ar1: {
        if (!(std::abs(rho) < 1.0)) throw argument_error("designCov: ar1 needs |rho| < 1");
        for (Eigen::Index r = 0; r < p; ++r)
          for (Eigen::Index c = 0; c < p; ++c)
            cov(r, c) = std::pow(rho, std::abs(static_cast<double>(r - c)));
        break;
      }
    }
    return cov;
  }
};

struct DgpParams {
  DesignCovSpec design_cov;
  Eigen::VectorXd coef;                 // default: zeros(p)
  double noise_scale = 1.0;             // > 0
  double quad_weight = 0.0;             // misspecifiedQuadratic only
  Eigen::VectorXd mean_x;               // misspecifiedQuadratic only; default zeros(p)
  double rho = 0.0;                     // ar1Dependent serial correlation, |rho| < 1
  bool orthonormal_design = false;      // fixedDesign: rescaled orthonormal columns
  std::uint64_t design_seed = 20240601; // fixedDesign: frozen-design stream
};

struct DgpSpec {
  DgpKind kind = DgpKind::gaussian_linear;
  Eigen::Index n = 100;
  Eigen::Index p = 2;
  std::uint64_t seed = 0;
  DgpParams params;
};

inline void validate_dgp(const DgpSpec& dgp) {
  if (dgp.n < 1) throw argument_error("dgp: n must be >= 1");
  if (dgp.p < 1) throw argument_error("dgp: p must be >= 1");
  if (!(dgp.params.noise_scale > 0.0)) throw argument_error("dgp: noiseScale must be positive");
  if (dgp.params.coef.size() != 0 && dgp.params.coef.size() != dgp.p)
    throw argument_error("dgp: coef length must equal p");
  if (dgp.params.mean_x.size() != 0 && dgp.params.mean_x.size() != dgp.p)
    throw argument_error("dgp: meanX length must equal p");
  if (dgp.kind == DgpKind::ar1_dependent && !(std::abs(dgp.params.rho) < 1.0))
    throw argument_error("dgp: ar1Dependent needs |rho| < 1");
  dgp.params.design_cov.matrix(dgp.p);  // throws if outside the SPD range
}

// ---------------------------------------------------------------------------
// PopulationOracle: exact population moments, per-observation response
// expectations, and the projection targets beta_{n,M}.
// ---------------------------------------------------------------------------
struct PopulationOracle {
  MomentPair moments;       // provenance = population
  Eigen::VectorXd mean_y;   // E[Y_i], length n

  Eigen::VectorXd target(const ModelIndex& model) const {
    const FitResult result = fit(moments, model);
    if (result.singular) throw data_error("oracle: population Gram submatrix is singular for model " +
                                          model.label());
    return result.beta;
  }

  std::map<ModelIndex, Eigen::VectorXd> targets_for(const ModelFamily& family) const {
    std::map<ModelIndex, Eigen::VectorXd> out;
    for (const ModelIndex& model : family.members) out.emplace(model, target(model));
    return out;
  }
};

namespace detail {

inline Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw argument_error("dgp: design covariance is not positive definite");
  return llt.matrixL();
}

inline Eigen::VectorXd normal_vector(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
  return z;
}

// Frozen design for the fixedDesign kind; depends only on (n, p, design
// parameters), never on the noise seed, so every replication sees identical
// covariate bytes.
inline Eigen::MatrixXd frozen_design(const DgpSpec& dgp) {
  Rng rng(derive_seed(dgp.params.design_seed, 0xF1DEDULL));
  Eigen::MatrixXd raw(dgp.n, dgp.p);
  const Eigen::MatrixXd chol = cholesky_factor(dgp.params.design_cov.matrix(dgp.p));
  for (Eigen::Index i = 0; i < dgp.n; ++i)
    raw.row(i) = (chol * normal_vector(rng, dgp.p)).transpose();
  if (!dgp.params.orthonormal_design) return raw;
  // Rescaled orthonormal columns: (1/n) X'X = I up to roundoff.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
  const Eigen::MatrixXd thin_q =
      qr.householderQ() * Eigen::MatrixXd::Identity(dgp.n, dgp.p);
  return std::sqrt(static_cast<double>(dgp.n)) * thin_q;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// generate: one dataset draw plus its exact population oracle.
// ---------------------------------------------------------------------------
inline std::pair<Dataset, PopulationOracle> generate(const DgpSpec& dgp) {
  validate_dgp(dgp);
  const Eigen::Index n = dgp.n;
  const Eigen::Index p = dgp.p;
  const Eigen::VectorXd coef =
      dgp.params.coef.size() == 0 ? Eigen::VectorXd::Zero(p).eval() : dgp.params.coef;
  const double sigma_noise = dgp.params.noise_scale;
  const Eigen::MatrixXd design_cov = dgp.params.design_cov.matrix(p);
  Rng rng(derive_seed(dgp.seed, 0xDA7AULL));

  Dataset data;
  data.x.resize(n, p);
  data.y.resize(n);
  PopulationOracle oracle;

  switch (dgp.kind) {
    case DgpKind::gaussian_linear: {
      const Eigen::MatrixXd chol = detail::cholesky_factor(design_cov);
      for (Eigen::Index i = 0; i < n; ++i) {
        data.x.row(i) = (chol * detail::normal_vector(rng, p)).transpose();
        data.y(i) = data.x.row(i).dot(coef) + sigma_noise * rng.normal();
      }
      oracle.moments = population_moments(design_cov, design_cov * coef);
      oracle.mean_y = Eigen::VectorXd::Zero(n);
      break;
    }
    case DgpKind::misspecified_quadratic: {
      const Eigen::VectorXd mu =
          dgp.params.mean_x.size() == 0 ? Eigen::VectorXd::Zero(p).eval() : dgp.params.mean_x;
      const double w = dgp.params.quad_weight;
      const Eigen::MatrixXd chol = detail::cholesky_factor(design_cov);
      const double centering = mu.squaredNorm() + design_cov.trace();  // E ||X||^2
      for (Eigen::Index i = 0; i < n; ++i) {
        data.x.row(i) = (mu + chol * detail::normal_vector(rng, p)).transpose();
        const double quad = data.x.row(i).squaredNorm() - centering;
        data.y(i) = data.x.row(i).dot(coef) + w * quad + sigma_noise * rng.normal();
      }
      // Gaussian moment identities: Sigma = Cov + mu mu', and the quadratic
      // term contributes E[X (||X||^2 - E||X||^2)] = 2 Cov mu.
      const Eigen::MatrixXd sigma_pop = design_cov + mu * mu.transpose();
      const Eigen::VectorXd gamma_pop = sigma_pop * coef + 2.0 * w * design_cov * mu;
      oracle.moments = population_moments(sigma_pop, gamma_pop);
      oracle.mean_y = Eigen::VectorXd::Constant(n, mu.dot(coef));
      break;
    }
    case DgpKind::heteroskedastic: {
      const Eigen::MatrixXd chol = detail::cholesky_factor(design_cov);
      for (Eigen::Index i = 0; i < n; ++i) {
        data.x.row(i) = (chol * detail::normal_vector(rng, p)).transpose();
        const double scale =
            sigma_noise * std::sqrt((1.0 + data.x.row(i).squaredNorm()) / (1.0 + static_cast<double>(p)));
        data.y(i) = data.x.row(i).dot(coef) + scale * rng.normal();
      }
      // Noise is mean-zero given X, so the cross moments are untouched.
      oracle.moments = population_moments(design_cov, design_cov * coef);
      oracle.mean_y = Eigen::VectorXd::Zero(n);
      break;
    }
    case DgpKind::fixed_design: {
      data.x = detail::frozen_design(dgp);
      const Eigen::VectorXd mu = data.x * coef;
      for (Eigen::Index i = 0; i < n; ++i) data.y(i) = mu(i) + sigma_noise * rng.normal();
      // The frozen design makes the sample Gram matrix the population one,
      // bit for bit: dSigma = 0 exactly on every replication.
      const MomentPair frozen = sample_moments(data);
      Eigen::VectorXd gamma_pop(p);
      for (Eigen::Index j = 0; j < p; ++j)
        gamma_pop(j) = detail::mean_product(data.x.col(j).data(), mu.data(), n);
      oracle.moments = MomentPair{frozen.sigma, gamma_pop, Provenance::population};
      oracle.mean_y = mu;
      break;
    }
    case DgpKind::ar1_dependent: {
      const double rho = dgp.params.rho;
      const double fresh = std::sqrt(1.0 - rho * rho);
      const Eigen::MatrixXd chol = detail::cholesky_factor(design_cov);
      Eigen::VectorXd x_state = chol * detail::normal_vector(rng, p);
      double e_state = sigma_noise * rng.normal();
      for (Eigen::Index i = 0; i < n; ++i) {
        if (i > 0) {
          x_state = rho * x_state + fresh * (chol * detail::normal_vector(rng, p));
          e_state = rho * e_state + fresh * (sigma_noise * rng.normal());
        }
        data.x.row(i) = x_state.transpose();
        data.y(i) = x_state.dot(coef) + e_state;
      }
      // Stationary marginals: every row is N(0, designCov), so the averaged
      // moments match the iid case despite serial dependence.
      oracle.moments = population_moments(design_cov, design_cov * coef);
      oracle.mean_y = Eigen::VectorXd::Zero(n);
      break;
    }
  }
  data.mean_y = oracle.mean_y;
  validate_dataset(data);
  return {std::move(data), std::move(oracle)};
}

// ---------------------------------------------------------------------------
// Selectors.
// ---------------------------------------------------------------------------

// Worst-case selector realizing the coverage equivalence: the first model (in
// canonical order) whose region failed to cover; the first model overall when
// everything covered. The selected model's coverage indicator therefore
// equals the simultaneous indicator, replication by replication.
inline ModelIndex select_adversarial(const std::map<ModelIndex, bool>& coverage) {
  if (coverage.empty()) throw argument_error("select_adversarial: empty coverage map");
  for (const auto& [model, covered] : coverage)
    if (!covered) return model;
  return coverage.begin()->first;
}

// Fixed-design tightness selector: the singleton {j} maximizing
// |(1/n) sum_i x_i(j) (y_i - E y_i)|; ties break to the smallest index.
inline ModelIndex select_max_correlation(const Dataset& data) {
  validate_dataset(data);
  if (!data.mean_y)
    throw capability_error("select_max_correlation: dataset lacks meanY (simulator-only selector)");
  const Eigen::VectorXd centered = data.y - *data.mean_y;
  int best = 0;
  double best_value = -1.0;
  for (Eigen::Index j = 0; j < data.p(); ++j) {
    const double value =
        std::abs(detail::mean_product(data.x.col(j).data(), centered.data(), data.n()));
    if (value > best_value) {  // strict: first maximizer wins
      best_value = value;
      best = static_cast<int>(j);
    }
  }
  return ModelIndex::from_zero_based({best});
}

enum class PracticalMethod { forward_stepwise, best_subset_bic };

inline PracticalMethod practical_method_from_label(const std::string& label) {
  if (label == "forwardStepwise") return PracticalMethod::forward_stepwise;
  if (label == "bestSubsetBIC") return PracticalMethod::best_subset_bic;
  throw argument_error("practical method: unknown label '" + label + "'");
}

// Practical selectors, deterministic tie-breaks by canonical order. Risk is
// evaluated through the moment identity R(M) = mean(y^2) - gamma(M)'betaHat.
inline ModelIndex select_practical(const Dataset& data, PracticalMethod method, int k) {
  validate_dataset(data);
  if (k < 1 || k > data.p()) throw argument_error("select_practical: need 1 <= k <= p");
  const MomentPair moments = sample_moments(data);
  const double mean_y2 = detail::mean_product(data.y.data(), data.y.data(), data.n());
  const auto risk_of = [&](const ModelIndex& model) {
    const FitResult result = fit(moments, model);
    return mean_y2 - gamma_sub(moments, model).dot(result.beta);
  };

  if (method == PracticalMethod::best_subset_bic) {
    detail::check_sweep_caps(data.p(), k, "select_practical");
    const ModelFamily family = enumerate_models(static_cast<int>(data.p()), k);
    const double log_n = std::log(static_cast<double>(data.n()));
    double best_bic = std::numeric_limits<double>::infinity();
    const ModelIndex* best = nullptr;
    for (const ModelIndex& model : family.members) {
      const double risk = std::max(risk_of(model), 1e-300);
      const double bic = static_cast<double>(data.n()) * std::log(risk) +
                         static_cast<double>(model.size()) * log_n;
      if (bic < best_bic) {  // strict: first minimizer in canonical order
        best_bic = bic;
        best = &model;
      }
    }
    return *best;
  }

  // Forward stepwise: grow k steps, each adding the risk-minimizing column.
  std::vector<int> chosen;
  for (int step = 0; step < k; ++step) {
    int best_j = -1;
    double best_risk = std::numeric_limits<double>::infinity();
    for (int j = 0; j < data.p(); ++j) {
      if (std::find(chosen.begin(), chosen.end(), j) != chosen.end()) continue;
      std::vector<int> trial = chosen;
      trial.push_back(j);
      std::sort(trial.begin(), trial.end());
      const double risk = risk_of(ModelIndex::from_zero_based(trial));
      if (risk < best_risk) {  // strict: smallest index wins ties
        best_risk = risk;
        best_j = j;
      }
    }
    chosen.push_back(best_j);
  }
  std::sort(chosen.begin(), chosen.end());
  return ModelIndex::from_zero_based(chosen);
}

// ---------------------------------------------------------------------------
// DgpSpec JSON (config files and report echoes).
// ---------------------------------------------------------------------------
inline nlohmann::ordered_json dgp_to_json(const DgpSpec& dgp) {
  nlohmann::ordered_json j;
  j["kind"] = dgp_kind_label(dgp.kind);
  j["n"] = dgp.n;
  j["p"] = dgp.p;
  j["seed"] = dgp.seed;
  nlohmann::ordered_json cov;
  switch (dgp.params.design_cov.type) {
    case DesignCovSpec::Type::identity: cov["type"] = "identity"; break;
    case DesignCovSpec::Type::equicorrelation: cov["type"] = "equicorrelation"; break;
    case DesignCovSpec::Type::ar1: cov["type"] = "ar1"; break;
  }
  cov["rho"] = dgp.params.design_cov.rho;
  j["designCov"] = std::move(cov);
  auto coef = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < dgp.params.coef.size(); ++i) coef.push_back(dgp.params.coef(i));
  j["coef"] = std::move(coef);
  j["noiseScale"] = dgp.params.noise_scale;
  if (dgp.kind == DgpKind::misspecified_quadratic) {
    j["quadWeight"] = dgp.params.quad_weight;
    auto mean_x = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < dgp.params.mean_x.size(); ++i) mean_x.push_back(dgp.params.mean_x(i));
    j["meanX"] = std::move(mean_x);
  }
  if (dgp.kind == DgpKind::ar1_dependent) j["rho"] = dgp.params.rho;
  if (dgp.kind == DgpKind::fixed_design) {
    j["orthonormalDesign"] = dgp.params.orthonormal_design;
    j["designSeed"] = dgp.params.design_seed;
  }
  return j;
}

inline DgpSpec dgp_from_json(const nlohmann::json& j) {
  try {
    DgpSpec dgp;
    dgp.kind = dgp_kind_from_label(j.at("kind").get<std::string>());
    dgp.n = j.at("n").get<Eigen::Index>();
    dgp.p = j.at("p").get<Eigen::Index>();
    dgp.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("designCov")) {
      const auto& cov = j.at("designCov");
      const auto type = cov.value("type", std::string("identity"));
      if (type == "identity") dgp.params.design_cov.type = DesignCovSpec::Type::identity;
      else if (type == "equicorrelation") dgp.params.design_cov.type = DesignCovSpec::Type::equicorrelation;
      else if (type == "ar1") dgp.params.design_cov.type = DesignCovSpec::Type::ar1;
      else throw argument_error("designCov: unknown type '" + type + "'");
      dgp.params.design_cov.rho = cov.value("rho", 0.0);
    }
    if (j.contains("coef")) {
      const auto& coef = j.at("coef");
      dgp.params.coef.resize(static_cast<Eigen::Index>(coef.size()));
      for (std::size_t i = 0; i < coef.size(); ++i)
        dgp.params.coef(static_cast<Eigen::Index>(i)) = coef.at(i).get<double>();
    }
    dgp.params.noise_scale = j.value("noiseScale", 1.0);
    dgp.params.quad_weight = j.value("quadWeight", 0.0);
    if (j.contains("meanX")) {
      const auto& mean_x = j.at("meanX");
      dgp.params.mean_x.resize(static_cast<Eigen::Index>(mean_x.size()));
      for (std::size_t i = 0; i < mean_x.size(); ++i)
        dgp.params.mean_x(static_cast<Eigen::Index>(i)) = mean_x.at(i).get<double>();
    }
    dgp.params.rho = j.value("rho", 0.0);
    dgp.params.orthonormal_design = j.value("orthonormalDesign", false);
    dgp.params.design_seed = j.value("designSeed", std::uint64_t{20240601});
    validate_dgp(dgp);
    return dgp;
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("dgp json: ") + e.what());
  }
}

}  // namespace posi
