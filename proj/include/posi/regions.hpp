#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "posi/bootstrap.hpp"
#include "posi/dataset.hpp"
#include "posi/errors.hpp"
#include "posi/moments.hpp"
#include "posi/ols.hpp"

namespace posi {

// The seven simultaneous region families. "finite" is the finite-sample
// region whose slack depends on l1(theta); "dagger" freezes that norm at the
// fitted coefficients; "rip" is the sup-norm box under restricted isometry;
// the lasso/sqrt-lasso kinds are the empirical-risk formulations.
enum class RegionKind {
  finite,
  dagger,
  rip,
  lasso_finite,
  lasso_dagger,
  sqrt_lasso_finite,
  sqrt_lasso_dagger,
};

inline std::string region_kind_label(RegionKind kind) {
  switch (kind) {
    case RegionKind::finite: return "finite";
    case RegionKind::dagger: return "dagger";
    case RegionKind::rip: return "rip";
    case RegionKind::lasso_finite: return "lassoFinite";
    case RegionKind::lasso_dagger: return "lassoDagger";
    case RegionKind::sqrt_lasso_finite: return "sqrtLassoFinite";
    case RegionKind::sqrt_lasso_dagger: return "sqrtLassoDagger";
  }
  throw argument_error("region kind: unknown value");
}

inline RegionKind region_kind_from_label(const std::string& label) {
  if (label == "finite") return RegionKind::finite;
  if (label == "dagger") return RegionKind::dagger;
  if (label == "rip") return RegionKind::rip;
  if (label == "lassoFinite") return RegionKind::lasso_finite;
  if (label == "lassoDagger") return RegionKind::lasso_dagger;
  if (label == "sqrtLassoFinite") return RegionKind::sqrt_lasso_finite;
  if (label == "sqrtLassoDagger") return RegionKind::sqrt_lasso_dagger;
  throw argument_error("region kind: unknown label '" + label + "'");
}

inline bool region_kind_is_lasso(RegionKind kind) {
  return kind == RegionKind::lasso_finite || kind == RegionKind::lasso_dagger ||
         kind == RegionKind::sqrt_lasso_finite || kind == RegionKind::sqrt_lasso_dagger;
}

struct RegionSpec {
  RegionKind kind = RegionKind::finite;
  ModelIndex model;
  Eigen::MatrixXd sigma_m;  // Sigma_hat(M)
  FitResult fit;
  QuantilePair quantiles;
  // Lasso kinds only: fitted empirical risk plus the data needed to evaluate
  // the risk at candidate theta.
  double risk_at_fit = std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXd x_m;  // n x |M|
  Eigen::VectorXd y;    // n
};

// Mean squared residual (1/n) sum (y_i - x_i(M)' theta)^2.
inline double empirical_risk(const Eigen::MatrixXd& x_m, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& theta) {
  if (x_m.rows() != y.size() || x_m.cols() != theta.size())
    throw argument_error("empirical_risk: dimension mismatch");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double residual = y(i) - x_m.row(i).dot(theta);
    sum += residual * residual;
  }
  return sum / static_cast<double>(y.size());
}

// Region factory for kinds that need only second moments.
inline RegionSpec make_region(RegionKind kind, const MomentPair& moments, const ModelIndex& model,
                              const QuantilePair& quantiles) {
  if (region_kind_is_lasso(kind))
    throw argument_error("make_region: kind " + region_kind_label(kind) +
                         " needs the dataset overload (empirical risk is data-dependent)");
  RegionSpec region;
  region.kind = kind;
  region.model = model;
  region.sigma_m = sigma_sub(moments, model);
  region.fit = fit(moments, model);
  region.quantiles = quantiles;
  return region;
}

// Region factory for every kind; lasso kinds retain the model columns and
// response for risk evaluation.
inline RegionSpec make_region(RegionKind kind, const Dataset& data, const MomentPair& moments,
                              const ModelIndex& model, const QuantilePair& quantiles) {
  RegionSpec region;
  region.kind = kind;
  region.model = model;
  region.sigma_m = sigma_sub(moments, model);
  region.fit = fit(moments, model);
  region.quantiles = quantiles;
  if (region_kind_is_lasso(kind)) {
    region.x_m = x_sub(data, model);
    region.y = data.y;
    region.risk_at_fit = empirical_risk(region.x_m, region.y, region.fit.beta);
  }
  return region;
}

namespace detail {

inline void check_theta(const RegionSpec& region, const Eigen::VectorXd& theta) {
  if (theta.size() != region.fit.beta.size())
    throw argument_error("region: theta has length " + std::to_string(theta.size()) + ", model needs " +
                         std::to_string(region.fit.beta.size()));
  if (!theta.allFinite()) throw argument_error("region: non-finite theta");
}

}  // namespace detail

// Membership is boundary-inclusive for every kind.
inline bool contains_finite(const RegionSpec& region, const Eigen::VectorXd& theta) {
  detail::check_theta(region, theta);
  const double lhs = (region.sigma_m * (region.fit.beta - theta)).cwiseAbs().maxCoeff();
  return lhs <= region.quantiles.c_gamma + region.quantiles.c_sigma * theta.cwiseAbs().sum();
}

inline bool contains_dagger(const RegionSpec& region, const Eigen::VectorXd& theta) {
  detail::check_theta(region, theta);
  const double lhs = (region.sigma_m * (region.fit.beta - theta)).cwiseAbs().maxCoeff();
  return lhs <= region.quantiles.c_gamma + region.quantiles.c_sigma * region.fit.beta.cwiseAbs().sum();
}

inline bool contains_rip(const RegionSpec& region, const Eigen::VectorXd& theta) {
  detail::check_theta(region, theta);
  return (region.fit.beta - theta).cwiseAbs().maxCoeff() <= region.quantiles.c_gamma;
}

// The four empirical-risk kinds share the single constant cMax (the joint
// quantile of max(sI, sII)); the sqrt kinds use its square root.
inline bool contains_lasso(const RegionSpec& region, const Eigen::VectorXd& theta) {
  detail::check_theta(region, theta);
  if (!region_kind_is_lasso(region.kind)) throw argument_error("contains_lasso: not a lasso-kind region");
  if (region.x_m.size() == 0) throw argument_error("contains_lasso: region built without dataset");
  const double risk_theta = empirical_risk(region.x_m, region.y, theta);
  const double c = region.quantiles.c_max;
  const double l1_fit = region.fit.beta.cwiseAbs().sum();
  const double l1_theta = theta.cwiseAbs().sum();
  switch (region.kind) {
    case RegionKind::lasso_finite:
      return risk_theta <=
             region.risk_at_fit + 2.0 * c * (l1_fit + l1_theta) + c * (l1_fit * l1_fit + l1_theta * l1_theta);
    case RegionKind::lasso_dagger:
      return risk_theta <= region.risk_at_fit + 4.0 * c * l1_fit + 2.0 * c * l1_fit * l1_fit;
    case RegionKind::sqrt_lasso_finite:
      return std::sqrt(risk_theta) <= std::sqrt(region.risk_at_fit) +
                                          std::sqrt(c) * (1.0 + l1_theta) + std::sqrt(c) * (1.0 + l1_fit);
    case RegionKind::sqrt_lasso_dagger:
      return std::sqrt(risk_theta) <= std::sqrt(region.risk_at_fit) + 2.0 * std::sqrt(c) * (1.0 + l1_fit);
    default:
      throw argument_error("contains_lasso: not a lasso-kind region");
  }
}

inline bool contains(const RegionSpec& region, const Eigen::VectorXd& theta) {
  switch (region.kind) {
    case RegionKind::finite: return contains_finite(region, theta);
    case RegionKind::dagger: return contains_dagger(region, theta);
    case RegionKind::rip: return contains_rip(region, theta);
    default: return contains_lasso(region, theta);
  }
}

// Intersection over co-located regions (all on the same model).
inline bool contains_intersection(const std::vector<RegionSpec>& regions, const Eigen::VectorXd& theta) {
  if (regions.empty()) throw argument_error("contains_intersection: empty region list");
  for (const RegionSpec& region : regions)
    if (!(region.model == regions.front().model))
      throw argument_error("contains_intersection: regions must share one model");
  for (const RegionSpec& region : regions)
    if (!contains(region, theta)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Dagger-region volume. The region is the parallelepiped
//   betaHat + SigmaHat(M)^{-1} { u : ||u||_inf <= radius },
// so Leb = |det SigmaHat(M)|^{-1} (2 radius)^{|M|}; rank-deficient SigmaHat
// flags an infinite (degenerate) volume.
// ---------------------------------------------------------------------------
struct VolumeReport {
  ModelIndex model;
  double radius = 0.0;
  double volume = 0.0;
  bool infinite = false;
  double det_sigma = 0.0;
};

inline VolumeReport dagger_volume(const RegionSpec& region) {
  if (region.kind != RegionKind::dagger)
    throw argument_error("dagger_volume: closed-form volume exists only for kind=dagger");
  VolumeReport report;
  report.model = region.model;
  report.radius =
      region.quantiles.c_gamma + region.quantiles.c_sigma * region.fit.beta.cwiseAbs().sum();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(region.sigma_m, Eigen::EigenvaluesOnly);
  if (eigen.info() != Eigen::Success) throw data_error("dagger_volume: eigendecomposition failed");
  const Eigen::VectorXd values = eigen.eigenvalues();
  const double spectral_max = values.cwiseAbs().maxCoeff();
  report.det_sigma = values.prod();
  if (values.cwiseAbs().minCoeff() <= kRankTolerance * spectral_max) {
    report.infinite = true;
    report.volume = std::numeric_limits<double>::infinity();
    return report;
  }
  const auto m = static_cast<double>(region.model.size());
  report.volume = std::pow(2.0 * report.radius, m) / std::abs(report.det_sigma);
  return report;
}

// ---------------------------------------------------------------------------
// Significance test of H0: beta_{n,M} = 0 via the statistic ||SigmaHat(M)
// betaHat||_inf. The finite variant thresholds at cGamma, the dagger variant
// at cGamma + cSigma l1(betaHat); finite rejections are a superset.
// ---------------------------------------------------------------------------
enum class TestVariant { finite, dagger };

inline TestVariant test_variant_from_label(const std::string& label) {
  if (label == "finite") return TestVariant::finite;
  if (label == "dagger") return TestVariant::dagger;
  throw argument_error("test variant: unknown label '" + label + "' (finite | dagger)");
}

struct TestResult {
  double statistic = 0.0;
  double threshold = 0.0;
  bool reject = false;
};

inline TestResult significance_test(const FitResult& fit_result, const MomentPair& moments,
                                    const QuantilePair& quantiles, TestVariant variant) {
  const Eigen::MatrixXd sigma_m = sigma_sub(moments, fit_result.model);
  TestResult result;
  result.statistic = (sigma_m * fit_result.beta).cwiseAbs().maxCoeff();
  result.threshold = variant == TestVariant::finite
                         ? quantiles.c_gamma
                         : quantiles.c_gamma + quantiles.c_sigma * fit_result.beta.cwiseAbs().sum();
  result.reject = result.statistic >= result.threshold;
  return result;
}

// ---------------------------------------------------------------------------
// Max-|t| comparison box: center betaHat, half-width cMaxT sigma_{n,M}(j) /
// sqrt(n) per coordinate.
// ---------------------------------------------------------------------------
struct MaxTRegion {
  Eigen::VectorXd center;
  Eigen::VectorXd half_width;

  bool contains(const Eigen::VectorXd& theta) const {
    if (theta.size() != center.size()) throw argument_error("max_t_region: theta length mismatch");
    return ((theta - center).cwiseAbs().array() <= half_width.array()).all();
  }

  double volume() const {
    double v = 1.0;
    for (Eigen::Index j = 0; j < half_width.size(); ++j) v *= 2.0 * half_width(j);
    return v;
  }
};

inline MaxTRegion max_t_region(const FitResult& fit_result, const Eigen::VectorXd& sigma_diag,
                               double c_max_t, Eigen::Index n) {
  if (sigma_diag.size() != fit_result.beta.size())
    throw argument_error("max_t_region: sigma_diag length mismatch");
  if (!(c_max_t >= 0.0)) throw argument_error("max_t_region: negative constant");
  if (n < 1) throw argument_error("max_t_region: need n >= 1");
  if ((sigma_diag.array() <= 0.0).any())
    throw argument_error("max_t_region: coordinate standard deviations must be positive");
  MaxTRegion region;
  region.center = fit_result.beta;
  region.half_width = c_max_t * sigma_diag / std::sqrt(static_cast<double>(n));
  return region;
}

inline nlohmann::ordered_json region_to_json(const RegionSpec& region) {
  nlohmann::ordered_json j;
  j["kind"] = region_kind_label(region.kind);
  j["model"] = region.model.one_based();
  auto center = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < region.fit.beta.size(); ++i) center.push_back(region.fit.beta(i));
  j["center"] = std::move(center);
  j["cGamma"] = region.quantiles.c_gamma;
  j["cSigma"] = region.quantiles.c_sigma;
  j["cMax"] = region.quantiles.c_max;
  if (region.kind == RegionKind::dagger) {
    j["radius"] = region.quantiles.c_gamma + region.quantiles.c_sigma * region.fit.beta.cwiseAbs().sum();
    const VolumeReport volume = dagger_volume(region);
    j["infinite"] = volume.infinite;
    if (!volume.infinite) j["volume"] = volume.volume;
  }
  if (region.kind == RegionKind::rip) {
    j["radius"] = region.quantiles.c_gamma;
    j["volume"] = std::pow(2.0 * region.quantiles.c_gamma, region.model.size());
  }
  if (region_kind_is_lasso(region.kind)) j["riskAtFit"] = region.risk_at_fit;
  return j;
}

inline nlohmann::ordered_json volume_report_to_json(const VolumeReport& report) {
  nlohmann::ordered_json j;
  j["model"] = report.model.one_based();
  j["radius"] = report.radius;
  j["infinite"] = report.infinite;
  if (!report.infinite) j["volume"] = report.volume;
  j["detSigma"] = report.det_sigma;
  return j;
}

}  // namespace posi
