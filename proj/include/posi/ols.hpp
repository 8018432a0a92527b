#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>

#include "json.hpp"
#include "posi/dataset.hpp"
#include "posi/errors.hpp"
#include "posi/moments.hpp"

namespace posi {

// Relative rank tolerance: eigenvalues with |lambda| <= kRankTolerance * max
// |lambda| are treated as zero.
inline constexpr double kRankTolerance = 1e-10;

// Family sweep caps (lambda_min_over_models, rip_constant, best-subset).
inline constexpr int kMaxSweepK = 8;

struct FitResult {
  ModelIndex model;
  Eigen::VectorXd beta;   // |M| coefficients, model order
  int rank = 0;           // effective rank of sigma(M)
  bool singular = false;  // rank < |M|
  bool consistent = true; // gamma(M) within the numerical range of sigma(M)
};

// Least-squares solve of sigma(M) beta = gamma(M) through a symmetric
// eigendecomposition: full-rank systems get the unique solution, singular or
// indefinite ones the minimum-l2-norm least-squares solution.
inline FitResult fit(const MomentPair& moments, const ModelIndex& model) {
  detail::check_moment_shape(moments, "fit");
  model.check_within(moments.p());
  const Eigen::MatrixXd sigma_m = sigma_sub(moments, model);
  const Eigen::VectorXd gamma_m = gamma_sub(moments, model);
  const Eigen::Index m = sigma_m.rows();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(0.5 * (sigma_m + sigma_m.transpose()));
  if (eigen.info() != Eigen::Success) throw data_error("fit: eigendecomposition failed");
  const Eigen::VectorXd& values = eigen.eigenvalues();
  const Eigen::MatrixXd& vectors = eigen.eigenvectors();
  const double spectral_max = values.cwiseAbs().maxCoeff();
  const double tol = kRankTolerance * spectral_max;

  FitResult result;
  result.model = model;
  result.beta = Eigen::VectorXd::Zero(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::abs(values(i)) > tol) {
      result.beta += vectors.col(i) * (vectors.col(i).dot(gamma_m) / values(i));
      ++result.rank;
    }
  }
  result.singular = result.rank < static_cast<int>(m);
  if (result.singular) {
    const double residual = (sigma_m * result.beta - gamma_m).cwiseAbs().maxCoeff();
    result.consistent = residual <= 1e-8 * std::max(1.0, gamma_m.cwiseAbs().maxCoeff());
  }
  return result;
}

inline nlohmann::ordered_json fit_result_to_json(const FitResult& r) {
  nlohmann::ordered_json j;
  j["model"] = r.model.one_based();
  auto beta = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < r.beta.size(); ++i) beta.push_back(r.beta(i));
  j["beta"] = std::move(beta);
  j["singular"] = r.singular;
  return j;
}

// ---------------------------------------------------------------------------
// Spectral floor over the model family: Lambda_n(k) = min over M in M_p(k) of
// lambda_min(Sigma(M)), with the first attaining model in canonical order.
// ---------------------------------------------------------------------------
struct SpectralSummary {
  int k = 0;
  double lambda_min = 0.0;
  ModelIndex argmin_model;
};

namespace detail {

inline void check_sweep_caps(Eigen::Index p, int k, const char* where) {
  if (k < 1 || k > p) throw argument_error(std::string(where) + ": need 1 <= k <= p");
  if (p > kMaxEnumerationP)
    throw capability_error(std::string(where) + ": p=" + std::to_string(p) + " exceeds the cap p<=" +
                           std::to_string(kMaxEnumerationP));
  if (k > kMaxSweepK)
    throw capability_error(std::string(where) + ": k=" + std::to_string(k) + " exceeds the sweep cap k<=" +
                           std::to_string(kMaxSweepK) + "; use a smaller k");
}

inline double lambda_min_of(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(m, Eigen::EigenvaluesOnly);
  if (eigen.info() != Eigen::Success) throw data_error("lambda_min: eigendecomposition failed");
  return eigen.eigenvalues().minCoeff();
}

inline double operator_norm_sym(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  if (eigen.info() != Eigen::Success) throw data_error("operator_norm: eigendecomposition failed");
  return eigen.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace detail

inline SpectralSummary lambda_min_over_models(const MomentPair& moments, int k) {
  detail::check_moment_shape(moments, "lambda_min_over_models");
  detail::check_sweep_caps(moments.p(), k, "lambda_min_over_models");
  const ModelFamily family = enumerate_models(static_cast<int>(moments.p()), k);
  SpectralSummary summary;
  summary.k = k;
  summary.lambda_min = std::numeric_limits<double>::infinity();
  for (const ModelIndex& model : family.members) {
    const double lam = detail::lambda_min_of(sigma_sub(moments, model));
    if (lam < summary.lambda_min) {  // strict: first attaining model wins
      summary.lambda_min = lam;
      summary.argmin_model = model;
    }
  }
  return summary;
}

// Uniform-in-model l1 error bound:
//   |M| (dGamma + dSigma * l1(beta_target)) / (Lambda_n(k) - k dSigma),
// valid when k dSigma < Lambda_n(k); nullopt marks an infeasible instance.
inline std::optional<double> l1_error_bound(const DeviationPair& dev, const SpectralSummary& spectral,
                                            const ModelIndex& model, double beta_target_l1) {
  if (model.size() > spectral.k)
    throw argument_error("l1_error_bound: |M| exceeds the k the spectral floor was computed for");
  if (beta_target_l1 < 0.0) throw argument_error("l1_error_bound: negative target norm");
  const double denominator = spectral.lambda_min - static_cast<double>(spectral.k) * dev.d_sigma;
  if (!(denominator > 0.0)) return std::nullopt;
  return static_cast<double>(model.size()) * (dev.d_gamma + dev.d_sigma * beta_target_l1) / denominator;
}

// ---------------------------------------------------------------------------
// Deterministic inequality check:
//   || sigma_hat(M) (beta_hat - beta) ||_inf <= dGamma + dSigma l1(beta),
// with deviations taken between the full p-dimensional objects and beta the
// reference-moment target. holds allows 1e-9 slack. When the dataset carries
// a flagged intercept column inside M, the rhs recomputed with the intercept
// coordinate excluded from the target norm is reported alongside (the bound
// itself always uses the full norm).
// ---------------------------------------------------------------------------
struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  std::optional<double> rhs_excluding_intercept;
};

inline BoundCheck deterministic_bound_check(const MomentPair& sample, const MomentPair& reference,
                                            const ModelIndex& model,
                                            std::optional<int> intercept_one_based = std::nullopt) {
  if (sample.p() != reference.p()) throw argument_error("deterministic_bound_check: dimension mismatch");
  model.check_within(sample.p());
  const FitResult sample_fit = fit(sample, model);
  const FitResult reference_fit = fit(reference, model);
  const DeviationPair dev = deviation_stats(sample, reference);

  BoundCheck check;
  check.lhs = (sigma_sub(sample, model) * (sample_fit.beta - reference_fit.beta)).cwiseAbs().maxCoeff();
  const double target_l1 = reference_fit.beta.cwiseAbs().sum();
  check.rhs = dev.d_gamma + dev.d_sigma * target_l1;
  check.holds = check.lhs <= check.rhs + 1e-9;
  if (intercept_one_based) {
    const auto& idx = model.zero_based();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] == *intercept_one_based - 1) {
        const double reduced = target_l1 - std::abs(reference_fit.beta(static_cast<Eigen::Index>(i)));
        check.rhs_excluding_intercept = dev.d_gamma + dev.d_sigma * reduced;
        break;
      }
    }
  }
  return check;
}

// Restricted-isometry constant: max over M in M_p(k) of ||sigma(M) - I||_op.
inline double rip_constant(const MomentPair& moments, int k) {
  detail::check_moment_shape(moments, "rip_constant");
  detail::check_sweep_caps(moments.p(), k, "rip_constant");
  const ModelFamily family = enumerate_models(static_cast<int>(moments.p()), k);
  double delta = 0.0;
  for (const ModelIndex& model : family.members) {
    Eigen::MatrixXd diff = sigma_sub(moments, model);
    diff.diagonal().array() -= 1.0;
    delta = std::max(delta, detail::operator_norm_sym(diff));
  }
  return delta;
}

}  // namespace posi
