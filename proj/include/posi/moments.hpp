#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "json.hpp"
#include "posi/dataset.hpp"
#include "posi/errors.hpp"

namespace posi {

enum class Provenance { sample, population, plugin };

inline std::string provenance_label(Provenance p) {
  switch (p) {
    case Provenance::sample: return "sample";
    case Provenance::population: return "population";
    case Provenance::plugin: return "plugin";
  }
  throw argument_error("provenance: unknown value");
}

inline Provenance provenance_from_label(const std::string& label) {
  if (label == "sample") return Provenance::sample;
  if (label == "population") return Provenance::population;
  if (label == "plugin") return Provenance::plugin;
  throw argument_error("provenance: unknown label '" + label + "'");
}

// ---------------------------------------------------------------------------
// MomentPair: (Sigma, gamma) with provenance. Sample and population objects
// are exactly symmetric by construction; plugin objects tolerate 1e-8
// relative asymmetry and are stored as given (no repair).
// ---------------------------------------------------------------------------
struct MomentPair {
  Eigen::MatrixXd sigma;  // p x p
  Eigen::VectorXd gamma;  // p
  Provenance provenance = Provenance::sample;

  Eigen::Index p() const { return sigma.rows(); }
};

struct AugmentedMoments {
  Eigen::MatrixXd omega;  // (p+1) x (p+1), last row/column from the response

  Eigen::Index p() const { return omega.rows() - 1; }
};

struct DeviationPair {
  double d_gamma = 0.0;  // sup-norm deviation of the cross-moment vector
  double d_sigma = 0.0;  // entrywise sup-norm deviation of the Gram matrix
};

struct WMatrix {
  Eigen::MatrixXd w;  // n x q
  int p = 0;

  Eigen::Index n() const { return w.rows(); }
  Eigen::Index q() const { return w.cols(); }
};

namespace detail {

// Single accumulation path for every first/second moment in the artifact:
// ascending-index sum, then one division. sample_moments, augmented_moments
// and the WMatrix column means all reduce to this helper, which is what makes
// their cross-object bit-for-bit agreement contracts hold.
inline double mean_product(const double* a, const double* b, Eigen::Index n) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum / static_cast<double>(n);
}

inline double mean_value(const double* a, Eigen::Index n) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) sum += a[i];
  return sum / static_cast<double>(n);
}

inline void check_moment_shape(const MomentPair& m, const char* where) {
  if (m.sigma.rows() != m.sigma.cols()) throw argument_error(std::string(where) + ": sigma must be square");
  if (m.gamma.size() != m.sigma.rows())
    throw argument_error(std::string(where) + ": gamma length must match sigma dimension");
  if (m.sigma.rows() < 1) throw argument_error(std::string(where) + ": need p >= 1");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sample moments: Sigma = (1/n) sum x_i x_i', gamma = (1/n) sum x_i y_i.
// Sigma is exactly symmetric (each unordered pair computed once, mirrored).
// ---------------------------------------------------------------------------
inline MomentPair sample_moments(const Dataset& data) {
  validate_dataset(data);
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  MomentPair m;
  m.provenance = Provenance::sample;
  m.sigma.resize(p, p);
  m.gamma.resize(p);
  for (Eigen::Index l = 0; l < p; ++l) {
    for (Eigen::Index c = l; c < p; ++c) {
      const double value = detail::mean_product(data.x.col(l).data(), data.x.col(c).data(), n);
      m.sigma(l, c) = value;
      m.sigma(c, l) = value;
    }
    m.gamma(l) = detail::mean_product(data.x.col(l).data(), data.y.data(), n);
  }
  return m;
}

// Augmented second-moment matrix of z_i = (x_i', y_i)'. Its leading p x p
// block and last column reproduce sample_moments bit-for-bit.
inline AugmentedMoments augmented_moments(const Dataset& data) {
  validate_dataset(data);
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  AugmentedMoments a;
  a.omega.resize(p + 1, p + 1);
  const auto column = [&](Eigen::Index j) -> const double* {
    return j < p ? data.x.col(j).data() : data.y.data();
  };
  for (Eigen::Index l = 0; l <= p; ++l) {
    for (Eigen::Index c = l; c <= p; ++c) {
      const double value = detail::mean_product(column(l), column(c), n);
      a.omega(l, c) = value;
      a.omega(c, l) = value;
    }
  }
  return a;
}

// Sup-norm deviations between an estimate and a reference of equal dimension.
inline DeviationPair deviation_stats(const MomentPair& hat, const MomentPair& reference) {
  detail::check_moment_shape(hat, "deviation_stats");
  detail::check_moment_shape(reference, "deviation_stats");
  if (hat.p() != reference.p())
    throw argument_error("deviation_stats: dimension mismatch (" + std::to_string(hat.p()) + " vs " +
                         std::to_string(reference.p()) + ")");
  DeviationPair d;
  d.d_gamma = (hat.gamma - reference.gamma).cwiseAbs().maxCoeff();
  d.d_sigma = (hat.sigma - reference.sigma).cwiseAbs().maxCoeff();
  return d;
}

// Number of distinct scalar moments tracked by the bootstrap:
// q = 2p + p(p-1)/2 = p + p(p+1)/2.
inline Eigen::Index w_column_count(int p) {
  if (p < 1) throw argument_error("w_column_count: p must be >= 1");
  if (p > 10000) throw argument_error("w_column_count: p > 10^4 would overflow the W layout");
  const auto pl = static_cast<Eigen::Index>(p);
  return pl + pl * (pl + 1) / 2;
}

// Column index of the (l, m) Gram product, l <= m zero-based, after the p
// cross-moment columns: pairs ordered (1,1),(1,2),...,(1,p),(2,2),...,(p,p).
inline Eigen::Index w_pair_column(int p, int l, int m) {
  if (l < 0 || m < l || m >= p) throw argument_error("w_pair_column: need 0 <= l <= m < p");
  const auto pl = static_cast<Eigen::Index>(p);
  const auto ll = static_cast<Eigen::Index>(l);
  return pl + ll * pl - ll * (ll - 1) / 2 + (m - l);
}

// ---------------------------------------------------------------------------
// W matrix: row i holds every scalar moment contribution of observation i,
// first the p products x_i(j) y_i, then the Gram products x_i(l) x_i(m) for
// l <= m in the order above.
// ---------------------------------------------------------------------------
inline WMatrix build_w_matrix(const Dataset& data) {
  validate_dataset(data);
  const Eigen::Index n = data.n();
  const int p = static_cast<int>(data.p());
  const Eigen::Index q = w_column_count(p);
  WMatrix wm;
  wm.p = p;
  wm.w.resize(n, q);
  for (int j = 0; j < p; ++j) wm.w.col(j) = data.x.col(j).cwiseProduct(data.y);
  for (int l = 0; l < p; ++l)
    for (int m = l; m < p; ++m)
      wm.w.col(w_pair_column(p, l, m)) = data.x.col(l).cwiseProduct(data.x.col(m));
  return wm;
}

// Column means of W via the shared accumulation path; reproduces gamma and
// the upper triangle of sigma from sample_moments exactly.
inline Eigen::VectorXd w_column_means(const WMatrix& wm) {
  Eigen::VectorXd means(wm.q());
  for (Eigen::Index c = 0; c < wm.q(); ++c)
    means(c) = detail::mean_value(wm.w.col(c).data(), wm.n());
  return means;
}

// ---------------------------------------------------------------------------
// Standardization: center every covariate column and the response by the
// sample mean, scale by the sample standard deviation with divisor n.
// ---------------------------------------------------------------------------
inline Dataset standardize(const Dataset& data) {
  validate_dataset(data);
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  Dataset out;
  out.x.resize(n, p);
  out.y.resize(n);
  const auto scale_column = [&](const double* src, double* dst, Eigen::Index column_one_based) {
    const double mean = detail::mean_value(src, n);
    double ss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) ss += (src[i] - mean) * (src[i] - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    if (!(sd > 1e-12)) {
      if (column_one_based == 0)
        throw data_error("standardize: response has zero variance");
      throw data_error("standardize: column " + std::to_string(column_one_based) +
                       " has zero variance (drop constant columns first)");
    }
    for (Eigen::Index i = 0; i < n; ++i) dst[i] = (src[i] - mean) / sd;
  };
  for (Eigen::Index j = 0; j < p; ++j) scale_column(data.x.col(j).data(), out.x.col(j).data(), j + 1);
  scale_column(data.y.data(), out.y.data(), 0);
  // The known response expectation no longer applies after data-driven
  // recentering, so it is dropped rather than silently transformed.
  out.mean_y.reset();
  out.has_intercept = false;
  return out;
}

// ---------------------------------------------------------------------------
// Plug-in moments: arbitrary (Sigma*, gamma*) wrapped for the generalized
// estimator. Asymmetry beyond 1e-8 relative is rejected; nothing is repaired.
// ---------------------------------------------------------------------------
inline MomentPair plugin_moments(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& gamma) {
  MomentPair m;
  m.sigma = sigma;
  m.gamma = gamma;
  m.provenance = Provenance::plugin;
  detail::check_moment_shape(m, "plugin_moments");
  if (!m.sigma.allFinite() || !m.gamma.allFinite()) throw argument_error("plugin_moments: non-finite entry");
  const double scale = std::max(1.0, m.sigma.cwiseAbs().maxCoeff());
  const double asymmetry = (m.sigma - m.sigma.transpose()).cwiseAbs().maxCoeff();
  if (asymmetry > 1e-8 * scale)
    throw argument_error("plugin_moments: sigma asymmetry " + std::to_string(asymmetry) +
                         " exceeds 1e-8 relative tolerance");
  return m;
}

// Population-provenance wrapper with the same shape checks.
inline MomentPair population_moments(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& gamma) {
  MomentPair m = plugin_moments(sigma, gamma);
  m.provenance = Provenance::population;
  return m;
}

// Submatrix / subvector extraction for a model.
inline Eigen::MatrixXd sigma_sub(const MomentPair& m, const ModelIndex& model) {
  model.check_within(m.p());
  const auto& idx = model.zero_based();
  const auto size = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out(size, size);
  for (Eigen::Index r = 0; r < size; ++r)
    for (Eigen::Index c = 0; c < size; ++c)
      out(r, c) = m.sigma(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(c)]);
  return out;
}

inline Eigen::VectorXd gamma_sub(const MomentPair& m, const ModelIndex& model) {
  model.check_within(m.p());
  const auto& idx = model.zero_based();
  const auto size = static_cast<Eigen::Index>(idx.size());
  Eigen::VectorXd out(size);
  for (Eigen::Index r = 0; r < size; ++r) out(r) = m.gamma(idx[static_cast<std::size_t>(r)]);
  return out;
}

inline Eigen::MatrixXd x_sub(const Dataset& data, const ModelIndex& model) {
  model.check_within(data.p());
  const auto& idx = model.zero_based();
  Eigen::MatrixXd out(data.n(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c)
    out.col(static_cast<Eigen::Index>(c)) = data.x.col(idx[c]);
  return out;
}

// ---------------------------------------------------------------------------
// JSON echo.
// ---------------------------------------------------------------------------
inline nlohmann::ordered_json moment_pair_to_json(const MomentPair& m) {
  nlohmann::ordered_json j;
  auto sigma = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < m.p(); ++r) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index c = 0; c < m.p(); ++c) row.push_back(m.sigma(r, c));
    sigma.push_back(std::move(row));
  }
  j["sigma"] = std::move(sigma);
  auto gamma = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < m.p(); ++r) gamma.push_back(m.gamma(r));
  j["gamma"] = std::move(gamma);
  j["provenance"] = provenance_label(m.provenance);
  return j;
}

inline MomentPair moment_pair_from_json(const nlohmann::json& j) {
  try {
    const auto& sigma = j.at("sigma");
    const auto p = static_cast<Eigen::Index>(sigma.size());
    MomentPair m;
    m.sigma.resize(p, p);
    for (Eigen::Index r = 0; r < p; ++r) {
      const auto& row = sigma.at(static_cast<std::size_t>(r));
      if (static_cast<Eigen::Index>(row.size()) != p) throw data_error("moment json: sigma not square");
      for (Eigen::Index c = 0; c < p; ++c) m.sigma(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    const auto& gamma = j.at("gamma");
    if (static_cast<Eigen::Index>(gamma.size()) != p) throw data_error("moment json: gamma length mismatch");
    m.gamma.resize(p);
    for (Eigen::Index r = 0; r < p; ++r) m.gamma(r) = gamma.at(static_cast<std::size_t>(r)).get<double>();
    m.provenance = provenance_from_label(j.value("provenance", "plugin"));
    detail::check_moment_shape(m, "moment json");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("moment json: ") + e.what());
  }
}

}  // namespace posi
