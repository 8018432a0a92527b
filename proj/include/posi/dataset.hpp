#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "posi/errors.hpp"

namespace posi {

// ---------------------------------------------------------------------------
// Dataset: n observations of p covariates plus a response. meanY optionally
// carries the known expectation of each response (simulators fill it; the
// fixed-design selector consumes it). hasIntercept marks a leading column of
// ones prepended at load time; it is runtime metadata, not part of the wire
// format.
// ---------------------------------------------------------------------------
struct Dataset {
  Eigen::MatrixXd x;  // n x p
  Eigen::VectorXd y;  // n
  std::optional<Eigen::VectorXd> mean_y;
  bool has_intercept = false;

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index p() const { return x.cols(); }
};

inline void validate_dataset(const Dataset& data) {
  if (data.x.rows() < 1) throw data_error("dataset: need at least one observation");
  if (data.x.cols() < 1) throw data_error("dataset: need at least one covariate column");
  if (data.y.size() != data.x.rows()) throw data_error("dataset: response length does not match row count");
  if (!data.x.allFinite()) throw data_error("dataset: non-finite covariate entry");
  if (!data.y.allFinite()) throw data_error("dataset: non-finite response entry");
  if (data.mean_y && data.mean_y->size() != data.x.rows())
    throw data_error("dataset: meanY length does not match row count");
  if (data.mean_y && !data.mean_y->allFinite()) throw data_error("dataset: non-finite meanY entry");
}

// ---------------------------------------------------------------------------
// ModelIndex: a non-empty strictly increasing set of covariate indices.
// All user-facing I/O is 1-based; internal storage is 0-based for direct use
// against Eigen blocks.
// ---------------------------------------------------------------------------
class ModelIndex {
 public:
  static ModelIndex from_one_based(const std::vector<int>& indices) {
    if (indices.empty()) throw argument_error("model: index set must be non-empty");
    std::vector<int> zero;
    zero.reserve(indices.size());
    int previous = 0;
    for (int idx : indices) {
      if (idx < 1) throw argument_error("model: indices are 1-based; got " + std::to_string(idx));
      if (idx <= previous) throw argument_error("model: indices must be strictly increasing");
      previous = idx;
      zero.push_back(idx - 1);
    }
    ModelIndex m;
    m.zero_based_ = std::move(zero);
    return m;
  }

  static ModelIndex from_zero_based(std::vector<int> indices) {
    std::vector<int> one;
    one.reserve(indices.size());
    for (int idx : indices) one.push_back(idx + 1);
    return from_one_based(one);
  }

  const std::vector<int>& zero_based() const { return zero_based_; }

  std::vector<int> one_based() const {
    std::vector<int> out;
    out.reserve(zero_based_.size());
    for (int idx : zero_based_) out.push_back(idx + 1);
    return out;
  }

  int size() const { return static_cast<int>(zero_based_.size()); }

  int max_one_based() const { return zero_based_.back() + 1; }

  void check_within(Eigen::Index p) const {
    if (max_one_based() > p)
      throw argument_error("model: index " + std::to_string(max_one_based()) + " exceeds p=" +
                           std::to_string(p));
  }

  bool contains_zero_based(int j) const {
    return std::binary_search(zero_based_.begin(), zero_based_.end(), j);
  }

  // Canonical presentation, e.g. "1,3,4".
  std::string label() const {
    std::string out;
    for (std::size_t i = 0; i < zero_based_.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(zero_based_[i] + 1);
    }
    return out;
  }

  bool operator==(const ModelIndex& other) const = default;

  // Canonical family order: size ascending, then lexicographic.
  bool operator<(const ModelIndex& other) const {
    if (zero_based_.size() != other.zero_based_.size())
      return zero_based_.size() < other.zero_based_.size();
    return zero_based_ < other.zero_based_;
  }

 private:
  std::vector<int> zero_based_;
};

// ---------------------------------------------------------------------------
// ModelFamily: M_p(k), every non-empty model of size <= k, canonical order.
// ---------------------------------------------------------------------------
struct ModelFamily {
  int p = 0;
  int k = 0;
  std::vector<ModelIndex> members;
};

// Full-family cap; exceeding it is a capability error (never truncation).
inline constexpr int kMaxEnumerationP = 20;

inline ModelFamily enumerate_models(int p, int k) {
  if (p < 1) throw argument_error("enumerate_models: p must be >= 1");
  if (k < 1 || k > p) throw argument_error("enumerate_models: need 1 <= k <= p");
  if (p > kMaxEnumerationP)
    throw capability_error("enumerate_models: p=" + std::to_string(p) + " exceeds the enumeration cap p<=" +
                           std::to_string(kMaxEnumerationP) + "; restrict to a subset of covariates");
  ModelFamily family;
  family.p = p;
  family.k = k;
  // Sizes ascend; within a size, lexicographic order on the index vectors.
  for (int size = 1; size <= k; ++size) {
    std::vector<int> pick(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) pick[static_cast<std::size_t>(i)] = i;
    while (true) {
      family.members.push_back(ModelIndex::from_zero_based(pick));
      int pos = size - 1;
      while (pos >= 0 && pick[static_cast<std::size_t>(pos)] == p - size + pos) --pos;
      if (pos < 0) break;
      ++pick[static_cast<std::size_t>(pos)];
      for (int i = pos + 1; i < size; ++i)
        pick[static_cast<std::size_t>(i)] = pick[static_cast<std::size_t>(i - 1)] + 1;
    }
  }
  return family;
}

// Total scalar targets across the full family: p * 2^(p-1).
inline std::uint64_t count_scalar_parameters(int p) {
  if (p < 1) throw argument_error("count_scalar_parameters: p must be >= 1");
  if (p - 1 >= 64)
    throw capability_error("count_scalar_parameters: p * 2^(p-1) overflows 64 bits at p=" + std::to_string(p));
  const std::uint64_t shifted = std::uint64_t{1} << (p - 1);
  if (static_cast<std::uint64_t>(p) > std::numeric_limits<std::uint64_t>::max() / shifted)
    throw capability_error("count_scalar_parameters: p * 2^(p-1) overflows 64 bits at p=" + std::to_string(p));
  return static_cast<std::uint64_t>(p) * shifted;
}

// ---------------------------------------------------------------------------
// CSV ingestion.
// ---------------------------------------------------------------------------
struct LoadOptions {
  bool header = false;        // skip the first line
  int response_column = 0;    // 1-based column holding the response; 0 = last
  bool add_intercept = false; // prepend a column of ones to X
};

namespace detail {

inline std::string_view trim(std::string_view token) {
  while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) token.remove_prefix(1);
  while (!token.empty() && (token.back() == ' ' || token.back() == '\t' || token.back() == '\r'))
    token.remove_suffix(1);
  return token;
}

inline double parse_cell(std::string_view token, long row, long column) {
  const std::string_view cell = trim(token);
  double value = 0.0;
  const auto* first = cell.data();
  const auto* last = cell.data() + cell.size();
  const auto result = std::from_chars(first, last, value);
  if (result.ec != std::errc{} || result.ptr != last)
    throw data_error("csv: row " + std::to_string(row) + ", column " + std::to_string(column) +
                     ": cannot parse '" + std::string(cell) + "' as a number");
  if (!std::isfinite(value))
    throw data_error("csv: row " + std::to_string(row) + ", column " + std::to_string(column) +
                     ": non-finite value");
  return value;
}

// Shortest representation that round-trips bit-exactly.
inline std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

}  // namespace detail

inline Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw data_error("csv: cannot open '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  long line_number = 0;
  bool skipped_header = false;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (detail::trim(line).empty()) continue;
    if (options.header && !skipped_header) {
      skipped_header = true;
      continue;
    }
    std::vector<double> row;
    std::string_view rest(line);
    long column = 0;
    while (true) {
      ++column;
      const auto comma = rest.find(',');
      const std::string_view token = rest.substr(0, comma);
      row.push_back(detail::parse_cell(token, line_number, column));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (width == 0) width = row.size();
    if (row.size() != width)
      throw data_error("csv: row " + std::to_string(line_number) + " has " + std::to_string(row.size()) +
                       " fields, expected " + std::to_string(width));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw data_error("csv: '" + path.string() + "' holds no data rows");

  const auto columns = static_cast<int>(width);
  int response = options.response_column == 0 ? columns : options.response_column;
  if (response < 1 || response > columns)
    throw argument_error("csv: response column " + std::to_string(response) + " outside 1.." +
                         std::to_string(columns));
  const int covariates = columns - 1 + (options.add_intercept ? 1 : 0);
  if (covariates < 1) throw data_error("csv: no covariate columns remain after removing the response");

  Dataset data;
  data.x.resize(static_cast<Eigen::Index>(rows.size()), covariates);
  data.y.resize(static_cast<Eigen::Index>(rows.size()));
  data.has_intercept = options.add_intercept;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    int out = 0;
    if (options.add_intercept) data.x(static_cast<Eigen::Index>(i), out++) = 1.0;
    for (int c = 0; c < columns; ++c) {
      if (c + 1 == response) continue;
      data.x(static_cast<Eigen::Index>(i), out++) = rows[i][static_cast<std::size_t>(c)];
    }
    data.y(static_cast<Eigen::Index>(i)) = rows[i][static_cast<std::size_t>(response - 1)];
  }
  validate_dataset(data);
  return data;
}

// Covariate columns in order, response last; inverse of load_dataset with
// default options (no header, response=last, no intercept).
inline void save_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw data_error("csv: cannot write '" + path.string() + "'");
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < data.p(); ++j) out << detail::format_double(data.x(i, j)) << ',';
    out << detail::format_double(data.y(i)) << '\n';
  }
  if (!out) throw data_error("csv: write failure on '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// JSON echo. Doubles round-trip bit-exactly through nlohmann::json.
// ---------------------------------------------------------------------------
inline nlohmann::ordered_json dataset_to_json(const Dataset& data) {
  nlohmann::ordered_json j;
  j["n"] = data.n();
  j["p"] = data.p();
  auto rows = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index c = 0; c < data.p(); ++c) row.push_back(data.x(i, c));
    rows.push_back(std::move(row));
  }
  j["X"] = std::move(rows);
  auto response = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < data.n(); ++i) response.push_back(data.y(i));
  j["y"] = std::move(response);
  if (data.mean_y) {
    auto mean = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < data.n(); ++i) mean.push_back((*data.mean_y)(i));
    j["meanY"] = std::move(mean);
  }
  return j;
}

inline Dataset dataset_from_json(const nlohmann::json& j) {
  try {
    const auto n = j.at("n").get<Eigen::Index>();
    const auto p = j.at("p").get<Eigen::Index>();
    Dataset data;
    data.x.resize(n, p);
    data.y.resize(n);
    const auto& rows = j.at("X");
    const auto& response = j.at("y");
    if (static_cast<Eigen::Index>(rows.size()) != n || static_cast<Eigen::Index>(response.size()) != n)
      throw data_error("dataset json: X/y lengths disagree with n");
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& row = rows.at(static_cast<std::size_t>(i));
      if (static_cast<Eigen::Index>(row.size()) != p) throw data_error("dataset json: ragged X row");
      for (Eigen::Index c = 0; c < p; ++c) data.x(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
      data.y(i) = response.at(static_cast<std::size_t>(i)).get<double>();
    }
    if (j.contains("meanY")) {
      const auto& mean = j.at("meanY");
      if (static_cast<Eigen::Index>(mean.size()) != n) throw data_error("dataset json: meanY length mismatch");
      Eigen::VectorXd mu(n);
      for (Eigen::Index i = 0; i < n; ++i) mu(i) = mean.at(static_cast<std::size_t>(i)).get<double>();
      data.mean_y = std::move(mu);
    }
    validate_dataset(data);
    return data;
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("dataset json: ") + e.what());
  }
}

}  // namespace posi
