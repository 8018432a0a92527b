#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "posi/posi.hpp"

using namespace posi;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "posi_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

template <typename E, typename F>
std::string message_of(F&& f) {
  try {
    f();
  } catch (const E& e) {
    return e.what();
  }
  return "<no throw>";
}

}  // namespace

TEST_CASE("csv load: three rows, response is last column") {
  const auto path = temp_file("basic.csv");
  write_file(path, "1,2\n2,4\n3,6\n");
  const Dataset data = load_dataset(path);
  REQUIRE(data.n() == 3);
  REQUIRE(data.p() == 1);
  CHECK(data.x(0, 0) == 1.0);
  CHECK(data.x(1, 0) == 2.0);
  CHECK(data.x(2, 0) == 3.0);
  CHECK(data.y(0) == 2.0);
  CHECK(data.y(1) == 4.0);
  CHECK(data.y(2) == 6.0);
  CHECK_FALSE(data.has_intercept);
  CHECK_FALSE(data.mean_y.has_value());
}

TEST_CASE("csv load: intercept column prepended as ones") {
  const auto path = temp_file("intercept.csv");
  write_file(path, "1,2\n2,4\n3,6\n");
  LoadOptions options;
  options.add_intercept = true;
  const Dataset data = load_dataset(path, options);
  REQUIRE(data.p() == 2);
  CHECK(data.x.col(0).isConstant(1.0));
  CHECK(data.x(1, 1) == 2.0);
  CHECK(data.has_intercept);
}

TEST_CASE("csv load: parse failure names the data row") {
  const auto path = temp_file("bad.csv");
  write_file(path, "1,2\nabc,4\n");
  const std::string msg = message_of<data_error>([&] { load_dataset(path); });
  CHECK(msg.find("row 2") != std::string::npos);
  CHECK(msg.find("abc") != std::string::npos);
}

TEST_CASE("csv load: response column selection, header, blank lines") {
  const auto path = temp_file("opts.csv");
  write_file(path, "resp,a,b\n\n7,1,2\n8,3,4\n\n");
  LoadOptions options;
  options.header = true;
  options.response_column = 1;
  const Dataset data = load_dataset(path, options);
  REQUIRE(data.n() == 2);
  REQUIRE(data.p() == 2);
  CHECK(data.y(0) == 7.0);
  CHECK(data.y(1) == 8.0);
  CHECK(data.x(0, 0) == 1.0);
  CHECK(data.x(1, 1) == 4.0);
}

TEST_CASE("csv load: ragged rows and non-finite cells rejected") {
  const auto ragged = temp_file("ragged.csv");
  write_file(ragged, "1,2\n3\n");
  CHECK_THROWS_AS(load_dataset(ragged), data_error);

  const auto infinite = temp_file("inf.csv");
  write_file(infinite, "1,2\ninf,4\n");
  CHECK_THROWS_AS(load_dataset(infinite), data_error);

  const auto empty = temp_file("empty.csv");
  write_file(empty, "\n\n");
  CHECK_THROWS_AS(load_dataset(empty), data_error);
}

TEST_CASE("csv save/load round trip preserves values exactly") {
  Dataset data;
  data.x = Eigen::MatrixXd(2, 2);
  data.x << 0.1, -2.5000000000000004, 1e-17, 3.75;
  data.y = Eigen::VectorXd(2);
  data.y << -0.30000000000000004, 12345.678901234567;
  const auto path = temp_file("roundtrip.csv");
  save_dataset_csv(data, path);
  const Dataset back = load_dataset(path);
  REQUIRE(back.n() == 2);
  REQUIRE(back.p() == 2);
  CHECK(back.x == data.x);  // shortest round-trip formatting is exact
  CHECK(back.y == data.y);
}

TEST_CASE("dataset json round trip, including meanY") {
  Dataset data;
  data.x = Eigen::MatrixXd(2, 1);
  data.x << 1.5, -2.25;
  data.y = Eigen::VectorXd(2);
  data.y << 0.5, 0.125;
  data.mean_y = Eigen::VectorXd(2);
  *data.mean_y << 0.25, 0.0;
  const Dataset back = dataset_from_json(dataset_to_json(data));
  CHECK(back.x == data.x);
  CHECK(back.y == data.y);
  REQUIRE(back.mean_y.has_value());
  CHECK(*back.mean_y == *data.mean_y);
  CHECK_THROWS_AS(dataset_from_json(nlohmann::json{{"n", 1}}), data_error);
}

TEST_CASE("model index: validation and accessors") {
  const ModelIndex m = ModelIndex::from_one_based({1, 3, 4});
  CHECK(m.size() == 3);
  CHECK(m.label() == "1,3,4");
  CHECK(m.one_based() == std::vector<int>{1, 3, 4});
  CHECK(m.max_one_based() == 4);
  CHECK(m.contains_zero_based(0));
  CHECK_FALSE(m.contains_zero_based(1));
  CHECK_NOTHROW(m.check_within(4));
  CHECK_THROWS_AS(m.check_within(3), argument_error);

  CHECK_THROWS_AS(ModelIndex::from_one_based({}), argument_error);
  CHECK_THROWS_AS(ModelIndex::from_one_based({0, 1}), argument_error);
  CHECK_THROWS_AS(ModelIndex::from_one_based({2, 2}), argument_error);
  CHECK_THROWS_AS(ModelIndex::from_one_based({3, 1}), argument_error);
}

TEST_CASE("model ordering: size first, then lexicographic") {
  const ModelIndex a = ModelIndex::from_one_based({3});
  const ModelIndex b = ModelIndex::from_one_based({1, 2});
  const ModelIndex c = ModelIndex::from_one_based({1, 3});
  CHECK(a < b);  // smaller size wins
  CHECK(b < c);  // lexicographic inside a size
  CHECK_FALSE(c < b);
  CHECK(a == ModelIndex::from_zero_based({2}));
}

TEST_CASE("enumerate_models: counts and canonical order") {
  CHECK(enumerate_models(10, 10).members.size() == 1023);

  const ModelFamily singletons = enumerate_models(3, 1);
  REQUIRE(singletons.members.size() == 3);
  CHECK(singletons.members[0].label() == "1");
  CHECK(singletons.members[1].label() == "2");
  CHECK(singletons.members[2].label() == "3");

  const ModelFamily family = enumerate_models(4, 2);
  REQUIRE(family.members.size() == 10);  // 4 singletons + 6 pairs
  const std::vector<std::string> expected = {"1",   "2",   "3",   "4",   "1,2",
                                             "1,3", "1,4", "2,3", "2,4", "3,4"};
  for (std::size_t i = 0; i < expected.size(); ++i) CHECK(family.members[i].label() == expected[i]);

  CHECK_THROWS_AS(enumerate_models(0, 1), argument_error);
  CHECK_THROWS_AS(enumerate_models(4, 5), argument_error);
  CHECK_THROWS_AS(enumerate_models(21, 3), capability_error);
}

TEST_CASE("count_scalar_parameters: closed form, enumeration oracle, overflow guard") {
  CHECK(count_scalar_parameters(10) == 5120);
  CHECK(count_scalar_parameters(1) == 1);
  CHECK(count_scalar_parameters(5) == 80);

  std::uint64_t by_enumeration = 0;  // sum of |M| over all 31 models
  for (const ModelIndex& model : enumerate_models(5, 5).members)
    by_enumeration += static_cast<std::uint64_t>(model.size());
  CHECK(by_enumeration == 80);

  CHECK(count_scalar_parameters(57) == 57ull << 56);
  CHECK_THROWS_AS(count_scalar_parameters(64), capability_error);
  CHECK_THROWS_AS(count_scalar_parameters(400), capability_error);
}

TEST_CASE("validate_dataset rejects malformed inputs") {
  Dataset data;
  data.x = Eigen::MatrixXd::Ones(3, 2);
  data.y = Eigen::VectorXd::Ones(2);  // wrong length
  CHECK_THROWS_AS(validate_dataset(data), data_error);
  data.y = Eigen::VectorXd::Ones(3);
  CHECK_NOTHROW(validate_dataset(data));
  data.x(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(validate_dataset(data), data_error);
}
