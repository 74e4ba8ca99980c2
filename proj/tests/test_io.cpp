#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "ridgefuse/io.hpp"

using namespace ridgefuse;

namespace {

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in);
}

ErrorCode code_of(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a parse failure");
  return ErrorCode::InvalidInput;
}

ModelFile random_model(std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  ModelFile m;
  for (int c = 0; c < 3; ++c) {
    Eigen::VectorXd mu(4);
    for (int j = 0; j < 4; ++j) mu(j) = z(rng) * 1e3;
    m.params.classes.push_back({c == 2 ? 1.0 - 2.0 / 7.0 : 1.0 / 7.0, mu,
                                SymmetricMatrix(oracle::random_pd(4, rng))});
  }
  m.penalty = {0.1, 3.7e-5};
  m.class_ids = {3, 7, 11};
  m.seed = 12345678901234ULL;
  m.converged = false;
  return m;
}

}  // namespace

TEST_CASE("parse_csv with a label column") {
  const auto ds = parse("label,a,b\n1,0.5,2\n,1e-3,-4\n2, 3 ,+5\n\n");
  CHECK(ds.has_label_column);
  CHECK(ds.feature_names == std::vector<std::string>{"a", "b"});
  REQUIRE(ds.x.rows() == 3);
  CHECK(ds.x(1, 0) == 1e-3);
  CHECK(ds.x(2, 0) == 3.0);
  CHECK(ds.x(2, 1) == 5.0);
  CHECK(ds.labels[0] == 1);
  CHECK_FALSE(ds.labels[1].has_value());
  CHECK(ds.num_labeled() == 2);
  CHECK(ds.class_ids() == std::vector<int>{1, 2});
}

TEST_CASE("parse_csv without a label column and with a byte order mark") {
  const auto ds = parse("\xEF\xBB\xBFx,y\r\n1,2\r\n3,4\r\n");
  CHECK_FALSE(ds.has_label_column);
  CHECK(ds.feature_names.front() == "x");
  CHECK(ds.num_labeled() == 0);
  CHECK(ds.x(1, 1) == 4.0);
}

TEST_CASE("parse_csv errors") {
  CHECK(code_of("") == ErrorCode::ParseError);
  CHECK(code_of("label\n1\n") == ErrorCode::ParseError);
  CHECK(code_of("a,b\n1\n") == ErrorCode::ParseError);
  CHECK(code_of("a,b\n1,nan\n") == ErrorCode::ParseError);
  CHECK(code_of("label,a\nx,1\n") == ErrorCode::ParseError);
  try {
    parse("a,b\n1,2\n3,oops\n");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("column 2") != std::string::npos);
  }
  try {
    read_csv("/nonexistent/file.csv");
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
}

TEST_CASE("split_dataset maps class ids") {
  const auto ds = parse("label,a\n7,1\n,2\n3,3\n7,4\n");
  const auto sp = split_dataset(ds);
  CHECK(sp.class_ids == std::vector<int>{3, 7});
  CHECK(sp.data.labels == std::vector<int>{2, 1, 2});
  CHECK(sp.unlabeled_rows == std::vector<std::size_t>{1});
  CHECK(sp.data.unlabeled(0, 0) == 2.0);
  CHECK(sp.labeled_rows == std::vector<std::size_t>{0, 2, 3});
  CHECK_THROWS_AS(split_dataset(ds, {3}), Error);
}

TEST_CASE("model JSON round trip is exact") {
  std::mt19937_64 rng(91);
  auto m = random_model(rng);
  m.standardization = Standardization{Eigen::Vector4d(1.0 / 3, -2, 0, 5), Eigen::Vector4d(0.1, 1, 2, 3)};
  const auto back = model_from_json(model_to_json(m));
  for (int c = 0; c < 3; ++c) {
    CHECK(back.params.classes[c].pi == m.params.classes[c].pi);
    CHECK(back.params.classes[c].mu == m.params.classes[c].mu);
    CHECK(back.params.classes[c].theta.matrix() == m.params.classes[c].theta.matrix());
  }
  CHECK(back.penalty == m.penalty);
  CHECK(back.class_ids == m.class_ids);
  CHECK(back.seed == m.seed);
  CHECK_FALSE(back.converged);
  REQUIRE(back.standardization);
  CHECK(back.standardization->center == m.standardization->center);
  CHECK(model_to_json(back) == model_to_json(m));
}

TEST_CASE("infinite fusion is stored as a string") {
  std::mt19937_64 rng(92);
  auto m = random_model(rng);
  m.penalty.lambda2 = PenaltyPair::kInfiniteFusion;
  const std::string text = model_to_json(m);
  CHECK(text.find("\"inf\"") != std::string::npos);
  CHECK(model_from_json(text).penalty.infinite_fusion());
}

TEST_CASE("model JSON rejects bad input") {
  std::mt19937_64 rng(93);
  auto m = random_model(rng);
  std::string text;
  CHECK_THROWS_AS(model_from_json("{"), Error);
  CHECK_THROWS_AS(model_from_json("{\"classes\": 1}"), Error);

  m.params.classes[0].theta = SymmetricMatrix::identity(4);
  text = model_to_json(m);
  // Break symmetry of the first precision in the serialized text.
  const auto first_row = text.find("\"theta\"");
  const auto one = text.find("1.0", first_row);
  REQUIRE(one != std::string::npos);
  const auto zero = text.find("0.0", one);
  text.replace(zero, 3, "0.5");
  try {
    model_from_json(text);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("symmetric") != std::string::npos);
  }
}

TEST_CASE("model files on disk") {
  std::mt19937_64 rng(94);
  const auto m = random_model(rng);
  const auto path = (std::filesystem::temp_directory_path() / "ridgefuse_io_test.json").string();
  write_model(m, path);
  const auto back = read_model(path);
  CHECK(back.params.classes[1].theta.matrix() == m.params.classes[1].theta.matrix());
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_model(path), Error);
}

TEST_CASE("model_features applies the stored standardization") {
  std::mt19937_64 rng(95);
  auto m = random_model(rng);
  Eigen::MatrixXd x(2, 4);
  x << 1, 2, 3, 4, 5, 6, 7, 8;
  CHECK(model_features(m, x) == x);
  m.standardization = Standardization{Eigen::Vector4d(1, 1, 1, 1), Eigen::Vector4d(2, 2, 2, 2)};
  CHECK(model_features(m, x)(1, 3) == 3.5);
  CHECK_THROWS_AS(model_features(m, Eigen::MatrixXd::Zero(1, 3)), Error);
}
