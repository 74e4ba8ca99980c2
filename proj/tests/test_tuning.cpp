#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "ridgefuse/tuning.hpp"

using namespace ridgefuse;

namespace {

struct Labeled {
  Eigen::MatrixXd x;
  std::vector<int> y;
};

Labeled two_class_sample(int n_per_class, int p, bool same_cov, std::mt19937_64& rng) {
  const Eigen::MatrixXd s1 = oracle::random_pd(p, rng);
  const Eigen::MatrixXd s2 = same_cov ? s1 : oracle::random_pd(p, rng);
  Labeled d;
  d.x.resize(2 * n_per_class, p);
  d.x.topRows(n_per_class) = oracle::sample(n_per_class, Eigen::VectorXd::Zero(p), s1, rng);
  d.x.bottomRows(n_per_class) = oracle::sample(n_per_class, Eigen::VectorXd::Ones(p), s2, rng);
  for (int i = 0; i < 2 * n_per_class; ++i) d.y.push_back(i < n_per_class ? 1 : 2);
  return d;
}

std::map<int, std::vector<int>> per_class_fold_sizes(const FoldAssignment& f,
                                                     const std::vector<int>& y) {
  std::map<int, std::vector<int>> out;
  for (std::size_t i = 0; i < y.size(); ++i) {
    auto& v = out[y[i]];
    v.resize(f.k);
    ++v[f.fold_of[i] - 1];
  }
  return out;
}

}  // namespace

TEST_CASE("stratified folds split each class evenly") {
  std::vector<int> y;
  for (int c = 1; c <= 3; ++c) y.insert(y.end(), 18, c);
  const auto f = stratified_folds(y, 3, 7);
  for (const auto& [c, sizes] : per_class_fold_sizes(f, y)) {
    CHECK(sizes == std::vector<int>{6, 6, 6});
  }

  const std::vector<int> five(5, 1);
  CHECK(per_class_fold_sizes(stratified_folds(five, 5, 1), five)[1] ==
        std::vector<int>{1, 1, 1, 1, 1});

  std::vector<int> seven(7, 1);
  seven.insert(seven.end(), 4, 2);
  const auto f7 = stratified_folds(seven, 3, 2);
  for (const auto& [c, sizes] : per_class_fold_sizes(f7, seven)) {
    auto sorted = sizes;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted.back() - sorted.front() <= 1);
    CHECK(sorted.front() >= 1);
  }
  auto sorted = per_class_fold_sizes(f7, seven)[1];
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{2, 2, 3});
}

TEST_CASE("stratified folds are deterministic in the seed") {
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) y.push_back(1 + i % 2);
  CHECK(stratified_folds(y, 5, 99).fold_of == stratified_folds(y, 5, 99).fold_of);
  CHECK(stratified_folds(y, 5, 99).fold_of != stratified_folds(y, 5, 100).fold_of);
}

TEST_CASE("stratified folds reject small classes") {
  std::vector<int> y{1, 1, 1, 2, 2};
  try {
    stratified_folds(y, 3, 1);
    FAIL("expected InsufficientClassSize");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientClassSize);
  }
  CHECK_THROWS_AS(stratified_folds(y, 1, 1), Error);
}

TEST_CASE("random folds cover every row") {
  const auto f = random_folds(23, 5, 4);
  std::vector<int> sizes(5);
  for (int v : f.fold_of) ++sizes[v - 1];
  CHECK(*std::max_element(sizes.begin(), sizes.end()) -
            *std::min_element(sizes.begin(), sizes.end()) <= 1);
  CHECK(f.members(2).size() + f.complement(2).size() == 23);
}

TEST_CASE("grid validation") {
  GridSpec g{{1, 2}, {0.5, 0.5}};
  CHECK_THROWS_AS(g.validate(), Error);
  g = {{}, {1}};
  CHECK_THROWS_AS(g.validate(), Error);
  g = {{-1, 1}, {1}};
  CHECK_THROWS_AS(g.validate(), Error);
  g = {{1}, {1, PenaltyPair::kInfiniteFusion}};
  CHECK_NOTHROW(g.validate());
  CHECK(default_simulation_grid().size() == 11);
  CHECK(default_simulation_grid().front() == doctest::Approx(1e-5));
  CHECK(half_step_grid().size() == 41);
  CHECK(half_step_grid()[1] == doctest::Approx(std::pow(10.0, -9.5)));
}

TEST_CASE("validation score with identity precisions is the held-out trace") {
  std::mt19937_64 rng(51);
  const auto d = two_class_sample(10, 3, false, rng);
  const auto folds = stratified_folds(d.y, 5, 3);
  const PrecisionFitter eye = [](std::span<const ClassStats> training, int) {
    PrecisionSet out;
    for (const auto& s : training) out.thetas.push_back(SymmetricMatrix::identity(s.cov.dim()));
    return out;
  };
  const auto terms = validation_fold_scores(d.x, d.y, folds, eye);
  REQUIRE(terms.size() == 5);
  for (int v = 1; v <= 5; ++v) {
    double expected = 0.0;
    for (int c = 1; c <= 2; ++c) {
      std::vector<Eigen::Index> rows;
      for (auto i : folds.members(v)) {
        if (d.y[i] == c) rows.push_back(i);
      }
      Eigen::MatrixXd h(static_cast<Eigen::Index>(rows.size()), 3);
      for (std::size_t r = 0; r < rows.size(); ++r) h.row(static_cast<Eigen::Index>(r)) = d.x.row(rows[r]);
      const Eigen::MatrixXd centered = h.rowwise() - h.colwise().mean();
      expected += (centered.transpose() * centered).trace();
    }
    CHECK(terms[v - 1] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("validation score decomposes over folds") {
  std::mt19937_64 rng(52);
  const auto d = two_class_sample(12, 4, false, rng);
  const auto folds = stratified_folds(d.y, 3, 8);
  const PenaltyPair pen{0.5, 1.5};
  double independent = 0.0;
  for (int v = 1; v <= 3; ++v) {
    std::vector<int> ytr;
    const auto tr = folds.complement(v);
    Eigen::MatrixXd xtr(static_cast<Eigen::Index>(tr.size()), 4);
    for (std::size_t r = 0; r < tr.size(); ++r) {
      xtr.row(static_cast<Eigen::Index>(r)) = d.x.row(tr[r]);
      ytr.push_back(d.y[tr[r]]);
    }
    const auto thetas = fit(class_stats(xtr, ytr), pen).precision_set;
    for (int c = 1; c <= 2; ++c) {
      std::vector<Eigen::Index> rows;
      for (auto i : folds.members(v)) {
        if (d.y[i] == c) rows.push_back(i);
      }
      Eigen::MatrixXd h(static_cast<Eigen::Index>(rows.size()), 4);
      for (std::size_t r = 0; r < rows.size(); ++r) h.row(static_cast<Eigen::Index>(r)) = d.x.row(rows[r]);
      const Eigen::MatrixXd centered = h.rowwise() - h.colwise().mean();
      const Eigen::MatrixXd t = thetas[c - 1].matrix();
      independent += (centered.transpose() * centered * t).trace() -
                     static_cast<double>(rows.size()) * oracle::logdet_llt(t);
    }
  }
  const double score = validation_score(d.x, d.y, folds, pen);
  CHECK(score == doctest::Approx(independent).epsilon(1e-9));
  CHECK(score == validation_score(d.x, d.y, folds, pen));
}

TEST_CASE("training-mean centering changes the score") {
  std::mt19937_64 rng(53);
  const auto d = two_class_sample(12, 3, false, rng);
  const auto folds = stratified_folds(d.y, 3, 8);
  TuningOptions held, train;
  train.centering = HeldOutCentering::TrainingMean;
  const double a = validation_score(d.x, d.y, folds, {1, 1}, held);
  const double b = validation_score(d.x, d.y, folds, {1, 1}, train);
  // Centering at the held-out mean minimizes each quadratic form.
  CHECK(a < b);
}

TEST_CASE("grid search picks the table minimum") {
  std::mt19937_64 rng(54);
  const auto d = two_class_sample(15, 4, false, rng);
  const GridSpec grid{{1e-2, 1e-1, 1, 10}, {1e-2, 1, 100, PenaltyPair::kInfiniteFusion}};
  const auto res = grid_search(d.x, d.y, grid, 3, 5);
  REQUIRE(res.table.size() == 16);
  double best = INFINITY;
  for (const auto& pt : res.table) {
    CHECK(pt.ok);
    best = std::min(best, pt.score);
  }
  CHECK(res.best_score == best);

  const auto one = grid_search(d.x, d.y, GridSpec{{0.5}, {2.0}}, 3, 5);
  CHECK(one.best == PenaltyPair{0.5, 2.0});

  TuningOptions cold;
  cold.warm_start = false;
  const auto res_cold = grid_search(d.x, d.y, grid, 3, 5, cold);
  for (std::size_t i = 0; i < res.table.size(); ++i) {
    CHECK(res_cold.table[i].score ==
          doctest::Approx(res.table[i].score).epsilon(1e-6));
  }

  TuningOptions par;
  par.jobs = 3;
  const auto res_par = grid_search(d.x, d.y, grid, 3, 5, par);
  for (std::size_t i = 0; i < res.table.size(); ++i) {
    CHECK(res_par.table[i].score == res.table[i].score);
  }
}

TEST_CASE("select_best tie-breaks toward more regularization") {
  std::vector<GridPoint> table{
      {{1, 1}, 5.0, true, ""},
      {{1, 10}, 5.0, true, ""},
      {{10, 1}, 5.0, true, ""},
      {{0.1, 100}, 6.0, true, ""},
  };
  CHECK(select_best(table).best == PenaltyPair{10, 1});
  table[2].ok = false;
  CHECK(select_best(table).best == PenaltyPair{1, 10});
  for (auto& pt : table) {
    pt.ok = false;
    pt.error = "boom";
  }
  try {
    select_best(table);
    FAIL("expected TuningFailed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TuningFailed);
    CHECK(std::string(e.what()).find("boom") != std::string::npos);
  }
}

TEST_CASE("equal covariances favour strong fusion") {
  int upper = 0;
  const auto g = default_simulation_grid();
  for (int run = 0; run < 20; ++run) {
    std::mt19937_64 rng(1000 + run);
    const auto d = two_class_sample(25, 5, true, rng);
    const auto res = grid_search(d.x, d.y, GridSpec{g, g}, 5, run);
    // Upper half of the eleven-point grid: above its median 10^0.
    if (res.best.lambda2 > 1.0) ++upper;
  }
  CHECK(upper >= 16);
}
