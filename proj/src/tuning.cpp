#include "ridgefuse/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "ridgefuse/parallel.hpp"

namespace ridgefuse {

std::vector<Eigen::Index> FoldAssignment::members(int fold) const {
  std::vector<Eigen::Index> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) out.push_back(static_cast<Eigen::Index>(i));
  }
  return out;
}

std::vector<Eigen::Index> FoldAssignment::complement(int fold) const {
  std::vector<Eigen::Index> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != fold) out.push_back(static_cast<Eigen::Index>(i));
  }
  return out;
}

FoldAssignment stratified_folds(std::span<const int> labels, int k,
                                std::uint64_t seed) {
  if (k < 2) fail(ErrorCode::InvalidInput, "number of folds must be at least 2");
  int num_classes = 0;
  for (int y : labels) {
    if (y < 1) fail(ErrorCode::InvalidInput, "stratified folds need labels >= 1");
    num_classes = std::max(num_classes, y);
  }
  std::vector<std::vector<int>> members(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    members[labels[i] - 1].push_back(static_cast<int>(i));
  }
  for (int c = 0; c < num_classes; ++c) {
    if (members[c].size() < static_cast<std::size_t>(k)) {
      fail(ErrorCode::InsufficientClassSize,
           "class " + std::to_string(c + 1) + " has " +
               std::to_string(members[c].size()) + " observations, fewer than " +
               std::to_string(k) + " folds");
    }
  }

  std::mt19937_64 rng(seed);
  FoldAssignment out;
  out.k = k;
  out.fold_of.assign(labels.size(), 0);
  // Rotating the starting fold per class keeps total fold sizes balanced too.
  std::size_t offset = 0;
  for (auto& idx : members) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      out.fold_of[idx[r]] = static_cast<int>((offset + r) % k) + 1;
    }
    offset = (offset + idx.size()) % k;
  }
  return out;
}

FoldAssignment random_folds(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) fail(ErrorCode::InvalidInput, "number of folds must be at least 2");
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  FoldAssignment out;
  out.k = k;
  out.fold_of.assign(n, 0);
  for (std::size_t r = 0; r < n; ++r) out.fold_of[idx[r]] = static_cast<int>(r % k) + 1;
  return out;
}

void GridSpec::validate() const {
  auto check = [](const std::vector<double>& v, const char* name) {
    if (v.empty()) fail(ErrorCode::InvalidInput, std::string(name) + " grid is empty");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!(v[i] >= 0.0)) {
        fail(ErrorCode::InvalidInput, std::string(name) + " grid has a negative value");
      }
      if (i > 0 && !(v[i] > v[i - 1])) {
        fail(ErrorCode::InvalidInput,
             std::string(name) + " grid must be strictly increasing");
      }
    }
  };
  check(lambda1_values, "lambda1");
  check(lambda2_values, "lambda2");
  if (!std::isfinite(lambda1_values.back())) {
    fail(ErrorCode::InvalidInput, "lambda1 grid must be finite");
  }
}

std::vector<double> default_simulation_grid() {
  std::vector<double> out;
  for (int x = -5; x <= 5; ++x) out.push_back(std::pow(10.0, x));
  return out;
}

std::vector<double> half_step_grid() {
  std::vector<double> out;
  for (int x = -20; x <= 20; ++x) out.push_back(std::pow(10.0, 0.5 * x));
  return out;
}

namespace {

struct Subset {
  Eigen::MatrixXd x;
  std::vector<int> labels;
};

Subset take_rows(const Eigen::MatrixXd& x, std::span<const int> labels,
                 const std::vector<Eigen::Index>& rows) {
  Subset s;
  s.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
  s.labels.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    s.x.row(static_cast<Eigen::Index>(r)) = x.row(rows[r]);
    s.labels.push_back(labels[rows[r]]);
  }
  return s;
}

int count_classes(std::span<const int> labels) {
  int c = 0;
  for (int y : labels) c = std::max(c, y);
  return c;
}

/// Prepared data for one fold: training statistics and the held-out rows.
struct FoldData {
  std::vector<ClassStats> training;
  Subset held_out;
};

std::vector<FoldData> prepare_folds(const Eigen::MatrixXd& x,
                                    std::span<const int> labels,
                                    const FoldAssignment& folds) {
  if (folds.fold_of.size() != labels.size() ||
      static_cast<Eigen::Index>(labels.size()) != x.rows()) {
    fail(ErrorCode::DimensionMismatch, "fold assignment does not match the data");
  }
  const int num_classes = count_classes(labels);
  std::vector<FoldData> out(folds.k);
  for (int v = 1; v <= folds.k; ++v) {
    const Subset train = take_rows(x, labels, folds.complement(v));
    try {
      out[v - 1].training = class_stats(train.x, train.labels, num_classes);
    } catch (const Error& e) {
      fail(e.code(), "fold " + std::to_string(v) + ": " + e.what());
    }
    out[v - 1].held_out = take_rows(x, labels, folds.members(v));
  }
  return out;
}

double held_out_term(const FoldData& fold, const PrecisionSet& thetas,
                     HeldOutCentering centering) {
  const auto& h = fold.held_out;
  double total = 0.0;
  for (std::size_t c = 0; c < thetas.size(); ++c) {
    const int label = static_cast<int>(c) + 1;
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < h.labels.size(); ++i) {
      if (h.labels[i] == label) rows.push_back(static_cast<Eigen::Index>(i));
    }
    if (rows.empty()) continue;
    const auto n_cv = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd centered(n_cv, h.x.cols());
    for (Eigen::Index r = 0; r < n_cv; ++r) centered.row(r) = h.x.row(rows[r]);
    const Eigen::VectorXd mean = centering == HeldOutCentering::HeldOutMean
                                     ? Eigen::VectorXd(centered.colwise().mean().transpose())
                                     : fold.training[c].mean;
    centered.rowwise() -= mean.transpose();
    // n_{c(v)} tr(S_{c(v)} Theta) = sum_i r_i^T Theta r_i
    const double quad = (centered * thetas[c].matrix()).cwiseProduct(centered).sum();
    total += quad - static_cast<double>(n_cv) * logdet(thetas[c]);
  }
  return total;
}

std::string describe(const PenaltyPair& pen) {
  std::ostringstream os;
  os.precision(6);
  os << "(lambda1=" << pen.lambda1 << ", lambda2=";
  if (pen.infinite_fusion()) os << "inf"; else os << pen.lambda2;
  os << ")";
  return os.str();
}

}  // namespace

std::vector<double> validation_fold_scores(const Eigen::MatrixXd& x,
                                           std::span<const int> labels,
                                           const FoldAssignment& folds,
                                           const PrecisionFitter& fitter,
                                           HeldOutCentering centering) {
  const auto prepared = prepare_folds(x, labels, folds);
  std::vector<double> out;
  out.reserve(prepared.size());
  for (std::size_t v = 0; v < prepared.size(); ++v) {
    const PrecisionSet thetas = fitter(prepared[v].training, static_cast<int>(v) + 1);
    out.push_back(held_out_term(prepared[v], thetas, centering));
  }
  return out;
}

double validation_score(const Eigen::MatrixXd& x, std::span<const int> labels,
                        const FoldAssignment& folds, const PenaltyPair& pen,
                        const TuningOptions& options) {
  validate(pen);
  const PrecisionFitter fitter = [&](std::span<const ClassStats> training, int v) {
    try {
      return fit(training, pen, std::nullopt, options.fit).precision_set;
    } catch (const Error& e) {
      fail(e.code(), "fold " + std::to_string(v) + " at " + describe(pen) + ": " +
                         e.what());
    }
  };
  const auto terms = validation_fold_scores(x, labels, folds, fitter, options.centering);
  return std::accumulate(terms.begin(), terms.end(), 0.0);
}

GridSearchResult select_best(std::vector<GridPoint> table) {
  GridSearchResult out;
  const GridPoint* best = nullptr;
  for (const auto& pt : table) {
    if (!pt.ok) continue;
    if (best == nullptr || pt.score < best->score ||
        (pt.score == best->score &&
         (pt.pen.lambda1 > best->pen.lambda1 ||
          (pt.pen.lambda1 == best->pen.lambda1 && pt.pen.lambda2 > best->pen.lambda2)))) {
      best = &pt;
    }
  }
  if (best == nullptr) {
    std::ostringstream msg;
    msg << "every grid point failed:";
    for (const auto& pt : table) msg << "\n  " << describe(pt.pen) << ": " << pt.error;
    fail(ErrorCode::TuningFailed, msg.str());
  }
  out.best = best->pen;
  out.best_score = best->score;
  out.table = std::move(table);
  return out;
}

GridSearchResult grid_search(const Eigen::MatrixXd& x, std::span<const int> labels,
                             const GridSpec& grid, int k, std::uint64_t seed,
                             const TuningOptions& options) {
  grid.validate();
  const FoldAssignment folds = stratified_folds(labels, k, seed);
  return grid_search(x, labels, grid, folds, options);
}

GridSearchResult grid_search(const Eigen::MatrixXd& x, std::span<const int> labels,
                             const GridSpec& grid, const FoldAssignment& folds,
                             const TuningOptions& options) {
  grid.validate();
  const auto prepared = prepare_folds(x, labels, folds);
  const std::size_t n1 = grid.lambda1_values.size();
  const std::size_t n2 = grid.lambda2_values.size();
  std::vector<GridPoint> table(n1 * n2);

  // Rows share nothing mutable; within a row the previous lambda2 solution
  // per fold is offered as a warm start.
  parallel_for(n1, options.jobs, [&](std::size_t row) {
    std::vector<std::optional<PrecisionSet>> warm(prepared.size());
    for (std::size_t col = 0; col < n2; ++col) {
      GridPoint& pt = table[row * n2 + col];
      pt.pen = {grid.lambda1_values[row], grid.lambda2_values[col]};
      double score = 0.0;
      try {
        for (std::size_t v = 0; v < prepared.size(); ++v) {
          const auto& training = prepared[v].training;
          std::optional<PrecisionSet> init;
          if (!pt.pen.infinite_fusion()) {
            init = choose_init(training, pt.pen,
                               options.warm_start && warm[v] ? &*warm[v] : nullptr);
          }
          FitReport rep;
          try {
            rep = fit(training, pt.pen, init, options.fit);
          } catch (const Error& e) {
            fail(e.code(), "fold " + std::to_string(v + 1) + ": " + e.what());
          }
          score += held_out_term(prepared[v], rep.precision_set, options.centering);
          warm[v] = std::move(rep.precision_set);
        }
        pt.score = score;
        pt.ok = std::isfinite(score);
        if (!pt.ok) pt.error = "non-finite score";
      } catch (const Error& e) {
        pt.ok = false;
        pt.error = std::string(to_string(e.code())) + ": " + e.what();
      }
    }
  });
  return select_best(std::move(table));
}

}  // namespace ridgefuse
