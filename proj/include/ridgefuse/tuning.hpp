#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ridgefuse/estimator.hpp"

namespace ridgefuse {

struct FoldAssignment {
  int k = 0;
  std::vector<int> fold_of;  // values in 1..k

  /// Row indices whose fold is (or is not) `fold`.
  std::vector<Eigen::Index> members(int fold) const;
  std::vector<Eigen::Index> complement(int fold) const;
};

/// Splits each class as evenly as possible over k folds. Deterministic in
/// `seed`. InsufficientClassSize when a class has fewer than k members.
FoldAssignment stratified_folds(std::span<const int> labels, int k,
                                std::uint64_t seed);

/// Unstratified split of n rows into k near-equal folds (folds may be
/// empty when n < k).
FoldAssignment random_folds(std::size_t n, int k, std::uint64_t seed);

struct GridSpec {
  std::vector<double> lambda1_values;
  std::vector<double> lambda2_values;  // may end with the infinite sentinel

  void validate() const;
};

/// {10^x : x = -5, ..., 5}.
std::vector<double> default_simulation_grid();
/// {10^x : x = -10, -9.5, ..., 10}.
std::vector<double> half_step_grid();

enum class HeldOutCentering {
  HeldOutMean,   // S_{c(v)} centered at the held-out fold's class mean
  TrainingMean,  // centered at the training class mean
};

struct TuningOptions {
  FitOptions fit;
  HeldOutCentering centering = HeldOutCentering::HeldOutMean;
  bool warm_start = true;
  int jobs = 1;
};

/// Produces precisions from training-fold class statistics.
using PrecisionFitter =
    std::function<PrecisionSet(std::span<const ClassStats> training, int fold)>;

/// Per-fold terms sum_c n_{c(v)} {tr(S_{c(v)} Theta_{c(-v)}) - log det Theta_{c(-v)}}.
std::vector<double> validation_fold_scores(const Eigen::MatrixXd& x,
                                           std::span<const int> labels,
                                           const FoldAssignment& folds,
                                           const PrecisionFitter& fitter,
                                           HeldOutCentering centering =
                                               HeldOutCentering::HeldOutMean);

/// Held-out likelihood score of the ridge-fusion estimator at `pen`.
double validation_score(const Eigen::MatrixXd& x, std::span<const int> labels,
                        const FoldAssignment& folds, const PenaltyPair& pen,
                        const TuningOptions& options = {});

struct GridPoint {
  PenaltyPair pen;
  double score = 0.0;
  bool ok = false;
  std::string error;  // diagnostic when !ok
};

struct GridSearchResult {
  PenaltyPair best;
  double best_score = 0.0;
  std::vector<GridPoint> table;  // row-major: lambda1 outer, lambda2 inner
};

/// Argmin over successful points; exact ties go to the larger lambda1, then
/// the larger lambda2. TuningFailed when no point succeeded.
GridSearchResult select_best(std::vector<GridPoint> table);

GridSearchResult grid_search(const Eigen::MatrixXd& x, std::span<const int> labels,
                             const GridSpec& grid, int k, std::uint64_t seed,
                             const TuningOptions& options = {});

/// Same search over caller-built folds.
GridSearchResult grid_search(const Eigen::MatrixXd& x, std::span<const int> labels,
                             const GridSpec& grid, const FoldAssignment& folds,
                             const TuningOptions& options = {});

}  // namespace ridgefuse
