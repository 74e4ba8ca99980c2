#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ridgefuse/matcore.hpp"

namespace ridgefuse {

/// Per-class sufficient statistics. `count` is real-valued so that EM
/// pseudo-counts can be passed where the supervised solver expects n_c.
struct ClassStats {
  double count = 0.0;
  Eigen::VectorXd mean;
  SymmetricMatrix cov;  // divisor `count`
};

/// Tuning parameters (lambda1, lambda2). lambda2 == +inf is the
/// infinite-fusion sentinel: all precisions constrained equal.
struct PenaltyPair {
  double lambda1 = 0.0;
  double lambda2 = 0.0;

  static constexpr double kInfiniteFusion = std::numeric_limits<double>::infinity();

  bool infinite_fusion() const noexcept { return lambda2 == kInfiniteFusion; }
  friend bool operator==(const PenaltyPair&, const PenaltyPair&) = default;
};

void validate(const PenaltyPair& pen);

struct PrecisionSet {
  std::vector<SymmetricMatrix> thetas;

  std::size_t size() const noexcept { return thetas.size(); }
  const SymmetricMatrix& operator[](std::size_t c) const { return thetas[c]; }
};

struct FitReport {
  PrecisionSet precision_set;
  int iterations = 0;
  double final_objective = 0.0;
  bool converged = false;
  /// True when the run stopped because the per-sweep change reached the
  /// rounding level of the update, which lies above eps * scale.
  bool noise_limited = false;
  /// Number of accepted Anderson extrapolation steps.
  int extrapolations = 0;
  /// Objective after each full sweep; only filled when requested.
  std::vector<double> objective_trace;
};

/// Raised when the sweep cap is hit. Carries the last iterate.
class FitNotConverged : public Error {
 public:
  FitNotConverged(const std::string& what, FitReport partial)
      : Error(ErrorCode::NotConverged, what), partial_(std::move(partial)) {}
  const FitReport& partial() const noexcept { return partial_; }

 private:
  FitReport partial_;
};

struct FitOptions {
  double eps = 1e-7;
  int max_sweeps = 10000;
  bool record_trace = false;
  /// History length for Anderson extrapolation between sweeps; 0 runs the
  /// plain blockwise sweeps. An extrapolated point is kept only when it is
  /// positive definite and lowers the objective.
  int anderson_depth = 8;
  /// After each sweep, take a safeguarded Newton step on a shift shared by
  /// all blocks.
  bool shared_shift_step = true;
};

/// Class statistics with divisor n_c. Labels take values 1..num_classes;
/// pass num_classes = 0 to use the largest label.
std::vector<ClassStats> class_stats(const Eigen::MatrixXd& x,
                                    std::span<const int> labels,
                                    int num_classes = 0);

/// Sum over classes of n_c {tr(S_c Theta_c) - log det Theta_c}.
double profile_neg2_loglik(const PrecisionSet& thetas,
                           std::span<const ClassStats> stats);

/// (lambda1/2) sum |Theta_c|^2 + (lambda2/4) sum over ordered pairs
/// |Theta_c - Theta_m|^2. The fusion term is skipped for the infinite
/// sentinel, where it is zero on the feasible set.
double ridge_fusion_penalty(const PrecisionSet& thetas, const PenaltyPair& pen);

/// Penalized objective minimized by `fit`.
double objective(const PrecisionSet& thetas, std::span<const ClassStats> stats,
                 const PenaltyPair& pen);

/// S_c - (lambda2 / n_c) * sum of the other classes' precisions. May be
/// indefinite.
SymmetricMatrix s_twiddle(const ClassStats& stats_c,
                          std::span<const SymmetricMatrix> others,
                          double lambda2);

double lambda_twiddle(const PenaltyPair& pen, std::size_t num_classes,
                      double count);

/// Closed-form solution when all precisions are constrained equal.
PrecisionSet fit_edge_case(std::span<const ClassStats> stats, double lambda1);

/// lambda2 = 0 solution: Q(S_c, lambda1 / n_c) per class.
PrecisionSet fit_decoupled(std::span<const ClassStats> stats, double lambda1);

/// Edge-case solution when lambda2 >= lambda1, decoupled solution otherwise.
PrecisionSet init_strategy(std::span<const ClassStats> stats,
                           const PenaltyPair& pen);

/// Starting point for a fit: the init_strategy choice, or `warm` when it has
/// the lower objective at `pen`.
PrecisionSet choose_init(std::span<const ClassStats> stats, const PenaltyPair& pen,
                         const PrecisionSet* warm);

/// Blockwise coordinate descent for the ridge-fusion problem. With no
/// `init` the starting point comes from init_strategy. Stops when
///   sum_c |Theta_c_old - Theta_c|_1 < eps * sum_c |(S_c o I)^{-1}|_1
/// after a full sweep over classes 1..C.
FitReport fit(std::span<const ClassStats> stats, const PenaltyPair& pen,
              const std::optional<PrecisionSet>& init = std::nullopt,
              const FitOptions& options = {});

/// max_c ||S~_c - Theta_c^{-1} + lambda~_c Theta_c||_max / (1 + ||S_c||_max).
double stationarity_residual(const PrecisionSet& thetas,
                             std::span<const ClassStats> stats,
                             const PenaltyPair& pen);

/// Column centering and scaling used by the standardize-then-rescale recipe.
struct Standardization {
  Eigen::VectorXd center;
  Eigen::VectorXd scale;
};

/// Overall column means and standard deviations (divisor n).
/// DegenerateVariable when a column is constant.
Standardization compute_standardization(const Eigen::MatrixXd& x);

Eigen::MatrixXd apply_standardization(const Eigen::MatrixXd& x,
                                      const Standardization& st);

/// Theta_ij / (scale_i scale_j): maps a precision fitted on standardized
/// data back to the original units.
SymmetricMatrix rescale_precision(const SymmetricMatrix& theta,
                                  const Eigen::VectorXd& scale);

struct StandardizedFit {
  Standardization standardization;
  FitReport standardized;  // precisions in standardized units
  PrecisionSet original;   // rescaled to the data's units
};

StandardizedFit fit_standardized(const Eigen::MatrixXd& x,
                                 std::span<const int> labels,
                                 const PenaltyPair& pen,
                                 const FitOptions& options = {});

}  // namespace ridgefuse
