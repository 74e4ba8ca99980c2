#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ridgefuse/classify.hpp"
#include "ridgefuse/estimator.hpp"
#include "ridgefuse/tuning.hpp"

namespace ridgefuse {

/// Labeled rows (with labels 1..C) plus unlabeled rows.
struct SemiData {
  Eigen::MatrixXd labeled;
  std::vector<int> labels;
  Eigen::MatrixXd unlabeled;

  int num_classes() const;
  /// Consistent p, matching label count, every class labeled at least once.
  void validate() const;
};

/// n_U x C posterior memberships; rows sum to one.
using Responsibilities = Eigen::MatrixXd;

/// Gaussian log-density log phi(x; mu, Theta) with precomputed log det.
double log_gaussian_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                            const SymmetricMatrix& theta, double logdet_theta);

/// Observed-data log-likelihood: labeled terms log{pi_y phi} plus unlabeled
/// log sum_c pi_c phi_c, evaluated in the log domain.
double obs_loglik(const SemiData& data, const ModelParams& params);

Responsibilities e_step(const SemiData& data, const ModelParams& params);

struct EmMoments {
  double n_tilde = 0.0;      // labeled count plus responsibility mass
  double pi_tilde = 0.0;
  double labeled_count = 0.0;
  double unlabeled_mass = 0.0;
  Eigen::VectorXd mu_tilde;
  SymmetricMatrix s_tilde;
  SymmetricMatrix s_labeled;    // divisor labeled_count, centered at mu_tilde
  SymmetricMatrix s_unlabeled;  // responsibility-weighted, centered at mu_tilde
};

std::vector<EmMoments> m_step_moments(const SemiData& data, const Responsibilities& alpha);

/// Solves the profiled M-step by running the ridge-fusion solver on
/// {n~_c, mu~_c, S~_c}.
PrecisionSet m_step_precisions(std::span<const EmMoments> moments, const PenaltyPair& pen,
                               const FitOptions& options = {},
                               const std::optional<PrecisionSet>& init = std::nullopt);

/// Objective ascended by the EM iterations: the observed log-likelihood
/// minus half of the ridge-fusion penalty, matching the M-step which
/// minimizes -2 x complete-data log-likelihood plus the full penalty.
double penalized_obs_loglik(const SemiData& data, const ModelParams& params,
                            const PenaltyPair& pen);

struct EmOptions {
  double eps_em = 1e-6;  // per unlabeled point
  int max_iterations = 500;
  FitOptions fit;
};

struct EmReport {
  ModelParams params;
  Responsibilities responsibilities;
  int iterations = 0;
  std::vector<double> penalized_loglik_trace;
  bool converged = false;
};

class EmNotConverged : public Error {
 public:
  EmNotConverged(const std::string& what, EmReport partial)
      : Error(ErrorCode::NotConverged, what), partial_(std::move(partial)) {}
  const EmReport& partial() const noexcept { return partial_; }

 private:
  EmReport partial_;
};

/// Labeled-only initialization: labeled proportions, labeled means and the
/// supervised ridge-fusion precisions at `pen`.
ModelParams em_initialize(const SemiData& data, const PenaltyPair& pen,
                          const FitOptions& options = {});

/// Penalized EM. Stops when sum |alpha_new - alpha_old| <= eps_em * n_U.
EmReport fit_em(const SemiData& data, const PenaltyPair& pen, const EmOptions& options = {});

/// Negative observed log-likelihood.
double neg_obs_loglik(const SemiData& data, const ModelParams& params);

/// Fold assignments for the labeled (stratified) and unlabeled rows.
struct SemiFolds {
  FoldAssignment labeled;
  FoldAssignment unlabeled;
};

SemiFolds semisup_folds(const SemiData& data, int k, std::uint64_t seed);

/// sum_v of the negative observed log-likelihood of subset v under the EM
/// estimate fitted without subset v.
std::vector<double> semisup_fold_scores(const SemiData& data, const SemiFolds& folds,
                                        const PenaltyPair& pen,
                                        const EmOptions& options = {});

double semisup_validation_score(const SemiData& data, const SemiFolds& folds,
                                const PenaltyPair& pen, const EmOptions& options = {});

/// Data with the v-th labeled and unlabeled subsets removed / kept.
SemiData semisup_training(const SemiData& data, const SemiFolds& folds, int v);
SemiData semisup_held_out(const SemiData& data, const SemiFolds& folds, int v);

GridSearchResult semisup_grid_search(const SemiData& data, const GridSpec& grid, int k,
                                     std::uint64_t seed, const EmOptions& options = {},
                                     int jobs = 1);

}  // namespace ridgefuse
