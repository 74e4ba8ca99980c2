#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ridgefuse/estimator.hpp"
#include "ridgefuse/tuning.hpp"

namespace ridgefuse {

struct ClassModel {
  double pi = 0.0;
  Eigen::VectorXd mu;
  SymmetricMatrix theta;
};

/// Parameters of a Gaussian class-conditional model: class probabilities,
/// means and precisions.
struct ModelParams {
  std::vector<ClassModel> classes;

  std::size_t num_classes() const noexcept { return classes.size(); }
  Eigen::Index dim() const noexcept {
    return classes.empty() ? 0 : classes.front().mu.size();
  }
  /// Checks sum(pi) == 1 within 1e-12, consistent p, and PD precisions.
  void validate() const;
};

/// pi_c = n_c / n with the class means and the supplied precisions.
ModelParams make_model(std::span<const ClassStats> stats, const PrecisionSet& thetas);

/// log pi_c + 0.5 log det Theta_c - 0.5 (x - mu_c)^T Theta_c (x - mu_c).
Eigen::VectorXd qda_score(const Eigen::VectorXd& x, const ModelParams& params);

/// Index of the largest score, smallest index on ties.
int argmax(const Eigen::VectorXd& scores);

/// Precomputes log determinants so many rows can be scored cheaply.
class QdaClassifier {
 public:
  explicit QdaClassifier(ModelParams params);

  const ModelParams& params() const noexcept { return params_; }
  /// n x C matrix of discriminant scores.
  Eigen::MatrixXd scores(const Eigen::MatrixXd& x) const;
  /// Predicted labels in 1..C.
  std::vector<int> predict(const Eigen::MatrixXd& x) const;

 private:
  ModelParams params_;
  Eigen::VectorXd offset_;  // log pi_c + 0.5 log det Theta_c
};

/// Fraction of mismatched labels.
double cer(std::span<const int> predictions, std::span<const int> truth);

/// Regularized discriminant analysis weights: lambda pools toward the
/// pooled covariance, gamma shrinks toward a scaled identity.
struct RdaParams {
  double lambda = 0.0;
  double gamma = 0.0;
  friend bool operator==(const RdaParams&, const RdaParams&) = default;
};

/// Covariance estimates
///   S_c(lambda) = ((1-lambda) n_c S_c + lambda n S_pool) / ((1-lambda) n_c + lambda n)
///   Sigma_c     = (1-gamma) S_c(lambda) + gamma tr(S_c(lambda))/p I.
std::vector<SymmetricMatrix> rda_covariance(std::span<const ClassStats> stats,
                                            const RdaParams& params);

/// Inverses of rda_covariance; SingularEstimate when one is not PD.
PrecisionSet rda_precisions(std::span<const ClassStats> stats, const RdaParams& params);

struct RdaGrid {
  std::vector<double> lambda_values;
  std::vector<double> gamma_values;
};

/// lambda in {0, 0.1, ..., 1}; gamma on the same grid merged with
/// {10^-4, 10^-3.5, ..., 10^-0.5}.
RdaGrid default_rda_grid();

struct RdaGridPoint {
  RdaParams params;
  double score = 0.0;
  bool ok = false;
  std::string error;
};

struct RdaSearchResult {
  RdaParams best;
  double best_score = 0.0;
  std::vector<RdaGridPoint> table;
};

/// Validation-likelihood tuning of RDA. Exact ties go to the larger lambda,
/// then the larger gamma.
RdaSearchResult rda_grid_search(const Eigen::MatrixXd& x, std::span<const int> labels,
                                const RdaGrid& grid, int k, std::uint64_t seed,
                                int jobs = 1);

}  // namespace ridgefuse
