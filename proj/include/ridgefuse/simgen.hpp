#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ridgefuse/classify.hpp"
#include "ridgefuse/matcore.hpp"
#include "ridgefuse/tuning.hpp"

namespace ridgefuse {

enum class Design {
  EigStruct,     // shared eigenvectors, banded eigenvalues
  EigVsTridiag,  // tridiagonal(0.5) class 1 against the EigStruct class 2
  Identity,
  BlockDiag,     // two AR(1)-style blocks, second block of class 2 uses rho
  Tridiag,       // tridiagonal(0.4) against tridiagonal(rho)
  SemiSup,       // BlockDiag with rho = 0.25, labeled + unlabeled draws
};

const char* to_string(Design d) noexcept;
Design parse_design(const std::string& name);

/// Two-class Gaussian model.
struct TwoClassModel {
  SymmetricMatrix sigma1, sigma2;
  Eigen::VectorXd mu1, mu2;
};

TwoClassModel gen_eigstruct(int p, std::mt19937_64& rng);
SymmetricMatrix gen_tridiag(int p, double rho);
TwoClassModel gen_blockdiag(int p, double rho);
TwoClassModel gen_identity(int p);
TwoClassModel gen_eig_vs_tridiag(int p, std::mt19937_64& rng);
TwoClassModel gen_tridiag_pair(int p, double rho);

/// Class model for `design`; rho is ignored where it does not apply.
TwoClassModel generate(Design design, int p, double rho, std::mt19937_64& rng);

/// Eigenvalue j (1-based) of the EigStruct class-1 (scale 100/10/1) or
/// class-2 (scale 500/50/1) covariance.
double eigstruct_eigenvalue(int p, int j, bool second_class);

/// n x p draws X = Z L^T + mu with L the Cholesky factor of sigma.
Eigen::MatrixXd sample_gaussian(int n, const Eigen::VectorXd& mu,
                                const SymmetricMatrix& sigma, std::mt19937_64& rng);

enum class Method { Ridge, Rda, RidgeSemiSup, RidgeLabeled };
const char* to_string(Method m) noexcept;
Method parse_method(const std::string& name);

struct SimConfig {
  Design design = Design::EigStruct;
  int p = 50;
  int n_train_per_class = 25;
  int n_test_per_class = 500;        // unlabeled per class for SemiSup
  int replications = 20;
  std::uint64_t seed = 1;
  double rho = 0.25;
  int folds = 5;
  std::vector<double> grid = default_simulation_grid();  // both lambda axes
  RdaGrid rda_grid = default_rda_grid();
  std::vector<Method> methods = {Method::Ridge, Method::Rda};
  int jobs = 1;
  double eps = 1e-7;

  void validate() const;
};

struct MethodResult {
  Method method;
  std::vector<double> cer;  // one per replication
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation
  double se = 0.0;  // sd / sqrt(replications)
};

struct SimResult {
  SimConfig config;
  std::vector<MethodResult> methods;
};

/// Seed of replication r, derived only from (seed, r).
std::uint64_t replication_seed(std::uint64_t seed, int replication);

SimResult run_qda_experiment(const SimConfig& cfg);
SimResult run_semisup_experiment(const SimConfig& cfg);
/// Dispatches on cfg.design.
SimResult run_experiment(const SimConfig& cfg);

/// CSV with columns method,reps,mean_cer,sd_cer,se_cer,cers (per-replication
/// values joined by ';'), numbers printed with 17 significant digits.
std::string format_csv(const SimResult& result);

}  // namespace ridgefuse
