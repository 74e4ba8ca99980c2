#include "ridgefuse/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "ridgefuse/estimator.hpp"
#include "ridgefuse/parallel.hpp"
#include "ridgefuse/semisup.hpp"

namespace ridgefuse {

const char* to_string(Design d) noexcept {
  switch (d) {
    case Design::EigStruct: return "eigstruct";
    case Design::EigVsTridiag: return "eig-vs-tridiag";
    case Design::Identity: return "identity";
    case Design::BlockDiag: return "blockdiag";
    case Design::Tridiag: return "tridiag";
    case Design::SemiSup: return "semisup";
  }
  return "unknown";
}

Design parse_design(const std::string& name) {
  for (Design d : {Design::EigStruct, Design::EigVsTridiag, Design::Identity,
                   Design::BlockDiag, Design::Tridiag, Design::SemiSup}) {
    if (name == to_string(d)) return d;
  }
  fail(ErrorCode::InvalidInput, "unknown design '" + name + "'");
}

const char* to_string(Method m) noexcept {
  switch (m) {
    case Method::Ridge: return "ridge";
    case Method::Rda: return "rda";
    case Method::RidgeSemiSup: return "ridge-semisup";
    case Method::RidgeLabeled: return "ridge-labeled";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::Ridge, Method::Rda, Method::RidgeSemiSup, Method::RidgeLabeled}) {
    if (name == to_string(m)) return m;
  }
  fail(ErrorCode::InvalidInput, "unknown method '" + name + "'");
}

double eigstruct_eigenvalue(int p, int j, bool second_class) {
  const double base = static_cast<double>(p - j + 1) / static_cast<double>(p);
  if (j <= 6) return (second_class ? 500.0 : 100.0) * base;
  if (j <= 11) return (second_class ? 50.0 : 10.0) * base;
  return base;
}

namespace {

Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd z(rows, cols);
  // Row-major fill order so the stream maps to observations.
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) z(i, j) = normal(rng);
  }
  return z;
}

void check_rho(double rho) {
  if (!(rho > -1.0 && rho < 1.0)) {
    fail(ErrorCode::InvalidInput, "rho must lie in (-1, 1)");
  }
}

SymmetricMatrix ar_block_pair(int p, double rho_first, double rho_second) {
  const int half = p / 2;
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < half; ++i) {
    for (int j = 0; j < half; ++j) {
      s(i, j) = std::pow(rho_first, std::abs(i - j));
      s(half + i, half + j) = std::pow(rho_second, std::abs(i - j));
    }
  }
  return SymmetricMatrix(s);
}

Eigen::VectorXd constant(int p, double v) { return Eigen::VectorXd::Constant(p, v); }

double log_mean(int p, double factor) {
  return factor * std::log(static_cast<double>(p)) / static_cast<double>(p);
}

SymmetricMatrix eigstruct_sigma(const Eigen::MatrixXd& vectors, int p, bool second_class) {
  Eigen::VectorXd values(p);
  for (int j = 1; j <= p; ++j) values(j - 1) = eigstruct_eigenvalue(p, j, second_class);
  return make_symmetric_unchecked(vectors * values.asDiagonal() * vectors.transpose());
}

Eigen::MatrixXd eigstruct_vectors(int p, std::mt19937_64& rng) {
  if (p < 12) fail(ErrorCode::InvalidInput, "eigenvalue design needs p >= 12");
  const Eigen::MatrixXd z = standard_normal(100, p, rng);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(z, Eigen::ComputeFullV);
  return svd.matrixV();
}

}  // namespace

TwoClassModel gen_eigstruct(int p, std::mt19937_64& rng) {
  const Eigen::MatrixXd v = eigstruct_vectors(p, rng);
  return {eigstruct_sigma(v, p, false), eigstruct_sigma(v, p, true),
          constant(p, log_mean(p, 5.0)), Eigen::VectorXd::Zero(p)};
}

SymmetricMatrix gen_tridiag(int p, double rho) {
  check_rho(rho);
  if (p < 1) fail(ErrorCode::InvalidInput, "dimension must be positive");
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(p, p);
  for (int i = 0; i + 1 < p; ++i) {
    s(i, i + 1) = rho;
    s(i + 1, i) = rho;
  }
  SymmetricMatrix out(s);
  if (!is_positive_definite(out)) {
    fail(ErrorCode::InvalidInput, "tridiagonal covariance is not positive definite");
  }
  return out;
}

TwoClassModel gen_blockdiag(int p, double rho) {
  check_rho(rho);
  if (p < 2 || p % 2 != 0) fail(ErrorCode::InvalidInput, "block design needs an even p");
  return {ar_block_pair(p, 0.95, 0.8), ar_block_pair(p, 0.95, rho),
          constant(p, log_mean(p, 20.0)), Eigen::VectorXd::Zero(p)};
}

TwoClassModel gen_identity(int p) {
  if (p < 1) fail(ErrorCode::InvalidInput, "dimension must be positive");
  return {SymmetricMatrix::identity(p), SymmetricMatrix::identity(p),
          constant(p, log_mean(p, 10.0)), Eigen::VectorXd::Zero(p)};
}

TwoClassModel gen_eig_vs_tridiag(int p, std::mt19937_64& rng) {
  const Eigen::MatrixXd v = eigstruct_vectors(p, rng);
  return {gen_tridiag(p, 0.5), eigstruct_sigma(v, p, true),
          constant(p, 1.0 / static_cast<double>(p)), Eigen::VectorXd::Zero(p)};
}

TwoClassModel gen_tridiag_pair(int p, double rho) {
  return {gen_tridiag(p, 0.4), gen_tridiag(p, rho), constant(p, log_mean(p, 10.0)),
          Eigen::VectorXd::Zero(p)};
}

TwoClassModel generate(Design design, int p, double rho, std::mt19937_64& rng) {
  TwoClassModel m;
  switch (design) {
    case Design::EigStruct: m = gen_eigstruct(p, rng); break;
    case Design::EigVsTridiag: m = gen_eig_vs_tridiag(p, rng); break;
    case Design::Identity: m = gen_identity(p); break;
    case Design::BlockDiag: m = gen_blockdiag(p, rho); break;
    case Design::Tridiag: m = gen_tridiag_pair(p, rho); break;
    case Design::SemiSup: m = gen_blockdiag(p, 0.25); break;
  }
  if (!is_positive_definite(m.sigma1) || !is_positive_definite(m.sigma2)) {
    fail(ErrorCode::PositiveDefiniteRequired, "generated covariance is not positive definite");
  }
  return m;
}

Eigen::MatrixXd sample_gaussian(int n, const Eigen::VectorXd& mu,
                                const SymmetricMatrix& sigma, std::mt19937_64& rng) {
  if (mu.size() != sigma.dim()) fail(ErrorCode::DimensionMismatch, "mean and covariance differ");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma.matrix());
  if (llt.info() != Eigen::Success) {
    fail(ErrorCode::PositiveDefiniteRequired, "sampling covariance is not positive definite");
  }
  const Eigen::MatrixXd z = standard_normal(n, sigma.dim(), rng);
  Eigen::MatrixXd x = z * llt.matrixL().transpose();
  x.rowwise() += mu.transpose();
  return x;
}

void SimConfig::validate() const {
  if (p < 2) fail(ErrorCode::InvalidInput, "p must be at least 2");
  if (replications < 1) fail(ErrorCode::InvalidInput, "need at least one replication");
  if (n_train_per_class < folds) {
    fail(ErrorCode::InsufficientClassSize, "training size per class is below the fold count");
  }
  if (n_test_per_class < 1) fail(ErrorCode::InvalidInput, "test size must be positive");
  if ((design == Design::EigStruct || design == Design::EigVsTridiag) && p < 12) {
    fail(ErrorCode::InvalidInput, "eigenvalue designs need p >= 12");
  }
  if ((design == Design::BlockDiag || design == Design::SemiSup) && p % 2 != 0) {
    fail(ErrorCode::InvalidInput, "block designs need an even p");
  }
  check_rho(rho);
  if (methods.empty()) fail(ErrorCode::InvalidInput, "no methods selected");
  for (Method m : methods) {
    const bool semi = m == Method::RidgeSemiSup || m == Method::RidgeLabeled;
    if (semi != (design == Design::SemiSup)) {
      fail(ErrorCode::InvalidInput, std::string("method ") + to_string(m) +
                                        " does not apply to design " + to_string(design));
    }
  }
  GridSpec{grid, grid}.validate();
}

std::uint64_t replication_seed(std::uint64_t seed, int replication) {
  // splitmix64 finalizer over (seed, replication)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(replication) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

struct Draw {
  Eigen::MatrixXd x;
  std::vector<int> labels;
};

Draw draw_two_class(const TwoClassModel& m, int per_class, std::mt19937_64& rng) {
  const Eigen::MatrixXd a = sample_gaussian(per_class, m.mu1, m.sigma1, rng);
  const Eigen::MatrixXd b = sample_gaussian(per_class, m.mu2, m.sigma2, rng);
  Draw d;
  d.x.resize(2 * per_class, a.cols());
  d.x << a, b;
  d.labels.assign(per_class, 1);
  d.labels.insert(d.labels.end(), per_class, 2);
  return d;
}

void summarize(MethodResult& r) {
  const double n = static_cast<double>(r.cer.size());
  double sum = 0.0;
  for (double v : r.cer) sum += v;
  r.mean = sum / n;
  double ss = 0.0;
  for (double v : r.cer) ss += (v - r.mean) * (v - r.mean);
  r.sd = r.cer.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  r.se = r.sd / std::sqrt(n);
}

SimResult collect(const SimConfig& cfg, const std::vector<std::vector<double>>& per_rep) {
  SimResult out;
  out.config = cfg;
  for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
    MethodResult r;
    r.method = cfg.methods[m];
    for (const auto& rep : per_rep) r.cer.push_back(rep[m]);
    summarize(r);
    out.methods.push_back(std::move(r));
  }
  return out;
}

double ridge_cer(const Draw& train, const Draw& test, const SimConfig& cfg,
                 std::uint64_t fold_seed) {
  TuningOptions opts;
  opts.fit.eps = cfg.eps;
  const auto tuned = grid_search(train.x, train.labels, GridSpec{cfg.grid, cfg.grid},
                                 cfg.folds, fold_seed, opts);
  const auto stats = class_stats(train.x, train.labels);
  const auto rep = fit(stats, tuned.best, std::nullopt, opts.fit);
  const QdaClassifier qda(make_model(stats, rep.precision_set));
  return cer(qda.predict(test.x), test.labels);
}

double rda_cer(const Draw& train, const Draw& test, const SimConfig& cfg,
               std::uint64_t fold_seed) {
  const auto tuned = rda_grid_search(train.x, train.labels, cfg.rda_grid, cfg.folds, fold_seed);
  const auto stats = class_stats(train.x, train.labels);
  const QdaClassifier qda(make_model(stats, rda_precisions(stats, tuned.best)));
  return cer(qda.predict(test.x), test.labels);
}

template <class PerRep>
std::vector<std::vector<double>> run_replications(const SimConfig& cfg, PerRep&& per_rep) {
  std::vector<std::vector<double>> results(cfg.replications);
  parallel_for(results.size(), cfg.jobs, [&](std::size_t r) {
    try {
      results[r] = per_rep(static_cast<int>(r));
    } catch (const Error& e) {
      fail(e.code(), "replication " + std::to_string(r + 1) + ": " + e.what());
    }
  });
  return results;
}

}  // namespace

SimResult run_qda_experiment(const SimConfig& cfg) {
  cfg.validate();
  if (cfg.design == Design::SemiSup) {
    fail(ErrorCode::InvalidInput, "use run_semisup_experiment for the semisup design");
  }
  auto per_rep = [&](int r) {
    std::mt19937_64 rng(replication_seed(cfg.seed, r));
    const TwoClassModel model = generate(cfg.design, cfg.p, cfg.rho, rng);
    const Draw train = draw_two_class(model, cfg.n_train_per_class, rng);
    const Draw test = draw_two_class(model, cfg.n_test_per_class, rng);
    const std::uint64_t fold_seed = rng();
    std::vector<double> cers;
    for (Method m : cfg.methods) {
      cers.push_back(m == Method::Ridge ? ridge_cer(train, test, cfg, fold_seed)
                                        : rda_cer(train, test, cfg, fold_seed));
    }
    return cers;
  };
  return collect(cfg, run_replications(cfg, per_rep));
}

SimResult run_semisup_experiment(const SimConfig& cfg) {
  cfg.validate();
  if (cfg.design != Design::SemiSup) {
    fail(ErrorCode::InvalidInput, "semi-supervised experiment needs the semisup design");
  }
  auto per_rep = [&](int r) {
    std::mt19937_64 rng(replication_seed(cfg.seed, r));
    const TwoClassModel model = generate(cfg.design, cfg.p, cfg.rho, rng);
    const Draw labeled = draw_two_class(model, cfg.n_train_per_class, rng);
    const Draw unlabeled = draw_two_class(model, cfg.n_test_per_class, rng);
    const std::uint64_t fold_seed = rng();
    const SemiData data{labeled.x, labeled.labels, unlabeled.x};

    EmOptions em;
    em.fit.eps = cfg.eps;
    std::vector<double> cers;
    for (Method m : cfg.methods) {
      PenaltyPair pen;
      if (m == Method::RidgeSemiSup) {
        pen = semisup_grid_search(data, GridSpec{cfg.grid, cfg.grid}, cfg.folds, fold_seed, em)
                  .best;
      } else {
        TuningOptions opts;
        opts.fit.eps = cfg.eps;
        pen = grid_search(labeled.x, labeled.labels, GridSpec{cfg.grid, cfg.grid}, cfg.folds,
                          fold_seed, opts)
                  .best;
      }
      const EmReport fitted = fit_em(data, pen, em);
      const QdaClassifier qda(fitted.params);
      cers.push_back(cer(qda.predict(unlabeled.x), unlabeled.labels));
    }
    return cers;
  };
  return collect(cfg, run_replications(cfg, per_rep));
}

SimResult run_experiment(const SimConfig& cfg) {
  return cfg.design == Design::SemiSup ? run_semisup_experiment(cfg) : run_qda_experiment(cfg);
}

std::string format_csv(const SimResult& result) {
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  std::ostringstream os;
  os << "method,reps,mean_cer,sd_cer,se_cer,cers\n";
  for (const auto& m : result.methods) {
    os << to_string(m.method) << ',' << m.cer.size() << ',' << num(m.mean) << ','
       << num(m.sd) << ',' << num(m.se) << ',';
    for (std::size_t i = 0; i < m.cer.size(); ++i) os << (i ? ";" : "") << num(m.cer[i]);
    os << '\n';
  }
  return os.str();
}

}  // namespace ridgefuse
