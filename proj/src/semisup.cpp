#include "ridgefuse/semisup.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "ridgefuse/parallel.hpp"

namespace ridgefuse {

int SemiData::num_classes() const {
  int c = 0;
  for (int y : labels) c = std::max(c, y);
  return c;
}

void SemiData::validate() const {
  if (static_cast<std::size_t>(labeled.rows()) != labels.size()) {
    fail(ErrorCode::DimensionMismatch, "labeled rows and labels differ in count");
  }
  if (labeled.cols() == 0) fail(ErrorCode::InvalidInput, "data has zero columns");
  if (unlabeled.rows() > 0 && unlabeled.cols() != labeled.cols()) {
    fail(ErrorCode::DimensionMismatch, "labeled and unlabeled data differ in dimension");
  }
  const int num = num_classes();
  if (num < 1) fail(ErrorCode::MissingClass, "no labeled observations");
  std::vector<int> seen(num, 0);
  for (int y : labels) {
    if (y < 1) fail(ErrorCode::InvalidInput, "labels must be >= 1");
    ++seen[y - 1];
  }
  for (int c = 0; c < num; ++c) {
    if (seen[c] == 0) {
      fail(ErrorCode::MissingClass,
           "class " + std::to_string(c + 1) + " has no labeled observations");
    }
  }
}

double log_gaussian_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                            const SymmetricMatrix& theta, double logdet_theta) {
  const Eigen::VectorXd r = x - mu;
  const double p = static_cast<double>(x.size());
  return -0.5 * p * std::log(2.0 * std::numbers::pi) + 0.5 * logdet_theta -
         0.5 * r.dot(theta.matrix() * r);
}

namespace {

/// n x C matrix of log{pi_c phi(x_i; mu_c, Theta_c)}.
Eigen::MatrixXd log_joint(const Eigen::MatrixXd& x, const ModelParams& params) {
  const auto num = static_cast<Eigen::Index>(params.num_classes());
  const double p = static_cast<double>(params.dim());
  Eigen::MatrixXd out(x.rows(), num);
  for (Eigen::Index c = 0; c < num; ++c) {
    const auto& k = params.classes[c];
    const double constant = std::log(k.pi) - 0.5 * p * std::log(2.0 * std::numbers::pi) +
                            0.5 * logdet(k.theta);
    const Eigen::MatrixXd r = x.rowwise() - k.mu.transpose();
    const Eigen::VectorXd quad = (r * k.theta.matrix()).cwiseProduct(r).rowwise().sum();
    out.col(c) = (-0.5 * quad).array() + constant;
  }
  return out;
}

double log_sum_exp(const Eigen::RowVectorXd& v) {
  const double m = v.maxCoeff();
  if (m == -std::numeric_limits<double>::infinity()) return m;
  return m + std::log((v.array() - m).exp().sum());
}

void check_model(const SemiData& data, const ModelParams& params) {
  if (params.dim() != data.labeled.cols()) {
    fail(ErrorCode::DimensionMismatch, "model dimension does not match data");
  }
  if (static_cast<int>(params.num_classes()) < data.num_classes()) {
    fail(ErrorCode::DimensionMismatch, "data has more classes than the model");
  }
}

PrecisionSet thetas_of(const ModelParams& params) {
  PrecisionSet out;
  for (const auto& k : params.classes) out.thetas.push_back(k.theta);
  return out;
}

Eigen::MatrixXd take(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = x.row(rows[r]);
  }
  return out;
}

}  // namespace

double obs_loglik(const SemiData& data, const ModelParams& params) {
  check_model(data, params);
  double total = 0.0;
  if (data.labeled.rows() > 0) {
    const Eigen::MatrixXd lj = log_joint(data.labeled, params);
    for (Eigen::Index i = 0; i < lj.rows(); ++i) total += lj(i, data.labels[i] - 1);
  }
  if (data.unlabeled.rows() > 0) {
    const Eigen::MatrixXd lj = log_joint(data.unlabeled, params);
    for (Eigen::Index i = 0; i < lj.rows(); ++i) total += log_sum_exp(lj.row(i));
  }
  if (!std::isfinite(total)) {
    fail(ErrorCode::NumericalUnderflow,
         "observed log-likelihood is not finite (a density underflowed)");
  }
  return total;
}

double neg_obs_loglik(const SemiData& data, const ModelParams& params) {
  return -obs_loglik(data, params);
}

Responsibilities e_step(const SemiData& data, const ModelParams& params) {
  check_model(data, params);
  const auto num = static_cast<Eigen::Index>(params.num_classes());
  if (data.unlabeled.rows() == 0) return Responsibilities(0, num);
  Responsibilities alpha = log_joint(data.unlabeled, params);
  for (Eigen::Index i = 0; i < alpha.rows(); ++i) {
    const double m = alpha.row(i).maxCoeff();
    if (!std::isfinite(m)) {
      fail(ErrorCode::NumericalUnderflow,
           "unlabeled row " + std::to_string(i + 1) + " has zero density under every class");
    }
    alpha.row(i) = (alpha.row(i).array() - m).exp();
    alpha.row(i) /= alpha.row(i).sum();
  }
  return alpha;
}

std::vector<EmMoments> m_step_moments(const SemiData& data, const Responsibilities& alpha) {
  const int num = data.num_classes();
  const Eigen::Index p = data.labeled.cols();
  const Eigen::Index n_u = data.unlabeled.rows();
  if (alpha.rows() != n_u || (n_u > 0 && alpha.cols() < num)) {
    fail(ErrorCode::DimensionMismatch, "responsibilities do not match unlabeled data");
  }
  const int num_cols = n_u > 0 ? static_cast<int>(alpha.cols()) : num;
  const double n_total = static_cast<double>(data.labeled.rows() + n_u);

  std::vector<EmMoments> out(num_cols);
  for (int c = 0; c < num_cols; ++c) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < data.labels.size(); ++i) {
      if (data.labels[i] == c + 1) rows.push_back(static_cast<Eigen::Index>(i));
    }
    EmMoments& m = out[c];
    m.labeled_count = static_cast<double>(rows.size());
    m.unlabeled_mass = n_u > 0 ? alpha.col(c).sum() : 0.0;
    m.n_tilde = m.labeled_count + m.unlabeled_mass;
    if (!(m.n_tilde > 0.0)) {
      fail(ErrorCode::EmptyComponent,
           "component " + std::to_string(c + 1) + " has zero total weight");
    }
    m.pi_tilde = m.n_tilde / n_total;

    const Eigen::MatrixXd xl = take(data.labeled, rows);
    Eigen::VectorXd sum = xl.colwise().sum().transpose();
    if (n_u > 0) sum += data.unlabeled.transpose() * alpha.col(c);
    m.mu_tilde = sum / m.n_tilde;

    Eigen::MatrixXd scatter_l = Eigen::MatrixXd::Zero(p, p);
    if (!rows.empty()) {
      const Eigen::MatrixXd rl = xl.rowwise() - m.mu_tilde.transpose();
      scatter_l = rl.transpose() * rl;
    }
    Eigen::MatrixXd scatter_u = Eigen::MatrixXd::Zero(p, p);
    if (n_u > 0) {
      const Eigen::MatrixXd ru = data.unlabeled.rowwise() - m.mu_tilde.transpose();
      scatter_u = ru.transpose() * (ru.array().colwise() * alpha.col(c).array()).matrix();
    }
    m.s_labeled = m.labeled_count > 0 ? SymmetricMatrix(scatter_l / m.labeled_count)
                                      : SymmetricMatrix::zero(p);
    m.s_unlabeled = m.unlabeled_mass > 0 ? SymmetricMatrix(scatter_u / m.unlabeled_mass)
                                         : SymmetricMatrix::zero(p);
    m.s_tilde = SymmetricMatrix((scatter_l + scatter_u) / m.n_tilde);
  }
  return out;
}

PrecisionSet m_step_precisions(std::span<const EmMoments> moments, const PenaltyPair& pen,
                               const FitOptions& options,
                               const std::optional<PrecisionSet>& init) {
  std::vector<ClassStats> stats;
  stats.reserve(moments.size());
  for (const auto& m : moments) stats.push_back({m.n_tilde, m.mu_tilde, m.s_tilde});
  std::optional<PrecisionSet> start;
  if (!pen.infinite_fusion()) start = choose_init(stats, pen, init ? &*init : nullptr);
  return fit(stats, pen, start, options).precision_set;
}

double penalized_obs_loglik(const SemiData& data, const ModelParams& params,
                            const PenaltyPair& pen) {
  return obs_loglik(data, params) - 0.5 * ridge_fusion_penalty(thetas_of(params), pen);
}

ModelParams em_initialize(const SemiData& data, const PenaltyPair& pen,
                          const FitOptions& options) {
  data.validate();
  const auto stats = class_stats(data.labeled, data.labels, data.num_classes());
  const FitReport rep = fit(stats, pen, std::nullopt, options);
  return make_model(stats, rep.precision_set);
}

EmReport fit_em(const SemiData& data, const PenaltyPair& pen, const EmOptions& options) {
  data.validate();
  validate(pen);
  if (!(pen.lambda1 > 0.0)) fail(ErrorCode::InvalidInput, "EM requires lambda1 > 0");
  const Eigen::Index n_u = data.unlabeled.rows();

  EmReport report;
  report.params = em_initialize(data, pen, options.fit);
  report.penalized_loglik_trace.push_back(penalized_obs_loglik(data, report.params, pen));
  report.responsibilities = e_step(data, report.params);
  if (n_u == 0) {
    // Labeled-only moments equal the supervised statistics, so the
    // initialization is already the fixed point.
    report.iterations = 1;
    report.converged = true;
    return report;
  }

  const double tolerance = options.eps_em * static_cast<double>(n_u);
  for (int it = 1; it <= options.max_iterations; ++it) {
    const auto moments = m_step_moments(data, report.responsibilities);
    const PrecisionSet thetas =
        m_step_precisions(moments, pen, options.fit, thetas_of(report.params));
    ModelParams next;
    for (std::size_t c = 0; c < moments.size(); ++c) {
      next.classes.push_back({moments[c].pi_tilde, moments[c].mu_tilde, thetas[c]});
    }
    report.params = std::move(next);
    report.penalized_loglik_trace.push_back(penalized_obs_loglik(data, report.params, pen));
    Responsibilities alpha = e_step(data, report.params);
    const double diff = (alpha - report.responsibilities).cwiseAbs().sum();
    report.responsibilities = std::move(alpha);
    report.iterations = it;
    if (diff <= tolerance) {
      report.converged = true;
      return report;
    }
  }
  std::ostringstream msg;
  msg << "penalized EM did not converge in " << options.max_iterations << " iterations";
  throw EmNotConverged(msg.str(), std::move(report));
}

SemiFolds semisup_folds(const SemiData& data, int k, std::uint64_t seed) {
  SemiFolds out;
  out.labeled = stratified_folds(data.labels, k, seed);
  out.unlabeled = random_folds(static_cast<std::size_t>(data.unlabeled.rows()), k,
                               seed ^ 0x9E3779B97F4A7C15ULL);
  return out;
}

SemiData semisup_training(const SemiData& data, const SemiFolds& folds, int v) {
  SemiData out;
  const auto lrows = folds.labeled.complement(v);
  out.labeled = take(data.labeled, lrows);
  for (auto r : lrows) out.labels.push_back(data.labels[r]);
  out.unlabeled = take(data.unlabeled, folds.unlabeled.complement(v));
  return out;
}

SemiData semisup_held_out(const SemiData& data, const SemiFolds& folds, int v) {
  SemiData out;
  const auto lrows = folds.labeled.members(v);
  out.labeled = take(data.labeled, lrows);
  for (auto r : lrows) out.labels.push_back(data.labels[r]);
  out.unlabeled = take(data.unlabeled, folds.unlabeled.members(v));
  return out;
}

std::vector<double> semisup_fold_scores(const SemiData& data, const SemiFolds& folds,
                                        const PenaltyPair& pen, const EmOptions& options) {
  data.validate();
  if (folds.labeled.k != folds.unlabeled.k) {
    fail(ErrorCode::InvalidInput, "labeled and unlabeled fold counts differ");
  }
  std::vector<double> out;
  for (int v = 1; v <= folds.labeled.k; ++v) {
    try {
      const SemiData train = semisup_training(data, folds, v);
      const EmReport em = fit_em(train, pen, options);
      out.push_back(neg_obs_loglik(semisup_held_out(data, folds, v), em.params));
    } catch (const Error& e) {
      fail(e.code(), "fold " + std::to_string(v) + ": " + e.what());
    }
  }
  return out;
}

double semisup_validation_score(const SemiData& data, const SemiFolds& folds,
                                const PenaltyPair& pen, const EmOptions& options) {
  double total = 0.0;
  for (double t : semisup_fold_scores(data, folds, pen, options)) total += t;
  return total;
}

GridSearchResult semisup_grid_search(const SemiData& data, const GridSpec& grid, int k,
                                     std::uint64_t seed, const EmOptions& options,
                                     int jobs) {
  grid.validate();
  data.validate();
  const SemiFolds folds = semisup_folds(data, k, seed);
  const std::size_t n2 = grid.lambda2_values.size();
  std::vector<GridPoint> table(grid.lambda1_values.size() * n2);
  parallel_for(table.size(), jobs, [&](std::size_t i) {
    GridPoint& pt = table[i];
    pt.pen = {grid.lambda1_values[i / n2], grid.lambda2_values[i % n2]};
    try {
      pt.score = semisup_validation_score(data, folds, pt.pen, options);
      pt.ok = std::isfinite(pt.score);
      if (!pt.ok) pt.error = "non-finite score";
    } catch (const Error& e) {
      pt.ok = false;
      pt.error = std::string(to_string(e.code())) + ": " + e.what();
    }
  });
  return select_best(std::move(table));
}

}  // namespace ridgefuse
