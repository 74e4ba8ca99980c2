#include "ridgefuse/classify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ridgefuse/parallel.hpp"

namespace ridgefuse {

void ModelParams::validate() const {
  if (classes.empty()) fail(ErrorCode::InvalidInput, "model has no classes");
  const Eigen::Index p = dim();
  double total = 0.0;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const auto& k = classes[c];
    if (k.mu.size() != p || k.theta.dim() != p) {
      fail(ErrorCode::DimensionMismatch,
           "class " + std::to_string(c + 1) + " has inconsistent dimension");
    }
    if (!(k.pi >= 0.0) || !(k.pi <= 1.0)) {
      fail(ErrorCode::InvalidInput, "class probability outside [0, 1]");
    }
    if (!is_positive_definite(k.theta)) {
      fail(ErrorCode::PositiveDefiniteRequired,
           "class " + std::to_string(c + 1) + " precision is not positive definite");
    }
    total += k.pi;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    fail(ErrorCode::InvalidInput, "class probabilities do not sum to one");
  }
}

ModelParams make_model(std::span<const ClassStats> stats, const PrecisionSet& thetas) {
  if (stats.size() != thetas.size()) {
    fail(ErrorCode::DimensionMismatch, "stats and precisions differ in class count");
  }
  double n = 0.0;
  for (const auto& s : stats) n += s.count;
  ModelParams out;
  for (std::size_t c = 0; c < stats.size(); ++c) {
    out.classes.push_back({stats[c].count / n, stats[c].mean, thetas[c]});
  }
  return out;
}

Eigen::VectorXd qda_score(const Eigen::VectorXd& x, const ModelParams& params) {
  const auto num = static_cast<Eigen::Index>(params.num_classes());
  if (x.size() != params.dim()) {
    fail(ErrorCode::DimensionMismatch, "observation has wrong dimension");
  }
  Eigen::VectorXd out(num);
  for (Eigen::Index c = 0; c < num; ++c) {
    const auto& k = params.classes[c];
    const Eigen::VectorXd r = x - k.mu;
    out(c) = std::log(k.pi) + 0.5 * logdet(k.theta) - 0.5 * r.dot(k.theta.matrix() * r);
  }
  return out;
}

int argmax(const Eigen::VectorXd& scores) {
  int best = 0;
  for (Eigen::Index c = 1; c < scores.size(); ++c) {
    if (scores(c) > scores(best)) best = static_cast<int>(c);
  }
  return best;
}

QdaClassifier::QdaClassifier(ModelParams params) : params_(std::move(params)) {
  params_.validate();
  const auto num = static_cast<Eigen::Index>(params_.num_classes());
  offset_.resize(num);
  for (Eigen::Index c = 0; c < num; ++c) {
    const auto& k = params_.classes[c];
    offset_(c) = std::log(k.pi) + 0.5 * logdet(k.theta);
  }
}

Eigen::MatrixXd QdaClassifier::scores(const Eigen::MatrixXd& x) const {
  if (x.cols() != params_.dim()) {
    fail(ErrorCode::DimensionMismatch,
         "data has " + std::to_string(x.cols()) + " columns, model expects " +
             std::to_string(params_.dim()));
  }
  const auto num = static_cast<Eigen::Index>(params_.num_classes());
  Eigen::MatrixXd out(x.rows(), num);
  for (Eigen::Index c = 0; c < num; ++c) {
    const auto& k = params_.classes[c];
    Eigen::MatrixXd r = x.rowwise() - k.mu.transpose();
    const Eigen::VectorXd quad = (r * k.theta.matrix()).cwiseProduct(r).rowwise().sum();
    out.col(c) = (-0.5 * quad).array() + offset_(c);
  }
  return out;
}

std::vector<int> QdaClassifier::predict(const Eigen::MatrixXd& x) const {
  const Eigen::MatrixXd s = scores(x);
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out[i] = argmax(s.row(i).transpose()) + 1;
  }
  return out;
}

double cer(std::span<const int> predictions, std::span<const int> truth) {
  if (predictions.size() != truth.size()) {
    fail(ErrorCode::InvalidInput, "predictions and truth differ in length");
  }
  if (predictions.empty()) fail(ErrorCode::InvalidInput, "no predictions to score");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) wrong += predictions[i] != truth[i];
  return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

std::vector<SymmetricMatrix> rda_covariance(std::span<const ClassStats> stats,
                                            const RdaParams& params) {
  if (!(params.lambda >= 0.0 && params.lambda <= 1.0) ||
      !(params.gamma >= 0.0 && params.gamma <= 1.0)) {
    fail(ErrorCode::InvalidInput, "RDA weights must lie in [0, 1]");
  }
  if (stats.empty()) fail(ErrorCode::InvalidInput, "no classes supplied");
  const Eigen::Index p = stats.front().cov.dim();
  double n = 0.0;
  Eigen::MatrixXd pooled_scatter = Eigen::MatrixXd::Zero(p, p);  // n S_pool
  for (const auto& s : stats) {
    if (s.cov.dim() != p) fail(ErrorCode::DimensionMismatch, "inconsistent dimension");
    n += s.count;
    pooled_scatter += s.count * s.cov.matrix();
  }
  std::vector<SymmetricMatrix> out;
  out.reserve(stats.size());
  for (const auto& s : stats) {
    Eigen::MatrixXd pooled_c = s.cov.matrix();
    if (params.lambda != 0.0) {
      const double w = (1.0 - params.lambda) * s.count + params.lambda * n;
      pooled_c = ((1.0 - params.lambda) * s.count * s.cov.matrix() +
                  params.lambda * pooled_scatter) / w;
    }
    const double dbar = pooled_c.trace() / static_cast<double>(p);
    Eigen::MatrixXd sigma = (1.0 - params.gamma) * pooled_c;
    sigma.diagonal().array() += params.gamma * dbar;
    out.push_back(make_symmetric_unchecked(std::move(sigma)));
  }
  return out;
}

PrecisionSet rda_precisions(std::span<const ClassStats> stats, const RdaParams& params) {
  const auto cov = rda_covariance(stats, params);
  PrecisionSet out;
  for (std::size_t c = 0; c < cov.size(); ++c) {
    try {
      out.thetas.push_back(inverse_pd(cov[c]));
    } catch (const Error&) {
      fail(ErrorCode::SingularEstimate,
           "RDA covariance for class " + std::to_string(c + 1) + " is singular");
    }
  }
  return out;
}

RdaGrid default_rda_grid() {
  RdaGrid g;
  for (int i = 0; i <= 10; ++i) {
    g.lambda_values.push_back(i / 10.0);
    g.gamma_values.push_back(i / 10.0);
  }
  // gamma also gets half-decade points from 1e-4 up
  for (int k = 0; k < 6; ++k) g.gamma_values.push_back(std::pow(10.0, -4.0 + 0.5 * k));
  g.gamma_values.push_back(std::pow(10.0, -0.5));
  std::sort(g.gamma_values.begin(), g.gamma_values.end());
  return g;
}

RdaSearchResult rda_grid_search(const Eigen::MatrixXd& x, std::span<const int> labels,
                                const RdaGrid& grid, int k, std::uint64_t seed,
                                int jobs) {
  if (grid.lambda_values.empty() || grid.gamma_values.empty()) {
    fail(ErrorCode::InvalidInput, "RDA grid is empty");
  }
  const FoldAssignment folds = stratified_folds(labels, k, seed);
  const std::size_t n1 = grid.lambda_values.size();
  const std::size_t n2 = grid.gamma_values.size();
  std::vector<RdaGridPoint> table(n1 * n2);
  parallel_for(table.size(), jobs, [&](std::size_t i) {
    RdaGridPoint& pt = table[i];
    pt.params = {grid.lambda_values[i / n2], grid.gamma_values[i % n2]};
    try {
      const PrecisionFitter fitter = [&](std::span<const ClassStats> training, int) {
        return rda_precisions(training, pt.params);
      };
      double total = 0.0;
      for (double t : validation_fold_scores(x, labels, folds, fitter)) total += t;
      pt.score = total;
      pt.ok = std::isfinite(total);
      if (!pt.ok) pt.error = "non-finite score";
    } catch (const Error& e) {
      pt.ok = false;
      pt.error = std::string(to_string(e.code())) + ": " + e.what();
    }
  });

  const RdaGridPoint* best = nullptr;
  for (const auto& pt : table) {
    if (!pt.ok) continue;
    if (best == nullptr || pt.score < best->score ||
        (pt.score == best->score &&
         (pt.params.lambda > best->params.lambda ||
          (pt.params.lambda == best->params.lambda &&
           pt.params.gamma > best->params.gamma)))) {
      best = &pt;
    }
  }
  if (best == nullptr) {
    std::ostringstream msg;
    msg << "every RDA grid point failed";
    for (const auto& pt : table) {
      msg << "\n  (lambda=" << pt.params.lambda << ", gamma=" << pt.params.gamma
          << "): " << pt.error;
    }
    fail(ErrorCode::TuningFailed, msg.str());
  }
  RdaSearchResult out;
  out.best = best->params;
  out.best_score = best->score;
  out.table = std::move(table);
  return out;
}

}  // namespace ridgefuse
