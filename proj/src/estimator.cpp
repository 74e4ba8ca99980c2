#include "ridgefuse/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

namespace ridgefuse {

namespace {

void check_stats(std::span<const ClassStats> stats) {
  if (stats.empty()) fail(ErrorCode::InvalidInput, "no classes supplied");
  const Eigen::Index p = stats.front().cov.dim();
  if (p == 0) fail(ErrorCode::InvalidInput, "dimension must be positive");
  for (std::size_t c = 0; c < stats.size(); ++c) {
    const auto& s = stats[c];
    if (s.cov.dim() != p || s.mean.size() != p) {
      fail(ErrorCode::DimensionMismatch,
           "class " + std::to_string(c + 1) + " has inconsistent dimension");
    }
    if (!(s.count > 0.0) || !std::isfinite(s.count)) {
      fail(ErrorCode::InvalidInput,
           "class " + std::to_string(c + 1) + " has non-positive count");
    }
  }
}

/// Stacks the upper triangles of all blocks into one vector.
Eigen::VectorXd pack(const PrecisionSet& thetas) {
  const Eigen::Index p = thetas[0].dim();
  const Eigen::Index tri = p * (p + 1) / 2;
  Eigen::VectorXd v(tri * static_cast<Eigen::Index>(thetas.size()));
  Eigen::Index k = 0;
  for (const auto& t : thetas.thetas) {
    for (Eigen::Index j = 0; j < p; ++j) {
      for (Eigen::Index i = 0; i <= j; ++i) v(k++) = t(i, j);
    }
  }
  return v;
}

struct Candidate {
  PrecisionSet thetas;
  std::vector<double> logdets;
};

std::optional<Candidate> unpack_pd(const Eigen::VectorXd& v, std::size_t num_classes,
                                   Eigen::Index p) {
  Candidate out;
  out.thetas.thetas.reserve(num_classes);
  Eigen::Index k = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    Eigen::MatrixXd m(p, p);
    for (Eigen::Index j = 0; j < p; ++j) {
      for (Eigen::Index i = 0; i <= j; ++i) m(i, j) = m(j, i) = v(k++);
    }
    if (!m.allFinite()) return std::nullopt;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) return std::nullopt;
    const auto diag = llt.matrixLLT().diagonal();
    if (!(diag.array() > 0.0).all()) return std::nullopt;
    out.logdets.push_back(2.0 * diag.array().log().sum());
    out.thetas.thetas.push_back(make_symmetric_unchecked(std::move(m)));
  }
  return out;
}

/// Objective with the log-determinants supplied by the caller.
double objective_from(const PrecisionSet& thetas, std::span<const double> logdets,
                      std::span<const ClassStats> stats, const PenaltyPair& pen) {
  double g = 0.0;
  for (std::size_t c = 0; c < stats.size(); ++c) {
    const double tr = stats[c].cov.matrix().cwiseProduct(thetas[c].matrix()).sum();
    g += stats[c].count * (tr - logdets[c]);
  }
  return g + ridge_fusion_penalty(thetas, pen);
}

/// Newton step for a shift X added to every block. The Hessian system
///   sum_c n_c A_c^{-1} X A_c^{-1} + C lambda1 X = -grad
/// is solved by conjugate gradients preconditioned with n B X B + C lambda1 X,
/// B the count-weighted mean of the inverses, then backtracked on the objective.
std::optional<Candidate> shared_shift_step(const PrecisionSet& thetas,
                                           std::span<const double> logdets,
                                           std::span<const ClassStats> stats,
                                           const PenaltyPair& pen) {
  const Eigen::Index p = thetas[0].dim();
  const std::size_t num = stats.size();
  const double lambda1 = pen.lambda1;
  double n = 0.0;
  for (const auto& s : stats) n += s.count;

  std::vector<Eigen::MatrixXd> inv(num);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd mean_inv = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t c = 0; c < num; ++c) {
    Eigen::LLT<Eigen::MatrixXd> llt(thetas[c].matrix());
    if (llt.info() != Eigen::Success) return std::nullopt;
    inv[c] = llt.solve(Eigen::MatrixXd::Identity(p, p));
    inv[c] = 0.5 * (inv[c] + inv[c].transpose()).eval();
    grad += stats[c].count * (stats[c].cov.matrix() - inv[c]) + lambda1 * thetas[c].matrix();
    mean_inv += (stats[c].count / n) * inv[c];
  }
  const double cl = static_cast<double>(num) * lambda1;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eb(mean_inv);
  const Eigen::MatrixXd& u = eb.eigenvectors();
  const Eigen::VectorXd& b = eb.eigenvalues();
  Eigen::MatrixXd denom(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < p; ++i) denom(i, j) = n * b(i) * b(j) + cl;
  }
  auto hess = [&](const Eigen::MatrixXd& x) {
    Eigen::MatrixXd out = cl * x;
    for (std::size_t c = 0; c < num; ++c) out += stats[c].count * (inv[c] * x * inv[c]);
    return out;
  };
  auto precond = [&](const Eigen::MatrixXd& r) {
    const Eigen::MatrixXd rot = (u.transpose() * r * u).cwiseQuotient(denom);
    return Eigen::MatrixXd(u * rot * u.transpose());
  };

  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd r = -grad;
  Eigen::MatrixXd z = precond(r);
  Eigen::MatrixXd d = z;
  double rz = r.cwiseProduct(z).sum();
  const double r0 = r.norm();
  if (!(r0 > 0.0)) return std::nullopt;
  // A rough solve is enough; the line search guards the step.
  for (int k = 0; k < 5 && r.norm() > 1e-2 * r0; ++k) {
    const Eigen::MatrixXd hd = hess(d);
    const double curv = d.cwiseProduct(hd).sum();
    if (!(curv > 0.0)) break;
    const double a = rz / curv;
    x += a * d;
    r -= a * hd;
    z = precond(r);
    const double rz_next = r.cwiseProduct(z).sum();
    d = z + (rz_next / rz) * d;
    rz = rz_next;
  }
  x = 0.5 * (x + x.transpose()).eval();

  const double current = objective_from(thetas, logdets, stats, pen);
  const Eigen::Index tri = p * (p + 1) / 2;
  for (double t = 1.0; t > 0.06; t *= 0.5) {
    Eigen::VectorXd v(tri * static_cast<Eigen::Index>(num));
    Eigen::Index k = 0;
    for (std::size_t c = 0; c < num; ++c) {
      const Eigen::MatrixXd m = thetas[c].matrix() + t * x;
      for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index i = 0; i <= j; ++i) v(k++) = m(i, j);
      }
    }
    auto candidate = unpack_pd(v, num, p);
    if (candidate &&
        objective_from(candidate->thetas, candidate->logdets, stats, pen) < current) {
      return candidate;
    }
  }
  return std::nullopt;
}

/// Anderson (type II) mixing over the sweep map x -> G(x).
class AndersonMixer {
 public:
  explicit AndersonMixer(int depth) : depth_(std::max(depth, 0)) {}

  bool active() const { return depth_ > 0; }

  void reset() {
    dg_.clear();
    dr_.clear();
    last_g_.resize(0);
  }

  /// `before` is the sweep input, `after` its output.
  std::optional<Candidate> extrapolate(const Eigen::VectorXd& before,
                                          const PrecisionSet& after) {
    const Eigen::VectorXd g = pack(after);
    const Eigen::VectorXd r = g - before;
    if (last_g_.size() == g.size()) {
      dg_.push_back(g - last_g_);
      dr_.push_back(r - last_r_);
      if (static_cast<int>(dg_.size()) > depth_) {
        dg_.pop_front();
        dr_.pop_front();
      }
    }
    last_g_ = g;
    last_r_ = r;
    if (dg_.empty()) return std::nullopt;

    const auto m = static_cast<Eigen::Index>(dg_.size());
    Eigen::MatrixXd dr(r.size(), m), dg(g.size(), m);
    for (Eigen::Index k = 0; k < m; ++k) {
      dr.col(k) = dr_[static_cast<std::size_t>(k)];
      dg.col(k) = dg_[static_cast<std::size_t>(k)];
    }
    Eigen::MatrixXd gram = dr.transpose() * dr;
    gram.diagonal().array() += 1e-14 * gram.diagonal().maxCoeff();
    const Eigen::VectorXd gamma = gram.ldlt().solve(dr.transpose() * r);
    if (!gamma.allFinite()) {
      reset();
      return std::nullopt;
    }
    auto candidate = unpack_pd(g - dg * gamma, after.size(), after[0].dim());
    if (!candidate) reset();
    return candidate;
  }

 private:
  int depth_;
  std::deque<Eigen::VectorXd> dg_, dr_;
  Eigen::VectorXd last_g_, last_r_;
};

void check_precisions(const PrecisionSet& thetas, std::size_t num_classes,
                      Eigen::Index p) {
  if (thetas.size() != num_classes) {
    fail(ErrorCode::DimensionMismatch,
         "expected " + std::to_string(num_classes) + " precision matrices, got " +
             std::to_string(thetas.size()));
  }
  for (const auto& t : thetas.thetas) {
    if (t.dim() != p) {
      fail(ErrorCode::DimensionMismatch, "precision matrix has wrong dimension");
    }
  }
}

}  // namespace

void validate(const PenaltyPair& pen) {
  if (!(pen.lambda1 >= 0.0) || !std::isfinite(pen.lambda1)) {
    fail(ErrorCode::InvalidInput, "lambda1 must be finite and non-negative");
  }
  if (!(pen.lambda2 >= 0.0)) {
    fail(ErrorCode::InvalidInput, "lambda2 must be non-negative");
  }
}

std::vector<ClassStats> class_stats(const Eigen::MatrixXd& x,
                                    std::span<const int> labels,
                                    int num_classes) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (p == 0) fail(ErrorCode::InvalidInput, "data has zero columns");
  if (static_cast<std::size_t>(n) != labels.size()) {
    fail(ErrorCode::DimensionMismatch,
         "data has " + std::to_string(n) + " rows but " +
             std::to_string(labels.size()) + " labels");
  }
  if (!x.allFinite()) fail(ErrorCode::InvalidInput, "data has non-finite values");
  int num = num_classes;
  if (num <= 0) {
    for (int y : labels) num = std::max(num, y);
  }
  if (num <= 0) fail(ErrorCode::InvalidInput, "no labels supplied");

  std::vector<std::vector<Eigen::Index>> members(num);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 1 || y > num) {
      fail(ErrorCode::InvalidInput, "label " + std::to_string(y) +
                                        " outside 1.." + std::to_string(num));
    }
    members[y - 1].push_back(i);
  }

  std::vector<ClassStats> out;
  out.reserve(num);
  for (int c = 0; c < num; ++c) {
    const auto& idx = members[c];
    if (idx.empty()) {
      fail(ErrorCode::MissingClass,
           "class " + std::to_string(c + 1) + " has no observations");
    }
    const auto nc = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd sub(nc, p);
    for (Eigen::Index r = 0; r < nc; ++r) sub.row(r) = x.row(idx[r]);
    ClassStats s;
    s.count = static_cast<double>(nc);
    s.mean = sub.colwise().mean().transpose();
    sub.rowwise() -= s.mean.transpose();
    s.cov = SymmetricMatrix((sub.transpose() * sub) / s.count);
    out.push_back(std::move(s));
  }
  return out;
}

double profile_neg2_loglik(const PrecisionSet& thetas,
                           std::span<const ClassStats> stats) {
  check_stats(stats);
  check_precisions(thetas, stats.size(), stats.front().cov.dim());
  double g = 0.0;
  for (std::size_t c = 0; c < stats.size(); ++c) {
    const double tr =
        stats[c].cov.matrix().cwiseProduct(thetas[c].matrix()).sum();
    g += stats[c].count * (tr - logdet(thetas[c]));
  }
  return g;
}

double ridge_fusion_penalty(const PrecisionSet& thetas, const PenaltyPair& pen) {
  double ridge = 0.0;
  for (const auto& t : thetas.thetas) ridge += frob_sq(t);
  double fusion = 0.0;
  if (!pen.infinite_fusion() && pen.lambda2 != 0.0) {
    for (std::size_t c = 0; c < thetas.size(); ++c) {
      for (std::size_t m = c + 1; m < thetas.size(); ++m) {
        fusion += frob_sq(thetas[c].matrix() - thetas[m].matrix());
      }
    }
    // Ordered pairs count each unordered pair twice.
    fusion *= 2.0 * pen.lambda2 / 4.0;
  }
  return 0.5 * pen.lambda1 * ridge + fusion;
}

double objective(const PrecisionSet& thetas, std::span<const ClassStats> stats,
                 const PenaltyPair& pen) {
  validate(pen);
  return profile_neg2_loglik(thetas, stats) + ridge_fusion_penalty(thetas, pen);
}

SymmetricMatrix s_twiddle(const ClassStats& stats_c,
                          std::span<const SymmetricMatrix> others,
                          double lambda2) {
  if (lambda2 == 0.0) return stats_c.cov;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(stats_c.cov.dim(), stats_c.cov.dim());
  for (const auto& t : others) sum += t.matrix();
  return make_symmetric_unchecked(stats_c.cov.matrix() -
                                  (lambda2 / stats_c.count) * sum);
}

double lambda_twiddle(const PenaltyPair& pen, std::size_t num_classes,
                      double count) {
  const double c1 = static_cast<double>(num_classes) - 1.0;
  const double fusion = pen.lambda2 == 0.0 ? 0.0 : pen.lambda2 * c1;
  return (pen.lambda1 + fusion) / count;
}

PrecisionSet fit_edge_case(std::span<const ClassStats> stats, double lambda1) {
  check_stats(stats);
  if (!(lambda1 > 0.0) || !std::isfinite(lambda1)) {
    fail(ErrorCode::InvalidInput, "edge case requires lambda1 > 0");
  }
  const Eigen::Index p = stats.front().cov.dim();
  double n = 0.0;
  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(p, p);
  for (const auto& s : stats) {
    n += s.count;
    pooled += s.count * s.cov.matrix();
  }
  pooled /= n;
  const double lam = lambda1 * static_cast<double>(stats.size()) / n;
  SymmetricMatrix theta = q_operator(make_symmetric_unchecked(std::move(pooled)), lam);
  PrecisionSet out;
  out.thetas.assign(stats.size(), theta);
  return out;
}

PrecisionSet fit_decoupled(std::span<const ClassStats> stats, double lambda1) {
  check_stats(stats);
  PrecisionSet out;
  out.thetas.reserve(stats.size());
  for (const auto& s : stats) out.thetas.push_back(q_operator(s.cov, lambda1 / s.count));
  return out;
}

PrecisionSet init_strategy(std::span<const ClassStats> stats,
                           const PenaltyPair& pen) {
  validate(pen);
  if (!(pen.lambda1 > 0.0)) {
    fail(ErrorCode::InvalidInput, "initialization requires lambda1 > 0");
  }
  if (pen.lambda2 >= pen.lambda1) return fit_edge_case(stats, pen.lambda1);
  return fit_decoupled(stats, pen.lambda1);
}

PrecisionSet choose_init(std::span<const ClassStats> stats, const PenaltyPair& pen,
                         const PrecisionSet* warm) {
  PrecisionSet init = init_strategy(stats, pen);
  if (warm != nullptr && !pen.infinite_fusion() && warm->size() == stats.size() &&
      objective(*warm, stats, pen) < objective(init, stats, pen)) {
    return *warm;
  }
  return init;
}

FitReport fit(std::span<const ClassStats> stats, const PenaltyPair& pen,
              const std::optional<PrecisionSet>& init,
              const FitOptions& options) {
  validate(pen);
  check_stats(stats);
  if (!(pen.lambda1 > 0.0)) {
    fail(ErrorCode::InvalidInput, "fit requires lambda1 > 0");
  }
  if (!(options.eps > 0.0)) fail(ErrorCode::InvalidInput, "eps must be positive");

  const std::size_t num_classes = stats.size();
  const Eigen::Index p = stats.front().cov.dim();

  double scale = 0.0;  // sum_c |(S_c o I)^{-1}|_1
  for (std::size_t c = 0; c < num_classes; ++c) {
    const auto diag = stats[c].cov.matrix().diagonal();
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!(diag(j) > 0.0)) {
        fail(ErrorCode::DegenerateVariable,
             "class " + std::to_string(c + 1) + " variable " +
                 std::to_string(j + 1) + " has zero sample variance");
      }
      scale += 1.0 / diag(j);
    }
  }

  FitReport report;
  if (pen.infinite_fusion()) {
    report.precision_set = fit_edge_case(stats, pen.lambda1);
    report.iterations = 0;
    report.converged = true;
    report.final_objective = objective(report.precision_set, stats, pen);
    if (options.record_trace) report.objective_trace.push_back(report.final_objective);
    return report;
  }

  PrecisionSet thetas = init ? *init : init_strategy(stats, pen);
  check_precisions(thetas, num_classes, p);

  std::vector<double> lam(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    lam[c] = lambda_twiddle(pen, num_classes, stats[c].count);
  }
  const double threshold = options.eps * scale;

  const double unit = std::numeric_limits<double>::epsilon();
  AndersonMixer mixer(options.anderson_depth);
  std::vector<double> logdets(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) logdets[c] = logdet(thetas[c]);
  Eigen::MatrixXd total(p, p);
  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    total.setZero();
    for (const auto& t : thetas.thetas) total += t.matrix();
    const Eigen::VectorXd before = mixer.active() ? pack(thetas) : Eigen::VectorXd();

    double change = 0.0;
    double noise = 0.0;  // rounding level of this sweep's updates
    for (std::size_t c = 0; c < num_classes; ++c) {
      SymmetricMatrix st = stats[c].cov;
      if (pen.lambda2 != 0.0) {
        st = make_symmetric_unchecked(
            stats[c].cov.matrix() -
            (pen.lambda2 / stats[c].count) * (total - thetas[c].matrix()));
      }
      const EigenDecomposition eig = sym_eig(st);
      Eigen::VectorXd mapped(p);
      double slope = 0.0;
      for (Eigen::Index i = 0; i < p; ++i) {
        const double d = eig.values(i);
        mapped(i) = q_eigenvalue(d, lam[c]);
        slope = std::max(slope, mapped(i) / std::sqrt(d * d + 4.0 * lam[c]));
      }
      const double spread =
          std::max(std::abs(eig.values(0)), std::abs(eig.values(p - 1)));
      noise += 10.0 * static_cast<double>(p) * unit * spread * slope *
               static_cast<double>(p);
      logdets[c] = mapped.array().log().sum();
      SymmetricMatrix updated = make_symmetric_unchecked(
          eig.vectors * mapped.asDiagonal() * eig.vectors.transpose());
      const Eigen::MatrixXd delta = updated.matrix() - thetas[c].matrix();
      change += delta.cwiseAbs().sum();
      total += delta;
      thetas.thetas[c] = std::move(updated);
    }
    report.iterations = sweep;

    const bool done = change < threshold || change < noise;
    if (!done && options.shared_shift_step && pen.lambda2 != 0.0) {
      std::optional<Candidate> candidate = shared_shift_step(thetas, logdets, stats, pen);
      if (candidate) {
        thetas = std::move(candidate->thetas);
        logdets = std::move(candidate->logdets);
      }
    }
    if (!done && mixer.active()) {
      std::optional<Candidate> candidate = mixer.extrapolate(before, thetas);
      if (candidate) {
        const double trial = objective_from(candidate->thetas, candidate->logdets, stats, pen);
        if (trial < objective_from(thetas, logdets, stats, pen)) {
          thetas = std::move(candidate->thetas);
          logdets = std::move(candidate->logdets);
          ++report.extrapolations;
        } else {
          mixer.reset();
        }
      }
    }
    if (options.record_trace) {
      report.objective_trace.push_back(objective_from(thetas, logdets, stats, pen));
    }
    if (done) {
      report.converged = true;
      report.noise_limited = change >= threshold;
      break;
    }
  }

  report.final_objective = options.record_trace && !report.objective_trace.empty()
                               ? report.objective_trace.back()
                               : objective(thetas, stats, pen);
  report.precision_set = std::move(thetas);
  if (!report.converged) {
    std::ostringstream msg;
    msg << "blockwise descent did not converge in " << options.max_sweeps
        << " sweeps (lambda1=" << pen.lambda1 << ", lambda2=" << pen.lambda2
        << ")";
    throw FitNotConverged(msg.str(), std::move(report));
  }
  return report;
}

double stationarity_residual(const PrecisionSet& thetas,
                             std::span<const ClassStats> stats,
                             const PenaltyPair& pen) {
  validate(pen);
  check_stats(stats);
  check_precisions(thetas, stats.size(), stats.front().cov.dim());
  if (pen.infinite_fusion()) {
    fail(ErrorCode::InvalidInput,
         "stationarity residual is defined for finite lambda2 only");
  }
  double worst = 0.0;
  for (std::size_t c = 0; c < stats.size(); ++c) {
    std::vector<SymmetricMatrix> others;
    for (std::size_t m = 0; m < stats.size(); ++m) {
      if (m != c) others.push_back(thetas[m]);
    }
    const SymmetricMatrix st = s_twiddle(stats[c], others, pen.lambda2);
    const double lam = lambda_twiddle(pen, stats.size(), stats[c].count);
    const Eigen::MatrixXd r =
        st.matrix() - inverse_pd(thetas[c]).matrix() + lam * thetas[c].matrix();
    worst = std::max(worst, max_abs(r) / (1.0 + max_abs(stats[c].cov.matrix())));
  }
  return worst;
}

Standardization compute_standardization(const Eigen::MatrixXd& x) {
  if (x.rows() == 0 || x.cols() == 0) {
    fail(ErrorCode::InvalidInput, "cannot standardize empty data");
  }
  Standardization st;
  const double n = static_cast<double>(x.rows());
  st.center = x.colwise().sum().transpose() / n;
  st.scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double ss = (x.col(j).array() - st.center(j)).square().sum();
    st.scale(j) = std::sqrt(ss / n);
    if (!(st.scale(j) > 0.0)) {
      fail(ErrorCode::DegenerateVariable,
           "variable " + std::to_string(j + 1) + " is constant");
    }
  }
  return st;
}

Eigen::MatrixXd apply_standardization(const Eigen::MatrixXd& x,
                                      const Standardization& st) {
  if (x.cols() != st.center.size() || x.cols() != st.scale.size()) {
    fail(ErrorCode::DimensionMismatch, "standardization dimension mismatch");
  }
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    out.col(j) = (x.col(j).array() - st.center(j)) / st.scale(j);
  }
  return out;
}

SymmetricMatrix rescale_precision(const SymmetricMatrix& theta,
                                  const Eigen::VectorXd& scale) {
  const Eigen::Index p = theta.dim();
  if (scale.size() != p) fail(ErrorCode::DimensionMismatch, "scale has wrong length");
  Eigen::MatrixXd out(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      out(i, j) = theta(i, j) / (scale(i) * scale(j));
    }
  }
  return make_symmetric_unchecked(std::move(out));
}

StandardizedFit fit_standardized(const Eigen::MatrixXd& x,
                                 std::span<const int> labels,
                                 const PenaltyPair& pen,
                                 const FitOptions& options) {
  StandardizedFit out;
  out.standardization = compute_standardization(x);
  const auto stats = class_stats(apply_standardization(x, out.standardization), labels);
  out.standardized = fit(stats, pen, std::nullopt, options);
  for (const auto& t : out.standardized.precision_set.thetas) {
    out.original.thetas.push_back(rescale_precision(t, out.standardization.scale));
  }
  return out;
}

}  // namespace ridgefuse
