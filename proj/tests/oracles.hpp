#pragma once

// Reference computations used by the tests. Nothing here calls the
// library's solvers; results come from first principles.

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline Eigen::MatrixXd random_symmetric(int p, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd a(p, p);
  for (int j = 0; j < p; ++j) {
    for (int i = 0; i <= j; ++i) a(i, j) = a(j, i) = u(rng);
  }
  return a;
}

inline Eigen::MatrixXd random_pd(int p, std::mt19937_64& rng, double ridge = 0.5) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd a(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) a(i, j) = z(rng);
  }
  Eigen::MatrixXd s = a * a.transpose() / p;
  s.diagonal().array() += ridge;
  return s;
}

inline double logdet_llt(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return -INFINITY;
  const auto d = llt.matrixLLT().diagonal();
  if (!(d.array() > 0.0).all()) return -INFINITY;
  return 2.0 * d.array().log().sum();
}

inline bool pd(const Eigen::MatrixXd& m) {
  return std::isfinite(logdet_llt(m));
}

/// Convex objective over a list of symmetric PD blocks with its gradient.
struct BlockProblem {
  std::function<double(const std::vector<Eigen::MatrixXd>&)> value;
  std::function<std::vector<Eigen::MatrixXd>(const std::vector<Eigen::MatrixXd>&)> grad;
};

/// Gradient descent with Barzilai-Borwein steps and an Armijo backtrack
/// that also rejects steps leaving the positive definite cone.
inline std::vector<Eigen::MatrixXd> descend(const BlockProblem& prob,
                                           std::vector<Eigen::MatrixXd> x,
                                           double gtol = 1e-11, int max_iter = 200000) {
  auto dot = [](const std::vector<Eigen::MatrixXd>& a, const std::vector<Eigen::MatrixXd>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k].cwiseProduct(b[k]).sum();
    return s;
  };
  double f = prob.value(x);
  auto g = prob.grad(x);
  double step = 1e-3;
  for (int it = 0; it < max_iter; ++it) {
    const double gn = std::sqrt(dot(g, g));
    if (gn < gtol) break;
    double t = step;
    std::vector<Eigen::MatrixXd> y(x.size());
    double fy = INFINITY;
    for (int bt = 0; bt < 80; ++bt) {
      bool ok = true;
      for (std::size_t k = 0; k < x.size(); ++k) {
        y[k] = x[k] - t * g[k];
        y[k] = 0.5 * (y[k] + y[k].transpose()).eval();
        if (!pd(y[k])) ok = false;
      }
      if (ok) {
        fy = prob.value(y);
        if (fy <= f - 1e-4 * t * gn * gn) break;
      }
      t *= 0.5;
    }
    if (!std::isfinite(fy)) break;
    auto gy = prob.grad(y);
    std::vector<Eigen::MatrixXd> s(x.size()), d(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      s[k] = y[k] - x[k];
      d[k] = gy[k] - g[k];
    }
    const double sd = dot(s, d);
    step = sd > 0.0 ? dot(s, s) / sd : 1e-3;
    x = std::move(y);
    g = std::move(gy);
    f = fy;
  }
  return x;
}

/// Damped Newton on the upper-triangle coordinates of one symmetric block.
/// The Hessian comes from central differences of the analytic gradient, so
/// only its convergence rate depends on the differencing error.
inline Eigen::MatrixXd newton_descend(const BlockProblem& prob, Eigen::MatrixXd x,
                                      int max_iter = 200) {
  const auto p = x.rows();
  const Eigen::Index m = p * (p + 1) / 2;
  auto pack = [&](const Eigen::MatrixXd& a, bool gradient) {
    Eigen::VectorXd v(m);
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
      for (Eigen::Index i = 0; i <= j; ++i) v(k++) = (gradient && i != j) ? 2.0 * a(i, j) : a(i, j);
    }
    return v;
  };
  auto unpack = [&](const Eigen::VectorXd& v) {
    Eigen::MatrixXd a(p, p);
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
      for (Eigen::Index i = 0; i <= j; ++i) a(i, j) = a(j, i) = v(k++);
    }
    return a;
  };
  auto value = [&](const Eigen::VectorXd& v) { return prob.value({unpack(v)}); };
  auto grad = [&](const Eigen::VectorXd& v) { return pack(prob.grad({unpack(v)})[0], true); };

  Eigen::VectorXd u = pack(x, false);
  double f = value(u);
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd g = grad(u);
    Eigen::MatrixXd h(m, m);
    for (Eigen::Index k = 0; k < m; ++k) {
      const double step = 1e-6 * (1.0 + std::abs(u(k)));
      Eigen::VectorXd up = u, dn = u;
      up(k) += step;
      dn(k) -= step;
      if (!pd(unpack(dn))) {
        h.col(k) = (grad(up) - g) / step;
      } else {
        h.col(k) = (grad(up) - grad(dn)) / (2.0 * step);
      }
    }
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::VectorXd d = -h.ldlt().solve(g);
    if (!(d.dot(g) < 0.0)) d = -g;
    double t = 1.0;
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt, t *= 0.5) {
      const Eigen::VectorXd trial = u + t * d;
      if (!pd(unpack(trial))) continue;
      const double ft = value(trial);
      if (ft <= f + 1e-4 * t * d.dot(g)) {
        moved = trial != u;
        u = trial;
        f = ft;
        break;
      }
    }
    if (!moved || (t * d).lpNorm<Eigen::Infinity>() <= 1e-15 * (1.0 + u.lpNorm<Eigen::Infinity>())) {
      break;
    }
  }
  return unpack(u);
}

/// tr(S T) - log det T + lambda/2 |T|^2 minimized by Newton descent from the identity.
inline Eigen::MatrixXd prox_by_descent(const Eigen::MatrixXd& s, double lambda) {
  const auto p = s.rows();
  BlockProblem prob;
  prob.value = [&](const std::vector<Eigen::MatrixXd>& t) {
    return s.cwiseProduct(t[0]).sum() - logdet_llt(t[0]) + 0.5 * lambda * t[0].squaredNorm();
  };
  prob.grad = [&](const std::vector<Eigen::MatrixXd>& t) {
    const Eigen::MatrixXd inv = t[0].inverse();
    return std::vector<Eigen::MatrixXd>{s - inv + lambda * t[0]};
  };
  return newton_descend(prob, Eigen::MatrixXd::Identity(p, p));
}

/// Ridge-fusion objective written out term by term:
///   sum_c n_c (tr(S_c T_c) - log det T_c) + l1/2 sum_c |T_c|^2
///   + l2/4 sum_{c != m} |T_c - T_m|^2.
inline double fusion_objective(const std::vector<Eigen::MatrixXd>& t,
                               const std::vector<Eigen::MatrixXd>& s,
                               const std::vector<double>& n, double l1, double l2) {
  double v = 0.0;
  for (std::size_t c = 0; c < t.size(); ++c) {
    v += n[c] * ((s[c] * t[c]).trace() - logdet_llt(t[c]));
    v += 0.5 * l1 * t[c].squaredNorm();
    for (std::size_t m = 0; m < t.size(); ++m) {
      if (m != c) v += 0.25 * l2 * (t[c] - t[m]).squaredNorm();
    }
  }
  return v;
}

inline std::vector<Eigen::MatrixXd> fusion_by_descent(const std::vector<Eigen::MatrixXd>& s,
                                                      const std::vector<double>& n,
                                                      double l1, double l2) {
  BlockProblem prob;
  prob.value = [&](const std::vector<Eigen::MatrixXd>& t) {
    return fusion_objective(t, s, n, l1, l2);
  };
  prob.grad = [&](const std::vector<Eigen::MatrixXd>& t) {
    std::vector<Eigen::MatrixXd> g(t.size());
    for (std::size_t c = 0; c < t.size(); ++c) {
      g[c] = n[c] * (s[c] - t[c].inverse()) + l1 * t[c];
      for (std::size_t m = 0; m < t.size(); ++m) {
        if (m != c) g[c] += l2 * (t[c] - t[m]);
      }
    }
    return g;
  };
  const auto p = s[0].rows();
  return descend(prob, std::vector<Eigen::MatrixXd>(s.size(), Eigen::MatrixXd::Identity(p, p)));
}

/// Multivariate normal density from the covariance matrix.
inline double gaussian_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                           const Eigen::MatrixXd& sigma) {
  const double p = static_cast<double>(x.size());
  const Eigen::VectorXd r = x - mu;
  const double quad = r.dot(sigma.ldlt().solve(r));
  return std::exp(-0.5 * quad) /
         std::sqrt(std::pow(2.0 * std::numbers::pi, p) * sigma.determinant());
}

inline Eigen::MatrixXd sample(int n, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                              std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  const Eigen::MatrixXd l = sigma.llt().matrixL();
  Eigen::MatrixXd out(n, mu.size());
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd v(mu.size());
    for (int j = 0; j < mu.size(); ++j) v(j) = z(rng);
    out.row(i) = (l * v + mu).transpose();
  }
  return out;
}

}  // namespace oracle
