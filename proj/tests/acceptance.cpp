// Acceptance run: one PASS/FAIL line per criterion. Arguments select a
// subset of criteria by number; none runs all ten.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli_run.hpp"
#include "oracles.hpp"
#include "ridgefuse/classify.hpp"
#include "ridgefuse/estimator.hpp"
#include "ridgefuse/semisup.hpp"
#include "ridgefuse/simgen.hpp"

using namespace ridgefuse;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::vector<ClassStats> sampled_stats(int num_classes, int p, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nd(15, 40);
  std::vector<ClassStats> out;
  for (int c = 0; c < num_classes; ++c) {
    const Eigen::MatrixXd sigma = oracle::random_pd(p, rng, 0.3);
    const int n = nd(rng);
    const Eigen::MatrixXd x = oracle::sample(n, Eigen::VectorXd::Zero(p), sigma, rng);
    const std::vector<int> labels(n, 1);
    out.push_back(class_stats(x, labels)[0]);
  }
  return out;
}

double fusion_gap(const PrecisionSet& t) {
  double g = 0.0;
  for (std::size_t c = 0; c < t.size(); ++c) {
    for (std::size_t m = 0; m < t.size(); ++m) {
      if (m != c) g += frob_sq(t[c].matrix() - t[m].matrix());
    }
  }
  return g;
}

Outcome criterion1() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::MatrixXd s = oracle::random_symmetric(10, -2, 2, rng);
    for (double lambda : {0.01, 1.0, 100.0}) {
      const Eigen::MatrixXd t = q_operator(SymmetricMatrix(s), lambda).matrix();
      worst = std::max(worst, max_abs(s - t.inverse() + lambda * t));
    }
  }
  double oracle_gap = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd s = oracle::random_symmetric(3, -2, 2, rng);
    for (double lambda : {0.01, 1.0, 100.0}) {
      const Eigen::MatrixXd ref = oracle::prox_by_descent(s, lambda);
      oracle_gap = std::max(oracle_gap, max_abs(q_operator(SymmetricMatrix(s), lambda).matrix() - ref));
    }
  }
  return {worst <= 1e-8 && oracle_gap <= 1e-5,
          "max stationarity " + fmt("%.2e", worst) + ", max oracle gap " + fmt("%.2e", oracle_gap)};
}

Outcome criterion2() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> expo(-2.0, 2.0);
  double worst_rise = 0.0, worst_residual = 0.0;
  int failures = 0;
  FitOptions opts;
  opts.record_trace = true;
  for (int inst = 0; inst < 50; ++inst) {
    const auto stats = sampled_stats(3, 10, rng);
    const PenaltyPair pen{std::pow(10.0, expo(rng)), std::pow(10.0, 1.5 * expo(rng))};
    try {
      const FitReport rep = fit(stats, pen, std::nullopt, opts);
      if (!rep.converged) ++failures;
      const auto& t = rep.objective_trace;
      for (std::size_t i = 1; i < t.size(); ++i) {
        worst_rise = std::max(worst_rise, (t[i] - t[i - 1]) / std::abs(t[i - 1]));
      }
      worst_residual = std::max(worst_residual, stationarity_residual(rep.precision_set, stats, pen));
    } catch (const Error&) {
      ++failures;
    }
  }
  return {failures == 0 && worst_rise <= 1e-10 && worst_residual <= 1e-6,
          std::to_string(failures) + " failed fits, largest relative rise " +
              fmt("%.2e", worst_rise) + ", max residual " + fmt("%.2e", worst_residual)};
}

Outcome criterion3() {
  std::mt19937_64 rng(303);
  double decoupled = 0.0, edge = 0.0;
  bool monotone = true;
  for (int inst = 0; inst < 10; ++inst) {
    const auto stats = sampled_stats(3, 6, rng);
    const double l1 = 0.5;
    const auto zero = fit(stats, {l1, 0.0}).precision_set;
    for (std::size_t c = 0; c < stats.size(); ++c) {
      decoupled = std::max(decoupled, max_abs(zero[c].matrix() -
                                              q_operator(stats[c].cov, l1 / stats[c].count).matrix()));
    }
    const auto big = fit(stats, {l1, 1e8}).precision_set;
    const auto limit = fit_edge_case(stats, l1);
    for (std::size_t c = 0; c < stats.size(); ++c) {
      edge = std::max(edge, std::sqrt(frob_sq(big[c].matrix() - limit[c].matrix())));
    }
    double prev = INFINITY;
    for (int k = -4; k <= 4; ++k) {
      const double gap = fusion_gap(fit(stats, {l1, std::pow(10.0, k)}).precision_set);
      if (gap > prev * (1 + 1e-9)) monotone = false;
      prev = gap;
    }
  }
  return {decoupled <= 1e-8 && edge <= 1e-3 && monotone,
          "decoupled gap " + fmt("%.2e", decoupled) + ", edge-case gap " + fmt("%.2e", edge) +
              (monotone ? ", fusion gap monotone" : ", fusion gap NOT monotone")};
}

Outcome criterion4() {
  double worst_drop = 0.0, worst_row = 0.0;
  int failures = 0;
  for (int inst = 0; inst < 20; ++inst) {
    std::mt19937_64 rng(4000 + inst);
    const int p = 10;
    const Eigen::MatrixXd s1 = oracle::random_pd(p, rng), s2 = oracle::random_pd(p, rng);
    const Eigen::VectorXd m1 = Eigen::VectorXd::Zero(p), m2 = Eigen::VectorXd::Constant(p, 0.7);
    SemiData d;
    d.labeled.resize(40, p);
    d.labeled << oracle::sample(20, m1, s1, rng), oracle::sample(20, m2, s2, rng);
    d.labels.assign(20, 1);
    d.labels.insert(d.labels.end(), 20, 2);
    d.unlabeled.resize(100, p);
    d.unlabeled << oracle::sample(50, m1, s1, rng), oracle::sample(50, m2, s2, rng);
    try {
      const EmReport em = fit_em(d, {0.5, 1.0});
      const auto& t = em.penalized_loglik_trace;
      for (std::size_t i = 1; i < t.size(); ++i) {
        worst_drop = std::max(worst_drop, (t[i - 1] - t[i]) / std::abs(t[i - 1]));
      }
      for (Eigen::Index i = 0; i < em.responsibilities.rows(); ++i) {
        worst_row = std::max(worst_row, std::abs(em.responsibilities.row(i).sum() - 1.0));
      }
    } catch (const Error&) {
      ++failures;
    }
  }
  return {failures == 0 && worst_drop <= 1e-8 && worst_row <= 1e-12,
          std::to_string(failures) + " failed fits, largest relative drop " +
              fmt("%.2e", worst_drop) + ", max row-sum error " + fmt("%.2e", worst_row)};
}

SimResult simulate(Design design, std::vector<Method> methods, int n_test) {
  SimConfig cfg;
  cfg.design = design;
  cfg.p = 50;
  cfg.replications = 20;
  cfg.seed = 1;
  cfg.methods = std::move(methods);
  cfg.n_test_per_class = n_test;
  return run_experiment(cfg);
}

std::string means(const SimResult& r) {
  std::string out;
  for (const auto& m : r.methods) {
    out += std::string(out.empty() ? "" : ", ") + to_string(m.method) + " mean " +
           fmt("%.4f", m.mean) + " (se " + fmt("%.4f", m.se) + ")";
  }
  return out;
}

Outcome criterion5() {
  const auto r = simulate(Design::EigStruct, {Method::Ridge, Method::Rda}, 500);
  const double ridge = r.methods[0].mean, rda = r.methods[1].mean;
  return {std::abs(ridge - 0.03) <= 0.03 && std::abs(rda - 0.05) <= 0.04, means(r)};
}

Outcome criterion6() {
  const auto r = simulate(Design::EigVsTridiag, {Method::Ridge, Method::Rda}, 500);
  return {r.methods[0].mean <= 0.01 && r.methods[1].mean >= 0.10, means(r)};
}

Outcome criterion7() {
  const auto r = simulate(Design::Identity, {Method::Ridge}, 500);
  return {std::abs(r.methods[0].mean - 0.01) <= 0.02, means(r)};
}

Outcome criterion8() {
  const auto r = simulate(Design::SemiSup, {Method::RidgeSemiSup, Method::RidgeLabeled}, 250);
  const double semi = r.methods[0].mean, labeled = r.methods[1].mean;
  return {std::abs(semi - 0.01) <= 0.02 && labeled >= semi, means(r)};
}

Outcome criterion9() {
  std::mt19937_64 rng(909);
  double commute = 0.0, affine = 0.0, worst_order = -INFINITY;
  for (int inst = 0; inst < 20; ++inst) {
    const auto stats = sampled_stats(2, 10, rng);
    for (const auto& st : stats) {
      const Eigen::MatrixXd s = st.cov.matrix();
      const double lam = 1.0 / st.count;
      const Eigen::MatrixXd ridge = inverse_pd(q_operator(st.cov, lam)).matrix();
      const double beta = 0.3;
      const auto rda = rda_covariance(std::vector<ClassStats>{st}, {0.0, beta})[0];
      commute = std::max({commute, max_abs(ridge * s - s * ridge), max_abs(rda.matrix() * s - s * rda.matrix())});

      const auto es = sym_eig(st.cov);
      const auto er = sym_eig(rda);
      const double dbar = s.trace() / static_cast<double>(s.rows());
      const auto eq = sym_eig(SymmetricMatrix(ridge));
      for (Eigen::Index i = 0; i < s.rows(); ++i) {
        affine = std::max(affine, std::abs(er.values(i) - ((1 - beta) * es.values(i) + beta * dbar)));
      }
      // Inflation ridge_i - d_i against d_i, both sorted in decreasing order.
      for (Eigen::Index i = 0; i < s.rows(); ++i) {
        for (Eigen::Index j = 0; j < s.rows(); ++j) {
          if (es.values(i) > es.values(j)) {
            const double infl_i = eq.values(i) - es.values(i);
            const double infl_j = eq.values(j) - es.values(j);
            worst_order = std::max(worst_order, infl_i - infl_j);
          }
        }
      }
    }
  }
  return {commute <= 1e-8 && affine <= 1e-10 && worst_order <= 1e-12,
          "max commutator " + fmt("%.2e", commute) + ", affine error " + fmt("%.2e", affine) +
              ", largest inflation increase " + fmt("%.2e", worst_order)};
}

Outcome criterion10() {
  cli::TempDir dir("ridgefuse_accept10");
  const std::string args =
      "simulate --design eigstruct --p 20 --reps 6 --n-test 100 --seed 77 --methods ridge,rda ";
  const std::string a = dir / "a.csv", b = dir / "b.csv", c = dir / "c.csv";
  const auto ra = cli::run(args + "--jobs 1 --out " + cli::quote(a));
  const auto rb = cli::run(args + "--jobs 1 --out " + cli::quote(b));
  const auto rc = cli::run(args + "--jobs 4 --out " + cli::quote(c));
  if (ra.exit_code != 0 || rb.exit_code != 0 || rc.exit_code != 0) {
    return {false, "simulate exited with " + std::to_string(ra.exit_code) + "/" +
                       std::to_string(rb.exit_code) + "/" + std::to_string(rc.exit_code) + ": " +
                       ra.out};
  }
  const std::string ta = cli::slurp(a), tb = cli::slurp(b), tc = cli::slurp(c);
  const bool same_runs = !ta.empty() && ta == tb;
  const bool same_jobs = ta == tc;
  return {same_runs && same_jobs,
          std::string("repeat run ") + (same_runs ? "identical" : "DIFFERS") + ", jobs 1 vs 4 " +
              (same_jobs ? "identical" : "DIFFER") + " (" + std::to_string(ta.size()) + " bytes)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{
      criterion1, criterion2, criterion3, criterion4, criterion5,
      criterion6, criterion7, criterion8, criterion9, criterion10};
  // Wall-clock budgets in seconds; zero means none.
  const std::vector<double> budget{10, 30, 0, 0, 1800, 0, 0, 0, 0, 0};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k]();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (budget[k] > 0 && secs > budget[k]) {
      o.pass = false;
      o.detail += fmt("; over the %.0f s budget", budget[k]);
    }
    std::printf("%s criterion %d: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, o.detail.c_str(),
                secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
