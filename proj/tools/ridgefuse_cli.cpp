// ridgefuse command-line front end. Talks to the library only through the C API.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ridgefuse/ridgefuse.h"

namespace {

enum Exit : int {
  kOk = 0,
  kInternal = 1,
  kInput = 2,
  kNumerical = 3,
  kFolds = 4,
};

int exit_code(rf_status st) {
  switch (st) {
    case RF_OK:
      return kOk;
    case RF_ERR_INVALID_INPUT:
    case RF_ERR_MISSING_CLASS:
    case RF_ERR_DIMENSION_MISMATCH:
    case RF_ERR_PARSE:
    case RF_ERR_IO:
      return kInput;
    case RF_ERR_POSITIVE_DEFINITE_REQUIRED:
    case RF_ERR_EIGEN_NOT_CONVERGED:
    case RF_ERR_NOT_CONVERGED:
    case RF_ERR_DEGENERATE_VARIABLE:
    case RF_ERR_TUNING_FAILED:
    case RF_ERR_SINGULAR_ESTIMATE:
    case RF_ERR_EMPTY_COMPONENT:
    case RF_ERR_NUMERICAL_UNDERFLOW:
      return kNumerical;
    case RF_ERR_INSUFFICIENT_CLASS_SIZE:
      return kFolds;
    case RF_ERR_INTERNAL:
      break;
  }
  return kInternal;
}

struct Failure {
  rf_status status;
  std::string message;
};

void check(rf_status st) {
  if (st != RF_OK) throw Failure{st, rf_last_error()};
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using DatasetPtr = std::unique_ptr<rf_dataset, Deleter<rf_dataset, rf_dataset_free>>;
using ModelPtr = std::unique_ptr<rf_model, Deleter<rf_model, rf_model_free>>;
using TunePtr = std::unique_ptr<rf_tune_result, Deleter<rf_tune_result, rf_tune_result_free>>;
using ClusterPtr =
    std::unique_ptr<rf_cluster_result, Deleter<rf_cluster_result, rf_cluster_result_free>>;
using SimPtr = std::unique_ptr<rf_sim_result, Deleter<rf_sim_result, rf_sim_result_free>>;

DatasetPtr load(const std::string& path) {
  rf_dataset* ds = nullptr;
  check(rf_dataset_read_csv(path.c_str(), &ds));
  return DatasetPtr(ds);
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Grid {
  std::vector<double> values;
  bool has_infinite = false;
};

Grid parse_grid(const std::string& text, const char* flag) {
  Grid g;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (end == item.c_str() || *end != '\0' || std::isnan(v) || v < 0.0) {
      throw Failure{RF_ERR_PARSE, std::string(flag) + ": bad grid value '" + item + "'"};
    }
    if (std::isinf(v)) {
      g.has_infinite = true;
    } else {
      g.values.push_back(v);
    }
  }
  if (g.values.empty() && !g.has_infinite) {
    throw Failure{RF_ERR_PARSE, std::string(flag) + ": empty grid"};
  }
  return g;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("RIDGEFUSE_SEED"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0') throw Failure{RF_ERR_PARSE, "RIDGEFUSE_SEED is not an integer"};
    return v;
  }
  return 1;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw Failure{RF_ERR_IO, "cannot open " + path + " for writing"};
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::vector<int> read_truth(const std::string& path, std::size_t rows) {
  DatasetPtr truth = load(path);
  if (rf_dataset_rows(truth.get()) != rows) {
    throw Failure{RF_ERR_DIMENSION_MISMATCH, "--truth has " +
                                                 std::to_string(rf_dataset_rows(truth.get())) +
                                                 " rows, data has " + std::to_string(rows)};
  }
  std::vector<int> labels(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    int has = 0;
    check(rf_dataset_label(truth.get(), i, &labels[i], &has));
    if (!has) throw Failure{RF_ERR_INVALID_INPUT, "--truth row " + std::to_string(i + 1) + " has no label"};
  }
  return labels;
}

// fit ----------------------------------------------------------------------

struct FitArgs {
  std::string data, out;
  double lambda1 = 1.0;
  double lambda2 = 0.0;
  bool lambda2_inf = false;
  bool standardize = false;
  double eps = 1e-7;
  int max_sweeps = 10000;
  std::optional<std::uint64_t> seed;
};

int run_fit(const FitArgs& a) {
  DatasetPtr ds = load(a.data);
  rf_fit_options opts;
  rf_fit_options_init(&opts);
  opts.lambda1 = a.lambda1;
  opts.lambda2 = a.lambda2;
  opts.lambda2_infinite = a.lambda2_inf ? 1 : 0;
  opts.standardize = a.standardize ? 1 : 0;
  opts.eps = a.eps;
  opts.max_sweeps = a.max_sweeps;
  rf_model* raw = nullptr;
  rf_fit_info info{};
  check(rf_fit(ds.get(), &opts, &raw, &info));
  ModelPtr model(raw);
  if (a.seed) rf_model_set_seed(model.get(), *a.seed);
  check(rf_model_write_json(model.get(), a.out.c_str()));
  std::cout << "iterations: " << info.iterations << "\n"
            << "objective: " << fmt(info.objective) << "\n";
  return kOk;
}

// tune ---------------------------------------------------------------------

struct TuneArgs {
  std::string data, out, grid1, grid2;
  int folds = 5;
  int jobs = 1;
  double eps = 1e-7;
  bool center_training = false;
  std::optional<std::uint64_t> seed;
};

int run_tune(const TuneArgs& a) {
  DatasetPtr ds = load(a.data);
  rf_tune_options opts;
  rf_tune_options_init(&opts);
  Grid g1, g2;
  if (!a.grid1.empty()) {
    g1 = parse_grid(a.grid1, "--grid1");
    if (g1.has_infinite) throw Failure{RF_ERR_PARSE, "--grid1: lambda1 must be finite"};
    opts.grid1 = g1.values.data();
    opts.grid1_len = g1.values.size();
  }
  if (!a.grid2.empty()) {
    g2 = parse_grid(a.grid2, "--grid2");
    if (g2.values.empty()) {
      throw Failure{RF_ERR_INVALID_INPUT, "--grid2 needs at least one finite value"};
    }
    opts.lambda2_include_infinite = g2.has_infinite ? 1 : 0;
    opts.grid2 = g2.values.data();
    opts.grid2_len = g2.values.size();
  }
  opts.folds = a.folds;
  opts.seed = resolve_seed(a.seed);
  opts.jobs = a.jobs;
  opts.eps = a.eps;
  opts.center_on_training_mean = a.center_training ? 1 : 0;
  rf_tune_result* raw = nullptr;
  check(rf_tune(ds.get(), &opts, &raw));
  TunePtr res(raw);
  double l1 = 0, l2 = 0, score = 0;
  rf_tune_result_best(res.get(), &l1, &l2, &score);
  std::cout << "lambda1: " << fmt(l1) << "\n"
            << "lambda2: " << fmt(l2) << "\n"
            << "score: " << fmt(score) << "\n";
  if (!a.out.empty()) {
    Output out(a.out);
    out.stream() << "lambda1,lambda2,score\n";
    for (std::size_t i = 0; i < rf_tune_result_size(res.get()); ++i) {
      double r1 = 0, r2 = 0, s = 0;
      int ok = 0;
      check(rf_tune_result_row(res.get(), i, &r1, &r2, &s, &ok));
      out.stream() << fmt(r1) << ',' << fmt(r2) << ',' << (ok ? fmt(s) : std::string("nan"))
                   << '\n';
    }
  }
  return kOk;
}

// classify -----------------------------------------------------------------

struct ClassifyArgs {
  std::string model, data, truth, out;
};

int run_classify(const ClassifyArgs& a) {
  rf_model* raw = nullptr;
  check(rf_model_read_json(a.model.c_str(), &raw));
  ModelPtr model(raw);
  DatasetPtr ds = load(a.data);
  const std::size_t n = rf_dataset_rows(ds.get());
  std::vector<int> pred(n);
  check(rf_classify(model.get(), ds.get(), pred.data()));
  {
    Output out(a.out);
    out.stream() << "row,label\n";
    for (std::size_t i = 0; i < n; ++i) out.stream() << i + 1 << ',' << pred[i] << '\n';
  }
  if (!a.truth.empty()) {
    const std::vector<int> truth = read_truth(a.truth, n);
    double rate = 0.0;
    check(rf_cer(pred.data(), truth.data(), n, &rate));
    (a.out.empty() ? std::cerr : std::cout) << "cer: " << fmt(rate) << "\n";
  }
  return kOk;
}

// cluster ------------------------------------------------------------------

struct ClusterArgs {
  std::string data, out, responsibilities, truth, grid1, grid2;
  double lambda1 = 1.0;
  double lambda2 = 0.0;
  bool lambda2_inf = false;
  bool tune = false;
  int folds = 5;
  int jobs = 1;
  double eps = 1e-7;
  double eps_em = 1e-6;
  int max_iterations = 500;
  std::optional<std::uint64_t> seed;
};

void write_cluster(const ClusterArgs& a, const rf_cluster_result* res, const rf_dataset* ds) {
  const rf_model* model = rf_cluster_result_model(res);
  check(rf_model_write_json(model, a.out.c_str()));
  const std::size_t nu = rf_cluster_result_unlabeled(res);
  const std::size_t c = rf_model_classes(model);
  std::vector<double> alpha(nu * c);
  check(rf_cluster_result_responsibilities(res, alpha.data()));
  std::vector<int> assigned(nu);
  for (std::size_t i = 0; i < nu; ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < c; ++k) {
      if (alpha[i * c + k] > alpha[i * c + best]) best = k;
    }
    assigned[i] = rf_model_class_label(model, best);
  }
  if (!a.responsibilities.empty()) {
    Output out(a.responsibilities);
    out.stream() << "row";
    for (std::size_t k = 0; k < c; ++k) out.stream() << ",alpha_" << rf_model_class_label(model, k);
    out.stream() << ",label\n";
    for (std::size_t i = 0; i < nu; ++i) {
      out.stream() << rf_cluster_result_row_index(res, i) + 1;
      for (std::size_t k = 0; k < c; ++k) out.stream() << ',' << fmt(alpha[i * c + k]);
      out.stream() << ',' << assigned[i] << '\n';
    }
  }
  double l1 = 0, l2 = 0;
  rf_model_penalty(model, &l1, &l2);
  std::cout << "lambda1: " << fmt(l1) << "\n"
            << "lambda2: " << fmt(l2) << "\n"
            << "iterations: " << rf_cluster_result_iterations(res) << "\n"
            << "converged: " << (rf_cluster_result_converged(res) ? "true" : "false") << "\n";
  if (!a.truth.empty()) {
    const std::vector<int> truth = read_truth(a.truth, rf_dataset_rows(ds));
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < nu; ++i) {
      if (assigned[i] != truth[rf_cluster_result_row_index(res, i)]) ++wrong;
    }
    std::cout << "misclassified: " << wrong << " of " << nu << "\n";
  }
}

int run_cluster(const ClusterArgs& a) {
  DatasetPtr ds = load(a.data);
  rf_cluster_options opts;
  rf_cluster_options_init(&opts);
  opts.lambda1 = a.lambda1;
  opts.lambda2 = a.lambda2;
  opts.lambda2_infinite = a.lambda2_inf ? 1 : 0;
  opts.tune = a.tune ? 1 : 0;
  Grid g1, g2;
  if (!a.grid1.empty()) {
    g1 = parse_grid(a.grid1, "--grid1");
    opts.grid1 = g1.values.data();
    opts.grid1_len = g1.values.size();
  }
  if (!a.grid2.empty()) {
    g2 = parse_grid(a.grid2, "--grid2");
    opts.grid2 = g2.values.data();
    opts.grid2_len = g2.values.size();
  }
  if (g1.has_infinite || g2.has_infinite) {
    throw Failure{RF_ERR_PARSE, "cluster grids must be finite"};
  }
  opts.folds = a.folds;
  opts.seed = resolve_seed(a.seed);
  opts.eps = a.eps;
  opts.eps_em = a.eps_em;
  opts.max_iterations = a.max_iterations;
  opts.jobs = a.jobs;
  rf_cluster_result* raw = nullptr;
  const rf_status st = rf_cluster(ds.get(), &opts, &raw);
  const std::string message = st == RF_OK ? "" : rf_last_error();
  ClusterPtr res(raw);
  if (st == RF_ERR_NOT_CONVERGED && res) {
    write_cluster(a, res.get(), ds.get());
    throw Failure{st, message + " (partial result written)"};
  }
  if (st != RF_OK) throw Failure{st, message};
  write_cluster(a, res.get(), ds.get());
  return kOk;
}

// simulate -----------------------------------------------------------------

struct SimArgs {
  std::string design = "eigstruct";
  std::string methods, grid, out;
  int p = 50;
  int n_train = 25;
  int n_test = 0;
  int reps = 20;
  double rho = 0.25;
  int folds = 5;
  int jobs = 1;
  double eps = 1e-7;
  std::optional<std::uint64_t> seed;
};

int run_simulate(const SimArgs& a) {
  rf_sim_config cfg;
  rf_sim_config_init(&cfg);
  cfg.design = a.design.c_str();
  cfg.methods = a.methods.empty() ? nullptr : a.methods.c_str();
  cfg.p = a.p;
  cfg.n_train_per_class = a.n_train;
  cfg.n_test_per_class = a.n_test;
  cfg.replications = a.reps;
  cfg.seed = resolve_seed(a.seed);
  cfg.rho = a.rho;
  cfg.folds = a.folds;
  cfg.jobs = a.jobs;
  cfg.eps = a.eps;
  Grid g;
  if (!a.grid.empty()) {
    g = parse_grid(a.grid, "--grid");
    if (g.has_infinite) throw Failure{RF_ERR_PARSE, "--grid must be finite"};
    cfg.grid = g.values.data();
    cfg.grid_len = g.values.size();
  }
  rf_sim_result* raw = nullptr;
  check(rf_simulate(&cfg, &raw));
  SimPtr res(raw);
  std::printf("%-14s %8s %8s %8s\n", "method", "mean", "sd", "se");
  for (std::size_t m = 0; m < rf_sim_result_methods(res.get()); ++m) {
    double mean = 0, sd = 0, se = 0;
    check(rf_sim_result_summary(res.get(), m, &mean, &sd, &se));
    std::printf("%-14s %8.4f %8.4f %8.4f\n", rf_sim_result_method_name(res.get(), m), mean, sd,
                se);
  }
  if (!a.out.empty()) {
    std::unique_ptr<char, Deleter<char, rf_string_free>> csv(rf_sim_result_csv(res.get()));
    if (!csv) throw Failure{RF_ERR_INTERNAL, "could not format results"};
    Output out(a.out);
    out.stream() << csv.get();
    if (!out.stream()) throw Failure{RF_ERR_IO, "write failed: " + a.out};
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint ridge-fusion precision estimation, QDA and semi-supervised clustering"};
  app.set_version_flag("--version", std::string(rf_version()));
  app.require_subcommand(1);

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit per-class precision matrices to labeled data");
  fit->add_option("--data", fa.data, "Labeled CSV")->required();
  fit->add_option("--lambda1", fa.lambda1, "Ridge penalty (> 0)");
  auto* l2 = fit->add_option("--lambda2", fa.lambda2, "Fusion penalty (>= 0)");
  fit->add_flag("--lambda2-inf", fa.lambda2_inf, "Constrain all precisions to be equal")
      ->excludes(l2);
  fit->add_flag("--standardize", fa.standardize, "Fit on standardized variables");
  fit->add_option("--eps", fa.eps, "Convergence tolerance");
  fit->add_option("--max-sweeps", fa.max_sweeps, "Sweep limit");
  fit->add_option("--seed", fa.seed, "Seed recorded in the model file");
  fit->add_option("--out", fa.out, "Model JSON path")->required();

  TuneArgs ta;
  auto* tune = app.add_subcommand("tune", "Select (lambda1, lambda2) by K-fold validation likelihood");
  tune->add_option("--data", ta.data, "Labeled CSV")->required();
  tune->add_option("--grid1", ta.grid1, "Comma-separated lambda1 values");
  tune->add_option("--grid2", ta.grid2, "Comma-separated lambda2 values (inf allowed)");
  tune->add_option("--folds", ta.folds, "Number of folds");
  tune->add_option("--seed", ta.seed, "Fold seed");
  tune->add_option("--jobs", ta.jobs, "Worker threads");
  tune->add_option("--eps", ta.eps, "Convergence tolerance");
  tune->add_flag("--center-training", ta.center_training,
                 "Center held-out covariances at the training means");
  tune->add_option("--out", ta.out, "Score table CSV");

  ClassifyArgs ca;
  auto* classify = app.add_subcommand("classify", "Predict class labels with a fitted model");
  classify->add_option("--model", ca.model, "Model JSON")->required();
  classify->add_option("--data", ca.data, "CSV to classify")->required();
  classify->add_option("--truth", ca.truth, "CSV whose label column holds the true classes");
  classify->add_option("--out", ca.out, "Predictions CSV (stdout if omitted)");

  ClusterArgs ka;
  auto* cluster = app.add_subcommand("cluster", "Semi-supervised clustering by penalized EM");
  cluster->add_option("--data", ka.data, "CSV with empty labels for unlabeled rows")->required();
  cluster->add_option("--lambda1", ka.lambda1, "Ridge penalty (> 0)");
  auto* kl2 = cluster->add_option("--lambda2", ka.lambda2, "Fusion penalty (>= 0)");
  cluster->add_flag("--lambda2-inf", ka.lambda2_inf, "Constrain all precisions to be equal")
      ->excludes(kl2);
  cluster->add_flag("--tune", ka.tune, "Choose penalties by semi-supervised validation likelihood");
  cluster->add_option("--grid1", ka.grid1, "Comma-separated lambda1 values for --tune");
  cluster->add_option("--grid2", ka.grid2, "Comma-separated lambda2 values for --tune");
  cluster->add_option("--folds", ka.folds, "Number of folds for --tune");
  cluster->add_option("--seed", ka.seed, "Fold seed for --tune");
  cluster->add_option("--jobs", ka.jobs, "Worker threads for --tune");
  cluster->add_option("--eps", ka.eps, "Solver tolerance");
  cluster->add_option("--eps-em", ka.eps_em, "EM tolerance per unlabeled row");
  cluster->add_option("--max-iterations", ka.max_iterations, "EM iteration limit");
  cluster->add_option("--out", ka.out, "Model JSON path")->required();
  cluster->add_option("--responsibilities", ka.responsibilities, "Responsibilities CSV");
  cluster->add_option("--truth", ka.truth, "CSV whose label column holds every row's class");

  SimArgs sa;
  auto* sim = app.add_subcommand("simulate", "Replicated classification-error experiments");
  sim->add_option("--design", sa.design,
                  "eigstruct, eig-vs-tridiag, identity, blockdiag, tridiag or semisup");
  sim->add_option("--methods", sa.methods, "Comma-separated: ridge, rda, ridge-semisup, ridge-labeled");
  sim->add_option("--p", sa.p, "Dimension");
  sim->add_option("--n-train", sa.n_train, "Training (labeled) rows per class");
  sim->add_option("--n-test", sa.n_test, "Test (unlabeled) rows per class");
  sim->add_option("--reps", sa.reps, "Replications");
  sim->add_option("--seed", sa.seed, "Master seed");
  sim->add_option("--rho", sa.rho, "Correlation parameter for blockdiag and tridiag");
  sim->add_option("--folds", sa.folds, "Validation folds");
  sim->add_option("--grid", sa.grid, "Comma-separated values for both lambda axes");
  sim->add_option("--jobs", sa.jobs, "Worker threads");
  sim->add_option("--eps", sa.eps, "Solver tolerance");
  sim->add_option("--out", sa.out, "Results CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kInput;
  }

  try {
    if (*fit) return run_fit(fa);
    if (*tune) return run_tune(ta);
    if (*classify) return run_classify(ca);
    if (*cluster) return run_cluster(ka);
    if (*sim) return run_simulate(sa);
  } catch (const Failure& f) {
    std::cerr << "error [" << rf_status_name(f.status) << "]: " << f.message << "\n";
    return exit_code(f.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}
