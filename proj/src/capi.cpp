#include "ridgefuse/ridgefuse.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "ridgefuse/classify.hpp"
#include "ridgefuse/estimator.hpp"
#include "ridgefuse/io.hpp"
#include "ridgefuse/semisup.hpp"
#include "ridgefuse/simgen.hpp"
#include "ridgefuse/tuning.hpp"

using namespace ridgefuse;

struct rf_dataset {
  Dataset data;
};

struct rf_model {
  ModelFile file;
};

struct rf_tune_result {
  GridSearchResult result;
};

struct rf_cluster_result {
  rf_model model;
  Responsibilities alpha;
  std::vector<std::size_t> rows;
  int iterations = 0;
  bool converged = false;
};

struct rf_sim_result {
  SimResult result;
};

namespace {

thread_local std::string g_last_error;

rf_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return RF_ERR_INVALID_INPUT;
    case ErrorCode::PositiveDefiniteRequired: return RF_ERR_POSITIVE_DEFINITE_REQUIRED;
    case ErrorCode::EigenNotConverged: return RF_ERR_EIGEN_NOT_CONVERGED;
    case ErrorCode::NotConverged: return RF_ERR_NOT_CONVERGED;
    case ErrorCode::DegenerateVariable: return RF_ERR_DEGENERATE_VARIABLE;
    case ErrorCode::MissingClass: return RF_ERR_MISSING_CLASS;
    case ErrorCode::InsufficientClassSize: return RF_ERR_INSUFFICIENT_CLASS_SIZE;
    case ErrorCode::TuningFailed: return RF_ERR_TUNING_FAILED;
    case ErrorCode::SingularEstimate: return RF_ERR_SINGULAR_ESTIMATE;
    case ErrorCode::EmptyComponent: return RF_ERR_EMPTY_COMPONENT;
    case ErrorCode::NumericalUnderflow: return RF_ERR_NUMERICAL_UNDERFLOW;
    case ErrorCode::DimensionMismatch: return RF_ERR_DIMENSION_MISMATCH;
    case ErrorCode::ParseError: return RF_ERR_PARSE;
    case ErrorCode::IoError: return RF_ERR_IO;
  }
  return RF_ERR_INTERNAL;
}

/// Runs body, translating exceptions into a status and the thread's error
/// message.
template <class Body>
rf_status guarded(Body&& body) {
  try {
    body();
    g_last_error.clear();
    return RF_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return RF_ERR_INTERNAL;
}

void require(const void* ptr, const char* what) {
  if (ptr == nullptr) fail(ErrorCode::InvalidInput, std::string(what) + " is NULL");
}

std::vector<double> grid_or_default(const double* values, std::size_t len) {
  if (values == nullptr || len == 0) return default_simulation_grid();
  return {values, values + len};
}

PenaltyPair penalty_from(double lambda1, double lambda2, int infinite) {
  PenaltyPair pen{lambda1, infinite ? PenaltyPair::kInfiniteFusion : lambda2};
  validate(pen);
  return pen;
}

SplitDataset fully_labeled(const rf_dataset* ds) {
  if (ds->data.num_labeled() != ds->data.labels.size()) {
    fail(ErrorCode::InvalidInput,
         "every row needs a label (" +
             std::to_string(ds->data.labels.size() - ds->data.num_labeled()) +
             " rows are unlabeled)");
  }
  return split_dataset(ds->data);
}

}  // namespace

extern "C" {

const char* rf_version(void) { return tool_version(); }

const char* rf_status_name(rf_status status) {
  switch (status) {
    case RF_OK: return "OK";
    case RF_ERR_INVALID_INPUT: return "InvalidInput";
    case RF_ERR_POSITIVE_DEFINITE_REQUIRED: return "PositiveDefiniteRequired";
    case RF_ERR_EIGEN_NOT_CONVERGED: return "EigenNotConverged";
    case RF_ERR_NOT_CONVERGED: return "NotConverged";
    case RF_ERR_DEGENERATE_VARIABLE: return "DegenerateVariable";
    case RF_ERR_MISSING_CLASS: return "MissingClass";
    case RF_ERR_INSUFFICIENT_CLASS_SIZE: return "InsufficientClassSize";
    case RF_ERR_TUNING_FAILED: return "TuningFailed";
    case RF_ERR_SINGULAR_ESTIMATE: return "SingularEstimate";
    case RF_ERR_EMPTY_COMPONENT: return "EmptyComponent";
    case RF_ERR_NUMERICAL_UNDERFLOW: return "NumericalUnderflow";
    case RF_ERR_DIMENSION_MISMATCH: return "DimensionMismatch";
    case RF_ERR_PARSE: return "ParseError";
    case RF_ERR_IO: return "IoError";
    case RF_ERR_INTERNAL: return "Internal";
  }
  return "Unknown";
}

const char* rf_last_error(void) { return g_last_error.c_str(); }

rf_status rf_dataset_read_csv(const char* path, rf_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new rf_dataset{read_csv(path)};
  });
}

rf_status rf_dataset_create(size_t rows, size_t dim, const double* x, const int* labels,
                            const unsigned char* has_label, rf_dataset** out) {
  return guarded([&] {
    require(out, "out");
    if (dim == 0) fail(ErrorCode::InvalidInput, "dim must be positive");
    if (rows > 0) require(x, "x");
    auto ds = std::make_unique<rf_dataset>();
    ds->data.has_label_column = labels != nullptr;
    ds->data.x.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
    for (std::size_t j = 0; j < dim; ++j) ds->data.feature_names.push_back("x" + std::to_string(j + 1));
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < dim; ++j) {
        const double v = x[i * dim + j];
        if (!std::isfinite(v)) fail(ErrorCode::InvalidInput, "data has non-finite values");
        ds->data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      }
      const bool labeled = labels != nullptr && (has_label == nullptr || has_label[i] != 0);
      ds->data.labels.push_back(labeled ? std::optional<int>(labels[i]) : std::nullopt);
    }
    *out = ds.release();
  });
}

void rf_dataset_free(rf_dataset* ds) { delete ds; }
size_t rf_dataset_rows(const rf_dataset* ds) { return ds ? ds->data.labels.size() : 0; }
size_t rf_dataset_dim(const rf_dataset* ds) {
  return ds ? static_cast<size_t>(ds->data.x.cols()) : 0;
}
size_t rf_dataset_num_labeled(const rf_dataset* ds) { return ds ? ds->data.num_labeled() : 0; }

rf_status rf_dataset_label(const rf_dataset* ds, size_t row, int* label, int* has_label) {
  return guarded([&] {
    require(ds, "dataset");
    if (row >= ds->data.labels.size()) fail(ErrorCode::InvalidInput, "row out of range");
    const auto& l = ds->data.labels[row];
    if (has_label) *has_label = l.has_value() ? 1 : 0;
    if (label) *label = l.value_or(0);
  });
}

void rf_fit_options_init(rf_fit_options* opts) {
  if (!opts) return;
  *opts = rf_fit_options{};
  opts->lambda1 = 1.0;
  opts->lambda2 = 0.0;
  opts->eps = FitOptions{}.eps;
  opts->max_sweeps = FitOptions{}.max_sweeps;
}

rf_status rf_fit(const rf_dataset* ds, const rf_fit_options* opts, rf_model** out,
                 rf_fit_info* info) {
  return guarded([&] {
    require(ds, "dataset");
    require(opts, "options");
    require(out, "out");
    const PenaltyPair pen = penalty_from(opts->lambda1, opts->lambda2, opts->lambda2_infinite);
    FitOptions fo;
    fo.eps = opts->eps;
    fo.max_sweeps = opts->max_sweeps;
    const SplitDataset split = fully_labeled(ds);
    const int num = static_cast<int>(split.class_ids.size());

    auto model = std::make_unique<rf_model>();
    model->file.penalty = pen;
    model->file.class_ids = split.class_ids;
    FitReport report;
    std::vector<ClassStats> stats;
    if (opts->standardize) {
      const Standardization st = compute_standardization(split.data.labeled);
      stats = class_stats(apply_standardization(split.data.labeled, st), split.data.labels, num);
      model->file.standardization = st;
    } else {
      stats = class_stats(split.data.labeled, split.data.labels, num);
    }
    report = fit(stats, pen, std::nullopt, fo);
    model->file.params = make_model(stats, report.precision_set);
    model->file.converged = report.converged;
    if (info) {
      info->iterations = report.iterations;
      info->objective = report.final_objective;
      info->converged = report.converged ? 1 : 0;
    }
    *out = model.release();
  });
}

void rf_model_free(rf_model* model) { delete model; }
size_t rf_model_classes(const rf_model* m) { return m ? m->file.params.num_classes() : 0; }
size_t rf_model_dim(const rf_model* m) {
  return m ? static_cast<size_t>(m->file.params.dim()) : 0;
}
int rf_model_class_label(const rf_model* m, size_t c) {
  return m && c < m->file.class_ids.size() ? m->file.class_ids[c] : 0;
}
double rf_model_pi(const rf_model* m, size_t c) {
  return m && c < m->file.params.num_classes() ? m->file.params.classes[c].pi : 0.0;
}

rf_status rf_model_theta(const rf_model* m, size_t c, double* out) {
  return guarded([&] {
    require(m, "model");
    require(out, "out");
    if (c >= m->file.params.num_classes()) fail(ErrorCode::InvalidInput, "class out of range");
    const auto& t = m->file.params.classes[c].theta.matrix();
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      for (Eigen::Index j = 0; j < t.cols(); ++j) out[i * t.cols() + j] = t(i, j);
    }
  });
}

rf_status rf_model_mu(const rf_model* m, size_t c, double* out) {
  return guarded([&] {
    require(m, "model");
    require(out, "out");
    if (c >= m->file.params.num_classes()) fail(ErrorCode::InvalidInput, "class out of range");
    const auto& mu = m->file.params.classes[c].mu;
    std::copy(mu.data(), mu.data() + mu.size(), out);
  });
}

void rf_model_penalty(const rf_model* m, double* lambda1, double* lambda2) {
  if (!m) return;
  if (lambda1) *lambda1 = m->file.penalty.lambda1;
  if (lambda2) *lambda2 = m->file.penalty.lambda2;
}

int rf_model_is_standardized(const rf_model* m) {
  return m && m->file.standardization ? 1 : 0;
}

void rf_model_set_seed(rf_model* m, uint64_t seed) {
  if (m) m->file.seed = seed;
}

rf_status rf_model_write_json(const rf_model* m, const char* path) {
  return guarded([&] {
    require(m, "model");
    require(path, "path");
    write_model(m->file, path);
  });
}

rf_status rf_model_read_json(const char* path, rf_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new rf_model{read_model(path)};
  });
}

rf_status rf_classify(const rf_model* m, const rf_dataset* ds, int* out_labels) {
  return guarded([&] {
    require(m, "model");
    require(ds, "dataset");
    const QdaClassifier qda(m->file.params);
    const auto pred = qda.predict(model_features(m->file, ds->data.x));
    if (!pred.empty()) require(out_labels, "out_labels");
    for (std::size_t i = 0; i < pred.size(); ++i) {
      out_labels[i] = m->file.class_ids[static_cast<std::size_t>(pred[i] - 1)];
    }
  });
}

rf_status rf_cer(const int* predictions, const int* truth, size_t n, double* out) {
  return guarded([&] {
    require(out, "out");
    if (n > 0) {
      require(predictions, "predictions");
      require(truth, "truth");
    }
    *out = cer(std::span<const int>(predictions, n), std::span<const int>(truth, n));
  });
}

void rf_tune_options_init(rf_tune_options* opts) {
  if (!opts) return;
  *opts = rf_tune_options{};
  opts->folds = 5;
  opts->seed = 1;
  opts->eps = FitOptions{}.eps;
  opts->jobs = 1;
}

rf_status rf_tune(const rf_dataset* ds, const rf_tune_options* opts, rf_tune_result** out) {
  return guarded([&] {
    require(ds, "dataset");
    require(opts, "options");
    require(out, "out");
    GridSpec grid{grid_or_default(opts->grid1, opts->grid1_len),
                  grid_or_default(opts->grid2, opts->grid2_len)};
    if (opts->lambda2_include_infinite) grid.lambda2_values.push_back(PenaltyPair::kInfiniteFusion);
    TuningOptions to;
    to.fit.eps = opts->eps;
    to.jobs = opts->jobs;
    to.centering = opts->center_on_training_mean ? HeldOutCentering::TrainingMean
                                                 : HeldOutCentering::HeldOutMean;
    const SplitDataset split = fully_labeled(ds);
    *out = new rf_tune_result{
        grid_search(split.data.labeled, split.data.labels, grid, opts->folds, opts->seed, to)};
  });
}

void rf_tune_result_free(rf_tune_result* r) { delete r; }

void rf_tune_result_best(const rf_tune_result* r, double* lambda1, double* lambda2,
                         double* score) {
  if (!r) return;
  if (lambda1) *lambda1 = r->result.best.lambda1;
  if (lambda2) *lambda2 = r->result.best.lambda2;
  if (score) *score = r->result.best_score;
}

size_t rf_tune_result_size(const rf_tune_result* r) { return r ? r->result.table.size() : 0; }

rf_status rf_tune_result_row(const rf_tune_result* r, size_t i, double* lambda1,
                             double* lambda2, double* score, int* ok) {
  return guarded([&] {
    require(r, "result");
    if (i >= r->result.table.size()) fail(ErrorCode::InvalidInput, "row out of range");
    const auto& pt = r->result.table[i];
    if (lambda1) *lambda1 = pt.pen.lambda1;
    if (lambda2) *lambda2 = pt.pen.lambda2;
    if (score) *score = pt.ok ? pt.score : std::nan("");
    if (ok) *ok = pt.ok ? 1 : 0;
  });
}

void rf_cluster_options_init(rf_cluster_options* opts) {
  if (!opts) return;
  *opts = rf_cluster_options{};
  opts->lambda1 = 1.0;
  opts->folds = 5;
  opts->seed = 1;
  opts->eps = FitOptions{}.eps;
  opts->eps_em = EmOptions{}.eps_em;
  opts->max_iterations = EmOptions{}.max_iterations;
  opts->jobs = 1;
}

rf_status rf_cluster(const rf_dataset* ds, const rf_cluster_options* opts,
                     rf_cluster_result** out) {
  rf_cluster_result* partial = nullptr;
  const rf_status st = guarded([&] {
    require(ds, "dataset");
    require(opts, "options");
    require(out, "out");
    *out = nullptr;
    const SplitDataset split = split_dataset(ds->data);
    EmOptions em;
    em.eps_em = opts->eps_em;
    em.max_iterations = opts->max_iterations;
    em.fit.eps = opts->eps;

    PenaltyPair pen;
    if (opts->tune) {
      const GridSpec grid{grid_or_default(opts->grid1, opts->grid1_len),
                          grid_or_default(opts->grid2, opts->grid2_len)};
      pen = semisup_grid_search(split.data, grid, opts->folds, opts->seed, em, opts->jobs).best;
    } else {
      pen = penalty_from(opts->lambda1, opts->lambda2, opts->lambda2_infinite);
    }

    auto wrap = [&](const EmReport& rep) {
      auto r = std::make_unique<rf_cluster_result>();
      r->model.file.params = rep.params;
      r->model.file.penalty = pen;
      r->model.file.class_ids = split.class_ids;
      r->model.file.converged = rep.converged;
      if (opts->tune) r->model.file.seed = opts->seed;
      r->alpha = rep.responsibilities;
      r->rows = split.unlabeled_rows;
      r->iterations = rep.iterations;
      r->converged = rep.converged;
      return r;
    };
    try {
      *out = wrap(fit_em(split.data, pen, em)).release();
    } catch (const EmNotConverged& e) {
      partial = wrap(e.partial()).release();
      throw;
    }
  });
  if (st == RF_ERR_NOT_CONVERGED && partial != nullptr && out != nullptr) *out = partial;
  else delete partial;
  return st;
}

void rf_cluster_result_free(rf_cluster_result* r) { delete r; }
const rf_model* rf_cluster_result_model(const rf_cluster_result* r) {
  return r ? &r->model : nullptr;
}
size_t rf_cluster_result_unlabeled(const rf_cluster_result* r) { return r ? r->rows.size() : 0; }
size_t rf_cluster_result_row_index(const rf_cluster_result* r, size_t i) {
  return r && i < r->rows.size() ? r->rows[i] : 0;
}

rf_status rf_cluster_result_responsibilities(const rf_cluster_result* r, double* out) {
  return guarded([&] {
    require(r, "result");
    if (r->alpha.size() > 0) require(out, "out");
    for (Eigen::Index i = 0; i < r->alpha.rows(); ++i) {
      for (Eigen::Index c = 0; c < r->alpha.cols(); ++c) {
        out[i * r->alpha.cols() + c] = r->alpha(i, c);
      }
    }
  });
}

int rf_cluster_result_iterations(const rf_cluster_result* r) { return r ? r->iterations : 0; }
int rf_cluster_result_converged(const rf_cluster_result* r) { return r && r->converged ? 1 : 0; }

void rf_sim_config_init(rf_sim_config* cfg) {
  if (!cfg) return;
  const SimConfig d;
  *cfg = rf_sim_config{};
  cfg->design = "eigstruct";
  cfg->p = d.p;
  cfg->n_train_per_class = d.n_train_per_class;
  cfg->n_test_per_class = 0;
  cfg->replications = d.replications;
  cfg->seed = d.seed;
  cfg->rho = d.rho;
  cfg->folds = d.folds;
  cfg->jobs = 1;
  cfg->eps = d.eps;
}

rf_status rf_simulate(const rf_sim_config* cfg, rf_sim_result** out) {
  return guarded([&] {
    require(cfg, "config");
    require(out, "out");
    SimConfig sc;
    sc.design = parse_design(cfg->design ? cfg->design : "eigstruct");
    sc.p = cfg->p;
    sc.n_train_per_class = cfg->n_train_per_class;
    sc.n_test_per_class = cfg->n_test_per_class > 0 ? cfg->n_test_per_class
                          : sc.design == Design::SemiSup ? 250
                                                         : 500;
    sc.replications = cfg->replications;
    sc.seed = cfg->seed;
    sc.rho = cfg->rho;
    sc.folds = cfg->folds;
    sc.grid = grid_or_default(cfg->grid, cfg->grid_len);
    sc.jobs = cfg->jobs;
    sc.eps = cfg->eps;
    sc.methods.clear();
    if (cfg->methods != nullptr && *cfg->methods != '\0') {
      std::stringstream ss(cfg->methods);
      std::string name;
      while (std::getline(ss, name, ',')) {
        if (!name.empty()) sc.methods.push_back(parse_method(name));
      }
    } else if (sc.design == Design::SemiSup) {
      sc.methods = {Method::RidgeSemiSup, Method::RidgeLabeled};
    } else {
      sc.methods = {Method::Ridge, Method::Rda};
    }
    *out = new rf_sim_result{run_experiment(sc)};
  });
}

void rf_sim_result_free(rf_sim_result* r) { delete r; }
size_t rf_sim_result_methods(const rf_sim_result* r) { return r ? r->result.methods.size() : 0; }
size_t rf_sim_result_replications(const rf_sim_result* r) {
  return r ? static_cast<size_t>(r->result.config.replications) : 0;
}
const char* rf_sim_result_method_name(const rf_sim_result* r, size_t m) {
  return r && m < r->result.methods.size() ? to_string(r->result.methods[m].method) : "";
}

rf_status rf_sim_result_summary(const rf_sim_result* r, size_t m, double* mean, double* sd,
                                double* se) {
  return guarded([&] {
    require(r, "result");
    if (m >= r->result.methods.size()) fail(ErrorCode::InvalidInput, "method out of range");
    const auto& mr = r->result.methods[m];
    if (mean) *mean = mr.mean;
    if (sd) *sd = mr.sd;
    if (se) *se = mr.se;
  });
}

double rf_sim_result_cer(const rf_sim_result* r, size_t m, size_t rep) {
  if (!r || m >= r->result.methods.size() || rep >= r->result.methods[m].cer.size()) {
    return std::nan("");
  }
  return r->result.methods[m].cer[rep];
}

char* rf_sim_result_csv(const rf_sim_result* r) {
  if (!r) return nullptr;
  const std::string csv = format_csv(r->result);
  char* out = static_cast<char*>(std::malloc(csv.size() + 1));
  if (out) std::memcpy(out, csv.c_str(), csv.size() + 1);
  return out;
}

void rf_string_free(char* s) { std::free(s); }

}  // extern "C"
