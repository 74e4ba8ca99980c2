/* C interface to the ridge-fusion precision estimator, QDA classifier,
 * semi-supervised penalized EM and simulation harness.
 *
 * All objects are opaque handles created by the library and released with
 * the matching *_free function. Every fallible call returns an rf_status;
 * on failure rf_last_error() describes the problem for the calling thread.
 * Class labels crossing this interface are the integer ids found in the
 * data, not internal indices. */
#ifndef RIDGEFUSE_H
#define RIDGEFUSE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(RIDGEFUSE_BUILDING_LIBRARY)
#    define RF_API __declspec(dllexport)
#  else
#    define RF_API __declspec(dllimport)
#  endif
#else
#  define RF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rf_status {
  RF_OK = 0,
  RF_ERR_INVALID_INPUT = 1,
  RF_ERR_POSITIVE_DEFINITE_REQUIRED = 2,
  RF_ERR_EIGEN_NOT_CONVERGED = 3,
  RF_ERR_NOT_CONVERGED = 4,
  RF_ERR_DEGENERATE_VARIABLE = 5,
  RF_ERR_MISSING_CLASS = 6,
  RF_ERR_INSUFFICIENT_CLASS_SIZE = 7,
  RF_ERR_TUNING_FAILED = 8,
  RF_ERR_SINGULAR_ESTIMATE = 9,
  RF_ERR_EMPTY_COMPONENT = 10,
  RF_ERR_NUMERICAL_UNDERFLOW = 11,
  RF_ERR_DIMENSION_MISMATCH = 12,
  RF_ERR_PARSE = 13,
  RF_ERR_IO = 14,
  RF_ERR_INTERNAL = 99
} rf_status;

RF_API const char* rf_version(void);
RF_API const char* rf_status_name(rf_status status);
/* Message for the most recent failure on this thread ("" if none). */
RF_API const char* rf_last_error(void);

/* ---- datasets ---------------------------------------------------------- */

typedef struct rf_dataset rf_dataset;

/* CSV with a header row; an optional first column named "label" holds
 * integer class ids, empty for unlabeled rows. */
RF_API rf_status rf_dataset_read_csv(const char* path, rf_dataset** out);
/* x is rows*dim, row-major. labels may be NULL (all unlabeled); otherwise
 * has_label[i] == 0 marks row i unlabeled (has_label NULL: all labeled). */
RF_API rf_status rf_dataset_create(size_t rows, size_t dim, const double* x,
                                   const int* labels, const unsigned char* has_label,
                                   rf_dataset** out);
RF_API void rf_dataset_free(rf_dataset* ds);
RF_API size_t rf_dataset_rows(const rf_dataset* ds);
RF_API size_t rf_dataset_dim(const rf_dataset* ds);
RF_API size_t rf_dataset_num_labeled(const rf_dataset* ds);
RF_API rf_status rf_dataset_label(const rf_dataset* ds, size_t row, int* label,
                                  int* has_label);

/* ---- supervised fit ---------------------------------------------------- */

typedef struct rf_model rf_model;

typedef struct rf_fit_options {
  double lambda1;
  double lambda2;
  int lambda2_infinite; /* nonzero: all precisions constrained equal */
  int standardize;      /* nonzero: fit on standardized variables */
  double eps;
  int max_sweeps;
} rf_fit_options;

typedef struct rf_fit_info {
  int iterations;
  double objective;
  int converged;
} rf_fit_info;

RF_API void rf_fit_options_init(rf_fit_options* opts);
/* Every row must be labeled. */
RF_API rf_status rf_fit(const rf_dataset* ds, const rf_fit_options* opts, rf_model** out,
                        rf_fit_info* info);

RF_API void rf_model_free(rf_model* model);
RF_API size_t rf_model_classes(const rf_model* model);
RF_API size_t rf_model_dim(const rf_model* model);
RF_API int rf_model_class_label(const rf_model* model, size_t c);
RF_API double rf_model_pi(const rf_model* model, size_t c);
/* Copies the dim*dim precision of class index c (0-based) into out. */
RF_API rf_status rf_model_theta(const rf_model* model, size_t c, double* out);
RF_API rf_status rf_model_mu(const rf_model* model, size_t c, double* out);
RF_API void rf_model_penalty(const rf_model* model, double* lambda1, double* lambda2);
RF_API int rf_model_is_standardized(const rf_model* model);
RF_API void rf_model_set_seed(rf_model* model, uint64_t seed);
RF_API rf_status rf_model_write_json(const rf_model* model, const char* path);
RF_API rf_status rf_model_read_json(const char* path, rf_model** out);

/* ---- classification ---------------------------------------------------- */

/* Writes one predicted class id per dataset row. */
RF_API rf_status rf_classify(const rf_model* model, const rf_dataset* ds, int* out_labels);
RF_API rf_status rf_cer(const int* predictions, const int* truth, size_t n, double* out);

/* ---- tuning ------------------------------------------------------------ */

typedef struct rf_tune_result rf_tune_result;

typedef struct rf_tune_options {
  const double* grid1;
  size_t grid1_len;
  const double* grid2;
  size_t grid2_len;
  int lambda2_include_infinite; /* append the infinite-fusion point to grid2 */
  int folds;
  uint64_t seed;
  double eps;
  int jobs;
  int center_on_training_mean; /* held-out covariance centering */
} rf_tune_options;

/* Defaults: grids {1e-5,...,1e5} are used when the grid pointers are NULL. */
RF_API void rf_tune_options_init(rf_tune_options* opts);
RF_API rf_status rf_tune(const rf_dataset* ds, const rf_tune_options* opts,
                         rf_tune_result** out);
RF_API void rf_tune_result_free(rf_tune_result* result);
/* lambda2 is +INFINITY for the infinite-fusion point. */
RF_API void rf_tune_result_best(const rf_tune_result* result, double* lambda1,
                                double* lambda2, double* score);
RF_API size_t rf_tune_result_size(const rf_tune_result* result);
RF_API rf_status rf_tune_result_row(const rf_tune_result* result, size_t i, double* lambda1,
                                    double* lambda2, double* score, int* ok);

/* ---- semi-supervised clustering ---------------------------------------- */

typedef struct rf_cluster_result rf_cluster_result;

typedef struct rf_cluster_options {
  double lambda1;
  double lambda2;
  int lambda2_infinite;
  int tune; /* nonzero: choose (lambda1, lambda2) by semi-supervised validation likelihood */
  const double* grid1;
  size_t grid1_len;
  const double* grid2;
  size_t grid2_len;
  int folds;
  uint64_t seed;
  double eps;
  double eps_em;
  int max_iterations;
  int jobs;
} rf_cluster_options;

RF_API void rf_cluster_options_init(rf_cluster_options* opts);
/* On RF_ERR_NOT_CONVERGED *out still receives the last EM iterate. */
RF_API rf_status rf_cluster(const rf_dataset* ds, const rf_cluster_options* opts,
                            rf_cluster_result** out);
RF_API void rf_cluster_result_free(rf_cluster_result* result);
/* Borrowed; valid until the result is freed. */
RF_API const rf_model* rf_cluster_result_model(const rf_cluster_result* result);
RF_API size_t rf_cluster_result_unlabeled(const rf_cluster_result* result);
/* Position in the input dataset of unlabeled row i. */
RF_API size_t rf_cluster_result_row_index(const rf_cluster_result* result, size_t i);
/* n_unlabeled * classes values, row-major. */
RF_API rf_status rf_cluster_result_responsibilities(const rf_cluster_result* result,
                                                    double* out);
RF_API int rf_cluster_result_iterations(const rf_cluster_result* result);
RF_API int rf_cluster_result_converged(const rf_cluster_result* result);

/* ---- simulation -------------------------------------------------------- */

typedef struct rf_sim_result rf_sim_result;

typedef struct rf_sim_config {
  const char* design;  /* eigstruct, eig-vs-tridiag, identity, blockdiag, tridiag, semisup */
  const char* methods; /* comma separated; NULL for the design's default */
  int p;
  int n_train_per_class;
  int n_test_per_class; /* unlabeled per class for semisup; <= 0 for the design default */
  int replications;
  uint64_t seed;
  double rho;
  int folds;
  const double* grid; /* both lambda axes; NULL for {1e-5,...,1e5} */
  size_t grid_len;
  int jobs;
  double eps;
} rf_sim_config;

RF_API void rf_sim_config_init(rf_sim_config* cfg);
RF_API rf_status rf_simulate(const rf_sim_config* cfg, rf_sim_result** out);
RF_API void rf_sim_result_free(rf_sim_result* result);
RF_API size_t rf_sim_result_methods(const rf_sim_result* result);
RF_API size_t rf_sim_result_replications(const rf_sim_result* result);
RF_API const char* rf_sim_result_method_name(const rf_sim_result* result, size_t m);
RF_API rf_status rf_sim_result_summary(const rf_sim_result* result, size_t m, double* mean,
                                       double* sd, double* se);
RF_API double rf_sim_result_cer(const rf_sim_result* result, size_t m, size_t r);
/* Machine-readable results; free with rf_string_free. */
RF_API char* rf_sim_result_csv(const rf_sim_result* result);
RF_API void rf_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* RIDGEFUSE_H */
