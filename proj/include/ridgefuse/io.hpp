#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ridgefuse/classify.hpp"
#include "ridgefuse/estimator.hpp"
#include "ridgefuse/semisup.hpp"

namespace ridgefuse {

/// A CSV dataset: header row, optional leading `label` column (empty cells
/// mark unlabeled rows), numeric features.
struct Dataset {
  std::vector<std::string> feature_names;
  Eigen::MatrixXd x;
  std::vector<std::optional<int>> labels;  // raw class ids; all empty without a label column
  bool has_label_column = false;

  std::size_t num_labeled() const;
  /// Sorted distinct class ids among labeled rows.
  std::vector<int> class_ids() const;
};

Dataset parse_csv(std::istream& in);
Dataset read_csv(const std::string& path);

/// Labeled rows with ids mapped to 1..C through `class_ids`, plus the
/// unlabeled rows and their positions in the original file.
struct SplitDataset {
  SemiData data;
  std::vector<int> class_ids;
  std::vector<std::size_t> labeled_rows;
  std::vector<std::size_t> unlabeled_rows;
};

/// Uses dataset.class_ids() when `class_ids` is empty. Labels not present
/// in `class_ids` are InvalidInput.
SplitDataset split_dataset(const Dataset& dataset, std::vector<int> class_ids = {});

/// Persisted model: parameters, penalty, class ids and provenance.
struct ModelFile {
  ModelParams params;
  PenaltyPair penalty;
  std::vector<int> class_ids;
  std::optional<Standardization> standardization;
  std::optional<std::uint64_t> seed;
  std::string tool_version;
  bool converged = true;
};

std::string model_to_json(const ModelFile& model);
ModelFile model_from_json(const std::string& text);
void write_model(const ModelFile& model, const std::string& path);
ModelFile read_model(const std::string& path);

/// Applies the model's stored standardization, if any.
Eigen::MatrixXd model_features(const ModelFile& model, const Eigen::MatrixXd& x);

const char* tool_version() noexcept;

}  // namespace ridgefuse
