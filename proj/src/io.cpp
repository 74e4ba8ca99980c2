#include "ridgefuse/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ridgefuse {

using nlohmann::json;

const char* tool_version() noexcept { return RIDGEFUSE_VERSION_STRING; }

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

double parse_double(const std::string& cell, std::size_t line, std::size_t col) {
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (!cell.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    fail(ErrorCode::ParseError, "line " + std::to_string(line) + ", column " +
                                    std::to_string(col) + ": '" + cell +
                                    "' is not a finite number");
  }
  return v;
}

int parse_int(const std::string& cell, std::size_t line) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    fail(ErrorCode::ParseError,
         "line " + std::to_string(line) + ": label '" + cell + "' is not an integer");
  }
  return v;
}

}  // namespace

std::size_t Dataset::num_labeled() const {
  return static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [](const auto& l) { return l.has_value(); }));
}

std::vector<int> Dataset::class_ids() const {
  std::set<int> ids;
  for (const auto& l : labels) {
    if (l) ids.insert(*l);
  }
  return {ids.begin(), ids.end()};
}

Dataset parse_csv(std::istream& in) {
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_row(line);
    if (!have_header) {
      if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        cells.front() = trim(cells.front().substr(3));
      }
      ds.has_label_column = cells.front() == "label";
      ds.feature_names.assign(cells.begin() + (ds.has_label_column ? 1 : 0), cells.end());
      if (ds.feature_names.empty()) fail(ErrorCode::ParseError, "header has no feature columns");
      have_header = true;
      continue;
    }
    const std::size_t expected = ds.feature_names.size() + (ds.has_label_column ? 1 : 0);
    if (cells.size() != expected) {
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + " has " +
                                      std::to_string(cells.size()) + " fields, expected " +
                                      std::to_string(expected));
    }
    std::size_t col = 0;
    if (ds.has_label_column) {
      ds.labels.push_back(cells[0].empty() ? std::nullopt
                                           : std::optional<int>(parse_int(cells[0], line_no)));
      col = 1;
    } else {
      ds.labels.push_back(std::nullopt);
    }
    std::vector<double> row;
    row.reserve(ds.feature_names.size());
    for (; col < cells.size(); ++col) row.push_back(parse_double(cells[col], line_no, col + 1));
    rows.push_back(std::move(row));
  }
  if (!have_header) fail(ErrorCode::ParseError, "CSV input is empty (a header row is required)");
  ds.x.resize(static_cast<Eigen::Index>(rows.size()),
              static_cast<Eigen::Index>(ds.feature_names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      ds.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return ds;
}

Dataset read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  try {
    return parse_csv(in);
  } catch (const Error& e) {
    fail(e.code(), path + ": " + e.what());
  }
}

SplitDataset split_dataset(const Dataset& dataset, std::vector<int> class_ids) {
  SplitDataset out;
  out.class_ids = class_ids.empty() ? dataset.class_ids() : std::move(class_ids);
  const Eigen::Index p = dataset.x.cols();
  for (std::size_t i = 0; i < dataset.labels.size(); ++i) {
    (dataset.labels[i] ? out.labeled_rows : out.unlabeled_rows).push_back(i);
  }
  out.data.labeled.resize(static_cast<Eigen::Index>(out.labeled_rows.size()), p);
  out.data.unlabeled.resize(static_cast<Eigen::Index>(out.unlabeled_rows.size()), p);
  for (std::size_t r = 0; r < out.labeled_rows.size(); ++r) {
    const std::size_t i = out.labeled_rows[r];
    const auto it = std::find(out.class_ids.begin(), out.class_ids.end(), *dataset.labels[i]);
    if (it == out.class_ids.end()) {
      fail(ErrorCode::InvalidInput,
           "row " + std::to_string(i + 1) + " has unknown class id " +
               std::to_string(*dataset.labels[i]));
    }
    out.data.labels.push_back(static_cast<int>(it - out.class_ids.begin()) + 1);
    out.data.labeled.row(static_cast<Eigen::Index>(r)) = dataset.x.row(static_cast<Eigen::Index>(i));
  }
  for (std::size_t r = 0; r < out.unlabeled_rows.size(); ++r) {
    out.data.unlabeled.row(static_cast<Eigen::Index>(r)) =
        dataset.x.row(static_cast<Eigen::Index>(out.unlabeled_rows[r]));
  }
  return out;
}

namespace {

json vector_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from(const json& j, Eigen::Index p, const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != p) {
    fail(ErrorCode::ParseError, std::string(what) + " must be an array of length " +
                                    std::to_string(p));
  }
  Eigen::VectorXd v(p);
  for (Eigen::Index i = 0; i < p; ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace

std::string model_to_json(const ModelFile& model) {
  const auto& params = model.params;
  const Eigen::Index p = params.dim();
  json j;
  j["classes"] = params.num_classes();
  j["dim"] = p;
  json pi = json::array(), mu = json::array(), theta = json::array();
  for (const auto& k : params.classes) {
    pi.push_back(k.pi);
    mu.push_back(vector_json(k.mu));
    json rows = json::array();
    for (Eigen::Index r = 0; r < p; ++r) {
      rows.push_back(vector_json(k.theta.matrix().row(r).transpose()));
    }
    theta.push_back(std::move(rows));
  }
  j["pi"] = std::move(pi);
  j["mu"] = std::move(mu);
  j["theta"] = std::move(theta);
  j["penalty"] = {{"lambda1", model.penalty.lambda1}};
  if (model.penalty.infinite_fusion()) {
    j["penalty"]["lambda2"] = "inf";
  } else {
    j["penalty"]["lambda2"] = model.penalty.lambda2;
  }
  json meta;
  meta["tool_version"] = model.tool_version.empty() ? tool_version() : model.tool_version;
  meta["seed"] = model.seed ? json(*model.seed) : json(nullptr);
  if (model.standardization) {
    meta["standardization"] = {{"center", vector_json(model.standardization->center)},
                               {"scale", vector_json(model.standardization->scale)}};
  } else {
    meta["standardization"] = nullptr;
  }
  meta["class_labels"] = model.class_ids;
  meta["converged"] = model.converged;
  j["meta"] = std::move(meta);
  return j.dump(2) + "\n";
}

ModelFile model_from_json(const std::string& text) {
  ModelFile out;
  try {
    const json j = json::parse(text);
    const auto num = j.at("classes").get<std::size_t>();
    const auto p = j.at("dim").get<Eigen::Index>();
    if (num < 1 || p < 1) fail(ErrorCode::ParseError, "model must have classes >= 1 and dim >= 1");
    const auto& pi = j.at("pi");
    const auto& mu = j.at("mu");
    const auto& theta = j.at("theta");
    if (pi.size() != num || mu.size() != num || theta.size() != num) {
      fail(ErrorCode::ParseError, "pi, mu and theta must each have one entry per class");
    }
    for (std::size_t c = 0; c < num; ++c) {
      ClassModel k;
      k.pi = pi[c].get<double>();
      k.mu = vector_from(mu[c], p, "mu");
      if (!theta[c].is_array() || static_cast<Eigen::Index>(theta[c].size()) != p) {
        fail(ErrorCode::ParseError, "theta must be p x p");
      }
      Eigen::MatrixXd t(p, p);
      for (Eigen::Index r = 0; r < p; ++r) {
        t.row(r) = vector_from(theta[c][static_cast<std::size_t>(r)], p, "theta row").transpose();
      }
      if (max_abs(t - t.transpose()) > 1e-12 * (1.0 + max_abs(t))) {
        fail(ErrorCode::ParseError, "theta for class " + std::to_string(c + 1) +
                                        " is not symmetric");
      }
      k.theta = SymmetricMatrix(t);
      out.params.classes.push_back(std::move(k));
    }
    const auto& pen = j.at("penalty");
    out.penalty.lambda1 = pen.at("lambda1").get<double>();
    const auto& l2 = pen.at("lambda2");
    if (l2.is_string()) {
      if (l2.get<std::string>() != "inf") fail(ErrorCode::ParseError, "lambda2 must be a number or \"inf\"");
      out.penalty.lambda2 = PenaltyPair::kInfiniteFusion;
    } else {
      out.penalty.lambda2 = l2.get<double>();
    }
    if (j.contains("meta")) {
      const auto& meta = j["meta"];
      if (meta.contains("tool_version")) out.tool_version = meta["tool_version"].get<std::string>();
      if (meta.contains("seed") && !meta["seed"].is_null()) {
        out.seed = meta["seed"].get<std::uint64_t>();
      }
      if (meta.contains("standardization") && !meta["standardization"].is_null()) {
        const auto& st = meta["standardization"];
        out.standardization = Standardization{vector_from(st.at("center"), p, "center"),
                                              vector_from(st.at("scale"), p, "scale")};
      }
      if (meta.contains("class_labels")) {
        out.class_ids = meta["class_labels"].get<std::vector<int>>();
      }
      if (meta.contains("converged")) out.converged = meta["converged"].get<bool>();
    }
    if (out.class_ids.empty()) {
      for (std::size_t c = 0; c < num; ++c) out.class_ids.push_back(static_cast<int>(c) + 1);
    }
    if (out.class_ids.size() != num) {
      fail(ErrorCode::ParseError, "class_labels must have one entry per class");
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("malformed model file: ") + e.what());
  }
  out.params.validate();
  return out;
}

void write_model(const ModelFile& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path + "'");
  out << model_to_json(model);
  if (!out) fail(ErrorCode::IoError, "failed writing '" + path + "'");
}

ModelFile read_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return model_from_json(buf.str());
  } catch (const Error& e) {
    fail(e.code(), path + ": " + e.what());
  }
}

Eigen::MatrixXd model_features(const ModelFile& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.params.dim()) {
    fail(ErrorCode::DimensionMismatch, "data has " + std::to_string(x.cols()) +
                                           " features, model expects " +
                                           std::to_string(model.params.dim()));
  }
  return model.standardization ? apply_standardization(x, *model.standardization) : x;
}

}  // namespace ridgefuse
