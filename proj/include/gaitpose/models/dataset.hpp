#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gaitpose/error.hpp"
#include "gaitpose/spectral_features.hpp"

namespace gaitpose {

enum class Task { Regression, Classification };

inline const char* to_string(Task t) { return t == Task::Regression ? "regression" : "classification"; }

struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;

  bool identity() const { return mean.empty(); }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    if (identity()) return x;
    Eigen::VectorXd out(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      out(j) = (x(j) - mean[static_cast<std::size_t>(j)]) / scale[static_cast<std::size_t>(j)];
    }
    return out;
  }
};

/// Design matrix plus target. Features are columns of X after column
/// selection and (optionally) z-scoring; `input_columns` maps each retained
/// column back to the source table.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Task task = Task::Regression;
  std::vector<std::string> feature_names;
  std::vector<std::string> input_names;
  std::vector<int> input_columns;
  Standardization standardization;
  std::string target;
  /// Original label for each class index (classification only); y holds indices.
  std::vector<double> classes;

  Eigen::Index rows() const { return X.rows(); }
  Eigen::Index cols() const { return X.cols(); }
  int n_classes() const { return static_cast<int>(classes.size()); }
};

namespace detail {

inline void index_classes(Dataset& ds) {
  std::vector<double> labels(ds.y.data(), ds.y.data() + ds.y.size());
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  ds.classes = labels;
  for (Eigen::Index i = 0; i < ds.y.size(); ++i) {
    ds.y(i) = static_cast<double>(std::lower_bound(labels.begin(), labels.end(), ds.y(i)) - labels.begin());
  }
}

}  // namespace detail

/// Dataset straight from a matrix. With `standardize` false the features are
/// used as given (identity standardization).
inline Dataset make_dataset(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Task task = Task::Regression,
                            bool standardize = false, std::vector<std::string> names = {}) {
  if (X.rows() != y.size()) throw Error(ErrorCode::LengthMismatch, "X rows and y length differ");
  if (X.rows() < 1 || X.cols() < 1) throw Error(ErrorCode::TooFewSamples, "empty dataset");
  if (!X.allFinite() || !y.allFinite()) throw Error(ErrorCode::NonFiniteValue, "dataset has non-finite entries");
  Dataset ds;
  ds.task = task;
  ds.y = y;
  if (names.empty()) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) names.push_back("x" + std::to_string(j));
  }
  ds.input_names = names;
  ds.feature_names = names;
  for (Eigen::Index j = 0; j < X.cols(); ++j) ds.input_columns.push_back(static_cast<int>(j));
  ds.X = X;
  if (standardize) {
    ds.standardization.mean.resize(static_cast<std::size_t>(X.cols()));
    ds.standardization.scale.resize(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      const double m = X.col(j).mean();
      const double var = X.rows() > 1 ? (X.col(j).array() - m).square().sum() / static_cast<double>(X.rows() - 1) : 0.0;
      const double s = var > 0.0 ? std::sqrt(var) : 1.0;
      ds.standardization.mean[static_cast<std::size_t>(j)] = m;
      ds.standardization.scale[static_cast<std::size_t>(j)] = s;
      ds.X.col(j) = (X.col(j).array() - m) / s;
    }
  }
  if (task == Task::Classification) detail::index_classes(ds);
  return ds;
}

/// Builds a dataset for one target column of a feature table. Rows missing the
/// target are skipped; zero-variance features are dropped and reported.
inline Dataset make_dataset(const FeatureTable& table, const std::string& target, Task task,
                            bool standardize = true, std::vector<std::string>* warnings = nullptr) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (table.rows[i].targets.count(target)) rows.push_back(i);
  }
  if (rows.empty()) throw Error(ErrorCode::TooFewSamples, "no rows carry target '" + target + "'");
  const std::size_t d = table.feature_names.size();

  std::vector<int> keep;
  for (std::size_t j = 0; j < d; ++j) {
    const double first = table.rows[rows[0]].values[j];
    bool varies = false;
    for (std::size_t r : rows) {
      if (table.rows[r].values[j] != first) {
        varies = true;
        break;
      }
    }
    if (varies) {
      keep.push_back(static_cast<int>(j));
    } else if (warnings) {
      warnings->push_back("dropping zero-variance feature " + table.feature_names[j]);
    }
  }
  if (keep.empty()) throw Error(ErrorCode::TooFewSamples, "every feature is constant");

  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(keep.size()));
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  std::vector<std::string> names;
  for (int j : keep) names.push_back(table.feature_names[static_cast<std::size_t>(j)]);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = table.rows[rows[r]];
    for (std::size_t c = 0; c < keep.size(); ++c) {
      X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row.values[static_cast<std::size_t>(keep[c])];
    }
    y(static_cast<Eigen::Index>(r)) = row.targets.at(target);
  }
  Dataset ds = make_dataset(X, y, task, standardize, names);
  ds.input_names = table.feature_names;
  ds.input_columns = keep;
  ds.target = target;
  return ds;
}

inline Dataset subset(const Dataset& ds, const std::vector<std::size_t>& idx) {
  Dataset out = ds;
  out.X.resize(static_cast<Eigen::Index>(idx.size()), ds.X.cols());
  out.y.resize(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    out.X.row(static_cast<Eigen::Index>(r)) = ds.X.row(static_cast<Eigen::Index>(idx[r]));
    out.y(static_cast<Eigen::Index>(r)) = ds.y(static_cast<Eigen::Index>(idx[r]));
  }
  return out;
}

/// Maps gmfcs levels 1..5 onto three bins: {1} -> 0, {2,3} -> 1, {4,5} -> 2.
inline int cluster_gmfcs(int level) {
  if (level < 1 || level > 5) throw Error(ErrorCode::BadLevel, "gmfcs level " + std::to_string(level) + " not in 1..5");
  if (level == 1) return 0;
  return level <= 3 ? 1 : 2;
}

}  // namespace gaitpose
