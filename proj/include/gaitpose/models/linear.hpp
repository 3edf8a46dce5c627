#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "gaitpose/error.hpp"
#include "gaitpose/models/dataset.hpp"
#include "gaitpose/split.hpp"

namespace gaitpose {

struct LinearModel {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  double ridge_lambda = 0.0;
  /// Columns used, in selection order; empty means every column.
  std::vector<int> selected;

  double predict(const Eigen::VectorXd& x) const {
    if (selected.empty()) return intercept + weights.dot(x);
    double v = intercept;
    for (std::size_t i = 0; i < selected.size(); ++i) {
      v += weights(static_cast<Eigen::Index>(i)) * x(selected[i]);
    }
    return v;
  }
};

/// Least squares with an unpenalised intercept:
/// minimises |y - Xw - b|^2 + lambda |w|^2.
inline LinearModel fit_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda) {
  if (lambda < 0.0) throw Error(ErrorCode::InvalidArgument, "ridge lambda must be nonnegative");
  if (X.rows() != y.size() || X.rows() < 1) throw Error(ErrorCode::LengthMismatch, "X and y disagree");
  const Eigen::RowVectorXd xmean = X.colwise().mean();
  const double ymean = y.mean();
  const Eigen::MatrixXd Xc = X.rowwise() - xmean;
  const Eigen::VectorXd yc = y.array() - ymean;

  LinearModel m;
  m.ridge_lambda = lambda;
  if (lambda == 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xc);
    qr.setThreshold(1e-10);
    if (qr.rank() < X.cols()) {
      throw Error(ErrorCode::SingularSystem, "design matrix has rank " + std::to_string(qr.rank()) + " < " +
                                                 std::to_string(X.cols()) + "; use a ridge penalty");
    }
    m.weights = qr.solve(yc);
  } else {
    Eigen::MatrixXd A = Xc.transpose() * Xc;
    A.diagonal().array() += lambda;
    m.weights = A.llt().solve(Xc.transpose() * yc);
  }
  m.intercept = ymean - xmean.dot(m.weights);
  return m;
}

inline LinearModel fit_linear(const Dataset& ds, double lambda) { return fit_linear(ds.X, ds.y, lambda); }

namespace detail {

inline Eigen::MatrixXd columns(const Eigen::MatrixXd& X, const std::vector<int>& cols) {
  Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = X.col(cols[c]);
  return out;
}

/// K-fold cross-validated MSE of ordinary least squares on `cols` (intercept
/// only when `cols` is empty). A tiny ridge term keeps folds with collinear
/// columns solvable.
inline double cv_mse(const Dataset& ds, const std::vector<int>& cols, const SplitPlan& plan) {
  double sse = 0.0;
  for (int fold = 0; fold < plan.k; ++fold) {
    const auto train = plan.complement(fold);
    const auto test = plan.members(fold);
    Eigen::VectorXd ytr(static_cast<Eigen::Index>(train.size()));
    for (std::size_t i = 0; i < train.size(); ++i) ytr(static_cast<Eigen::Index>(i)) = ds.y(static_cast<Eigen::Index>(train[i]));
    if (cols.empty()) {
      const double mean = ytr.mean();
      for (auto i : test) sse += std::pow(ds.y(static_cast<Eigen::Index>(i)) - mean, 2);
      continue;
    }
    Eigen::MatrixXd Xtr(static_cast<Eigen::Index>(train.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < train.size(); ++i) {
      for (std::size_t c = 0; c < cols.size(); ++c) {
        Xtr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = ds.X(static_cast<Eigen::Index>(train[i]), cols[c]);
      }
    }
    const LinearModel m = fit_linear(Xtr, ytr, 1e-10);
    for (auto i : test) {
      double pred = m.intercept;
      for (std::size_t c = 0; c < cols.size(); ++c) {
        pred += m.weights(static_cast<Eigen::Index>(c)) * ds.X(static_cast<Eigen::Index>(i), cols[c]);
      }
      sse += std::pow(ds.y(static_cast<Eigen::Index>(i)) - pred, 2);
    }
  }
  return sse / static_cast<double>(ds.rows());
}

}  // namespace detail

struct StepwiseConfig {
  int folds = 5;
  /// Stop when the best relative CV-MSE improvement falls below this.
  double tol = 1e-3;
  std::uint64_t seed = 0;
};

/// Greedy forward selection by cross-validated MSE. The first feature is
/// always taken; later ones must improve CV-MSE by at least `tol` relative.
inline LinearModel fit_stepwise(const Dataset& ds, const StepwiseConfig& cfg = {}) {
  SplitPlan shape;
  shape.kind = SplitKind::KFold;
  shape.k = std::min<int>(cfg.folds, static_cast<int>(ds.rows()));
  if (shape.k < 2) throw Error(ErrorCode::TooFewSamples, "stepwise selection needs at least 2 samples");
  const SplitPlan plan = make_split(static_cast<std::size_t>(ds.rows()), shape, cfg.seed);

  std::vector<int> selected;
  std::vector<bool> used(static_cast<std::size_t>(ds.cols()), false);
  double current = detail::cv_mse(ds, selected, plan);
  while (selected.size() < static_cast<std::size_t>(ds.cols())) {
    int best = -1;
    double best_mse = std::numeric_limits<double>::infinity();
    for (int j = 0; j < ds.cols(); ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      auto trial = selected;
      trial.push_back(j);
      const double mse = detail::cv_mse(ds, trial, plan);
      if (mse < best_mse) {
        best_mse = mse;
        best = j;
      }
    }
    if (best < 0) break;
    if (!selected.empty()) {
      const double improvement = current > 0.0 ? (current - best_mse) / current : 0.0;
      if (!(improvement >= cfg.tol)) break;
    }
    selected.push_back(best);
    used[static_cast<std::size_t>(best)] = true;
    current = best_mse;
  }

  LinearModel m = fit_linear(detail::columns(ds.X, selected), ds.y, 1e-10);
  m.ridge_lambda = 1e-10;
  m.selected = selected;
  return m;
}

}  // namespace gaitpose
