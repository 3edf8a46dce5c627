#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "gaitpose/error.hpp"

namespace gaitpose {

struct PcaTransform {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // k x d, orthonormal rows
  Eigen::VectorXd explained_variance;
  double total_variance = 0.0;

  Eigen::Index k() const { return components.rows(); }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const {
    return (X.rowwise() - mean.transpose()) * components.transpose();
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return components * (x - mean); }

  Eigen::MatrixXd invert(const Eigen::MatrixXd& Z) const {
    return (Z * components).rowwise() + mean.transpose();
  }
};

namespace detail {

/// Eigenpairs of the sample covariance, largest first. Each eigenvector's
/// largest-magnitude entry is made positive so the basis is reproducible.
inline PcaTransform pca_basis(const Eigen::MatrixXd& X) {
  if (X.rows() < 2) throw Error(ErrorCode::TooFewSamples, "PCA needs at least two samples");
  PcaTransform t;
  t.mean = X.colwise().mean().transpose();
  const Eigen::MatrixXd Xc = X.rowwise() - t.mean.transpose();
  const Eigen::MatrixXd cov = (Xc.transpose() * Xc) / static_cast<double>(X.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::Index d = X.cols();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return eig.eigenvalues()(a) > eig.eigenvalues()(b); });
  t.components.resize(d, d);
  t.explained_variance.resize(d);
  for (Eigen::Index r = 0; r < d; ++r) {
    Eigen::VectorXd v = eig.eigenvectors().col(order[static_cast<std::size_t>(r)]);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    t.components.row(r) = v.transpose();
    t.explained_variance(r) = std::max(0.0, eig.eigenvalues()(order[static_cast<std::size_t>(r)]));
  }
  t.total_variance = t.explained_variance.sum();
  return t;
}

inline PcaTransform truncate(PcaTransform t, Eigen::Index k) {
  t.components.conservativeResize(k, Eigen::NoChange);
  t.explained_variance.conservativeResize(k);
  return t;
}

}  // namespace detail

inline PcaTransform fit_pca(const Eigen::MatrixXd& X, int k) {
  if (k < 1 || k > X.cols()) {
    throw Error(ErrorCode::InvalidArgument, "PCA component count must be in 1.." + std::to_string(X.cols()));
  }
  return detail::truncate(detail::pca_basis(X), k);
}

/// Smallest k whose components explain at least `fraction` of the variance.
inline PcaTransform fit_pca_fraction(const Eigen::MatrixXd& X, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw Error(ErrorCode::InvalidArgument, "variance fraction must be in (0, 1]");
  PcaTransform t = detail::pca_basis(X);
  Eigen::Index k = t.explained_variance.size();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < t.explained_variance.size(); ++i) {
    acc += t.explained_variance(i);
    if (t.total_variance <= 0.0 || acc >= fraction * t.total_variance) {
      k = i + 1;
      break;
    }
  }
  return detail::truncate(std::move(t), k);
}

inline double explained_fraction(const PcaTransform& t) {
  return t.total_variance > 0.0 ? t.explained_variance.sum() / t.total_variance : 1.0;
}

}  // namespace gaitpose
