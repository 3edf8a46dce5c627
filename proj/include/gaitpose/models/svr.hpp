#pragma once

// epsilon-SVR trained on its dual by sequential minimal optimisation with
// second-order working-set selection. The 2n dual variables are stacked as
// beta = [alpha; alpha*] with signs s = [+1; -1], giving
//   min 1/2 beta' Q beta + p' beta,  Q_ij = s_i s_j K_ij,
//   p = [eps - y; eps + y],  s' beta = 0,  0 <= beta <= C.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gaitpose/error.hpp"
#include "gaitpose/models/dataset.hpp"

namespace gaitpose {

enum class KernelKind { Linear, Rbf, Poly };

inline const char* to_string(KernelKind k) {
  switch (k) {
    case KernelKind::Linear: return "linear";
    case KernelKind::Rbf: return "rbf";
    case KernelKind::Poly: return "poly";
  }
  return "?";
}

inline KernelKind parse_kernel(const std::string& s) {
  if (s == "linear") return KernelKind::Linear;
  if (s == "rbf") return KernelKind::Rbf;
  if (s == "poly") return KernelKind::Poly;
  throw Error(ErrorCode::InvalidArgument, "unknown kernel '" + s + "' (linear, rbf, poly)");
}

struct Kernel {
  KernelKind kind = KernelKind::Rbf;
  double gamma = 1.0;
  int degree = 3;
  double coef0 = 0.0;

  template <typename A, typename B>
  double operator()(const A& a, const B& b) const {
    switch (kind) {
      case KernelKind::Linear: return a.dot(b);
      case KernelKind::Rbf: return std::exp(-gamma * (a - b).squaredNorm());
      case KernelKind::Poly: return std::pow(gamma * a.dot(b) + coef0, degree);
    }
    return 0.0;
  }
};

/// gamma = 1 / (d * var(X)), the scale heuristic behind "medium Gaussian" presets.
inline double medium_gaussian_gamma(const Eigen::MatrixXd& X) {
  const double mean = X.mean();
  const double var = (X.array() - mean).square().mean();
  return var > 0.0 ? 1.0 / (static_cast<double>(X.cols()) * var) : 1.0;
}

struct SvrConfig {
  Kernel kernel;
  double C = 1.0;
  double epsilon = 0.1;
  /// Stop when the maximal KKT violation drops below this.
  double tol = 1e-3;
  long max_iter = 100000;
};

struct SvrModel {
  Kernel kernel;
  double C = 1.0;
  double epsilon = 0.1;
  Eigen::MatrixXd support_vectors;  // rows
  Eigen::VectorXd dual_coef;        // alpha - alpha*
  double bias = 0.0;
  bool converged = true;
  long iterations = 0;

  double predict(const Eigen::VectorXd& x) const {
    double v = bias;
    for (Eigen::Index i = 0; i < support_vectors.rows(); ++i) {
      v += dual_coef(i) * kernel(support_vectors.row(i).transpose(), x);
    }
    return v;
  }
};

inline SvrModel fit_svr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const SvrConfig& cfg) {
  if (!(cfg.C > 0.0)) throw Error(ErrorCode::InvalidArgument, "C must be positive");
  if (cfg.epsilon < 0.0) throw Error(ErrorCode::InvalidArgument, "epsilon must be nonnegative");
  if (cfg.kernel.kind != KernelKind::Linear && !(cfg.kernel.gamma > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "gamma must be positive");
  }
  const Eigen::Index n = X.rows();
  if (n < 1 || y.size() != n) throw Error(ErrorCode::LengthMismatch, "X and y disagree");

  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      K(i, j) = K(j, i) = cfg.kernel(X.row(i).transpose(), X.row(j).transpose());
    }
  }

  const Eigen::Index m = 2 * n;
  constexpr double tau = 1e-12;
  const double C = cfg.C;
  auto sign = [n](Eigen::Index t) { return t < n ? 1.0 : -1.0; };
  auto base = [n](Eigen::Index t) { return t < n ? t : t - n; };
  auto Q = [&](Eigen::Index a, Eigen::Index b) { return sign(a) * sign(b) * K(base(a), base(b)); };

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd G(m);
  for (Eigen::Index t = 0; t < n; ++t) {
    G(t) = cfg.epsilon - y(t);
    G(t + n) = cfg.epsilon + y(t);
  }

  auto at_upper = [&](Eigen::Index t) { return beta(t) >= C; };
  auto at_lower = [&](Eigen::Index t) { return beta(t) <= 0.0; };

  SvrModel model;
  model.kernel = cfg.kernel;
  model.C = C;
  model.epsilon = cfg.epsilon;
  model.converged = false;
  long iter = 0;
  for (; iter < cfg.max_iter; ++iter) {
    // i maximises -s_t G_t over the "up" set.
    double gmax = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < m; ++t) {
      if (sign(t) > 0) {
        if (!at_upper(t) && -G(t) >= gmax) {
          gmax = -G(t);
          i = t;
        }
      } else if (!at_lower(t) && G(t) >= gmax) {
        gmax = G(t);
        i = t;
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    Eigen::Index j = -1;
    double best_obj = std::numeric_limits<double>::infinity();
    if (i >= 0) {
      const double qii = K(base(i), base(i));
      for (Eigen::Index t = 0; t < m; ++t) {
        const double qit = Q(i, t);
        const double qtt = K(base(t), base(t));
        if (sign(t) > 0) {
          if (at_lower(t)) continue;
          const double diff = gmax + G(t);
          gmax2 = std::max(gmax2, G(t));
          if (diff > 0) {
            double quad = qii + qtt - 2.0 * sign(i) * qit;
            if (quad <= 0) quad = tau;
            const double obj = -(diff * diff) / quad;
            if (obj <= best_obj) {
              best_obj = obj;
              j = t;
            }
          }
        } else {
          if (at_upper(t)) continue;
          const double diff = gmax - G(t);
          gmax2 = std::max(gmax2, -G(t));
          if (diff > 0) {
            double quad = qii + qtt + 2.0 * sign(i) * qit;
            if (quad <= 0) quad = tau;
            const double obj = -(diff * diff) / quad;
            if (obj <= best_obj) {
              best_obj = obj;
              j = t;
            }
          }
        }
      }
    }
    if (i < 0 || j < 0 || gmax + gmax2 < cfg.tol) {
      model.converged = true;
      break;
    }

    const double old_i = beta(i);
    const double old_j = beta(j);
    const double qij = Q(i, j);
    const double qii = K(base(i), base(i));
    const double qjj = K(base(j), base(j));
    if (sign(i) != sign(j)) {
      double quad = qii + qjj + 2.0 * qij;
      if (quad <= 0) quad = tau;
      const double delta = (-G(i) - G(j)) / quad;
      const double diff = beta(i) - beta(j);
      beta(i) += delta;
      beta(j) += delta;
      if (diff > 0) {
        if (beta(j) < 0) {
          beta(j) = 0;
          beta(i) = diff;
        }
      } else if (beta(i) < 0) {
        beta(i) = 0;
        beta(j) = -diff;
      }
      if (diff > 0) {
        if (beta(i) > C) {
          beta(i) = C;
          beta(j) = C - diff;
        }
      } else if (beta(j) > C) {
        beta(j) = C;
        beta(i) = C + diff;
      }
    } else {
      double quad = qii + qjj - 2.0 * qij;
      if (quad <= 0) quad = tau;
      const double delta = (G(i) - G(j)) / quad;
      const double sum = beta(i) + beta(j);
      beta(i) -= delta;
      beta(j) += delta;
      if (sum > C) {
        if (beta(i) > C) {
          beta(i) = C;
          beta(j) = sum - C;
        }
      } else if (beta(j) < 0) {
        beta(j) = 0;
        beta(i) = sum;
      }
      if (sum > C) {
        if (beta(j) > C) {
          beta(j) = C;
          beta(i) = sum - C;
        }
      } else if (beta(i) < 0) {
        beta(i) = 0;
        beta(j) = sum;
      }
    }
    const double di = beta(i) - old_i;
    const double dj = beta(j) - old_j;
    for (Eigen::Index t = 0; t < m; ++t) G(t) += Q(i, t) * di + Q(j, t) * dj;
  }
  model.iterations = iter;

  // Offset from free variables, else the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  int n_free = 0;
  for (Eigen::Index t = 0; t < m; ++t) {
    const double yg = sign(t) * G(t);
    if (at_upper(t)) {
      if (sign(t) < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (at_lower(t)) {
      if (sign(t) > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / n_free : 0.5 * (ub + lb);
  model.bias = -rho;

  std::vector<Eigen::Index> sv;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (beta(t) - beta(t + n) != 0.0) sv.push_back(t);
  }
  model.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), X.cols());
  model.dual_coef.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t r = 0; r < sv.size(); ++r) {
    model.support_vectors.row(static_cast<Eigen::Index>(r)) = X.row(sv[r]);
    model.dual_coef(static_cast<Eigen::Index>(r)) = beta(sv[r]) - beta(sv[r] + n);
  }
  return model;
}

inline SvrModel fit_svr(const Dataset& ds, const SvrConfig& cfg) { return fit_svr(ds.X, ds.y, cfg); }

}  // namespace gaitpose
