#pragma once

// Fully connected regression network: linear input layer, tanh hidden layers,
// identity output unit, trained by mini-batch SGD with momentum on MSE.

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gaitpose/error.hpp"
#include "gaitpose/models/dataset.hpp"
#include "gaitpose/rng.hpp"
#include "gaitpose/text.hpp"

namespace gaitpose {

struct MlpConfig {
  std::vector<int> hidden = {10, 10};
  double learning_rate = 0.01;
  double momentum = 0.9;
  int epochs = 500;
  int batch_size = 16;
  /// Epochs without validation improvement before stopping; 0 disables.
  int patience = 50;
  /// Multiplies the Glorot-uniform bound; 0 gives an all-zero network.
  double init_scale = 1.0;
  bool standardize_target = true;
  std::uint64_t seed = 0;
};

struct MlpModel {
  std::vector<int> layer_sizes;           // input, hidden..., 1
  std::vector<Eigen::MatrixXd> weights;   // weights[l] is sizes[l+1] x sizes[l]
  std::vector<Eigen::VectorXd> biases;
  double target_mean = 0.0;
  double target_scale = 1.0;
  MlpConfig config;
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  int best_epoch = -1;

  std::size_t layers() const { return weights.size(); }

  /// Network output in training units (before undoing target scaling).
  double forward_raw(const Eigen::VectorXd& x) const {
    Eigen::VectorXd a = x;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      Eigen::VectorXd z = weights[l] * a + biases[l];
      a = (l + 1 < weights.size()) ? Eigen::VectorXd(z.array().tanh()) : z;
    }
    return a(0);
  }

  double predict(const Eigen::VectorXd& x) const { return target_mean + target_scale * forward_raw(x); }
};

struct MlpGradient {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  double loss = 0.0;
};

inline MlpModel make_mlp(int inputs, const MlpConfig& cfg) {
  MlpModel m;
  m.config = cfg;
  m.layer_sizes.push_back(inputs);
  for (int h : cfg.hidden) {
    if (h < 1) throw Error(ErrorCode::InvalidArgument, "hidden layer sizes must be positive");
    m.layer_sizes.push_back(h);
  }
  m.layer_sizes.push_back(1);
  Rng rng(cfg.seed);
  for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
    const int fan_in = m.layer_sizes[l];
    const int fan_out = m.layer_sizes[l + 1];
    const double bound = cfg.init_scale * std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd W(fan_out, fan_in);
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = rng.uniform(-bound, bound);
    }
    m.weights.push_back(std::move(W));
    m.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return m;
}

/// Mean squared error (in training units) over the rows of X.
inline double mlp_loss(const MlpModel& m, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double r = m.forward_raw(X.row(i).transpose()) - y(i);
    s += r * r;
  }
  return s / static_cast<double>(X.rows());
}

/// Backpropagated gradient of mlp_loss with respect to every weight and bias.
inline MlpGradient mlp_gradient(const MlpModel& m, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const std::size_t L = m.layers();
  MlpGradient g;
  for (std::size_t l = 0; l < L; ++l) {
    g.weights.push_back(Eigen::MatrixXd::Zero(m.weights[l].rows(), m.weights[l].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(m.biases[l].size()));
  }
  const double inv_n = 1.0 / static_cast<double>(X.rows());
  std::vector<Eigen::VectorXd> act(L + 1);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    act[0] = X.row(i).transpose();
    for (std::size_t l = 0; l < L; ++l) {
      Eigen::VectorXd z = m.weights[l] * act[l] + m.biases[l];
      act[l + 1] = (l + 1 < L) ? Eigen::VectorXd(z.array().tanh()) : z;
    }
    const double r = act[L](0) - y(i);
    g.loss += r * r * inv_n;
    Eigen::VectorXd delta = Eigen::VectorXd::Constant(1, 2.0 * r * inv_n);
    for (std::size_t l = L; l-- > 0;) {
      g.weights[l].noalias() += delta * act[l].transpose();
      g.biases[l] += delta;
      if (l > 0) {
        Eigen::VectorXd back = m.weights[l].transpose() * delta;
        delta = back.array() * (1.0 - act[l].array().square());
      }
    }
  }
  return g;
}

/// Trains on `train`; `val`, when given, drives early stopping and the
/// returned parameters are those with the lowest validation loss.
inline MlpModel fit_mlp(const Dataset& train, const Dataset* val, const MlpConfig& cfg) {
  if (train.rows() < 1) throw Error(ErrorCode::TooFewSamples, "empty training set");
  MlpModel m = make_mlp(static_cast<int>(train.cols()), cfg);
  if (cfg.standardize_target) {
    m.target_mean = train.y.mean();
    const double var = (train.y.array() - m.target_mean).square().mean();
    m.target_scale = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  const Eigen::VectorXd ytr = (train.y.array() - m.target_mean) / m.target_scale;
  Eigen::VectorXd yval;
  if (val) yval = (val->y.array() - m.target_mean) / m.target_scale;

  std::vector<Eigen::MatrixXd> vel_w;
  std::vector<Eigen::VectorXd> vel_b;
  for (std::size_t l = 0; l < m.layers(); ++l) {
    vel_w.push_back(Eigen::MatrixXd::Zero(m.weights[l].rows(), m.weights[l].cols()));
    vel_b.push_back(Eigen::VectorXd::Zero(m.biases[l].size()));
  }

  Rng rng(Rng::derive(cfg.seed, 1));
  auto order = iota_indices(static_cast<std::size_t>(train.rows()));
  const auto batch = static_cast<std::size_t>(std::max(1, cfg.batch_size));
  MlpModel best = m;
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      Eigen::MatrixXd Xb(static_cast<Eigen::Index>(end - start), train.cols());
      Eigen::VectorXd yb(static_cast<Eigen::Index>(end - start));
      for (std::size_t r = start; r < end; ++r) {
        Xb.row(static_cast<Eigen::Index>(r - start)) = train.X.row(static_cast<Eigen::Index>(order[r]));
        yb(static_cast<Eigen::Index>(r - start)) = ytr(static_cast<Eigen::Index>(order[r]));
      }
      const MlpGradient g = mlp_gradient(m, Xb, yb);
      for (std::size_t l = 0; l < m.layers(); ++l) {
        vel_w[l] = cfg.momentum * vel_w[l] - cfg.learning_rate * g.weights[l];
        vel_b[l] = cfg.momentum * vel_b[l] - cfg.learning_rate * g.biases[l];
        m.weights[l] += vel_w[l];
        m.biases[l] += vel_b[l];
      }
    }
    const double tl = mlp_loss(m, train.X, ytr);
    m.train_loss.push_back(tl);
    double vl = tl;
    if (val) {
      vl = mlp_loss(m, val->X, yval);
      m.val_loss.push_back(vl);
    }
    if (!std::isfinite(tl) || !std::isfinite(vl)) {
      std::ostringstream msg;
      msg << "non-finite loss at epoch " << epoch << "; recent train losses:";
      const std::size_t from = m.train_loss.size() > 5 ? m.train_loss.size() - 5 : 0;
      for (std::size_t k = from; k < m.train_loss.size(); ++k) msg << ' ' << text::format_double(m.train_loss[k]);
      throw Error(ErrorCode::DivergedLoss, msg.str());
    }
    if (vl < best_val) {
      best_val = vl;
      best = m;
      best.best_epoch = epoch;
      since_best = 0;
    } else if (val && cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }
  }
  best.train_loss = m.train_loss;
  best.val_loss = m.val_loss;
  if (best.best_epoch < 0) best.best_epoch = 0;
  return best;
}

}  // namespace gaitpose
