#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "gaitpose/error.hpp"
#include "gaitpose/models/dataset.hpp"
#include "gaitpose/models/linear.hpp"
#include "gaitpose/models/mlp.hpp"
#include "gaitpose/models/pca.hpp"
#include "gaitpose/models/svr.hpp"
#include "gaitpose/models/tree.hpp"

namespace gaitpose {

enum class ModelKind { Linear, Stepwise, Pca, Svr, Mlp, Tree, Forest, RusBoost };

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Linear: return "linear";
    case ModelKind::Stepwise: return "stepwise";
    case ModelKind::Pca: return "pca";
    case ModelKind::Svr: return "svr";
    case ModelKind::Mlp: return "mlp";
    case ModelKind::Tree: return "tree";
    case ModelKind::Forest: return "forest";
    case ModelKind::RusBoost: return "rusboost";
  }
  return "?";
}

inline constexpr const char* kTrainableKinds = "linear, stepwise, forest, svr, mlp, tree, rusboost";

inline ModelKind parse_model_kind(const std::string& s) {
  for (auto k : {ModelKind::Linear, ModelKind::Stepwise, ModelKind::Pca, ModelKind::Svr, ModelKind::Mlp,
                 ModelKind::Tree, ModelKind::Forest, ModelKind::RusBoost}) {
    if (s == to_string(k)) return k;
  }
  throw Error(ErrorCode::UnknownKind, "unknown model kind '" + s + "'; valid kinds: " + kTrainableKinds);
}

/// Every hyperparameter of every model family, flat so that grids and config
/// files can address them by name.
struct ModelSpec {
  ModelKind kind = ModelKind::Linear;
  double lambda = 0.0;
  int stepwise_folds = 5;
  double stepwise_tol = 1e-3;
  KernelKind kernel = KernelKind::Rbf;
  double C = 1.0;
  double gamma = 1.0;
  int degree = 3;
  double coef0 = 0.0;
  double epsilon = 0.1;
  double svr_tol = 1e-3;
  long max_iter = 100000;
  MlpConfig mlp;
  int max_depth = 8;
  int min_leaf = 1;
  int n_trees = 100;
  int forest_max_depth = 1000;
  int forest_min_leaf = 5;
  int rounds = 50;
  int weak_depth = 3;
  /// PCA stage ahead of the predictor: k components, or a variance fraction.
  int pca_k = 0;
  double pca_fraction = 0.0;
  std::uint64_t seed = 0;
};

/// Sets a hyperparameter by name; used by grid search and config parsing.
inline void set_param(ModelSpec& s, const std::string& name, double v) {
  if (name == "C") s.C = v;
  else if (name == "gamma") s.gamma = v;
  else if (name == "epsilon") s.epsilon = v;
  else if (name == "lambda") s.lambda = v;
  else if (name == "degree") s.degree = static_cast<int>(v);
  else if (name == "coef0") s.coef0 = v;
  else if (name == "max_depth") s.max_depth = static_cast<int>(v);
  else if (name == "min_leaf") s.min_leaf = static_cast<int>(v);
  else if (name == "n_trees") s.n_trees = static_cast<int>(v);
  else if (name == "rounds") s.rounds = static_cast<int>(v);
  else if (name == "weak_depth") s.weak_depth = static_cast<int>(v);
  else if (name == "pca_k") s.pca_k = static_cast<int>(v);
  else if (name == "learning_rate") s.mlp.learning_rate = v;
  else if (name == "epochs") s.mlp.epochs = static_cast<int>(v);
  else throw Error(ErrorCode::InvalidArgument, "unknown hyperparameter '" + name + "'");
}

using Predictor =
    std::variant<std::monostate, LinearModel, SvrModel, MlpModel, TreeModel, ForestModel, RusBoostModel>;

/// A fitted pipeline: input column selection, z-scoring, optional PCA, predictor.
struct Model {
  ModelKind kind = ModelKind::Linear;
  Task task = Task::Regression;
  std::string target;
  std::vector<std::string> input_names;
  std::vector<int> input_columns;
  std::vector<std::string> feature_names;
  Standardization standardization;
  std::vector<double> classes;
  std::optional<PcaTransform> pca;
  Predictor predictor;
  ModelSpec spec;
  bool converged = true;

  /// Raw feature row (in input_names order) to the predictor's input space.
  Eigen::VectorXd prepare(const std::vector<double>& raw) const {
    if (raw.size() != input_names.size()) {
      throw Error(ErrorCode::FeatureMismatch, "expected " + std::to_string(input_names.size()) + " features, got " +
                                                  std::to_string(raw.size()));
    }
    Eigen::VectorXd x(static_cast<Eigen::Index>(input_columns.size()));
    for (std::size_t c = 0; c < input_columns.size(); ++c) {
      x(static_cast<Eigen::Index>(c)) = raw[static_cast<std::size_t>(input_columns[c])];
    }
    return standardization.apply(x);
  }
};

namespace detail {

inline Eigen::VectorXd reduce(const Model& m, const Eigen::VectorXd& z) { return m.pca ? m.pca->apply(z) : z; }

}  // namespace detail

/// Prediction from an already standardized row (columns as in the training
/// Dataset). Classification models return the class index.
inline double predict_standardized(const Model& m, const Eigen::VectorXd& z) {
  const Eigen::VectorXd x = detail::reduce(m, z);
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          throw Error(ErrorCode::InvalidArgument, "a PCA transform has no scalar prediction");
        } else if constexpr (std::is_same_v<T, TreeModel> || std::is_same_v<T, ForestModel>) {
          return m.task == Task::Classification ? static_cast<double>(p.predict_class(x)) : p.predict_value(x);
        } else if constexpr (std::is_same_v<T, RusBoostModel>) {
          return static_cast<double>(p.predict_class(x));
        } else {
          return p.predict(x);
        }
      },
      m.predictor);
}

/// Per-class scores (probabilities or vote shares) for classification models.
inline std::vector<double> class_scores_standardized(const Model& m, const Eigen::VectorXd& z) {
  const Eigen::VectorXd x = detail::reduce(m, z);
  if (auto* t = std::get_if<TreeModel>(&m.predictor)) return t->class_proba(x);
  if (auto* f = std::get_if<ForestModel>(&m.predictor)) return f->class_proba(x);
  if (auto* r = std::get_if<RusBoostModel>(&m.predictor)) return r->class_scores(x);
  throw Error(ErrorCode::InvalidArgument, std::string(to_string(m.kind)) + " does not produce class scores");
}

/// Prediction on a raw table row. Classification models return the original
/// class label.
inline double predict(const Model& m, const std::vector<double>& raw) {
  const double v = predict_standardized(m, m.prepare(raw));
  if (m.task == Task::Classification && !m.classes.empty()) return m.classes[static_cast<std::size_t>(v)];
  return v;
}

inline Eigen::VectorXd transform(const Model& m, const std::vector<double>& raw) {
  return detail::reduce(m, m.prepare(raw));
}

inline bool supports(ModelKind kind, Task task) {
  switch (kind) {
    case ModelKind::Tree:
    case ModelKind::Forest: return true;
    case ModelKind::RusBoost: return task == Task::Classification;
    case ModelKind::Pca: return true;
    default: return task == Task::Regression;
  }
}

/// Fits `spec` on `train`. `val` is only used by the MLP (early stopping).
inline Model fit_model(const ModelSpec& spec, const Dataset& train, const Dataset* val = nullptr) {
  if (!supports(spec.kind, train.task)) {
    throw Error(ErrorCode::InvalidArgument, std::string(to_string(spec.kind)) + " does not support " +
                                                to_string(train.task));
  }
  Model m;
  m.kind = spec.kind;
  m.task = train.task;
  m.target = train.target;
  m.input_names = train.input_names;
  m.input_columns = train.input_columns;
  m.feature_names = train.feature_names;
  m.standardization = train.standardization;
  m.classes = train.classes;
  m.spec = spec;

  Dataset tr = train;
  Dataset va;
  if (val) va = *val;
  if (spec.kind == ModelKind::Pca || spec.pca_k > 0 || spec.pca_fraction > 0.0) {
    if (spec.pca_k > 0) {
      m.pca = fit_pca(train.X, std::min<int>(spec.pca_k, static_cast<int>(train.cols())));
    } else if (spec.pca_fraction > 0.0) {
      m.pca = fit_pca_fraction(train.X, spec.pca_fraction);
    } else {
      m.pca = fit_pca(train.X, static_cast<int>(train.cols()));
    }
    tr.X = m.pca->apply(train.X);
    if (val) va.X = m.pca->apply(val->X);
  }

  switch (spec.kind) {
    case ModelKind::Pca: m.predictor = std::monostate{}; break;
    case ModelKind::Linear: m.predictor = fit_linear(tr, spec.lambda); break;
    case ModelKind::Stepwise:
      m.predictor = fit_stepwise(tr, StepwiseConfig{spec.stepwise_folds, spec.stepwise_tol, spec.seed});
      break;
    case ModelKind::Svr: {
      SvrConfig c;
      c.kernel = Kernel{spec.kernel, spec.gamma, spec.degree, spec.coef0};
      c.C = spec.C;
      c.epsilon = spec.epsilon;
      c.tol = spec.svr_tol;
      c.max_iter = spec.max_iter;
      SvrModel s = fit_svr(tr, c);
      m.converged = s.converged;
      m.predictor = std::move(s);
      break;
    }
    case ModelKind::Mlp: {
      MlpConfig c = spec.mlp;
      c.seed = spec.seed;
      m.predictor = fit_mlp(tr, val ? &va : nullptr, c);
      break;
    }
    case ModelKind::Tree:
      m.predictor = fit_tree(tr, TreeConfig{spec.max_depth, spec.min_leaf, 0, spec.seed});
      break;
    case ModelKind::Forest:
      m.predictor = fit_forest(tr, ForestConfig{spec.n_trees, spec.forest_max_depth, spec.forest_min_leaf, 0, spec.seed});
      break;
    case ModelKind::RusBoost:
      m.predictor = fit_rusboost(tr, RusBoostConfig{spec.rounds, spec.weak_depth, spec.min_leaf, 10, spec.seed});
      break;
  }
  return m;
}

}  // namespace gaitpose
