#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gaitpose/error.hpp"
#include "gaitpose/models/model.hpp"
#include "gaitpose/split.hpp"
#include "gaitpose/text.hpp"

namespace gaitpose {

struct RegressionMetrics {
  std::size_t n = 0;
  double mse = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  double r2 = 0.0;
  /// False when y_true has zero variance; r2 is then reported as 0.
  bool r2_defined = true;
};

inline RegressionMetrics regression_metrics(const std::vector<double>& y_true, const std::vector<double>& y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(y_true.size()) + " targets vs " +
                                               std::to_string(y_pred.size()) + " predictions");
  }
  if (y_true.empty()) throw Error(ErrorCode::LengthMismatch, "no samples to score");
  RegressionMetrics m;
  m.n = y_true.size();
  double mean = 0.0;
  for (double v : y_true) mean += v;
  mean /= static_cast<double>(m.n);
  double ss_res = 0.0;
  double ss_tot = 0.0;
  double abs_sum = 0.0;
  for (std::size_t i = 0; i < m.n; ++i) {
    const double r = y_true[i] - y_pred[i];
    ss_res += r * r;
    abs_sum += std::abs(r);
    ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
  }
  m.mse = ss_res / static_cast<double>(m.n);
  m.rmse = std::sqrt(m.mse);
  m.mae = abs_sum / static_cast<double>(m.n);
  if (ss_tot > 0.0) {
    m.r2 = 1.0 - ss_res / ss_tot;
  } else {
    m.r2_defined = false;
    m.r2 = 0.0;
  }
  return m;
}

/// Mann-Whitney estimate of P(score_pos > score_neg), ties counting one half.
/// Returns NaN when either class is absent.
inline double binary_auc(const std::vector<bool>& positive, const std::vector<double>& scores) {
  if (positive.size() != scores.size()) throw Error(ErrorCode::LengthMismatch, "labels and scores differ in length");
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Midranks handle ties.
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (positive[order[t]]) {
        rank_sum += mid;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::numeric_limits<double>::quiet_NaN();
  const double np = static_cast<double>(n_pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

struct ClassificationMetrics {
  std::size_t n = 0;
  int n_classes = 0;
  double accuracy = 0.0;
  /// confusion[t][p]: samples of true class t predicted as p.
  std::vector<std::vector<long>> confusion;
  std::vector<double> recall;
  double auc = std::numeric_limits<double>::quiet_NaN();
  /// False when fewer than two classes are present in y_true (SingleClassAuc).
  bool auc_defined = false;
};

/// `y_true` and `y_pred` are class indices in [0, n_classes). `scores`, when
/// nonempty, holds one row of per-class scores per sample; binary AUC uses
/// the class-1 column and multiclass AUC is the one-vs-rest macro average
/// over classes present in y_true.
inline ClassificationMetrics classification_metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                                    int n_classes,
                                                    const std::vector<std::vector<double>>& scores = {}) {
  if (y_true.size() != y_pred.size() || (!scores.empty() && scores.size() != y_true.size())) {
    throw Error(ErrorCode::LengthMismatch, "labels, predictions and scores differ in length");
  }
  if (y_true.empty()) throw Error(ErrorCode::LengthMismatch, "no samples to score");
  ClassificationMetrics m;
  m.n = y_true.size();
  m.n_classes = n_classes;
  m.confusion.assign(static_cast<std::size_t>(n_classes), std::vector<long>(static_cast<std::size_t>(n_classes), 0));
  long correct = 0;
  for (std::size_t i = 0; i < m.n; ++i) {
    if (y_true[i] < 0 || y_true[i] >= n_classes || y_pred[i] < 0 || y_pred[i] >= n_classes) {
      throw Error(ErrorCode::InvalidArgument, "class index out of range");
    }
    ++m.confusion[static_cast<std::size_t>(y_true[i])][static_cast<std::size_t>(y_pred[i])];
    if (y_true[i] == y_pred[i]) ++correct;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(m.n);
  for (int c = 0; c < n_classes; ++c) {
    long row = 0;
    for (long v : m.confusion[static_cast<std::size_t>(c)]) row += v;
    m.recall.push_back(row > 0 ? static_cast<double>(m.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)]) /
                                     static_cast<double>(row)
                               : std::numeric_limits<double>::quiet_NaN());
  }

  auto column = [&](int c) {
    std::vector<double> s(m.n);
    for (std::size_t i = 0; i < m.n; ++i) {
      s[i] = scores.empty() ? (y_pred[i] == c ? 1.0 : 0.0) : scores[i][static_cast<std::size_t>(c)];
    }
    return s;
  };
  auto is_class = [&](int c) {
    std::vector<bool> p(m.n);
    for (std::size_t i = 0; i < m.n; ++i) p[i] = y_true[i] == c;
    return p;
  };
  if (n_classes == 2) {
    m.auc = binary_auc(is_class(1), column(1));
  } else {
    double sum = 0.0;
    int used = 0;
    for (int c = 0; c < n_classes; ++c) {
      const double a = binary_auc(is_class(c), column(c));
      if (std::isfinite(a)) {
        sum += a;
        ++used;
      }
    }
    if (used > 0) m.auc = sum / used;
  }
  m.auc_defined = std::isfinite(m.auc);
  return m;
}

/// Held-out scores of one fold (or, for hold-out plans, of the test partition).
struct FoldResult {
  int fold = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  RegressionMetrics regression;
  ClassificationMetrics classification;
  std::string error;
};

struct EvalReport {
  Task task = Task::Regression;
  std::string model;
  std::string target;
  std::string split;
  std::uint64_t split_seed = 0;
  /// Metrics on the pooled held-out predictions of every fold.
  RegressionMetrics regression;
  ClassificationMetrics classification;
  /// Mean over folds of the held-out R^2 (regression) or accuracy.
  double mean_fold_score = 0.0;
  std::vector<FoldResult> folds;
  /// Ordered provenance entries, echoed verbatim into every serialization.
  std::vector<std::pair<std::string, std::string>> provenance;
};

namespace detail {

inline double fold_score(const FoldResult& f, Task task) {
  return task == Task::Regression ? f.regression.r2 : f.classification.accuracy;
}

struct Held {
  std::vector<double> truth;
  std::vector<double> pred;
  std::vector<int> truth_c;
  std::vector<int> pred_c;
  std::vector<std::vector<double>> scores;
};

inline void score_rows(const Model& model, const Dataset& ds, const std::vector<std::size_t>& rows, Held& held) {
  for (std::size_t r : rows) {
    const Eigen::VectorXd z = ds.X.row(static_cast<Eigen::Index>(r)).transpose();
    const double v = predict_standardized(model, z);
    if (ds.task == Task::Regression) {
      held.truth.push_back(ds.y(static_cast<Eigen::Index>(r)));
      held.pred.push_back(v);
    } else {
      held.truth_c.push_back(static_cast<int>(ds.y(static_cast<Eigen::Index>(r))));
      held.pred_c.push_back(static_cast<int>(v));
      held.scores.push_back(class_scores_standardized(model, z));
    }
  }
}

}  // namespace detail

/// Evaluates `spec` under `plan`. K-fold and bucket plans train on all but one
/// fold and test on the remaining one, rotating through every fold. Hold-out
/// plans train on partition 0, hand partition 1 to the fitter as validation
/// data and test on partition 2.
inline EvalReport cross_validate(const Dataset& ds, const ModelSpec& spec, const SplitPlan& plan) {
  if (plan.assignment.size() != static_cast<std::size_t>(ds.rows())) {
    throw Error(ErrorCode::LengthMismatch, "split assignment does not match the dataset");
  }
  EvalReport rep;
  rep.task = ds.task;
  rep.model = to_string(spec.kind);
  rep.target = ds.target;
  rep.split = to_string(plan);
  rep.split_seed = plan.seed;
  const int n_classes = std::max(ds.n_classes(), 2);

  detail::Held pooled;
  auto run = [&](int fold, const std::vector<std::size_t>& train_rows, const std::vector<std::size_t>* val_rows,
                 const std::vector<std::size_t>& test_rows) {
    FoldResult f;
    f.fold = fold;
    f.n_train = train_rows.size();
    f.n_test = test_rows.size();
    const Dataset train = subset(ds, train_rows);
    Dataset val;
    if (val_rows && !val_rows->empty()) val = subset(ds, *val_rows);
    const Model model = fit_model(spec, train, (val_rows && !val_rows->empty()) ? &val : nullptr);
    detail::Held held;
    detail::score_rows(model, ds, test_rows, held);
    if (ds.task == Task::Regression) {
      f.regression = regression_metrics(held.truth, held.pred);
      pooled.truth.insert(pooled.truth.end(), held.truth.begin(), held.truth.end());
      pooled.pred.insert(pooled.pred.end(), held.pred.begin(), held.pred.end());
    } else {
      f.classification = classification_metrics(held.truth_c, held.pred_c, n_classes, held.scores);
      pooled.truth_c.insert(pooled.truth_c.end(), held.truth_c.begin(), held.truth_c.end());
      pooled.pred_c.insert(pooled.pred_c.end(), held.pred_c.begin(), held.pred_c.end());
      pooled.scores.insert(pooled.scores.end(), held.scores.begin(), held.scores.end());
    }
    rep.folds.push_back(std::move(f));
  };

  if (plan.kind == SplitKind::Holdout) {
    const auto val_rows = plan.members(1);
    auto test_rows = plan.members(2);
    if (test_rows.empty()) test_rows = val_rows;
    if (test_rows.empty()) throw Error(ErrorCode::TooFewSamples, "hold-out plan has no test samples");
    run(0, plan.members(0), &val_rows, test_rows);
  } else {
    for (int k = 0; k < plan.fold_count(); ++k) run(k, plan.complement(k), nullptr, plan.members(k));
  }

  double sum = 0.0;
  for (const auto& f : rep.folds) sum += detail::fold_score(f, ds.task);
  rep.mean_fold_score = sum / static_cast<double>(rep.folds.size());
  if (ds.task == Task::Regression) {
    rep.regression = regression_metrics(pooled.truth, pooled.pred);
  } else {
    rep.classification = classification_metrics(pooled.truth_c, pooled.pred_c, n_classes, pooled.scores);
  }
  rep.provenance = {{"model", rep.model},
                    {"target", rep.target},
                    {"split", rep.split},
                    {"split_seed", std::to_string(plan.seed)},
                    {"model_seed", std::to_string(spec.seed)},
                    {"score_use", plan.kind == SplitKind::Holdout ? "test partition" : "held-out folds"}};
  return rep;
}

/// Scores a fitted model on every row of `ds`.
inline EvalReport evaluate_model(const Model& model, const Dataset& ds) {
  EvalReport rep;
  rep.task = ds.task;
  rep.model = to_string(model.kind);
  rep.target = ds.target;
  rep.split = "none";
  detail::Held held;
  std::vector<std::size_t> rows(static_cast<std::size_t>(ds.rows()));
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  detail::score_rows(model, ds, rows, held);
  FoldResult f;
  f.n_test = rows.size();
  if (ds.task == Task::Regression) {
    rep.regression = regression_metrics(held.truth, held.pred);
    f.regression = rep.regression;
    rep.mean_fold_score = rep.regression.r2;
  } else {
    rep.classification = classification_metrics(held.truth_c, held.pred_c, std::max(ds.n_classes(), 2), held.scores);
    f.classification = rep.classification;
    rep.mean_fold_score = rep.classification.accuracy;
  }
  rep.folds.push_back(f);
  rep.provenance = {{"model", rep.model}, {"target", rep.target}, {"split", "none"}};
  return rep;
}

/// Throws FeatureMismatch naming the first column where `table` disagrees
/// with the features the model was trained on.
inline void check_feature_names(const Model& model, const FeatureTable& table) {
  const auto& want = model.input_names;
  const auto& have = table.feature_names;
  for (std::size_t i = 0; i < std::min(want.size(), have.size()); ++i) {
    if (want[i] != have[i]) {
      throw Error(ErrorCode::FeatureMismatch, "feature column " + std::to_string(i + 1) + ": model expects '" +
                                                  want[i] + "', table has '" + have[i] + "'");
    }
  }
  if (want.size() != have.size()) {
    const std::string first = want.size() > have.size() ? "missing '" + want[have.size()] + "'"
                                                        : "unexpected '" + have[want.size()] + "'";
    throw Error(ErrorCode::FeatureMismatch, "model expects " + std::to_string(want.size()) + " features, table has " +
                                                std::to_string(have.size()) + " (first: " + first + ")");
  }
}

/// Rows of `table` carrying `target`, pushed through the model's own column
/// selection and standardization. Class labels become the model's indices.
inline Dataset dataset_for_model(const Model& model, const FeatureTable& table, const std::string& target,
                                 std::vector<std::string>* ids = nullptr) {
  check_feature_names(model, table);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (table.rows[i].targets.count(target)) rows.push_back(i);
  }
  if (rows.empty()) throw Error(ErrorCode::TooFewSamples, "no rows carry target '" + target + "'");
  Dataset ds;
  ds.task = model.task;
  ds.target = target;
  ds.classes = model.classes;
  ds.input_names = model.input_names;
  ds.input_columns = model.input_columns;
  ds.feature_names = model.feature_names;
  ds.standardization = model.standardization;
  ds.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(model.input_columns.size()));
  ds.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = table.rows[rows[r]];
    ds.X.row(static_cast<Eigen::Index>(r)) = model.prepare(row.values).transpose();
    double y = row.targets.at(target);
    if (model.task == Task::Classification) {
      const auto it = std::find(model.classes.begin(), model.classes.end(), y);
      if (it == model.classes.end()) {
        throw Error(ErrorCode::InvalidArgument, "row " + row.id + ": label " + text::format_double(y) +
                                                    " was not seen in training");
      }
      y = static_cast<double>(it - model.classes.begin());
    }
    ds.y(static_cast<Eigen::Index>(r)) = y;
    if (ids) ids->push_back(row.id);
  }
  return ds;
}

struct GridAxis {
  std::string name;
  std::vector<double> values;
};

struct GridCell {
  std::vector<double> params;
  double score = std::numeric_limits<double>::quiet_NaN();
  bool failed = false;
  std::string error;
  EvalReport report;
};

struct GridResult {
  std::vector<GridAxis> axes;
  std::vector<GridCell> cells;
  int best = -1;

  const GridCell& best_cell() const { return cells.at(static_cast<std::size_t>(best)); }
};

/// Parses "C=0.1,1,10;gamma=0.1,1,10".
inline std::vector<GridAxis> parse_grid(const std::string& s) {
  std::vector<GridAxis> axes;
  for (const auto& part : text::split(s, ';')) {
    const std::string p(text::trim(part));
    if (p.empty()) continue;
    const auto eq = p.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidArgument, "grid axis '" + p + "' lacks '='");
    GridAxis a;
    a.name = std::string(text::trim(p.substr(0, eq)));
    for (const auto& v : text::split(p.substr(eq + 1), ',')) a.values.push_back(text::to_double(text::trim(v), a.name));
    if (a.values.empty()) throw Error(ErrorCode::InvalidArgument, "grid axis '" + a.name + "' is empty");
    axes.push_back(std::move(a));
  }
  if (axes.empty()) throw Error(ErrorCode::InvalidArgument, "empty grid");
  return axes;
}

/// Exhaustive search. Each axis is visited in ascending order with the first
/// axis outermost, and a cell only replaces the incumbent on a strictly
/// higher score, so ties resolve toward smaller values of earlier axes.
inline GridResult grid_search(const Dataset& ds, const ModelSpec& base, std::vector<GridAxis> axes,
                              const SplitPlan& plan) {
  if (axes.empty()) throw Error(ErrorCode::InvalidArgument, "empty grid");
  GridResult res;
  std::size_t total = 1;
  for (auto& a : axes) {
    if (a.values.empty()) throw Error(ErrorCode::InvalidArgument, "grid axis '" + a.name + "' is empty");
    std::sort(a.values.begin(), a.values.end());
    a.values.erase(std::unique(a.values.begin(), a.values.end()), a.values.end());
    total *= a.values.size();
  }
  res.axes = axes;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t cell = 0; cell < total; ++cell) {
    GridCell c;
    ModelSpec spec = base;
    std::size_t rem = cell;
    c.params.resize(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
      c.params[a] = axes[a].values[rem % axes[a].values.size()];
      rem /= axes[a].values.size();
    }
    try {
      for (std::size_t a = 0; a < axes.size(); ++a) set_param(spec, axes[a].name, c.params[a]);
      c.report = cross_validate(ds, spec, plan);
      c.score = c.report.mean_fold_score;
      if (!std::isfinite(c.score)) {
        c.failed = true;
        c.error = "non-finite score";
      }
    } catch (const Error& e) {
      c.failed = true;
      c.error = e.what();
    }
    if (!c.failed && c.score > best) {
      best = c.score;
      res.best = static_cast<int>(res.cells.size());
    }
    res.cells.push_back(std::move(c));
  }
  if (res.best < 0) throw Error(ErrorCode::NoConvergence, "every grid cell failed; first error: " + res.cells[0].error);
  return res;
}

inline std::string grid_csv(const GridResult& g) {
  std::ostringstream out;
  for (const auto& a : g.axes) out << a.name << ',';
  out << "score,status,error\n";
  for (std::size_t i = 0; i < g.cells.size(); ++i) {
    const auto& c = g.cells[i];
    for (double p : c.params) out << text::format_double(p) << ',';
    std::string err = c.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << (c.failed ? "" : text::format_double(c.score)) << ','
        << (c.failed ? "failed" : (static_cast<int>(i) == g.best ? "best" : "ok")) << ',' << err << '\n';
  }
  return out.str();
}

namespace detail {

inline void emit_regression(std::vector<std::pair<std::string, std::string>>& kv, const std::string& prefix,
                            const RegressionMetrics& m) {
  kv.emplace_back(prefix + "n", std::to_string(m.n));
  kv.emplace_back(prefix + "mse", text::format_double(m.mse));
  kv.emplace_back(prefix + "rmse", text::format_double(m.rmse));
  kv.emplace_back(prefix + "mae", text::format_double(m.mae));
  kv.emplace_back(prefix + "r2", m.r2_defined ? text::format_double(m.r2) : "undefined");
}

inline void emit_classification(std::vector<std::pair<std::string, std::string>>& kv, const std::string& prefix,
                                const ClassificationMetrics& m) {
  kv.emplace_back(prefix + "n", std::to_string(m.n));
  kv.emplace_back(prefix + "accuracy", text::format_double(m.accuracy));
  kv.emplace_back(prefix + "auc", m.auc_defined ? text::format_double(m.auc) : "undefined");
  for (std::size_t c = 0; c < m.recall.size(); ++c) {
    kv.emplace_back(prefix + "recall." + std::to_string(c), text::format_double(m.recall[c]));
  }
  for (std::size_t t = 0; t < m.confusion.size(); ++t) {
    std::string row;
    for (std::size_t p = 0; p < m.confusion[t].size(); ++p) row += (p ? " " : "") + std::to_string(m.confusion[t][p]);
    kv.emplace_back(prefix + "confusion." + std::to_string(t), row);
  }
}

}  // namespace detail

/// Flat key=value lines, one metric per line.
inline std::vector<std::pair<std::string, std::string>> report_entries(const EvalReport& r) {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("task", to_string(r.task));
  for (const auto& p : r.provenance) kv.emplace_back("provenance." + p.first, p.second);
  kv.emplace_back("mean_fold_score", text::format_double(r.mean_fold_score));
  if (r.task == Task::Regression) {
    detail::emit_regression(kv, "", r.regression);
  } else {
    detail::emit_classification(kv, "", r.classification);
  }
  kv.emplace_back("folds", std::to_string(r.folds.size()));
  for (const auto& f : r.folds) {
    const std::string p = "fold." + std::to_string(f.fold) + ".";
    kv.emplace_back(p + "n_train", std::to_string(f.n_train));
    if (r.task == Task::Regression) {
      detail::emit_regression(kv, p, f.regression);
    } else {
      detail::emit_classification(kv, p, f.classification);
    }
  }
  return kv;
}

inline std::string report_kv(const EvalReport& r) {
  std::string out;
  for (const auto& [k, v] : report_entries(r)) out += k + "=" + v + "\n";
  return out;
}

inline std::string report_text(const EvalReport& r) {
  std::ostringstream out;
  out << "model " << r.model << " on target '" << r.target << "' (" << to_string(r.task) << ")\n";
  out << "split " << r.split << ", seed " << r.split_seed << ", " << r.folds.size() << " fold(s)\n";
  auto fmt = [](double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
  };
  if (r.task == Task::Regression) {
    const auto& m = r.regression;
    out << "  n     " << m.n << "\n  RMSE  " << fmt(m.rmse) << "\n  MSE   " << fmt(m.mse) << "\n  MAE   " << fmt(m.mae)
        << "\n  R2    " << (m.r2_defined ? fmt(m.r2) : std::string("undefined (constant target)")) << "\n";
    out << "  mean fold R2 " << fmt(r.mean_fold_score) << "\n";
  } else {
    const auto& m = r.classification;
    out << "  n         " << m.n << "\n  accuracy  " << fmt(m.accuracy) << "\n  AUC       "
        << (m.auc_defined ? fmt(m.auc) : std::string("undefined (single class)")) << "\n";
    out << "  confusion (rows = true class)\n";
    for (std::size_t t = 0; t < m.confusion.size(); ++t) {
      out << "   ";
      for (long v : m.confusion[t]) out << ' ' << v;
      out << "    recall " << fmt(m.recall[t]) << "\n";
    }
  }
  return out.str();
}

}  // namespace gaitpose
