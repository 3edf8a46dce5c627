#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gaitpose/error.hpp"
#include "gaitpose/rng.hpp"
#include "gaitpose/text.hpp"

namespace gaitpose {

enum class SplitKind { KFold, Holdout, Buckets };

struct SplitPlan {
  SplitKind kind = SplitKind::KFold;
  int k = 5;  // folds for KFold / Buckets
  double train_fraction = 0.7;
  double val_fraction = 0.15;
  double test_fraction = 0.15;
  std::uint64_t seed = 0;
  /// Fold index per sample (KFold, Buckets) or partition 0 = train,
  /// 1 = validation, 2 = test (Holdout).
  std::vector<int> assignment;

  int fold_count() const { return kind == SplitKind::Holdout ? 3 : k; }

  std::vector<std::size_t> members(int part) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
      if (assignment[i] == part) out.push_back(i);
    }
    return out;
  }

  std::vector<std::size_t> complement(int part) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
      if (assignment[i] != part) out.push_back(i);
    }
    return out;
  }
};

/// Plan shape without an assignment; parse "kfold:5", "buckets:4" or "holdout:70/15/15".
inline SplitPlan parse_split_kind(const std::string& s) {
  SplitPlan plan;
  const auto colon = s.find(':');
  const std::string name = s.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : s.substr(colon + 1);
  if (name == "kfold" || name == "buckets") {
    plan.kind = name == "kfold" ? SplitKind::KFold : SplitKind::Buckets;
    plan.k = arg.empty() ? (name == "kfold" ? 5 : 4) : static_cast<int>(text::to_int(arg, "split"));
    if (plan.k < 2) throw Error(ErrorCode::InvalidArgument, "split needs at least 2 folds");
    return plan;
  }
  if (name == "holdout") {
    plan.kind = SplitKind::Holdout;
    if (!arg.empty()) {
      const auto parts = text::split(arg, '/');
      if (parts.size() != 3) throw Error(ErrorCode::InvalidArgument, "holdout expects train/val/test");
      double f[3];
      double total = 0.0;
      for (int i = 0; i < 3; ++i) {
        f[i] = text::to_double(parts[static_cast<std::size_t>(i)], "split");
        total += f[i];
      }
      plan.train_fraction = f[0] / total;
      plan.val_fraction = f[1] / total;
      plan.test_fraction = f[2] / total;
    }
    return plan;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown split '" + s + "' (kfold:K, buckets:K, holdout:TR/VA/TE)");
}

inline std::string to_string(const SplitPlan& p) {
  switch (p.kind) {
    case SplitKind::KFold: return "kfold:" + std::to_string(p.k);
    case SplitKind::Buckets: return "buckets:" + std::to_string(p.k);
    case SplitKind::Holdout:
      return "holdout:" + text::format_double(p.train_fraction) + "/" + text::format_double(p.val_fraction) + "/" +
             text::format_double(p.test_fraction);
  }
  return "?";
}

/// Seeded shuffle, then a deterministic partition. K-fold sizes are
/// floor(n/k) or ceil(n/k); hold-out sizes are rounded from the fractions.
inline SplitPlan make_split(std::size_t n, SplitPlan plan, std::uint64_t seed) {
  plan.seed = seed;
  if (plan.kind == SplitKind::Holdout) {
    const double total = plan.train_fraction + plan.val_fraction + plan.test_fraction;
    if (std::abs(total - 1.0) > 1e-9 || plan.train_fraction <= 0.0 || plan.val_fraction < 0.0 ||
        plan.test_fraction < 0.0) {
      throw Error(ErrorCode::InvalidArgument, "hold-out fractions must be nonnegative and sum to 1");
    }
    if (n < 3) throw Error(ErrorCode::TooFewSamples, "hold-out needs at least 3 samples");
  } else if (n < static_cast<std::size_t>(plan.k)) {
    throw Error(ErrorCode::TooFewSamples,
                std::to_string(n) + " samples cannot fill " + std::to_string(plan.k) + " folds");
  }

  Rng rng(seed);
  auto order = iota_indices(n);
  rng.shuffle(order);
  plan.assignment.assign(n, 0);
  if (plan.kind == SplitKind::Holdout) {
    auto n_train = static_cast<std::size_t>(std::llround(plan.train_fraction * static_cast<double>(n)));
    auto n_val = static_cast<std::size_t>(std::llround(plan.val_fraction * static_cast<double>(n)));
    n_train = std::min(n_train, n);
    n_val = std::min(n_val, n - n_train);
    for (std::size_t r = 0; r < n; ++r) {
      plan.assignment[order[r]] = r < n_train ? 0 : (r < n_train + n_val ? 1 : 2);
    }
  } else {
    const auto k = static_cast<std::size_t>(plan.k);
    for (std::size_t r = 0; r < n; ++r) plan.assignment[order[r]] = static_cast<int>(r % k);
  }
  return plan;
}

}  // namespace gaitpose
