#pragma once

// Splits a multi-entry pose stream into two patient tracks (one per camera
// view, told apart by horizontal position) by following each view's centre of
// gravity from frame to frame. Entries that neither track accepts are
// companions, shadows or noise.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gaitpose/error.hpp"
#include "gaitpose/pose_ingest.hpp"

namespace gaitpose {

/// Joints that move least relative to the body centre: nose, neck, shoulders,
/// hips, eyes and ears.
inline constexpr std::array<int, 10> kCogJoints = {0, 1, 2, 5, 8, 11, 14, 15, 16, 17};

struct CenterOfGravity {
  double x = 0.0;
  double y = 0.0;
  int support = 0;
  double mean_confidence = 0.0;

  friend bool operator==(const CenterOfGravity&, const CenterOfGravity&) = default;
};

struct CleanerConfig {
  double c_min = 0.1;
  /// Gate on CoG displacement, as a fraction of the image width.
  double d_max = 0.15;
  /// 0 keeps the last assigned CoG as track memory; a value in (0, 1] blends
  /// memory = alpha * new + (1 - alpha) * memory.
  double ema_alpha = 0.0;
};

enum class TrackLabel { LeftView, RightView };

inline const char* to_string(TrackLabel l) { return l == TrackLabel::LeftView ? "left" : "right"; }

struct Track {
  TrackLabel label = TrackLabel::LeftView;
  double fps = 30.0;
  int first_frame = 0;
  int last_frame = -1;
  std::map<int, Skeleton> samples;
  CenterOfGravity last_cog;
  /// Closed frame intervals inside [first_frame, last_frame] without a sample.
  std::vector<std::pair<int, int>> gaps;

  friend bool operator==(const Track&, const Track&) = default;
};

struct FrameDiagnostic {
  int index = 0;
  int entries = 0;
  bool tracked = false;  // false before tracking locked on
  int left_entry = -1;
  int right_entry = -1;
  int rejected = 0;

  friend bool operator==(const FrameDiagnostic&, const FrameDiagnostic&) = default;
};

struct TrackPair {
  Track left;
  Track right;
  int init_frame = 0;
  double image_width = 0.0;
  double image_height = 0.0;
  std::vector<FrameDiagnostic> diagnostics;

  friend bool operator==(const TrackPair&, const TrackPair&) = default;
};

/// Unweighted mean over CoG joints with c >= c_min; nullopt when none qualify.
inline std::optional<CenterOfGravity> center_of_gravity(const Skeleton& s, double c_min) {
  double sx = 0.0, sy = 0.0, sc = 0.0;
  int n = 0;
  for (int j : kCogJoints) {
    const auto& p = s[j];
    if (p.c > 0.0 && p.c >= c_min) {
      sx += p.x;
      sy += p.y;
      sc += p.c;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return CenterOfGravity{sx / n, sy / n, n, sc / n};
}

inline double cog_distance(const CenterOfGravity& a, const CenterOfGravity& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

struct TrackSeed {
  int init_frame = 0;
  std::size_t left_entry = 0;
  std::size_t right_entry = 0;
  CenterOfGravity left;
  CenterOfGravity right;
};

/// Finds the first frame with at least two defined CoGs and seeds the tracks
/// from its two best-supported entries.
inline TrackSeed initialize_tracks(const FrameSequence& seq, const CleanerConfig& cfg) {
  for (const auto& f : seq.frames) {
    std::vector<std::pair<std::size_t, CenterOfGravity>> defined;
    for (std::size_t i = 0; i < f.entries.size(); ++i) {
      if (auto cog = center_of_gravity(f.entries[i], cfg.c_min)) defined.emplace_back(i, *cog);
    }
    if (defined.size() < 2) continue;
    std::stable_sort(defined.begin(), defined.end(), [](const auto& a, const auto& b) {
      if (a.second.support != b.second.support) return a.second.support > b.second.support;
      if (a.second.mean_confidence != b.second.mean_confidence) {
        return a.second.mean_confidence > b.second.mean_confidence;
      }
      return a.first < b.first;
    });
    auto a = defined[0];
    auto b = defined[1];
    const bool swap = b.second.x < a.second.x || (b.second.x == a.second.x && b.first < a.first);
    if (swap) std::swap(a, b);
    return TrackSeed{f.index, a.first, b.first, a.second, b.second};
  }
  throw Error(ErrorCode::NoInitFrame, "no frame contains two separable entries");
}

struct TrackMemory {
  CenterOfGravity left;
  CenterOfGravity right;
};

struct FrameAssignment {
  int index = 0;
  std::optional<std::size_t> left;
  std::optional<std::size_t> right;
  std::vector<std::size_t> rejected;
  std::vector<std::optional<CenterOfGravity>> cogs;
  double total_distance = 0.0;
};

/// Picks the entry pair (one per track) that assigns the most tracks and, among
/// those, has the smallest total CoG distance to track memory. A pairing whose
/// distance exceeds d_max * image_width is never made.
inline FrameAssignment assign_frame(const TrackMemory& memory, const Frame& f, const CleanerConfig& cfg,
                                    double image_width) {
  FrameAssignment out;
  out.index = f.index;
  out.cogs.reserve(f.entries.size());
  for (const auto& s : f.entries) out.cogs.push_back(center_of_gravity(s, cfg.c_min));

  const double gate = cfg.d_max * image_width;
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t n = f.entries.size();
  auto cost = [&](const CenterOfGravity& track, std::size_t i) {
    if (!out.cogs[i]) return inf;
    const double d = cog_distance(track, *out.cogs[i]);
    return d <= gate ? d : inf;
  };

  // Index n stands for "no entry". Lexicographic objective:
  // (assigned count desc, total distance asc); ties go to the first candidate found.
  int best_count = 0;
  double best_cost = 0.0;
  std::size_t best_l = n, best_r = n;
  for (std::size_t l = 0; l <= n; ++l) {
    const double cl = l < n ? cost(memory.left, l) : 0.0;
    if (cl == inf) continue;
    for (std::size_t r = 0; r <= n; ++r) {
      if (r < n && r == l) continue;
      const double cr = r < n ? cost(memory.right, r) : 0.0;
      if (cr == inf) continue;
      const int count = (l < n) + (r < n);
      const double total = cl + cr;
      if (count > best_count || (count == best_count && total < best_cost)) {
        best_count = count;
        best_cost = total;
        best_l = l;
        best_r = r;
      }
    }
  }
  if (best_l < n) out.left = best_l;
  if (best_r < n) out.right = best_r;
  out.total_distance = best_cost;
  for (std::size_t i = 0; i < n; ++i) {
    if (i != best_l && i != best_r) out.rejected.push_back(i);
  }
  return out;
}

namespace detail {

inline CenterOfGravity blend(const CenterOfGravity& memory, const CenterOfGravity& observed,
                             double alpha) {
  if (alpha <= 0.0 || alpha >= 1.0) return observed;
  CenterOfGravity out = observed;
  out.x = alpha * observed.x + (1.0 - alpha) * memory.x;
  out.y = alpha * observed.y + (1.0 - alpha) * memory.y;
  return out;
}

inline void close_gaps(Track& t) {
  t.gaps.clear();
  int expected = t.first_frame;
  for (const auto& [index, _] : t.samples) {
    if (index > expected) t.gaps.emplace_back(expected, index - 1);
    expected = index + 1;
  }
  if (expected <= t.last_frame) t.gaps.emplace_back(expected, t.last_frame);
}

}  // namespace detail

inline TrackPair clean_sequence(const FrameSequence& seq, const CleanerConfig& cfg) {
  if (seq.frames.empty()) throw Error(ErrorCode::InvalidArgument, "empty frame sequence");
  const TrackSeed seed = initialize_tracks(seq, cfg);

  TrackPair pair;
  pair.init_frame = seed.init_frame;
  pair.image_width = seq.image_width;
  pair.image_height = seq.image_height;
  const int last = seq.frames.back().index;
  for (Track* t : {&pair.left, &pair.right}) {
    t->fps = seq.fps;
    t->first_frame = seed.init_frame;
    t->last_frame = last;
  }
  pair.left.label = TrackLabel::LeftView;
  pair.right.label = TrackLabel::RightView;

  TrackMemory memory{seed.left, seed.right};
  for (const auto& f : seq.frames) {
    FrameDiagnostic diag;
    diag.index = f.index;
    diag.entries = static_cast<int>(f.entries.size());
    if (f.index < seed.init_frame) {
      pair.diagnostics.push_back(diag);
      continue;
    }
    diag.tracked = true;
    if (f.index == seed.init_frame) {
      diag.left_entry = static_cast<int>(seed.left_entry);
      diag.right_entry = static_cast<int>(seed.right_entry);
      diag.rejected = diag.entries - 2;
      pair.left.samples.emplace(f.index, f.entries[seed.left_entry]);
      pair.right.samples.emplace(f.index, f.entries[seed.right_entry]);
      pair.diagnostics.push_back(diag);
      continue;
    }
    const auto a = assign_frame(memory, f, cfg, seq.image_width);
    if (a.left) {
      diag.left_entry = static_cast<int>(*a.left);
      pair.left.samples.emplace(f.index, f.entries[*a.left]);
      memory.left = detail::blend(memory.left, *a.cogs[*a.left], cfg.ema_alpha);
    }
    if (a.right) {
      diag.right_entry = static_cast<int>(*a.right);
      pair.right.samples.emplace(f.index, f.entries[*a.right]);
      memory.right = detail::blend(memory.right, *a.cogs[*a.right], cfg.ema_alpha);
    }
    diag.rejected = static_cast<int>(a.rejected.size());
    pair.diagnostics.push_back(diag);
  }
  pair.left.last_cog = memory.left;
  pair.right.last_cog = memory.right;
  detail::close_gaps(pair.left);
  detail::close_gaps(pair.right);
  return pair;
}

inline bool in_gap(const Track& t, int index) {
  for (const auto& [a, b] : t.gaps) {
    if (index >= a && index <= b) return true;
  }
  return false;
}

/// Audit CSV, one row per input frame.
inline std::string cleaning_report_csv(const TrackPair& pair) {
  std::ostringstream out;
  out << "frame,entries,tracked,left_entry,right_entry,rejected,left_gap,right_gap\n";
  for (const auto& d : pair.diagnostics) {
    const bool lg = d.tracked && d.left_entry < 0;
    const bool rg = d.tracked && d.right_entry < 0;
    out << d.index << ',' << d.entries << ',' << (d.tracked ? 1 : 0) << ',' << d.left_entry << ','
        << d.right_entry << ',' << d.rejected << ',' << (lg ? 1 : 0) << ',' << (rg ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace gaitpose
