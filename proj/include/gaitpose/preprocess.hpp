#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gaitpose/error.hpp"
#include "gaitpose/pose_ingest.hpp"
#include "gaitpose/text.hpp"
#include "gaitpose/track_cleaner.hpp"

namespace gaitpose {

enum class ScaleMode { VideoMedian, PerFrame };
enum class Axis { X, Y };
enum class Reference { None, HipMidpoint };

struct PreprocessConfig {
  /// Longest run of missing frames that is bridged by linear interpolation.
  int max_gap = 15;
  int min_len = 64;
  ScaleMode scale_mode = ScaleMode::VideoMedian;
};

struct ScaleEstimate {
  std::map<int, double> per_frame;  // hip-neck distance in pixels
  double video_scale = 0.0;
};

/// A channel sampled on the track's frame range; `present[i]` is false where
/// the joint or the normalisation reference was not detected.
struct RawSignal {
  std::string channel;
  double fps = 30.0;
  int first_frame = 0;
  std::vector<double> values;
  std::vector<bool> present;
};

struct Signal {
  std::string channel;
  double fps = 30.0;
  int first_frame = 0;
  std::vector<double> values;
  std::vector<bool> interpolated;
  std::vector<std::pair<int, int>> source_gaps;
};

namespace detail {

inline std::optional<std::pair<double, double>> hip_point(const Skeleton& s) {
  const auto& r = s[joint::RHip];
  const auto& l = s[joint::LHip];
  if (r.detected() && l.detected()) return std::pair{0.5 * (r.x + l.x), 0.5 * (r.y + l.y)};
  if (r.detected()) return std::pair{r.x, r.y};
  if (l.detected()) return std::pair{l.x, l.y};
  return std::nullopt;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Neck to hip-midpoint distance per frame, and its median over the video.
inline ScaleEstimate hip_neck_scale(const Track& track) {
  ScaleEstimate est;
  std::vector<double> d;
  for (const auto& [index, s] : track.samples) {
    const auto& neck = s[joint::Neck];
    if (!neck.detected()) continue;
    const auto hip = detail::hip_point(s);
    if (!hip) continue;
    const double dist = std::hypot(neck.x - hip->first, neck.y - hip->second);
    if (!(dist > 0.0)) continue;
    est.per_frame.emplace(index, dist);
    d.push_back(dist);
  }
  if (d.empty()) throw Error(ErrorCode::NoScale, "no frame with both neck and hip detected");
  est.video_scale = detail::median(std::move(d));
  return est;
}

inline std::string channel_name(int joint_index, Axis axis, Reference ref) {
  static const char* names[kJointCount] = {"nose",   "neck",  "R-shoulder", "R-elbow", "R-wrist",
                                           "L-shoulder", "L-elbow", "L-wrist", "R-hip",  "R-knee",
                                           "R-ankle", "L-hip", "L-knee",     "L-ankle", "R-eye",
                                           "L-eye",   "R-ear", "L-ear"};
  std::string out = names[joint_index];
  out += axis == Axis::X ? "-x" : "-y";
  if (ref == Reference::HipMidpoint) out += "-rel";
  return out;
}

inline RawSignal extract_channel(const Track& track, int joint_index, Axis axis, Reference ref,
                                 const ScaleEstimate& scale, ScaleMode mode = ScaleMode::VideoMedian) {
  if (joint_index < 0 || joint_index >= kJointCount) {
    throw Error(ErrorCode::InvalidArgument, "joint index out of range");
  }
  RawSignal out;
  out.channel = channel_name(joint_index, axis, ref);
  out.fps = track.fps;
  out.first_frame = track.first_frame;
  const int n = std::max(0, track.last_frame - track.first_frame + 1);
  out.values.assign(static_cast<std::size_t>(n), 0.0);
  out.present.assign(static_cast<std::size_t>(n), false);
  for (const auto& [index, s] : track.samples) {
    if (index < track.first_frame || index > track.last_frame) continue;
    const auto& p = s[joint_index];
    if (!p.detected()) continue;
    double v = axis == Axis::X ? p.x : p.y;
    if (ref == Reference::HipMidpoint) {
      const auto hip = detail::hip_point(s);
      if (!hip) continue;
      v -= axis == Axis::X ? hip->first : hip->second;
    }
    double k = scale.video_scale;
    if (mode == ScaleMode::PerFrame) {
      auto it = scale.per_frame.find(index);
      if (it == scale.per_frame.end()) continue;
      k = it->second;
    }
    const auto i = static_cast<std::size_t>(index - track.first_frame);
    out.values[i] = v / k;
    out.present[i] = true;
  }
  return out;
}

inline RawSignal extract_channel(const Track& track, int joint_index, Axis axis, Reference ref,
                                 ScaleMode mode = ScaleMode::VideoMedian) {
  return extract_channel(track, joint_index, axis, ref, hip_neck_scale(track), mode);
}

/// Missing runs in a raw signal as closed frame intervals.
inline std::vector<std::pair<int, int>> gap_intervals(const RawSignal& s) {
  std::vector<std::pair<int, int>> gaps;
  const std::size_t n = s.present.size();
  std::size_t i = 0;
  while (i < n) {
    if (s.present[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && !s.present[j]) ++j;
    gaps.emplace_back(s.first_frame + static_cast<int>(i), s.first_frame + static_cast<int>(j) - 1);
    i = j;
  }
  return gaps;
}

/// Subtracts the least-squares line through (i, v[i]) in place.
inline void remove_linear_trend(std::vector<double>& v) {
  const std::size_t n = v.size();
  if (n == 0) return;
  const double tmean = 0.5 * static_cast<double>(n - 1);
  double vmean = 0.0;
  for (double x : v) vmean += x;
  vmean /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = static_cast<double>(i) - tmean;
    sxy += dt * (v[i] - vmean);
    sxx += dt * dt;
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = (v[i] - vmean) - slope * (static_cast<double>(i) - tmean);
  }
}

/// Bridges short gaps, keeps the longest contiguous segment when a gap is too
/// long to bridge, then removes the linear trend.
inline Signal fill_and_detrend(const RawSignal& s, const PreprocessConfig& cfg = {}) {
  const std::size_t n = s.values.size();
  const auto present_count = static_cast<long>(std::count(s.present.begin(), s.present.end(), true));
  if (present_count < cfg.min_len) {
    throw Error(ErrorCode::TooShort, s.channel + ": " + std::to_string(present_count) +
                                         " valid samples, need " + std::to_string(cfg.min_len));
  }

  // Segments of present samples, joined across bridgeable gaps.
  struct Segment {
    std::size_t begin, end;  // [begin, end)
  };
  std::vector<Segment> segments;
  std::size_t i = 0;
  while (i < n && !s.present[i]) ++i;
  while (i < n) {
    Segment seg{i, i};
    std::size_t j = i;
    while (j < n) {
      while (j < n && s.present[j]) ++j;
      seg.end = j;
      std::size_t k = j;
      while (k < n && !s.present[k]) ++k;
      if (k == n || k - j > static_cast<std::size_t>(cfg.max_gap)) break;
      j = k;
    }
    segments.push_back(seg);
    i = seg.end;
    while (i < n && !s.present[i]) ++i;
  }

  Segment best = segments.front();
  for (const auto& seg : segments) {
    if (seg.end - seg.begin > best.end - best.begin) best = seg;
  }
  const std::size_t len = best.end - best.begin;
  if (len < static_cast<std::size_t>(cfg.min_len)) {
    throw Error(ErrorCode::TooShort, s.channel + ": longest contiguous segment has " +
                                         std::to_string(len) + " samples, need " +
                                         std::to_string(cfg.min_len));
  }

  Signal out;
  out.channel = s.channel;
  out.fps = s.fps;
  out.first_frame = s.first_frame + static_cast<int>(best.begin);
  out.values.assign(s.values.begin() + static_cast<long>(best.begin),
                    s.values.begin() + static_cast<long>(best.end));
  out.interpolated.assign(len, false);
  std::size_t a = 0;
  while (a < len) {
    if (s.present[best.begin + a]) {
      ++a;
      continue;
    }
    std::size_t b = a;
    while (!s.present[best.begin + b]) ++b;
    // Segment ends are present, so a - 1 and b are valid anchors.
    const double v0 = out.values[a - 1];
    const double v1 = out.values[b];
    const double span = static_cast<double>(b - a + 1);
    for (std::size_t k = a; k < b; ++k) {
      out.values[k] = v0 + (v1 - v0) * static_cast<double>(k - a + 1) / span;
      out.interpolated[k] = true;
    }
    out.source_gaps.emplace_back(out.first_frame + static_cast<int>(a),
                                 out.first_frame + static_cast<int>(b) - 1);
    a = b;
  }
  remove_linear_trend(out.values);
  return out;
}

inline RawSignal to_raw(const Signal& s) {
  return RawSignal{s.channel, s.fps, s.first_frame, s.values, std::vector<bool>(s.values.size(), true)};
}

inline Signal fill_and_detrend(const Signal& s, const PreprocessConfig& cfg = {}) {
  Signal out = fill_and_detrend(to_raw(s), cfg);
  out.interpolated = s.interpolated;
  out.source_gaps = s.source_gaps;
  return out;
}

/// Signal dump: frame, value, interpolated flag.
inline std::string signal_csv(const Signal& s) {
  std::ostringstream out;
  out << "frame,value,interpolated\n";
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    out << s.first_frame + static_cast<int>(i) << ',' << text::format_double(s.values[i]) << ','
        << (s.interpolated[i] ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace gaitpose
