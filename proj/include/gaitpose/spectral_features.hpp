#pragma once

// Frequency-domain gait features. Each ankle channel is turned into a one-sided
// amplitude spectrum A(f), and every band [f_i, f_{i+1}) contributes the
// frequency-weighted power a_i = sum_k A_k^2 f_k df.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "gaitpose/error.hpp"
#include "gaitpose/preprocess.hpp"
#include "gaitpose/track_cleaner.hpp"

namespace gaitpose {

inline constexpr int kBandCount = 12;
using BandEdges = std::array<double, kBandCount + 1>;

/// Twelve equal-width bands over (0, 6] Hz.
inline BandEdges default_band_edges(double max_hz = 6.0) {
  BandEdges e{};
  for (int i = 0; i <= kBandCount; ++i) e[static_cast<std::size_t>(i)] = max_hz * i / kBandCount;
  return e;
}

enum class Window { Rectangular, Hann };

struct Spectrum {
  std::vector<double> freqs;
  std::vector<double> amps;
  double df = 0.0;
  std::size_t n_signal = 0;
  std::size_t n_padded = 0;
};

struct BandPowerFeatures {
  BandEdges edges{};
  std::array<double, kBandCount> values{};
  std::string channel;
};

struct FeatureVector {
  std::string id;
  std::vector<std::string> names;
  std::vector<double> values;
  std::map<std::string, double> targets;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Rows share one column layout; `target_names` lists the target columns in file order.
struct FeatureTable {
  std::vector<std::string> feature_names;
  std::vector<std::string> target_names;
  std::vector<FeatureVector> rows;

  friend bool operator==(const FeatureTable&, const FeatureTable&) = default;
};

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// In-place iterative radix-2 FFT; size must be a power of two.
inline void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (n < 2) return;
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        // Twiddles from the angle directly; a running product drifts by ~1e-13 at n = 2^16.
        const std::complex<double> w(std::cos(ang * static_cast<double>(k)),
                                     std::sin(ang * static_cast<double>(k)));
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
}

/// One-sided amplitude spectrum, scaled so that a sinusoid of amplitude a that
/// falls on a bin shows up with amplitude a. Zero-pads to the next power of two.
inline Spectrum fft_spectrum(const std::vector<double>& values, double fps, Window window = Window::Rectangular,
                             std::size_t min_len = 64) {
  const std::size_t n = values.size();
  if (n < min_len || n < 2) {
    throw Error(ErrorCode::TooShort, "spectrum needs at least " + std::to_string(min_len) + " samples, got " +
                                         std::to_string(n));
  }
  const std::size_t np = next_pow2(n);
  std::vector<std::complex<double>> buf(np, {0.0, 0.0});
  double gain = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double w = 1.0;
    if (window == Window::Hann) {
      w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    }
    gain += w;
    buf[i] = values[i] * w;
  }
  fft_inplace(buf);

  Spectrum spec;
  spec.n_signal = n;
  spec.n_padded = np;
  spec.df = fps / static_cast<double>(np);
  const std::size_t half = np / 2;
  spec.freqs.resize(half + 1);
  spec.amps.resize(half + 1);
  for (std::size_t k = 0; k <= half; ++k) {
    spec.freqs[k] = static_cast<double>(k) * spec.df;
    const double scale = (k == 0 || k == half) ? 1.0 : 2.0;
    spec.amps[k] = scale * std::abs(buf[k]) / gain;
  }
  return spec;
}

inline Spectrum fft_spectrum(const Signal& s, Window window = Window::Rectangular, std::size_t min_len = 64) {
  return fft_spectrum(s.values, s.fps, window, min_len);
}

inline void validate_edges(const BandEdges& edges, double nyquist) {
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!std::isfinite(edges[i]) || edges[i] < 0.0 || edges[i] > nyquist * (1.0 + 1e-12)) {
      throw Error(ErrorCode::BadEdges, "band edge " + text::format_double(edges[i]) +
                                           " outside [0, " + text::format_double(nyquist) + "]");
    }
    if (i > 0 && !(edges[i] > edges[i - 1])) {
      throw Error(ErrorCode::BadEdges, "band edges must be strictly ascending");
    }
  }
}

/// Bands are left-closed, right-open except the last, which also takes its
/// right edge. The DC bin never contributes.
inline BandPowerFeatures band_power(const Spectrum& spec, const BandEdges& edges) {
  const double nyquist = spec.freqs.empty() ? 0.0 : spec.freqs.back();
  validate_edges(edges, nyquist);
  BandPowerFeatures out;
  out.edges = edges;
  for (std::size_t k = 1; k < spec.freqs.size(); ++k) {
    const double f = spec.freqs[k];
    if (f < edges.front() || f > edges.back()) continue;
    auto it = std::upper_bound(edges.begin(), edges.end(), f);
    auto band = static_cast<std::size_t>(it - edges.begin()) - 1;
    if (band >= static_cast<std::size_t>(kBandCount)) band = kBandCount - 1;  // f == last edge
    out.values[band] += spec.amps[k] * spec.amps[k] * f * spec.df;
  }
  return out;
}

/// Band whose interval holds `f` under band_power's membership rule, or -1.
inline int band_index(const BandEdges& edges, double f) {
  if (f < edges.front() || f > edges.back()) return -1;
  auto it = std::upper_bound(edges.begin(), edges.end(), f);
  const int band = static_cast<int>(it - edges.begin()) - 1;
  return std::min(band, kBandCount - 1);
}

struct FeatureConfig {
  BandEdges edges = default_band_edges();
  Window window = Window::Rectangular;
  Axis axis = Axis::X;
  Reference reference = Reference::HipMidpoint;
  PreprocessConfig preprocess;
  /// Optional scalars appended after the 24 band powers: "video_scale", "duration_s".
  std::vector<std::string> extra_features;
};

inline std::vector<std::string> feature_names(const FeatureConfig& cfg = {}) {
  std::vector<std::string> names;
  for (const char* prefix : {"rank", "lank"}) {
    for (int b = 1; b <= kBandCount; ++b) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%s_b%02d", prefix, b);
      names.emplace_back(buf);
    }
  }
  for (const auto& extra : cfg.extra_features) names.push_back(extra);
  return names;
}

/// 24 band powers from both ankles of one track: right ankle (joint 10) then
/// left ankle (joint 13).
inline FeatureVector track_features(const Track& track, const FeatureConfig& cfg, const std::string& id = "") {
  FeatureVector fv;
  fv.id = id;
  fv.names = feature_names(cfg);
  const ScaleEstimate scale = hip_neck_scale(track);
  double duration = 0.0;
  for (int ankle : {joint::RAnkle, joint::LAnkle}) {
    const RawSignal raw =
        extract_channel(track, ankle, cfg.axis, cfg.reference, scale, cfg.preprocess.scale_mode);
    const Signal sig = fill_and_detrend(raw, cfg.preprocess);
    duration = std::max(duration, static_cast<double>(sig.values.size()) / sig.fps);
    const Spectrum spec = fft_spectrum(sig, cfg.window, static_cast<std::size_t>(cfg.preprocess.min_len));
    const BandPowerFeatures bp = band_power(spec, cfg.edges);
    fv.values.insert(fv.values.end(), bp.values.begin(), bp.values.end());
  }
  for (const auto& extra : cfg.extra_features) {
    if (extra == "video_scale") {
      fv.values.push_back(scale.video_scale);
    } else if (extra == "duration_s") {
      fv.values.push_back(duration);
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown extra feature '" + extra + "'");
    }
  }
  return fv;
}

/// Features come from the right-position view only.
inline FeatureVector video_features(const TrackPair& pair, const FeatureConfig& cfg, const std::string& id = "") {
  return track_features(pair.right, cfg, id);
}

}  // namespace gaitpose
