#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "gaitpose/rng.hpp"
#include "gaitpose/spectral_features.hpp"
#include "gaitpose/synth.hpp"

using namespace gaitpose;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> sine(std::size_t n, double fps, double f, double a, double phase = 0.0) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = a * std::sin(2.0 * kPi * f * static_cast<double>(i) / fps + phase);
  return v;
}

// O(N^2) one-sided amplitude spectrum, zero-padded like the FFT path.
std::vector<double> dft_amps(std::vector<double> v) {
  const std::size_t n = v.size();
  std::size_t np = 1;
  while (np < n) np <<= 1;
  v.resize(np, 0.0);
  std::vector<double> amps(np / 2 + 1);
  for (std::size_t k = 0; k <= np / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < np; ++t) {
      acc += v[t] * std::polar(1.0, -2.0 * kPi * static_cast<double>(k * t % np) / static_cast<double>(np));
    }
    amps[k] = ((k == 0 || k == np / 2) ? 1.0 : 2.0) * std::abs(acc) / static_cast<double>(n);
  }
  return amps;
}

Track static_track(int frames) {
  Track t;
  t.last_frame = frames - 1;
  for (int f = 0; f < frames; ++f) {
    Skeleton s;
    s[joint::Neck] = JointPoint{100, 100, 0.9};
    s[joint::RHip] = JointPoint{95, 200, 0.9};
    s[joint::LHip] = JointPoint{105, 200, 0.9};
    s[joint::RAnkle] = JointPoint{110, 300, 0.9};
    s[joint::LAnkle] = JointPoint{90, 300, 0.9};
    t.samples.emplace(f, s);
  }
  return t;
}

}  // namespace

TEST(Fft, ZeroSignal) {
  const Spectrum s = fft_spectrum(std::vector<double>(100, 0.0), 30.0);
  EXPECT_EQ(s.n_padded, 128u);
  for (double a : s.amps) EXPECT_EQ(a, 0.0);
}

TEST(Fft, OnBinSine) {
  const Spectrum s = fft_spectrum(sine(256, 32.0, 2.0, 1.0), 32.0);
  EXPECT_EQ(s.df, 0.125);
  ASSERT_EQ(s.amps.size(), 129u);
  EXPECT_EQ(s.freqs[16], 2.0);
  EXPECT_NEAR(s.amps[16], 1.0, 1e-9);
  for (std::size_t k = 0; k < s.amps.size(); ++k) {
    if (k != 16) {
      EXPECT_LE(s.amps[k], 1e-9) << k;
    }
  }
}

TEST(Fft, TwoSinesByLinearity) {
  auto v = sine(256, 32.0, 1.0, 1.0);
  const auto w = sine(256, 32.0, 3.0, 0.5, 0.7);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += w[i];
  const Spectrum s = fft_spectrum(v, 32.0);
  EXPECT_NEAR(s.amps[8], 1.0, 1e-9);
  EXPECT_NEAR(s.amps[24], 0.5, 1e-9);
}

TEST(Fft, MatchesBruteForceDft) {
  Rng rng(12);
  for (std::size_t n : {64u, 100u, 128u, 200u, 257u}) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    const Spectrum s = fft_spectrum(v, 30.0);
    const auto ref = dft_amps(v);
    ASSERT_EQ(s.amps.size(), ref.size());
    for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(s.amps[k], ref[k], 1e-10) << n << " bin " << k;
  }
}

TEST(Fft, SpectrumShapeInvariants) {
  Rng rng(13);
  std::vector<double> v(150);
  for (auto& x : v) x = rng.uniform(-1, 1);
  for (Window w : {Window::Rectangular, Window::Hann}) {
    const Spectrum s = fft_spectrum(v, 25.0, w);
    EXPECT_EQ(s.freqs.size(), s.n_padded / 2 + 1);
    EXPECT_EQ(s.amps.size(), s.freqs.size());
    EXPECT_DOUBLE_EQ(s.freqs.back(), 12.5);
    for (std::size_t k = 0; k < s.amps.size(); ++k) {
      EXPECT_TRUE(std::isfinite(s.amps[k]));
      EXPECT_GE(s.amps[k], 0.0);
      if (k) {
        EXPECT_GT(s.freqs[k], s.freqs[k - 1]);
      }
    }
  }
}

TEST(Fft, TooShort) {
  try {
    fft_spectrum(std::vector<double>(63, 1.0), 30.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooShort);
  }
}

TEST(BandPower, ZeroSpectrum) {
  const Spectrum s = fft_spectrum(std::vector<double>(256, 0.0), 32.0);
  const auto bp = band_power(s, default_band_edges());
  for (double a : bp.values) EXPECT_EQ(a, 0.0);
}

TEST(BandPower, SingleSine) {
  const Spectrum s = fft_spectrum(sine(256, 32.0, 2.0, 1.0), 32.0);
  const auto bp = band_power(s, default_band_edges());  // 0.5 Hz bands
  const int band = band_index(default_band_edges(), 2.0);
  EXPECT_EQ(band, 4);
  for (int b = 0; b < kBandCount; ++b) {
    if (b == band) {
      EXPECT_NEAR(bp.values[static_cast<std::size_t>(b)], 0.25, 1e-9);
    } else {
      EXPECT_LE(bp.values[static_cast<std::size_t>(b)], 1e-15);
    }
  }
}

TEST(BandPower, CompletenessOverFullRange) {
  Rng rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> v(64 + rng.below(300));
    for (auto& x : v) x = rng.normal();
    const double fps = rng.uniform(20, 60);
    const Spectrum s = fft_spectrum(v, fps);
    double total = 0.0;
    for (std::size_t k = 1; k < s.amps.size(); ++k) total += s.amps[k] * s.amps[k] * s.freqs[k] * s.df;
    const auto bp = band_power(s, default_band_edges(s.freqs.back()));
    double sum = 0.0;
    for (double a : bp.values) {
      EXPECT_GE(a, 0.0);
      sum += a;
    }
    EXPECT_NEAR(sum, total, 1e-9 * total);
  }
}

TEST(BandPower, MembershipIsLeftClosed) {
  const Spectrum s = fft_spectrum(sine(256, 32.0, 1.0, 1.0), 32.0);
  const auto bp = band_power(s, default_band_edges());  // 1.0 Hz is the left edge of band 2
  EXPECT_NEAR(bp.values[2], 0.125, 1e-9);
  EXPECT_LE(bp.values[1], 1e-15);
  BandEdges last = default_band_edges(16.0);  // right edge equals Nyquist
  const Spectrum top = fft_spectrum(sine(256, 32.0, 16.0, 1.0, kPi / 2), 32.0);
  const auto bt = band_power(top, last);
  EXPECT_GT(bt.values[11], 0.0);
  EXPECT_EQ(band_index(last, 16.0), 11);
  EXPECT_EQ(band_index(last, 16.5), -1);
}

TEST(BandPower, BadEdges) {
  const Spectrum s = fft_spectrum(sine(256, 32.0, 2.0, 1.0), 32.0);
  auto code = [&](BandEdges e) {
    try {
      band_power(s, e);
    } catch (const Error& err) {
      return err.code();
    }
    return ErrorCode::InvalidArgument;
  };
  EXPECT_EQ(code(default_band_edges(20.0)), ErrorCode::BadEdges);  // above Nyquist
  BandEdges flat = default_band_edges();
  flat[3] = flat[2];
  EXPECT_EQ(code(flat), ErrorCode::BadEdges);
  BandEdges neg = default_band_edges();
  neg[0] = -0.5;
  EXPECT_EQ(code(neg), ErrorCode::BadEdges);
}

TEST(Features, NamesInFixedOrder) {
  const auto names = feature_names();
  ASSERT_EQ(names.size(), 24u);
  EXPECT_EQ(names[0], "rank_b01");
  EXPECT_EQ(names[11], "rank_b12");
  EXPECT_EQ(names[12], "lank_b01");
  EXPECT_EQ(names[23], "lank_b12");
  FeatureConfig cfg;
  cfg.extra_features = {"video_scale", "duration_s"};
  EXPECT_EQ(feature_names(cfg).size(), 26u);
}

TEST(Features, StaticSkeletonIsAllZero) {
  TrackPair pair;
  pair.right = static_track(128);
  const FeatureVector fv = video_features(pair, {});
  ASSERT_EQ(fv.values.size(), 24u);
  for (double v : fv.values) EXPECT_NEAR(v, 0.0, 1e-20);
}

TEST(Features, ExtrasAppended) {
  TrackPair pair;
  pair.right = static_track(128);
  FeatureConfig cfg;
  cfg.extra_features = {"video_scale", "duration_s"};
  const FeatureVector fv = video_features(pair, cfg);
  ASSERT_EQ(fv.values.size(), 26u);
  EXPECT_EQ(fv.values[24], 100.0);
  EXPECT_NEAR(fv.values[25], 128.0 / 30.0, 1e-12);
  cfg.extra_features = {"bogus"};
  EXPECT_THROW(video_features(pair, cfg), Error);
}

TEST(Features, DominantBandMatchesConstruction) {
  for (double cadence : {80.0, 100.0, 120.0, 140.0}) {
    synth::GaitParams p;
    p.cadence = cadence;
    p.noise_sigma = 0.5;
    const BandEdges edges = default_band_edges();
    const auto gt = synth::generate_gait_track(p, 5, edges);
    TrackPair pair;
    pair.right = gt.track;
    const FeatureVector fv = video_features(pair, {});
    const auto r = std::max_element(fv.values.begin(), fv.values.begin() + 12) - fv.values.begin();
    const auto l = std::max_element(fv.values.begin() + 12, fv.values.end()) - fv.values.begin() - 12;
    EXPECT_EQ(r, gt.dominant_band_right) << cadence;
    EXPECT_EQ(l, gt.dominant_band_left) << cadence;
  }
}

TEST(Features, CameraDistanceInvariance) {
  synth::GaitParams p;
  p.noise_sigma = 1.0;
  const auto gt = synth::generate_gait_track(p, 6, default_band_edges());
  TrackPair near, far;
  near.right = gt.track;
  far.right = synth::scale_track(gt.track, 2.0);
  const FeatureVector a = video_features(near, {});
  const FeatureVector b = video_features(far, {});
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    EXPECT_NEAR(a.values[i], b.values[i], 1e-9 * std::max(1.0, std::abs(a.values[i])));
  }
}

TEST(Features, Stateless) {
  std::vector<Track> tracks;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    synth::GaitParams p;
    p.cadence = 90.0 + 10.0 * static_cast<double>(seed);
    tracks.push_back(synth::generate_gait_track(p, seed, default_band_edges()).track);
  }
  std::vector<FeatureVector> forward, backward;
  for (const auto& t : tracks) forward.push_back(track_features(t, {}));
  for (auto it = tracks.rbegin(); it != tracks.rend(); ++it) backward.push_back(track_features(*it, {}));
  std::reverse(backward.begin(), backward.end());
  EXPECT_EQ(forward, backward);
  for (const auto& fv : forward) {
    for (double v : fv.values) {
      EXPECT_GE(v, 0.0);
      EXPECT_TRUE(std::isfinite(v));
    }
  }
}
