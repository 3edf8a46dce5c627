#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "gaitpose/preprocess.hpp"
#include "gaitpose/rng.hpp"
#include "gaitpose/synth.hpp"

using namespace gaitpose;

namespace {

Skeleton body(double neck_y, double hip_x, double hip_y, double ankle_x) {
  Skeleton s;
  s[joint::Neck] = JointPoint{hip_x, neck_y, 0.9};
  s[joint::RHip] = JointPoint{hip_x - 1, hip_y, 0.9};
  s[joint::LHip] = JointPoint{hip_x + 1, hip_y, 0.9};
  s[joint::RAnkle] = JointPoint{ankle_x, hip_y + 5, 0.9};
  return s;
}

Track track_of(const std::vector<double>& ankle, const std::vector<bool>& present) {
  Track t;
  t.fps = 30.0;
  t.first_frame = 0;
  t.last_frame = static_cast<int>(ankle.size()) - 1;
  for (std::size_t i = 0; i < ankle.size(); ++i) {
    if (present[i]) t.samples.emplace(static_cast<int>(i), body(0, 0, 10, ankle[i] * 10));
  }
  return t;
}

RawSignal raw(std::vector<double> v, std::vector<bool> present) {
  return RawSignal{"x", 30.0, 0, std::move(v), std::move(present)};
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const Eigen::Map<const Eigen::VectorXd> x(a.data(), static_cast<long>(a.size()));
  const Eigen::Map<const Eigen::VectorXd> y(b.data(), static_cast<long>(b.size()));
  const Eigen::VectorXd xc = x.array() - x.mean();
  const Eigen::VectorXd yc = y.array() - y.mean();
  return xc.dot(yc) / (xc.norm() * yc.norm());
}

}  // namespace

TEST(HipNeckScale, DistanceToHipMidpoint) {
  Track t;
  t.last_frame = 0;
  Skeleton s;
  s[joint::Neck] = JointPoint{0, 0, 0.9};
  s[joint::RHip] = JointPoint{-1, 4, 0.9};
  s[joint::LHip] = JointPoint{1, 4, 0.9};
  t.samples.emplace(0, s);
  const ScaleEstimate est = hip_neck_scale(t);
  EXPECT_EQ(est.video_scale, 4.0);
  EXPECT_EQ(est.per_frame.at(0), 4.0);
}

TEST(HipNeckScale, MedianAcrossFrames) {
  Track t;
  t.last_frame = 3;
  for (int i = 0; i < 4; ++i) t.samples.emplace(i, body(0, 0, 1.0 + i, 0));  // 1, 2, 3, 4
  EXPECT_EQ(hip_neck_scale(t).video_scale, 2.5);
}

TEST(HipNeckScale, SingleHipFallback) {
  Track t;
  t.last_frame = 0;
  Skeleton s;
  s[joint::Neck] = JointPoint{3, 0, 0.9};
  s[joint::LHip] = JointPoint{3, 7, 0.9};
  t.samples.emplace(0, s);
  EXPECT_EQ(hip_neck_scale(t).video_scale, 7.0);
}

TEST(HipNeckScale, NoNeckIsAnError) {
  Track t;
  t.last_frame = 0;
  Skeleton s;
  s[joint::RHip] = JointPoint{3, 7, 0.9};
  t.samples.emplace(0, s);
  try {
    hip_neck_scale(t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoScale);
  }
}

TEST(ExtractChannel, RelativeToHipAndScaled) {
  Track t;
  t.last_frame = 0;
  Skeleton s;
  s[joint::Neck] = JointPoint{4, 0, 0.9};
  s[joint::RHip] = JointPoint{3, 2, 0.9};
  s[joint::LHip] = JointPoint{5, 2, 0.9};
  s[joint::RAnkle] = JointPoint{10, 9, 0.9};
  t.samples.emplace(0, s);
  const RawSignal r = extract_channel(t, joint::RAnkle, Axis::X, Reference::HipMidpoint);
  EXPECT_EQ(r.channel, "R-ankle-x-rel");
  ASSERT_EQ(r.values.size(), 1u);
  EXPECT_EQ(r.values[0], 3.0);  // (10 - 4) / 2
  EXPECT_TRUE(r.present[0]);
}

TEST(ExtractChannel, MissingJointIsNotPresent) {
  Track t;
  t.last_frame = 2;
  t.samples.emplace(0, body(0, 0, 10, 5));
  Skeleton no_ankle = body(0, 0, 10, 5);
  no_ankle[joint::RAnkle] = JointPoint{};
  t.samples.emplace(1, no_ankle);
  const RawSignal r = extract_channel(t, joint::RAnkle, Axis::X, Reference::HipMidpoint);
  ASSERT_EQ(r.present.size(), 3u);
  EXPECT_TRUE(r.present[0]);
  EXPECT_FALSE(r.present[1]);
  EXPECT_FALSE(r.present[2]);  // gap frame, no sample at all
  EXPECT_EQ(gap_intervals(r), (std::vector<std::pair<int, int>>{{1, 2}}));
}

TEST(ExtractChannel, ScaleInvariance) {
  synth::GaitParams p;
  p.noise_sigma = 0.0;
  const auto gt = synth::generate_gait_track(p, 3, default_band_edges());
  const RawSignal a = extract_channel(gt.track, joint::LAnkle, Axis::X, Reference::HipMidpoint);
  for (double k : {0.5, 2.0, 7.0}) {
    const RawSignal b = extract_channel(synth::scale_track(gt.track, k), joint::LAnkle, Axis::X, Reference::HipMidpoint);
    ASSERT_EQ(a.values.size(), b.values.size());
    for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-12);
  }
}

TEST(ExtractChannel, BadJointIndex) {
  Track t;
  t.samples.emplace(0, body(0, 0, 10, 5));
  EXPECT_THROW(extract_channel(t, 18, Axis::X, Reference::None), Error);
}

TEST(Detrend, RampAndConstantVanish) {
  std::vector<double> ramp(100), flat(100, 3.5);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = 2.0 + 0.25 * static_cast<double>(i);
  remove_linear_trend(ramp);
  remove_linear_trend(flat);
  for (std::size_t i = 0; i < 100; ++i) {
    EXPECT_NEAR(ramp[i], 0.0, 1e-12);
    EXPECT_NEAR(flat[i], 0.0, 1e-12);
  }
}

TEST(Detrend, MatchesLeastSquaresResidual) {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 10 + static_cast<int>(rng.below(200));
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = rng.normal() + 0.1 * static_cast<double>(&x - v.data());
    Eigen::MatrixXd A(n, 2);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) {
      A(i, 0) = 1.0;
      A(i, 1) = i;
      b(i) = v[static_cast<std::size_t>(i)];
    }
    const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(b);
    const Eigen::VectorXd resid = b - A * coef;
    remove_linear_trend(v);
    for (int i = 0; i < n; ++i) EXPECT_NEAR(v[static_cast<std::size_t>(i)], resid(i), 1e-9);
  }
}

TEST(FillAndDetrend, OutputHasNoMeanOrSlope) {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 100 + rng.below(100);
    std::vector<double> v(n);
    std::vector<bool> present(n, true);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = rng.uniform(-3, 3) + 0.05 * static_cast<double>(i);
      if (i > 0 && i + 1 < n && rng.uniform() < 0.1) present[i] = false;
    }
    const Signal s = fill_and_detrend(raw(v, present));
    const double tmean = 0.5 * static_cast<double>(s.values.size() - 1);
    double sum = 0.0, slope = 0.0;
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      sum += s.values[i];
      slope += s.values[i] * (static_cast<double>(i) - tmean);
    }
    EXPECT_NEAR(sum, 0.0, 1e-9);
    EXPECT_NEAR(slope, 0.0, 1e-7);
    for (double x : s.values) EXPECT_TRUE(std::isfinite(x));
  }
}

TEST(FillAndDetrend, InterpolatesShortGapLinearly) {
  std::vector<double> v(80);
  std::vector<bool> present(80, true);
  for (std::size_t i = 0; i < 80; ++i) v[i] = i % 2 ? 1.0 : 0.0;
  v[10] = 2.0;
  v[14] = 6.0;
  for (int i = 11; i <= 13; ++i) present[static_cast<std::size_t>(i)] = false;
  PreprocessConfig cfg;
  cfg.min_len = 10;
  const Signal s = fill_and_detrend(raw(v, present), cfg);
  ASSERT_EQ(s.values.size(), 80u);
  EXPECT_EQ(s.source_gaps, (std::vector<std::pair<int, int>>{{11, 13}}));
  for (int i = 0; i < 80; ++i) EXPECT_EQ(s.interpolated[static_cast<std::size_t>(i)], i >= 11 && i <= 13);
  // Differences between neighbours survive detrending up to the constant slope.
  const double d1 = s.values[12] - s.values[11];
  const double d2 = s.values[13] - s.values[12];
  EXPECT_NEAR(d1, d2, 1e-12);
  EXPECT_NEAR((s.values[11] - s.values[10]) - d1, 0.0, 1e-12);
}

TEST(FillAndDetrend, LongGapKeepsLongestSegment) {
  std::vector<double> v(200, 0.0);
  std::vector<bool> present(200, true);
  for (std::size_t i = 0; i < 200; ++i) v[i] = std::sin(0.3 * static_cast<double>(i));
  for (int i = 60; i < 80; ++i) present[static_cast<std::size_t>(i)] = false;  // 20 > 15
  const Signal s = fill_and_detrend(raw(v, present));
  EXPECT_EQ(s.first_frame, 80);
  EXPECT_EQ(s.values.size(), 120u);
  EXPECT_TRUE(s.source_gaps.empty());
}

TEST(FillAndDetrend, GapOfExactlyMaxIsBridged) {
  std::vector<double> v(200, 0.0);
  std::vector<bool> present(200, true);
  for (int i = 60; i < 75; ++i) present[static_cast<std::size_t>(i)] = false;
  const Signal s = fill_and_detrend(raw(v, present));
  EXPECT_EQ(s.values.size(), 200u);
  EXPECT_EQ(s.source_gaps.size(), 1u);
}

TEST(FillAndDetrend, TooShort) {
  auto code = [](std::size_t n, const std::vector<bool>& present) {
    try {
      fill_and_detrend(raw(std::vector<double>(n, 1.0), present));
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  EXPECT_EQ(code(63, std::vector<bool>(63, true)), ErrorCode::TooShort);
  std::vector<bool> split(120, true);
  for (int i = 50; i < 70; ++i) split[static_cast<std::size_t>(i)] = false;
  EXPECT_EQ(code(120, split), ErrorCode::TooShort);  // 100 samples, longest run 50
  EXPECT_NO_THROW(fill_and_detrend(raw(std::vector<double>(64, 1.0), std::vector<bool>(64, true))));
}

TEST(FillAndDetrend, SineThroughGapStaysCorrelated) {
  const std::size_t n = 256;
  std::vector<double> v(n);
  std::vector<bool> present(n, true);
  for (std::size_t i = 0; i < n; ++i) v[i] = std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / 64.0);
  const Signal reference = fill_and_detrend(raw(v, present));
  for (int i = 100; i < 103; ++i) present[static_cast<std::size_t>(i)] = false;
  const Signal s = fill_and_detrend(raw(v, present));
  EXPECT_EQ(s.source_gaps.size(), 1u);
  EXPECT_GT(correlation(s.values, reference.values), 0.99);
}

TEST(FillAndDetrend, TrackPipelineEndToEnd) {
  std::vector<double> ankle(128);
  std::vector<bool> present(128, true);
  for (std::size_t i = 0; i < 128; ++i) ankle[i] = std::sin(0.2 * static_cast<double>(i));
  for (int i = 40; i < 45; ++i) present[static_cast<std::size_t>(i)] = false;
  const Track t = track_of(ankle, present);
  const Signal s = fill_and_detrend(extract_channel(t, joint::RAnkle, Axis::X, Reference::HipMidpoint));
  EXPECT_EQ(s.values.size(), 128u);
  EXPECT_EQ(s.source_gaps, (std::vector<std::pair<int, int>>{{40, 44}}));
  const std::string csv = signal_csv(s);
  EXPECT_EQ(csv.rfind("frame,value,interpolated\n", 0), 0u);
}

TEST(FillAndDetrend, Idempotent) {
  Rng rng(11);
  std::vector<double> v(150);
  std::vector<bool> present(150, true);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.normal() + 0.02 * static_cast<double>(i);
  for (int i = 30; i < 35; ++i) present[static_cast<std::size_t>(i)] = false;
  const Signal once = fill_and_detrend(raw(v, present));
  const Signal twice = fill_and_detrend(once);
  ASSERT_EQ(once.values.size(), twice.values.size());
  for (std::size_t i = 0; i < once.values.size(); ++i) EXPECT_NEAR(once.values[i], twice.values[i], 1e-12);
  EXPECT_EQ(once.interpolated, twice.interpolated);
}
