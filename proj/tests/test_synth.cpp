#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gaitpose/preprocess.hpp"
#include "gaitpose/spectral_features.hpp"
#include "gaitpose/synth.hpp"

using namespace gaitpose;

TEST(GaitTrack, AnkleChannelIsTheOffsetCurve) {
  synth::GaitParams p;
  p.cadence = 100.0;
  p.step_length = 0.5;
  p.phase = 0.4;
  p.noise_sigma = 0.0;
  const auto gt = synth::generate_gait_track(p, 1);
  EXPECT_EQ(gt.track.samples.size(), 1024u);
  const RawSignal r = extract_channel(gt.track, joint::RAnkle, Axis::X, Reference::HipMidpoint);
  const RawSignal l = extract_channel(gt.track, joint::LAnkle, Axis::X, Reference::HipMidpoint);
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    const double t = static_cast<double>(i) / p.fps;
    EXPECT_NEAR(r.values[i], synth::ankle_offset(p, t, false), 1e-12);
    EXPECT_NEAR(l.values[i], synth::ankle_offset(p, t, true), 1e-12);
  }
}

TEST(GaitTrack, SpectrumShowsStrideAndStep) {
  synth::GaitParams p;  // cadence 120: stride 1 Hz, step 2 Hz, both on bins at 32 fps x 32 s
  p.noise_sigma = 0.0;
  p.step_length = 0.6;
  const auto gt = synth::generate_gait_track(p, 2);
  EXPECT_EQ(gt.stride_hz, 1.0);
  EXPECT_EQ(gt.step_hz, 2.0);
  const RawSignal r = extract_channel(gt.track, joint::RAnkle, Axis::X, Reference::HipMidpoint);
  const Spectrum s = fft_spectrum(r.values, p.fps);
  EXPECT_EQ(s.df, 1.0 / 32.0);
  EXPECT_NEAR(s.amps[32], 0.3, 1e-9);
  EXPECT_NEAR(s.amps[64], 0.3 * p.harmonic_ratio, 1e-9);
}

TEST(GaitTrack, AnalyticDominantBandRule) {
  synth::GaitParams p;
  const BandEdges e = default_band_edges();  // 0.5 Hz bands
  p.cadence = 120.0;  // 1 Hz vs 2 Hz: 1.0 >= 0.09 * 2
  EXPECT_EQ(synth::analytic_dominant_band(p, e), band_index(e, 1.0));
  p.harmonic_ratio = 0.9;  // 1.0 < 0.81 * 2.0
  EXPECT_EQ(synth::analytic_dominant_band(p, e), band_index(e, 2.0));
}

TEST(GaitTrack, SeedDeterminismAndNoise) {
  synth::GaitParams p;
  p.noise_sigma = 2.0;
  const auto a = synth::generate_gait_track(p, 7);
  const auto b = synth::generate_gait_track(p, 7);
  const auto c = synth::generate_gait_track(p, 8);
  EXPECT_EQ(a.track, b.track);
  EXPECT_NE(a.track, c.track);
}

TEST(GaitTrack, RejectsUnrepresentableParameters) {
  synth::GaitParams p;
  p.fps = 10.0;  // 3rd harmonic of a 2 Hz step frequency needs more than 12 fps
  try {
    synth::generate_gait_track(p, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NyquistViolation);
  }
  p.fps = 32.0;
  p.cadence = 0.0;
  EXPECT_THROW(synth::generate_gait_track(p, 1), Error);
}

TEST(ScaleTrack, MultipliesCoordinates) {
  synth::GaitParams p;
  p.duration_s = 1.0;
  const auto gt = synth::generate_gait_track(p, 3);
  const Track t = synth::scale_track(gt.track, 3.0);
  for (const auto& [f, s] : gt.track.samples) {
    for (int j = 0; j < kJointCount; ++j) {
      EXPECT_DOUBLE_EQ(t.samples.at(f)[j].x, 3.0 * s[j].x);
      EXPECT_DOUBLE_EQ(t.samples.at(f)[j].y, 3.0 * s[j].y);
      EXPECT_EQ(t.samples.at(f)[j].c, s[j].c);
    }
  }
}

TEST(Scene, LabelsAlignWithEntries) {
  const auto spec = synth::standard_scene(4);
  const auto scene = synth::generate_scene(spec);
  ASSERT_EQ(scene.sequence.frames.size(), 600u);
  ASSERT_EQ(scene.labels.size(), 600u);
  EXPECT_EQ(scene.kinds.size(), 4u);
  for (std::size_t f = 0; f < 600; ++f) {
    ASSERT_EQ(scene.labels[f].size(), scene.sequence.frames[f].entries.size());
    int companions = 0, frontal = 0;
    for (int id : scene.labels[f]) {
      companions += scene.kinds[static_cast<std::size_t>(id)] == synth::ActorKind::Companion;
      frontal += scene.kinds[static_cast<std::size_t>(id)] == synth::ActorKind::PatientFrontal;
    }
    const int fi = static_cast<int>(f);
    EXPECT_EQ(companions, fi >= 50 && fi <= 250 ? 1 : 0) << f;
    EXPECT_EQ(frontal, fi >= 350 && fi <= 449 ? 0 : 1) << f;
  }
  EXPECT_EQ(synth::generate_scene(spec).sequence.frames, scene.sequence.frames);
}

TEST(Scene, ShadowMirrorsTheLateralWalker) {
  synth::StandardSceneOptions opt;
  opt.noise_sigma = 0.0;
  opt.companion = false;
  const auto spec = synth::standard_scene(5, opt);
  const auto scene = synth::generate_scene(spec);
  const auto& f = scene.sequence.frames[10];
  const Skeleton* lateral = nullptr;
  const Skeleton* shadow = nullptr;
  for (std::size_t e = 0; e < f.entries.size(); ++e) {
    const auto kind = scene.kinds[static_cast<std::size_t>(scene.labels[10][e])];
    if (kind == synth::ActorKind::PatientLateral) lateral = &f.entries[e];
    if (kind == synth::ActorKind::Shadow) shadow = &f.entries[e];
  }
  ASSERT_TRUE(lateral && shadow);
  EXPECT_NEAR((*shadow)[joint::Neck].y - (*lateral)[joint::Neck].y, -260.0, 1e-9);
  EXPECT_LT((*shadow)[joint::Neck].c, (*lateral)[joint::Neck].c);
}

TEST(Scene, NeedsAPatient) {
  synth::SceneSpec spec;
  synth::ActorSpec a;
  a.kind = synth::ActorKind::Companion;
  spec.actors.push_back(a);
  EXPECT_THROW(synth::generate_scene(spec), Error);
}

TEST(ScoreCleaning, PerfectAssignmentScoresOne) {
  synth::StandardSceneOptions opt;
  opt.companion = false;
  opt.shadow = false;
  opt.frontal_occlusion.reset();
  const auto scene = synth::generate_scene(synth::standard_scene(6, opt));
  const TrackPair pair = clean_sequence(scene.sequence, {});
  const auto score = synth::score_cleaning(scene, pair);
  EXPECT_EQ(score.patient_entries, 1200);
  EXPECT_EQ(score.accuracy(), 1.0);
  EXPECT_EQ(score.distractor_assigned, 0);
}

TEST(ScoreCleaning, MisassignmentIsCounted) {
  synth::StandardSceneOptions opt;
  opt.companion = false;
  opt.shadow = false;
  opt.frontal_occlusion.reset();
  const auto scene = synth::generate_scene(synth::standard_scene(6, opt));
  TrackPair pair = clean_sequence(scene.sequence, {});
  std::swap(pair.diagnostics[100].left_entry, pair.diagnostics[100].right_entry);
  const auto score = synth::score_cleaning(scene, pair);
  EXPECT_EQ(score.patient_correct, 1198);
}

TEST(Dataset, TargetsAndDeterminism) {
  const FeatureTable a = synth::generate_dataset(12, {}, 99);
  const FeatureTable b = synth::generate_dataset(12, {}, 99);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.rows.size(), 12u);
  EXPECT_EQ(a.feature_names.size(), 24u);
  for (const auto& row : a.rows) {
    const double cad = row.targets.at("cadence");
    const double sl = row.targets.at("step_length");
    EXPECT_GE(cad, 80.0);
    EXPECT_LE(cad, 140.0);
    EXPECT_NEAR(row.targets.at("speed"), sl * cad / 60.0, 1e-12);
    EXPECT_EQ(row.targets.at("gmfcs"), synth::synthetic_gmfcs(row.targets.at("speed")));
    EXPECT_EQ(row.values.size(), 24u);
  }
  EXPECT_EQ(a.rows[3].id, "synth-000003");
  // Rows depend only on (seed, index).
  const FeatureTable c = synth::generate_dataset(5, {}, 99);
  EXPECT_EQ(c.rows[4], a.rows[4]);
}

TEST(Dataset, GmfcsLevels) {
  EXPECT_EQ(synth::synthetic_gmfcs(1.5), 1);
  EXPECT_EQ(synth::synthetic_gmfcs(1.2), 2);
  EXPECT_EQ(synth::synthetic_gmfcs(1.0), 3);
  EXPECT_EQ(synth::synthetic_gmfcs(0.8), 4);
  EXPECT_EQ(synth::synthetic_gmfcs(0.3), 5);
}
