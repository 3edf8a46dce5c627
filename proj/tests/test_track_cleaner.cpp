#include <gtest/gtest.h>

#include <algorithm>

#include "gaitpose/synth.hpp"
#include "gaitpose/track_cleaner.hpp"

using namespace gaitpose;

namespace {

Skeleton blob(double x, double y, double c = 0.9) {
  Skeleton s;
  for (auto& j : s.joints) j = JointPoint{x, y, c};
  return s;
}

Frame frame(int index, std::vector<Skeleton> entries) { return Frame{index, index / 30.0, std::move(entries)}; }

FrameSequence sequence(std::vector<Frame> frames, double width = 640) {
  FrameSequence s;
  s.frames = std::move(frames);
  s.image_width = width;
  s.image_height = 480;
  return s;
}

CenterOfGravity at(double x, double y) { return CenterOfGravity{x, y, 10, 0.9}; }

}  // namespace

TEST(CenterOfGravity, ConstantSkeleton) {
  const auto cog = center_of_gravity(blob(5, 5, 1.0), 0.1);
  ASSERT_TRUE(cog);
  EXPECT_EQ(cog->x, 5.0);
  EXPECT_EQ(cog->y, 5.0);
  EXPECT_EQ(cog->support, 10);
}

TEST(CenterOfGravity, SingleSupport) {
  Skeleton s;
  s[0] = JointPoint{10, 20, 0.9};
  const auto cog = center_of_gravity(s, 0.5);
  ASSERT_TRUE(cog);
  EXPECT_EQ(cog->x, 10.0);
  EXPECT_EQ(cog->y, 20.0);
  EXPECT_EQ(cog->support, 1);
}

TEST(CenterOfGravity, MeanOfTwo) {
  Skeleton s;
  s[0] = JointPoint{0, 0, 0.9};
  s[1] = JointPoint{2, 4, 0.9};
  const auto cog = center_of_gravity(s, 0.1);
  ASSERT_TRUE(cog);
  EXPECT_EQ(cog->x, 1.0);
  EXPECT_EQ(cog->y, 2.0);
  EXPECT_EQ(cog->support, 2);
}

TEST(CenterOfGravity, IgnoresNonSubsetAndLowConfidenceJoints) {
  Skeleton s;
  s[joint::RAnkle] = JointPoint{100, 100, 1.0};  // limbs never contribute
  s[joint::LWrist] = JointPoint{200, 100, 1.0};
  EXPECT_FALSE(center_of_gravity(s, 0.1));
  s[joint::Neck] = JointPoint{50, 60, 0.05};
  EXPECT_FALSE(center_of_gravity(s, 0.1));
  s[joint::Nose] = JointPoint{30, 40, 0.2};
  const auto cog = center_of_gravity(s, 0.1);
  ASSERT_TRUE(cog);
  EXPECT_EQ(cog->x, 30.0);
  EXPECT_EQ(cog->support, 1);
}

TEST(InitializeTracks, LeftmostBecomesLeftView) {
  const auto seq = sequence({frame(0, {blob(500, 100), blob(100, 100)})});
  const TrackSeed seed = initialize_tracks(seq, {});
  EXPECT_EQ(seed.init_frame, 0);
  EXPECT_EQ(seed.left.x, 100.0);
  EXPECT_EQ(seed.right.x, 500.0);
  EXPECT_EQ(seed.left_entry, 1u);
  EXPECT_EQ(seed.right_entry, 0u);
}

TEST(InitializeTracks, WaitsForTwoEntries) {
  std::vector<Frame> frames;
  for (int i = 0; i < 5; ++i) frames.push_back(frame(i, {blob(100, 100)}));
  frames.push_back(frame(5, {blob(100, 100), blob(400, 100)}));
  EXPECT_EQ(initialize_tracks(sequence(frames), {}).init_frame, 5);
}

TEST(InitializeTracks, SingleEntryEverywhereFails) {
  std::vector<Frame> frames;
  for (int i = 0; i < 10; ++i) frames.push_back(frame(i, {blob(100, 100)}));
  try {
    initialize_tracks(sequence(frames), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoInitFrame);
  }
}

TEST(InitializeTracks, SeedsPreferSupportThenConfidence) {
  Skeleton sparse;
  sparse[0] = JointPoint{50, 50, 1.0};
  Skeleton low = blob(300, 100, 0.3);
  Skeleton high = blob(200, 100, 0.8);
  const TrackSeed seed = initialize_tracks(sequence({frame(0, {sparse, low, high})}), {});
  EXPECT_EQ(seed.left_entry, 2u);   // x = 200
  EXPECT_EQ(seed.right_entry, 1u);  // x = 300
}

TEST(AssignFrame, GateRejectsFarEntry) {
  // 0.15 * 640 = 96 px gate.
  const TrackMemory mem{at(100, 100), at(500, 100)};
  const auto a = assign_frame(mem, frame(1, {blob(103, 100), blob(500, 100)}), {}, 640);
  ASSERT_TRUE(a.left);
  EXPECT_EQ(*a.left, 0u);
  const auto b = assign_frame(TrackMemory{at(100, 100), at(5000, 0)}, frame(1, {blob(103, 100), blob(500, 100)}), {},
                              640);
  EXPECT_EQ(*b.left, 0u);
  EXPECT_FALSE(b.right);
  ASSERT_EQ(b.rejected.size(), 1u);
  EXPECT_EQ(b.rejected[0], 1u);
}

TEST(AssignFrame, MinimumTotalCostBeatsGreedy) {
  // left->0 = 0.5, left->1 = 10, right->0 = 0.5, right->1 = 11.
  // Nearest-first for the left track gives 0.5 + 11; the optimum is 10 + 0.5.
  const TrackMemory mem{at(100, 0), at(101, 0)};
  const auto a = assign_frame(mem, frame(1, {blob(100.5, 0), blob(90, 0)}), {}, 1000);
  ASSERT_TRUE(a.left && a.right);
  EXPECT_EQ(*a.left, 1u);
  EXPECT_EQ(*a.right, 0u);
  EXPECT_DOUBLE_EQ(a.total_distance, 10.5);
}

TEST(AssignFrame, EmptyFrameAssignsNothing) {
  const auto a = assign_frame(TrackMemory{at(0, 0), at(100, 0)}, frame(3, {}), {}, 640);
  EXPECT_FALSE(a.left);
  EXPECT_FALSE(a.right);
  EXPECT_TRUE(a.rejected.empty());
}

TEST(AssignFrame, BruteForceOptimalityProperty) {
  Rng rng(21);
  const double width = 640.0;
  const double gate = 0.15 * width;
  for (int trial = 0; trial < 500; ++trial) {
    const TrackMemory mem{at(rng.uniform(0, 640), rng.uniform(0, 480)), at(rng.uniform(0, 640), rng.uniform(0, 480))};
    std::vector<Skeleton> entries;
    const int n = static_cast<int>(rng.below(5));
    for (int i = 0; i < n; ++i) entries.push_back(blob(rng.uniform(0, 640), rng.uniform(0, 480)));
    const auto a = assign_frame(mem, frame(1, entries), {}, width);

    // Enumerate every (left, right) choice including "none".
    int best_count = -1;
    double best_cost = 0.0;
    auto d = [&](const CenterOfGravity& m, int i) {
      return std::hypot(m.x - entries[static_cast<std::size_t>(i)][0].x, m.y - entries[static_cast<std::size_t>(i)][0].y);
    };
    for (int l = -1; l < n; ++l) {
      for (int r = -1; r < n; ++r) {
        if (l >= 0 && l == r) continue;
        if (l >= 0 && d(mem.left, l) > gate) continue;
        if (r >= 0 && d(mem.right, r) > gate) continue;
        const int count = (l >= 0) + (r >= 0);
        const double cost = (l >= 0 ? d(mem.left, l) : 0.0) + (r >= 0 ? d(mem.right, r) : 0.0);
        if (count > best_count || (count == best_count && cost < best_cost)) {
          best_count = count;
          best_cost = cost;
        }
      }
    }
    const int got_count = a.left.has_value() + a.right.has_value();
    EXPECT_EQ(got_count, best_count);
    EXPECT_NEAR(a.total_distance, best_cost, 1e-9);
    // Conservation: each entry is exactly one of left, right or rejected.
    EXPECT_EQ(static_cast<std::size_t>(got_count) + a.rejected.size(), entries.size());
  }
}

TEST(CleanSequence, PerfectTwoEntryScene) {
  synth::StandardSceneOptions opt;
  opt.companion = false;
  opt.shadow = false;
  opt.frontal_occlusion.reset();
  const auto scene = synth::generate_scene(synth::standard_scene(3, opt));
  const TrackPair pair = clean_sequence(scene.sequence, {});
  EXPECT_TRUE(pair.left.gaps.empty());
  EXPECT_TRUE(pair.right.gaps.empty());
  for (const auto& d : pair.diagnostics) EXPECT_EQ(d.rejected, 0);
  const auto score = synth::score_cleaning(scene, pair);
  EXPECT_EQ(score.patient_correct, score.patient_entries);
}

TEST(CleanSequence, FourActorSceneAccuracy) {
  const auto scene = synth::generate_scene(synth::standard_scene(11));
  const TrackPair pair = clean_sequence(scene.sequence, {});
  const auto score = synth::score_cleaning(scene, pair);
  EXPECT_GE(score.accuracy(), 0.99);
  EXPECT_EQ(score.distractor_assigned, 0);
}

TEST(CleanSequence, OccludedFrontalViewLeavesOneGap) {
  synth::StandardSceneOptions opt;
  opt.companion = false;
  opt.shadow = false;
  const auto scene = synth::generate_scene(synth::standard_scene(5, opt));
  const TrackPair pair = clean_sequence(scene.sequence, {});
  ASSERT_EQ(pair.left.gaps.size(), 1u);
  EXPECT_EQ(pair.left.gaps[0], (std::pair{350, 449}));
  EXPECT_TRUE(pair.right.gaps.empty());
}

TEST(CleanSequence, InvariantsHoldOnScenes) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto scene = synth::generate_scene(synth::standard_scene(seed));
    const CleanerConfig cfg;
    const TrackPair pair = clean_sequence(scene.sequence, cfg);
    EXPECT_EQ(pair, clean_sequence(scene.sequence, cfg));  // determinism
    EXPECT_EQ(pair.left.first_frame, pair.right.first_frame);
    EXPECT_EQ(pair.left.last_frame, pair.right.last_frame);
    EXPECT_EQ(pair.diagnostics.size(), scene.sequence.frames.size());
    for (const Track* t : {&pair.left, &pair.right}) {
      // Samples and gaps partition the covered frame range.
      for (int f = t->first_frame; f <= t->last_frame; ++f) EXPECT_NE(t->samples.count(f) == 1, in_gap(*t, f)) << f;
      // Coherence: consecutive assignments never jump beyond the gate.
      std::optional<CenterOfGravity> prev;
      for (const auto& [f, s] : t->samples) {
        const auto cog = center_of_gravity(s, cfg.c_min);
        ASSERT_TRUE(cog);
        if (prev) {
          EXPECT_LE(cog_distance(*prev, *cog), cfg.d_max * pair.image_width);
        }
        prev = cog;
      }
    }
    for (std::size_t i = 0; i < pair.diagnostics.size(); ++i) {
      const auto& d = pair.diagnostics[i];
      if (!d.tracked) continue;
      EXPECT_EQ((d.left_entry >= 0) + (d.right_entry >= 0) + d.rejected, d.entries);
    }
    const auto& init = pair.diagnostics[static_cast<std::size_t>(pair.init_frame)];
    const auto& f0 = scene.sequence.frames[static_cast<std::size_t>(pair.init_frame)];
    EXPECT_LE(center_of_gravity(f0.entries[static_cast<std::size_t>(init.left_entry)], 0.1)->x,
              center_of_gravity(f0.entries[static_cast<std::size_t>(init.right_entry)], 0.1)->x);
  }
}

TEST(CleanSequence, SingleEntrySceneFails) {
  synth::StandardSceneOptions opt;
  opt.frontal = false;
  opt.companion = false;
  opt.shadow = false;
  const auto scene = synth::generate_scene(synth::standard_scene(2, opt));
  EXPECT_THROW(clean_sequence(scene.sequence, {}), Error);
}

TEST(CleanSequence, ReportHasOneRowPerFrame) {
  const auto scene = synth::generate_scene(synth::standard_scene(4));
  const TrackPair pair = clean_sequence(scene.sequence, {});
  const std::string csv = cleaning_report_csv(pair);
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), scene.sequence.frames.size() + 1);
  EXPECT_EQ(csv.rfind("frame,entries,tracked,left_entry,right_entry,rejected,left_gap,right_gap\n", 0), 0u);
}
