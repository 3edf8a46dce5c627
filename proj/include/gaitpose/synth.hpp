#pragma once

// Synthetic walkers and multi-person scenes with known ground truth. The ankle
// motion is a two-harmonic sinusoid (stride fundamental plus a step harmonic),
// so the band that must dominate each ankle's spectrum is known in closed form.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gaitpose/error.hpp"
#include "gaitpose/pose_ingest.hpp"
#include "gaitpose/rng.hpp"
#include "gaitpose/spectral_features.hpp"
#include "gaitpose/track_cleaner.hpp"

namespace gaitpose::synth {

struct GaitParams {
  double cadence = 120.0;      // steps / min
  double step_length = 0.6;    // in hip-neck units
  double speed = 1.2;          // hip-neck units / s
  double phase = 0.0;          // radians
  double noise_sigma = 0.0;    // pixels
  double duration_s = 32.0;
  double fps = 32.0;
  double body_scale_px = 100.0;  // hip-neck distance
  double origin_x = 200.0;
  double origin_y = 400.0;
  double confidence = 0.9;
  /// Step-harmonic amplitude relative to the stride fundamental.
  double harmonic_ratio = 0.3;

  double stride_hz() const { return cadence / 120.0; }
  double step_hz() const { return cadence / 60.0; }
};

inline void validate(const GaitParams& p) {
  if (!(p.cadence > 0.0)) throw Error(ErrorCode::InvalidArgument, "cadence must be positive");
  if (!(p.fps > 2.0 * (p.cadence / 60.0) * 3.0)) {
    throw Error(ErrorCode::NyquistViolation, "fps " + text::format_double(p.fps) +
                                                 " cannot represent three harmonics of the step frequency");
  }
  if (!(p.duration_s > 0.0) || !(p.body_scale_px > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "duration and body scale must be positive");
  }
}

/// Fore-aft ankle offset from the hip midpoint, in hip-neck units. The left
/// ankle runs half a stride behind the right one.
inline double ankle_offset(const GaitParams& p, double t, bool left) {
  const double amp = 0.5 * p.step_length;
  const double shift = left ? std::numbers::pi : 0.0;
  const double w = 2.0 * std::numbers::pi * p.stride_hz();
  return amp * (std::sin(w * t + p.phase + shift) +
                p.harmonic_ratio * std::sin(2.0 * (w * t + p.phase + shift)));
}

/// Lateral-view pose at time t, hip midpoint at (hx, hy); `facing` is +1 or -1.
inline Skeleton lateral_pose(const GaitParams& p, double t, double hx, double hy, double facing) {
  const double s = p.body_scale_px;
  const double ar = ankle_offset(p, t, false);
  const double al = ankle_offset(p, t, true);
  struct Offset {
    double x, y;
  };
  // Offsets in hip-neck units; x is along the facing direction.
  const Offset off[kJointCount] = {
      {0.25, -1.45},          // nose
      {0.0, -1.0},            // neck
      {-0.05, -0.95},         // R shoulder
      {-0.3 * ar, -0.6},      // R elbow
      {-0.5 * ar, -0.3},      // R wrist
      {0.05, -0.95},          // L shoulder
      {-0.3 * al, -0.6},      // L elbow
      {-0.5 * al, -0.3},      // L wrist
      {-0.04, 0.0},           // R hip
      {0.5 * ar + 0.05, 0.5}, // R knee
      {ar, 1.0},              // R ankle
      {0.04, 0.0},            // L hip
      {0.5 * al + 0.05, 0.5}, // L knee
      {al, 1.0},              // L ankle
      {0.2, -1.5},            // R eye
      {0.22, -1.5},           // L eye
      {0.05, -1.45},          // R ear
      {0.07, -1.45},          // L ear
  };
  Skeleton sk;
  for (int j = 0; j < kJointCount; ++j) {
    sk[j] = JointPoint{hx + facing * off[j].x * s, hy + off[j].y * s, p.confidence};
  }
  return sk;
}

/// Frontal-view pose: the walker faces the camera, ankles bob vertically.
inline Skeleton frontal_pose(const GaitParams& p, double t, double hx, double hy) {
  const double s = p.body_scale_px;
  const double ar = ankle_offset(p, t, false);
  const double al = ankle_offset(p, t, true);
  struct Offset {
    double x, y;
  };
  const Offset off[kJointCount] = {
      {0.0, -1.45},  {0.0, -1.0},   {-0.22, -0.95}, {-0.27, -0.6},  {-0.29, -0.3}, {0.22, -0.95},
      {0.27, -0.6},  {0.29, -0.3},  {-0.12, 0.0},   {-0.11, 0.5},   {-0.1, 1.0 - 0.1 * std::max(0.0, ar)},
      {0.12, 0.0},   {0.11, 0.5},   {0.1, 1.0 - 0.1 * std::max(0.0, al)},
      {-0.06, -1.5}, {0.06, -1.5},  {-0.12, -1.45}, {0.12, -1.45},
  };
  Skeleton sk;
  for (int j = 0; j < kJointCount; ++j) {
    sk[j] = JointPoint{hx + off[j].x * s, hy + off[j].y * s, p.confidence};
  }
  return sk;
}

inline void add_noise(Skeleton& sk, double sigma, Rng& rng) {
  if (sigma <= 0.0) return;
  for (auto& j : sk.joints) {
    j.x += rng.normal(0.0, sigma);
    j.y += rng.normal(0.0, sigma);
  }
}

struct GaitTrack {
  Track track;
  double stride_hz = 0.0;
  double step_hz = 0.0;
  /// Band index (0-based) that must carry the largest band power, per ankle.
  int dominant_band_right = -1;
  int dominant_band_left = -1;
};

/// Band that the two-harmonic construction puts the most weighted power in:
/// the fundamental carries A^2 f, the harmonic (rA)^2 (2f).
inline int analytic_dominant_band(const GaitParams& p, const BandEdges& edges) {
  const double f1 = p.stride_hz();
  const double f2 = p.step_hz();
  const int b1 = band_index(edges, f1);
  const int b2 = band_index(edges, f2);
  if (b1 == b2 || b2 < 0) return b1;
  if (b1 < 0) return b2;
  const double r2 = p.harmonic_ratio * p.harmonic_ratio;
  return (1.0 * f1 >= r2 * f2) ? b1 : b2;
}

/// A single lateral walker as an already-clean track (label RightView).
inline GaitTrack generate_gait_track(const GaitParams& p, std::uint64_t seed,
                                     const BandEdges& edges = default_band_edges()) {
  validate(p);
  Rng rng(seed);
  GaitTrack out;
  out.stride_hz = p.stride_hz();
  out.step_hz = p.step_hz();
  out.dominant_band_right = analytic_dominant_band(p, edges);
  out.dominant_band_left = out.dominant_band_right;

  const int frames = static_cast<int>(std::lround(p.duration_s * p.fps));
  Track& t = out.track;
  t.label = TrackLabel::RightView;
  t.fps = p.fps;
  t.first_frame = 0;
  t.last_frame = frames - 1;
  for (int i = 0; i < frames; ++i) {
    const double time = i / p.fps;
    const double hx = p.origin_x + p.speed * p.body_scale_px * time;
    Skeleton sk = lateral_pose(p, time, hx, p.origin_y, 1.0);
    add_noise(sk, p.noise_sigma, rng);
    t.samples.emplace(i, sk);
  }
  t.last_cog = center_of_gravity(t.samples.rbegin()->second, 0.0).value_or(CenterOfGravity{});
  return out;
}

/// Multiplies every pixel coordinate by k.
inline Track scale_track(Track t, double k) {
  for (auto& [_, sk] : t.samples) {
    for (auto& j : sk.joints) {
      j.x *= k;
      j.y *= k;
    }
  }
  t.last_cog.x *= k;
  t.last_cog.y *= k;
  return t;
}

// ---------------------------------------------------------------------------
// Scenes

enum class ActorKind { PatientLateral, PatientFrontal, Shadow, Companion };

inline bool is_patient(ActorKind k) { return k == ActorKind::PatientLateral || k == ActorKind::PatientFrontal; }

struct ActorSpec {
  ActorKind kind = ActorKind::PatientLateral;
  GaitParams gait;
  /// Lateral walkers move back and forth between x_min and x_max; frontal
  /// walkers sway around x_min; companions walk from x_min to x_max.
  double x_min = 0.0;
  double x_max = 0.0;
  double y = 0.0;
  double start_x = 0.0;
  double direction = 1.0;
  int visible_from = 0;
  int visible_to = 1 << 30;
  std::vector<std::pair<int, int>> occlusions;
  /// Shadows mirror the actor with this index, displaced by (dx, dy).
  int shadow_of = -1;
  double dx = 0.0;
  double dy = 0.0;
  double confidence_scale = 0.6;
};

struct SceneSpec {
  double image_width = 1280.0;
  double image_height = 720.0;
  double fps = 30.0;
  int frames = 600;
  std::uint64_t seed = 0;
  std::vector<ActorSpec> actors;
};

struct Scene {
  FrameSequence sequence;
  /// labels[f][e] is the actor index of entry e in frame f.
  std::vector<std::vector<int>> labels;
  std::vector<ActorKind> kinds;
};

namespace detail {

inline bool occluded(const ActorSpec& a, int f) {
  if (f < a.visible_from || f > a.visible_to) return true;
  for (const auto& [lo, hi] : a.occlusions) {
    if (f >= lo && f <= hi) return true;
  }
  return false;
}

/// Position on a back-and-forth walk between lo and hi.
inline std::pair<double, double> pingpong(double start, double dir, double lo, double hi, double dist) {
  const double span = hi - lo;
  if (span <= 0.0) return {lo, dir};
  double u = (start - lo) + (dir >= 0.0 ? dist : -dist);
  const double period = 2.0 * span;
  u = std::fmod(u, period);
  if (u < 0.0) u += period;
  if (u <= span) return {lo + u, 1.0};
  return {lo + period - u, -1.0};
}

inline Skeleton actor_pose(const ActorSpec& a, int f, double fps) {
  const double t = f / fps;
  const auto& g = a.gait;
  switch (a.kind) {
    case ActorKind::PatientLateral: {
      const auto [x, dir] = pingpong(a.start_x, a.direction, a.x_min, a.x_max, g.speed * g.body_scale_px * t);
      return lateral_pose(g, t, x, a.y, dir);
    }
    case ActorKind::PatientFrontal: {
      const double sway = 0.04 * g.body_scale_px * std::sin(2.0 * std::numbers::pi * g.stride_hz() * t);
      return frontal_pose(g, t, a.x_min + sway, a.y);
    }
    case ActorKind::Companion: {
      const double span = std::max(1, a.visible_to - a.visible_from);
      const double u = std::clamp((f - a.visible_from) / span, 0.0, 1.0);
      const double x = a.x_min + (a.x_max - a.x_min) * u;
      return lateral_pose(g, t, x, a.y, a.x_max >= a.x_min ? 1.0 : -1.0);
    }
    case ActorKind::Shadow:
      break;
  }
  return {};
}

}  // namespace detail

/// Renders every actor into per-frame entries (in shuffled order) and records
/// which actor produced each entry.
inline Scene generate_scene(const SceneSpec& spec) {
  Rng rng(spec.seed);
  Scene scene;
  scene.sequence.fps = spec.fps;
  scene.sequence.image_width = spec.image_width;
  scene.sequence.image_height = spec.image_height;
  for (const auto& a : spec.actors) scene.kinds.push_back(a.kind);
  if (std::none_of(spec.actors.begin(), spec.actors.end(), [](const ActorSpec& a) { return is_patient(a.kind); })) {
    throw Error(ErrorCode::InvalidArgument, "scene needs at least one patient actor");
  }

  for (int f = 0; f < spec.frames; ++f) {
    std::vector<std::pair<int, Skeleton>> entries;
    std::vector<Skeleton> clean(spec.actors.size());
    for (std::size_t i = 0; i < spec.actors.size(); ++i) {
      const auto& a = spec.actors[i];
      if (a.kind != ActorKind::Shadow) clean[i] = detail::actor_pose(a, f, spec.fps);
    }
    for (std::size_t i = 0; i < spec.actors.size(); ++i) {
      const auto& a = spec.actors[i];
      Skeleton sk;
      if (a.kind == ActorKind::Shadow) {
        if (a.shadow_of < 0 || static_cast<std::size_t>(a.shadow_of) >= spec.actors.size()) {
          throw Error(ErrorCode::InvalidArgument, "shadow refers to a missing actor");
        }
        const Skeleton& src = clean[static_cast<std::size_t>(a.shadow_of)];
        const double cx = 0.5 * (src[joint::RHip].x + src[joint::LHip].x);
        for (int j = 0; j < kJointCount; ++j) {
          sk[j] = JointPoint{2.0 * cx - src[j].x + a.dx, src[j].y + a.dy, src[j].c * a.confidence_scale};
        }
      } else {
        sk = clean[i];
      }
      if (detail::occluded(a, f)) continue;
      add_noise(sk, a.gait.noise_sigma, rng);
      for (const auto& j : sk.joints) {
        if (j.x < 0.0 || j.x > spec.image_width || j.y < 0.0 || j.y > spec.image_height) {
          throw Error(ErrorCode::InvalidArgument,
                      "actor " + std::to_string(i) + " leaves the image at frame " + std::to_string(f));
        }
      }
      entries.emplace_back(static_cast<int>(i), sk);
    }
    rng.shuffle(entries);
    Frame frame{f, f / spec.fps, {}};
    std::vector<int> labels;
    for (auto& [id, sk] : entries) {
      frame.entries.push_back(sk);
      labels.push_back(id);
    }
    scene.sequence.frames.push_back(std::move(frame));
    scene.labels.push_back(std::move(labels));
  }
  return scene;
}

struct StandardSceneOptions {
  bool companion = true;
  bool shadow = true;
  /// Occlusion of the frontal (left-position) patient.
  std::optional<std::pair<int, int>> frontal_occlusion = std::pair{350, 449};
  std::optional<std::pair<int, int>> lateral_occlusion;
  bool frontal = true;
  double noise_sigma = 1.0;
  int frames = 600;
};

/// A 1280x720 split-screen clinic scene: frontal camera on the left half,
/// lateral camera on the right half, optional wall shadow of the lateral walker
/// and a companion who crosses the frontal view once.
inline SceneSpec standard_scene(std::uint64_t seed, const StandardSceneOptions& opt = {}) {
  Rng rng(Rng::derive(seed, 7));
  SceneSpec spec;
  spec.seed = seed;
  spec.frames = opt.frames;
  GaitParams g;
  g.fps = spec.fps;
  g.noise_sigma = opt.noise_sigma;
  g.cadence = rng.uniform(90.0, 130.0);
  g.step_length = rng.uniform(0.4, 0.7);
  g.speed = rng.uniform(0.6, 1.0);
  g.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

  ActorSpec lateral;
  lateral.kind = ActorKind::PatientLateral;
  lateral.gait = g;
  lateral.x_min = 780.0;
  lateral.x_max = 1160.0;
  lateral.start_x = rng.uniform(800.0, 1140.0);
  lateral.direction = rng.uniform() < 0.5 ? -1.0 : 1.0;
  lateral.y = 470.0;
  if (opt.lateral_occlusion) lateral.occlusions.push_back(*opt.lateral_occlusion);

  ActorSpec frontal;
  frontal.kind = ActorKind::PatientFrontal;
  frontal.gait = g;
  frontal.x_min = rng.uniform(270.0, 370.0);
  frontal.y = 470.0;
  if (opt.frontal_occlusion) frontal.occlusions.push_back(*opt.frontal_occlusion);

  if (opt.frontal) spec.actors.push_back(frontal);
  spec.actors.push_back(lateral);
  const int lateral_index = static_cast<int>(spec.actors.size()) - 1;

  if (opt.shadow) {
    ActorSpec shadow;
    shadow.kind = ActorKind::Shadow;
    shadow.gait = g;
    shadow.shadow_of = lateral_index;
    shadow.dx = rng.uniform(-20.0, 20.0);
    shadow.dy = -260.0;
    spec.actors.push_back(shadow);
  }
  if (opt.companion) {
    ActorSpec comp;
    comp.kind = ActorKind::Companion;
    comp.gait = g;
    comp.gait.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    comp.gait.body_scale_px = 90.0;
    comp.x_min = 40.0;
    comp.x_max = 600.0;
    comp.y = 400.0;
    comp.visible_from = 50;
    comp.visible_to = 250;
    spec.actors.push_back(comp);
  }
  return spec;
}

struct AssignmentScore {
  int patient_entries = 0;
  int patient_correct = 0;
  int distractor_assigned = 0;
  double accuracy() const { return patient_entries ? static_cast<double>(patient_correct) / patient_entries : 1.0; }
};

/// Scores a cleaning result against scene labels. Patient entries in frames
/// before lock-on count as misses. Each patient belongs on the track matching
/// its horizontal position at lock-on.
inline AssignmentScore score_cleaning(const Scene& scene, const TrackPair& pair) {
  AssignmentScore score;
  // Majority label of each track at the init frame defines the correct actor.
  int left_actor = -1, right_actor = -1;
  for (std::size_t fi = 0; fi < scene.sequence.frames.size(); ++fi) {
    if (scene.sequence.frames[fi].index == pair.init_frame) {
      const auto& d = pair.diagnostics[fi];
      left_actor = scene.labels[fi][static_cast<std::size_t>(d.left_entry)];
      right_actor = scene.labels[fi][static_cast<std::size_t>(d.right_entry)];
    }
  }
  for (std::size_t fi = 0; fi < scene.sequence.frames.size(); ++fi) {
    const auto& d = pair.diagnostics[fi];
    const auto& labels = scene.labels[fi];
    if (!d.tracked) {
      // Patients seen before lock-on were never placed on a track.
      for (int actor : labels) score.patient_entries += is_patient(scene.kinds[static_cast<std::size_t>(actor)]);
      continue;
    }
    for (std::size_t e = 0; e < labels.size(); ++e) {
      const int actor = labels[e];
      const bool on_left = d.left_entry == static_cast<int>(e);
      const bool on_right = d.right_entry == static_cast<int>(e);
      if (is_patient(scene.kinds[static_cast<std::size_t>(actor)])) {
        ++score.patient_entries;
        if ((on_left && actor == left_actor) || (on_right && actor == right_actor)) ++score.patient_correct;
      } else if (on_left || on_right) {
        ++score.distractor_assigned;
      }
    }
  }
  return score;
}

// ---------------------------------------------------------------------------
// Datasets

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct ParamRanges {
  Range cadence{80.0, 140.0};
  Range step_length{0.4, 0.8};
  /// When unset, speed = step_length * cadence / 60.
  std::optional<Range> speed;
  Range noise_sigma{1.0, 1.0};
  double fps = 32.0;
  double duration_s = 32.0;
};

/// Arbitrary severity levels from walking speed (hip-neck units / s).
inline int synthetic_gmfcs(double speed) {
  if (speed >= 1.4) return 1;
  if (speed >= 1.1) return 2;
  if (speed >= 0.9) return 3;
  if (speed >= 0.7) return 4;
  return 5;
}

inline FeatureTable generate_dataset(std::size_t n, const ParamRanges& ranges, std::uint64_t seed,
                                     const FeatureConfig& cfg = {}) {
  FeatureTable table;
  table.feature_names = feature_names(cfg);
  table.target_names = {"cadence", "step_length", "speed", "gmfcs"};
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(Rng::derive(seed, i));
    GaitParams p;
    p.fps = ranges.fps;
    p.duration_s = ranges.duration_s;
    p.cadence = rng.uniform(ranges.cadence.lo, ranges.cadence.hi);
    p.step_length = rng.uniform(ranges.step_length.lo, ranges.step_length.hi);
    p.speed = ranges.speed ? rng.uniform(ranges.speed->lo, ranges.speed->hi) : p.step_length * p.cadence / 60.0;
    p.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    p.noise_sigma = rng.uniform(ranges.noise_sigma.lo, ranges.noise_sigma.hi);
    const auto gt = generate_gait_track(p, rng.next_u64(), cfg.edges);
    TrackPair pair;
    pair.right = gt.track;
    char id[32];
    std::snprintf(id, sizeof id, "synth-%06zu", i);
    FeatureVector fv = video_features(pair, cfg, id);
    fv.targets = {{"cadence", p.cadence},
                  {"step_length", p.step_length},
                  {"speed", p.speed},
                  {"gmfcs", static_cast<double>(synthetic_gmfcs(p.speed))}};
    table.rows.push_back(std::move(fv));
  }
  return table;
}

}  // namespace gaitpose::synth
