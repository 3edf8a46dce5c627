#pragma once

// OpenPose COCO-18 frame files: one JSON document per video frame, each person
// under people[i].pose_keypoints_2d as 54 numbers (x, y, c per joint).

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gaitpose/error.hpp"
#include "gaitpose/text.hpp"

namespace gaitpose {

inline constexpr int kJointCount = 18;
inline constexpr int kKeypointArity = 3 * kJointCount;
inline constexpr double kConfidenceSlack = 1e-6;

namespace joint {
inline constexpr int Nose = 0;
inline constexpr int Neck = 1;
inline constexpr int RShoulder = 2;
inline constexpr int RElbow = 3;
inline constexpr int RWrist = 4;
inline constexpr int LShoulder = 5;
inline constexpr int LElbow = 6;
inline constexpr int LWrist = 7;
inline constexpr int RHip = 8;
inline constexpr int RKnee = 9;
inline constexpr int RAnkle = 10;
inline constexpr int LHip = 11;
inline constexpr int LKnee = 12;
inline constexpr int LAnkle = 13;
inline constexpr int REye = 14;
inline constexpr int LEye = 15;
inline constexpr int REar = 16;
inline constexpr int LEar = 17;
}  // namespace joint

struct JointPoint {
  double x = 0.0;
  double y = 0.0;
  double c = 0.0;

  /// OpenPose writes (0, 0, 0) for joints it did not find.
  bool detected() const { return c > 0.0; }

  friend bool operator==(const JointPoint&, const JointPoint&) = default;
};

struct Skeleton {
  std::array<JointPoint, kJointCount> joints{};

  const JointPoint& operator[](int j) const { return joints[static_cast<std::size_t>(j)]; }
  JointPoint& operator[](int j) { return joints[static_cast<std::size_t>(j)]; }

  bool any_detected() const {
    return std::any_of(joints.begin(), joints.end(), [](const JointPoint& p) { return p.c > 0.0; });
  }

  friend bool operator==(const Skeleton&, const Skeleton&) = default;
};

struct Frame {
  int index = 0;
  double timestamp_s = 0.0;
  std::vector<Skeleton> entries;

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct ImageSize {
  double width = 0.0;
  double height = 0.0;
};

struct FrameSequence {
  std::vector<Frame> frames;
  double fps = 30.0;
  double image_width = 0.0;
  double image_height = 0.0;
};

namespace detail {

inline double checked_confidence(double c) {
  if (c < 0.0) {
    if (c < -kConfidenceSlack) {
      throw Error(ErrorCode::BadConfidence, "confidence " + text::format_double(c) + " below 0");
    }
    return 0.0;
  }
  if (c > 1.0) {
    if (c > 1.0 + kConfidenceSlack) {
      throw Error(ErrorCode::BadConfidence, "confidence " + text::format_double(c) + " above 1");
    }
    return 1.0;
  }
  return c;
}

}  // namespace detail

/// Parses one frame file. All-zero skeletons are dropped; the order of the
/// remaining entries follows the file.
inline Frame parse_frame(std::string_view raw_bytes, int index, double fps = 30.0) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(raw_bytes.begin(), raw_bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::MalformedJson, e.what());
  }
  if (!doc.is_object() || !doc.contains("people") || !doc["people"].is_array()) {
    throw Error(ErrorCode::MalformedJson, "missing top-level \"people\" array");
  }

  Frame frame;
  frame.index = index;
  frame.timestamp_s = index / fps;
  int person = 0;
  for (const auto& p : doc["people"]) {
    if (!p.is_object() || !p.contains("pose_keypoints_2d") || !p["pose_keypoints_2d"].is_array()) {
      throw Error(ErrorCode::MalformedJson,
                  "person " + std::to_string(person) + " has no pose_keypoints_2d array");
    }
    const auto& kp = p["pose_keypoints_2d"];
    if (kp.size() != static_cast<std::size_t>(kKeypointArity)) {
      throw Error(ErrorCode::BadKeypointArity, "person " + std::to_string(person) + " has " +
                                                   std::to_string(kp.size()) +
                                                   " keypoint values, expected 54");
    }
    Skeleton s;
    for (int j = 0; j < kJointCount; ++j) {
      for (int k = 0; k < 3; ++k) {
        if (!kp[static_cast<std::size_t>(3 * j + k)].is_number()) {
          throw Error(ErrorCode::MalformedJson, "non-numeric keypoint value");
        }
      }
      s[j].x = kp[static_cast<std::size_t>(3 * j)].get<double>();
      s[j].y = kp[static_cast<std::size_t>(3 * j + 1)].get<double>();
      s[j].c = detail::checked_confidence(kp[static_cast<std::size_t>(3 * j + 2)].get<double>());
    }
    if (s.any_detected()) frame.entries.push_back(s);
    ++person;
  }
  return frame;
}

/// Inverse of parse_frame (minimal document: only the keys parse_frame reads).
inline std::string serialize_frame(const Frame& frame) {
  nlohmann::json people = nlohmann::json::array();
  for (const auto& s : frame.entries) {
    nlohmann::json kp = nlohmann::json::array();
    for (const auto& p : s.joints) {
      kp.push_back(p.x);
      kp.push_back(p.y);
      kp.push_back(p.c);
    }
    people.push_back({{"pose_keypoints_2d", std::move(kp)}});
  }
  nlohmann::json doc = {{"version", 1.1}, {"people", std::move(people)}};
  return doc.dump();
}

/// Extracts the frame ordinal from `<stem>_<digits>_keypoints.json`, falling
/// back to the last run of digits in the file name.
inline std::optional<int> frame_ordinal(const std::string& filename) {
  static const std::regex openpose_name(R"((\d+)_keypoints\.json$)");
  static const std::regex any_digits(R"((\d+)[^\d]*$)");
  std::smatch m;
  if (std::regex_search(filename, m, openpose_name) || std::regex_search(filename, m, any_digits)) {
    try {
      return std::stoi(m[1].str());
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

/// Loads every `*.json` file in `directory`. Ordinals missing from the naming
/// become empty frames and are reported through `warnings` when provided.
inline FrameSequence load_sequence(const std::filesystem::path& directory, double fps, ImageSize dims,
                                   std::vector<std::string>* warnings = nullptr) {
  namespace fs = std::filesystem;
  if (!(fps > 0.0)) throw Error(ErrorCode::InvalidArgument, "fps must be positive");
  std::error_code ec;
  if (!fs::is_directory(directory, ec)) {
    throw Error(ErrorCode::Io, "not a readable directory: " + directory.string());
  }

  std::map<int, fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory, ec)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
    const auto name = entry.path().filename().string();
    const auto ordinal = frame_ordinal(name);
    if (!ordinal) {
      if (warnings) warnings->push_back("skipping file without frame ordinal: " + name);
      continue;
    }
    if (!files.emplace(*ordinal, entry.path()).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate frame ordinal " + std::to_string(*ordinal) +
                                                  " (" + name + ")");
    }
  }
  if (ec) throw Error(ErrorCode::Io, "cannot list " + directory.string());
  if (files.empty()) throw Error(ErrorCode::EmptyDirectory, "no frame files in " + directory.string());

  FrameSequence seq;
  seq.fps = fps;
  seq.image_width = dims.width;
  seq.image_height = dims.height;
  const int first = files.begin()->first;
  const int last = files.rbegin()->first;
  seq.frames.reserve(static_cast<std::size_t>(last - first + 1));
  for (int index = first; index <= last; ++index) {
    auto it = files.find(index);
    if (it == files.end()) {
      if (warnings) warnings->push_back("frame " + std::to_string(index) + " missing; treated as empty");
      seq.frames.push_back(Frame{index, index / fps, {}});
      continue;
    }
    try {
      seq.frames.push_back(parse_frame(text::read_file(it->second), index, fps));
    } catch (const Error& e) {
      throw Error(e.code(), it->second.filename().string() + ": " + e.message());
    }
  }
  return seq;
}

/// Writes one OpenPose-style file per frame into `directory`.
inline void write_sequence(const std::filesystem::path& directory, const FrameSequence& seq,
                           const std::string& stem = "video") {
  std::filesystem::create_directories(directory);
  for (const auto& f : seq.frames) {
    char name[64];
    std::snprintf(name, sizeof name, "_%012d_keypoints.json", f.index);
    text::write_file_atomic(directory / (stem + name), serialize_frame(f));
  }
}

}  // namespace gaitpose
