#pragma once

// Text artifacts: feature tables (CSV), cleaned tracks (JSON), fitted models
// (line-oriented key/value) and evaluation reports. Every writer goes through
// write_file_atomic; every double is written with 17 significant digits.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gaitpose/error.hpp"
#include "gaitpose/eval.hpp"
#include "gaitpose/models/model.hpp"
#include "gaitpose/spectral_features.hpp"
#include "gaitpose/text.hpp"
#include "gaitpose/track_cleaner.hpp"

namespace gaitpose {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kFormatMajor = 1;
inline constexpr int kFormatMinor = 0;

/// Column names treated as targets when a CSV carries no header comment.
inline const std::vector<std::string>& known_targets() {
  static const std::vector<std::string> names = {"cadence", "step_length", "speed", "gmfcs"};
  return names;
}

/// The `#gaitpose-artifact` comment line that opens CSV artifacts.
struct ArtifactHeader {
  std::string kind;
  int major = kFormatMajor;
  int minor = kFormatMinor;
  std::string tool_version = kToolVersion;
  /// Extra key=value pairs (targets, seeds, config echo). Kept in order.
  std::vector<std::pair<std::string, std::string>> fields;

  std::string get(const std::string& key, const std::string& fallback = "") const {
    for (const auto& [k, v] : fields) {
      if (k == key) return v;
    }
    return fallback;
  }
};

namespace detail {

inline void check_token(const std::string& s, const std::string& what) {
  if (s.empty() || s.find_first_of(" \t\r\n,=#") != std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, what + " '" + s + "' must be nonempty without spaces, commas, '=' or '#'");
  }
}

inline void check_version(const std::string& v, const std::string& what) {
  const auto dot = v.find('.');
  const std::string major = v.substr(0, dot);
  long long m = -1;
  try {
    m = text::to_int(major, what);
  } catch (const Error&) {
    throw Error(ErrorCode::VersionMismatch, what + ": unreadable version '" + v + "'");
  }
  if (m != kFormatMajor) {
    throw Error(ErrorCode::VersionMismatch, what + ": format version " + v + " is not readable by " +
                                                std::to_string(kFormatMajor) + ".x");
  }
}

inline std::string header_line(const ArtifactHeader& h) {
  std::string s = "#gaitpose-artifact kind=" + h.kind + " version=" + std::to_string(h.major) + "." +
                  std::to_string(h.minor) + " tool=" + h.tool_version;
  for (const auto& [k, v] : h.fields) {
    std::string clean = v;
    std::replace_if(clean.begin(), clean.end(), [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }, '_');
    s += " " + k + "=" + clean;
  }
  return s;
}

inline ArtifactHeader parse_header_line(const std::string& line, const std::string& what) {
  ArtifactHeader h;
  h.tool_version.clear();
  const auto tokens = text::split_ws(line);
  if (tokens.empty() || tokens[0] != "#gaitpose-artifact") throw Error(ErrorCode::BadHeader, what + ": bad artifact line");
  bool have_version = false;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    const auto eq = tokens[i].find('=');
    if (eq == std::string::npos) continue;
    const std::string k = tokens[i].substr(0, eq);
    const std::string v = tokens[i].substr(eq + 1);
    if (k == "kind") {
      h.kind = v;
    } else if (k == "version") {
      check_version(v, what);
      have_version = true;
      const auto dot = v.find('.');
      h.major = kFormatMajor;
      h.minor = dot == std::string::npos ? 0 : static_cast<int>(text::to_int(v.substr(dot + 1), what));
    } else if (k == "tool") {
      h.tool_version = v;
    } else {
      h.fields.emplace_back(k, v);
    }
  }
  if (!have_version) throw Error(ErrorCode::VersionMismatch, what + ": artifact line lacks a version");
  return h;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Feature tables

inline std::string features_csv(const FeatureTable& t, std::vector<std::pair<std::string, std::string>> provenance = {}) {
  for (const auto& n : t.feature_names) detail::check_token(n, "feature name");
  for (const auto& n : t.target_names) detail::check_token(n, "target name");
  ArtifactHeader h;
  h.kind = "features";
  std::string targets;
  for (const auto& n : t.target_names) targets += (targets.empty() ? "" : ",") + n;
  h.fields.emplace_back("targets", targets.empty() ? "-" : targets);
  for (auto& p : provenance) h.fields.push_back(std::move(p));
  std::ostringstream out;
  out << detail::header_line(h) << '\n';
  out << "id";
  for (const auto& n : t.feature_names) out << ',' << n;
  for (const auto& n : t.target_names) out << ',' << n;
  out << '\n';
  for (const auto& r : t.rows) {
    detail::check_token(r.id, "row id");
    if (r.values.size() != t.feature_names.size()) {
      throw Error(ErrorCode::BadArity, "row " + r.id + " has " + std::to_string(r.values.size()) + " features, table declares " +
                                           std::to_string(t.feature_names.size()));
    }
    out << r.id;
    for (double v : r.values) {
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "row " + r.id + " has a non-finite feature");
      out << ',' << text::format_double(v);
    }
    for (const auto& n : t.target_names) {
      out << ',';
      if (auto it = r.targets.find(n); it != r.targets.end()) {
        if (!std::isfinite(it->second)) throw Error(ErrorCode::NonFiniteValue, "row " + r.id + " has a non-finite target");
        out << text::format_double(it->second);
      }
    }
    out << '\n';
  }
  return out.str();
}

inline void write_features(const std::filesystem::path& path, const FeatureTable& t,
                           std::vector<std::pair<std::string, std::string>> provenance = {}) {
  text::write_file_atomic(path, features_csv(t, std::move(provenance)));
}

inline FeatureTable parse_features(const std::string& content, const std::string& what = "features",
                                   ArtifactHeader* header_out = nullptr) {
  std::vector<std::string> lines;
  for (auto& l : text::split(content, '\n')) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
    lines.push_back(std::move(l));
  }
  std::size_t i = 0;
  std::optional<ArtifactHeader> header;
  while (i < lines.size() && !lines[i].empty() && lines[i][0] == '#') {
    if (lines[i].rfind("#gaitpose-artifact", 0) == 0) header = detail::parse_header_line(lines[i], what);
    ++i;
  }
  if (i >= lines.size() || text::trim(lines[i]).empty()) throw Error(ErrorCode::BadHeader, what + ": missing column header");
  const auto cols = text::split(lines[i], ',');
  if (cols.empty() || cols[0] != "id") throw Error(ErrorCode::BadHeader, what + ": first column must be 'id'");

  std::set<std::string> target_set;
  if (header && header->kind != "features") {
    throw Error(ErrorCode::BadHeader, what + ": artifact kind '" + header->kind + "' is not a feature table");
  }
  if (header && !header->get("targets").empty()) {
    const std::string t = header->get("targets");
    if (t != "-") {
      for (const auto& n : text::split(t, ',')) target_set.insert(n);
    }
  } else {
    target_set.insert(known_targets().begin(), known_targets().end());
  }

  FeatureTable table;
  std::vector<bool> is_target(cols.size(), false);
  std::set<std::string> seen;
  bool in_targets = false;
  for (std::size_t c = 1; c < cols.size(); ++c) {
    const std::string name(text::trim(cols[c]));
    if (name.empty()) throw Error(ErrorCode::BadHeader, what + ": empty column name at position " + std::to_string(c + 1));
    if (!seen.insert(name).second) throw Error(ErrorCode::BadHeader, what + ": duplicate column '" + name + "'");
    if (target_set.count(name)) {
      is_target[c] = true;
      in_targets = true;
      table.target_names.push_back(name);
    } else {
      if (in_targets) throw Error(ErrorCode::BadHeader, what + ": feature column '" + name + "' after target columns");
      table.feature_names.push_back(name);
    }
  }
  if (header_out && header) *header_out = *header;

  for (++i; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const auto cells = text::split(lines[i], ',');
    const std::string row_name = "row " + std::to_string(table.rows.size() + 1) + " ('" + cells[0] + "')";
    if (cells.size() != cols.size()) {
      throw Error(ErrorCode::BadArity, what + ": " + row_name + " has " + std::to_string(cells.size()) +
                                           " columns, header declares " + std::to_string(cols.size()));
    }
    FeatureVector fv;
    fv.id = cells[0];
    fv.names = table.feature_names;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const std::string cell(text::trim(cells[c]));
      if (is_target[c] && cell.empty()) continue;
      double v;
      if (!text::parse_double(cell, v)) {
        throw Error(ErrorCode::ParseError, what + ": " + row_name + " column '" + cols[c] + "': cannot parse '" + cell + "'");
      }
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::NonFiniteValue, what + ": " + row_name + " column '" + cols[c] + "' is not finite");
      }
      if (is_target[c]) {
        fv.targets[cols[c]] = v;
      } else {
        fv.values.push_back(v);
      }
    }
    table.rows.push_back(std::move(fv));
  }
  return table;
}

inline FeatureTable read_features(const std::filesystem::path& path, ArtifactHeader* header = nullptr) {
  return parse_features(text::read_file(path), path.string(), header);
}

// ---------------------------------------------------------------------------
// Cleaned tracks

namespace detail {

inline nlohmann::json track_json(const Track& t) {
  nlohmann::json j;
  j["label"] = t.label == TrackLabel::LeftView ? "left" : "right";
  j["fps"] = t.fps;
  j["first_frame"] = t.first_frame;
  j["last_frame"] = t.last_frame;
  j["last_cog"] = {t.last_cog.x, t.last_cog.y, t.last_cog.support, t.last_cog.mean_confidence};
  j["gaps"] = nlohmann::json::array();
  for (const auto& [a, b] : t.gaps) j["gaps"].push_back({a, b});
  j["samples"] = nlohmann::json::array();
  for (const auto& [f, s] : t.samples) {
    nlohmann::json kp = nlohmann::json::array();
    for (const auto& p : s.joints) {
      kp.push_back(p.x);
      kp.push_back(p.y);
      kp.push_back(p.c);
    }
    j["samples"].push_back({{"frame", f}, {"pose_keypoints_2d", kp}});
  }
  return j;
}

inline Track track_from_json(const nlohmann::json& j) {
  Track t;
  t.label = j.at("label").get<std::string>() == "left" ? TrackLabel::LeftView : TrackLabel::RightView;
  t.fps = j.at("fps").get<double>();
  t.first_frame = j.at("first_frame").get<int>();
  t.last_frame = j.at("last_frame").get<int>();
  const auto& c = j.at("last_cog");
  t.last_cog = CenterOfGravity{c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<int>(), c.at(3).get<double>()};
  for (const auto& g : j.at("gaps")) t.gaps.emplace_back(g.at(0).get<int>(), g.at(1).get<int>());
  for (const auto& s : j.at("samples")) {
    const auto& kp = s.at("pose_keypoints_2d");
    if (kp.size() != static_cast<std::size_t>(kKeypointArity)) {
      throw Error(ErrorCode::BadKeypointArity, "track sample has " + std::to_string(kp.size()) + " numbers");
    }
    Skeleton sk;
    for (int q = 0; q < kJointCount; ++q) {
      sk.joints[static_cast<std::size_t>(q)] = JointPoint{kp.at(static_cast<std::size_t>(3 * q)).get<double>(),
                                                          kp.at(static_cast<std::size_t>(3 * q + 1)).get<double>(),
                                                          kp.at(static_cast<std::size_t>(3 * q + 2)).get<double>()};
    }
    t.samples.emplace(s.at("frame").get<int>(), sk);
  }
  return t;
}

}  // namespace detail

inline std::string tracks_json(const TrackPair& p, std::vector<std::pair<std::string, std::string>> provenance = {}) {
  nlohmann::ordered_json j;
  j["format"] = "gaitpose-tracks";
  j["version"] = std::to_string(kFormatMajor) + "." + std::to_string(kFormatMinor);
  j["tool"] = kToolVersion;
  nlohmann::ordered_json prov = nlohmann::ordered_json::object();
  for (const auto& [k, v] : provenance) prov[k] = v;
  j["provenance"] = prov;
  j["init_frame"] = p.init_frame;
  j["image_width"] = p.image_width;
  j["image_height"] = p.image_height;
  j["left"] = detail::track_json(p.left);
  j["right"] = detail::track_json(p.right);
  nlohmann::json diag = nlohmann::json::array();
  for (const auto& d : p.diagnostics) {
    diag.push_back({d.index, d.entries, d.tracked ? 1 : 0, d.left_entry, d.right_entry, d.rejected});
  }
  j["diagnostics"] = diag;
  return j.dump(1) + "\n";
}

inline TrackPair parse_tracks(const std::string& content, const std::string& what = "tracks") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(content);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedJson, what + ": " + e.what());
  }
  try {
    if (!j.is_object() || j.value("format", "") != "gaitpose-tracks") {
      throw Error(ErrorCode::BadHeader, what + ": not a gaitpose tracks file");
    }
    detail::check_version(j.at("version").get<std::string>(), what);
    TrackPair p;
    p.init_frame = j.at("init_frame").get<int>();
    p.image_width = j.at("image_width").get<double>();
    p.image_height = j.at("image_height").get<double>();
    p.left = detail::track_from_json(j.at("left"));
    p.right = detail::track_from_json(j.at("right"));
    for (const auto& d : j.at("diagnostics")) {
      FrameDiagnostic fd;
      fd.index = d.at(0).get<int>();
      fd.entries = d.at(1).get<int>();
      fd.tracked = d.at(2).get<int>() != 0;
      fd.left_entry = d.at(3).get<int>();
      fd.right_entry = d.at(4).get<int>();
      fd.rejected = d.at(5).get<int>();
      p.diagnostics.push_back(fd);
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedJson, what + ": " + e.what());
  }
}

inline void write_tracks(const std::filesystem::path& path, const TrackPair& p,
                         std::vector<std::pair<std::string, std::string>> provenance = {}) {
  text::write_file_atomic(path, tracks_json(p, std::move(provenance)));
}

inline TrackPair read_tracks(const std::filesystem::path& path) {
  return parse_tracks(text::read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Models
//
//   gaitpose-model 1.0
//   <key> <token>...
//   ...
//   end
//
// Vectors are written as a count followed by the entries, matrices as rows,
// cols, then entries in row-major order. Unknown keys are skipped on read.

namespace detail {

class ModelWriter {
 public:
  void line(const std::string& key, const std::vector<std::string>& tokens = {}) {
    out_ << key;
    for (const auto& t : tokens) out_ << ' ' << t;
    out_ << '\n';
  }
  void num(const std::string& key, double v) { line(key, {text::format_double(v)}); }
  void integer(const std::string& key, long long v) { line(key, {std::to_string(v)}); }
  void str(const std::string& key, const std::string& v) {
    check_token(v, key);
    line(key, {v});
  }
  void vec(const std::string& key, const std::vector<double>& v, std::vector<std::string> prefix = {}) {
    prefix.push_back(std::to_string(v.size()));
    for (double x : v) prefix.push_back(text::format_double(x));
    line(key, prefix);
  }
  void vec(const std::string& key, const Eigen::VectorXd& v, std::vector<std::string> prefix = {}) {
    vec(key, std::vector<double>(v.data(), v.data() + v.size()), std::move(prefix));
  }
  void ints(const std::string& key, const std::vector<int>& v) {
    std::vector<std::string> t{std::to_string(v.size())};
    for (int x : v) t.push_back(std::to_string(x));
    line(key, t);
  }
  void names(const std::string& key, const std::vector<std::string>& v) {
    std::vector<std::string> t{std::to_string(v.size())};
    for (const auto& x : v) {
      check_token(x, key);
      t.push_back(x);
    }
    line(key, t);
  }
  void mat(const std::string& key, const Eigen::MatrixXd& m, std::vector<std::string> prefix = {}) {
    prefix.push_back(std::to_string(m.rows()));
    prefix.push_back(std::to_string(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) prefix.push_back(text::format_double(m(r, c)));
    }
    line(key, prefix);
  }
  void tree(const std::string& tag, const TreeModel& t) {
    line(tag, {to_string(t.task), std::to_string(t.n_classes), std::to_string(t.max_depth), std::to_string(t.nodes.size())});
    for (const auto& n : t.nodes) {
      std::vector<std::string> tok{std::to_string(n.feature), text::format_double(n.threshold), std::to_string(n.left),
                                   std::to_string(n.right), std::to_string(n.value.size())};
      for (double v : n.value) tok.push_back(text::format_double(v));
      line("node", tok);
    }
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

/// Parsed model file: ordered (key, tokens) lines with a cursor for the
/// order-dependent sections (tree nodes, MLP layers).
class ModelReader {
 public:
  ModelReader(std::vector<std::pair<std::string, std::vector<std::string>>> lines, std::string what)
      : lines_(std::move(lines)), what_(std::move(what)) {}

  const std::vector<std::string>* find(const std::string& key) const {
    for (const auto& [k, t] : lines_) {
      if (k == key) return &t;
    }
    return nullptr;
  }
  const std::vector<std::string>& need(const std::string& key) const {
    const auto* t = find(key);
    if (!t) throw Error(ErrorCode::ParseError, what_ + ": missing '" + key + "'");
    return *t;
  }
  std::vector<const std::vector<std::string>*> all(const std::string& key) const {
    std::vector<const std::vector<std::string>*> out;
    for (const auto& [k, t] : lines_) {
      if (k == key) out.push_back(&t);
    }
    return out;
  }
  std::string str(const std::string& key) const {
    const auto& t = need(key);
    if (t.size() != 1) fail(key);
    return t[0];
  }
  std::string str_or(const std::string& key, const std::string& fallback) const {
    return find(key) ? str(key) : fallback;
  }
  double num(const std::string& key) const { return to_num(need(key), 0, key); }
  double num_or(const std::string& key, double fallback) const { return find(key) ? num(key) : fallback; }
  long long integer(const std::string& key) const { return to_integer(need(key), 0, key); }
  long long integer_or(const std::string& key, long long fallback) const { return find(key) ? integer(key) : fallback; }

  std::vector<double> vec(const std::vector<std::string>& t, std::size_t at, const std::string& key) const {
    const auto n = static_cast<std::size_t>(to_integer(t, at, key));
    if (t.size() < at + 1 + n) fail(key);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = to_num(t, at + 1 + i, key);
    return v;
  }
  std::vector<double> vec(const std::string& key) const { return vec(need(key), 0, key); }
  Eigen::VectorXd evec(const std::string& key) const {
    const auto v = vec(key);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  std::vector<int> ints(const std::string& key) const {
    const auto& t = need(key);
    const auto n = static_cast<std::size_t>(to_integer(t, 0, key));
    if (t.size() != n + 1) fail(key);
    std::vector<int> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<int>(to_integer(t, i + 1, key));
    return v;
  }
  std::vector<std::string> names(const std::string& key) const {
    const auto& t = need(key);
    const auto n = static_cast<std::size_t>(to_integer(t, 0, key));
    if (t.size() != n + 1) fail(key);
    return {t.begin() + 1, t.end()};
  }
  Eigen::MatrixXd mat(const std::vector<std::string>& t, std::size_t at, const std::string& key) const {
    const auto r = to_integer(t, at, key);
    const auto c = to_integer(t, at + 1, key);
    if (r < 0 || c < 0 || t.size() != at + 2 + static_cast<std::size_t>(r * c)) fail(key);
    Eigen::MatrixXd m(r, c);
    std::size_t k = at + 2;
    for (Eigen::Index i = 0; i < r; ++i) {
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = to_num(t, k++, key);
    }
    return m;
  }
  Eigen::MatrixXd mat(const std::string& key) const { return mat(need(key), 0, key); }

  /// Trees are a header line followed by their node lines, in file order.
  std::vector<TreeModel> trees(const std::string& tag) const {
    std::vector<TreeModel> out;
    for (std::size_t i = 0; i < lines_.size(); ++i) {
      if (lines_[i].first != tag) continue;
      const auto& h = lines_[i].second;
      if (h.size() != 4) fail(tag);
      TreeModel t;
      t.task = h[0] == "classification" ? Task::Classification : Task::Regression;
      t.n_classes = static_cast<int>(to_integer(h, 1, tag));
      t.max_depth = static_cast<int>(to_integer(h, 2, tag));
      const auto n_nodes = static_cast<std::size_t>(to_integer(h, 3, tag));
      for (std::size_t k = 0; k < n_nodes; ++k) {
        if (i + 1 + k >= lines_.size() || lines_[i + 1 + k].first != "node") fail(tag + " nodes");
        const auto& nt = lines_[i + 1 + k].second;
        TreeNode n;
        n.feature = static_cast<int>(to_integer(nt, 0, "node"));
        n.threshold = to_num(nt, 1, "node");
        n.left = static_cast<int>(to_integer(nt, 2, "node"));
        n.right = static_cast<int>(to_integer(nt, 3, "node"));
        n.value = vec(nt, 4, "node");
        if (nt.size() != 5 + n.value.size()) fail("node");
        const auto limit = static_cast<int>(n_nodes);
        if (n.feature >= 0 && (n.left <= 0 || n.left >= limit || n.right <= 0 || n.right >= limit)) fail("node");
        t.nodes.push_back(std::move(n));
      }
      if (t.nodes.empty()) fail(tag);
      out.push_back(std::move(t));
    }
    return out;
  }

  [[noreturn]] void fail(const std::string& key) const {
    throw Error(ErrorCode::ParseError, what_ + ": malformed '" + key + "' entry");
  }

 private:
  double to_num(const std::vector<std::string>& t, std::size_t i, const std::string& key) const {
    double v;
    if (i >= t.size() || !text::parse_double(t[i], v)) fail(key);
    return v;
  }
  long long to_integer(const std::vector<std::string>& t, std::size_t i, const std::string& key) const {
    if (i >= t.size()) fail(key);
    try {
      return text::to_int(t[i], key);
    } catch (const Error&) {
      fail(key);
    }
  }

  std::vector<std::pair<std::string, std::vector<std::string>>> lines_;
  std::string what_;
};

inline void write_spec(ModelWriter& w, const ModelSpec& s) {
  w.num("spec.lambda", s.lambda);
  w.integer("spec.stepwise_folds", s.stepwise_folds);
  w.num("spec.stepwise_tol", s.stepwise_tol);
  w.str("spec.kernel", to_string(s.kernel));
  w.num("spec.C", s.C);
  w.num("spec.gamma", s.gamma);
  w.integer("spec.degree", s.degree);
  w.num("spec.coef0", s.coef0);
  w.num("spec.epsilon", s.epsilon);
  w.num("spec.svr_tol", s.svr_tol);
  w.integer("spec.max_iter", s.max_iter);
  w.ints("spec.mlp.hidden", s.mlp.hidden);
  w.num("spec.mlp.learning_rate", s.mlp.learning_rate);
  w.num("spec.mlp.momentum", s.mlp.momentum);
  w.integer("spec.mlp.epochs", s.mlp.epochs);
  w.integer("spec.mlp.batch_size", s.mlp.batch_size);
  w.integer("spec.mlp.patience", s.mlp.patience);
  w.num("spec.mlp.init_scale", s.mlp.init_scale);
  w.integer("spec.mlp.standardize_target", s.mlp.standardize_target ? 1 : 0);
  w.integer("spec.max_depth", s.max_depth);
  w.integer("spec.min_leaf", s.min_leaf);
  w.integer("spec.n_trees", s.n_trees);
  w.integer("spec.forest_max_depth", s.forest_max_depth);
  w.integer("spec.forest_min_leaf", s.forest_min_leaf);
  w.integer("spec.rounds", s.rounds);
  w.integer("spec.weak_depth", s.weak_depth);
  w.integer("spec.pca_k", s.pca_k);
  w.num("spec.pca_fraction", s.pca_fraction);
  w.line("spec.seed", {std::to_string(s.seed)});
}

inline ModelSpec read_spec(const ModelReader& r, ModelKind kind) {
  ModelSpec s;
  s.kind = kind;
  s.lambda = r.num_or("spec.lambda", s.lambda);
  s.stepwise_folds = static_cast<int>(r.integer_or("spec.stepwise_folds", s.stepwise_folds));
  s.stepwise_tol = r.num_or("spec.stepwise_tol", s.stepwise_tol);
  s.kernel = parse_kernel(r.str_or("spec.kernel", to_string(s.kernel)));
  s.C = r.num_or("spec.C", s.C);
  s.gamma = r.num_or("spec.gamma", s.gamma);
  s.degree = static_cast<int>(r.integer_or("spec.degree", s.degree));
  s.coef0 = r.num_or("spec.coef0", s.coef0);
  s.epsilon = r.num_or("spec.epsilon", s.epsilon);
  s.svr_tol = r.num_or("spec.svr_tol", s.svr_tol);
  s.max_iter = r.integer_or("spec.max_iter", s.max_iter);
  if (r.find("spec.mlp.hidden")) s.mlp.hidden = r.ints("spec.mlp.hidden");
  s.mlp.learning_rate = r.num_or("spec.mlp.learning_rate", s.mlp.learning_rate);
  s.mlp.momentum = r.num_or("spec.mlp.momentum", s.mlp.momentum);
  s.mlp.epochs = static_cast<int>(r.integer_or("spec.mlp.epochs", s.mlp.epochs));
  s.mlp.batch_size = static_cast<int>(r.integer_or("spec.mlp.batch_size", s.mlp.batch_size));
  s.mlp.patience = static_cast<int>(r.integer_or("spec.mlp.patience", s.mlp.patience));
  s.mlp.init_scale = r.num_or("spec.mlp.init_scale", s.mlp.init_scale);
  s.mlp.standardize_target = r.integer_or("spec.mlp.standardize_target", 1) != 0;
  s.max_depth = static_cast<int>(r.integer_or("spec.max_depth", s.max_depth));
  s.min_leaf = static_cast<int>(r.integer_or("spec.min_leaf", s.min_leaf));
  s.n_trees = static_cast<int>(r.integer_or("spec.n_trees", s.n_trees));
  s.forest_max_depth = static_cast<int>(r.integer_or("spec.forest_max_depth", s.forest_max_depth));
  s.forest_min_leaf = static_cast<int>(r.integer_or("spec.forest_min_leaf", s.forest_min_leaf));
  s.rounds = static_cast<int>(r.integer_or("spec.rounds", s.rounds));
  s.weak_depth = static_cast<int>(r.integer_or("spec.weak_depth", s.weak_depth));
  s.pca_k = static_cast<int>(r.integer_or("spec.pca_k", s.pca_k));
  s.pca_fraction = r.num_or("spec.pca_fraction", s.pca_fraction);
  if (r.find("spec.seed")) s.seed = std::stoull(r.str("spec.seed"));
  s.mlp.seed = s.seed;
  return s;
}

}  // namespace detail

inline std::string model_text(const Model& m, const std::vector<std::pair<std::string, std::string>>& provenance = {}) {
  detail::ModelWriter w;
  w.line("gaitpose-model", {std::to_string(kFormatMajor) + "." + std::to_string(kFormatMinor)});
  w.str("kind", to_string(m.kind));
  w.str("tool", kToolVersion);
  for (const auto& [k, v] : provenance) {
    detail::check_token(k, "provenance key");
    w.line("provenance." + k, {v.empty() ? "-" : v});
  }
  w.str("task", to_string(m.task));
  w.str("target", m.target.empty() ? "-" : m.target);
  w.names("input_names", m.input_names);
  w.ints("input_columns", m.input_columns);
  w.names("feature_names", m.feature_names);
  w.vec("standardization.mean", m.standardization.mean);
  w.vec("standardization.scale", m.standardization.scale);
  w.vec("classes", m.classes);
  w.integer("converged", m.converged ? 1 : 0);
  detail::write_spec(w, m.spec);
  if (m.pca) {
    w.vec("pca.mean", m.pca->mean);
    w.mat("pca.components", m.pca->components);
    w.vec("pca.explained_variance", m.pca->explained_variance);
    w.num("pca.total_variance", m.pca->total_variance);
  }
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LinearModel>) {
          w.vec("linear.weights", p.weights);
          w.num("linear.intercept", p.intercept);
          w.num("linear.ridge_lambda", p.ridge_lambda);
          w.ints("linear.selected", p.selected);
        } else if constexpr (std::is_same_v<T, SvrModel>) {
          w.str("svr.kernel", to_string(p.kernel.kind));
          w.num("svr.gamma", p.kernel.gamma);
          w.integer("svr.degree", p.kernel.degree);
          w.num("svr.coef0", p.kernel.coef0);
          w.num("svr.C", p.C);
          w.num("svr.epsilon", p.epsilon);
          w.num("svr.bias", p.bias);
          w.integer("svr.iterations", p.iterations);
          w.mat("svr.support_vectors", p.support_vectors);
          w.vec("svr.dual_coef", p.dual_coef);
        } else if constexpr (std::is_same_v<T, MlpModel>) {
          w.ints("mlp.layer_sizes", p.layer_sizes);
          w.num("mlp.target_mean", p.target_mean);
          w.num("mlp.target_scale", p.target_scale);
          w.integer("mlp.best_epoch", p.best_epoch);
          for (std::size_t l = 0; l < p.weights.size(); ++l) {
            w.mat("mlp.weight", p.weights[l], {std::to_string(l)});
            w.vec("mlp.bias", p.biases[l], {std::to_string(l)});
          }
          w.vec("mlp.train_loss", p.train_loss);
          w.vec("mlp.val_loss", p.val_loss);
        } else if constexpr (std::is_same_v<T, TreeModel>) {
          w.tree("tree", p);
        } else if constexpr (std::is_same_v<T, ForestModel>) {
          w.integer("forest.n_classes", p.n_classes);
          w.integer("forest.n_trees", static_cast<long long>(p.trees.size()));
          for (const auto& t : p.trees) w.tree("tree", t);
        } else if constexpr (std::is_same_v<T, RusBoostModel>) {
          w.integer("rusboost.n_classes", p.n_classes);
          w.vec("rusboost.alphas", p.alphas);
          for (const auto& t : p.learners) w.tree("tree", t);
        }
      },
      m.predictor);
  w.line("end");
  return w.str();
}

inline Model parse_model(const std::string& content, const std::string& what = "model",
                         std::vector<std::pair<std::string, std::string>>* provenance = nullptr) {
  std::vector<std::pair<std::string, std::vector<std::string>>> lines;
  bool ended = false;
  for (const auto& raw : text::split(content, '\n')) {
    const auto tokens = text::split_ws(raw);
    if (tokens.empty()) continue;
    if (ended) throw Error(ErrorCode::ParseError, what + ": content after 'end'");
    if (tokens[0] == "end" && tokens.size() == 1) {
      ended = true;
      continue;
    }
    lines.emplace_back(tokens[0], std::vector<std::string>(tokens.begin() + 1, tokens.end()));
  }
  if (lines.empty() || lines[0].first != "gaitpose-model" || lines[0].second.size() != 1) {
    throw Error(ErrorCode::VersionMismatch, what + ": not a gaitpose model file");
  }
  detail::check_version(lines[0].second[0], what);
  if (!ended) throw Error(ErrorCode::ParseError, what + ": truncated (no 'end' line)");

  const detail::ModelReader r(lines, what);
  const std::string kind_name = r.str("kind");
  ModelKind kind;
  try {
    kind = parse_model_kind(kind_name);
  } catch (const Error&) {
    throw Error(ErrorCode::UnknownKind, what + ": unknown model kind '" + kind_name + "'");
  }
  Model m;
  m.kind = kind;
  m.task = r.str("task") == "classification" ? Task::Classification : Task::Regression;
  m.target = r.str("target");
  if (m.target == "-") m.target.clear();
  m.input_names = r.names("input_names");
  m.input_columns = r.ints("input_columns");
  m.feature_names = r.names("feature_names");
  m.standardization.mean = r.vec("standardization.mean");
  m.standardization.scale = r.vec("standardization.scale");
  m.classes = r.vec("classes");
  m.converged = r.integer_or("converged", 1) != 0;
  m.spec = detail::read_spec(r, kind);
  for (int c : m.input_columns) {
    if (c < 0 || c >= static_cast<int>(m.input_names.size())) r.fail("input_columns");
  }
  if (provenance) {
    provenance->clear();
    for (const auto& [k, t] : lines) {
      if (k.rfind("provenance.", 0) != 0 || t.empty()) continue;
      std::string v = t[0];
      for (std::size_t q = 1; q < t.size(); ++q) v += " " + t[q];
      provenance->emplace_back(k.substr(11), v);
    }
  }
  if (r.find("pca.mean")) {
    PcaTransform p;
    p.mean = r.evec("pca.mean");
    p.components = r.mat("pca.components");
    p.explained_variance = r.evec("pca.explained_variance");
    p.total_variance = r.num("pca.total_variance");
    m.pca = std::move(p);
  }

  switch (kind) {
    case ModelKind::Pca:
      if (!m.pca) r.fail("pca.mean");
      break;
    case ModelKind::Linear:
    case ModelKind::Stepwise: {
      LinearModel lm;
      lm.weights = r.evec("linear.weights");
      lm.intercept = r.num("linear.intercept");
      lm.ridge_lambda = r.num("linear.ridge_lambda");
      lm.selected = r.ints("linear.selected");
      m.predictor = std::move(lm);
      break;
    }
    case ModelKind::Svr: {
      SvrModel s;
      s.kernel.kind = parse_kernel(r.str("svr.kernel"));
      s.kernel.gamma = r.num("svr.gamma");
      s.kernel.degree = static_cast<int>(r.integer("svr.degree"));
      s.kernel.coef0 = r.num("svr.coef0");
      s.C = r.num("svr.C");
      s.epsilon = r.num("svr.epsilon");
      s.bias = r.num("svr.bias");
      s.iterations = r.integer_or("svr.iterations", 0);
      s.converged = m.converged;
      s.support_vectors = r.mat("svr.support_vectors");
      s.dual_coef = r.evec("svr.dual_coef");
      if (s.dual_coef.size() != s.support_vectors.rows()) r.fail("svr.dual_coef");
      m.predictor = std::move(s);
      break;
    }
    case ModelKind::Mlp: {
      MlpModel p;
      p.layer_sizes = r.ints("mlp.layer_sizes");
      p.target_mean = r.num("mlp.target_mean");
      p.target_scale = r.num("mlp.target_scale");
      p.best_epoch = static_cast<int>(r.integer_or("mlp.best_epoch", -1));
      p.config = m.spec.mlp;
      const auto ws = r.all("mlp.weight");
      const auto bs = r.all("mlp.bias");
      if (p.layer_sizes.size() < 2 || ws.size() != p.layer_sizes.size() - 1 || bs.size() != ws.size()) r.fail("mlp layers");
      for (std::size_t l = 0; l < ws.size(); ++l) {
        Eigen::MatrixXd W = r.mat(*ws[l], 1, "mlp.weight");
        const auto b = r.vec(*bs[l], 1, "mlp.bias");
        if (W.rows() != p.layer_sizes[l + 1] || W.cols() != p.layer_sizes[l] ||
            b.size() != static_cast<std::size_t>(W.rows())) {
          r.fail("mlp.weight");
        }
        p.weights.push_back(std::move(W));
        p.biases.push_back(Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size())));
      }
      if (r.find("mlp.train_loss")) p.train_loss = r.vec("mlp.train_loss");
      if (r.find("mlp.val_loss")) p.val_loss = r.vec("mlp.val_loss");
      m.predictor = std::move(p);
      break;
    }
    case ModelKind::Tree: {
      auto trees = r.trees("tree");
      if (trees.size() != 1) r.fail("tree");
      m.predictor = std::move(trees[0]);
      break;
    }
    case ModelKind::Forest: {
      ForestModel f;
      f.task = m.task;
      f.n_classes = static_cast<int>(r.integer("forest.n_classes"));
      f.trees = r.trees("tree");
      if (f.trees.empty() || static_cast<long long>(f.trees.size()) != r.integer("forest.n_trees")) r.fail("forest.n_trees");
      m.predictor = std::move(f);
      break;
    }
    case ModelKind::RusBoost: {
      RusBoostModel b;
      b.n_classes = static_cast<int>(r.integer("rusboost.n_classes"));
      b.alphas = r.vec("rusboost.alphas");
      b.learners = r.trees("tree");
      if (b.learners.size() != b.alphas.size()) r.fail("rusboost.alphas");
      m.predictor = std::move(b);
      break;
    }
  }
  return m;
}

inline void write_model(const std::filesystem::path& path, const Model& m,
                        const std::vector<std::pair<std::string, std::string>>& provenance = {}) {
  text::write_file_atomic(path, model_text(m, provenance));
}

inline Model read_model(const std::filesystem::path& path,
                        std::vector<std::pair<std::string, std::string>>* provenance = nullptr) {
  return parse_model(text::read_file(path), path.string(), provenance);
}

// ---------------------------------------------------------------------------
// Reports

/// Writes `<stem>.txt` (human readable) and `<stem>.kv` (key=value).
inline void write_report(const std::filesystem::path& stem, const EvalReport& r) {
  auto txt = stem;
  txt += ".txt";
  auto kv = stem;
  kv += ".kv";
  text::write_file_atomic(txt, report_text(r));
  text::write_file_atomic(kv, "#gaitpose-artifact kind=report version=" + std::to_string(kFormatMajor) + "." +
                                  std::to_string(kFormatMinor) + " tool=" + kToolVersion + "\n" + report_kv(r));
}

/// Reads a key=value report back as ordered pairs.
inline std::vector<std::pair<std::string, std::string>> read_report_kv(const std::filesystem::path& path) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& line : text::split(text::read_file(path), '\n')) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ParseError, path.string() + ": line without '='");
    out.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  return out;
}

}  // namespace gaitpose
