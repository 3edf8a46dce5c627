// gaitpose command-line tool: clean, features, synth, train, predict, evaluate.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <type_traits>
#include <vector>

#include "gaitpose/eval.hpp"
#include "gaitpose/pose_ingest.hpp"
#include "gaitpose/store.hpp"
#include "gaitpose/synth.hpp"
#include "gaitpose/track_cleaner.hpp"

namespace fs = std::filesystem;
using namespace gaitpose;

namespace {

using Pairs = std::vector<std::pair<std::string, std::string>>;

template <typename T>
struct is_vector : std::false_type {};
template <typename T>
struct is_vector<std::vector<T>> : std::true_type {};

std::string show(const std::string& s) { return s.empty() ? "-" : s; }
std::string show(bool b) { return b ? "true" : "false"; }
std::string show(double v) { return text::format_double(v); }
template <typename T>
  requires std::is_integral_v<T>
std::string show(T v) {
  return std::to_string(v);
}
template <typename T>
std::string show(const std::vector<T>& v) {
  std::string out;
  for (const auto& x : v) out += (out.empty() ? "" : ",") + show(x);
  return out.empty() ? "-" : out;
}

/// A subcommand whose options are echoed, resolved, into artifact provenance.
class Command {
 public:
  Command(CLI::App& parent, const std::string& name, const std::string& about, std::string ns)
      : app_(parent.add_subcommand(name, about)), ns_(std::move(ns)) {
    app_->add_option("--config", config_, "Key-value file; keys are " + ns_ + ".<option>");
  }

  template <typename T>
  CLI::Option* opt(const std::string& name, T& var, const std::string& about) {
    CLI::Option* o = app_->add_option("--" + name, var, about)->capture_default_str();
    if constexpr (is_vector<T>::value) {
      o->delimiter(',');
    } else {
      o->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    }
    echo_.emplace_back(name, [&var] { return show(var); });
    return o;
  }

  CLI::Option* flag(const std::string& name, bool& var, const std::string& about) {
    CLI::Option* o = app_->add_flag("--" + name, var, about)->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    echo_.emplace_back(name, [&var] { return show(var); });
    return o;
  }

  CLI::App* app() const { return app_; }

  Pairs provenance() const {
    Pairs p{{"command", ns_}};
    for (const auto& [name, get] : echo_) p.emplace_back(ns_ + "." + name, get());
    return p;
  }

 private:
  CLI::App* app_;
  std::string ns_;
  std::string config_;
  std::vector<std::pair<std::string, std::function<std::string()>>> echo_;
};

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  fs::path out = p;
  out.replace_extension();
  out += suffix;
  return out;
}

void print_warnings(const std::vector<std::string>& w) {
  for (const auto& s : w) std::cerr << "warning: " << s << '\n';
}

/// Loads `train.model = svr` style lines and turns the ones addressed to
/// `ns` into `--model=svr` arguments.
std::vector<std::string> config_args(const fs::path& path, const std::string& ns) {
  static const std::set<std::string> commands = {"clean", "features", "synth", "train", "predict", "evaluate"};
  std::vector<std::string> out;
  int line_no = 0;
  for (const auto& raw : text::split(text::read_file(path), '\n')) {
    ++line_no;
    const std::string line(text::trim(raw));
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(text::trim(line.substr(0, eq)));
    const std::string value(text::trim(line.substr(eq + 1)));
    const std::string head = key.substr(0, key.find('.'));
    if (key.find('.') == std::string::npos || !commands.count(head)) {
      throw Error(ErrorCode::ParseError,
                  path.string() + ":" + std::to_string(line_no) + ": key '" + key + "' is not namespaced by a command");
    }
    if (key.rfind(ns + ".", 0) != 0) continue;
    const std::string name = key.substr(ns.size() + 1);
    if (name.find('.') != std::string::npos) continue;  // e.g. synth.scene.* while running synth dataset
    out.push_back("--" + name + "=" + value);
  }
  return out;
}

/// Splices config-file arguments in front of the command-line ones so that
/// explicit flags win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  if (args.empty()) return args;
  std::size_t depth = 1;
  std::string ns = args[0];
  if (args[0] == "synth" && args.size() > 1 && args[1].rfind("-", 0) != 0) {
    ns += "." + args[1];
    depth = 2;
  }
  std::string config;
  for (std::size_t i = depth; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config = args[i].substr(9);
  }
  if (config.empty()) return args;
  const auto extra = config_args(config, ns);
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(depth), extra.begin(), extra.end());
  return args;
}

// ---------------------------------------------------------------------------

struct CleanArgs {
  std::string in, out, report;
  double fps = 30.0, width = 1280.0, height = 720.0;
  double c_min = 0.1, d_max = 0.15, ema_alpha = 0.0;
};

int run_clean(const CleanArgs& a, const Pairs& prov) {
  std::vector<std::string> warnings;
  const FrameSequence seq = load_sequence(a.in, a.fps, ImageSize{a.width, a.height}, &warnings);
  print_warnings(warnings);
  CleanerConfig cfg;
  cfg.c_min = a.c_min;
  cfg.d_max = a.d_max;
  cfg.ema_alpha = a.ema_alpha;
  const TrackPair pair = clean_sequence(seq, cfg);
  write_tracks(a.out, pair, prov);
  ArtifactHeader h;
  h.kind = "cleaning-report";
  h.fields = prov;
  const fs::path report = a.report.empty() ? with_suffix(a.out, ".report.csv") : fs::path(a.report);
  text::write_file_atomic(report, detail::header_line(h) + "\n" + cleaning_report_csv(pair));
  std::cout << "cleaned " << seq.frames.size() << " frames from frame " << pair.init_frame << ": left "
            << pair.left.samples.size() << " samples, " << pair.left.gaps.size() << " gaps; right "
            << pair.right.samples.size() << " samples, " << pair.right.gaps.size() << " gaps\n";
  return 0;
}

struct FeatureArgs {
  std::vector<std::string> tracks;
  std::string out, targets, window = "rect";
  double band_max_hz = 6.0;
  int max_gap = 15, min_len = 64;
  std::vector<std::string> extra;
};

FeatureConfig feature_config(double band_max_hz, const std::string& window, const std::vector<std::string>& extra) {
  FeatureConfig cfg;
  cfg.edges = default_band_edges(band_max_hz);
  if (window == "rect") {
    cfg.window = Window::Rectangular;
  } else if (window == "hann") {
    cfg.window = Window::Hann;
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown window '" + window + "' (rect, hann)");
  }
  cfg.extra_features = extra;
  return cfg;
}

int run_features(const FeatureArgs& a, const Pairs& prov) {
  FeatureConfig cfg = feature_config(a.band_max_hz, a.window, a.extra);
  cfg.preprocess.max_gap = a.max_gap;
  cfg.preprocess.min_len = a.min_len;
  std::vector<fs::path> files;
  for (const auto& t : a.tracks) {
    if (fs::is_directory(t)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(t)) {
        if (e.is_regular_file() && e.path().extension() == ".json") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.emplace_back(t);
    }
  }
  if (files.empty()) throw Error(ErrorCode::EmptyDirectory, "no track files given");

  std::map<std::string, std::map<std::string, double>> targets;
  FeatureTable table;
  table.feature_names = feature_names(cfg);
  if (!a.targets.empty()) {
    const FeatureTable t = read_features(a.targets);
    table.target_names = t.target_names;
    for (const auto& r : t.rows) targets[r.id] = r.targets;
  }
  for (const auto& f : files) {
    std::string id = f.stem().string();
    if (id.size() > 7 && id.substr(id.size() - 7) == ".tracks") id.resize(id.size() - 7);
    FeatureVector fv;
    try {
      fv = video_features(read_tracks(f), cfg, id);
    } catch (const Error& e) {
      throw Error(e.code(), f.string() + ": " + e.message());
    }
    if (!a.targets.empty()) {
      if (auto it = targets.find(id); it != targets.end()) {
        fv.targets = it->second;
      } else {
        std::cerr << "warning: no targets for " << id << '\n';
      }
    }
    table.rows.push_back(std::move(fv));
  }
  write_features(a.out, table, prov);
  std::cout << "wrote " << table.rows.size() << " rows x " << table.feature_names.size() << " features to " << a.out
            << '\n';
  return 0;
}

struct SynthDatasetArgs {
  std::size_t n = 200;
  std::uint64_t seed = 1;
  std::string out, window = "rect";
  double band_max_hz = 6.0;
  double cadence_min = 80.0, cadence_max = 140.0;
  double step_min = 0.4, step_max = 0.8;
  double noise = 1.0, fps = 32.0, duration = 32.0;
  std::vector<std::string> extra;
};

int run_synth_dataset(const SynthDatasetArgs& a, const Pairs& prov) {
  synth::ParamRanges r;
  r.cadence = {a.cadence_min, a.cadence_max};
  r.step_length = {a.step_min, a.step_max};
  r.noise_sigma = {a.noise, a.noise};
  r.fps = a.fps;
  r.duration_s = a.duration;
  const FeatureTable t = synth::generate_dataset(a.n, r, a.seed, feature_config(a.band_max_hz, a.window, a.extra));
  write_features(a.out, t, prov);
  std::cout << "wrote " << t.rows.size() << " synthetic rows to " << a.out << '\n';
  return 0;
}

struct SynthSceneArgs {
  std::uint64_t seed = 1;
  std::string out;
  int frames = 600;
  double noise = 1.0;
  bool no_companion = false, no_shadow = false, no_occlusion = false, lateral_only = false;
};

int run_synth_scene(const SynthSceneArgs& a, const Pairs& prov) {
  synth::StandardSceneOptions opt;
  opt.frames = a.frames;
  opt.noise_sigma = a.noise;
  opt.companion = !a.no_companion && !a.lateral_only;
  opt.shadow = !a.no_shadow && !a.lateral_only;
  opt.frontal = !a.lateral_only;
  if (a.no_occlusion) opt.frontal_occlusion.reset();
  const synth::Scene scene = synth::generate_scene(synth::standard_scene(a.seed, opt));
  write_sequence(a.out, scene.sequence);
  // Ground truth: actor kind of every entry, in file order.
  std::string truth = "frame,entry,actor,kind\n";
  static const char* kinds[] = {"patient-lateral", "patient-frontal", "shadow", "companion"};
  for (std::size_t f = 0; f < scene.labels.size(); ++f) {
    for (std::size_t e = 0; e < scene.labels[f].size(); ++e) {
      const int id = scene.labels[f][e];
      truth += std::to_string(scene.sequence.frames[f].index) + "," + std::to_string(e) + "," + std::to_string(id) +
               "," + kinds[static_cast<int>(scene.kinds[static_cast<std::size_t>(id)])] + "\n";
    }
  }
  ArtifactHeader h;
  h.kind = "scene-truth";
  h.fields = prov;
  text::write_file_atomic(fs::path(a.out) / "scene_truth.csv", detail::header_line(h) + "\n" + truth);
  std::cout << "wrote " << scene.sequence.frames.size() << " frames to " << a.out << '\n';
  return 0;
}

struct TrainArgs {
  std::string features, target = "cadence", model, out, report, grid, grid_out;
  std::string split = "buckets:4", kernel = "rbf", task = "auto";
  std::uint64_t split_seed = 1, seed = 0;
  int pca = 0;
  double pca_fraction = 0.0;
  std::vector<std::string> params;
  std::vector<int> hidden = {10, 10};
  bool cluster_gmfcs = false;
};

/// Settings that change what a feature column means, taken from a feature
/// table's artifact line and carried into models as `input.<name>`.
Pairs feature_settings(const ArtifactHeader& h) {
  static const std::set<std::string> keys = {"band-max-hz", "window", "extra", "max-gap", "min-len"};
  Pairs out;
  for (const auto& [k, v] : h.fields) {
    const std::string name = k.substr(k.rfind('.') + 1);
    if (k.find('.') != std::string::npos && keys.count(name)) out.emplace_back("input." + name, v);
  }
  return out;
}

void check_settings(const Pairs& model_prov, const ArtifactHeader& table_header) {
  const Pairs have = feature_settings(table_header);
  for (const auto& [k, v] : model_prov) {
    for (const auto& [hk, hv] : have) {
      if (k == hk && v != hv) {
        throw Error(ErrorCode::FeatureMismatch, "features were computed with " + k.substr(6) + "=" + hv +
                                                    ", the model was trained with " + v);
      }
    }
  }
}

void cluster_targets(FeatureTable& t, const std::string& target) {
  for (auto& r : t.rows) {
    if (auto it = r.targets.find(target); it != r.targets.end()) {
      it->second = static_cast<double>(cluster_gmfcs(static_cast<int>(std::lround(it->second))));
    }
  }
}

int run_train(const TrainArgs& a, const Pairs& prov) {
  ModelSpec spec;
  spec.kind = parse_model_kind(a.model);
  if (spec.kind == ModelKind::Pca) {
    throw Error(ErrorCode::UnknownKind, "pca is a transform, not a predictor (use --pca K); valid kinds: " +
                                            std::string(kTrainableKinds));
  }
  spec.kernel = parse_kernel(a.kernel);
  spec.seed = a.seed;
  spec.mlp.seed = a.seed;
  spec.mlp.hidden = a.hidden;
  spec.pca_k = a.pca;
  spec.pca_fraction = a.pca_fraction;
  for (const auto& p : a.params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--param expects name=value, got '" + p + "'");
    set_param(spec, p.substr(0, eq), text::to_double(p.substr(eq + 1), p.substr(0, eq)));
  }

  Task task;
  if (a.task == "regression") {
    task = Task::Regression;
  } else if (a.task == "classification") {
    task = Task::Classification;
  } else if (a.task == "auto") {
    task = spec.kind == ModelKind::RusBoost || a.target == "gmfcs" || a.cluster_gmfcs ? Task::Classification
                                                                                        : Task::Regression;
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown task '" + a.task + "' (auto, regression, classification)");
  }
  if (!supports(spec.kind, task)) {
    throw Error(ErrorCode::InvalidArgument, std::string(to_string(spec.kind)) + " does not support " + to_string(task));
  }

  ArtifactHeader header;
  FeatureTable table = read_features(a.features, &header);
  Pairs model_prov = prov;
  for (auto& p : feature_settings(header)) model_prov.push_back(std::move(p));
  if (a.cluster_gmfcs) cluster_targets(table, a.target);
  std::vector<std::string> warnings;
  const Dataset ds = make_dataset(table, a.target, task, true, &warnings);
  print_warnings(warnings);
  const SplitPlan plan = make_split(static_cast<std::size_t>(ds.rows()), parse_split_kind(a.split), a.split_seed);

  EvalReport report;
  if (!a.grid.empty()) {
    const GridResult g = grid_search(ds, spec, parse_grid(a.grid), plan);
    const fs::path grid_path = a.grid_out.empty() ? with_suffix(a.out, ".grid.csv") : fs::path(a.grid_out);
    ArtifactHeader h;
    h.kind = "grid";
    h.fields = prov;
    text::write_file_atomic(grid_path, detail::header_line(h) + "\n" + grid_csv(g));
    const GridCell& best = g.best_cell();
    std::cout << "grid best:";
    for (std::size_t i = 0; i < g.axes.size(); ++i) {
      set_param(spec, g.axes[i].name, best.params[i]);
      std::cout << ' ' << g.axes[i].name << '=' << text::format_double(best.params[i]);
    }
    std::cout << " score " << text::format_double(best.score) << '\n';
    report = best.report;
  } else {
    report = cross_validate(ds, spec, plan);
  }
  for (const auto& p : prov) report.provenance.push_back(p);
  write_report(a.report.empty() ? with_suffix(a.out, ".cv") : fs::path(a.report), report);

  const Model model = fit_model(spec, ds);
  if (!model.converged) std::cerr << "warning: final fit did not converge\n";
  write_model(a.out, model, model_prov);
  std::cout << report_text(report);
  return 0;
}

struct PredictArgs {
  std::string model, features, out;
};

int run_predict(const PredictArgs& a, const Pairs& prov) {
  Pairs model_prov;
  const Model m = read_model(a.model, &model_prov);
  ArtifactHeader header;
  const FeatureTable t = read_features(a.features, &header);
  check_feature_names(m, t);
  check_settings(model_prov, header);
  ArtifactHeader h;
  h.kind = "predictions";
  h.fields = prov;
  std::string out = detail::header_line(h) + "\nid," + (m.target.empty() ? "prediction" : m.target) + "\n";
  for (const auto& r : t.rows) out += r.id + "," + text::format_double(predict(m, r.values)) + "\n";
  text::write_file_atomic(a.out, out);
  std::cout << "wrote " << t.rows.size() << " predictions to " << a.out << '\n';
  return 0;
}

struct EvaluateArgs {
  std::string model, features, target, out;
};

int run_evaluate(const EvaluateArgs& a, const Pairs& prov) {
  Pairs model_prov;
  const Model m = read_model(a.model, &model_prov);
  ArtifactHeader header;
  FeatureTable t = read_features(a.features, &header);
  check_feature_names(m, t);
  check_settings(model_prov, header);
  const std::string target = a.target.empty() ? m.target : a.target;
  for (const auto& [k, v] : model_prov) {
    if (k == "train.cluster-gmfcs" && v == "true") cluster_targets(t, target);
  }
  const EvalReport r0 = evaluate_model(m, dataset_for_model(m, t, target));
  EvalReport r = r0;
  r.provenance.emplace_back("model_file", a.model);
  for (const auto& p : prov) r.provenance.push_back(p);
  write_report(a.out, r);
  std::cout << report_text(r);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gait parameters from pose keypoint videos"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  CleanArgs clean;
  Command c_clean(app, "clean", "Split a keypoint video into left and right patient tracks", "clean");
  c_clean.opt("in", clean.in, "Directory of OpenPose frame files")->required();
  c_clean.opt("out", clean.out, "Output tracks JSON")->required();
  c_clean.opt("report", clean.report, "Per-frame cleaning report CSV (default <out>.report.csv)");
  c_clean.opt("fps", clean.fps, "Frame rate");
  c_clean.opt("width", clean.width, "Image width in pixels");
  c_clean.opt("height", clean.height, "Image height in pixels");
  c_clean.opt("c-min", clean.c_min, "Minimum joint confidence");
  c_clean.opt("d-max", clean.d_max, "Association gate as a fraction of the image width");
  c_clean.opt("ema-alpha", clean.ema_alpha, "Track memory smoothing (0 keeps the last position)");

  FeatureArgs feat;
  Command c_feat(app, "features", "Band-power features from cleaned tracks", "features");
  c_feat.opt("tracks", feat.tracks, "Track files or directories of them")->required();
  c_feat.opt("out", feat.out, "Output feature CSV")->required();
  c_feat.opt("targets", feat.targets, "CSV of id plus target columns to attach");
  c_feat.opt("band-max-hz", feat.band_max_hz, "Upper edge of the last band (12 equal bands from 0)");
  c_feat.opt("window", feat.window, "rect or hann");
  c_feat.opt("max-gap", feat.max_gap, "Longest gap bridged by interpolation, in frames");
  c_feat.opt("min-len", feat.min_len, "Shortest usable signal, in frames");
  c_feat.opt("extra", feat.extra, "Extra features: video_scale, duration_s");

  CLI::App* synth_app = app.add_subcommand("synth", "Synthetic scenes and datasets");
  synth_app->require_subcommand(1);
  SynthDatasetArgs sd;
  Command c_sd(*synth_app, "dataset", "Feature table from simulated walkers", "synth.dataset");
  c_sd.opt("n", sd.n, "Number of samples");
  c_sd.opt("seed", sd.seed, "Random seed");
  c_sd.opt("out", sd.out, "Output feature CSV")->required();
  c_sd.opt("band-max-hz", sd.band_max_hz, "Upper edge of the last band");
  c_sd.opt("window", sd.window, "rect or hann");
  c_sd.opt("cadence-min", sd.cadence_min, "Lowest cadence, steps/min");
  c_sd.opt("cadence-max", sd.cadence_max, "Highest cadence, steps/min");
  c_sd.opt("step-min", sd.step_min, "Shortest step, hip-neck units");
  c_sd.opt("step-max", sd.step_max, "Longest step, hip-neck units");
  c_sd.opt("noise", sd.noise, "Keypoint noise sigma in pixels");
  c_sd.opt("fps", sd.fps, "Frame rate");
  c_sd.opt("duration", sd.duration, "Clip length in seconds");
  c_sd.opt("extra", sd.extra, "Extra features: video_scale, duration_s");

  SynthSceneArgs ss;
  Command c_ss(*synth_app, "scene", "Clinic scene written as OpenPose frame files", "synth.scene");
  c_ss.opt("seed", ss.seed, "Random seed");
  c_ss.opt("out", ss.out, "Output directory")->required();
  c_ss.opt("frames", ss.frames, "Number of frames");
  c_ss.opt("noise", ss.noise, "Keypoint noise sigma in pixels");
  c_ss.flag("no-companion", ss.no_companion, "Leave out the crossing companion");
  c_ss.flag("no-shadow", ss.no_shadow, "Leave out the wall shadow");
  c_ss.flag("no-occlusion", ss.no_occlusion, "Keep the frontal walker in view throughout");
  c_ss.flag("lateral-only", ss.lateral_only, "Only the lateral walker (one entry per frame)");

  TrainArgs tr;
  Command c_tr(app, "train", "Fit a model on a feature table", "train");
  c_tr.opt("features", tr.features, "Feature CSV")->required();
  c_tr.opt("target", tr.target, "Target column");
  c_tr.opt("model", tr.model, std::string("Model kind: ") + kTrainableKinds)->required();
  c_tr.opt("out", tr.out, "Output model file")->required();
  c_tr.opt("report", tr.report, "Cross-validation report stem (default <out>.cv)");
  c_tr.opt("grid", tr.grid, "Grid such as 'C=0.1,1,10;gamma=0.1,1,10'");
  c_tr.opt("grid-out", tr.grid_out, "Grid scores CSV (default <out>.grid.csv)");
  c_tr.opt("split", tr.split, "kfold:K, buckets:K or holdout:TR/VA/TE");
  c_tr.opt("split-seed", tr.split_seed, "Seed of the split shuffle");
  c_tr.opt("seed", tr.seed, "Model seed");
  c_tr.opt("pca", tr.pca, "Keep K principal components ahead of the model");
  c_tr.opt("pca-fraction", tr.pca_fraction, "Keep components up to this variance fraction");
  c_tr.opt("kernel", tr.kernel, "SVR kernel: linear, rbf, poly");
  c_tr.opt("param", tr.params, "Hyperparameter name=value (repeatable)");
  c_tr.opt("hidden", tr.hidden, "MLP hidden layer sizes");
  c_tr.opt("task", tr.task, "auto, regression or classification");
  c_tr.flag("cluster-gmfcs", tr.cluster_gmfcs, "Merge gmfcs levels into {1}, {2,3}, {4,5}");

  PredictArgs pr;
  Command c_pr(app, "predict", "Apply a model to a feature table", "predict");
  c_pr.opt("model", pr.model, "Model file")->required();
  c_pr.opt("features", pr.features, "Feature CSV")->required();
  c_pr.opt("out", pr.out, "Output predictions CSV")->required();

  EvaluateArgs ev;
  Command c_ev(app, "evaluate", "Score a model against a labelled feature table", "evaluate");
  c_ev.opt("model", ev.model, "Model file")->required();
  c_ev.opt("features", ev.features, "Feature CSV")->required();
  c_ev.opt("target", ev.target, "Target column (default: the model's)");
  c_ev.opt("out", ev.out, "Report stem; writes <out>.txt and <out>.kv")->required();

  bool cleaning = false;
  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());
    try {
      app.parse(args);
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) return app.exit(e);
      std::cerr << "error: Usage: " << e.what() << '\n';
      return 1;
    }
    if (c_clean.app()->parsed()) {
      cleaning = true;
      return run_clean(clean, c_clean.provenance());
    }
    if (c_feat.app()->parsed()) return run_features(feat, c_feat.provenance());
    if (c_sd.app()->parsed()) return run_synth_dataset(sd, c_sd.provenance());
    if (c_ss.app()->parsed()) return run_synth_scene(ss, c_ss.provenance());
    if (c_tr.app()->parsed()) return run_train(tr, c_tr.provenance());
    if (c_pr.app()->parsed()) return run_predict(pr, c_pr.provenance());
    if (c_ev.app()->parsed()) return run_evaluate(ev, c_ev.provenance());
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cleaning && e.code() == ErrorCode::NoInitFrame ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
