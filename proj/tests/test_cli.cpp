#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <string>

#include "gaitpose/store.hpp"
#include "gaitpose/text.hpp"
#include "util.hpp"

#ifndef GAITPOSE_CLI
#error "GAITPOSE_CLI must name the gaitpose executable"
#endif

using namespace gaitpose;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  testutil::TempDir dir{"cli"};

  std::string p(const std::string& name) const { return (dir / name).string(); }

  Outcome run(const std::string& args) const {
    const std::string cmd = std::string("cd '") + dir.path().string() + "' && '" + GAITPOSE_CLI + "' " + args +
                            " > '" + p(".stdout") + "' 2> '" + p(".stderr") + "'";
    const int status = std::system(cmd.c_str());
    Outcome r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = text::read_file(p(".stdout"));
    r.err = text::read_file(p(".stderr"));
    return r;
  }

  std::string kv(const std::string& file, const std::string& key) const {
    for (const auto& [k, v] : read_report_kv(p(file))) {
      if (k == key) return v;
    }
    return "";
  }
};

bool has(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

}  // namespace

TEST_F(Cli, HelpAndMissingCommand) {
  EXPECT_EQ(run("--help").code, 0);
  const Outcome r = run("");
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(has(r.err, "error: ")) << r.err;
}

TEST_F(Cli, SynthTrainEvaluateCadence) {
  ASSERT_EQ(run("synth dataset --n 200 --seed 11 --band-max-hz 2.4 --out train.csv").code, 0);
  ASSERT_EQ(run("synth dataset --n 100 --seed 12 --band-max-hz 2.4 --out test.csv").code, 0);
  const Outcome t = run("train --features train.csv --target cadence --model svr --grid 'C=0.1,1,10;gamma=0.1,1,10' "
                    "--split buckets:4 --out svr.model");
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_TRUE(has(t.out, "grid best:"));
  EXPECT_GE(text::to_double(kv("svr.cv.kv", "r2"), "r2"), 0.8);
  const std::string grid = text::read_file(p("svr.grid.csv"));
  EXPECT_EQ(text::split(grid, '\n').size(), 12u);  // artifact line, header, 9 cells, trailing newline
  EXPECT_TRUE(has(grid, "C,gamma,score,status,error"));

  const Outcome e = run("evaluate --model svr.model --features test.csv --out eval");
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_GE(text::to_double(kv("eval.kv", "r2"), "r2"), 0.8);
  EXPECT_EQ(kv("eval.kv", "provenance.evaluate.model"), "svr.model");
  EXPECT_EQ(text::read_file(p("eval.txt")), e.out);

  const Outcome pr = run("predict --model svr.model --features test.csv --out pred.csv");
  ASSERT_EQ(pr.code, 0) << pr.err;
  const auto lines = text::split(text::read_file(p("pred.csv")), '\n');
  EXPECT_EQ(lines.size(), 103u);
  EXPECT_EQ(lines[1], "id,cadence");
  EXPECT_TRUE(lines[2].rfind("synth-000000,", 0) == 0);
}

TEST_F(Cli, UnknownModelListsKinds) {
  ASSERT_EQ(run("synth dataset --n 20 --out d.csv").code, 0);
  const Outcome r = run("train --features d.csv --model banana --out m");
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(has(r.err, "error: UnknownKind:")) << r.err;
  EXPECT_TRUE(has(r.err, "linear, stepwise, forest, svr, mlp, tree, rusboost")) << r.err;
  EXPECT_FALSE(std::filesystem::exists(p("m")));
  EXPECT_EQ(run("train --features d.csv --model pca --out m").code, 1);
}

TEST_F(Cli, FeatureMismatchNamesTheColumn) {
  ASSERT_EQ(run("synth dataset --n 40 --out d.csv").code, 0);
  ASSERT_EQ(run("train --features d.csv --model linear --param lambda=0.01 --out lin.model").code, 0);

  std::string csv = text::read_file(p("d.csv"));
  csv.replace(csv.find(",rank_b03,"), 10, ",rank_bX3,");
  text::write_file_atomic(p("renamed.csv"), csv);
  Outcome r = run("evaluate --model lin.model --features renamed.csv --out e");
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(has(r.err, "error: FeatureMismatch:")) << r.err;
  EXPECT_TRUE(has(r.err, "'rank_b03'")) << r.err;

  ASSERT_EQ(run("synth dataset --n 10 --extra duration_s --out extra.csv").code, 0);
  r = run("predict --model lin.model --features extra.csv --out p.csv");
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(has(r.err, "duration_s")) << r.err;

  // Same column names, different band edges.
  ASSERT_EQ(run("synth dataset --n 10 --band-max-hz 2.4 --out narrow.csv").code, 0);
  r = run("predict --model lin.model --features narrow.csv --out p.csv");
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(has(r.err, "band-max-hz")) << r.err;
}

TEST_F(Cli, CleanExitCodes) {
  ASSERT_EQ(run("synth scene --seed 5 --out scene").code, 0);
  Outcome r = run("clean --in scene --out tracks.json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = text::split(text::read_file(p("tracks.report.csv")), '\n');
  ASSERT_EQ(lines.size(), 603u);  // artifact line, header, 600 frames, trailing newline
  EXPECT_EQ(lines[1].rfind("frame,entries", 0), 0u);
  const TrackPair tp = read_tracks(p("tracks.json"));
  EXPECT_EQ(tp.diagnostics.size(), 600u);

  ASSERT_EQ(run("synth scene --seed 5 --lateral-only --out single").code, 0);
  r = run("clean --in single --out s.json");
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(has(r.err, "error: NoInitFrame:")) << r.err;

  EXPECT_EQ(run("clean --in missing_dir --out s.json").code, 1);
  std::filesystem::create_directories(p("broken"));
  text::write_file_atomic(p("broken/v_000000000000_keypoints.json"), "{\"people\": [");
  r = run("clean --in broken --out s.json");
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(has(r.err, "error: MalformedJson:")) << r.err;
}

TEST_F(Cli, FeaturesFromCleanedTracks) {
  ASSERT_EQ(run("synth scene --seed 6 --no-companion --out scene").code, 0);
  ASSERT_EQ(run("clean --in scene --out walk.json").code, 0);
  text::write_file_atomic(p("targets.csv"), "id,cadence\nwalk,101.5\n");
  const Outcome r = run("features --tracks walk.json --targets targets.csv --out f.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  ArtifactHeader h;
  const FeatureTable t = read_features(p("f.csv"), &h);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0].id, "walk");
  EXPECT_EQ(t.rows[0].values.size(), 24u);
  EXPECT_EQ(t.rows[0].targets.at("cadence"), 101.5);
  EXPECT_EQ(h.get("features.tracks"), "walk.json");
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
  text::write_file_atomic(p("run.cfg"),
                          "# shared settings\n"
                          "synth.dataset.n = 60\n"
                          "synth.dataset.seed = 4\n"
                          "train.model = linear\n"
                          "train.split = kfold:5\n"
                          "evaluate.target = speed\n");
  ASSERT_EQ(run("synth dataset --config run.cfg --out a.csv").code, 0);
  EXPECT_EQ(read_features(p("a.csv")).rows.size(), 60u);
  ASSERT_EQ(run("train --config run.cfg --features a.csv --split buckets:3 --out cfg.model").code, 0);
  ASSERT_EQ(run("train --model linear --features a.csv --split buckets:3 --out flags.model").code, 0);
  std::vector<std::pair<std::string, std::string>> prov;
  read_model(p("cfg.model"), &prov);
  bool saw_split = false;
  for (const auto& [k, v] : prov) {
    if (k == "train.split") {
      saw_split = true;
      EXPECT_EQ(v, "buckets:3");
    }
  }
  EXPECT_TRUE(saw_split);
  // The resolved configuration is identical, so apart from the output name the files match.
  std::string a = text::read_file(p("cfg.model"));
  std::string b = text::read_file(p("flags.model"));
  a.replace(a.find("cfg.model"), 9, "X");
  b.replace(b.find("flags.model"), 11, "X");
  EXPECT_EQ(a, b);

  text::write_file_atomic(p("bad.cfg"), "train.no_such_option = 1\n");
  EXPECT_EQ(run("train --config bad.cfg --features a.csv --model linear --out z").code, 1);
  text::write_file_atomic(p("bad2.cfg"), "model = linear\n");
  EXPECT_TRUE(has(run("train --config bad2.cfg --features a.csv --model linear --out z").err, "ParseError"));
}

TEST_F(Cli, RepeatedRunsAreByteIdentical) {
  auto pipeline = [&] {
    EXPECT_EQ(run("synth dataset --n 60 --seed 9 --out d.csv").code, 0);
    EXPECT_EQ(run("train --features d.csv --model mlp --hidden 6 --param epochs=40 --seed 3 --split holdout:70/15/15 "
                  "--out m.model").code,
              0);
    EXPECT_EQ(run("train --features d.csv --target gmfcs --cluster-gmfcs --model rusboost --param rounds=8 "
                  "--split kfold:3 --out r.model").code,
              0);
    return text::read_file(p("d.csv")) + text::read_file(p("m.model")) + text::read_file(p("m.cv.kv")) +
           text::read_file(p("r.model"));
  };
  const std::string first = pipeline();
  const std::string second = pipeline();
  EXPECT_EQ(first, second);
  const Outcome e = run("evaluate --model r.model --features d.csv --out e");
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_EQ(kv("e.kv", "task"), "classification");
}
