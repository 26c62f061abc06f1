#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "orient/cli.hpp"
#include "orient/datapipe.hpp"
#include "orient/imageio.hpp"
#include "orient/netspec.hpp"

using namespace orient;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kFixtures = ORIENT_FIXTURE_DIR;
const fs::path kModel = fs::path(ORIENT_MODEL_DIR) / "desk.ornt";

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("orient_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  [[nodiscard]] std::string path(const std::string& name) const { return (dir_ / name).string(); }

  [[nodiscard]] std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
    return path(name);
  }

  [[nodiscard]] std::string copy_fixture(const std::string& name) const {
    fs::copy_file(kFixtures / name, dir_ / name);
    return path(name);
  }

  fs::path dir_;
};

std::vector<json> json_lines(const std::string& text) {
  std::vector<json> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) {
      lines.push_back(json::parse(line));
    }
  }
  return lines;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(CliConfig, ExplicitFlagWins) {
  const std::vector<std::string> args{"dataset", "synth", "--count", "5", "--out", "x.jsonl"};
  const auto merged = cli::merge_config(args, R"({"dataset": {"synth": {"count": 3, "seed": 9}}})",
                                        {"dataset", "synth"});
  const std::vector<std::string> expected{"dataset", "synth", "--seed", "9", "--count", "5", "--out", "x.jsonl"};
  EXPECT_EQ(merged, expected);
}

TEST(CliConfig, TopLevelKeysAndUnderscores) {
  const std::vector<std::string> args{"train", "--train", "t", "--val", "v", "--out", "o"};
  const auto merged =
      cli::merge_config(args, R"({"batch_size": 8, "no_augment": true, "widths": [4, 8], "eval": {"tag": "x"}})",
                        {"train"});
  const std::vector<std::string> expected{"train", "--batch-size", "8",   "--no-augment", "--widths", "4", "8",
                                          "--train", "t",           "--val", "v",          "--out",    "o"};
  EXPECT_EQ(merged, expected);
}

TEST(CliConfig, InvalidJsonIsUsageError) {
  EXPECT_THROW(cli::merge_config({"train"}, "{", {"train"}), UsageError);
  EXPECT_THROW(cli::merge_config({"train"}, "[1]", {"train"}), UsageError);
}

TEST_F(CliTest, ConfigFileSuppliesDefaults) {
  const std::string cfg = write("cfg.json", R"({"dataset": {"synth": {"count": 3, "seed": 4}}})");
  const Result a = run({"--config", cfg, "dataset", "synth", "--out", path("a.jsonl")});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(load_manifest(path("a.jsonl")).size(), 3U);
  const Result b = run({"--config", cfg, "dataset", "synth", "--count", "6", "--out", path("b.jsonl")});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(load_manifest(path("b.jsonl")).size(), 6U);
}

TEST_F(CliTest, UnknownSubcommandIsUsageError) {
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"dataset", "synth", "--out", path("x.jsonl")}).code, cli::kExitUsage);
  EXPECT_EQ(run({"eval", "--model", kModel.string(), "--manifest", "m", "--protocol", "bal5"}).code,
            cli::kExitUsage);
}

TEST_F(CliTest, MissingInputIsDataError) {
  const Result r = run({"predict", "--model", path("missing.ornt"), (kFixtures / "upright_scene.ppm").string()});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, DryRunWritesNothing) {
  const Result r = run({"--dry-run", "dataset", "synth", "--count", "4", "--out", path("m.jsonl")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("would write"), std::string::npos);
  EXPECT_TRUE(fs::is_empty(dir_));
}

TEST_F(CliTest, DatasetBuildExpandsAndSamples) {
  ASSERT_EQ(run({"dataset", "synth", "--count", "40", "--side", "32", "--out", path("up.jsonl")}).code, 0);
  const Result e = run({"--json", "dataset", "build", "--sources", path("up.jsonl"), "--mode", "expand", "--take",
                        "10", "--out", path("all.jsonl")});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_EQ(json::parse(e.out)["entries"], 40);
  const Result o = run({"dataset", "build", "--sources", path("up.jsonl"), "--mode", "orig3", "--count", "25",
                        "--out", path("orig.jsonl")});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(load_manifest(path("orig.jsonl")).class_counts(), protocol_counts(Protocol::orig3, 25));
  const Result big = run({"dataset", "build", "--sources", path("up.jsonl"), "--mode", "bal4", "--count", "400",
                          "--out", path("big.jsonl")});
  EXPECT_EQ(big.code, cli::kExitData);
}

TEST_F(CliTest, PredictUprightFixtureIsThetaZero) {
  const Result r = run({"predict", "--model", kModel.string(), (kFixtures / "upright_scene.ppm").string(),
                        (kFixtures / "turned_scene.ppm").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = json_lines(r.out);
  ASSERT_EQ(lines.size(), 2U);
  EXPECT_EQ(lines[0]["theta"], 0);
  EXPECT_EQ(lines[0]["degrees"], 0);
  EXPECT_EQ(lines[0]["probabilities"].size(), 4U);
  EXPECT_EQ(lines[1]["theta"], 1);
}

TEST_F(CliTest, PredictContinuesPastBadFiles) {
  const std::string junk = write("junk.ppm", "not an image");
  const Result r = run({"predict", "--model", kModel.string(), junk, (kFixtures / "upright_scene.ppm").string()});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_EQ(json_lines(r.out).size(), 1U);
  EXPECT_NE(r.err.find("junk.ppm"), std::string::npos);
}

TEST_F(CliTest, CorrectedImageClassifiesUpright) {
  const std::string turned = copy_fixture("turned_scene.ppm");
  const Result c = run({"correct", "--model", kModel.string(), "--out-dir", path("fixed"), turned});
  ASSERT_EQ(c.code, 0) << c.err;
  const std::string fixed = path("fixed/turned_scene.ppm");
  EXPECT_EQ(decode(fixed).pixels, decode(kFixtures / "upright_scene.ppm").pixels);
  const Result p = run({"predict", "--model", kModel.string(), fixed});
  EXPECT_EQ(json_lines(p.out).at(0)["theta"], 0);
}

TEST_F(CliTest, CorrectInPlace) {
  const std::string turned = copy_fixture("turned_scene.ppm");
  const Result c = run({"--json", "correct", "--model", kModel.string(), "--in-place", turned});
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_EQ(json_lines(c.out).at(0)["theta"], 1);
  EXPECT_EQ(decode(turned).pixels, decode(kFixtures / "upright_scene.ppm").pixels);
  EXPECT_EQ(fs::directory_iterator(dir_)->path().filename(), "turned_scene.ppm");
}

TEST_F(CliTest, CorrectDryRunLeavesFilesAlone) {
  const std::string turned = copy_fixture("turned_scene.ppm");
  const std::string before = read_bytes(turned);
  const Result c = run({"--dry-run", "correct", "--model", kModel.string(), turned});
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_NE(c.out.find("theta 1"), std::string::npos);
  EXPECT_EQ(read_bytes(turned), before);
  EXPECT_EQ(std::distance(fs::directory_iterator(dir_), fs::directory_iterator()), 1);
}

TEST_F(CliTest, CorrectNeedsOneDestination) {
  const std::string turned = copy_fixture("turned_scene.ppm");
  EXPECT_EQ(run({"correct", "--model", kModel.string(), turned}).code, cli::kExitUsage);
}

TEST_F(CliTest, CorrectExifJpegFixture) {
  const std::string jpg = copy_fixture("exif6_scene.jpg");
  const Result c = run({"--json", "correct", "--model", kModel.string(), "--out-dir", path("fixed"), jpg});
  ASSERT_EQ(c.code, 0) << c.err;
  const auto line = json_lines(c.out).at(0);
  EXPECT_EQ(line["theta"], 3);
  EXPECT_EQ(line["recompressed"], true);
  const ImageFile fixed = decode(path("fixed/exif6_scene.jpg"));
  EXPECT_EQ(fixed.exif_orientation, 1);
}

TEST_F(CliTest, EvalWritesReport) {
  ASSERT_EQ(run({"dataset", "synth", "--count", "40", "--seed", "77", "--out", path("up.jsonl")}).code, 0);
  ASSERT_EQ(run({"dataset", "build", "--sources", path("up.jsonl"), "--mode", "bal4", "--out", path("t.jsonl")})
                .code,
            0);
  const Result r = run({"--json", "eval", "--model", kModel.string(), "--manifest", path("t.jsonl"), "--protocol",
                        "bal4", "--report", path("r.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const json report = json::parse(r.out);
  EXPECT_EQ(report["n_samples"], 40);
  EXPECT_GE(report["accuracy"].get<double>(), 0.9);
  EXPECT_TRUE(fs::exists(path("r.json")));
}

TEST_F(CliTest, CompareBaselineTable) {
  ASSERT_EQ(run({"dataset", "synth", "--count", "100", "--side", "32", "--out", path("up.jsonl")}).code, 0);
  const Result r = run({"compare", "--baseline", "always0", "--sources", path("up.jsonl"), "--protocols", "orig3",
                        "bal4", "--csv", path("t.csv"), "--tag", "synthetic"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("72.00"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("25.00"), std::string::npos) << r.out;
  EXPECT_EQ(read_bytes(path("t.csv")), "protocol,synthetic\norig3,72.00\nbal4,25.00\n");
}

TEST_F(CliTest, ExplainWritesOverlayAndCsv) {
  const Result r = run({"--json", "explain", "--model", kModel.string(), (kFixtures / "upright_scene.ppm").string(),
                        "--out", path("o.png"), "--csv", path("m.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["target"], 0);
  EXPECT_EQ(decode(path("o.png")).pixels.shape(), (Shape{3, 64, 64}));
  EXPECT_TRUE(fs::exists(path("m.csv")));
  EXPECT_EQ(run({"explain", "--model", kModel.string(), (kFixtures / "upright_scene.ppm").string(), "--alpha", "2"})
                .code,
            cli::kExitUsage);
}

TEST_F(CliTest, TrainSmallRunWritesCheckpointAndHistory) {
  ASSERT_EQ(run({"dataset", "synth", "--count", "12", "--side", "32", "--out", path("up.jsonl")}).code, 0);
  ASSERT_EQ(run({"dataset", "build", "--sources", path("up.jsonl"), "--mode", "expand", "--out", path("all.jsonl")})
                .code,
            0);
  const Result r = run({"train", "--train", path("all.jsonl"), "--val", path("all.jsonl"), "--side", "32",
                        "--epochs", "2", "--out", path("m.ornt"), "--history", path("h.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_checkpoint(path("m.ornt")).spec.input_side(), 32U);
  const std::string history = read_bytes(path("h.csv"));
  EXPECT_EQ(history.rfind("epoch,lr,train_loss,val_loss,val_acc\n", 0), 0U);
  EXPECT_EQ(std::count(history.begin(), history.end(), '\n'), 3);
}

TEST_F(CliTest, TrainDivergenceIsNumericExit) {
  ASSERT_EQ(run({"dataset", "synth", "--count", "8", "--side", "32", "--out", path("up.jsonl")}).code, 0);
  ASSERT_EQ(run({"dataset", "build", "--sources", path("up.jsonl"), "--mode", "expand", "--out", path("all.jsonl")})
                .code,
            0);
  const Result r = run({"train", "--train", path("all.jsonl"), "--val", path("all.jsonl"), "--side", "32", "--lr",
                        "1e30", "--epochs", "2", "--out", path("m.ornt")});
  EXPECT_EQ(r.code, cli::kExitNumeric) << r.err;
}

TEST(CliBinary, ExitCodesFromProcess) {
  const std::string bin = ORIENT_CLI_PATH;
  EXPECT_EQ(std::system((bin + " --help > /dev/null").c_str()), 0);
  const int status = std::system((bin + " no-such-command > /dev/null 2>&1").c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), cli::kExitUsage);
}
