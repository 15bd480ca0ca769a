#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "helpers.hpp"
#include "json.hpp"
#include "statecurve/formats.hpp"
#include "statecurve/synth.hpp"

namespace statecurve {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("statecurve_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(std::vector<std::string> args, const std::string& input = "") {
    std::istringstream in(input);
    out_.str("");
    err_.str("");
    return cli::run(args, in, out_, err_);
  }

  void write_series(const std::string& name, const PromptSet& prompts, const SimilaritySeries& series) {
    std::ostringstream ss;
    write_similarity_file(ss, {prompts, series, std::nullopt, {}});
    write_file(path(name), ss.str());
  }

  std::string synth(const std::string& prefix, std::uint64_t seed = 1) {
    EXPECT_EQ(run({"synth", "--frames", "300", "--informative", "4", "--noise", "6", "--seed", std::to_string(seed),
                   "--out", path(prefix)}),
              cli::kExitOk)
        << err_.str();
    return path(prefix + ".sim.csv");
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(CliTest, SynthWritesThreeFiles) {
  synth("a");
  EXPECT_TRUE(fs::exists(path("a.sim.csv")));
  EXPECT_NO_THROW(validate_prompt_set(read_file(path("a.prompts.json"))));
  EXPECT_GT(parse_annotation(read_file(path("a.annotation.json"))), 0.0);
}

TEST_F(CliTest, ModeAllAndOne) {
  const auto sim = synth("a");
  ASSERT_EQ(run({"optimize", "--similarity", sim, "--mode", "all", "--out", path("all.json")}), 0) << err_.str();
  const auto all = weights_artifact_from_json(read_file(path("all.json")));
  for (double w : all.weights.values()) EXPECT_EQ(w, 1.0);
  EXPECT_EQ(all.mode, OptimizationMode::all);

  ASSERT_EQ(run({"optimize", "--similarity", sim, "--mode", "one", "--out", path("one.json")}), 0) << err_.str();
  const auto one = weights_artifact_from_json(read_file(path("one.json")));
  EXPECT_EQ(std::count(one.weights.values().begin(), one.weights.values().end(), 1.0), 1);
  EXPECT_EQ(std::count(one.weights.values().begin(), one.weights.values().end(), 0.0), 9);
}

TEST_F(CliTest, OptBeatsAll) {
  const auto sim = synth("a", 2);
  ASSERT_EQ(run({"optimize", "--similarity", sim, "--prompts", path("a.prompts.json"), "--population", "40",
                 "--generations", "20", "--out", path("opt.json"), "--trace", path("opt.csv")}),
            0)
      << err_.str();
  const double e_opt = json::parse(out_.str())["e_value"].get<double>();
  ASSERT_EQ(run({"optimize", "--similarity", sim, "--mode", "all", "--out", path("all.json")}), 0);
  const double e_all = json::parse(out_.str())["e_value"].get<double>();
  EXPECT_GT(e_opt, e_all);

  std::ifstream trace(path("opt.csv"));
  std::string line;
  std::getline(trace, line);
  std::getline(trace, line);
  EXPECT_EQ(line, "time,raw,average,sigmoid,detected");
}

TEST_F(CliTest, DetectMatchesOfflineScan) {
  const auto sim = synth("a");
  ASSERT_EQ(run({"optimize", "--similarity", sim, "--mode", "all", "--out", path("w.json")}), 0);
  ASSERT_EQ(run({"detect", "--weights", path("w.json"), "--similarity", sim}), 0) << err_.str();
  const auto report = json::parse(out_.str());

  const auto artifact = weights_artifact_from_json(read_file(path("w.json")));
  std::ifstream in(sim);
  const auto file = read_similarity_file(in);
  const auto sig = build_aggregate(file.series, file.prompts, artifact.weights, artifact.normalization->window_samples,
                                   artifact.normalization);
  const auto idx = first_crossing(sig.normalized, 0.8);
  ASSERT_TRUE(idx);
  EXPECT_NEAR(report["t_detected"].get<double>(), file.series.time_at(*idx), 0.1 + 1e-9);
}

TEST_F(CliTest, StreamEmitsEventLine) {
  const auto sim = synth("a");
  ASSERT_EQ(run({"optimize", "--similarity", sim, "--mode", "all", "--out", path("w.json")}), 0);
  std::ifstream in(sim);
  const auto file = read_similarity_file(in);
  std::string rows = "# prompt_hash: " + file.prompts.hash_hex() + "\n";
  for (std::size_t t = 0; t < file.series.frames(); ++t) {
    for (double v : file.series.row(t)) rows += format_double(v) + " ";
    rows += "\n";
  }
  ASSERT_EQ(run({"detect", "--weights", path("w.json"), "--stream", "--report", path("r.json")}, rows), 0)
      << err_.str();
  const auto event = json::parse(out_.str());
  EXPECT_EQ(event["event"], "change_detected");
  const auto report = json::parse(read_file(path("r.json")));
  EXPECT_EQ(report["t_detected"], event["t_detected"]);

  ASSERT_EQ(run({"detect", "--weights", path("w.json"), "--similarity", sim}), 0);
  EXPECT_EQ(json::parse(out_.str())["t_detected"], event["t_detected"]);
}

TEST_F(CliTest, HashMismatchRefused) {
  const auto sim = synth("a");
  ASSERT_EQ(run({"optimize", "--similarity", sim, "--mode", "all", "--out", path("w.json")}), 0);
  const auto other = synthesize(SynthSpec{.n_informative = 2, .n_noise = 8});
  write_series("b.sim.csv", testing::positive_prompts(10), other.series);
  EXPECT_EQ(run({"detect", "--weights", path("w.json"), "--similarity", path("b.sim.csv")}), cli::kExitValidation);
  EXPECT_NE(err_.str().find("hash"), std::string::npos);
  EXPECT_EQ(run({"detect", "--weights", path("w.json"), "--stream", "--prompt-hash", "0123456789abcdef"}, "0.1\n"),
            cli::kExitValidation);
}

TEST_F(CliTest, UnreachableThreshold) {
  const auto sim = synth("a");
  ASSERT_EQ(run({"optimize", "--similarity", sim, "--mode", "all", "--out", path("w.json")}), 0);
  EXPECT_EQ(run({"detect", "--weights", path("w.json"), "--similarity", sim, "--threshold", "1.5"}),
            cli::kExitNoSignal);
  EXPECT_EQ(json::parse(out_.str())["status"], "not detected");
}

TEST_F(CliTest, EvaluateShiftedChange) {
  const auto sim = synth("a");
  ASSERT_EQ(run({"optimize", "--similarity", sim, "--mode", "all", "--out", path("w.json")}), 0);
  ASSERT_EQ(run({"detect", "--weights", path("w.json"), "--similarity", sim}), 0);
  const double t0 = json::parse(out_.str())["t_detected"].get<double>();

  std::ifstream in(sim);
  const auto file = read_similarity_file(in);
  const std::size_t shift = 20;
  std::vector<std::vector<double>> rows;
  for (std::size_t t = 0; t < file.series.frames(); ++t) {
    const auto r = file.series.row(t < shift ? 0 : t - shift);
    rows.emplace_back(r.begin(), r.end());
  }
  write_series("shift.sim.csv", file.prompts, SimilaritySeries::create(rows, 10.0));
  write_file(path("ann.json"), annotation_to_json(t0));

  ASSERT_EQ(run({"evaluate", "--weights", path("w.json"), "--similarity", sim, "--annotation", path("ann.json")}), 0);
  EXPECT_EQ(json::parse(out_.str())["t_diff"].get<double>(), 0.0);
  ASSERT_EQ(run({"evaluate", "--weights", path("w.json"), "--similarity", path("shift.sim.csv"), "--annotation",
                 path("ann.json")}),
            0)
      << err_.str();
  const auto report = json::parse(out_.str());
  EXPECT_NEAR(report["t_diff"].get<double>(), 2.0, 1e-9);
  EXPECT_TRUE(report["e_reference_only"].get<bool>());
}

TEST_F(CliTest, EvaluateBeyondFrozenRange) {
  std::mt19937_64 rng(1);
  const auto prompts = testing::positive_prompts(1);
  write_series("opt.sim.csv", prompts,
               testing::series_from_columns({testing::sigmoid_channel(300, 0.05, 150, 0.1, 0.3, 0.0, rng)}));
  write_series("eval.sim.csv", prompts,
               testing::series_from_columns({testing::sigmoid_channel(300, 0.05, 150, 0.1, 0.5, 0.0, rng)}));
  ASSERT_EQ(run({"optimize", "--similarity", path("opt.sim.csv"), "--mode", "all", "--out", path("w.json")}), 0)
      << err_.str();
  ASSERT_EQ(run({"evaluate", "--weights", path("w.json"), "--similarity", path("eval.sim.csv"), "--trace",
                 path("t.csv")}),
            0)
      << err_.str();
  const auto report = json::parse(out_.str());
  EXPECT_GT(report["normalized_max"].get<double>(), 1.0);
  EXPECT_TRUE(report["t_diff"].is_null());

  std::ifstream trace(path("t.csv"));
  std::string line;
  double max_avg = 0.0;
  std::getline(trace, line);
  std::getline(trace, line);
  while (std::getline(trace, line)) {
    std::stringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    max_avg = std::max(max_avg, std::stod(cells[2]));
  }
  EXPECT_GT(max_avg, 1.0);
}

TEST_F(CliTest, FlatInputIsNoSignal) {
  write_series("flat.sim.csv", testing::positive_prompts(2),
               testing::series_from_columns({std::vector<double>(50, 0.3), std::vector<double>(50, 0.2)}));
  EXPECT_EQ(run({"optimize", "--similarity", path("flat.sim.csv"), "--mode", "all", "--out", path("w.json")}),
            cli::kExitNoSignal);
  EXPECT_FALSE(fs::exists(path("w.json")));
}

TEST_F(CliTest, BadArguments) {
  EXPECT_EQ(run({}), cli::kExitValidation);
  EXPECT_EQ(run({"optimize"}), cli::kExitValidation);
  EXPECT_EQ(run({"optimize", "--similarity", path("missing.csv")}), cli::kExitValidation);
  EXPECT_EQ(run({"detect", "--weights", path("w.json")}), cli::kExitValidation);
  EXPECT_EQ(run({"--help"}), cli::kExitOk);
}

TEST_F(CliTest, ManifestReproducesArtifact) {
  const auto sim = synth("a");
  const std::vector<std::string> args{"optimize", "--similarity", sim, "--population", "12", "--generations", "4",
                                      "--seed", "3"};
  auto a = args, b = args;
  a.insert(a.end(), {"--out", path("a.json")});
  b.insert(b.end(), {"--out", path("b.json")});
  ASSERT_EQ(run(a), 0);
  ASSERT_EQ(run(b), 0);
  auto ja = json::parse(read_file(path("a.json"))), jb = json::parse(read_file(path("b.json")));
  EXPECT_EQ(ja["weights"], jb["weights"]);
  EXPECT_EQ(ja["history"], jb["history"]);
  EXPECT_EQ(ja["manifest"]["rng_seed"], 3);
}

}  // namespace
}  // namespace statecurve
