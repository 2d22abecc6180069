#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cbsa/experiment.hpp"

using namespace cbsa;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream is(text);
  return parse_experiment_config(is);
}

ErrorCode parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::NoResults;  // sentinel: nothing thrown
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

const char* kTiny =
    "[experiment]\nscheme = biohashing\nseed = 5\nsweep = 8, 16\n"
    "[dataset]\nsubjects = 3\nsamples_per_subject = 3\ndim = 8\n"
    "[ga]\npopulation_size = 10\nmax_generations = 5\n";

}  // namespace

TEST(Config, Defaults) {
  const auto c = parse("[experiment]\nscheme = biohashing\nsweep = 64, 512\n");
  EXPECT_EQ(c.sweep, (std::vector<std::size_t>{64, 512}));
  EXPECT_EQ(c.attack_mode.templates, 1u);
  EXPECT_EQ(c.compromised_sample, 0u);
  EXPECT_EQ(c.effective_probe(), ProbePolicy::Compromised);
  EXPECT_EQ(c.dataset_kind, DatasetKind::SyntheticFace);
  EXPECT_NE(c.sys1_seed, c.sys2_seed);
  EXPECT_EQ(c.face.dim, 128u);
}

TEST(Config, BloomDefaults) {
  const auto c = parse("[experiment]\nscheme = bloomfilter\nsweep = 8\nattack_mode = n_templates\n");
  EXPECT_EQ(c.attack_mode.templates, 3u);
  EXPECT_EQ(c.effective_probe(), ProbePolicy::HeldOut);
  EXPECT_EQ(c.dataset_kind, DatasetKind::SyntheticIris);
  EXPECT_EQ(to_string(c.attack_mode), "3-templates");
}

TEST(Config, SeedOverrideChangesDerivedSeeds) {
  std::istringstream a("[experiment]\nscheme = biohashing\nsweep = 8\n");
  std::istringstream b("[experiment]\nscheme = biohashing\nsweep = 8\n");
  const auto ca = parse_experiment_config(a);
  const auto cb = parse_experiment_config(b, 99);
  EXPECT_EQ(cb.seed, 99u);
  EXPECT_NE(ca.ga.seed, cb.ga.seed);
  EXPECT_NE(ca.face.seed, cb.face.seed);
}

TEST(Config, Errors) {
  EXPECT_EQ(parse_error("[experiment]\nscheme = biohashing\nsweep =\n"), ErrorCode::InvalidConfig);
  EXPECT_EQ(parse_error("[experiment]\nscheme = biohashing\n"), ErrorCode::InvalidConfig);
  EXPECT_EQ(parse_error("[experiment]\nscheme = biohashing\nsweep = 8\nbogus = 1\n"), ErrorCode::InvalidConfig);
  EXPECT_EQ(parse_error("[experiment]\nscheme = biohashing\nsweep = 8\n[nope]\nx = 1\n"), ErrorCode::InvalidConfig);
  EXPECT_EQ(parse_error("[experiment]\nscheme = rot13\nsweep = 8\n"), ErrorCode::InvalidConfig);
  EXPECT_EQ(parse_error("[experiment]\nscheme = biohashing\nsweep = 8\n[ga]\npopulation_size = abc\n"),
            ErrorCode::InvalidConfig);
  EXPECT_EQ(parse_error("[experiment]\nscheme = bloomfilter\nsweep = 17\n"), ErrorCode::InvalidConfig);
  EXPECT_EQ(parse_error("[experiment]\nscheme = biohashing\nsweep = 8\n[dataset]\nkind = synthetic_iris\n"),
            ErrorCode::InvalidConfig);
  EXPECT_EQ(parse_error("[experiment]\nscheme = bloomfilter\nsweep = 8\nattack_mode = n_templates\nn_templates = 4\n"),
            ErrorCode::InvalidConfig);
}

TEST(Run, WritesResultsAndIsDeterministic) {
  const auto base = fs::temp_directory_path() / "cbsa_test_run";
  fs::remove_all(base);
  auto c = parse(kTiny);
  c.output_dir = base / "a";
  const auto rows = cmd_run_experiment(c);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].param, 8u);
  EXPECT_TRUE(fs::exists(c.output_dir / "results.csv"));
  EXPECT_TRUE(fs::exists(c.output_dir / "timing.csv"));
  EXPECT_TRUE(fs::exists(c.output_dir / "convergence" / "8" / "subject_0.csv"));
  const auto first = slurp(c.output_dir / "results.csv");
  EXPECT_EQ(first.substr(0, first.find('\n')), kResultHeader);

  c.output_dir = base / "b";
  cmd_run_experiment(c);
  EXPECT_EQ(slurp(c.output_dir / "results.csv"), first);

  const auto report = cmd_report(base);
  EXPECT_EQ(report.size(), 4u);
  EXPECT_TRUE(fs::exists(base / "report.txt"));
}

TEST(Run, WorkersDoNotChangeResults) {
  const auto base = fs::temp_directory_path() / "cbsa_test_workers";
  fs::remove_all(base);
  auto c = parse(kTiny);
  c.output_dir = base / "one";
  cmd_run_experiment(c);
  c.output_dir = base / "three";
  c.workers = 3;
  cmd_run_experiment(c);
  EXPECT_EQ(slurp(base / "one" / "results.csv"), slurp(base / "three" / "results.csv"));
}

TEST(Report, SortsRows) {
  const auto dir = fs::temp_directory_path() / "cbsa_test_report";
  fs::remove_all(dir);
  fs::create_directories(dir / "x" / "rows");
  const std::string h = std::string(kResultHeader) + "\n";
  const std::string blank = ",,,,,,,,,";
  std::ofstream(dir / "x" / "rows" / "a.csv") << h << "biohashing,512,1-template," << blank << "\n";
  std::ofstream(dir / "x" / "rows" / "b.csv") << h << "biohashing,64,1-template," << blank << "\n";
  std::ofstream(dir / "x" / "rows" / "c.csv") << h << "bloomfilter,8,1-template," << blank << "\n";
  const auto rows = cmd_report(dir);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].get("param"), "64");
  EXPECT_EQ(rows[1].get("param"), "512");
  EXPECT_EQ(rows[2].get("scheme"), "bloomfilter");
}

TEST(Report, SingleRowAndEmpty) {
  const auto dir = fs::temp_directory_path() / "cbsa_test_report1";
  fs::remove_all(dir);
  fs::create_directories(dir / "rows");
  EXPECT_THROW(cmd_report(dir), Error);
  std::ofstream(dir / "rows" / "a.csv") << kResultHeader << "\nbiohashing,64,1-template,,,,,,,,,,\n";
  EXPECT_EQ(cmd_report(dir).size(), 1u);
}

#ifdef CBSA_CLI_PATH
namespace {
int run_cli(const std::string& args) {
  const int status = std::system((std::string(CBSA_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
}  // namespace

TEST(Cli, ExitCodes) {
  const auto dir = fs::temp_directory_path() / "cbsa_test_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "bad.ini") << "[experiment]\nscheme = biohashing\nsweep =\n";
  EXPECT_EQ(run_cli("run --config " + (dir / "bad.ini").string()), 2);
  EXPECT_EQ(run_cli("run --config " + (dir / "missing.ini").string()), 2);
  EXPECT_EQ(run_cli("report --out " + (dir / "nothing").string()), 3);

  std::ofstream(dir / "ok.ini") << kTiny;
  EXPECT_EQ(run_cli("gen-data --config " + (dir / "ok.ini").string() + " --out " + (dir / "data").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "data" / "dataset.json"));
  EXPECT_EQ(run_cli("run --quiet --config " + (dir / "ok.ini").string() + " --out " + (dir / "run").string()), 0);
  EXPECT_EQ(run_cli("report --out " + (dir / "run").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "run" / "report.csv"));
  EXPECT_EQ(run_cli("attack --config " + (dir / "ok.ini").string() + " --subject 1 --out " + (dir / "att").string()),
            0);
}
#endif
