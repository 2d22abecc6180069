#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cbsa/cbsa.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

bool is_config_error(cbsa::ErrorCode code) {
  return code == cbsa::ErrorCode::InvalidConfig || code == cbsa::ErrorCode::InvalidParams;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Similarity-based attacks on cancellable biometric templates"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 0;
  std::string out_dir;
  std::size_t subject = 0;
  std::optional<std::size_t> param;
  bool quiet = false;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config_path, "experiment config file (INI)");
    if (needs_config) opt->required();
    sub->add_option("--seed", seed, "override the master seed");
    sub->add_option("--out", out_dir, "output directory");
  };

  auto* gen = app.add_subcommand("gen-data", "write the configured dataset to --out");
  add_common(gen, true);
  gen->get_option("--out")->required();

  auto* run = app.add_subcommand("run", "run the attack sweep and write result rows");
  add_common(run, true);
  run->add_option("--workers", workers, "parallel subject attacks");
  run->add_flag("--quiet", quiet, "no per-subject progress lines");

  auto* report = app.add_subcommand("report", "merge result rows under --out into report.csv/report.txt");
  report->add_option("--out", out_dir, "directory holding one or more runs")->required();

  auto* attack = app.add_subcommand("attack", "attack one subject and write its convergence CSV");
  add_common(attack, true);
  attack->add_option("--subject", subject, "subject id")->required();
  attack->add_option("--param", param, "sweep value (defaults to the first one)");

  CLI11_PARSE(app, argc, argv);

  cbsa::ExperimentConfig cfg;
  try {
    if (!config_path.empty()) {
      cfg = cbsa::load_experiment_config(config_path, seed);
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      if (workers > 0) cfg.workers = workers;
    }
  } catch (const cbsa::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (gen->parsed()) {
      cbsa::cmd_gen_data(cfg, out_dir);
      std::cout << "dataset written to " << out_dir << '\n';
    } else if (run->parsed()) {
      const auto rows = cbsa::cmd_run_experiment(cfg, quiet ? nullptr : &std::cerr);
      std::cout << cbsa::kResultHeader << '\n';
      for (const auto& r : rows) std::cout << cbsa::result_csv_line(r) << '\n';
    } else if (report->parsed()) {
      cbsa::cmd_report(out_dir);
      std::ifstream txt(std::filesystem::path(out_dir) / "report.txt");
      std::cout << txt.rdbuf();
    } else if (attack->parsed()) {
      const std::size_t p = param.value_or(cfg.sweep.front());
      const auto csv = cfg.output_dir / ("attack_subject_" + std::to_string(subject) + "_" + std::to_string(p) + ".csv");
      const auto res = cbsa::cmd_attack(cfg, subject, p, csv);
      std::cout << "best_fitness " << res.best_fitness << " after " << res.generations_run << " generations ("
                << cbsa::to_string(res.stop_reason) << ", " << res.wall_time_seconds << " s)\n"
                << "convergence log: " << csv.string() << '\n';
    }
  } catch (const cbsa::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_config_error(e.code()) ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
