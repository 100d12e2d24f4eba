// sim: headless synthetic-designer runs.
//   sim run --scenario max:symmetry --episodes 10 --seed 42 --out runs/a [--config engine.json]
//   sim replay --log runs/a/session.json
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "qdpref/digest.hpp"
#include "qdpref/error.hpp"
#include "qdpref/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic designer harness for preference-guided MAP-Elites sessions"};
  app.require_subcommand(1);

  qdpref::ExperimentConfig cfg;
  std::string config_path;
  auto* run = app.add_subcommand("run", "Run a scripted session and write report.csv, digest.txt and session.json");
  run->add_option("--scenario", cfg.scenario, "max:<dim> | patterns | random | drift:<dimA>:<dimB>:<episode>")->required();
  run->add_option("--episodes", cfg.episodes, "Applied suggestions (one training episode each)")->required();
  run->add_option("--seed", cfg.seed, "Session seed")->required();
  run->add_option("--out", cfg.out_dir, "Output directory")->required();
  run->add_option("--config", config_path, "Engine/session config JSON");
  run->add_option("--burst", cfg.burst_generations, "Generations between applications")->capture_default_str();
  run->add_flag("--wall-time", cfg.record_wall_time, "Record training wall time (makes report.csv non-reproducible)");

  std::string log_path;
  auto* replay = app.add_subcommand("replay", "Replay a saved session log and verify its digests");
  replay->add_option("--log", log_path, "session.json written by `sim run` or the server")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      if (!config_path.empty()) cfg.session = qdpref::load_config_file(config_path);
      const auto report = qdpref::run_experiment(cfg);
      std::cout << qdpref::report_csv(report.rows);
      std::cout << "digest " << qdpref::hex64(report.stream_digest) << "\n";
    } else if (*replay) {
      const auto digest = qdpref::replay_log(log_path);
      std::cout << "replay ok, digest " << qdpref::hex64(digest) << "\n";
    }
  } catch (const qdpref::Error& e) {
    std::cerr << "error [" << qdpref::to_string(e.code()) << "]: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
