#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "stobs/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"stobs - penalized stochastic obstacle problem simulator"};
  app.require_subcommand(1);

  const std::vector<std::string> commands = {"simulate",  "coupling",  "ergodic",
                                             "equilibrium", "tightness", "ls-check",
                                             "rate-study", "classify",  "op-check"};

  std::string config_path, preset_name, out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  bool seed_given = false;

  for (const auto& name : commands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config file");
    sub->add_option("--preset", preset_name, "scenario preset name");
    sub->add_option("--seed", seed, "master seed (overrides config)")
        ->each([&](const std::string&) { seed_given = true; });
    sub->add_option("--threads", threads, "worker pool size (0 = hardware)");
    sub->add_option("--out", out_dir, "output directory");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    stobs::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = stobs::ExperimentConfig::parse_file(config_path);
    if (!preset_name.empty()) cfg.set_string("preset", preset_name);
    if (seed_given) cfg.set_int("master_seed", static_cast<std::int64_t>(seed));
    if (threads != 0) cfg.set_int("threads", threads);
    if (!out_dir.empty()) cfg.set_string("output_dir", out_dir);
    if (!cfg.has("preset") && !cfg.has("problem.p")) {
      std::cerr << "[ERROR] " << command << ": provide --preset or a config file\n";
      return 1;
    }

    const stobs::RunResult res = stobs::run_command(command, cfg);
    std::cout << res.summary << '\n';
    if (!res.csv_path.empty()) {
      std::cout << "  csv:  " << res.csv_path << "\n  json: " << res.json_path << '\n';
    }
    return res.exit_code;
  } catch (const stobs::ValidationError& e) {
    std::cerr << "[ERROR] " << command << ": " << e.what() << '\n';
    return 1;
  } catch (const stobs::SolverError& e) {
    std::cerr << "[ERROR] " << command << ": " << e.what() << '\n';
    return 2;
  }
}
