#pragma once

#include <string>

#include "stobs/config.hpp"
#include "stobs/ergodic.hpp"
#include "stobs/presets.hpp"

namespace stobs {

/// A config resolved against its preset: the concrete problem, step config,
/// run parameters and the canonical echo of every resolved key.
struct ResolvedRun {
  ProblemSpec problem;
  StepConfig cfg;
  ExperimentConfig echo;
  std::uint64_t master_seed = 0;
  int threads = 0;
  std::string output_dir = "out";
};

ResolvedRun resolve(const ExperimentConfig& cfg);

struct RunResult {
  int exit_code = 0;
  bool pass = true;
  std::string csv_path;
  std::string json_path;
  std::string summary;
};

/// Executes one CLI command: simulate, coupling, ergodic, equilibrium,
/// tightness, ls-check, rate-study, classify, op-check. Writes
/// <command>_<stamp>.csv/.json under output_dir; the CSV body and JSON
/// content depend only on (config, seed), never on thread count or clock.
RunResult run_command(const std::string& command, const ExperimentConfig& cfg);

}  // namespace stobs
