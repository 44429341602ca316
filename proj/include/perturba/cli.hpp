#pragma once

#include <string>
#include <vector>

#include "perturba/verify.hpp"

namespace perturba {

// Exit codes: 0 success, 2 configuration/schema, 3 assumption failure,
// 4 numerical failure.
enum ExitCode { kOk = 0, kConfigError = 2, kAssumptionError = 3, kNumericError = 4 };

struct RunConfig {
  std::string command;       // validate | expand | solve-ref | verify | presets
  std::string problem;       // preset name or path to a problem JSON
  int order = 0;
  std::vector<double> epsilons;  // override; empty -> problem file values
  std::size_t n_x = 512, n_t = 512;
  std::string scheme = "implicit_euler";
  int grid_density = 64;
  std::string out_dir = ".";
  std::vector<std::string> formats = {"csv", "json"};  // verify outputs
};

// Executes one command; writes artifacts under config.out_dir; returns an
// exit code and never throws.
int run(const RunConfig& config);

// argv-style entry used by the binary: parses flags into a RunConfig.
int run_cli(int argc, const char* const* argv);

}  // namespace perturba
