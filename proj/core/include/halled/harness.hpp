#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "halled/config.hpp"

namespace halled {

// Paths written by a run, all inside the configured output directory.
struct RunArtifacts {
  std::string output_dir;
  std::string manifest_path;
  std::string report_path;
  std::vector<std::string> csv_paths;
};

// Executes the configured experiment. Writes manifest.json first (so a
// crashed run still identifies itself), then the CSV sweeps and report.json,
// and finally rewrites the manifest with stage timings and the cache ledger.
// The report payload is deterministic: same config, same bytes. Progress
// lines go to `log`. Throws the module error types; callers map them to exit
// codes via exit_code_for.
RunArtifacts run_experiment(const ExperimentConfig& cfg, std::ostream& log);

// Exit taxonomy shared by the CLI and the tests: 2 config, 3 no clean
// multiplet, 4 tolerance, 5 resource, 1 anything else.
int exit_code_for(const std::exception& e);

// Short label used in error reports: config, no_multiplet, tolerance,
// resource or internal.
std::string error_kind(const std::exception& e);

}  // namespace halled
