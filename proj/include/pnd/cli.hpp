#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "pnd/run_spec.hpp"

namespace pnd {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitNumeric = 3 };

// Command-line options that tune a histogram analysis; unset fields keep the
// spec's values.
struct AnalyzeOverrides {
  std::optional<int> n_max;
  std::optional<WidthMode> mode;
  std::optional<int> n_states;
  std::optional<TopBin> top;
  std::optional<double> initial_gain_mv;
};

// The commands throw on bad input (ConfigError, std::invalid_argument) and
// return kExitNumeric when a fit does not converge; run_cli maps exceptions
// to exit codes. Progress and summaries go to `log`.
int cmd_simulate(const RunSpec& spec, const std::filesystem::path& out_dir, std::ostream& log);
int cmd_analyze(const std::filesystem::path& histogram_path, const RunSpec& spec, const AnalyzeOverrides& overrides,
                const std::filesystem::path& out_dir, std::ostream& log);
int cmd_sweep(const RunSpec& spec, const std::filesystem::path& out_dir, int jobs, std::ostream& log);

RunSpec load_run_spec(const std::filesystem::path& path);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pnd
