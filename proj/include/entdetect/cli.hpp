#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "entdetect/experiments.hpp"

namespace entdetect::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kExhausted = 3,
  kFileError = 4,
  kHeadMismatch = 5,
};

/// Reads a JSON run config, resolving `include` entries (paths relative to
/// the including file; the including document overrides what it includes).
/// Unknown keys and malformed values throw ConfigError.
std::string load_config_text(const std::string& path);

/// Experiment settings from a run config: caption defaults for `id` (or the
/// config's `experiment.id`), overridden by the config, then scaled down
/// for desk mode.
experiments::ExperimentSpec experiment_spec_from_config(const std::string& path,
                                                        std::optional<experiments::ExperimentId> id,
                                                        experiments::Scale scale);

/// Runs `entdetect <args...>` (args excludes the program name). Results go to
/// `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace entdetect::cli
