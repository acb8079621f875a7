#pragma once

// Command-line front end. Subcommands: validate, solve, run, sweep, ingest,
// report. Exit codes: 0 success, 1 usage error, 2 domain error.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hetbai/simulator.hpp"

namespace hetbai::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitDomain = 2;

/// args[0] is the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Sweep configuration JSON:
///   {"instance": "path.json" | {instance object},   (required)
///    "deltas": [float, ...],                         (required, each in (0,1))
///    "policy": "het-ts" | "uniform",                 (default het-ts)
///    "lambda": float > 0,                            (default 0.01)
///    "repetitions": int >= 1,                        (default 4)
///    "base_seed": int >= 0,                          (default 0)
///    "workers": int >= 1,                            (default 1)
///    "step_cap": int >= 1}                           (default 1e8)
/// A relative instance path resolves against the config file's directory.
/// Every schema violation is collected and reported in one error.
SweepConfig load_sweep_config(const std::filesystem::path& path);
SweepConfig parse_sweep_config(const std::string& text,
                               const std::filesystem::path& base_dir);

}  // namespace hetbai::cli
