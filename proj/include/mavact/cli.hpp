#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "mavact/config.hpp"

namespace mavact::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

const std::vector<std::string>& commands();

/// Runs one subcommand with outputs under `out_dir`. Errors propagate as exceptions.
void dispatch(const std::string& command, const RunConfig& cfg, const std::string& out_dir, std::ostream& log);

/// Full command line entry point: parses arguments, applies the
/// MAVACT_OUT_DIR / MAVACT_DEVICE overrides, dispatches, and maps failures to
/// exit codes with a single "error: <kind>: <message>" line on `err`.
int run(int argc, const char* const* argv, std::ostream& log, std::ostream& err);

}  // namespace mavact::cli
