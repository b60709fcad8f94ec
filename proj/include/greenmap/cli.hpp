#pragma once

#include "greenmap/io.hpp"

#include <iosfwd>

namespace greenmap {

enum ExitCode : int {
    exit_ok = 0,
    exit_parse = 1,       // malformed config, domain or field file
    exit_solver = 2,      // pole outside, solver or trace failure
    exit_map_failures = 3, // more than 1% of map points failed
    exit_check_failed = 4,
};

int cmd_green(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_trace(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_map(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_check(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Entry point of the command line tool:
///   greenmap {green|trace|map|check} --config <path> [--out <dir>] [--jobs <n>] [--seed <u64>]
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace greenmap
