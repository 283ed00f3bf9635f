#pragma once

#include "lps/json_io.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace lps {

/// Exit codes: 0 success, 1 usage/validation error, 2 a verification-style
/// inequality check failed.
enum ExitCode { kOk = 0, kUsage = 1, kCheckFailed = 2 };

struct CliInvocation {
    std::string command;
    std::string config_path;
    std::optional<std::uint64_t> seed;   // overrides config
    std::string out_dir;                 // overrides config; default "."
    std::string reverify_path;           // witness re-verification
};

/// Dispatch a parsed invocation; writes report files under out_dir.
int run_invocation(const CliInvocation& inv);

/// Full CLI: parse argv, dispatch, map errors to exit codes.
int run_cli(int argc, const char* const* argv);

/// Re-verify a self-contained witness file; returns kOk when the recorded
/// ratio reproduces to 1e-9 relative.
int reverify_witness(const std::string& witness_path, const std::string& out_dir);

} // namespace lps
