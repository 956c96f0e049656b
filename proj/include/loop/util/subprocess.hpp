#pragma once

#include <optional>
#include <string>
#include <vector>

namespace loop::util {

struct ProcessResult {
    int exit_code = -1;  // -1 when killed by a signal
    bool timed_out = false;
    std::string out;
    std::string err;
};

/// Runs `command` through /bin/sh -c, feeding `input` on stdin. The whole
/// process group is killed once `timeout_seconds` elapses.
ProcessResult run_shell(const std::string& command, const std::string& input = {},
                        std::optional<double> timeout_seconds = std::nullopt);

/// Single-quotes `arg` for /bin/sh.
std::string shell_quote(const std::string& arg);

/// Resolves a program name against PATH (or checks a path containing '/').
std::optional<std::string> find_executable(const std::string& program);

/// First whitespace-separated word of a shell command, unquoted.
std::string command_program(const std::string& command);

}  // namespace loop::util
