#pragma once

// Child process spawning with captured output and a hard timeout.

#include <chrono>
#include <filesystem>
#include <map>
#include <string>

namespace srt {

struct ProcessOptions {
    std::filesystem::path cwd;
    /// Added to (or overriding) the inherited environment.
    std::map<std::string, std::string> env;
    std::chrono::milliseconds timeout = std::chrono::minutes(10);
    bool echo_output = false;
};

struct ProcessResult {
    int exit_code = -1;
    /// Terminating signal, 0 if the child exited normally.
    int signal = 0;
    bool timed_out = false;
    std::string out;
    std::string err;
    double seconds = 0;

    bool ok() const { return !timed_out && signal == 0 && exit_code == 0; }
};

/// Runs `command` with /bin/sh -c in its own process group. On timeout the
/// whole group is killed. Throws SpawnError (runner.hpp) if fork/exec fails.
ProcessResult run_shell(const std::string& command, const ProcessOptions& options = {});

}  // namespace srt
