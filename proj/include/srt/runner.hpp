#pragma once

// Running the selected tests through the project's own command, and the
// inclusiveness/precision metrics.

#include <chrono>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "srt/selector.hpp"

namespace srt {

enum class Outcome { Pass, Fail, SkipNotSelected };

std::string_view to_string(Outcome outcome);
Outcome outcome_from(std::string_view s);

struct PhaseTimes {
    double graph_build_s = 0;
    double select_s = 0;
    double run_s = 0;
};

struct RunReport {
    std::map<std::string, Outcome> outcomes;
    PhaseTimes times;
    int exit_status = 0;
    /// Set when the child failed in a way not attributable to a test.
    std::string run_error;
};

struct RunOptions {
    /// `{tests}` expands to the shell-quoted selected test ids.
    std::string command_template;
    std::filesystem::path working_dir = ".";
    std::chrono::milliseconds timeout = std::chrono::minutes(10);
    std::map<std::string, std::string> env;
    /// Forward the child's output to our stderr.
    bool echo_output = false;
};

class SpawnError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TimeoutError : public std::runtime_error {
public:
    TimeoutError(const std::string& message, RunReport report)
        : std::runtime_error(message), report_(std::move(report))
    {
    }
    const RunReport& report() const { return report_; }

private:
    RunReport report_;
};

/// Quotes for POSIX sh.
std::string shell_quote(const std::string& s);
std::string expand_command(const std::string& command_template, const std::vector<std::string>& tests);

/// The child may print `SRT-RESULT pass <id>` / `SRT-RESULT fail <id>` lines;
/// otherwise every selected test takes the exit status as its outcome.
/// Selected tests without a result line fail when the child failed. An empty
/// selection spawns nothing.
RunReport run_selected(const SelectionResult& selection, const RunOptions& options);

struct Metrics {
    double inclusiveness = 1.0;
    double precision = 1.0;
    bool safe = true;
    std::size_t selected = 0;
    std::size_t affected = 0;
    std::size_t total = 0;
    PhaseTimes efficiency;
};

class OracleMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

Metrics compute_metrics(const std::set<std::string>& selected, const std::set<std::string>& affected,
                        const std::set<std::string>& all_tests);
Metrics compute_metrics(const SelectionResult& selection, const std::set<std::string>& affected,
                        const std::set<std::string>& all_tests);

/// Selected ids, sorted.
std::vector<std::string> selected_ids(const SelectionResult& selection);

}  // namespace srt
