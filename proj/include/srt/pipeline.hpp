#pragma once

// End-to-end run against two materialized revisions and a patch.

#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "srt/project.hpp"
#include "srt/runner.hpp"
#include "srt/serialization.hpp"

namespace srt {

namespace stage_exit {
inline constexpr int Analyze = 2;
inline constexpr int Instrument = 3;
inline constexpr int Changes = 4;
inline constexpr int Select = 5;
inline constexpr int Run = 6;
}  // namespace stage_exit

class StageError : public std::runtime_error {
public:
    StageError(std::string stage, int exit_code, const std::string& message)
        : std::runtime_error(stage + ": " + message), stage_(std::move(stage)), exit_code_(exit_code)
    {
    }
    const std::string& stage() const { return stage_; }
    int exit_code() const { return exit_code_; }

private:
    std::string stage_;
    int exit_code_;
};

struct PipelineOptions {
    std::filesystem::path old_dir;
    std::filesystem::path new_dir;
    std::filesystem::path patch;
    Config config;
    /// Graphs are cached under cache_dir/<old tree hash>/.
    std::filesystem::path cache_dir;
    bool use_cache = true;
    bool run_tests = true;
    /// Also time a retest-all run of the old revision once per cache entry.
    bool measure_baseline = false;
    std::function<void(const std::string&)> log;
};

struct PipelineResult {
    SelectionResult selection;
    std::optional<RunReport> report;
    StatsReport stats;
    ChangeSet changes;
    bool cache_hit = false;
    std::string old_hash;
    PhaseTimes times;
};

/// Dependency graph of a loaded project. Files that failed to parse become
/// nodes with an unknown (dynamic) import, so selection stays conservative.
FileDepGraph project_dep_graph(const LoadedProject& project);

/// Builds or reuses old-revision graphs, analyzes the patch, selects and runs
/// tests at the new revision. Throws StageError.
PipelineResult run_pipeline(const PipelineOptions& options);

/// The graph-building half of the pipeline: instruments `root` into
/// `work_dir`, serves a collector on an ephemeral port and runs every test
/// under instrumentation with SRT_COLLECTOR_URL and SRT_RUN_ID set.
DynamicCallGraph trace_project(const std::filesystem::path& root, const LoadedProject& project,
                               const TestIndex& tests, const Config& config,
                               const std::filesystem::path& work_dir, double* run_seconds = nullptr);

}  // namespace srt
