#pragma once

// Test selection from a change set, the per-test coverage map and the file
// dependency graph.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "srt/change_analysis.hpp"
#include "srt/static_analysis.hpp"
#include "srt/trace_collector.hpp"

namespace srt {

struct SelectionReason {
    enum class Kind { MethodHit, FileClosure, NewTest, NoCoverageData, UnresolvedDynamicImport };

    Kind kind = Kind::NewTest;
    /// Function id for method-hit, file for file-closure and
    /// unresolved-dynamic-import, empty otherwise.
    std::string target;

    friend bool operator==(const SelectionReason&, const SelectionReason&) = default;
    friend auto operator<=>(const SelectionReason&, const SelectionReason&) = default;
};

std::string_view to_string(SelectionReason::Kind kind);
SelectionReason::Kind reason_kind_from(std::string_view s);

struct SelectionResult {
    std::map<std::string, std::vector<SelectionReason>> selected;
    std::vector<std::string> skipped;

    friend bool operator==(const SelectionResult&, const SelectionResult&) = default;
};

/// test id -> test file at the new revision.
using TestIndex = std::map<std::string, std::string>;

class StaleGraphError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Graphs come from the old revision, the test index from the new one.
/// Changed functions that ran at module load (startup coverage) fall back to
/// the file rule for their file. Rules for dynamic imports and missing
/// coverage only apply when something changed.
SelectionResult select_tests(const ChangeSet& changes, const DynamicCallGraph& callgraph,
                             const FileDepGraph& depgraph, const TestIndex& tests);

/// Every function change becomes an outside change of its file, which turns
/// select_tests into pure file-level selection.
ChangeSet file_level_changes(const ChangeSet& changes);

struct SelectionTiming {
    double select_s = 0;
    double run_s = 0;
    std::optional<double> retest_all_s;
};

struct StatsReport {
    bool empty = false;
    std::size_t selected = 0;
    std::size_t total = 0;
    double selected_pct = 0;
    double select_time_s = 0;
    std::optional<double> run_time_pct;
};

StatsReport selection_stats(const SelectionResult& result, const SelectionTiming& timing);

}  // namespace srt
