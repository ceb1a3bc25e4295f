#pragma once

// JSON forms of every artifact. Writers produce sorted keys and sorted
// arrays so files diff cleanly; readers throw FormatError on bad shapes.

#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "srt/change_analysis.hpp"
#include "srt/instrumentation.hpp"
#include "srt/runner.hpp"
#include "srt/selector.hpp"
#include "srt/static_analysis.hpp"
#include "srt/trace_collector.hpp"

namespace srt {

using json = nlohmann::json;

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

json to_json(const FileDepGraph& graph);
json to_json(const Manifest& manifest);
json to_json(const TraceEventBatch& batch);
json to_json(const TestBoundary& boundary);
json to_json(const DynamicCallGraph& graph);
json to_json(const ChangeSet& changes);
json to_json(const SelectionResult& selection);
json test_index_to_json(const TestIndex& tests);
json to_json(const RunReport& report);
json to_json(const Metrics& metrics);
json to_json(const StatsReport& stats);
json oracle_to_json(const std::set<std::string>& affected);

FileDepGraph depgraph_from_json(const json& j);
Manifest manifest_from_json(const json& j);
TraceEventBatch batch_from_json(const json& j);
TestBoundary boundary_from_json(const json& j);
DynamicCallGraph callgraph_from_json(const json& j);
ChangeSet changes_from_json(const json& j);
SelectionResult selection_from_json(const json& j);
TestIndex test_index_from_json(const json& j);
RunReport run_report_from_json(const json& j);
std::set<std::string> oracle_from_json(const json& j);

/// Throws FormatError naming the file on IO or syntax errors.
json read_json_file(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline.
void write_json_file(const std::filesystem::path& path, const json& j);

}  // namespace srt
