#include "srt/selector.hpp"

#include <algorithm>

namespace srt {

std::string_view to_string(SelectionReason::Kind kind)
{
    using K = SelectionReason::Kind;
    switch (kind) {
    case K::MethodHit: return "method-hit";
    case K::FileClosure: return "file-closure";
    case K::NewTest: return "new-test";
    case K::NoCoverageData: return "no-coverage-data";
    case K::UnresolvedDynamicImport: return "unresolved-dynamic-import";
    }
    return "unknown";
}

SelectionReason::Kind reason_kind_from(std::string_view s)
{
    using K = SelectionReason::Kind;
    for (auto k : {K::MethodHit, K::FileClosure, K::NewTest, K::NoCoverageData,
                   K::UnresolvedDynamicImport}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    throw std::invalid_argument("unknown selection reason '" + std::string(s) + "'");
}

ChangeSet file_level_changes(const ChangeSet& changes)
{
    ChangeSet out;
    std::set<OutsideChange> files(changes.outside_changes.begin(), changes.outside_changes.end());
    for (const auto& f : changes.function_changes) {
        files.insert({f.id.file, OutsideReason::TopLevelCode});
    }
    out.outside_changes.assign(files.begin(), files.end());
    return out;
}

SelectionResult select_tests(const ChangeSet& changes, const DynamicCallGraph& callgraph,
                             const FileDepGraph& depgraph, const TestIndex& tests)
{
    using K = SelectionReason::Kind;

    // Files whose change is handled by closure membership.
    std::set<std::string> changed_files;
    for (const auto& o : changes.outside_changes) {
        changed_files.insert(o.file);
    }
    std::vector<std::string> changed_functions;
    for (const auto& f : changes.function_changes) {
        auto id = f.id.display();
        if (callgraph.startup.count(id) != 0) {
            changed_files.insert(f.id.file);
        }
        changed_functions.push_back(std::move(id));
    }
    std::sort(changed_functions.begin(), changed_functions.end());
    changed_functions.erase(std::unique(changed_functions.begin(), changed_functions.end()),
                            changed_functions.end());
    const bool anything_changed = !changes.empty();
    const auto dynamic_files = depgraph.dynamic_import_files();

    SelectionResult result;
    for (const auto& [test, file] : tests) {
        std::vector<SelectionReason> reasons;
        auto covered = callgraph.tests.find(test);
        bool known = covered != callgraph.tests.end();
        bool in_graph = depgraph.nodes.count(file) != 0;
        if (known && !in_graph) {
            throw StaleGraphError("test '" + test + "' has coverage but its file " + file +
                                  " is not in the dependency graph");
        }
        if (!known) {
            reasons.push_back({K::NewTest, {}});
        }
        if (anything_changed) {
            if (known) {
                const auto& fns = covered->second;
                for (const auto& f : changed_functions) {
                    if (fns.count(f) != 0) {
                        reasons.push_back({K::MethodHit, f});
                    }
                }
                if (fns.empty()) {
                    reasons.push_back({K::NoCoverageData, {}});
                }
            }
            if (in_graph && (!changed_files.empty() || !dynamic_files.empty())) {
                auto closure = test_file_closure(depgraph, file);
                for (const auto& c : changed_files) {
                    if (closure.count(c) != 0) {
                        reasons.push_back({K::FileClosure, c});
                    }
                }
                for (const auto& d : dynamic_files) {
                    if (closure.count(d) != 0) {
                        reasons.push_back({K::UnresolvedDynamicImport, d});
                    }
                }
            }
        }
        if (reasons.empty()) {
            result.skipped.push_back(test);
        } else {
            std::sort(reasons.begin(), reasons.end());
            reasons.erase(std::unique(reasons.begin(), reasons.end()), reasons.end());
            result.selected.emplace(test, std::move(reasons));
        }
    }
    return result;
}

StatsReport selection_stats(const SelectionResult& result, const SelectionTiming& timing)
{
    StatsReport report;
    report.selected = result.selected.size();
    report.total = result.selected.size() + result.skipped.size();
    report.select_time_s = timing.select_s;
    report.empty = report.total == 0;
    if (!report.empty) {
        report.selected_pct = 100.0 * static_cast<double>(report.selected) /
                              static_cast<double>(report.total);
    }
    if (timing.retest_all_s && *timing.retest_all_s > 0) {
        report.run_time_pct = 100.0 * (timing.select_s + timing.run_s) / *timing.retest_all_s;
    }
    return report;
}

}  // namespace srt
