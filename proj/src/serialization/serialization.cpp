#include "srt/serialization.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "srt/project.hpp"

namespace srt {

namespace {

template <typename F>
auto guarded(const char* what, F&& body) -> decltype(body())
{
    try {
        return body();
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed ") + what + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("malformed ") + what + ": " + e.what());
    }
}

void check_version(const json& j, const char* what)
{
    if (j.contains("version") && j.at("version") != 1) {
        throw FormatError(std::string(what) + ": unsupported version " + j.at("version").dump());
    }
}

json sorted_array(std::vector<std::string> items)
{
    std::sort(items.begin(), items.end());
    return items;
}

}  // namespace

json to_json(const FileDepGraph& graph)
{
    json edges = json::array();
    for (const auto& [a, b] : graph.edges) {
        edges.push_back({a, b});
    }
    json unresolved = json::array();
    auto sorted = graph.unresolved;
    std::sort(sorted.begin(), sorted.end());
    for (const auto& u : sorted) {
        unresolved.push_back({{"file", u.file}, {"specifier", u.specifier}, {"reason", u.reason}});
    }
    return {{"nodes", graph.nodes}, {"edges", edges}, {"unresolved", unresolved}};
}

FileDepGraph depgraph_from_json(const json& j)
{
    return guarded("depgraph", [&] {
        FileDepGraph g;
        g.nodes = j.at("nodes").get<std::set<std::string>>();
        for (const auto& e : j.at("edges")) {
            if (!e.is_array() || e.size() != 2) {
                throw FormatError("depgraph: edge must be a pair");
            }
            g.edges.emplace(e[0].get<std::string>(), e[1].get<std::string>());
        }
        for (const auto& u : j.value("unresolved", json::array())) {
            g.unresolved.push_back({u.at("file").get<std::string>(),
                                    u.at("specifier").get<std::string>(),
                                    u.at("reason").get<std::string>()});
        }
        return g;
    });
}

json to_json(const Manifest& manifest)
{
    json files = json::object();
    for (const auto& [file, entries] : manifest.files) {
        json arr = json::array();
        for (const auto& e : entries) {
            arr.push_back({{"i", e.index}, {"id", e.id}, {"params", e.params}});
        }
        files[file] = std::move(arr);
    }
    return {{"version", manifest.version}, {"files", files}};
}

Manifest manifest_from_json(const json& j)
{
    return guarded("manifest", [&] {
        check_version(j, "manifest");
        Manifest m;
        for (const auto& [file, entries] : j.at("files").items()) {
            auto& out = m.files[file];
            for (const auto& e : entries) {
                out.push_back({e.at("i").get<int>(), e.at("id").get<std::string>(),
                               e.at("params").get<int>()});
            }
        }
        return m;
    });
}

json to_json(const TraceEventBatch& batch)
{
    return {{"run_id", batch.run_id}, {"test_id", batch.test_id}, {"file", batch.file},
            {"hits", batch.hits},     {"seq", batch.seq}};
}

TraceEventBatch batch_from_json(const json& j)
{
    return guarded("trace batch", [&] {
        TraceEventBatch b;
        b.run_id = j.at("run_id").get<std::string>();
        b.test_id = j.at("test_id").get<std::string>();
        b.file = j.at("file").get<std::string>();
        b.hits = j.at("hits").get<std::vector<int>>();
        b.seq = j.value("seq", std::int64_t{0});
        return b;
    });
}

json to_json(const TestBoundary& boundary)
{
    return {{"run_id", boundary.run_id},
            {"test_id", boundary.test_id},
            {"phase", boundary.phase == TestBoundary::Phase::Begin ? "begin" : "end"}};
}

TestBoundary boundary_from_json(const json& j)
{
    return guarded("test boundary", [&] {
        TestBoundary b;
        b.run_id = j.at("run_id").get<std::string>();
        b.test_id = j.at("test_id").get<std::string>();
        auto phase = j.at("phase").get<std::string>();
        if (phase == "begin") {
            b.phase = TestBoundary::Phase::Begin;
        } else if (phase == "end") {
            b.phase = TestBoundary::Phase::End;
        } else {
            throw FormatError("test boundary: phase must be begin or end, got " + phase);
        }
        return b;
    });
}

json to_json(const DynamicCallGraph& graph)
{
    json tests = json::object();
    for (const auto& [test, fns] : graph.tests) {
        tests[test] = fns;
    }
    return {{"version", 1},
            {"run_id", graph.run_id},
            {"tests", tests},
            {"startup", graph.startup},
            {"stats",
             {{"batches", graph.stats.batches},
              {"hits", graph.stats.hits},
              {"dropped_joins", graph.stats.dropped_joins}}}};
}

DynamicCallGraph callgraph_from_json(const json& j)
{
    return guarded("callgraph", [&] {
        check_version(j, "callgraph");
        DynamicCallGraph g;
        g.run_id = j.value("run_id", std::string{});
        for (const auto& [test, fns] : j.at("tests").items()) {
            g.tests[test] = fns.get<std::set<std::string>>();
        }
        g.startup = j.value("startup", std::set<std::string>{});
        if (j.contains("stats")) {
            const auto& s = j.at("stats");
            g.stats.batches = s.value("batches", std::int64_t{0});
            g.stats.hits = s.value("hits", std::int64_t{0});
            g.stats.dropped_joins = s.value("dropped_joins", std::int64_t{0});
        }
        return g;
    });
}

json to_json(const ChangeSet& changes)
{
    auto fns = changes.function_changes;
    std::sort(fns.begin(), fns.end(), [](const FunctionChange& a, const FunctionChange& b) {
        return a.id.display() < b.id.display();
    });
    json functions = json::array();
    for (const auto& f : fns) {
        functions.push_back({{"id", f.id.display()}, {"kind", std::string(to_string(f.kind))}});
    }
    auto outs = changes.outside_changes;
    std::sort(outs.begin(), outs.end());
    json outside = json::array();
    for (const auto& o : outs) {
        outside.push_back({{"file", o.file}, {"reason", std::string(to_string(o.reason))}});
    }
    return {{"version", 1}, {"functions", functions}, {"outside", outside}};
}

ChangeSet changes_from_json(const json& j)
{
    return guarded("changes", [&] {
        check_version(j, "changes");
        ChangeSet cs;
        for (const auto& f : j.at("functions")) {
            cs.function_changes.push_back({parse_function_id(f.at("id").get<std::string>()),
                                           change_kind_from(f.at("kind").get<std::string>())});
        }
        for (const auto& o : j.at("outside")) {
            cs.outside_changes.push_back({o.at("file").get<std::string>(),
                                          outside_reason_from(o.at("reason").get<std::string>())});
        }
        return cs;
    });
}

namespace {

const char* target_key(SelectionReason::Kind kind)
{
    switch (kind) {
    case SelectionReason::Kind::MethodHit: return "function";
    case SelectionReason::Kind::FileClosure:
    case SelectionReason::Kind::UnresolvedDynamicImport: return "file";
    default: return nullptr;
    }
}

}  // namespace

json to_json(const SelectionResult& selection)
{
    json selected = json::object();
    for (const auto& [test, reasons] : selection.selected) {
        auto sorted = reasons;
        std::sort(sorted.begin(), sorted.end());
        json arr = json::array();
        for (const auto& r : sorted) {
            json o = {{"kind", std::string(to_string(r.kind))}};
            if (const char* key = target_key(r.kind)) {
                o[key] = r.target;
            }
            arr.push_back(std::move(o));
        }
        selected[test] = std::move(arr);
    }
    return {{"version", 1}, {"selected", selected}, {"skipped", sorted_array(selection.skipped)}};
}

SelectionResult selection_from_json(const json& j)
{
    return guarded("selection", [&] {
        check_version(j, "selection");
        SelectionResult s;
        for (const auto& [test, reasons] : j.at("selected").items()) {
            auto& out = s.selected[test];
            for (const auto& r : reasons) {
                SelectionReason reason;
                reason.kind = reason_kind_from(r.at("kind").get<std::string>());
                if (const char* key = target_key(reason.kind)) {
                    reason.target = r.at(key).get<std::string>();
                }
                out.push_back(std::move(reason));
            }
        }
        s.skipped = j.at("skipped").get<std::vector<std::string>>();
        return s;
    });
}

json test_index_to_json(const TestIndex& tests)
{
    json arr = json::array();
    for (const auto& [id, file] : tests) {
        arr.push_back({{"id", id}, {"file", file}});
    }
    return {{"version", 1}, {"tests", arr}};
}

TestIndex test_index_from_json(const json& j)
{
    return guarded("tests", [&] {
        check_version(j, "tests");
        TestIndex index;
        for (const auto& t : j.at("tests")) {
            auto id = t.at("id").get<std::string>();
            index[id] = t.value("file", id);
        }
        return index;
    });
}

json to_json(const RunReport& report)
{
    json outcomes = json::object();
    for (const auto& [test, outcome] : report.outcomes) {
        outcomes[test] = std::string(to_string(outcome));
    }
    json j = {{"version", 1},
              {"outcomes", outcomes},
              {"times",
               {{"graph_build_s", report.times.graph_build_s},
                {"select_s", report.times.select_s},
                {"run_s", report.times.run_s}}},
              {"exit_status", report.exit_status}};
    if (!report.run_error.empty()) {
        j["run_error"] = report.run_error;
    }
    return j;
}

RunReport run_report_from_json(const json& j)
{
    return guarded("run report", [&] {
        check_version(j, "run report");
        RunReport r;
        for (const auto& [test, outcome] : j.at("outcomes").items()) {
            r.outcomes[test] = outcome_from(outcome.get<std::string>());
        }
        if (j.contains("times")) {
            const auto& t = j.at("times");
            r.times.graph_build_s = t.value("graph_build_s", 0.0);
            r.times.select_s = t.value("select_s", 0.0);
            r.times.run_s = t.value("run_s", 0.0);
        }
        r.exit_status = j.value("exit_status", 0);
        r.run_error = j.value("run_error", std::string{});
        return r;
    });
}

json to_json(const Metrics& m)
{
    return {{"inclusiveness", m.inclusiveness},
            {"precision", m.precision},
            {"safe", m.safe},
            {"selected", m.selected},
            {"affected", m.affected},
            {"total", m.total},
            {"efficiency",
             {{"graph_build_s", m.efficiency.graph_build_s},
              {"select_s", m.efficiency.select_s},
              {"run_s", m.efficiency.run_s}}}};
}

json to_json(const StatsReport& s)
{
    json j = {{"empty", s.empty},
              {"selected", s.selected},
              {"total", s.total},
              {"selected_pct", s.selected_pct},
              {"select_time_s", s.select_time_s},
              {"run_time_pct", nullptr}};
    if (s.run_time_pct) {
        j["run_time_pct"] = *s.run_time_pct;
    }
    return j;
}

json oracle_to_json(const std::set<std::string>& affected)
{
    return {{"affected", affected}};
}

std::set<std::string> oracle_from_json(const json& j)
{
    return guarded("oracle", [&] { return j.at("affected").get<std::set<std::string>>(); });
}

json read_json_file(const std::filesystem::path& path)
{
    auto text = read_text_file(path);
    if (!text) {
        throw FormatError(path.string() + ": cannot read file");
    }
    try {
        return json::parse(*text);
    } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& j)
{
    write_text_file(path, j.dump(2) + "\n");
}

}  // namespace srt
