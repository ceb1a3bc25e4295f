#include "srt/pipeline.hpp"

#include <chrono>
#include <random>

#include "srt/process.hpp"

namespace fs = std::filesystem;

namespace srt {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t)
{
    return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string random_run_id()
{
    std::random_device rd;
    std::uniform_int_distribution<unsigned> dist(0, 15);
    std::string id = "run-";
    for (int i = 0; i < 12; ++i) {
        id += "0123456789abcdef"[dist(rd)];
    }
    return id;
}

std::string resolve_agent(const std::string& spec, const fs::path& config_root)
{
    if (spec.rfind("./", 0) == 0 || spec.rfind("../", 0) == 0) {
        return fs::weakly_canonical(fs::absolute(config_root / spec)).string();
    }
    return spec;
}

std::vector<std::string> test_ids(const TestIndex& tests)
{
    std::vector<std::string> ids;
    for (const auto& [id, file] : tests) {
        ids.push_back(id);
    }
    return ids;
}

template <typename F>
auto stage(const char* name, int code, F&& body) -> decltype(body())
{
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, code, e.what());
    }
}

}  // namespace

FileDepGraph project_dep_graph(const LoadedProject& project)
{
    std::set<std::string> index(project.files.begin(), project.files.end());
    FileDepGraph graph = build_file_dep_graph(project.modules, index);
    // A file we cannot parse has unknown imports.
    for (const auto& [file, message] : project.parse_errors) {
        graph.nodes.insert(file);
        graph.unresolved.push_back({file, "<unparsed>", unresolved_reason::Dynamic});
    }
    std::sort(graph.unresolved.begin(), graph.unresolved.end());
    return graph;
}

DynamicCallGraph trace_project(const fs::path& root, const LoadedProject& project,
                               const TestIndex& tests, const Config& config, const fs::path& work_dir,
                               double* run_seconds)
{
    std::string command = config.trace_command.empty() ? config.runner_command : config.trace_command;
    if (command.empty()) {
        throw std::runtime_error("no trace or runner command configured");
    }
    std::set<std::string> test_files;
    for (const auto& [id, file] : tests) {
        test_files.insert(file);
    }
    AgentConfig agent;
    agent.module_specifier = resolve_agent(config.agent_module, config.project_root);
    fs::path instrumented = work_dir / "instrumented";
    Manifest manifest = instrument_project(root, project.modules, test_files, instrumented, agent);

    TraceCollector collector(manifest);
    auto [host, port] = parse_bind_address(config.collector_bind);
    port = collector.start(host, port);
    std::string run_id = random_run_id();

    ProcessOptions popts;
    popts.cwd = instrumented;
    popts.timeout = config.timeout;
    popts.env = {{"SRT_COLLECTOR_URL", "http://" + host + ":" + std::to_string(port)},
                 {"SRT_RUN_ID", run_id}};
    auto result = run_shell(expand_command(command, test_ids(tests)), popts);
    if (result.timed_out) {
        throw std::runtime_error("traced test run timed out");
    }
    if (run_seconds != nullptr) {
        *run_seconds = result.seconds;
    }
    // Failing tests still produce usable coverage, so the exit status is not checked.
    auto graph = collector.finish(run_id);
    collector.stop();
    collector.wait();
    if (!tests.empty() && graph.tests.empty() && graph.stats.batches == 0) {
        // Nothing reached the collector, usually an agent that failed to load.
        std::string tail = result.err.size() > 2000 ? result.err.substr(result.err.size() - 2000) : result.err;
        throw std::runtime_error("no trace data received from " + std::to_string(tests.size()) +
                                 " tests (agent " + agent.module_specifier + ")\n" + tail);
    }
    return graph;
}

PipelineResult run_pipeline(const PipelineOptions& options)
{
    auto log = [&](const std::string& msg) {
        if (options.log) {
            options.log(msg);
        }
    };
    const Config& config = options.config;
    PipelineResult out;

    // The patch is checked first so a bad one fails before any tracing.
    auto diffs = stage("changes", stage_exit::Changes, [&] {
        auto patch = read_text_file(options.patch);
        if (!patch || !fs::is_regular_file(options.patch)) {
            throw std::runtime_error("cannot read patch file " + options.patch.string());
        }
        return parse_unified_diff(*patch);
    });

    // analyze
    auto analyze_start = Clock::now();
    auto old_files = stage("analyze", stage_exit::Analyze, [&] {
        return list_project_files(options.old_dir, config.exclude);
    });
    out.old_hash = stage("analyze", stage_exit::Analyze, [&] { return tree_hash(options.old_dir, old_files); });
    fs::path cache = options.cache_dir / out.old_hash.substr(0, 16);
    fs::path depgraph_file = cache / "depgraph.json";
    fs::path callgraph_file = cache / "callgraph.json";
    fs::path tests_file = cache / "tests.json";
    fs::path baseline_file = cache / "baseline.json";

    FileDepGraph depgraph;
    DynamicCallGraph callgraph;
    bool cached = options.use_cache && fs::exists(depgraph_file) && fs::exists(callgraph_file) &&
                  fs::exists(tests_file);
    if (cached) {
        stage("analyze", stage_exit::Analyze, [&] {
            depgraph = depgraph_from_json(read_json_file(depgraph_file));
            callgraph = callgraph_from_json(read_json_file(callgraph_file));
        });
        out.cache_hit = true;
        log("graphs: cache hit " + cache.string());
    } else {
        LoadedProject project = stage("analyze", stage_exit::Analyze, [&] {
            return load_project(options.old_dir, config.exclude);
        });
        for (const auto& [file, message] : project.parse_errors) {
            log("warning: " + message);
        }
        depgraph = project_dep_graph(project);
        TestIndex old_tests = discover_tests(project.files, config.test_globs);
        stage("instrument", stage_exit::Instrument, [&] {
            double traced = 0;
            callgraph = trace_project(options.old_dir, project, old_tests, config, cache / "work",
                                      &traced);
            fs::remove_all(cache / "work");
            write_json_file(depgraph_file, to_json(depgraph));
            write_json_file(callgraph_file, to_json(callgraph));
            write_json_file(tests_file, test_index_to_json(old_tests));
            log("graphs: traced " + std::to_string(old_tests.size()) + " tests in " +
                std::to_string(traced) + " s");
        });
    }
    out.times.graph_build_s = seconds_since(analyze_start);

    if (options.measure_baseline && !fs::exists(baseline_file) && !config.runner_command.empty()) {
        stage("run", stage_exit::Run, [&] {
            auto old_tests = test_index_from_json(read_json_file(tests_file));
            ProcessOptions popts;
            popts.cwd = options.old_dir;
            popts.timeout = config.timeout;
            auto r = run_shell(expand_command(config.runner_command, test_ids(old_tests)), popts);
            write_json_file(baseline_file, json{{"retest_all_s", r.seconds}});
        });
    }

    // changes
    out.changes = stage("changes", stage_exit::Changes, [&] {
        return analyze_changes(directory_provider(options.old_dir), directory_provider(options.new_dir),
                               diffs);
    });

    // select
    auto select_start = Clock::now();
    TestIndex new_tests = stage("select", stage_exit::Select, [&] {
        return discover_tests(list_project_files(options.new_dir, config.exclude), config.test_globs);
    });
    out.selection = stage("select", stage_exit::Select, [&] {
        return select_tests(out.changes, callgraph, depgraph, new_tests);
    });
    out.times.select_s = seconds_since(select_start);

    // run
    if (options.run_tests && !config.runner_command.empty()) {
        out.report = stage("run", stage_exit::Run, [&] {
            RunOptions ropts;
            ropts.command_template = config.runner_command;
            ropts.working_dir = options.new_dir;
            ropts.timeout = config.timeout;
            return run_selected(out.selection, ropts);
        });
        out.times.run_s = out.report->times.run_s;
        out.report->times = out.times;
    }

    SelectionTiming timing;
    timing.select_s = out.times.select_s;
    timing.run_s = out.times.run_s;
    if (fs::exists(baseline_file)) {
        try {
            timing.retest_all_s = read_json_file(baseline_file).at("retest_all_s").get<double>();
        } catch (const std::exception&) {
            // unusable baseline; report without it
        }
    }
    out.stats = selection_stats(out.selection, timing);
    return out;
}

}  // namespace srt
