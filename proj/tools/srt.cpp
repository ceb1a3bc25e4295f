// srt: selective regression testing for Node.js projects.

#include <chrono>
#include <condition_variable>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <mutex>

#include <CLI11.hpp>

#include "srt/pipeline.hpp"

namespace fs = std::filesystem;
using namespace srt;

namespace {

using Clock = std::chrono::steady_clock;

struct Globals {
    bool json_output = false;
    std::string root = ".";
};

void human(const std::string& line)
{
    std::cerr << line << "\n";
}

void machine(const Globals& g, const json& summary)
{
    if (g.json_output) {
        std::cout << summary.dump() << std::endl;
    }
}

std::string pct(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", v);
    return buf;
}

std::string secs(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f s", v);
    return buf;
}

// Runs a command body, mapping failures to the command's exit code.
int guarded(const char* stage, int code, const std::function<int()>& body)
{
    try {
        return body();
    } catch (const StageError& e) {
        human("srt: " + std::string(e.what()));
        return e.exit_code();
    } catch (const std::exception& e) {
        human("srt " + std::string(stage) + ": " + e.what());
        return code;
    }
}

std::function<void()> stop_collect;

void on_signal(int)
{
    if (stop_collect) {
        stop_collect();
    }
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Selective regression testing for Node.js projects"};
    app.require_subcommand(1);
    Globals g;
    app.add_flag("--json", g.json_output, "Print machine-readable summaries on stdout");
    app.add_option("--root", g.root, "Project root holding srt.json")->capture_default_str();

    int exit_code = 0;

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Build the file dependency graph");
    std::string analyze_out = "depgraph.json";
    std::string analyze_tests;
    analyze->add_option("--out", analyze_out, "Dependency graph output")->capture_default_str();
    analyze->add_option("--tests-out", analyze_tests, "Also write the discovered test index here");
    analyze->callback([&] {
        exit_code = guarded("analyze", stage_exit::Analyze, [&] {
            Config config = load_config(g.root);
            auto project = load_project(g.root, config.exclude);
            for (const auto& [file, message] : project.parse_errors) {
                human("warning: " + message);
            }
            auto graph = project_dep_graph(project);
            write_json_file(analyze_out, to_json(graph));
            auto tests = discover_tests(project.files, config.test_globs);
            if (!analyze_tests.empty()) {
                write_json_file(analyze_tests, test_index_to_json(tests));
            }
            human("analyze: " + std::to_string(graph.nodes.size()) + " files, " +
                  std::to_string(graph.edges.size()) + " edges, " +
                  std::to_string(graph.unresolved.size()) + " unresolved, " +
                  std::to_string(tests.size()) + " tests");
            machine(g, {{"command", "analyze"},
                        {"files", graph.nodes.size()},
                        {"edges", graph.edges.size()},
                        {"unresolved", graph.unresolved.size()},
                        {"tests", tests.size()},
                        {"parse_errors", project.parse_errors.size()}});
            return 0;
        });
    });

    // instrument
    auto* instrument = app.add_subcommand("instrument", "Write an instrumented copy of the project");
    std::string instrument_out;
    std::string agent_override;
    instrument->add_option("--out", instrument_out, "Output directory")->required();
    instrument->add_option("--agent", agent_override, "Agent module specifier");
    instrument->callback([&] {
        exit_code = guarded("instrument", stage_exit::Instrument, [&] {
            Config config = load_config(g.root);
            auto project = load_project(g.root, config.exclude);
            for (const auto& [file, message] : project.parse_errors) {
                human("warning: not instrumented: " + message);
            }
            std::set<std::string> test_files;
            for (const auto& [id, file] : discover_tests(project.files, config.test_globs)) {
                test_files.insert(file);
            }
            AgentConfig agent;
            agent.module_specifier = agent_override.empty() ? config.agent_module : agent_override;
            auto manifest = instrument_project(g.root, project.modules, test_files, instrument_out, agent);
            std::size_t probes = 0;
            for (const auto& [file, entries] : manifest.files) {
                probes += entries.size();
            }
            human("instrument: " + std::to_string(manifest.files.size()) + " modules, " +
                  std::to_string(probes) + " probes -> " + instrument_out);
            machine(g, {{"command", "instrument"},
                        {"modules", manifest.files.size()},
                        {"probes", probes},
                        {"manifest", (fs::path(instrument_out) / kManifestFileName).string()}});
            return 0;
        });
    });

    // collect
    auto* collect = app.add_subcommand("collect", "Serve the trace collector until a run finishes");
    std::string collect_manifest;
    std::string collect_bind = "127.0.0.1:7777";
    std::string collect_out = "callgraph.json";
    bool collect_forever = false;
    collect->add_option("--manifest", collect_manifest, "Instrumentation manifest")->required();
    collect->add_option("--bind", collect_bind, "host:port")->capture_default_str();
    collect->add_option("--out", collect_out, "Call graph output")->capture_default_str();
    collect->add_flag("--keep-running", collect_forever, "Do not exit after the first finished run");
    collect->callback([&] {
        exit_code = guarded("collect", stage_exit::Instrument, [&] {
            auto manifest = manifest_from_json(read_json_file(collect_manifest));
            TraceCollector collector(manifest, collect_out);
            std::mutex m;
            std::condition_variable cv;
            bool done = false;
            auto finish = [&] {
                std::lock_guard lock(m);
                done = true;
                cv.notify_all();
            };
            collector.on_finish([&](const DynamicCallGraph& graph) {
                human("collect: run " + graph.run_id + ": " + std::to_string(graph.tests.size()) +
                      " tests, " + std::to_string(graph.stats.hits) + " hits, " +
                      std::to_string(graph.stats.dropped_joins) + " dropped joins -> " + collect_out);
                machine(g, {{"command", "collect"},
                            {"run_id", graph.run_id},
                            {"tests", graph.tests.size()},
                            {"stats",
                             {{"batches", graph.stats.batches},
                              {"hits", graph.stats.hits},
                              {"dropped_joins", graph.stats.dropped_joins}}}});
                if (!collect_forever) {
                    finish();
                }
            });
            auto [host, port] = parse_bind_address(collect_bind);
            port = collector.start(host, port);
            human("collect: listening on http://" + host + ":" + std::to_string(port));
            stop_collect = finish;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            {
                std::unique_lock lock(m);
                cv.wait(lock, [&] { return done; });
            }
            stop_collect = nullptr;
            collector.stop();
            collector.wait();
            return 0;
        });
    });

    // changes
    auto* changes = app.add_subcommand("changes", "Map a patch to function-level changes");
    std::string old_dir, new_dir, diff_file, changes_out = "changes.json";
    changes->add_option("--old", old_dir, "Old revision directory")->required();
    changes->add_option("--new", new_dir, "New revision directory")->required();
    changes->add_option("--diff", diff_file, "Unified diff")->required();
    changes->add_option("--out", changes_out, "Change set output")->capture_default_str();
    changes->callback([&] {
        exit_code = guarded("changes", stage_exit::Changes, [&] {
            auto patch = read_text_file(diff_file);
            if (!patch || !fs::is_regular_file(diff_file)) {
                throw std::runtime_error("cannot read patch file " + diff_file);
            }
            auto cs = analyze_changes(directory_provider(old_dir), directory_provider(new_dir),
                                      parse_unified_diff(*patch));
            write_json_file(changes_out, to_json(cs));
            human("changes: " + std::to_string(cs.function_changes.size()) + " functions, " +
                  std::to_string(cs.outside_changes.size()) + " outside-function changes");
            machine(g, {{"command", "changes"},
                        {"functions", cs.function_changes.size()},
                        {"outside", cs.outside_changes.size()}});
            return 0;
        });
    });

    // select
    auto* select = app.add_subcommand("select", "Select tests affected by a change set");
    std::string sel_changes, sel_callgraph, sel_depgraph, sel_tests, sel_out = "selection.json";
    select->add_option("--changes", sel_changes, "changes.json")->required();
    select->add_option("--callgraph", sel_callgraph, "callgraph.json")->required();
    select->add_option("--depgraph", sel_depgraph, "depgraph.json")->required();
    select->add_option("--tests", sel_tests, "tests.json at the new revision")->required();
    select->add_option("--out", sel_out, "Selection output")->capture_default_str();
    select->callback([&] {
        exit_code = guarded("select", stage_exit::Select, [&] {
            auto cs = changes_from_json(read_json_file(sel_changes));
            auto cg = callgraph_from_json(read_json_file(sel_callgraph));
            auto dg = depgraph_from_json(read_json_file(sel_depgraph));
            auto tests = test_index_from_json(read_json_file(sel_tests));
            auto start = Clock::now();
            auto result = select_tests(cs, cg, dg, tests);
            double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
            write_json_file(sel_out, to_json(result));
            auto stats = selection_stats(result, {elapsed, 0, std::nullopt});
            human("select: " + std::to_string(stats.selected) + " of " + std::to_string(stats.total) +
                  " tests (" + pct(stats.selected_pct) + ") in " + secs(elapsed));
            machine(g, {{"command", "select"}, {"stats", to_json(stats)}});
            return 0;
        });
    });

    // run
    auto* run = app.add_subcommand("run", "Run the selected tests");
    std::string run_selection, run_cmd, run_cwd, run_out;
    long run_timeout = 0;
    run->add_option("--selection", run_selection, "selection.json")->required();
    run->add_option("--cmd", run_cmd, "Command template; {tests} expands to the selected ids");
    run->add_option("--cwd", run_cwd, "Working directory (default: --root)");
    run->add_option("--timeout", run_timeout, "Seconds before the test command is killed");
    run->add_option("--out", run_out, "RunReport output");
    run->callback([&] {
        exit_code = guarded("run", stage_exit::Run, [&] {
            Config config = load_config(g.root);
            RunOptions opts;
            opts.command_template = run_cmd.empty() ? config.runner_command : run_cmd;
            opts.working_dir = run_cwd.empty() ? fs::path(g.root) : fs::path(run_cwd);
            opts.timeout = run_timeout > 0 ? std::chrono::seconds(run_timeout) : config.timeout;
            opts.echo_output = true;
            auto selection = selection_from_json(read_json_file(run_selection));
            RunReport report;
            int status = 0;
            try {
                report = run_selected(selection, opts);
            } catch (const TimeoutError& e) {
                report = e.report();
                human("run: " + std::string(e.what()));
                status = stage_exit::Run;
            }
            if (!run_out.empty()) {
                write_json_file(run_out, to_json(report));
            }
            int failed = 0;
            for (const auto& [id, o] : report.outcomes) {
                failed += o == Outcome::Fail;
            }
            human("run: " + std::to_string(selection.selected.size()) + " selected, " +
                  std::to_string(failed) + " failed in " + secs(report.times.run_s));
            machine(g, {{"command", "run"}, {"report", to_json(report)}});
            if (status != 0) {
                return status;
            }
            return failed > 0 || !report.run_error.empty() ? 1 : 0;
        });
    });

    // metrics
    auto* metrics = app.add_subcommand("metrics", "Inclusiveness and precision against an oracle");
    std::string met_selection, met_oracle, met_tests, met_out;
    metrics->add_option("--selection", met_selection, "selection.json")->required();
    metrics->add_option("--oracle", met_oracle, "JSON {\"affected\": [...]}")->required();
    metrics->add_option("--tests", met_tests, "tests.json (default: selected and skipped tests)");
    metrics->add_option("--out", met_out, "Metrics output");
    metrics->callback([&] {
        exit_code = guarded("metrics", 1, [&] {
            auto selection = selection_from_json(read_json_file(met_selection));
            auto affected = oracle_from_json(read_json_file(met_oracle));
            std::set<std::string> all;
            if (!met_tests.empty()) {
                for (const auto& [id, file] : test_index_from_json(read_json_file(met_tests))) {
                    all.insert(id);
                }
            } else {
                for (const auto& [id, r] : selection.selected) {
                    all.insert(id);
                }
                all.insert(selection.skipped.begin(), selection.skipped.end());
            }
            auto m = compute_metrics(selection, affected, all);
            if (!met_out.empty()) {
                write_json_file(met_out, to_json(m));
            }
            human("metrics: inclusiveness " + pct(100 * m.inclusiveness) + ", precision " +
                  pct(100 * m.precision) + (m.safe ? " (safe)" : " (UNSAFE)"));
            machine(g, {{"command", "metrics"}, {"metrics", to_json(m)}});
            return 0;
        });
    });

    // pipeline
    auto* pipeline = app.add_subcommand("pipeline", "Analyze, trace, diff, select and run end to end");
    std::string p_old, p_new, p_patch, p_cache, p_cmd, p_agent, p_out;
    bool p_no_cache = false, p_no_run = false, p_baseline = false;
    pipeline->add_option("--old", p_old, "Old revision directory")->required();
    pipeline->add_option("--new", p_new, "New revision directory")->required();
    pipeline->add_option("--patch", p_patch, "Unified diff from old to new")->required();
    pipeline->add_option("--cache", p_cache, "Graph cache directory (default: <output_dir>/cache)");
    pipeline->add_option("--cmd", p_cmd, "Runner command template");
    pipeline->add_option("--agent", p_agent, "Agent module specifier");
    pipeline->add_option("--out", p_out, "Directory for selection.json, changes.json, report.json");
    pipeline->add_flag("--no-cache", p_no_cache, "Rebuild graphs even when cached");
    pipeline->add_flag("--no-run", p_no_run, "Stop after selection");
    pipeline->add_flag("--baseline", p_baseline, "Time a retest-all run once per cached revision");
    pipeline->callback([&] {
        exit_code = guarded("pipeline", 1, [&] {
            fs::path root = app.get_option("--root")->count() > 0 ? fs::path(g.root) : fs::path(p_new);
            Config config;
            try {
                config = load_config(root);
            } catch (const std::exception& e) {
                throw StageError("analyze", stage_exit::Analyze, e.what());
            }
            if (!p_cmd.empty()) {
                config.runner_command = p_cmd;
            }
            if (!p_agent.empty()) {
                config.agent_module = p_agent;
            }
            PipelineOptions opts;
            opts.old_dir = p_old;
            opts.new_dir = p_new;
            opts.patch = p_patch;
            opts.config = config;
            fs::path output = config.output_dir.is_absolute() ? config.output_dir : root / config.output_dir;
            opts.cache_dir = p_cache.empty() ? output / "cache" : fs::path(p_cache);
            opts.use_cache = !p_no_cache;
            opts.run_tests = !p_no_run;
            opts.measure_baseline = p_baseline;
            opts.log = [](const std::string& s) { human(s); };
            auto result = run_pipeline(opts);

            fs::path out_dir = p_out.empty() ? output : fs::path(p_out);
            write_json_file(out_dir / "changes.json", to_json(result.changes));
            write_json_file(out_dir / "selection.json", to_json(result.selection));
            if (result.report) {
                write_json_file(out_dir / "report.json", to_json(*result.report));
            }

            const auto& s = result.stats;
            human("selected " + std::to_string(s.selected) + " of " + std::to_string(s.total) +
                  " tests (" + pct(s.selected_pct) + ")");
            human("select time " + secs(result.times.select_s) + ", graph build " +
                  secs(result.times.graph_build_s) + (result.cache_hit ? " (cached)" : ""));
            if (s.run_time_pct) {
                human("run time vs retest-all " + pct(*s.run_time_pct));
            }
            int failed = 0;
            if (result.report) {
                for (const auto& [id, o] : result.report->outcomes) {
                    failed += o == Outcome::Fail;
                }
                human("ran " + std::to_string(result.selection.selected.size()) + " tests, " +
                      std::to_string(failed) + " failed");
            }
            json summary = {{"command", "pipeline"},
                            {"stats", to_json(s)},
                            {"cache_hit", result.cache_hit},
                            {"changes",
                             {{"functions", result.changes.function_changes.size()},
                              {"outside", result.changes.outside_changes.size()}}},
                            {"selected", selected_ids(result.selection)},
                            {"failed", failed}};
            machine(g, summary);
            bool run_failed = result.report && (failed > 0 || !result.report->run_error.empty());
            return run_failed ? 1 : 0;
        });
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    return exit_code;
}
