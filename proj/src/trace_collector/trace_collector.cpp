#include "srt/trace_collector.hpp"

#include <charconv>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "srt/serialization.hpp"

namespace srt {

namespace {

// Sequential-test contract, checked one boundary at a time.
struct BoundaryTracker {
    std::optional<std::string> open;

    void apply(const TestBoundary& b)
    {
        if (b.phase == TestBoundary::Phase::Begin) {
            if (open && *open != b.test_id) {
                throw InterleavingError("test '" + b.test_id + "' began while '" + *open +
                                        "' is still running");
            }
            open = b.test_id;
            return;
        }
        if (!open) {
            return;
        }
        if (*open != b.test_id) {
            throw InterleavingError("end of '" + b.test_id + "' while '" + *open + "' is running");
        }
        open.reset();
    }
};

}  // namespace

void validate_boundaries(const std::vector<TestBoundary>& boundaries)
{
    BoundaryTracker tracker;
    for (const auto& b : boundaries) {
        tracker.apply(b);
    }
}

DynamicCallGraph build_call_graph(const std::string& run_id,
                                  const std::vector<TraceEventBatch>& batches,
                                  const std::vector<TestBoundary>& boundaries,
                                  const Manifest& manifest)
{
    DynamicCallGraph graph;
    graph.run_id = run_id;
    BoundaryTracker tracker;
    for (const auto& b : boundaries) {
        if (b.run_id != run_id) {
            continue;
        }
        tracker.apply(b);
        if (b.phase == TestBoundary::Phase::Begin && b.test_id != kStartupTest) {
            graph.tests[b.test_id];
        }
    }
    for (const auto& batch : batches) {
        if (batch.run_id != run_id) {
            continue;
        }
        ++graph.stats.batches;
        bool startup = batch.test_id == kStartupTest;
        std::set<std::string>* target = startup ? &graph.startup : &graph.tests[batch.test_id];
        for (int index : batch.hits) {
            ++graph.stats.hits;
            const ManifestEntry* entry = manifest.find(batch.file, index);
            if (entry == nullptr) {
                ++graph.stats.dropped_joins;
                continue;
            }
            target->insert(entry->id);
        }
    }
    return graph;
}

std::pair<std::string, int> parse_bind_address(const std::string& address)
{
    auto colon = address.rfind(':');
    if (colon == std::string::npos || colon == 0) {
        throw std::invalid_argument("bind address must be host:port, got '" + address + "'");
    }
    std::string host = address.substr(0, colon);
    std::string port_text = address.substr(colon + 1);
    int port = -1;
    auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port < 0 || port > 65535) {
        throw std::invalid_argument("bad port in bind address '" + address + "'");
    }
    return {host, port};
}

struct RunState {
    std::vector<TraceEventBatch> batches;
    std::vector<TestBoundary> boundaries;
    BoundaryTracker tracker;
    std::optional<DynamicCallGraph> graph;
};

struct TraceCollector::State {
    Manifest manifest;
    std::filesystem::path out;
    FinishCallback callback;
    httplib::Server server;
    std::thread thread;
    int port = 0;

    mutable std::mutex mutex;
    std::map<std::string, RunState> runs;
};

namespace {

void reply(httplib::Response& res, int status, const std::string& message)
{
    res.status = status;
    res.set_content(json{{"ok", status == 200}, {"message", message}}.dump(), "application/json");
}

}  // namespace

TraceCollector::TraceCollector(Manifest manifest, std::filesystem::path out)
    : state_(std::make_unique<State>())
{
    state_->manifest = std::move(manifest);
    state_->out = std::move(out);
    State* st = state_.get();

    st->server.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("ok", "text/plain");
    });

    st->server.Post("/v1/trace", [st](const httplib::Request& req, httplib::Response& res) {
        TraceEventBatch batch;
        try {
            batch = batch_from_json(json::parse(req.body));
        } catch (const std::exception& e) {
            return reply(res, 400, e.what());
        }
        std::lock_guard lock(st->mutex);
        auto& run = st->runs[batch.run_id];
        if (run.graph) {
            return reply(res, 409, "run " + batch.run_id + " is finished");
        }
        run.batches.push_back(std::move(batch));
        reply(res, 200, "accepted");
    });

    st->server.Post("/v1/test-boundary", [st](const httplib::Request& req, httplib::Response& res) {
        TestBoundary boundary;
        try {
            boundary = boundary_from_json(json::parse(req.body));
        } catch (const std::exception& e) {
            return reply(res, 400, e.what());
        }
        std::lock_guard lock(st->mutex);
        auto& run = st->runs[boundary.run_id];
        if (run.graph) {
            return reply(res, 409, "run " + boundary.run_id + " is finished");
        }
        try {
            run.tracker.apply(boundary);
        } catch (const InterleavingError& e) {
            return reply(res, 409, e.what());
        }
        run.boundaries.push_back(std::move(boundary));
        reply(res, 200, "accepted");
    });

    st->server.Post("/v1/finish", [this](const httplib::Request& req, httplib::Response& res) {
        std::string run_id;
        try {
            run_id = json::parse(req.body).at("run_id").get<std::string>();
        } catch (const std::exception& e) {
            return reply(res, 400, e.what());
        }
        try {
            auto graph = finish(run_id);
            res.set_content(to_json(graph).dump(), "application/json");
        } catch (const InterleavingError& e) {
            reply(res, 409, e.what());
        } catch (const std::logic_error& e) {
            reply(res, 409, e.what());
        } catch (const std::exception& e) {
            reply(res, 500, e.what());
        }
    });
}

TraceCollector::~TraceCollector()
{
    stop();
    wait();
}

void TraceCollector::on_finish(FinishCallback callback)
{
    std::lock_guard lock(state_->mutex);
    state_->callback = std::move(callback);
}

int TraceCollector::start(const std::string& host, int port)
{
    auto& server = state_->server;
    if (port == 0) {
        port = server.bind_to_any_port(host);
    } else if (!server.bind_to_port(host, port)) {
        port = -1;
    }
    if (port < 0) {
        throw std::runtime_error("cannot bind collector to " + host);
    }
    state_->port = port;
    state_->thread = std::thread([&server] { server.listen_after_bind(); });
    server.wait_until_ready();
    return port;
}

void TraceCollector::wait()
{
    if (state_->thread.joinable()) {
        state_->thread.join();
    }
}

void TraceCollector::stop()
{
    state_->server.stop();
}

int TraceCollector::port() const
{
    return state_->port;
}

DynamicCallGraph TraceCollector::finish(const std::string& run_id)
{
    DynamicCallGraph graph;
    FinishCallback callback;
    {
        std::lock_guard lock(state_->mutex);
        auto& run = state_->runs[run_id];
        if (run.graph) {
            throw std::logic_error("run " + run_id + " is already finished");
        }
        graph = build_call_graph(run_id, run.batches, run.boundaries, state_->manifest);
        run.graph = graph;
        run.batches.clear();
        run.boundaries.clear();
        callback = state_->callback;
        if (!state_->out.empty()) {
            write_json_file(state_->out, to_json(graph));
        }
    }
    if (callback) {
        callback(graph);
    }
    return graph;
}

std::optional<DynamicCallGraph> TraceCollector::finished_graph(const std::string& run_id) const
{
    std::lock_guard lock(state_->mutex);
    auto it = state_->runs.find(run_id);
    if (it == state_->runs.end()) {
        return std::nullopt;
    }
    return it->second.graph;
}

}  // namespace srt
