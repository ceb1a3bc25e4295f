#pragma once

// Receives probe batches and test boundaries over HTTP and joins them with
// the instrumentation manifest into a per-test coverage map.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "srt/instrumentation.hpp"

namespace srt {

inline constexpr const char* kStartupTest = "<startup>";

struct TraceEventBatch {
    std::string run_id;
    std::string test_id;
    std::string file;
    std::vector<int> hits;
    std::int64_t seq = 0;
};

struct TestBoundary {
    enum class Phase { Begin, End };

    std::string run_id;
    std::string test_id;
    Phase phase = Phase::Begin;
};

struct CallGraphStats {
    std::int64_t batches = 0;
    std::int64_t hits = 0;
    std::int64_t dropped_joins = 0;

    friend bool operator==(const CallGraphStats&, const CallGraphStats&) = default;
};

/// test id -> functions executed while that test was running.
struct DynamicCallGraph {
    std::string run_id;
    std::map<std::string, std::set<std::string>> tests;
    std::set<std::string> startup;
    CallGraphStats stats;

    friend bool operator==(const DynamicCallGraph&, const DynamicCallGraph&) = default;
};

class InterleavingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Checks that boundaries for one run are sequential: no begin while another
/// test is open and no end for a test other than the open one. An end with
/// nothing open is ignored.
void validate_boundaries(const std::vector<TestBoundary>& boundaries);

/// Pure join of batches with the manifest. Tests announced by a begin
/// boundary appear even without hits. Unknown (file, index) pairs count as
/// dropped joins.
DynamicCallGraph build_call_graph(const std::string& run_id,
                                  const std::vector<TraceEventBatch>& batches,
                                  const std::vector<TestBoundary>& boundaries,
                                  const Manifest& manifest);

/// HTTP service:
///   POST /v1/trace          TraceEventBatch JSON
///   POST /v1/test-boundary  {"run_id","test_id","phase":"begin"|"end"}
///   POST /v1/finish         {"run_id"}; replies with the call graph
///   GET  /v1/health         "ok"
/// Malformed JSON is rejected with 400; any request for a finished run, or an
/// interleaved boundary, with 409.
class TraceCollector {
public:
    using FinishCallback = std::function<void(const DynamicCallGraph&)>;

    /// `out` may be empty, in which case finished graphs are only kept in memory.
    TraceCollector(Manifest manifest, std::filesystem::path out = {});
    ~TraceCollector();

    TraceCollector(const TraceCollector&) = delete;
    TraceCollector& operator=(const TraceCollector&) = delete;

    void on_finish(FinishCallback callback);

    /// Binds and starts serving on a background thread. Port 0 picks a free
    /// port. Returns the bound port.
    int start(const std::string& host, int port);
    /// Blocks until stop() is called.
    void wait();
    void stop();
    int port() const;

    /// Finalizes a run as /v1/finish does.
    DynamicCallGraph finish(const std::string& run_id);
    std::optional<DynamicCallGraph> finished_graph(const std::string& run_id) const;

private:
    struct State;
    std::unique_ptr<State> state_;
};

/// "host:port" -> (host, port). Throws std::invalid_argument.
std::pair<std::string, int> parse_bind_address(const std::string& address);

}  // namespace srt
