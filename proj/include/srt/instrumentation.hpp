#pragma once

// Function-entry probe injection. Every function body gets one probe call
// carrying a per-file integer index; the manifest maps indices back to
// function identities and parameter counts.

#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "srt/source_model.hpp"

namespace srt {

struct AgentConfig {
    /// What the module prologue loads: a package name or an absolute path.
    std::string module_specifier = "srt-agent";
    /// Probe statement; `{index}` is replaced by the probe index. The agent
    /// object is bound to `__srt_agent` and the file path to `__srt_file`.
    std::string probe_template = "__srt_agent.probe(__srt_file, {index});";
};

struct ProbeEntry {
    int index = 0;
    FunctionId id;
    int param_count = 0;
};

struct InstrumentedModule {
    std::string path;
    std::string output_text;
    int probe_count = 0;
    std::vector<ProbeEntry> id_table;
};

class InstrumentationError : public std::runtime_error {
public:
    InstrumentationError(std::string file, const std::string& message)
        : std::runtime_error(file + ": " + message), file_(std::move(file))
    {
    }
    const std::string& file() const { return file_; }

private:
    std::string file_;
};

struct ManifestEntry {
    int index = 0;
    std::string id;
    int params = 0;

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Manifest {
    int version = 1;
    std::map<std::string, std::vector<ManifestEntry>> files;

    /// nullptr for unknown (file, index) pairs.
    const ManifestEntry* find(const std::string& file, int index) const;

    friend bool operator==(const Manifest&, const Manifest&) = default;
};

inline constexpr const char* kManifestFileName = "srt-manifest.json";

/// Rewrites one module. Test files additionally announce themselves to the
/// agent with `__srt_agent.test_file(path)` right after the prologue.
/// Line numbers of the original code are preserved.
InstrumentedModule instrument_module(const ModuleAst& ast, const AgentConfig& agent = {},
                                     bool is_test_file = false);

/// Throws InstrumentationError unless `output_text` re-enumerates to the
/// same functions, in order, with the same parameter counts.
void verify_instrumented(const ModuleAst& original, const std::string& output_text);

/// Mirrors `project_root` into `out_dir`: modules are rewritten, other files
/// copied, `node_modules` symlinked. Writes the manifest to
/// `out_dir/srt-manifest.json` and returns it.
Manifest instrument_project(const std::filesystem::path& project_root,
                            const std::vector<ModuleAst>& modules,
                            const std::set<std::string>& test_files,
                            const std::filesystem::path& out_dir, const AgentConfig& agent = {});

Manifest manifest_for(const std::vector<InstrumentedModule>& modules);

}  // namespace srt
