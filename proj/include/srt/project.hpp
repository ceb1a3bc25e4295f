#pragma once

// Project-level plumbing: configuration, file listing, test discovery and
// revision hashing.

#include <chrono>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "srt/selector.hpp"
#include "srt/source_model.hpp"

namespace srt {

struct Config {
    std::filesystem::path project_root = ".";
    std::vector<std::string> test_globs = {"**/*.test.js", "**/__tests__/**/*.js"};
    /// Directory names skipped anywhere in the tree.
    std::vector<std::string> exclude = {"node_modules", ".git", ".srt"};
    std::string collector_bind = "127.0.0.1:0";
    std::filesystem::path output_dir = ".srt";
    /// Runs tests; `{tests}` is replaced by the quoted test ids.
    std::string runner_command;
    /// Runs every test under instrumentation; defaults to runner_command.
    std::string trace_command;
    std::chrono::seconds timeout = std::chrono::minutes(10);
    /// Module specifier the instrumented code loads the agent from.
    std::string agent_module = "srt-agent";
};

/// Reads `srt.json` under `project_root` if present. Relative paths in the
/// file are kept relative; callers resolve them against the project root.
/// Throws FormatError on a malformed file.
Config load_config(const std::filesystem::path& project_root);

/// `*` and `?` stay within one path segment; `**/` matches zero or more
/// whole segments.
bool glob_match(std::string_view pattern, std::string_view path);

/// Regular files under root as sorted project-relative POSIX paths.
std::vector<std::string> list_project_files(const std::filesystem::path& root,
                                            const std::vector<std::string>& exclude);

/// Test ids are test file paths.
TestIndex discover_tests(const std::vector<std::string>& files, const std::vector<std::string>& globs);

struct LoadedProject {
    std::vector<std::string> files;
    std::vector<ModuleAst> modules;
    /// (file, message) for JS files outside the supported subset.
    std::vector<std::pair<std::string, std::string>> parse_errors;
};

LoadedProject load_project(const std::filesystem::path& root, const std::vector<std::string>& exclude);

/// SHA-256 over (path, content hash) pairs of the listed files.
std::string tree_hash(const std::filesystem::path& root, const std::vector<std::string>& files);

std::optional<std::string> read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace srt
