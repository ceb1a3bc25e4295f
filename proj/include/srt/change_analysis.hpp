#pragma once

// Unified diff parsing and the mapping of changed lines to functions.

#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "srt/source_model.hpp"

namespace srt {

struct Hunk {
    int old_start = 0;
    int old_len = 0;
    int new_start = 0;
    int new_len = 0;
    /// Exact line numbers of `-` and `+` lines.
    std::vector<int> removed;
    std::vector<int> added;
};

/// A missing side (file added or deleted) has no path.
struct FileDiff {
    std::optional<std::string> old_path;
    std::optional<std::string> new_path;
    std::vector<Hunk> hunks;
    bool binary = false;

    /// Whichever path is present, preferring the new one.
    const std::string& path() const { return new_path ? *new_path : *old_path; }
};

class DiffFormatError : public std::runtime_error {
public:
    DiffFormatError(int line, const std::string& message)
        : std::runtime_error("diff line " + std::to_string(line) + ": " + message), line_(line)
    {
    }
    int line() const { return line_; }

private:
    int line_;
};

/// Accepts plain unified diffs and git's extended headers (renames, new/deleted
/// file modes, binary markers). Empty input yields no FileDiffs.
std::vector<FileDiff> parse_unified_diff(std::string_view patch);

enum class ChangeKind { Added, Modified, Deleted };
enum class OutsideReason { TopLevelCode, ImportChange, NonJsFile, FileAdded, FileDeleted, ParseFailed };

std::string_view to_string(ChangeKind kind);
std::string_view to_string(OutsideReason reason);
ChangeKind change_kind_from(std::string_view s);
OutsideReason outside_reason_from(std::string_view s);

struct FunctionChange {
    FunctionId id;
    ChangeKind kind = ChangeKind::Modified;

    friend bool operator==(const FunctionChange& a, const FunctionChange& b)
    {
        return a.id.display() == b.id.display() && a.kind == b.kind;
    }
};

struct OutsideChange {
    std::string file;
    OutsideReason reason = OutsideReason::TopLevelCode;

    friend bool operator==(const OutsideChange&, const OutsideChange&) = default;
    friend auto operator<=>(const OutsideChange&, const OutsideChange&) = default;
};

struct ChangeSet {
    std::vector<FunctionChange> function_changes;
    std::vector<OutsideChange> outside_changes;

    bool empty() const { return function_changes.empty() && outside_changes.empty(); }
    friend bool operator==(const ChangeSet&, const ChangeSet&) = default;
};

/// Returns file contents at one revision, or nullopt when the file is absent.
using FileProvider = std::function<std::optional<std::string>(const std::string& path)>;

FileProvider directory_provider(std::filesystem::path root);

/// `.js`, `.mjs` and `.cjs` files are parsed; everything else is opaque.
bool is_js_path(std::string_view path);

/// Output is sorted: functions by display id, outside entries by (file, reason).
ChangeSet analyze_changes(const FileProvider& old_tree, const FileProvider& new_tree,
                          const std::vector<FileDiff>& diffs);

/// Inverse of FunctionId::display(). The file part ends at the first "::".
FunctionId parse_function_id(std::string_view display);

}  // namespace srt
