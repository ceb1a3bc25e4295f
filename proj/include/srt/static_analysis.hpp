#pragma once

// require/import extraction and resolution, and the project file dependency
// graph built from them.

#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "srt/source_model.hpp"

namespace srt {

enum class ImportKind { EsmImport, CjsRequire, EsmExportFrom };

std::string_view to_string(ImportKind kind);

struct ImportSpec {
    std::string importer;
    /// Raw specifier; for a dynamic import this is the argument's source text.
    std::string specifier;
    ImportKind kind = ImportKind::EsmImport;
    SourceSpan span;
    bool dynamic = false;
};

struct ResolvedTarget {
    enum class Kind { Internal, External, Unresolved };

    Kind kind = Kind::Unresolved;
    /// Project-relative path, package name, or unresolved reason.
    std::string value;

    static ResolvedTarget internal(std::string path) { return {Kind::Internal, std::move(path)}; }
    static ResolvedTarget external(std::string package) { return {Kind::External, std::move(package)}; }
    static ResolvedTarget unresolved(std::string reason) { return {Kind::Unresolved, std::move(reason)}; }

    friend bool operator==(const ResolvedTarget&, const ResolvedTarget&) = default;
};

namespace unresolved_reason {
inline constexpr const char* External = "external";
inline constexpr const char* Dynamic = "dynamic";
inline constexpr const char* NotFound = "not found";
inline constexpr const char* SelfImport = "self-import";
inline constexpr const char* OutsideProject = "outside project";
inline constexpr const char* Absolute = "absolute path";
}  // namespace unresolved_reason

struct UnresolvedImport {
    std::string file;
    std::string specifier;
    std::string reason;

    friend auto operator<=>(const UnresolvedImport&, const UnresolvedImport&) = default;
};

/// Edge (a, b) means a imports or requires b. May be cyclic.
struct FileDepGraph {
    std::set<std::string> nodes;
    std::set<std::pair<std::string, std::string>> edges;
    std::vector<UnresolvedImport> unresolved;

    /// Files containing at least one dynamic require/import.
    std::set<std::string> dynamic_import_files() const;
};

class UnknownFile : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Static imports, `export ... from` clauses and `require` calls in source
/// order. Non-literal `require(expr)`/`import(expr)` are flagged dynamic.
std::vector<ImportSpec> extract_imports(const ModuleAst& ast);

/// Relative specifiers try, in order: exact, `.js`, `.json`, `/index.js`.
/// Bare specifiers resolve to their package name.
ResolvedTarget resolve_import(const ImportSpec& spec, const std::set<std::string>& file_index);

/// `file_index` lists every project file (JS or not), project-relative.
FileDepGraph build_file_dep_graph(const std::vector<ModuleAst>& modules,
                                  const std::set<std::string>& file_index);

/// Reflexive-transitive closure of `test_file` over the graph edges.
std::set<std::string> test_file_closure(const FileDepGraph& graph, const std::string& test_file);

/// Lexically normalizes a POSIX path; returns empty when it escapes the root.
std::string normalize_relative(std::string_view path);

}  // namespace srt
