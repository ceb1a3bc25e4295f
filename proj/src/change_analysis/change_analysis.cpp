#include <algorithm>
#include <map>
#include <set>

#include "srt/change_analysis.hpp"
#include "srt/project.hpp"
#include "srt/static_analysis.hpp"

namespace srt {

std::string_view to_string(ChangeKind kind)
{
    switch (kind) {
    case ChangeKind::Added: return "added";
    case ChangeKind::Modified: return "modified";
    case ChangeKind::Deleted: return "deleted";
    }
    return "unknown";
}

std::string_view to_string(OutsideReason reason)
{
    switch (reason) {
    case OutsideReason::TopLevelCode: return "top-level-code";
    case OutsideReason::ImportChange: return "import-change";
    case OutsideReason::NonJsFile: return "non-js-file";
    case OutsideReason::FileAdded: return "file-added";
    case OutsideReason::FileDeleted: return "file-deleted";
    case OutsideReason::ParseFailed: return "parse-failed";
    }
    return "unknown";
}

ChangeKind change_kind_from(std::string_view s)
{
    for (auto k : {ChangeKind::Added, ChangeKind::Modified, ChangeKind::Deleted}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    throw std::invalid_argument("unknown change kind '" + std::string(s) + "'");
}

OutsideReason outside_reason_from(std::string_view s)
{
    for (auto r : {OutsideReason::TopLevelCode, OutsideReason::ImportChange, OutsideReason::NonJsFile,
                   OutsideReason::FileAdded, OutsideReason::FileDeleted, OutsideReason::ParseFailed}) {
        if (to_string(r) == s) {
            return r;
        }
    }
    throw std::invalid_argument("unknown outside-change reason '" + std::string(s) + "'");
}

FunctionId parse_function_id(std::string_view display)
{
    auto sep = display.find("::");
    if (sep == std::string_view::npos) {
        throw std::invalid_argument("not a function id: '" + std::string(display) + "'");
    }
    FunctionId id;
    id.file = std::string(display.substr(0, sep));
    auto rest = display.substr(sep + 2);
    std::size_t i = 0;
    while (i <= rest.size()) {
        auto dot = rest.find('.', i);
        if (dot == std::string_view::npos) {
            dot = rest.size();
        }
        id.name_chain.emplace_back(rest.substr(i, dot - i));
        i = dot + 1;
    }
    return id;
}

bool is_js_path(std::string_view path)
{
    for (std::string_view ext : {".js", ".mjs", ".cjs"}) {
        if (path.size() > ext.size() && path.substr(path.size() - ext.size()) == ext) {
            return true;
        }
    }
    return false;
}

FileProvider directory_provider(std::filesystem::path root)
{
    return [root = std::move(root)](const std::string& path) -> std::optional<std::string> {
        auto full = root / path;
        if (!std::filesystem::is_regular_file(full)) {
            return std::nullopt;
        }
        return read_text_file(full);
    };
}

namespace {

struct Collector {
    std::map<std::string, FunctionChange> functions;
    std::set<OutsideChange> outside;

    void function(const FunctionId& id, ChangeKind kind)
    {
        auto key = id.display();
        auto it = functions.find(key);
        if (it == functions.end()) {
            functions.emplace(key, FunctionChange{id, kind});
        } else if (it->second.kind != kind) {
            // Same id deleted on one path and added on another only happens
            // for a rename onto itself, which is an edit.
            it->second.kind = ChangeKind::Modified;
        }
    }
    void file(const std::string& path, OutsideReason reason) { outside.insert({path, reason}); }
};

std::optional<ModuleAst> parse_side(const FileProvider& tree, const std::string& path)
{
    auto text = tree(path);
    if (!text) {
        return std::nullopt;
    }
    try {
        return parse_module(*text, path);
    } catch (const ParseError&) {
        return std::nullopt;
    }
}

// One side of an add/delete/rename.
void whole_file(const FileProvider& tree, const std::string& path, bool added, bool binary,
                Collector& out)
{
    out.file(path, added ? OutsideReason::FileAdded : OutsideReason::FileDeleted);
    if (!is_js_path(path)) {
        out.file(path, OutsideReason::NonJsFile);
        return;
    }
    auto ast = binary ? std::nullopt : parse_side(tree, path);
    if (!ast) {
        out.file(path, OutsideReason::ParseFailed);
        return;
    }
    for (const auto& r : enumerate_functions(*ast)) {
        out.function(r.id, added ? ChangeKind::Added : ChangeKind::Deleted);
    }
}

std::vector<std::pair<std::string, ImportKind>> import_list(const ModuleAst& ast)
{
    std::vector<std::pair<std::string, ImportKind>> out;
    for (auto& spec : extract_imports(ast)) {
        out.emplace_back(std::move(spec.specifier), spec.kind);
    }
    return out;
}

void modified_file(const FileProvider& old_tree, const FileProvider& new_tree, const FileDiff& diff,
                   Collector& out)
{
    const std::string& path = *diff.new_path;
    if (!is_js_path(path)) {
        out.file(path, OutsideReason::NonJsFile);
        return;
    }
    auto before = diff.binary ? std::nullopt : parse_side(old_tree, path);
    auto after = diff.binary ? std::nullopt : parse_side(new_tree, path);
    if (!before || !after) {
        out.file(path, OutsideReason::ParseFailed);
        return;
    }

    std::map<std::string, FunctionRecord> old_fns;
    for (auto& r : enumerate_functions(*before)) {
        old_fns.emplace(r.id.display(), std::move(r));
    }
    std::map<std::string, FunctionRecord> new_fns;
    for (auto& r : enumerate_functions(*after)) {
        new_fns.emplace(r.id.display(), std::move(r));
    }
    for (const auto& [key, r] : old_fns) {
        auto it = new_fns.find(key);
        if (it == new_fns.end()) {
            out.function(r.id, ChangeKind::Deleted);
        } else if (!own_structure_equal(*r.node, *it->second.node)) {
            out.function(r.id, ChangeKind::Modified);
        }
    }
    for (const auto& [key, r] : new_fns) {
        if (old_fns.count(key) == 0) {
            out.function(r.id, ChangeKind::Added);
        }
    }

    if (!own_structure_equal(*before->root, *after->root)) {
        out.file(path, OutsideReason::TopLevelCode);
    }
    if (import_list(*before) != import_list(*after)) {
        out.file(path, OutsideReason::ImportChange);
    }
}

}  // namespace

ChangeSet analyze_changes(const FileProvider& old_tree, const FileProvider& new_tree,
                          const std::vector<FileDiff>& diffs)
{
    Collector out;
    for (const auto& diff : diffs) {
        if (!diff.old_path) {
            whole_file(new_tree, *diff.new_path, true, diff.binary, out);
        } else if (!diff.new_path) {
            whole_file(old_tree, *diff.old_path, false, diff.binary, out);
        } else if (*diff.old_path != *diff.new_path) {
            whole_file(old_tree, *diff.old_path, false, diff.binary, out);
            whole_file(new_tree, *diff.new_path, true, diff.binary, out);
        } else {
            modified_file(old_tree, new_tree, diff, out);
        }
    }
    ChangeSet cs;
    for (auto& [key, change] : out.functions) {
        cs.function_changes.push_back(std::move(change));
    }
    cs.outside_changes.assign(out.outside.begin(), out.outside.end());
    return cs;
}

}  // namespace srt
