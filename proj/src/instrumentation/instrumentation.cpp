#include "srt/instrumentation.hpp"

#include <algorithm>
#include <tuple>

#include "srt/project.hpp"
#include "srt/serialization.hpp"

namespace fs = std::filesystem;

namespace srt {

const ManifestEntry* Manifest::find(const std::string& file, int index) const
{
    auto it = files.find(file);
    if (it == files.end()) {
        return nullptr;
    }
    // Entries are written in index order, so the index is usually the position.
    const auto& entries = it->second;
    if (index >= 0 && static_cast<std::size_t>(index) < entries.size() &&
        entries[index].index == index) {
        return &entries[index];
    }
    for (const auto& e : entries) {
        if (e.index == index) {
            return &e;
        }
    }
    return nullptr;
}

namespace {

struct Edit {
    std::size_t offset;
    int group;  // 0 closes an expression body, 1 opens something
    int depth;
    std::string text;

    auto key() const { return std::make_tuple(offset, group, group == 0 ? -depth : depth); }
};

std::string js_string(const std::string& s)
{
    return nlohmann::json(s).dump();
}

std::string replace_all(std::string text, const std::string& from, const std::string& to)
{
    for (auto pos = text.find(from); pos != std::string::npos;
         pos = text.find(from, pos + to.size())) {
        text.replace(pos, from.size(), to);
    }
    return text;
}

bool is_directive(const AstNode& stmt)
{
    if (stmt.kind != NodeKind::Statement || stmt.text != "expr" || stmt.children.size() != 1) {
        return false;
    }
    const AstNode& e = *stmt.children[0];
    return e.kind == NodeKind::Literal && !e.text.empty() && (e.text[0] == '"' || e.text[0] == '\'');
}

// Offset just past the directive prologue of a statement list, plus whether a
// separating semicolon is needed there.
std::pair<std::size_t, bool> after_directives(const AstNode& container, std::size_t fallback,
                                              const std::string& source)
{
    const AstNode* last = nullptr;
    for (const auto& child : container.children) {
        if (!is_directive(*child)) {
            break;
        }
        last = child.get();
    }
    if (last == nullptr) {
        return {fallback, false};
    }
    std::size_t end = last->span.end_offset;
    return {end, end == 0 || source[end - 1] != ';'};
}

int function_depth(const AstNode& node)
{
    int depth = 0;
    for (const AstNode* p = node.parent; p != nullptr; p = p->parent) {
        if (is_function_like(p->kind)) {
            ++depth;
        }
    }
    return depth;
}

bool is_esm(const AstNode& root)
{
    for (const auto& child : root.children) {
        if (child->kind == NodeKind::ImportDecl || child->kind == NodeKind::ExportDecl) {
            return true;
        }
    }
    return false;
}

}  // namespace

InstrumentedModule instrument_module(const ModuleAst& ast, const AgentConfig& agent,
                                     bool is_test_file)
{
    const std::string& src = ast.source;
    InstrumentedModule out;
    out.path = ast.path;

    std::vector<Edit> edits;

    std::string prologue = is_esm(*ast.root)
                               ? "import __srt_agent from " + js_string(agent.module_specifier) + ";"
                               : "const __srt_agent = require(" + js_string(agent.module_specifier) + ");";
    prologue += " const __srt_file = " + js_string(ast.path) + ";";
    if (is_test_file) {
        prologue += " __srt_agent.test_file(__srt_file);";
    }
    std::size_t start = 0;
    if (src.rfind("#!", 0) == 0) {
        auto nl = src.find('\n');
        start = nl == std::string::npos ? src.size() : nl + 1;
        if (nl == std::string::npos) {
            prologue = "\n" + prologue;
        }
    }
    auto [prologue_at, needs_semi] = after_directives(*ast.root, start, src);
    if (needs_semi) {
        prologue = "; " + prologue;
    } else if (prologue_at != start) {
        prologue = " " + prologue;
    }
    edits.push_back({prologue_at, 1, -1, prologue});

    auto records = enumerate_functions(ast);
    int index = 0;
    for (const auto& record : records) {
        const AstNode& fn = *record.node;
        const AstNode& body = *fn.body();
        std::string probe = replace_all(agent.probe_template, "{index}", std::to_string(index));
        int depth = function_depth(fn);
        if (fn.has(node_flags::ExpressionBody)) {
            edits.push_back({body.span.begin_offset, 1, depth, "{ " + probe + " return ("});
            edits.push_back({body.span.end_offset, 0, depth, "); }"});
        } else {
            auto [at, semi] = after_directives(body, body.span.begin_offset + 1, src);
            edits.push_back({at, 1, depth, (semi ? ";" : "") + probe});
        }
        out.id_table.push_back({index, record.id, record.param_count});
        ++index;
    }
    out.probe_count = index;

    std::stable_sort(edits.begin(), edits.end(),
                     [](const Edit& a, const Edit& b) { return a.key() < b.key(); });
    std::string text;
    text.reserve(src.size() + edits.size() * 48);
    std::size_t pos = 0;
    for (const auto& e : edits) {
        text.append(src, pos, e.offset - pos);
        text += e.text;
        pos = e.offset;
    }
    text.append(src, pos, std::string::npos);
    out.output_text = std::move(text);

    verify_instrumented(ast, out.output_text);
    return out;
}

void verify_instrumented(const ModuleAst& original, const std::string& output_text)
{
    ModuleAst rewritten;
    try {
        rewritten = parse_module(output_text, original.path);
    } catch (const ParseError& e) {
        throw InstrumentationError(original.path,
                                   "rewritten source does not parse: " + std::string(e.what()));
    }
    auto before = enumerate_functions(original);
    auto after = enumerate_functions(rewritten);
    if (before.size() != after.size()) {
        throw InstrumentationError(original.path, "function count changed from " +
                                                      std::to_string(before.size()) + " to " +
                                                      std::to_string(after.size()));
    }
    for (std::size_t i = 0; i < before.size(); ++i) {
        if (before[i].id.display() != after[i].id.display() ||
            before[i].param_count != after[i].param_count) {
            throw InstrumentationError(original.path, "function " + before[i].id.display() +
                                                          " became " + after[i].id.display());
        }
    }
}

Manifest manifest_for(const std::vector<InstrumentedModule>& modules)
{
    Manifest manifest;
    for (const auto& m : modules) {
        auto& entries = manifest.files[m.path];
        for (const auto& p : m.id_table) {
            entries.push_back({p.index, p.id.display(), p.param_count});
        }
    }
    return manifest;
}

Manifest instrument_project(const fs::path& project_root, const std::vector<ModuleAst>& modules,
                            const std::set<std::string>& test_files, const fs::path& out_dir,
                            const AgentConfig& agent)
{
    std::vector<InstrumentedModule> rewritten;
    rewritten.reserve(modules.size());
    std::map<std::string, const InstrumentedModule*> by_path;
    for (const auto& m : modules) {
        rewritten.push_back(instrument_module(m, agent, test_files.count(m.path) != 0));
    }
    for (const auto& m : rewritten) {
        by_path[m.path] = &m;
    }

    if (fs::exists(out_dir)) {
        bool ours = fs::exists(out_dir / kManifestFileName) || fs::is_empty(out_dir);
        if (!ours) {
            throw std::runtime_error("refusing to overwrite " + out_dir.string() +
                                     ": not an instrumentation output directory");
        }
        fs::remove_all(out_dir);
    }
    fs::create_directories(out_dir);
    auto out_abs = fs::weakly_canonical(out_dir);

    auto it = fs::recursive_directory_iterator(project_root);
    for (; it != fs::recursive_directory_iterator(); ++it) {
        const auto& entry = *it;
        std::string name = entry.path().filename().string();
        auto rel = entry.path().lexically_relative(project_root);
        if (entry.is_directory()) {
            if (fs::weakly_canonical(entry.path()) == out_abs || name == ".git") {
                it.disable_recursion_pending();
            } else if (name == "node_modules") {
                it.disable_recursion_pending();
                fs::create_directories((out_dir / rel).parent_path());
                fs::create_directory_symlink(fs::absolute(entry.path()), out_dir / rel);
            }
            continue;
        }
        if (!entry.is_regular_file()) {
            continue;
        }
        auto found = by_path.find(rel.generic_string());
        try {
            if (found != by_path.end()) {
                write_text_file(out_dir / rel, found->second->output_text);
            } else {
                fs::create_directories((out_dir / rel).parent_path());
                fs::copy_file(entry.path(), out_dir / rel, fs::copy_options::overwrite_existing);
            }
        } catch (const fs::filesystem_error& e) {
            throw std::runtime_error(rel.generic_string() + ": " + e.what());
        }
    }
    for (const auto& [path, m] : by_path) {
        if (!fs::exists(out_dir / path)) {
            write_text_file(out_dir / path, m->output_text);
        }
    }

    Manifest manifest = manifest_for(rewritten);
    write_json_file(out_dir / kManifestFileName, to_json(manifest));
    return manifest;
}

}  // namespace srt
