#include "srt/static_analysis.hpp"

#include <algorithm>
#include <deque>
#include <map>

namespace srt {

std::string_view to_string(ImportKind kind)
{
    switch (kind) {
    case ImportKind::EsmImport: return "esm-import";
    case ImportKind::CjsRequire: return "cjs-require";
    case ImportKind::EsmExportFrom: return "esm-export-from";
    }
    return "unknown";
}

std::set<std::string> FileDepGraph::dynamic_import_files() const
{
    std::set<std::string> out;
    for (const auto& u : unresolved) {
        if (u.reason == unresolved_reason::Dynamic) {
            out.insert(u.file);
        }
    }
    return out;
}

namespace {

std::string literal_value(const AstNode& node)
{
    const std::string& raw = node.text;
    if (raw.size() >= 2 && (raw.front() == '"' || raw.front() == '\'' || raw.front() == '`')) {
        return raw.substr(1, raw.size() - 2);
    }
    return raw;
}

void collect_imports(const ModuleAst& ast, const AstNode& node, std::vector<ImportSpec>& out)
{
    auto emit = [&](ImportKind kind, std::string specifier, bool dynamic) {
        ImportSpec spec;
        spec.importer = ast.path;
        spec.specifier = std::move(specifier);
        spec.kind = kind;
        spec.span = node.span;
        spec.dynamic = dynamic;
        out.push_back(std::move(spec));
    };
    auto argument_text = [&](const AstNode& arg) {
        return ast.source.substr(arg.span.begin_offset, arg.span.end_offset - arg.span.begin_offset);
    };

    switch (node.kind) {
    case NodeKind::ImportDecl:
        emit(ImportKind::EsmImport, node.text, false);
        break;
    case NodeKind::ExportDecl:
        if (node.text == "all-from" || node.text == "named-from") {
            for (const auto& child : node.children) {
                if (child->kind == NodeKind::Literal) {
                    emit(ImportKind::EsmExportFrom, literal_value(*child), false);
                    break;
                }
            }
        }
        break;
    case NodeKind::RequireCall:
    case NodeKind::ImportCall: {
        const AstNode& arg = *node.children[0];
        auto kind = node.kind == NodeKind::RequireCall ? ImportKind::CjsRequire : ImportKind::EsmImport;
        if (node.has(node_flags::Dynamic)) {
            emit(kind, argument_text(arg), true);
        } else {
            emit(kind, literal_value(arg), false);
        }
        break;
    }
    default:
        break;
    }
    for (const auto& child : node.children) {
        collect_imports(ast, *child, out);
    }
}

std::string dirname(const std::string& path)
{
    auto slash = path.rfind('/');
    return slash == std::string::npos ? std::string{} : path.substr(0, slash);
}

}  // namespace

std::vector<ImportSpec> extract_imports(const ModuleAst& ast)
{
    std::vector<ImportSpec> out;
    if (ast.root) {
        collect_imports(ast, *ast.root, out);
    }
    return out;
}

std::string normalize_relative(std::string_view path)
{
    std::vector<std::string_view> parts;
    std::size_t i = 0;
    while (i <= path.size()) {
        auto slash = path.find('/', i);
        if (slash == std::string_view::npos) {
            slash = path.size();
        }
        auto part = path.substr(i, slash - i);
        if (part == "..") {
            if (parts.empty()) {
                return {};
            }
            parts.pop_back();
        } else if (!part.empty() && part != ".") {
            parts.push_back(part);
        }
        i = slash + 1;
    }
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) {
            out += '/';
        }
        out += p;
    }
    return out;
}

ResolvedTarget resolve_import(const ImportSpec& spec, const std::set<std::string>& file_index)
{
    if (spec.dynamic) {
        return ResolvedTarget::unresolved(unresolved_reason::Dynamic);
    }
    const std::string& s = spec.specifier;
    bool relative = s == "." || s == ".." || s.rfind("./", 0) == 0 || s.rfind("../", 0) == 0;
    if (relative) {
        std::string base = dirname(spec.importer);
        std::string joined = normalize_relative(base.empty() ? s : base + "/" + s);
        if (joined.empty()) {
            return ResolvedTarget::unresolved(unresolved_reason::OutsideProject);
        }
        for (const char* suffix : {"", ".js", ".json", "/index.js"}) {
            std::string candidate = joined + suffix;
            if (file_index.count(candidate) != 0) {
                if (candidate == spec.importer) {
                    return ResolvedTarget::unresolved(unresolved_reason::SelfImport);
                }
                return ResolvedTarget::internal(std::move(candidate));
            }
        }
        return ResolvedTarget::unresolved(unresolved_reason::NotFound);
    }
    if (s.empty()) {
        return ResolvedTarget::unresolved(unresolved_reason::NotFound);
    }
    if (s.front() == '/') {
        return ResolvedTarget::unresolved(unresolved_reason::Absolute);
    }
    auto first = s.find('/');
    if (s.front() == '@' && first != std::string::npos) {
        auto second = s.find('/', first + 1);
        return ResolvedTarget::external(s.substr(0, second));
    }
    return ResolvedTarget::external(s.substr(0, first));
}

FileDepGraph build_file_dep_graph(const std::vector<ModuleAst>& modules,
                                  const std::set<std::string>& file_index)
{
    FileDepGraph graph;
    for (const auto& m : modules) {
        graph.nodes.insert(m.path);
    }
    for (const auto& m : modules) {
        for (const auto& spec : extract_imports(m)) {
            auto target = resolve_import(spec, file_index);
            switch (target.kind) {
            case ResolvedTarget::Kind::Internal:
                graph.nodes.insert(target.value);
                graph.edges.emplace(m.path, target.value);
                break;
            case ResolvedTarget::Kind::External:
                graph.unresolved.push_back({m.path, spec.specifier, unresolved_reason::External});
                break;
            case ResolvedTarget::Kind::Unresolved:
                graph.unresolved.push_back({m.path, spec.specifier, target.value});
                break;
            }
        }
    }
    std::sort(graph.unresolved.begin(), graph.unresolved.end());
    graph.unresolved.erase(std::unique(graph.unresolved.begin(), graph.unresolved.end()),
                           graph.unresolved.end());
    return graph;
}

std::set<std::string> test_file_closure(const FileDepGraph& graph, const std::string& test_file)
{
    if (graph.nodes.count(test_file) == 0) {
        throw UnknownFile("not in the dependency graph: " + test_file);
    }
    std::set<std::string> seen{test_file};
    std::deque<std::string> work{test_file};
    while (!work.empty()) {
        std::string current = std::move(work.front());
        work.pop_front();
        for (auto it = graph.edges.lower_bound({current, std::string{}});
             it != graph.edges.end() && it->first == current; ++it) {
            if (seen.insert(it->second).second) {
                work.push_back(it->second);
            }
        }
    }
    return seen;
}

}  // namespace srt
