#include <algorithm>
#include <map>
#include <sstream>

#include <openssl/evp.h>

#include "srt/source_model.hpp"

namespace srt {

std::string_view kind_name(NodeKind kind)
{
    switch (kind) {
    case NodeKind::Module: return "module";
    case NodeKind::ImportDecl: return "import-decl";
    case NodeKind::ExportDecl: return "export-decl";
    case NodeKind::RequireCall: return "require-call";
    case NodeKind::FunctionDecl: return "function-decl";
    case NodeKind::FunctionExpr: return "function-expr";
    case NodeKind::ArrowFunction: return "arrow-function";
    case NodeKind::ClassDecl: return "class-decl";
    case NodeKind::ClassExpr: return "class-expr";
    case NodeKind::ClassMethod: return "class-method";
    case NodeKind::ObjectMethod: return "object-method";
    case NodeKind::VariableDecl: return "variable-decl";
    case NodeKind::CallExpr: return "call-expr";
    case NodeKind::Params: return "params";
    case NodeKind::ClassBody: return "class-body";
    case NodeKind::ClassField: return "class-field";
    case NodeKind::StaticBlock: return "static-block";
    case NodeKind::VariableDeclarator: return "variable-declarator";
    case NodeKind::ImportSpecifier: return "import-specifier";
    case NodeKind::ImportCall: return "import-call";
    case NodeKind::Statement: return "statement";
    case NodeKind::Block: return "block";
    case NodeKind::Identifier: return "identifier";
    case NodeKind::Literal: return "literal";
    case NodeKind::Template: return "template";
    case NodeKind::Expression: return "expression";
    case NodeKind::Property: return "property";
    case NodeKind::Spread: return "spread";
    }
    return "unknown";
}

bool is_function_like(NodeKind kind)
{
    return kind == NodeKind::FunctionDecl || kind == NodeKind::FunctionExpr ||
           kind == NodeKind::ArrowFunction || kind == NodeKind::ClassMethod ||
           kind == NodeKind::ObjectMethod;
}

namespace {

bool is_class(NodeKind kind)
{
    return kind == NodeKind::ClassDecl || kind == NodeKind::ClassExpr;
}

}  // namespace

const AstNode* AstNode::params() const
{
    if (!is_function_like(kind) || children.size() < 2) {
        return nullptr;
    }
    return children[children.size() - 2].get();
}

const AstNode* AstNode::body() const
{
    if (!is_function_like(kind) || children.size() < 2) {
        return nullptr;
    }
    return children.back().get();
}

std::string_view to_string(FunctionKind kind)
{
    switch (kind) {
    case FunctionKind::Declaration: return "declaration";
    case FunctionKind::Expression: return "expression";
    case FunctionKind::Arrow: return "arrow";
    case FunctionKind::Method: return "method";
    case FunctionKind::Constructor: return "constructor";
    }
    return "unknown";
}

std::string FunctionId::display() const
{
    std::string out = file + "::";
    for (std::size_t i = 0; i < name_chain.size(); ++i) {
        if (i > 0) {
            out += '.';
        }
        out += name_chain[i];
    }
    return out;
}

std::string content_hash(std::string_view text)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    EVP_Digest(text.data(), text.size(), digest, &length, EVP_sha256(), nullptr);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(length * 2);
    for (unsigned int i = 0; i < length; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

namespace {

const AstNode* skip_parens_upward(const AstNode*& node)
{
    const AstNode* parent = node->parent;
    while (parent != nullptr && parent->kind == NodeKind::Expression && parent->text == "()") {
        node = parent;
        parent = parent->parent;
    }
    return parent;
}

// Name a function or class expression takes from the slot it is bound to.
std::string binding_name(const AstNode& node)
{
    const AstNode* self = &node;
    const AstNode* parent = skip_parens_upward(self);
    if (parent == nullptr) {
        return {};
    }
    auto is_value = [&](std::size_t index) {
        return parent->children.size() > index && parent->children[index].get() == self;
    };
    switch (parent->kind) {
    case NodeKind::VariableDeclarator:
        if (is_value(1) && parent->children[0]->kind == NodeKind::Identifier) {
            return parent->children[0]->text;
        }
        return {};
    case NodeKind::Property:
    case NodeKind::ClassField:
        if (!parent->has(node_flags::Computed) && parent->children.back().get() == self) {
            return parent->text;
        }
        return {};
    case NodeKind::ExportDecl:
        return parent->has(node_flags::Default) ? "default" : std::string{};
    case NodeKind::Expression: {
        bool assignment = parent->text == "=" || parent->text == "||=" ||
                          parent->text == "&&=" || parent->text == "?\?=";
        if (!assignment || !is_value(1)) {
            return {};
        }
        const AstNode& target = *parent->children[0];
        if (target.kind == NodeKind::Identifier) {
            return target.text;
        }
        if (target.kind == NodeKind::Expression && (target.text == "." || target.text == "?.") &&
            target.children.size() == 2) {
            return target.children[1]->text;
        }
        return {};
    }
    default:
        return {};
    }
}

// Scope segment for a function-like or class node; empty means anonymous.
std::string segment_name(const AstNode& node)
{
    switch (node.kind) {
    case NodeKind::FunctionDecl:
    case NodeKind::ClassDecl:
        if (node.text.empty() && node.parent != nullptr &&
            node.parent->kind == NodeKind::ExportDecl) {
            return "default";
        }
        return node.text;
    case NodeKind::ClassMethod:
    case NodeKind::ObjectMethod:
        if (node.has(node_flags::Computed)) {
            return {};
        }
        if (node.has(node_flags::Getter)) {
            return "get_" + node.text;
        }
        if (node.has(node_flags::Setter)) {
            return "set_" + node.text;
        }
        return node.text;
    case NodeKind::FunctionExpr:
    case NodeKind::ArrowFunction:
    case NodeKind::ClassExpr: {
        auto bound = binding_name(node);
        return bound.empty() ? node.text : bound;
    }
    default:
        return {};
    }
}

FunctionKind function_kind(const AstNode& node)
{
    switch (node.kind) {
    case NodeKind::FunctionDecl: return FunctionKind::Declaration;
    case NodeKind::FunctionExpr: return FunctionKind::Expression;
    case NodeKind::ArrowFunction: return FunctionKind::Arrow;
    default:
        if (node.kind == NodeKind::ClassMethod && node.text == "constructor" &&
            !node.has(node_flags::Static) && !node.has(node_flags::Computed)) {
            return FunctionKind::Constructor;
        }
        return FunctionKind::Method;
    }
}

struct Scope {
    std::vector<std::string> chain;
    int anonymous = 0;
    std::map<std::string, int> seen;
};

void collect(const AstNode& node, const std::string& file, std::vector<Scope>& scopes,
             std::vector<FunctionRecord>& out)
{
    bool opens_scope = is_function_like(node.kind) || is_class(node.kind);
    if (!opens_scope) {
        for (const auto& child : node.children) {
            collect(*child, file, scopes, out);
        }
        return;
    }
    Scope& scope = scopes.back();
    std::string name = segment_name(node);
    std::string segment;
    if (name.empty()) {
        segment = "<anon#" + std::to_string(++scope.anonymous) + ">";
    } else {
        int count = ++scope.seen[name];
        segment = count == 1 ? name : name + "#" + std::to_string(count);
    }
    Scope inner;
    inner.chain = scope.chain;
    inner.chain.push_back(segment);
    if (is_function_like(node.kind)) {
        FunctionRecord record;
        record.id = {file, inner.chain};
        record.span = node.span;
        record.param_count = static_cast<int>(node.params()->children.size());
        record.kind = function_kind(node);
        record.node = &node;
        out.push_back(std::move(record));
    }
    scopes.push_back(std::move(inner));
    for (const auto& child : node.children) {
        collect(*child, file, scopes, out);
    }
    scopes.pop_back();
}

bool equal_nodes(const AstNode& a, const AstNode& b, bool abstract_nested)
{
    if (a.kind != b.kind || a.text != b.text || a.flags != b.flags ||
        a.children.size() != b.children.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.children.size(); ++i) {
        const AstNode& ca = *a.children[i];
        const AstNode& cb = *b.children[i];
        if (abstract_nested && is_function_like(ca.kind)) {
            if (ca.kind != cb.kind || ca.text != cb.text || ca.flags != cb.flags) {
                return false;
            }
            continue;
        }
        if (!equal_nodes(ca, cb, abstract_nested)) {
            return false;
        }
    }
    return true;
}

void dump(const AstNode& node, std::ostringstream& os)
{
    os << '(' << kind_name(node.kind);
    if (!node.text.empty()) {
        os << ' ' << node.text;
    }
    for (const auto& child : node.children) {
        os << ' ';
        dump(*child, os);
    }
    os << ')';
}

}  // namespace

std::vector<FunctionRecord> enumerate_functions(const ModuleAst& ast)
{
    std::vector<FunctionRecord> out;
    if (!ast.root) {
        return out;
    }
    std::vector<Scope> scopes(1);
    collect(*ast.root, ast.path, scopes, out);
    return out;
}

std::optional<FunctionId> function_at(const ModuleAst& ast, int line, int col)
{
    if (line < 1 || line > ast.line_count() || col < 0 ||
        static_cast<std::size_t>(col) > ast.line_length(line)) {
        throw OutOfRange(ast.path + ": position " + std::to_string(line) + ":" +
                         std::to_string(col) + " is outside the file");
    }
    SourcePos pos{line, col};
    const AstNode* node = ast.root.get();
    const AstNode* innermost = nullptr;
    // Spans of siblings are disjoint, so at most one child contains the position.
    while (node != nullptr) {
        const AstNode* next = nullptr;
        for (const auto& child : node->children) {
            if (child->span.end_offset > child->span.begin_offset && child->span.contains(pos)) {
                next = child.get();
                break;
            }
        }
        if (next != nullptr && is_function_like(next->kind)) {
            innermost = next;
        }
        node = next;
    }
    if (innermost == nullptr) {
        return std::nullopt;
    }
    for (auto& record : enumerate_functions(ast)) {
        if (record.node == innermost) {
            return std::move(record.id);
        }
    }
    return std::nullopt;
}

bool structurally_equal(const AstNode& a, const AstNode& b)
{
    return equal_nodes(a, b, false);
}

bool own_structure_equal(const AstNode& a, const AstNode& b)
{
    return equal_nodes(a, b, true);
}

std::string dump_ast(const AstNode& node)
{
    std::ostringstream os;
    dump(node, os);
    return os.str();
}

}  // namespace srt
