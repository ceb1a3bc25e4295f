#pragma once

// Parsing of the supported JavaScript subset, function enumeration and
// stable function identities.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace srt {

/// 1-based line, 0-based byte column.
struct SourcePos {
    int line = 1;
    int col = 0;

    friend bool operator==(const SourcePos&, const SourcePos&) = default;
    friend auto operator<=>(const SourcePos&, const SourcePos&) = default;
};

/// Inclusive span: `end` is the position of the last character. Byte offsets
/// are half-open `[begin_offset, end_offset)`.
struct SourceSpan {
    SourcePos start;
    SourcePos end;
    std::size_t begin_offset = 0;
    std::size_t end_offset = 0;

    bool contains(SourcePos p) const { return start <= p && p <= end; }
    bool covers_line(int line) const { return start.line <= line && line <= end.line; }
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::string path, SourcePos pos, const std::string& message);

    const std::string& path() const { return path_; }
    SourcePos pos() const { return pos_; }
    const std::string& detail() const { return detail_; }

private:
    std::string path_;
    SourcePos pos_;
    std::string detail_;
};

class OutOfRange : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

enum class NodeKind : std::uint8_t {
    // Spec-level kinds.
    Module,
    ImportDecl,
    ExportDecl,
    RequireCall,
    FunctionDecl,
    FunctionExpr,
    ArrowFunction,
    ClassDecl,
    ClassExpr,
    ClassMethod,
    ObjectMethod,
    VariableDecl,
    CallExpr,
    // Structure below function/class level.
    Params,
    ClassBody,
    ClassField,
    StaticBlock,
    VariableDeclarator,
    ImportSpecifier,
    ImportCall,
    Statement,
    Block,
    Identifier,
    Literal,
    Template,
    Expression,
    Property,
    Spread,
};

/// Coarse category name used in dumps ("statement", "expression", ...).
std::string_view kind_name(NodeKind kind);

bool is_function_like(NodeKind kind);

namespace node_flags {
inline constexpr std::uint16_t Async = 1u << 0;
inline constexpr std::uint16_t Generator = 1u << 1;
inline constexpr std::uint16_t Static = 1u << 2;
inline constexpr std::uint16_t Getter = 1u << 3;
inline constexpr std::uint16_t Setter = 1u << 4;
inline constexpr std::uint16_t Computed = 1u << 5;
inline constexpr std::uint16_t ExpressionBody = 1u << 6;
inline constexpr std::uint16_t Shorthand = 1u << 7;
inline constexpr std::uint16_t Dynamic = 1u << 8;
inline constexpr std::uint16_t Optional = 1u << 9;
inline constexpr std::uint16_t Default = 1u << 10;
}  // namespace node_flags

/// Tree node. `text` carries the form-specific payload: identifier names,
/// literal source, operators, statement keywords, property keys, or the own
/// name of a declaration.
///
/// Function-like nodes always end with two children: a Params node and the
/// body (a Block, or an expression when ExpressionBody is set). A computed
/// method key precedes them.
struct AstNode {
    NodeKind kind = NodeKind::Expression;
    std::string text;
    std::uint16_t flags = 0;
    SourceSpan span;
    AstNode* parent = nullptr;
    std::vector<std::unique_ptr<AstNode>> children;

    bool has(std::uint16_t f) const { return (flags & f) != 0; }
    const AstNode* params() const;
    const AstNode* body() const;
};

struct ModuleAst {
    std::string path;
    std::string source;
    std::string source_hash;
    std::vector<std::size_t> line_starts;
    std::unique_ptr<AstNode> root;

    int line_count() const { return static_cast<int>(line_starts.size()); }
    /// Length in bytes of `line` excluding its terminator.
    std::size_t line_length(int line) const;
    SourcePos position_of(std::size_t offset) const;
};

struct FunctionId {
    std::string file;
    std::vector<std::string> name_chain;

    /// `file::A.B.C`
    std::string display() const;

    friend bool operator==(const FunctionId&, const FunctionId&) = default;
    friend auto operator<=>(const FunctionId&, const FunctionId&) = default;
};

enum class FunctionKind : std::uint8_t { Declaration, Expression, Arrow, Method, Constructor };

std::string_view to_string(FunctionKind kind);

struct FunctionRecord {
    FunctionId id;
    SourceSpan span;
    int param_count = 0;
    FunctionKind kind = FunctionKind::Declaration;
    /// Owned by the ModuleAst the record was enumerated from.
    const AstNode* node = nullptr;
};

/// Parses `source_text`. Throws ParseError for input outside the supported
/// subset or syntactically invalid input.
ModuleAst parse_module(std::string source_text, std::string path);

/// All function-like entities in source order.
std::vector<FunctionRecord> enumerate_functions(const ModuleAst& ast);

/// Innermost function containing the position, or nullopt for code outside
/// every function. Throws OutOfRange for positions past the file extent.
std::optional<FunctionId> function_at(const ModuleAst& ast, int line, int col);

/// Structural equality ignoring spans, whitespace and comments.
bool structurally_equal(const AstNode& a, const AstNode& b);

/// Structural equality of the code owned directly by `a` and `b`: nested
/// function bodies are compared by kind and own name only.
bool own_structure_equal(const AstNode& a, const AstNode& b);

/// S-expression dump for debugging and golden tests.
std::string dump_ast(const AstNode& node);

std::string content_hash(std::string_view text);

}  // namespace srt
