#include "srt/source_model.hpp"

#include <algorithm>
#include <array>

#include "lexer.hpp"

namespace srt {

using detail::Token;
using detail::TokenKind;

namespace {

using NodePtr = std::unique_ptr<AstNode>;

constexpr int kMaxDepth = 400;

struct ParseFailure {
    std::size_t offset;
    std::string message;
};

struct FunctionContext {
    bool async = false;
    bool generator = false;
};

int binary_precedence(const Token& t, bool no_in)
{
    if (t.kind == TokenKind::Identifier) {
        if (t.text == "instanceof") {
            return 8;
        }
        if (t.text == "in") {
            return no_in ? -1 : 8;
        }
        return -1;
    }
    if (t.kind != TokenKind::Punctuator) {
        return -1;
    }
    static const std::array<std::pair<std::string_view, int>, 22> table = {{
        {"??", 1},  {"||", 2},  {"&&", 3},  {"|", 4},   {"^", 5},   {"&", 6},
        {"==", 7},  {"!=", 7},  {"===", 7}, {"!==", 7}, {"<", 8},   {">", 8},
        {"<=", 8},  {">=", 8},  {"<<", 9},  {">>", 9},  {">>>", 9}, {"+", 10},
        {"-", 10},  {"*", 11},  {"/", 11},  {"%", 11},
    }};
    if (t.text == "**") {
        return 12;
    }
    for (const auto& [op, prec] : table) {
        if (t.text == op) {
            return prec;
        }
    }
    return -1;
}

bool is_assignment_operator(const Token& t)
{
    if (t.kind != TokenKind::Punctuator) {
        return false;
    }
    static constexpr std::array<std::string_view, 16> ops = {
        "=", "+=", "-=", "*=", "/=", "%=", "**=", "<<=", ">>=", ">>>=", "&=", "|=", "^=",
        "&&=", "||=", "?\?=",
    };
    return std::find(ops.begin(), ops.end(), t.text) != ops.end();
}

bool is_reserved_word(std::string_view s)
{
    static constexpr std::array<std::string_view, 36> words = {
        "break",  "case",   "catch",    "class",      "const",   "continue", "debugger",
        "default", "delete", "do",      "else",       "export",  "extends",  "finally",
        "for",    "function", "if",     "import",     "in",      "instanceof", "new",
        "return", "super",  "switch",   "this",       "throw",   "try",      "typeof",
        "var",    "void",   "while",    "with",       "null",    "true",     "false",
        "enum",
    };
    return std::find(words.begin(), words.end(), s) != words.end();
}

// String literal, or a template literal without substitutions.
bool is_static_specifier(const AstNode& arg)
{
    if (arg.kind == NodeKind::Literal) {
        return !arg.text.empty() && (arg.text.front() == '"' || arg.text.front() == '\'');
    }
    return arg.kind == NodeKind::Template && arg.children.empty();
}

std::string unquote(std::string_view raw)
{
    if (raw.size() >= 2 && (raw.front() == '"' || raw.front() == '\'')) {
        return std::string(raw.substr(1, raw.size() - 2));
    }
    return std::string(raw);
}

class Parser {
public:
    Parser(std::string_view source, std::vector<Token> tokens)
        : src_(source), toks_(std::move(tokens))
    {
    }

    NodePtr parse_program()
    {
        auto module = std::make_unique<AstNode>();
        module->kind = NodeKind::Module;
        module->span.begin_offset = 0;
        while (peek().kind != TokenKind::End) {
            add(*module, parse_statement());
        }
        module->span.end_offset = src_.size();
        return module;
    }

private:
    // ---- token helpers ----
    const Token& peek(std::size_t k = 0) const
    {
        return toks_[std::min(pos_ + k, toks_.size() - 1)];
    }
    const Token& next()
    {
        const Token& t = toks_[pos_];
        if (pos_ + 1 < toks_.size()) {
            ++pos_;
        }
        last_end_ = t.end;
        return t;
    }
    bool eat(std::string_view s)
    {
        if (peek().is(s)) {
            next();
            return true;
        }
        return false;
    }
    const Token& expect(std::string_view s)
    {
        if (!peek().is(s)) {
            fail(peek(), "expected '" + std::string(s) + "'");
        }
        return next();
    }
    [[noreturn]] void fail(const Token& t, std::string message) const
    {
        if (t.kind == TokenKind::End) {
            message += " but reached end of input";
        } else {
            message += " near '" + std::string(t.text) + "'";
        }
        throw ParseFailure{t.begin, std::move(message)};
    }

    NodePtr start(NodeKind kind, const Token& at, std::string text = {})
    {
        auto n = std::make_unique<AstNode>();
        n->kind = kind;
        n->text = std::move(text);
        n->span.begin_offset = at.begin;
        return n;
    }
    NodePtr start_at(NodeKind kind, std::size_t begin, std::string text = {})
    {
        auto n = std::make_unique<AstNode>();
        n->kind = kind;
        n->text = std::move(text);
        n->span.begin_offset = begin;
        return n;
    }
    NodePtr finish(NodePtr n)
    {
        n->span.end_offset = std::max(last_end_, n->span.begin_offset);
        return n;
    }
    static AstNode& add(AstNode& parent, NodePtr child)
    {
        parent.children.push_back(std::move(child));
        return *parent.children.back();
    }

    struct DepthGuard {
        explicit DepthGuard(Parser& p) : p_(p)
        {
            if (++p_.depth_ > kMaxDepth) {
                p_.fail(p_.peek(), "nesting too deep");
            }
        }
        ~DepthGuard() { --p_.depth_; }
        Parser& p_;
    };

    void consume_semicolon()
    {
        if (eat(";")) {
            return;
        }
        const Token& t = peek();
        if (t.is_punct("}") || t.kind == TokenKind::End || t.newline_before) {
            return;
        }
        fail(t, "expected ';'");
    }

    bool starts_expression(const Token& t) const
    {
        switch (t.kind) {
        case TokenKind::Identifier:
            return !(t.text == "in" || t.text == "of" || t.text == "instanceof");
        case TokenKind::Number:
        case TokenKind::String:
        case TokenKind::Template:
        case TokenKind::TemplateHead:
        case TokenKind::Regex:
        case TokenKind::PrivateName:
            return true;
        case TokenKind::Punctuator:
            return t.text == "(" || t.text == "[" || t.text == "{" || t.text == "!" ||
                   t.text == "~" || t.text == "+" || t.text == "-" || t.text == "++" ||
                   t.text == "--";
        default:
            return false;
        }
    }

    std::size_t matching_paren(std::size_t open) const
    {
        int depth = 0;
        for (std::size_t i = open; i < toks_.size(); ++i) {
            const Token& t = toks_[i];
            if (t.is_punct("(")) {
                ++depth;
            } else if (t.is_punct(")")) {
                if (--depth == 0) {
                    return i;
                }
            } else if (t.kind == TokenKind::End) {
                break;
            }
        }
        return toks_.size();
    }

    bool arrow_follows_parens(std::size_t open) const
    {
        auto close = matching_paren(open);
        return close + 1 < toks_.size() && toks_[close + 1].is_punct("=>") &&
               !toks_[close + 1].newline_before;
    }

    bool is_binding_identifier(const Token& t) const
    {
        return t.kind == TokenKind::Identifier && !is_reserved_word(t.text);
    }

    // ---- statements ----
    NodePtr parse_statement()
    {
        DepthGuard guard(*this);
        const Token& t = peek();
        if (t.is_punct("{")) {
            return parse_block();
        }
        if (t.is_punct(";")) {
            auto n = start(NodeKind::Statement, t, "empty");
            next();
            return finish(std::move(n));
        }
        if (t.kind == TokenKind::Identifier) {
            const auto& s = t.text;
            if (s == "var" || s == "const") {
                return parse_variable_statement();
            }
            if (s == "let" && (is_binding_identifier(peek(1)) || peek(1).is_punct("[") ||
                               peek(1).is_punct("{"))) {
                return parse_variable_statement();
            }
            if (s == "function") {
                return parse_function(NodeKind::FunctionDecl, t.begin, false);
            }
            if (s == "async" && peek(1).is_ident("function") && !peek(1).newline_before) {
                auto begin = next().begin;
                return parse_function(NodeKind::FunctionDecl, begin, true);
            }
            if (s == "class") {
                return parse_class(NodeKind::ClassDecl);
            }
            if (s == "if") {
                return parse_if();
            }
            if (s == "for") {
                return parse_for();
            }
            if (s == "while") {
                auto n = start(NodeKind::Statement, next(), "while");
                expect("(");
                add(*n, parse_expression(false));
                expect(")");
                add(*n, parse_statement());
                return finish(std::move(n));
            }
            if (s == "do") {
                auto n = start(NodeKind::Statement, next(), "do");
                add(*n, parse_statement());
                if (!peek().is_ident("while")) {
                    fail(peek(), "expected 'while'");
                }
                next();
                expect("(");
                add(*n, parse_expression(false));
                expect(")");
                eat(";");
                return finish(std::move(n));
            }
            if (s == "return" || s == "throw") {
                auto n = start(NodeKind::Statement, next(), std::string(s));
                if (!peek().is_punct(";") && !peek().is_punct("}") &&
                    peek().kind != TokenKind::End && !peek().newline_before) {
                    add(*n, parse_expression(false));
                } else if (s == "throw") {
                    fail(peek(), "expected expression after 'throw'");
                }
                consume_semicolon();
                return finish(std::move(n));
            }
            if (s == "break" || s == "continue") {
                auto n = start(NodeKind::Statement, next(), std::string(s));
                if (peek().kind == TokenKind::Identifier && !peek().newline_before &&
                    !is_reserved_word(peek().text)) {
                    const Token& label = next();
                    add(*n, finish(start(NodeKind::Identifier, label, std::string(label.text))));
                }
                consume_semicolon();
                return finish(std::move(n));
            }
            if (s == "try") {
                return parse_try();
            }
            if (s == "switch") {
                return parse_switch();
            }
            if (s == "debugger") {
                auto n = start(NodeKind::Statement, next(), "debugger");
                consume_semicolon();
                return finish(std::move(n));
            }
            if (s == "with") {
                auto n = start(NodeKind::Statement, next(), "with");
                expect("(");
                add(*n, parse_expression(false));
                expect(")");
                add(*n, parse_statement());
                return finish(std::move(n));
            }
            if (s == "import" && !peek(1).is_punct("(") && !peek(1).is_punct(".")) {
                return parse_import();
            }
            if (s == "export") {
                return parse_export();
            }
            if (peek(1).is_punct(":") && is_binding_identifier(t)) {
                auto n = start(NodeKind::Statement, t, "label");
                const Token& label = next();
                add(*n, finish(start(NodeKind::Identifier, label, std::string(label.text))));
                next();
                add(*n, parse_statement());
                return finish(std::move(n));
            }
        }
        auto n = start(NodeKind::Statement, t, "expr");
        add(*n, parse_expression(false));
        consume_semicolon();
        return finish(std::move(n));
    }

    NodePtr parse_block()
    {
        auto n = start(NodeKind::Block, expect("{"));
        while (!peek().is_punct("}")) {
            if (peek().kind == TokenKind::End) {
                fail(peek(), "expected '}'");
            }
            add(*n, parse_statement());
        }
        next();
        return finish(std::move(n));
    }

    NodePtr parse_variable_declaration(bool no_in)
    {
        const Token& kw = next();
        auto n = start(NodeKind::VariableDecl, kw, std::string(kw.text));
        do {
            auto decl = start(NodeKind::VariableDeclarator, peek());
            add(*decl, parse_binding_target());
            if (eat("=")) {
                add(*decl, parse_assignment(no_in));
            }
            add(*n, finish(std::move(decl)));
        } while (eat(","));
        return finish(std::move(n));
    }

    NodePtr parse_variable_statement()
    {
        auto n = parse_variable_declaration(false);
        consume_semicolon();
        n = finish(std::move(n));
        return n;
    }

    NodePtr parse_binding_target()
    {
        const Token& t = peek();
        if (t.is_punct("[")) {
            return parse_array_literal();
        }
        if (t.is_punct("{")) {
            return parse_object_literal();
        }
        if (!is_binding_identifier(t)) {
            fail(t, "expected binding name");
        }
        next();
        return finish(start(NodeKind::Identifier, t, std::string(t.text)));
    }

    NodePtr parse_binding_element()
    {
        const Token& t = peek();
        if (t.is_punct("...")) {
            auto n = start(NodeKind::Spread, next());
            add(*n, parse_binding_target());
            return finish(std::move(n));
        }
        auto target = parse_binding_target();
        if (peek().is_punct("=")) {
            auto n = start_at(NodeKind::Expression, target->span.begin_offset, "=");
            next();
            add(*n, std::move(target));
            add(*n, parse_assignment(false));
            return finish(std::move(n));
        }
        return target;
    }

    NodePtr parse_params()
    {
        auto n = start(NodeKind::Params, expect("("));
        while (!peek().is_punct(")")) {
            add(*n, parse_binding_element());
            if (!peek().is_punct(")")) {
                expect(",");
            }
        }
        next();
        return finish(std::move(n));
    }

    NodePtr parse_function_body(FunctionContext ctx)
    {
        auto saved = fn_;
        fn_ = ctx;
        auto body = parse_block();
        fn_ = saved;
        return body;
    }

    // `begin` is the offset of `async` when present, else of `function`.
    NodePtr parse_function(NodeKind kind, std::size_t begin, bool is_async)
    {
        bool anonymous_ok = allow_anonymous_decl_;
        allow_anonymous_decl_ = false;
        auto n = start_at(kind, begin);
        next();  // function
        if (is_async) {
            n->flags |= node_flags::Async;
        }
        if (eat("*")) {
            n->flags |= node_flags::Generator;
        }
        if (peek().kind == TokenKind::Identifier && !peek().is_punct("(")) {
            if (is_reserved_word(peek().text)) {
                fail(peek(), "expected function name");
            }
            n->text = std::string(next().text);
        } else if (kind == NodeKind::FunctionDecl && !anonymous_ok) {
            fail(peek(), "expected function name");
        }
        add(*n, parse_params());
        add(*n, parse_function_body({n->has(node_flags::Async), n->has(node_flags::Generator)}));
        return finish(std::move(n));
    }

    NodePtr parse_arrow(std::size_t begin, bool is_async)
    {
        auto n = start_at(NodeKind::ArrowFunction, begin);
        if (is_async) {
            n->flags |= node_flags::Async;
        }
        if (peek().is_punct("(")) {
            add(*n, parse_params());
        } else {
            const Token& p = next();
            auto params = start(NodeKind::Params, p);
            add(*params, finish(start(NodeKind::Identifier, p, std::string(p.text))));
            add(*n, finish(std::move(params)));
        }
        if (peek().newline_before) {
            fail(peek(), "line terminator before '=>'");
        }
        expect("=>");
        if (peek().is_punct("{")) {
            add(*n, parse_function_body({is_async, false}));
        } else {
            n->flags |= node_flags::ExpressionBody;
            auto saved = fn_;
            fn_ = {is_async, false};
            add(*n, parse_assignment(no_in_arrow_));
            fn_ = saved;
        }
        return finish(std::move(n));
    }

    NodePtr parse_class(NodeKind kind)
    {
        bool anonymous_ok = allow_anonymous_decl_;
        allow_anonymous_decl_ = false;
        auto n = start(kind, next());
        if (is_binding_identifier(peek()) && !peek().is_ident("extends")) {
            n->text = std::string(next().text);
        } else if (kind == NodeKind::ClassDecl && !anonymous_ok) {
            fail(peek(), "expected class name");
        }
        if (peek().is_ident("extends")) {
            auto heritage = start(NodeKind::Expression, next(), "extends");
            add(*heritage, parse_lhs_expression(true));
            add(*n, finish(std::move(heritage)));
        }
        auto body = start(NodeKind::ClassBody, expect("{"));
        while (!peek().is_punct("}")) {
            if (peek().kind == TokenKind::End) {
                fail(peek(), "expected '}'");
            }
            if (eat(";")) {
                continue;
            }
            add(*body, parse_class_member());
        }
        next();
        add(*n, finish(std::move(body)));
        return finish(std::move(n));
    }

    static bool is_key_start(const Token& t)
    {
        return t.kind == TokenKind::Identifier || t.kind == TokenKind::String ||
               t.kind == TokenKind::Number || t.kind == TokenKind::PrivateName ||
               t.is_punct("[");
    }

    // Modifier keyword (static/async/get/set) only when followed by a key.
    bool modifier_applies(bool allow_star) const
    {
        const Token& after = peek(1);
        if (after.newline_before && peek().is_ident("async")) {
            return false;
        }
        return is_key_start(after) || (allow_star && after.is_punct("*"));
    }

    // Parses a property key into `owner` (text, or a computed-key child).
    void parse_property_key(AstNode& owner)
    {
        const Token& t = peek();
        if (t.is_punct("[")) {
            next();
            owner.flags |= node_flags::Computed;
            add(owner, parse_assignment(false));
            expect("]");
            return;
        }
        if (!is_key_start(t)) {
            fail(t, "expected property name");
        }
        next();
        if (t.kind == TokenKind::String) {
            owner.text = unquote(t.text);
        } else if (t.kind == TokenKind::PrivateName) {
            owner.text = std::string(t.text);
        } else {
            owner.text = std::string(t.text);
        }
    }

    void parse_method_tail(AstNode& method)
    {
        add(method, parse_params());
        add(method, parse_function_body({method.has(node_flags::Async),
                                         method.has(node_flags::Generator)}));
    }

    NodePtr parse_class_member()
    {
        const Token& first = peek();
        auto member = start(NodeKind::ClassMethod, first);
        if (peek().is_ident("static")) {
            if (peek(1).is_punct("{")) {
                next();
                auto block = start(NodeKind::StaticBlock, first);
                auto saved = fn_;
                fn_ = {};
                auto inner = parse_block();
                fn_ = saved;
                for (auto& c : inner->children) {
                    add(*block, std::move(c));
                }
                return finish(std::move(block));
            }
            if (modifier_applies(true)) {
                next();
                member->flags |= node_flags::Static;
            }
        }
        if (peek().is_ident("async") && modifier_applies(true)) {
            next();
            member->flags |= node_flags::Async;
        }
        if (eat("*")) {
            member->flags |= node_flags::Generator;
        }
        if ((peek().is_ident("get") || peek().is_ident("set")) && modifier_applies(false)) {
            member->flags |= peek().text == "get" ? node_flags::Getter : node_flags::Setter;
            next();
        }
        parse_property_key(*member);
        if (peek().is_punct("(")) {
            parse_method_tail(*member);
            return finish(std::move(member));
        }
        member->kind = NodeKind::ClassField;
        if (eat("=")) {
            auto saved = fn_;
            fn_ = {};
            add(*member, parse_assignment(false));
            fn_ = saved;
        }
        consume_semicolon();
        return finish(std::move(member));
    }

    NodePtr parse_if()
    {
        auto n = start(NodeKind::Statement, next(), "if");
        expect("(");
        add(*n, parse_expression(false));
        expect(")");
        add(*n, parse_statement());
        if (peek().is_ident("else")) {
            next();
            add(*n, parse_statement());
        }
        return finish(std::move(n));
    }

    NodePtr parse_for()
    {
        auto n = start(NodeKind::Statement, next(), "for");
        if (peek().is_ident("await")) {
            next();
            n->flags |= node_flags::Async;
        }
        expect("(");
        NodePtr init;
        if (peek().is_punct(";")) {
            // no init
        } else if (peek().is_ident("var") || peek().is_ident("const") ||
                   (peek().is_ident("let") &&
                    (is_binding_identifier(peek(1)) || peek(1).is_punct("[") ||
                     peek(1).is_punct("{")))) {
            init = parse_variable_declaration(true);
        } else {
            init = parse_expression(true);
        }
        if (init && (peek().is_ident("of") || peek().is_ident("in"))) {
            n->text = peek().text == "of" ? "for-of" : "for-in";
            next();
            add(*n, std::move(init));
            add(*n, n->text == "for-of" ? parse_assignment(false) : parse_expression(false));
            expect(")");
            add(*n, parse_statement());
            return finish(std::move(n));
        }
        auto slot = [&](NodePtr e) {
            if (!e) {
                e = finish(start_at(NodeKind::Expression, last_end_, "none"));
            }
            add(*n, std::move(e));
        };
        slot(std::move(init));
        expect(";");
        slot(peek().is_punct(";") ? nullptr : parse_expression(false));
        expect(";");
        slot(peek().is_punct(")") ? nullptr : parse_expression(false));
        expect(")");
        add(*n, parse_statement());
        return finish(std::move(n));
    }

    NodePtr parse_try()
    {
        auto n = start(NodeKind::Statement, next(), "try");
        add(*n, parse_block());
        bool handled = false;
        if (peek().is_ident("catch")) {
            auto c = start(NodeKind::Statement, next(), "catch");
            if (eat("(")) {
                add(*c, parse_binding_target());
                expect(")");
            }
            add(*c, parse_block());
            add(*n, finish(std::move(c)));
            handled = true;
        }
        if (peek().is_ident("finally")) {
            auto f = start(NodeKind::Statement, next(), "finally");
            add(*f, parse_block());
            add(*n, finish(std::move(f)));
            handled = true;
        }
        if (!handled) {
            fail(peek(), "expected 'catch' or 'finally'");
        }
        return finish(std::move(n));
    }

    NodePtr parse_switch()
    {
        auto n = start(NodeKind::Statement, next(), "switch");
        expect("(");
        add(*n, parse_expression(false));
        expect(")");
        expect("{");
        while (!peek().is_punct("}")) {
            const Token& t = peek();
            NodePtr clause;
            if (t.is_ident("case")) {
                clause = start(NodeKind::Statement, next(), "case");
                add(*clause, parse_expression(false));
            } else if (t.is_ident("default")) {
                clause = start(NodeKind::Statement, next(), "default");
            } else {
                fail(t, "expected 'case' or 'default'");
            }
            expect(":");
            while (!peek().is_punct("}") && !peek().is_ident("case") &&
                   !peek().is_ident("default")) {
                if (peek().kind == TokenKind::End) {
                    fail(peek(), "expected '}'");
                }
                add(*clause, parse_statement());
            }
            add(*n, finish(std::move(clause)));
        }
        next();
        return finish(std::move(n));
    }

    NodePtr parse_module_specifier()
    {
        const Token& t = peek();
        if (t.kind != TokenKind::String) {
            fail(t, "expected module specifier string");
        }
        next();
        return finish(start(NodeKind::Literal, t, std::string(t.text)));
    }

    void parse_import_attributes(AstNode& owner)
    {
        if ((peek().is_ident("with") || peek().is_ident("assert")) && !peek().newline_before) {
            next();
            add(owner, parse_object_literal());
        }
    }

    NodePtr parse_named_specifiers()
    {
        auto list = start(NodeKind::Expression, expect("{"), "{}");
        while (!peek().is_punct("}")) {
            const Token& t = peek();
            if (t.kind != TokenKind::Identifier && t.kind != TokenKind::String) {
                fail(t, "expected import/export name");
            }
            auto spec = start(NodeKind::ImportSpecifier, t, unquote(next().text));
            if (peek().is_ident("as")) {
                next();
                const Token& alias = peek();
                if (alias.kind != TokenKind::Identifier && alias.kind != TokenKind::String) {
                    fail(alias, "expected alias");
                }
                spec->text += " as " + unquote(next().text);
            }
            add(*list, finish(std::move(spec)));
            if (!peek().is_punct("}")) {
                expect(",");
            }
        }
        next();
        return finish(std::move(list));
    }

    NodePtr parse_import()
    {
        auto n = start(NodeKind::ImportDecl, next());
        if (peek().kind != TokenKind::String) {
            if (is_binding_identifier(peek())) {
                const Token& t = next();
                add(*n, finish(start(NodeKind::ImportSpecifier, t, "default as " + std::string(t.text))));
                if (!eat(",")) {
                    goto from_clause;
                }
            }
            if (peek().is_punct("*")) {
                const Token& star = next();
                if (!peek().is_ident("as")) {
                    fail(peek(), "expected 'as'");
                }
                next();
                const Token& ns = next();
                auto spec = start(NodeKind::ImportSpecifier, star, "* as " + std::string(ns.text));
                add(*n, finish(std::move(spec)));
            } else if (peek().is_punct("{")) {
                add(*n, parse_named_specifiers());
            } else {
                fail(peek(), "expected import clause");
            }
        from_clause:
            if (!peek().is_ident("from")) {
                fail(peek(), "expected 'from'");
            }
            next();
        }
        auto spec = parse_module_specifier();
        n->text = unquote(spec->text);
        add(*n, std::move(spec));
        parse_import_attributes(*n);
        consume_semicolon();
        return finish(std::move(n));
    }

    NodePtr parse_export()
    {
        auto n = start(NodeKind::ExportDecl, next());
        const Token& t = peek();
        if (t.is_ident("default")) {
            next();
            n->text = "default";
            n->flags |= node_flags::Default;
            allow_anonymous_decl_ = true;
            if (peek().is_ident("function")) {
                add(*n, parse_function(NodeKind::FunctionDecl, peek().begin, false));
            } else if (peek().is_ident("async") && peek(1).is_ident("function") &&
                       !peek(1).newline_before) {
                auto begin = next().begin;
                add(*n, parse_function(NodeKind::FunctionDecl, begin, true));
            } else if (peek().is_ident("class")) {
                add(*n, parse_class(NodeKind::ClassDecl));
            } else {
                allow_anonymous_decl_ = false;
                add(*n, parse_assignment(false));
                consume_semicolon();
            }
            allow_anonymous_decl_ = false;
            return finish(std::move(n));
        }
        if (t.is_punct("*")) {
            const Token& star = next();
            n->text = "all-from";
            if (peek().is_ident("as")) {
                next();
                const Token& ns = next();
                add(*n, finish(start(NodeKind::ImportSpecifier, star, "* as " + std::string(ns.text))));
            }
            if (!peek().is_ident("from")) {
                fail(peek(), "expected 'from'");
            }
            next();
            add(*n, parse_module_specifier());
            parse_import_attributes(*n);
            consume_semicolon();
            return finish(std::move(n));
        }
        if (t.is_punct("{")) {
            add(*n, parse_named_specifiers());
            n->text = "named";
            if (peek().is_ident("from")) {
                next();
                n->text = "named-from";
                add(*n, parse_module_specifier());
                parse_import_attributes(*n);
            }
            consume_semicolon();
            return finish(std::move(n));
        }
        n->text = "decl";
        if (t.is_ident("var") || t.is_ident("let") || t.is_ident("const")) {
            add(*n, parse_variable_statement());
        } else if (t.is_ident("function")) {
            add(*n, parse_function(NodeKind::FunctionDecl, t.begin, false));
        } else if (t.is_ident("async") && peek(1).is_ident("function")) {
            auto begin = next().begin;
            add(*n, parse_function(NodeKind::FunctionDecl, begin, true));
        } else if (t.is_ident("class")) {
            add(*n, parse_class(NodeKind::ClassDecl));
        } else {
            fail(t, "unsupported export form");
        }
        return finish(std::move(n));
    }

    // ---- expressions ----
    NodePtr parse_expression(bool no_in)
    {
        DepthGuard guard(*this);
        auto first = parse_assignment(no_in);
        if (!peek().is_punct(",")) {
            return first;
        }
        auto seq = start_at(NodeKind::Expression, first->span.begin_offset, ",");
        add(*seq, std::move(first));
        while (eat(",")) {
            add(*seq, parse_assignment(no_in));
        }
        return finish(std::move(seq));
    }

    NodePtr parse_assignment(bool no_in)
    {
        DepthGuard guard(*this);
        const Token& t = peek();
        auto saved_no_in = no_in_arrow_;
        no_in_arrow_ = no_in;
        struct Restore {
            bool& slot;
            bool value;
            ~Restore() { slot = value; }
        } restore{no_in_arrow_, saved_no_in};

        if (t.kind == TokenKind::Identifier) {
            if (t.text == "async" && !peek(1).newline_before) {
                if (is_binding_identifier(peek(1)) && peek(2).is_punct("=>")) {
                    auto begin = next().begin;
                    return parse_arrow(begin, true);
                }
                if (peek(1).is_punct("(") && arrow_follows_parens(pos_ + 1)) {
                    auto begin = next().begin;
                    return parse_arrow(begin, true);
                }
            }
            if (is_binding_identifier(t) && peek(1).is_punct("=>")) {
                return parse_arrow(t.begin, false);
            }
            if (t.text == "yield" && fn_.generator) {
                auto n = start(NodeKind::Expression, next(), "yield");
                if (eat("*")) {
                    n->text = "yield*";
                }
                if (!peek().newline_before && starts_expression(peek())) {
                    add(*n, parse_assignment(no_in));
                }
                return finish(std::move(n));
            }
        }
        if (t.is_punct("(") && arrow_follows_parens(pos_)) {
            return parse_arrow(t.begin, false);
        }

        auto left = parse_conditional(no_in);
        if (is_assignment_operator(peek())) {
            auto n = start_at(NodeKind::Expression, left->span.begin_offset, std::string(next().text));
            add(*n, std::move(left));
            add(*n, parse_assignment(no_in));
            return finish(std::move(n));
        }
        return left;
    }

    NodePtr parse_conditional(bool no_in)
    {
        auto test = parse_binary(0, no_in);
        if (!peek().is_punct("?")) {
            return test;
        }
        next();
        auto n = start_at(NodeKind::Expression, test->span.begin_offset, "?:");
        add(*n, std::move(test));
        add(*n, parse_assignment(false));
        expect(":");
        add(*n, parse_assignment(no_in));
        return finish(std::move(n));
    }

    NodePtr parse_binary(int min_prec, bool no_in)
    {
        DepthGuard guard(*this);
        auto left = parse_unary();
        for (;;) {
            int prec = binary_precedence(peek(), no_in);
            if (prec < 0 || prec < min_prec) {
                return left;
            }
            std::string op(next().text);
            // `**` is right-associative
            int next_min = op == "**" ? prec : prec + 1;
            auto right = parse_binary(next_min, no_in);
            auto n = start_at(NodeKind::Expression, left->span.begin_offset, op);
            add(*n, std::move(left));
            add(*n, std::move(right));
            left = finish(std::move(n));
        }
    }

    NodePtr parse_unary()
    {
        DepthGuard guard(*this);
        const Token& t = peek();
        bool unary_punct = t.kind == TokenKind::Punctuator &&
                           (t.text == "!" || t.text == "~" || t.text == "+" || t.text == "-");
        bool unary_word = t.kind == TokenKind::Identifier &&
                          (t.text == "typeof" || t.text == "void" || t.text == "delete");
        bool await_op = t.is_ident("await") && starts_expression(peek(1)) && !peek(1).is_ident("of");
        if (unary_punct || unary_word || await_op) {
            auto n = start(NodeKind::Expression, next(), std::string(t.text));
            add(*n, parse_unary());
            return finish(std::move(n));
        }
        if (t.is_punct("++") || t.is_punct("--")) {
            auto n = start(NodeKind::Expression, next(), "pre" + std::string(t.text));
            add(*n, parse_unary());
            return finish(std::move(n));
        }
        auto e = parse_lhs_expression(true);
        if ((peek().is_punct("++") || peek().is_punct("--")) && !peek().newline_before) {
            auto n = start_at(NodeKind::Expression, e->span.begin_offset, "post" + std::string(next().text));
            add(*n, std::move(e));
            return finish(std::move(n));
        }
        return e;
    }

    NodePtr parse_arguments(NodePtr call)
    {
        expect("(");
        while (!peek().is_punct(")")) {
            if (peek().is_punct("...")) {
                auto s = start(NodeKind::Spread, next());
                add(*s, parse_assignment(false));
                add(*call, finish(std::move(s)));
            } else {
                add(*call, parse_assignment(false));
            }
            if (!peek().is_punct(")")) {
                expect(",");
            }
        }
        next();
        return call;
    }

    NodePtr make_call(NodePtr callee, bool optional)
    {
        auto call = start_at(NodeKind::CallExpr, callee->span.begin_offset);
        if (optional) {
            call->flags |= node_flags::Optional;
        }
        bool is_require = callee->kind == NodeKind::Identifier && callee->text == "require";
        add(*call, std::move(callee));
        call = parse_arguments(std::move(call));
        if (is_require && call->children.size() == 2 && call->children[1]->kind != NodeKind::Spread) {
            // RequireCall keeps only its argument
            call->kind = NodeKind::RequireCall;
            call->children.erase(call->children.begin());
            if (!is_static_specifier(*call->children[0])) {
                call->flags |= node_flags::Dynamic;
            }
        }
        return finish(std::move(call));
    }

    NodePtr parse_member_name(NodePtr object, std::string op)
    {
        const Token& name = peek();
        if (name.kind != TokenKind::Identifier && name.kind != TokenKind::PrivateName) {
            fail(name, "expected property name");
        }
        next();
        auto n = start_at(NodeKind::Expression, object->span.begin_offset, std::move(op));
        add(*n, std::move(object));
        add(*n, finish(start(NodeKind::Identifier, name, std::string(name.text))));
        return finish(std::move(n));
    }

    NodePtr parse_lhs_expression(bool allow_calls = false)
    {
        DepthGuard guard(*this);
        NodePtr e;
        if (peek().is_ident("new")) {
            e = parse_new();
        } else {
            e = parse_primary();
        }
        for (;;) {
            const Token& t = peek();
            if (t.is_punct(".")) {
                next();
                e = parse_member_name(std::move(e), ".");
            } else if (t.is_punct("?.")) {
                next();
                if (peek().is_punct("(")) {
                    e = make_call(std::move(e), true);
                } else if (peek().is_punct("[")) {
                    next();
                    auto n = start_at(NodeKind::Expression, e->span.begin_offset, "?.[]");
                    add(*n, std::move(e));
                    add(*n, parse_expression(false));
                    expect("]");
                    e = finish(std::move(n));
                } else {
                    e = parse_member_name(std::move(e), "?.");
                }
            } else if (t.is_punct("[")) {
                next();
                auto n = start_at(NodeKind::Expression, e->span.begin_offset, "[]");
                add(*n, std::move(e));
                add(*n, parse_expression(false));
                expect("]");
                e = finish(std::move(n));
            } else if (t.is_punct("(") && allow_calls) {
                e = make_call(std::move(e), false);
            } else if (t.kind == TokenKind::Template || t.kind == TokenKind::TemplateHead) {
                auto n = start_at(NodeKind::Expression, e->span.begin_offset, "tagged");
                add(*n, std::move(e));
                add(*n, parse_template());
                e = finish(std::move(n));
            } else {
                return e;
            }
        }
    }

    NodePtr parse_new()
    {
        const Token& kw = next();
        auto n = start(NodeKind::Expression, kw, "new");
        if (peek().is_punct(".")) {
            next();
            const Token& prop = next();
            n->text = "new." + std::string(prop.text);
            return finish(std::move(n));
        }
        add(*n, parse_lhs_expression(false));
        if (peek().is_punct("(")) {
            n = parse_arguments(std::move(n));
        }
        return finish(std::move(n));
    }

    NodePtr parse_template()
    {
        const Token& head = next();
        auto n = start(NodeKind::Template, head, std::string(head.text));
        if (head.kind == TokenKind::Template) {
            return finish(std::move(n));
        }
        for (;;) {
            add(*n, parse_expression(false));
            const Token& part = peek();
            if (part.kind == TokenKind::TemplateMiddle) {
                n->text += next().text;
            } else if (part.kind == TokenKind::TemplateTail) {
                n->text += next().text;
                return finish(std::move(n));
            } else {
                fail(part, "expected template continuation");
            }
        }
    }

    NodePtr parse_array_literal()
    {
        auto n = start(NodeKind::Expression, expect("["), "[]");
        while (!peek().is_punct("]")) {
            if (peek().is_punct(",")) {
                add(*n, finish(start(NodeKind::Expression, next(), "hole")));
                continue;
            }
            if (peek().is_punct("...")) {
                auto s = start(NodeKind::Spread, next());
                add(*s, parse_assignment(false));
                add(*n, finish(std::move(s)));
            } else {
                add(*n, parse_assignment(false));
            }
            if (!peek().is_punct("]")) {
                expect(",");
            }
        }
        next();
        return finish(std::move(n));
    }

    NodePtr parse_object_literal()
    {
        auto n = start(NodeKind::Expression, expect("{"), "{}");
        while (!peek().is_punct("}")) {
            add(*n, parse_object_member());
            if (!peek().is_punct("}")) {
                expect(",");
            }
        }
        next();
        return finish(std::move(n));
    }

    NodePtr parse_object_member()
    {
        const Token& first = peek();
        if (first.is_punct("...")) {
            auto s = start(NodeKind::Spread, next());
            add(*s, parse_assignment(false));
            return finish(std::move(s));
        }
        auto member = start(NodeKind::ObjectMethod, first);
        if (peek().is_ident("async") && modifier_applies(true)) {
            next();
            member->flags |= node_flags::Async;
        }
        if (eat("*")) {
            member->flags |= node_flags::Generator;
        }
        if ((peek().is_ident("get") || peek().is_ident("set")) && modifier_applies(false)) {
            member->flags |= peek().text == "get" ? node_flags::Getter : node_flags::Setter;
            next();
        }
        const Token& key_tok = peek();
        parse_property_key(*member);
        if (peek().is_punct("(")) {
            parse_method_tail(*member);
            return finish(std::move(member));
        }
        if (member->has(node_flags::Async | node_flags::Generator | node_flags::Getter |
                        node_flags::Setter)) {
            fail(peek(), "expected '('");
        }
        member->kind = NodeKind::Property;
        if (eat(":")) {
            add(*member, parse_assignment(false));
            return finish(std::move(member));
        }
        if (member->has(node_flags::Computed) || key_tok.kind != TokenKind::Identifier) {
            fail(peek(), "expected ':'");
        }
        member->flags |= node_flags::Shorthand;
        if (eat("=")) {
            add(*member, parse_assignment(false));
        }
        return finish(std::move(member));
    }

    NodePtr parse_primary()
    {
        DepthGuard guard(*this);
        const Token& t = peek();
        switch (t.kind) {
        case TokenKind::Number:
        case TokenKind::String:
        case TokenKind::Regex:
            next();
            return finish(start(NodeKind::Literal, t, std::string(t.text)));
        case TokenKind::Template:
        case TokenKind::TemplateHead:
            return parse_template();
        case TokenKind::PrivateName:
            next();
            return finish(start(NodeKind::Identifier, t, std::string(t.text)));
        case TokenKind::Identifier: {
            const auto& s = t.text;
            if (s == "function") {
                return parse_function(NodeKind::FunctionExpr, t.begin, false);
            }
            if (s == "async" && peek(1).is_ident("function") && !peek(1).newline_before) {
                auto begin = next().begin;
                return parse_function(NodeKind::FunctionExpr, begin, true);
            }
            if (s == "class") {
                return parse_class(NodeKind::ClassExpr);
            }
            if (s == "import") {
                next();
                if (peek().is_punct(".")) {
                    next();
                    const Token& prop = next();
                    return finish(start(NodeKind::Expression, t, "import." + std::string(prop.text)));
                }
                auto n = start(NodeKind::ImportCall, t);
                expect("(");
                add(*n, parse_assignment(false));
                if (eat(",")) {
                    if (!peek().is_punct(")")) {
                        add(*n, parse_assignment(false));
                        eat(",");
                    }
                }
                expect(")");
                if (!is_static_specifier(*n->children[0])) {
                    n->flags |= node_flags::Dynamic;
                }
                return finish(std::move(n));
            }
            if (s == "true" || s == "false" || s == "null") {
                next();
                return finish(start(NodeKind::Literal, t, std::string(s)));
            }
            if (is_reserved_word(s) && s != "this" && s != "super") {
                fail(t, "unexpected keyword");
            }
            next();
            return finish(start(NodeKind::Identifier, t, std::string(s)));
        }
        case TokenKind::Punctuator:
            if (t.text == "(") {
                auto n = start(NodeKind::Expression, next(), "()");
                add(*n, parse_expression(false));
                expect(")");
                return finish(std::move(n));
            }
            if (t.text == "[") {
                return parse_array_literal();
            }
            if (t.text == "{") {
                return parse_object_literal();
            }
            break;
        default:
            break;
        }
        fail(t, "unexpected token");
    }

    std::string_view src_;
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::size_t last_end_ = 0;
    int depth_ = 0;
    FunctionContext fn_{};
    bool no_in_arrow_ = false;
    bool allow_anonymous_decl_ = false;
};

void link(AstNode& node, const ModuleAst& m)
{
    node.span.start = m.position_of(node.span.begin_offset);
    node.span.end = node.span.end_offset > node.span.begin_offset
                        ? m.position_of(node.span.end_offset - 1)
                        : node.span.start;
    for (auto& child : node.children) {
        child->parent = &node;
        link(*child, m);
    }
}

}  // namespace

ParseError::ParseError(std::string path, SourcePos pos, const std::string& message)
    : std::runtime_error(path + ":" + std::to_string(pos.line) + ":" + std::to_string(pos.col) +
                         ": " + message),
      path_(std::move(path)),
      pos_(pos),
      detail_(message)
{
}

std::size_t ModuleAst::line_length(int line) const
{
    if (line < 1 || line > line_count()) {
        return 0;
    }
    std::size_t begin = line_starts[static_cast<std::size_t>(line - 1)];
    std::size_t end = line < line_count() ? line_starts[static_cast<std::size_t>(line)] : source.size();
    while (end > begin && (source[end - 1] == '\n' || source[end - 1] == '\r')) {
        --end;
    }
    return end - begin;
}

SourcePos ModuleAst::position_of(std::size_t offset) const
{
    auto it = std::upper_bound(line_starts.begin(), line_starts.end(), offset);
    auto line = static_cast<int>(it - line_starts.begin());
    return {line, static_cast<int>(offset - line_starts[static_cast<std::size_t>(line - 1)])};
}

ModuleAst parse_module(std::string source_text, std::string path)
{
    ModuleAst m;
    m.path = std::move(path);
    m.source = std::move(source_text);
    m.source_hash = content_hash(m.source);
    m.line_starts.push_back(0);
    for (std::size_t i = 0; i < m.source.size(); ++i) {
        char c = m.source[i];
        if (c == '\r' && i + 1 < m.source.size() && m.source[i + 1] == '\n') {
            continue;
        }
        if ((c == '\n' || c == '\r') && i + 1 < m.source.size()) {
            m.line_starts.push_back(i + 1);
        }
    }

    std::vector<Token> tokens;
    detail::LexError lex_error;
    detail::Lexer lexer(m.source);
    if (!lexer.tokenize(tokens, lex_error)) {
        throw ParseError(m.path, m.position_of(lex_error.offset), lex_error.message);
    }
    try {
        Parser parser(m.source, std::move(tokens));
        m.root = parser.parse_program();
    } catch (const ParseFailure& f) {
        throw ParseError(m.path, m.position_of(std::min(f.offset, m.source.size())), f.message);
    }
    link(*m.root, m);
    return m;
}

}  // namespace srt
