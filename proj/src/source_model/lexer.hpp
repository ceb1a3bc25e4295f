#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace srt::detail {

enum class TokenKind {
    Identifier,  // includes keywords; the parser decides by text
    PrivateName,
    Punctuator,
    Number,
    String,
    Template,      // `...` without substitutions
    TemplateHead,  // `...${
    TemplateMiddle,
    TemplateTail,
    Regex,
    End,
};

struct Token {
    TokenKind kind = TokenKind::End;
    std::string_view text;
    std::size_t begin = 0;
    std::size_t end = 0;
    bool newline_before = false;

    bool is(std::string_view s) const
    {
        return (kind == TokenKind::Punctuator || kind == TokenKind::Identifier) && text == s;
    }
    bool is_punct(std::string_view s) const { return kind == TokenKind::Punctuator && text == s; }
    bool is_ident(std::string_view s) const { return kind == TokenKind::Identifier && text == s; }
};

struct LexError {
    std::size_t offset;
    std::string message;
};

/// Tokenizes the whole source. Comments and whitespace are dropped; a leading
/// hashbang line is skipped. Regex-vs-division is decided from the previous
/// significant token.
class Lexer {
public:
    explicit Lexer(std::string_view source) : src_(source) {}

    /// Returns false and fills `error` on malformed input.
    bool tokenize(std::vector<Token>& out, LexError& error);

private:
    bool regex_allowed() const;
    bool skip_trivia(bool& newline, LexError& error);
    bool lex_string(Token& tok, LexError& error);
    bool lex_template_chars(Token& tok, bool head, LexError& error);
    bool lex_regex(Token& tok, LexError& error);
    void lex_number(Token& tok);
    void lex_identifier(Token& tok);
    bool lex_punctuator(Token& tok);

    std::string_view src_;
    std::size_t pos_ = 0;
    Token prev_;
    bool has_prev_ = false;
    // true entries mark `${` template substitutions, false plain braces
    std::vector<bool> braces_;
};

bool is_id_start(unsigned char c);
bool is_id_part(unsigned char c);

}  // namespace srt::detail
