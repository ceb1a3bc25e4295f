#include "lexer.hpp"

#include <array>
#include <cctype>

namespace srt::detail {

bool is_id_start(unsigned char c)
{
    return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80;
}

bool is_id_part(unsigned char c)
{
    return is_id_start(c) || std::isdigit(c);
}

namespace {

constexpr std::array<std::string_view, 51> kPunctuators = {
    ">>>=", "...", "===", "!==", "**=", "<<=", ">>=", ">>>", "&&=", "||=", "?\?=",
    "=>",   "==",  "!=",  "<=",  ">=",  "&&",  "||",  "??",  "?.",  "++",  "--",
    "+=",   "-=",  "*=",  "/=",  "%=",  "&=",  "|=",  "^=",  "**",  "<<",  ">>",
    "{",    "}",   "(",   ")",   "[",   "]",   ";",   ",",   "<",   ">",   "+",
    "-",    "*",   "/",   "%",   "&",   "|",   "^",
};

constexpr std::string_view kSingles = "!~?:=.@";

// Keywords after which a `/` starts a regular expression.
constexpr std::array<std::string_view, 15> kRegexKeywords = {
    "return", "typeof", "case",   "do",  "else", "in",    "instanceof", "new",
    "delete", "void",   "throw",  "yield", "await", "of", "extends",
};

}  // namespace

bool Lexer::regex_allowed() const
{
    if (!has_prev_) {
        return true;
    }
    switch (prev_.kind) {
    case TokenKind::Identifier:
        for (auto kw : kRegexKeywords) {
            if (prev_.text == kw) {
                return true;
            }
        }
        return false;
    case TokenKind::Punctuator:
        return !(prev_.text == ")" || prev_.text == "]" || prev_.text == "++" ||
                 prev_.text == "--");
    case TokenKind::TemplateHead:
    case TokenKind::TemplateMiddle:
        return true;
    default:
        return false;
    }
}

bool Lexer::skip_trivia(bool& newline, LexError& error)
{
    while (pos_ < src_.size()) {
        char c = src_[pos_];
        if (c == '\n' || c == '\r') {
            newline = true;
            ++pos_;
        } else if (c == ' ' || c == '\t' || c == '\v' || c == '\f') {
            ++pos_;
        } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
            while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') {
                ++pos_;
            }
        } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '*') {
            auto close = src_.find("*/", pos_ + 2);
            if (close == std::string_view::npos) {
                error = {pos_, "unterminated block comment"};
                return false;
            }
            if (src_.substr(pos_, close - pos_).find_first_of("\r\n") != std::string_view::npos) {
                newline = true;
            }
            pos_ = close + 2;
        } else if (static_cast<unsigned char>(c) == 0xEF && src_.substr(pos_, 3) == "\xEF\xBB\xBF") {
            pos_ += 3;  // BOM
        } else if (static_cast<unsigned char>(c) == 0xC2 && pos_ + 1 < src_.size() &&
                   static_cast<unsigned char>(src_[pos_ + 1]) == 0xA0) {
            pos_ += 2;  // NBSP
        } else {
            break;
        }
    }
    return true;
}

bool Lexer::lex_string(Token& tok, LexError& error)
{
    char quote = src_[pos_];
    std::size_t i = pos_ + 1;
    while (i < src_.size()) {
        char c = src_[i];
        if (c == '\\') {
            i += 2;
            continue;
        }
        if (c == quote) {
            tok.kind = TokenKind::String;
            pos_ = i + 1;
            return true;
        }
        if (c == '\n' || c == '\r') {
            break;
        }
        ++i;
    }
    error = {tok.begin, "unterminated string literal"};
    return false;
}

bool Lexer::lex_template_chars(Token& tok, bool head, LexError& error)
{
    // pos_ is just past the opening backtick or the closing `}` of a substitution
    std::size_t i = pos_;
    while (i < src_.size()) {
        char c = src_[i];
        if (c == '\\') {
            i += 2;
            continue;
        }
        if (c == '`') {
            tok.kind = head ? TokenKind::Template : TokenKind::TemplateTail;
            pos_ = i + 1;
            return true;
        }
        if (c == '$' && i + 1 < src_.size() && src_[i + 1] == '{') {
            tok.kind = head ? TokenKind::TemplateHead : TokenKind::TemplateMiddle;
            braces_.push_back(true);
            pos_ = i + 2;
            return true;
        }
        ++i;
    }
    error = {tok.begin, "unterminated template literal"};
    return false;
}

bool Lexer::lex_regex(Token& tok, LexError& error)
{
    std::size_t i = pos_ + 1;
    bool in_class = false;
    while (i < src_.size()) {
        char c = src_[i];
        if (c == '\n' || c == '\r') {
            break;
        }
        if (c == '\\') {
            i += 2;
            continue;
        }
        if (c == '[') {
            in_class = true;
        } else if (c == ']') {
            in_class = false;
        } else if (c == '/' && !in_class) {
            ++i;
            while (i < src_.size() && is_id_part(static_cast<unsigned char>(src_[i]))) {
                ++i;
            }
            tok.kind = TokenKind::Regex;
            pos_ = i;
            return true;
        }
        ++i;
    }
    error = {tok.begin, "unterminated regular expression"};
    return false;
}

void Lexer::lex_number(Token& tok)
{
    std::size_t i = pos_;
    auto at = [&](std::size_t k) -> char { return k < src_.size() ? src_[k] : '\0'; };
    if (at(i) == '0' && std::string_view("xXoObB").find(at(i + 1)) != std::string_view::npos &&
        at(i + 1) != '\0') {
        i += 2;
        while (std::isxdigit(static_cast<unsigned char>(at(i))) || at(i) == '_') {
            ++i;
        }
    } else {
        while (std::isdigit(static_cast<unsigned char>(at(i))) || at(i) == '_') {
            ++i;
        }
        if (at(i) == '.') {
            ++i;
            while (std::isdigit(static_cast<unsigned char>(at(i))) || at(i) == '_') {
                ++i;
            }
        }
        if ((at(i) == 'e' || at(i) == 'E') &&
            (std::isdigit(static_cast<unsigned char>(at(i + 1))) ||
             ((at(i + 1) == '+' || at(i + 1) == '-') &&
              std::isdigit(static_cast<unsigned char>(at(i + 2)))))) {
            i += 2;
            while (std::isdigit(static_cast<unsigned char>(at(i)))) {
                ++i;
            }
        }
    }
    if (at(i) == 'n') {
        ++i;
    }
    tok.kind = TokenKind::Number;
    pos_ = i;
}

void Lexer::lex_identifier(Token& tok)
{
    std::size_t i = pos_ + 1;
    while (i < src_.size() && is_id_part(static_cast<unsigned char>(src_[i]))) {
        ++i;
    }
    tok.kind = TokenKind::Identifier;
    pos_ = i;
}

bool Lexer::lex_punctuator(Token& tok)
{
    auto rest = src_.substr(pos_);
    for (auto p : kPunctuators) {
        if (rest.substr(0, p.size()) == p) {
            // `?.5` is a conditional followed by a number
            if (p == "?." && rest.size() > 2 && std::isdigit(static_cast<unsigned char>(rest[2]))) {
                continue;
            }
            tok.kind = TokenKind::Punctuator;
            pos_ += p.size();
            return true;
        }
    }
    if (kSingles.find(rest[0]) != std::string_view::npos) {
        tok.kind = TokenKind::Punctuator;
        pos_ += 1;
        return true;
    }
    return false;
}

bool Lexer::tokenize(std::vector<Token>& out, LexError& error)
{
    out.clear();
    if (src_.substr(0, 2) == "#!") {
        while (pos_ < src_.size() && src_[pos_] != '\n') {
            ++pos_;
        }
    }
    bool newline = false;
    for (;;) {
        if (!skip_trivia(newline, error)) {
            return false;
        }
        Token tok;
        tok.begin = pos_;
        tok.newline_before = newline;
        newline = false;
        if (pos_ >= src_.size()) {
            tok.kind = TokenKind::End;
            tok.end = pos_;
            out.push_back(tok);
            return true;
        }
        auto c = static_cast<unsigned char>(src_[pos_]);
        bool ok = true;
        if (c == '"' || c == '\'') {
            ok = lex_string(tok, error);
        } else if (c == '`') {
            ++pos_;
            ok = lex_template_chars(tok, true, error);
        } else if (std::isdigit(c) ||
                   (c == '.' && pos_ + 1 < src_.size() &&
                    std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
            lex_number(tok);
        } else if (is_id_start(c)) {
            lex_identifier(tok);
        } else if (c == '#' && pos_ + 1 < src_.size() &&
                   is_id_start(static_cast<unsigned char>(src_[pos_ + 1]))) {
            ++pos_;
            lex_identifier(tok);
            tok.kind = TokenKind::PrivateName;
        } else if (c == '}' && !braces_.empty() && braces_.back()) {
            braces_.pop_back();
            ++pos_;
            ok = lex_template_chars(tok, false, error);
        } else if (c == '/' && regex_allowed()) {
            ok = lex_regex(tok, error);
        } else if (lex_punctuator(tok)) {
            auto t = src_.substr(tok.begin, pos_ - tok.begin);
            if (t == "{") {
                braces_.push_back(false);
            } else if (t == "}" && !braces_.empty()) {
                braces_.pop_back();
            }
        } else {
            std::string msg = "unexpected character '";
            msg += static_cast<char>(c);
            msg += '\'';
            error = {pos_, msg};
            return false;
        }
        if (!ok) {
            return false;
        }
        tok.end = pos_;
        tok.text = src_.substr(tok.begin, tok.end - tok.begin);
        out.push_back(tok);
        prev_ = out.back();
        has_prev_ = true;
    }
}

}  // namespace srt::detail
