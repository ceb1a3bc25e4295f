#include <charconv>
#include <regex>

#include "srt/change_analysis.hpp"

namespace srt {

namespace {

std::vector<std::string_view> split_lines(std::string_view text)
{
    std::vector<std::string_view> lines;
    std::size_t i = 0;
    while (i < text.size()) {
        auto nl = text.find('\n', i);
        if (nl == std::string_view::npos) {
            nl = text.size();
        }
        auto line = text.substr(i, nl - i);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        lines.push_back(line);
        i = nl + 1;
    }
    return lines;
}

bool starts_with(std::string_view s, std::string_view prefix)
{
    return s.substr(0, prefix.size()) == prefix;
}

std::string unquote(std::string_view p)
{
    if (p.size() >= 2 && p.front() == '"' && p.back() == '"') {
        std::string out;
        for (std::size_t i = 1; i + 1 < p.size(); ++i) {
            if (p[i] == '\\' && i + 2 < p.size()) {
                ++i;
                switch (p[i]) {
                case 't': out += '\t'; break;
                case 'n': out += '\n'; break;
                default: out += p[i];
                }
            } else {
                out += p[i];
            }
        }
        return out;
    }
    return std::string(p);
}

// Path from a ---/+++ line: drops a trailing timestamp and the a/ or b/ prefix.
std::optional<std::string> header_path(std::string_view rest, char side)
{
    auto tab = rest.find('\t');
    if (tab != std::string_view::npos) {
        rest = rest.substr(0, tab);
    }
    while (!rest.empty() && rest.back() == ' ') {
        rest.remove_suffix(1);
    }
    std::string path = unquote(rest);
    if (path == "/dev/null") {
        return std::nullopt;
    }
    std::string prefix = std::string(1, side) + "/";
    if (starts_with(path, prefix)) {
        path.erase(0, 2);
    }
    return path;
}

int to_int(std::string_view s, int line_no)
{
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw DiffFormatError(line_no, "bad number '" + std::string(s) + "'");
    }
    return value;
}

Hunk parse_hunk_header(std::string_view line, int line_no)
{
    static const std::regex re(R"(^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@.*$)");
    std::cmatch m;
    if (!std::regex_match(line.data(), line.data() + line.size(), m, re)) {
        throw DiffFormatError(line_no, "malformed hunk header");
    }
    auto group = [&](int i, int fallback) {
        return m[i].matched ? to_int(std::string_view(m[i].first, m[i].length()), line_no) : fallback;
    };
    Hunk h;
    h.old_start = group(1, 0);
    h.old_len = group(2, 1);
    h.new_start = group(3, 0);
    h.new_len = group(4, 1);
    return h;
}

}  // namespace

std::vector<FileDiff> parse_unified_diff(std::string_view patch)
{
    auto lines = split_lines(patch);
    std::vector<FileDiff> out;
    FileDiff* current = nullptr;
    bool in_git_header = false;
    bool saw_header = false;

    std::size_t i = 0;
    auto line_no = [&] { return static_cast<int>(i + 1); };

    while (i < lines.size()) {
        std::string_view line = lines[i];

        if (starts_with(line, "diff --git ")) {
            out.emplace_back();
            current = &out.back();
            in_git_header = true;
            saw_header = true;
            auto rest = line.substr(11);
            auto split = rest.find(" b/");
            if (split != std::string_view::npos) {
                current->old_path = header_path(rest.substr(0, split), 'a');
                current->new_path = header_path(rest.substr(split + 1), 'b');
            }
            ++i;
            continue;
        }
        if (starts_with(line, "--- ") && i + 1 < lines.size() && starts_with(lines[i + 1], "+++ ")) {
            if (!in_git_header) {
                out.emplace_back();
                current = &out.back();
            }
            saw_header = true;
            current->old_path = header_path(line.substr(4), 'a');
            current->new_path = header_path(lines[i + 1].substr(4), 'b');
            in_git_header = false;
            i += 2;
            continue;
        }
        if (starts_with(line, "@@")) {
            if (current == nullptr) {
                throw DiffFormatError(line_no(), "hunk before any file header");
            }
            in_git_header = false;
            Hunk h = parse_hunk_header(line, line_no());
            int old_line = h.old_start;
            int new_line = h.new_start;
            int old_left = h.old_len;
            int new_left = h.new_len;
            ++i;
            while (old_left > 0 || new_left > 0) {
                if (i >= lines.size()) {
                    throw DiffFormatError(line_no(), "hunk ends early");
                }
                std::string_view body = lines[i];
                char tag = body.empty() ? ' ' : body[0];
                switch (tag) {
                case ' ':
                    if (old_left <= 0 || new_left <= 0) {
                        throw DiffFormatError(line_no(), "hunk longer than its header says");
                    }
                    ++old_line, ++new_line, --old_left, --new_left;
                    break;
                case '-':
                    if (old_left <= 0) {
                        throw DiffFormatError(line_no(), "too many removed lines");
                    }
                    h.removed.push_back(old_line++);
                    --old_left;
                    break;
                case '+':
                    if (new_left <= 0) {
                        throw DiffFormatError(line_no(), "too many added lines");
                    }
                    h.added.push_back(new_line++);
                    --new_left;
                    break;
                case '\\':
                    break;
                default:
                    throw DiffFormatError(line_no(), "unexpected line in hunk");
                }
                ++i;
            }
            while (i < lines.size() && starts_with(lines[i], "\\")) {
                ++i;
            }
            current->hunks.push_back(std::move(h));
            continue;
        }
        if (in_git_header) {
            if (starts_with(line, "new file mode")) {
                current->old_path.reset();
            } else if (starts_with(line, "deleted file mode")) {
                current->new_path.reset();
            } else if (starts_with(line, "rename from ")) {
                current->old_path = unquote(line.substr(12));
            } else if (starts_with(line, "rename to ")) {
                current->new_path = unquote(line.substr(10));
            } else if (starts_with(line, "Binary files ") || starts_with(line, "GIT binary patch")) {
                current->binary = true;
            } else if (starts_with(line, "index ") || starts_with(line, "similarity index") ||
                       starts_with(line, "dissimilarity index") || starts_with(line, "old mode") ||
                       starts_with(line, "new mode") || starts_with(line, "copy from") ||
                       starts_with(line, "copy to")) {
                // nothing to record
            } else if (current->binary) {
                // binary payload
            } else {
                throw DiffFormatError(line_no(), "unexpected line in file header");
            }
            ++i;
            continue;
        }
        if (line == "-- ") {
            // format-patch signature
            break;
        }
        if (!saw_header || line.empty() || starts_with(line, "Only in ") ||
            starts_with(line, "diff ")) {
            // preamble (commit message etc.) or plain-diff noise
            ++i;
            continue;
        }
        throw DiffFormatError(line_no(), "unexpected line between files");
    }

    if (!saw_header) {
        for (auto l : lines) {
            if (l.find_first_not_of(" \t") != std::string_view::npos) {
                throw DiffFormatError(1, "no file headers found");
            }
        }
    }
    for (const auto& d : out) {
        if (!d.old_path && !d.new_path) {
            throw DiffFormatError(0, "file diff with neither path");
        }
    }
    return out;
}

}  // namespace srt
