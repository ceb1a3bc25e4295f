#include "srt/project.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "srt/change_analysis.hpp"
#include "srt/serialization.hpp"

namespace fs = std::filesystem;

namespace srt {

std::optional<std::string> read_text_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return std::nullopt;
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text_file(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    out.close();
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
}

Config load_config(const fs::path& project_root)
{
    Config config;
    config.project_root = project_root;
    auto file = project_root / "srt.json";
    if (!fs::exists(file)) {
        return config;
    }
    json j = read_json_file(file);
    try {
        if (!j.is_object()) {
            throw FormatError("expected an object");
        }
        config.test_globs = j.value("test_globs", config.test_globs);
        config.exclude = j.value("exclude", config.exclude);
        config.collector_bind = j.value("collector_bind", config.collector_bind);
        config.output_dir = j.value("output_dir", config.output_dir.string());
        config.runner_command = j.value("runner_command", config.runner_command);
        config.trace_command = j.value("trace_command", config.trace_command);
        config.timeout = std::chrono::seconds(j.value("timeout_s", config.timeout.count()));
        config.agent_module = j.value("agent_module", config.agent_module);
    } catch (const json::exception& e) {
        throw FormatError(file.string() + ": " + e.what());
    } catch (const FormatError& e) {
        throw FormatError(file.string() + ": " + e.what());
    }
    return config;
}

namespace {

std::vector<std::string_view> split(std::string_view s)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i <= s.size()) {
        auto slash = s.find('/', i);
        if (slash == std::string_view::npos) {
            slash = s.size();
        }
        out.push_back(s.substr(i, slash - i));
        i = slash + 1;
    }
    return out;
}

bool match_segments(const std::vector<std::string_view>& pat, std::size_t pi,
                    const std::vector<std::string_view>& path, std::size_t si)
{
    if (pi == pat.size()) {
        return si == path.size();
    }
    if (pat[pi] == "**") {
        for (std::size_t k = si; k <= path.size(); ++k) {
            if (match_segments(pat, pi + 1, path, k)) {
                return true;
            }
        }
        return false;
    }
    if (si == path.size()) {
        return false;
    }
    std::string p(pat[pi]);
    std::string s(path[si]);
    return fnmatch(p.c_str(), s.c_str(), FNM_PATHNAME) == 0 &&
           match_segments(pat, pi + 1, path, si + 1);
}

}  // namespace

bool glob_match(std::string_view pattern, std::string_view path)
{
    return match_segments(split(pattern), 0, split(path), 0);
}

std::vector<std::string> list_project_files(const fs::path& root, const std::vector<std::string>& exclude)
{
    if (!fs::is_directory(root)) {
        throw std::runtime_error("not a directory: " + root.string());
    }
    std::vector<std::string> out;
    for (auto it = fs::recursive_directory_iterator(root); it != fs::recursive_directory_iterator(); ++it) {
        std::string name = it->path().filename().string();
        if (it->is_directory() &&
            std::find(exclude.begin(), exclude.end(), name) != exclude.end()) {
            it.disable_recursion_pending();
            continue;
        }
        if (it->is_regular_file()) {
            out.push_back(it->path().lexically_relative(root).generic_string());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

TestIndex discover_tests(const std::vector<std::string>& files, const std::vector<std::string>& globs)
{
    TestIndex index;
    for (const auto& f : files) {
        if (!is_js_path(f)) {
            continue;
        }
        for (const auto& g : globs) {
            if (glob_match(g, f)) {
                index[f] = f;
                break;
            }
        }
    }
    return index;
}

LoadedProject load_project(const fs::path& root, const std::vector<std::string>& exclude)
{
    LoadedProject project;
    project.files = list_project_files(root, exclude);
    for (const auto& f : project.files) {
        if (!is_js_path(f)) {
            continue;
        }
        auto text = read_text_file(root / f);
        if (!text) {
            throw std::runtime_error("cannot read " + (root / f).string());
        }
        try {
            project.modules.push_back(parse_module(*text, f));
        } catch (const ParseError& e) {
            project.parse_errors.emplace_back(f, e.what());
        }
    }
    return project;
}

std::string tree_hash(const fs::path& root, const std::vector<std::string>& files)
{
    std::string manifest;
    for (const auto& f : files) {
        auto text = read_text_file(root / f);
        manifest += f;
        manifest += '\0';
        manifest += text ? content_hash(*text) : std::string("missing");
        manifest += '\n';
    }
    return content_hash(manifest);
}

}  // namespace srt
