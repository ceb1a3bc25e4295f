#include "srt/runner.hpp"

#include <algorithm>
#include <sstream>

#include "srt/process.hpp"

namespace srt {

std::string_view to_string(Outcome outcome)
{
    switch (outcome) {
    case Outcome::Pass: return "pass";
    case Outcome::Fail: return "fail";
    case Outcome::SkipNotSelected: return "skip-not-selected";
    }
    return "unknown";
}

Outcome outcome_from(std::string_view s)
{
    for (auto o : {Outcome::Pass, Outcome::Fail, Outcome::SkipNotSelected}) {
        if (to_string(o) == s) {
            return o;
        }
    }
    throw std::invalid_argument("unknown outcome '" + std::string(s) + "'");
}

std::string shell_quote(const std::string& s)
{
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    return out + "'";
}

std::string expand_command(const std::string& command_template, const std::vector<std::string>& tests)
{
    std::string joined;
    for (const auto& t : tests) {
        if (!joined.empty()) {
            joined += ' ';
        }
        joined += shell_quote(t);
    }
    static const std::string placeholder = "{tests}";
    auto pos = command_template.find(placeholder);
    if (pos == std::string::npos) {
        return joined.empty() ? command_template : command_template + " " + joined;
    }
    std::string out = command_template;
    while (pos != std::string::npos) {
        out.replace(pos, placeholder.size(), joined);
        pos = out.find(placeholder, pos + joined.size());
    }
    return out;
}

std::vector<std::string> selected_ids(const SelectionResult& selection)
{
    std::vector<std::string> ids;
    for (const auto& [id, reasons] : selection.selected) {
        ids.push_back(id);
    }
    return ids;
}

namespace {

void scan_results(const std::string& text, const std::set<std::string>& selected,
                  std::map<std::string, Outcome>& found)
{
    std::istringstream in(text);
    std::string line;
    static const std::string tag = "SRT-RESULT ";
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.rfind(tag, 0) != 0) {
            continue;
        }
        auto rest = line.substr(tag.size());
        auto space = rest.find(' ');
        if (space == std::string::npos) {
            continue;
        }
        auto verdict = rest.substr(0, space);
        auto id = rest.substr(space + 1);
        if (selected.count(id) == 0 || (verdict != "pass" && verdict != "fail")) {
            continue;
        }
        // A test reported twice fails if either report failed.
        auto outcome = verdict == "pass" ? Outcome::Pass : Outcome::Fail;
        auto [it, inserted] = found.emplace(id, outcome);
        if (!inserted && outcome == Outcome::Fail) {
            it->second = Outcome::Fail;
        }
    }
}

}  // namespace

RunReport run_selected(const SelectionResult& selection, const RunOptions& options)
{
    RunReport report;
    for (const auto& id : selection.skipped) {
        report.outcomes[id] = Outcome::SkipNotSelected;
    }
    auto ids = selected_ids(selection);
    if (ids.empty()) {
        return report;
    }
    if (options.command_template.empty()) {
        throw SpawnError("no runner command configured");
    }

    ProcessOptions popts;
    popts.cwd = options.working_dir;
    popts.env = options.env;
    popts.timeout = options.timeout;
    popts.echo_output = options.echo_output;
    auto result = run_shell(expand_command(options.command_template, ids), popts);
    report.times.run_s = result.seconds;

    std::set<std::string> selected(ids.begin(), ids.end());
    std::map<std::string, Outcome> found;
    scan_results(result.out, selected, found);
    scan_results(result.err, selected, found);

    bool child_ok = result.ok();
    for (const auto& id : ids) {
        auto it = found.find(id);
        report.outcomes[id] = it != found.end() ? it->second : (child_ok ? Outcome::Pass : Outcome::Fail);
    }
    report.exit_status = result.timed_out ? 124 : result.exit_code;
    if (result.timed_out) {
        report.run_error = "timed out after " + std::to_string(options.timeout.count()) + " ms";
        for (const auto& id : ids) {
            if (found.count(id) == 0) {
                report.outcomes[id] = Outcome::Fail;
            }
        }
        throw TimeoutError("test command " + report.run_error, report);
    }
    if (!child_ok && found.empty()) {
        report.run_error = result.signal != 0
                               ? "test command killed by signal " + std::to_string(result.signal)
                               : "test command exited with status " + std::to_string(result.exit_code);
    }
    return report;
}

Metrics compute_metrics(const std::set<std::string>& selected, const std::set<std::string>& affected,
                        const std::set<std::string>& all_tests)
{
    for (const auto& t : selected) {
        if (all_tests.count(t) == 0) {
            throw OracleMismatch("selected test '" + t + "' is not a known test");
        }
    }
    for (const auto& t : affected) {
        if (all_tests.count(t) == 0) {
            throw OracleMismatch("affected test '" + t + "' is not a known test");
        }
    }
    Metrics m;
    m.selected = selected.size();
    m.affected = affected.size();
    m.total = all_tests.size();
    std::size_t hit = 0;
    for (const auto& t : affected) {
        hit += selected.count(t);
    }
    std::size_t unaffected = all_tests.size() - affected.size();
    std::size_t correctly_omitted = 0;
    for (const auto& t : all_tests) {
        if (affected.count(t) == 0 && selected.count(t) == 0) {
            ++correctly_omitted;
        }
    }
    m.inclusiveness = affected.empty() ? 1.0 : static_cast<double>(hit) / static_cast<double>(affected.size());
    m.precision = unaffected == 0 ? 1.0
                                  : static_cast<double>(correctly_omitted) / static_cast<double>(unaffected);
    m.safe = hit == affected.size();
    return m;
}

Metrics compute_metrics(const SelectionResult& selection, const std::set<std::string>& affected,
                        const std::set<std::string>& all_tests)
{
    auto ids = selected_ids(selection);
    return compute_metrics(std::set<std::string>(ids.begin(), ids.end()), affected, all_tests);
}

}  // namespace srt
