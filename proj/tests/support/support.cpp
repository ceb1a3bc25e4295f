#include "support.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include "srt/process.hpp"
#include "srt/runner.hpp"
#include "srt/serialization.hpp"

namespace fs = std::filesystem;

namespace srt::testing {

fs::path fixtures_dir()
{
    return SRT_FIXTURES_DIR;
}

fs::path agent_path()
{
    return fixtures_dir() / "agent" / "srt-agent.js";
}

fs::path harness_path()
{
    return fixtures_dir() / "harness" / "srt-harness.js";
}

fs::path srt_binary()
{
    return SRT_BINARY;
}

TempDir::TempDir(const std::string& tag)
{
    std::string pattern = (fs::temp_directory_path() / (tag + "-XXXXXX")).string();
    if (mkdtemp(pattern.data()) == nullptr) {
        throw std::runtime_error("mkdtemp failed");
    }
    path_ = pattern;
}

TempDir::~TempDir()
{
    std::error_code ec;
    fs::remove_all(path_, ec);
}

void write_tree(const fs::path& root, const std::map<std::string, std::string>& files)
{
    for (const auto& [path, text] : files) {
        write_text_file(root / path, text);
    }
}

std::map<std::string, std::string> read_tree(const fs::path& root)
{
    std::map<std::string, std::string> out;
    for (const auto& f : list_project_files(root, {".git", "node_modules", ".srt"})) {
        out[f] = *read_text_file(root / f);
    }
    return out;
}

// ---- diff writer ---------------------------------------------------------

namespace {

struct Lines {
    std::vector<std::string> lines;
    bool missing_newline = false;
};

Lines split_lines(const std::string& text)
{
    Lines out;
    std::size_t i = 0;
    while (i < text.size()) {
        auto nl = text.find('\n', i);
        if (nl == std::string::npos) {
            out.lines.push_back(text.substr(i));
            out.missing_newline = true;
            break;
        }
        out.lines.push_back(text.substr(i, nl - i));
        i = nl + 1;
    }
    return out;
}

enum class Op { Keep, Remove, Add };

std::vector<std::pair<Op, std::size_t>> edit_script(const std::vector<std::string>& a,
                                                    const std::vector<std::string>& b)
{
    const std::size_t n = a.size(), m = b.size();
    std::vector<std::vector<int>> lcs(n + 1, std::vector<int>(m + 1, 0));
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = m; j-- > 0;) {
            lcs[i][j] = a[i] == b[j] ? lcs[i + 1][j + 1] + 1 : std::max(lcs[i + 1][j], lcs[i][j + 1]);
        }
    }
    std::vector<std::pair<Op, std::size_t>> ops;
    std::size_t i = 0, j = 0;
    while (i < n || j < m) {
        if (i < n && j < m && a[i] == b[j]) {
            ops.push_back({Op::Keep, i});
            ++i, ++j;
        } else if (i < n && (j == m || lcs[i + 1][j] >= lcs[i][j + 1])) {
            ops.push_back({Op::Remove, i++});
        } else {
            ops.push_back({Op::Add, j++});
        }
    }
    return ops;
}

}  // namespace

std::string unified_diff(const std::string& path, const std::optional<std::string>& before,
                         const std::optional<std::string>& after)
{
    if (before == after) {
        return {};
    }
    Lines a = before ? split_lines(*before) : Lines{};
    Lines b = after ? split_lines(*after) : Lines{};
    auto ops = edit_script(a.lines, b.lines);

    std::ostringstream os;
    os << "diff --git a/" << path << " b/" << path << "\n";
    if (!before) {
        os << "new file mode 100644\n";
    } else if (!after) {
        os << "deleted file mode 100644\n";
    }
    os << "--- " << (before ? "a/" + path : "/dev/null") << "\n";
    os << "+++ " << (after ? "b/" + path : "/dev/null") << "\n";

    constexpr std::size_t context = 3;
    std::size_t k = 0;
    while (k < ops.size()) {
        if (ops[k].first == Op::Keep) {
            ++k;
            continue;
        }
        std::size_t begin = k >= context ? k - context : 0;
        while (begin < k && ops[begin].first != Op::Keep) {
            ++begin;
        }
        std::size_t end = k;
        // Extend while the next change is within 2*context kept lines.
        while (true) {
            while (end < ops.size() && ops[end].first != Op::Keep) {
                ++end;
            }
            std::size_t next = end;
            while (next < ops.size() && ops[next].first == Op::Keep) {
                ++next;
            }
            if (next < ops.size() && next - end <= 2 * context) {
                end = next;
                continue;
            }
            end = std::min(ops.size(), end + context);
            break;
        }
        // Line numbers at the start of the hunk.
        std::size_t old_line = 0, new_line = 0;
        for (std::size_t q = 0; q < begin; ++q) {
            old_line += ops[q].first != Op::Add;
            new_line += ops[q].first != Op::Remove;
        }
        std::size_t old_len = 0, new_len = 0;
        std::ostringstream body;
        for (std::size_t q = begin; q < end; ++q) {
            auto [op, idx] = ops[q];
            if (op == Op::Keep) {
                body << ' ' << a.lines[idx] << "\n";
                if (idx + 1 == a.lines.size() && a.missing_newline) {
                    body << "\\ No newline at end of file\n";
                }
                ++old_len, ++new_len;
            } else if (op == Op::Remove) {
                body << '-' << a.lines[idx] << "\n";
                if (idx + 1 == a.lines.size() && a.missing_newline) {
                    body << "\\ No newline at end of file\n";
                }
                ++old_len;
            } else {
                body << '+' << b.lines[idx] << "\n";
                if (idx + 1 == b.lines.size() && b.missing_newline) {
                    body << "\\ No newline at end of file\n";
                }
                ++new_len;
            }
        }
        os << "@@ -" << (old_len == 0 ? old_line : old_line + 1) << "," << old_len << " +"
           << (new_len == 0 ? new_line : new_line + 1) << "," << new_len << " @@\n"
           << body.str();
        k = end;
    }
    return os.str();
}

std::string tree_diff(const std::map<std::string, std::string>& before,
                      const std::map<std::string, std::string>& after)
{
    std::set<std::string> paths;
    for (const auto& [p, t] : before) {
        paths.insert(p);
    }
    for (const auto& [p, t] : after) {
        paths.insert(p);
    }
    std::string out;
    for (const auto& p : paths) {
        auto a = before.find(p);
        auto b = after.find(p);
        out += unified_diff(p, a == before.end() ? std::nullopt : std::optional(a->second),
                            b == after.end() ? std::nullopt : std::optional(b->second));
    }
    return out;
}

std::string corpus_config()
{
    json j = {{"runner_command", "node " + shell_quote(harness_path().string()) + " {tests}"},
              {"agent_module", agent_path().string()},
              {"timeout_s", 300}};
    return j.dump(2) + "\n";
}

std::set<std::string> failing_tests(const fs::path& dir, const std::vector<std::string>& tests)
{
    ProcessOptions opts;
    opts.cwd = dir;
    opts.timeout = std::chrono::minutes(2);
    auto r = run_shell(expand_command("node " + shell_quote(harness_path().string()) + " {tests}", tests),
                       opts);
    if (r.timed_out) {
        throw std::runtime_error("test run timed out in " + dir.string());
    }
    std::set<std::string> passed;
    std::istringstream in(r.out);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("SRT-RESULT pass ", 0) == 0) {
            passed.insert(line.substr(16));
        }
    }
    std::set<std::string> failed;
    for (const auto& t : tests) {
        if (passed.count(t) == 0) {
            failed.insert(t);
        }
    }
    return failed;
}

// ---- corpus ---------------------------------------------------------------

std::string Mutation::describe() const
{
    return "m" + std::to_string(module) + ".u" + std::to_string(unit) + "#" + std::to_string(function) +
           (kind == MutationKind::Throw ? " throw" : " constant");
}

std::string CorpusProject::module_path(int m) const
{
    return "src/m" + std::to_string(m) + ".js";
}

std::string CorpusProject::test_path(int t) const
{
    return "test/t" + std::to_string(t) + ".test.js";
}

std::vector<std::string> CorpusProject::test_ids() const
{
    std::vector<std::string> ids;
    for (std::size_t t = 0; t < tests.size(); ++t) {
        ids.push_back(test_path(static_cast<int>(t)));
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::vector<std::string> unit_functions(const Unit& unit, int index)
{
    std::string i = std::to_string(index);
    switch (unit.kind) {
    case UnitKind::Declaration:
    case UnitKind::Arrow: return {"u_" + i};
    case UnitKind::Class: return {"K_" + i + ".constructor", "K_" + i + ".run", "u_" + i};
    case UnitKind::Callback: return {"u_" + i, "u_" + i + ".<anon#1>", "u_" + i + ".<anon#2>"};
    case UnitKind::ObjectMethod: return {"apply_" + i, "u_" + i};
    case UnitKind::Getter: return {"G_" + i + ".get_value", "u_" + i};
    }
    return {};
}

bool mutation_applies(const Unit& unit, int function, MutationKind kind)
{
    if (kind == MutationKind::Constant) {
        return true;
    }
    switch (unit.kind) {
    case UnitKind::Declaration: return true;
    case UnitKind::Arrow: return false;
    case UnitKind::Class: return true;
    case UnitKind::Callback: return function == 0;
    case UnitKind::ObjectMethod: return function == 0;
    case UnitKind::Getter: return true;
    }
    return false;
}

namespace {

std::string expr(const Unit& u, const std::string& var, bool tweak)
{
    std::string base = var;
    if (u.dep) {
        base = "m" + std::to_string(u.dep->first) + ".u_" + std::to_string(u.dep->second) + "(" + var + ")";
    }
    return "(" + base + " * " + std::to_string(u.a) + " + " + std::to_string(u.b + (tweak ? 1 : 0)) +
           ") % 9973";
}

std::string render_unit(const Unit& u, int index, int fn, std::optional<MutationKind> kind)
{
    const std::string i = std::to_string(index);
    auto thrown = [&](int f) {
        return kind == MutationKind::Throw && fn == f ? "    throw new Error(\"seeded fault\");\n"
                                                      : std::string{};
    };
    auto tweak = [&](int f) { return kind == MutationKind::Constant && fn == f; };
    std::ostringstream os;
    switch (u.kind) {
    case UnitKind::Declaration:
        os << "function u_" << i << "(x) {\n"
           << (thrown(0).empty() ? "" : thrown(0).substr(2)) << "  return " << expr(u, "x", tweak(0))
           << ";\n}\n";
        break;
    case UnitKind::Arrow:
        os << "const u_" << i << " = (x) => " << expr(u, "x", tweak(0)) << ";\n";
        break;
    case UnitKind::Class:
        os << "class K_" << i << " {\n"
           << "  constructor(k) {\n"
           << thrown(0) << "    this.k = k" << (tweak(0) ? " + 1" : "") << ";\n"
           << "  }\n"
           << "  run(x) {\n"
           << thrown(1) << "    return (" << expr(u, "x", tweak(1)) << " + this.k) % 9973;\n"
           << "  }\n"
           << "}\n"
           << "function u_" << i << "(x) {\n"
           << (thrown(2).empty() ? "" : thrown(2).substr(2)) << "  return new K_" << i << "("
           << u.c + (tweak(2) ? 1 : 0) << ").run(x);\n"
           << "}\n";
        break;
    case UnitKind::Callback:
        os << "function u_" << i << "(x) {\n"
           << (thrown(0).empty() ? "" : thrown(0).substr(2)) << "  return [x, x + "
           << (tweak(0) ? 2 : 1) << "].map((v) => " << expr(u, "v", tweak(1))
           << ").reduce((s, v) => (s + v" << (tweak(2) ? " + 1" : "") << ") % 9973, 0);\n"
           << "}\n";
        break;
    case UnitKind::ObjectMethod:
        os << "const ops_" << i << " = {\n"
           << "  apply_" << i << "(x) {\n"
           << thrown(0) << "    return " << expr(u, "x", tweak(0)) << ";\n"
           << "  },\n"
           << "};\n"
           << "const u_" << i << " = (x) => ops_" << i << ".apply_" << i << "(x) + " << (tweak(1) ? 1 : 0)
           << ";\n";
        break;
    case UnitKind::Getter:
        os << "class G_" << i << " {\n"
           << "  get value() {\n"
           << thrown(0) << "    return " << u.c + (tweak(0) ? 1 : 0) << ";\n"
           << "  }\n"
           << "}\n"
           << "function u_" << i << "(x) {\n"
           << (thrown(1).empty() ? "" : thrown(1).substr(2)) << "  return (" << expr(u, "x", tweak(1))
           << " + new G_" << i << "().value) % 9973;\n"
           << "}\n";
        break;
    }
    return os.str();
}

}  // namespace

std::map<std::string, std::string> CorpusProject::render(const std::optional<Mutation>& mutation) const
{
    std::map<std::string, std::string> files;
    files["srt.json"] = corpus_config();
    files["package.json"] = "{\n  \"name\": \"" + name + "\",\n  \"private\": true\n}\n";
    for (std::size_t m = 0; m < modules.size(); ++m) {
        std::ostringstream os;
        std::set<int> deps;
        for (const auto& u : modules[m]) {
            if (u.dep) {
                deps.insert(u.dep->first);
            }
        }
        os << "'use strict';\n";
        for (int d : deps) {
            os << "const m" << d << " = require(\"./m" << d << "\");\n";
        }
        os << "\n";
        std::string exports;
        for (std::size_t i = 0; i < modules[m].size(); ++i) {
            std::optional<MutationKind> kind;
            int fn = -1;
            if (mutation && mutation->module == static_cast<int>(m) && mutation->unit == static_cast<int>(i)) {
                kind = mutation->kind;
                fn = mutation->function;
            }
            os << render_unit(modules[m][i], static_cast<int>(i), fn, kind) << "\n";
            exports += (i == 0 ? "" : ", ") + std::string("u_") + std::to_string(i);
        }
        os << "module.exports = { " << exports << " };\n";
        files[module_path(static_cast<int>(m))] = os.str();
    }
    for (std::size_t t = 0; t < tests.size(); ++t) {
        std::ostringstream os;
        std::set<int> used;
        for (const auto& c : tests[t]) {
            used.insert(c.module);
        }
        for (int m : used) {
            os << "const m" << m << " = require(\"../src/m" << m << "\");\n";
        }
        os << "\nfunction check(actual, expected, label) {\n"
           << "  if (actual !== expected) {\n"
           << "    throw new Error(label + \": expected \" + expected + \", got \" + actual);\n"
           << "  }\n"
           << "}\n";
        for (std::size_t k = 0; k < tests[t].size(); ++k) {
            const auto& c = tests[t][k];
            std::string call = "m" + std::to_string(c.module) + ".u_" + std::to_string(c.unit) + "(" +
                               std::to_string(c.arg) + ")";
            std::string want = expected.size() > t ? std::to_string(expected[t][k]) : "null";
            os << "\ntest(\"case " << k << "\", () => {\n"
               << "  const r = " << call << ";\n"
               << "  console.log(\"" << call << " =\", r);\n"
               << "  check(r, " << want << ", \"" << call << "\");\n"
               << "});\n";
        }
        files[test_path(static_cast<int>(t))] = os.str();
    }
    return files;
}

namespace {

int uniform(std::mt19937& rng, int lo, int hi)
{
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

void reach(const CorpusProject& p, int m, int u, std::set<std::pair<int, int>>& seen)
{
    if (!seen.insert({m, u}).second) {
        return;
    }
    const auto& unit = p.modules[m][u];
    if (unit.dep) {
        reach(p, unit.dep->first, unit.dep->second, seen);
    }
}

}  // namespace

CorpusProject generate_project(std::mt19937& rng, const std::string& name, const CorpusOptions& options)
{
    CorpusProject p;
    p.name = name;
    int nmod = uniform(rng, options.min_modules, options.max_modules);
    for (int m = 0; m < nmod; ++m) {
        std::vector<Unit> units(uniform(rng, 2, 4));
        for (auto& u : units) {
            u.kind = static_cast<UnitKind>(uniform(rng, 0, 5));
            u.a = uniform(rng, 2, 9);
            u.b = uniform(rng, 1, 50);
            u.c = uniform(rng, 1, 20);
            if (m > 0 && uniform(rng, 0, 1) == 1) {
                int d = uniform(rng, 0, m - 1);
                u.dep = std::make_pair(d, 0);
                u.dep->second = uniform(rng, 0, static_cast<int>(p.modules[d].size()) - 1);
            }
        }
        p.modules.push_back(std::move(units));
    }
    int ntests = uniform(rng, options.min_tests, options.max_tests);
    for (int t = 0; t < ntests; ++t) {
        std::vector<Call> calls(uniform(rng, 1, 3));
        for (auto& c : calls) {
            c.module = uniform(rng, 0, nmod - 1);
            c.unit = uniform(rng, 0, static_cast<int>(p.modules[c.module].size()) - 1);
            c.arg = uniform(rng, 1, 20);
        }
        p.tests.push_back(std::move(calls));
    }

    std::set<std::pair<int, int>> reached;
    for (const auto& calls : p.tests) {
        for (const auto& c : calls) {
            reach(p, c.module, c.unit, reached);
        }
    }
    std::vector<Mutation> candidates;
    std::vector<Mutation> unreached;
    for (int m = 0; m < nmod; ++m) {
        for (int u = 0; u < static_cast<int>(p.modules[m].size()); ++u) {
            const auto& unit = p.modules[m][u];
            int nfn = static_cast<int>(unit_functions(unit, u).size());
            for (int f = 0; f < nfn; ++f) {
                for (auto kind : {MutationKind::Throw, MutationKind::Constant}) {
                    if (mutation_applies(unit, f, kind)) {
                        (reached.count({m, u}) ? candidates : unreached).push_back({m, u, f, kind});
                    }
                }
            }
        }
    }
    std::shuffle(candidates.begin(), candidates.end(), rng);
    std::shuffle(unreached.begin(), unreached.end(), rng);
    // Mostly mutations some test executes, plus one that no test reaches.
    for (const auto& m : candidates) {
        if (static_cast<int>(p.mutations.size()) + 1 >= options.mutations) {
            break;
        }
        p.mutations.push_back(m);
    }
    if (!unreached.empty()) {
        p.mutations.push_back(unreached.front());
    }
    for (std::size_t k = 0; static_cast<int>(p.mutations.size()) < options.mutations && k < candidates.size(); ++k) {
        if (std::find_if(p.mutations.begin(), p.mutations.end(), [&](const Mutation& x) {
                return x.module == candidates[k].module && x.unit == candidates[k].unit &&
                       x.function == candidates[k].function && x.kind == candidates[k].kind;
            }) == p.mutations.end()) {
            p.mutations.push_back(candidates[k]);
        }
    }
    return p;
}

std::vector<CorpusProject> generate_corpus(unsigned seed, int count, const CorpusOptions& options)
{
    std::mt19937 rng(seed);
    std::vector<CorpusProject> out;
    for (int i = 0; i < count; ++i) {
        char name[16];
        std::snprintf(name, sizeof name, "p%02d", i);
        out.push_back(generate_project(rng, name, options));
    }
    return out;
}

void bake(CorpusProject& project, const fs::path& scratch)
{
    project.expected.clear();
    write_tree(scratch, project.render());
    json calls = json::array();
    for (const auto& t : project.tests) {
        json row = json::array();
        for (const auto& c : t) {
            row.push_back({project.module_path(c.module), "u_" + std::to_string(c.unit), c.arg});
        }
        calls.push_back(row);
    }
    write_text_file(scratch / "calls.json", calls.dump());
    write_text_file(scratch / "bake.js",
                    "const path = require('path');\n"
                    "const calls = require('./calls.json');\n"
                    "const out = calls.map((row) => row.map(([f, n, x]) => require(path.resolve(f))[n](x)));\n"
                    "process.stdout.write(JSON.stringify(out));\n");
    ProcessOptions opts;
    opts.cwd = scratch;
    opts.timeout = std::chrono::seconds(60);
    auto r = run_shell("node bake.js", opts);
    if (!r.ok()) {
        throw std::runtime_error("bake failed for " + project.name + ": " + r.err);
    }
    project.expected = json::parse(r.out).get<std::vector<std::vector<long long>>>();
    fs::remove(scratch / "calls.json");
    fs::remove(scratch / "bake.js");
}

}  // namespace srt::testing
