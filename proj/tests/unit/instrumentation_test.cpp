#include <gtest/gtest.h>

#include "srt/instrumentation.hpp"
#include "srt/serialization.hpp"
#include "support.hpp"

using namespace srt;
using srt::testing::TempDir;

namespace {

const std::string kCjs = "const __srt_agent = require(\"srt-agent\"); const __srt_file = \"src/f.js\";";

InstrumentedModule instrument(const std::string& src, const std::string& path = "src/f.js",
                              bool test_file = false)
{
    return instrument_module(parse_module(src, path), {}, test_file);
}

std::vector<std::string> ids_of(const std::string& src, const std::string& path)
{
    std::vector<std::string> out;
    for (const auto& r : enumerate_functions(parse_module(src, path))) {
        out.push_back(r.id.display() + "/" + std::to_string(r.param_count));
    }
    return out;
}

}  // namespace

TEST(InstrumentModule, SingleFunction)
{
    auto m = instrument("function f(a){return a}");
    EXPECT_EQ(m.output_text, kCjs + "function f(a){__srt_agent.probe(__srt_file, 0);return a}");
    ASSERT_EQ(m.probe_count, 1);
    ASSERT_EQ(m.id_table.size(), 1u);
    EXPECT_EQ(m.id_table[0].index, 0);
    EXPECT_EQ(m.id_table[0].id.display(), "src/f.js::f");
    EXPECT_EQ(m.id_table[0].param_count, 1);
}

TEST(InstrumentModule, ExpressionArrowBecomesBlock)
{
    auto m = instrument("const g = x => x+1");
    EXPECT_EQ(m.output_text, kCjs + "const g = x => { __srt_agent.probe(__srt_file, 0); return (x+1); }");
    EXPECT_EQ(ids_of(m.output_text, "src/f.js"), std::vector<std::string>{"src/f.js::g/1"});
}

TEST(InstrumentModule, NoFunctions)
{
    auto m = instrument("let x = 1;\nconsole.log(x);\n");
    EXPECT_EQ(m.probe_count, 0);
    EXPECT_TRUE(m.id_table.empty());
    EXPECT_EQ(m.output_text, kCjs + "let x = 1;\nconsole.log(x);\n");
}

TEST(InstrumentModule, EsmPrologue)
{
    auto m = instrument("import x from \"./x\";\nexport function f() {}\n");
    EXPECT_EQ(m.output_text.rfind("import __srt_agent from \"srt-agent\"; const __srt_file = \"src/f.js\";", 0), 0u);
}

TEST(InstrumentModule, DirectivesStayFirst)
{
    auto m = instrument("'use strict';\nfunction f() { 'use asm'; return 1; }\n");
    EXPECT_EQ(m.output_text.rfind("'use strict'; const __srt_agent", 0), 0u);
    EXPECT_NE(m.output_text.find("{ 'use asm';__srt_agent.probe(__srt_file, 0); return 1; }"), std::string::npos);

    auto bare = instrument("'use strict'\nlet a = 1\n");
    EXPECT_EQ(bare.output_text.rfind("'use strict'; const __srt_agent", 0), 0u);
}

TEST(InstrumentModule, HashbangKeepsFirstLine)
{
    auto m = instrument("#!/usr/bin/env node\nfunction f() {}\n");
    EXPECT_EQ(m.output_text.rfind("#!/usr/bin/env node\n" + kCjs, 0), 0u);
}

TEST(InstrumentModule, TestFileHook)
{
    auto m = instrument("test('x', () => {});\n", "test/a.test.js", true);
    EXPECT_NE(m.output_text.find("const __srt_file = \"test/a.test.js\"; __srt_agent.test_file(__srt_file);"),
              std::string::npos);
}

TEST(InstrumentModule, LineNumbersPreserved)
{
    const std::string src =
        "class A {\n"
        "  constructor(k) { this.k = k; }\n"
        "  get v() { return this.k; }\n"
        "  m(x) {\n"
        "    return [x].map((y) => y * 2).map(function (z) { return z; });\n"
        "  }\n"
        "}\n"
        "const o = { h(a, b) { return a + b; }, k: (q) => q };\n"
        "module.exports = { A, o };\n";
    auto before = parse_module(src, "src/a.js");
    auto m = instrument_module(before);
    auto after = parse_module(m.output_text, "src/a.js");
    auto rb = enumerate_functions(before);
    auto ra = enumerate_functions(after);
    ASSERT_EQ(rb.size(), ra.size());
    ASSERT_EQ(m.probe_count, static_cast<int>(rb.size()));
    for (std::size_t i = 0; i < rb.size(); ++i) {
        EXPECT_EQ(rb[i].id, ra[i].id);
        EXPECT_EQ(rb[i].span.start.line, ra[i].span.start.line) << rb[i].id.display();
        EXPECT_EQ(rb[i].span.end.line, ra[i].span.end.line) << rb[i].id.display();
        EXPECT_EQ(m.id_table[i].index, static_cast<int>(i));
    }
    EXPECT_EQ(after.line_count(), before.line_count());
}

TEST(InstrumentModule, EveryFunctionGetsExactlyOneProbe)
{
    const std::string src =
        "function a() { function b() { return () => () => 1; } return b; }\n"
        "const c = async (x) => { await x; };\n"
        "class D { static s() {} set v(x) {} }\n";
    auto m = instrument(src);
    for (int i = 0; i < m.probe_count; ++i) {
        std::string probe = "__srt_agent.probe(__srt_file, " + std::to_string(i) + ");";
        auto first = m.output_text.find(probe);
        ASSERT_NE(first, std::string::npos) << i;
        EXPECT_EQ(m.output_text.find(probe, first + 1), std::string::npos) << i;
    }
    EXPECT_EQ(m.output_text.find("probe(__srt_file, " + std::to_string(m.probe_count) + ")"), std::string::npos);
}

TEST(InstrumentModule, BrokenTemplateIsRejected)
{
    AgentConfig renaming;
    renaming.probe_template = "function extra() {}";
    EXPECT_THROW(instrument_module(parse_module("function f() {}", "src/f.js"), renaming),
                 InstrumentationError);

    AgentConfig unparsable;
    unparsable.probe_template = "(((";
    try {
        instrument_module(parse_module("function f() {}", "src/bad.js"), unparsable);
        FAIL() << "expected InstrumentationError";
    } catch (const InstrumentationError& e) {
        EXPECT_EQ(e.file(), "src/bad.js");
    }
}

TEST(InstrumentModule, CustomSpecifierIsQuoted)
{
    AgentConfig agent;
    agent.module_specifier = "/opt/agent \"x\".js";
    auto m = instrument_module(parse_module("", "a.js"), agent);
    EXPECT_EQ(m.output_text, "const __srt_agent = require(\"/opt/agent \\\"x\\\".js\"); const __srt_file = \"a.js\";");
}

TEST(InstrumentProject, MirrorsTreeAndWritesManifest)
{
    TempDir src("srt-inst"), out1("srt-inst"), out2("srt-inst");
    srt::testing::write_tree(src.path(), {
                                             {"src/a.js", "const b = require('./b');\nfunction f(x) { return b.g(x); }\nmodule.exports = { f };\n"},
                                             {"src/b.js", "exports.g = (y) => y + 1;\n"},
                                             {"test/a.test.js", "const a = require('../src/a');\ntest('f', () => a.f(1));\n"},
                                             {"README.md", "hello\n"},
                                         });
    auto project = load_project(src.path(), {".git", "node_modules"});
    ASSERT_TRUE(project.parse_errors.empty());
    auto m1 = instrument_project(src.path(), project.modules, {"test/a.test.js"}, out1.path());
    auto m2 = instrument_project(src.path(), project.modules, {"test/a.test.js"}, out2.path());

    EXPECT_EQ(m1.files.size(), 3u);
    EXPECT_EQ(m1.files.at("src/a.js"), (std::vector<ManifestEntry>{{0, "src/a.js::f", 1}}));
    EXPECT_EQ(m1.files.at("src/b.js"), (std::vector<ManifestEntry>{{0, "src/b.js::g", 1}}));
    EXPECT_EQ(m1.files.at("test/a.test.js"), (std::vector<ManifestEntry>{{0, "test/a.test.js::<anon#1>", 0}}));
    EXPECT_EQ(manifest_from_json(read_json_file(out1 / kManifestFileName)), m1);

    auto t1 = srt::testing::read_tree(out1.path());
    auto t2 = srt::testing::read_tree(out2.path());
    EXPECT_EQ(t1, t2);
    EXPECT_EQ(t1.at("README.md"), "hello\n");
    EXPECT_NE(t1.at("test/a.test.js").find("test_file(__srt_file)"), std::string::npos);
    EXPECT_EQ(t1.at("src/a.js").find("test_file("), std::string::npos);
}

TEST(InstrumentProject, NamesFailingFile)
{
    TempDir src("srt-inst"), out("srt-inst");
    srt::testing::write_tree(src.path(), {{"src/ok.js", "const x = 1;\n"}, {"src/bad.js", "function f() {}\n"}});
    auto project = load_project(src.path(), {});
    AgentConfig agent;
    agent.probe_template = "function extra() {}";
    try {
        instrument_project(src.path(), project.modules, {}, out.path(), agent);
        FAIL() << "expected InstrumentationError";
    } catch (const InstrumentationError& e) {
        EXPECT_EQ(e.file(), "src/bad.js");
    }
}

TEST(InstrumentProject, RefusesForeignOutputDir)
{
    TempDir src("srt-inst"), out("srt-inst");
    srt::testing::write_tree(src.path(), {{"a.js", "f();\n"}});
    srt::testing::write_tree(out.path(), {{"precious.txt", "keep\n"}});
    auto project = load_project(src.path(), {});
    EXPECT_ANY_THROW(instrument_project(src.path(), project.modules, {}, out.path()));
    EXPECT_EQ(srt::testing::read_tree(out.path()).at("precious.txt"), "keep\n");
}
