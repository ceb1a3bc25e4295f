#pragma once

// Shared helpers for the unit, integration and acceptance suites.

#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "srt/project.hpp"

namespace srt::testing {

std::filesystem::path fixtures_dir();
std::filesystem::path agent_path();
std::filesystem::path harness_path();
std::filesystem::path srt_binary();

/// Removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "srt");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

private:
    std::filesystem::path path_;
};

void write_tree(const std::filesystem::path& root, const std::map<std::string, std::string>& files);
std::map<std::string, std::string> read_tree(const std::filesystem::path& root);

/// git-style unified diff of one file (3 lines of context). An absent side
/// is rendered as /dev/null.
std::string unified_diff(const std::string& path, const std::optional<std::string>& before,
                         const std::optional<std::string>& after);
/// Diff of two whole trees, files in path order.
std::string tree_diff(const std::map<std::string, std::string>& before,
                      const std::map<std::string, std::string>& after);

/// `srt.json` pointing the runner at the fixture harness and agent.
std::string corpus_config();

/// Runs the harness over `tests` in `dir`; returns the failing test ids.
std::set<std::string> failing_tests(const std::filesystem::path& dir, const std::vector<std::string>& tests);

// ---- synthetic corpus --------------------------------------------------

enum class UnitKind { Declaration, Arrow, Class, Callback, ObjectMethod, Getter };

struct Unit {
    UnitKind kind = UnitKind::Declaration;
    int a = 2;
    int b = 1;
    int c = 3;
    /// (module, unit) this unit calls, if any.
    std::optional<std::pair<int, int>> dep;
};

enum class MutationKind { Throw, Constant };

struct Mutation {
    int module = 0;
    int unit = 0;
    /// Index into the unit's functions as listed by unit_functions().
    int function = 0;
    MutationKind kind = MutationKind::Throw;

    std::string describe() const;
};

struct Call {
    int module = 0;
    int unit = 0;
    int arg = 0;
};

struct CorpusProject {
    std::string name;
    std::vector<std::vector<Unit>> modules;
    /// Each test file is a list of calls checked against baked values.
    std::vector<std::vector<Call>> tests;
    std::vector<Mutation> mutations;
    /// Filled by bake(): expected values per test, per call.
    std::vector<std::vector<long long>> expected;

    std::string module_path(int m) const;
    std::string test_path(int t) const;
    std::vector<std::string> test_ids() const;

    /// Sources with an optional mutation applied. Before bake() the test
    /// files reference placeholders and are not runnable.
    std::map<std::string, std::string> render(const std::optional<Mutation>& mutation = std::nullopt) const;
};

/// Function names (name chains after `file::`) a unit defines, in source order.
std::vector<std::string> unit_functions(const Unit& unit, int index);
/// Whether a mutation kind applies to that function.
bool mutation_applies(const Unit& unit, int function, MutationKind kind);

struct CorpusOptions {
    int min_modules = 3;
    int max_modules = 8;
    int min_tests = 4;
    int max_tests = 12;
    int mutations = 6;
};

CorpusProject generate_project(std::mt19937& rng, const std::string& name, const CorpusOptions& options = {});
std::vector<CorpusProject> generate_corpus(unsigned seed, int count, const CorpusOptions& options = {});

/// Runs node once over the unmutated project to record expected values.
void bake(CorpusProject& project, const std::filesystem::path& scratch);

}  // namespace srt::testing
