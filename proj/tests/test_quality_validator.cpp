#include "modernize/errors.hpp"
#include "modernize/quality_validator.hpp"
#include "modernize/text.hpp"

#include "table3.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <random>

using namespace modernize;
using modernize::table3::table;
namespace fs = std::filesystem;

namespace {

std::string fixture(const std::string& rel) { return std::string(MODERNIZE_FIXTURES) + "/" + rel; }
std::string load(const std::string& rel) { return text::read_file(fixture(rel)); }

struct Pair {
    FortranAnalysis analysis;
    std::string code;
};

Pair pair(const std::string& f90, const std::string& py) { return {analyze(load(f90)), load("mock/code/" + py)}; }

class ScriptedJudge : public LlmBackend {
public:
    explicit ScriptedJudge(std::vector<std::string> replies) : replies_(std::move(replies)) {}
    std::string complete(const LlmRequest& r) override {
        last = r;
        return replies_[std::min(calls++, replies_.size() - 1)];
    }
    std::size_t calls = 0;
    LlmRequest last;

private:
    std::vector<std::string> replies_;
};

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() / ("qv-" + std::to_string(std::random_device{}()));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    fs::path script(const std::string& name, const std::string& body) const {
        auto p = path_ / name;
        text::write_file(p.string(), "#!/bin/sh\n" + body);
        fs::permissions(p, fs::perms::owner_all);
        return p;
    }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

}  // namespace

TEST(Scoring, ReproducesPerCaseTable) {
    auto t0 = std::chrono::steady_clock::now();
    ASSERT_EQ(table().size(), 13u);
    std::vector<std::pair<std::string, QualityReport>> reports;
    for (const auto& row : table()) {
        SCOPED_TRACE(row.name);
        auto c = combine(row.dims, row.judge);
        EXPECT_NEAR(c.final, row.final, 0.005);
        EXPECT_EQ(to_string(c.grade), row.grade);
        reports.emplace_back(row.name, make_report(row.dims, row.judge, {}, row.confidence));
    }
    EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(1));
    auto csv = text::split_lines(quality_csv(reports));
    ASSERT_GE(csv.size(), 14u);
    EXPECT_EQ(csv[0], "Case,Final,Grade,Confidence,Duration (s),Execution,Structure,API,Parameters,Conv. Fidelity,LLM Judge");
    EXPECT_TRUE(text::starts_with(csv[1], "acoustic_wave_2d,0.941,A,0.750,"));
    EXPECT_TRUE(text::ends_with(csv[1], ",1.000,1.000,1.000,1.000,0.820,0.900"));
}

TEST(Scoring, EquationsHoldOnRandomTuples) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ScoringWeights w;
    for (int i = 0; i < 1000; ++i) {
        DimensionScores d{u(rng), u(rng), u(rng), u(rng), u(rng)};
        double judge = u(rng);
        auto c = combine(d, judge, w);
        double trad = 0.30 * d.execution + 0.25 * d.structure + 0.25 * d.api + 0.10 * d.parameters + 0.10 * d.fidelity;
        EXPECT_NEAR(c.traditional, trad, 1e-12);
        EXPECT_NEAR(c.final, 0.5 * trad + 0.5 * judge, 1e-12);
        EXPECT_EQ(c.grade, grade_for(c.final));
    }
}

TEST(Scoring, MonotoneInEveryDimension) {
    DimensionScores base{0.5, 0.5, 0.5, 0.5, 0.5};
    double f0 = combine(base, 0.5).final;
    for (double DimensionScores::*m : {&DimensionScores::execution, &DimensionScores::structure, &DimensionScores::api,
                                       &DimensionScores::parameters, &DimensionScores::fidelity}) {
        auto d = base;
        d.*m = 0.9;
        EXPECT_GT(combine(d, 0.5).final, f0);
    }
    EXPECT_GT(combine(base, 0.9).final, f0);
}

TEST(Scoring, GradeBoundaries) {
    EXPECT_EQ(grade_for(0.80), Grade::A);
    EXPECT_EQ(grade_for(0.7999), Grade::B);
    EXPECT_EQ(grade_for(0.65), Grade::B);
    EXPECT_EQ(grade_for(0.50), Grade::C);
    EXPECT_EQ(grade_for(0.35), Grade::D);
    EXPECT_EQ(grade_for(0.3499), Grade::F);
}

TEST(Scoring, WeightsAreValidated) {
    EXPECT_NO_THROW(ScoringWeights{}.check());
    ScoringWeights bad;
    bad.execution = 0.5;
    EXPECT_THROW(bad.check(), ConfigError);
    ScoringWeights lam;
    lam.lambda = 1.5;
    EXPECT_THROW(lam.check(), ConfigError);
}

TEST(Scoring, ConfidenceDefaultsToThreeQuarters) {
    DimensionScores d{1, 1, 1, 1, 1};
    EXPECT_DOUBLE_EQ(make_report(d, 1.0, {}).confidence, 0.75);
    EXPECT_DOUBLE_EQ(make_report(d, 1.0, {}, 0.95).confidence, 0.95);
    auto j = make_report(d, 1.0, {}).to_json();
    EXPECT_EQ(j["grade"], "A");
    EXPECT_TRUE(j.contains("weights_note"));
}

TEST(StaticScores, StructureCountsDslConstructs) {
    EXPECT_DOUBLE_EQ(structure_score(load("mock/code/heat2d.py")), 1.0);
    EXPECT_DOUBLE_EQ(structure_score(load("mock/code/wave1d_loops.py")), 0.0);
    EXPECT_DOUBLE_EQ(structure_score("from devito import Grid, Eq\ng = Grid(shape=(4,))\n"), 0.25);
    EXPECT_DOUBLE_EQ(structure_score("def broken(:\n"), 0.0);
}

TEST(StaticScores, ParametersMatchByNameThenLiteral) {
    auto heat = pair("heat2d.f90", "heat2d.py");
    EXPECT_NEAR(parameter_score(heat.analysis, heat.code), 6.0 / 7.0, 1e-12);
    auto advect = pair("advect1d_upwind.f90", "advect1d.py");
    EXPECT_DOUBLE_EQ(parameter_score(advect.analysis, advect.code), 1.0);
    EXPECT_DOUBLE_EQ(parameter_score(FortranAnalysis{}, "x = 1\n"), 1.0);
    EXPECT_DOUBLE_EQ(parameter_score(heat.analysis, "def broken(:\n"), 0.0);
}

TEST(StaticScores, FeaturesReadBackFromCode) {
    auto heat = detect_code_features(load("mock/code/heat2d.py"));
    EXPECT_EQ(heat.dimensions, 2);
    EXPECT_EQ(heat.pde_class, PdeClass::parabolic);
    auto draft = detect_code_features(load("mock/code/advect1d_draft.py"));
    EXPECT_EQ(draft.scheme, Scheme::central);
    auto fixed = detect_code_features(load("mock/code/advect1d.py"));
    EXPECT_EQ(fixed.pde_class, PdeClass::hyperbolic);
    EXPECT_EQ(fixed.scheme, Scheme::upwind);
    EXPECT_TRUE(fixed.boundary_conditions.count(BoundaryCondition::periodic));
    EXPECT_THROW(detect_code_features("def broken(:\n"), SyntaxErrorInCode);
}

TEST(StaticScores, FidelityComparesFeatures) {
    auto heat = pair("heat2d.f90", "heat2d.py");
    EXPECT_DOUBLE_EQ(fidelity_score(heat.analysis, detect_code_features(heat.code)), 1.0);
    auto draft = pair("advect1d_upwind.f90", "advect1d_draft.py");
    EXPECT_DOUBLE_EQ(fidelity_score(draft.analysis, detect_code_features(draft.code)), 0.5);
    EXPECT_DOUBLE_EQ(fidelity_score(FortranAnalysis{}, CodeFeatures{}), 0.5);

    FortranAnalysis ftcs;
    ftcs.scheme = Scheme::ftcs;
    ftcs.boundary_conditions = {BoundaryCondition::unknown};
    CodeFeatures central;
    central.scheme = Scheme::central;
    EXPECT_DOUBLE_EQ(fidelity_score(ftcs, central), 0.5);
}

TEST(StaticScores, ImportsResolveAgainstPinnedApi) {
    auto rules = RuleSet::defaults();
    EXPECT_TRUE(imports_resolve(load("mock/code/heat2d.py"), rules));
    std::string bad;
    EXPECT_FALSE(imports_resolve("from devito import Grid, MagicSolver\n", rules, &bad));
    EXPECT_NE(bad.find("MagicSolver"), std::string::npos);
    EXPECT_FALSE(imports_resolve("import nosuchpackage\n", rules, &bad));
    EXPECT_FALSE(imports_resolve("def broken(:\n", rules));
}

TEST(StaticScores, FallbackExecutionWhenRunnerAbsent) {
    auto heat = pair("heat2d.f90", "heat2d.py");
    auto rules = RuleSet::defaults();
    std::vector<std::string> notes;
    auto dims = score_static(heat.code, heat.analysis, run_guardrails(heat.code, rules), std::nullopt, rules, &notes);
    EXPECT_DOUBLE_EQ(dims.execution, 1.0);
    EXPECT_DOUBLE_EQ(dims.structure, 1.0);
    EXPECT_DOUBLE_EQ(dims.api, 1.0);
    EXPECT_NEAR(dims.parameters, 6.0 / 7.0, 1e-12);
    EXPECT_DOUBLE_EQ(dims.fidelity, 1.0);
    ASSERT_FALSE(notes.empty());
    EXPECT_NE(notes.back().find("fallback"), std::string::npos);
}

TEST(StaticScores, DenylistHitsLowerApiScore) {
    std::string code = load("mock/code/heat2d.py") + "\nv = u.dx.backward\nw = u.dy.forward\n";
    auto heat = pair("heat2d.f90", "heat2d.py");
    auto rules = RuleSet::defaults();
    auto dims = score_static(code, heat.analysis, run_guardrails(code, rules), std::nullopt, rules);
    EXPECT_DOUBLE_EQ(dims.api, 0.5);
}

TEST(StaticScores, ExecutionComesFromRunnerReport) {
    auto heat = pair("heat2d.f90", "heat2d.py");
    auto rules = RuleSet::defaults();
    auto g = run_guardrails(heat.code, rules);
    ExecutionReport failed;
    failed.ran = true;
    failed.exit_code = 1;
    failed.phase = ExecutionReport::Phase::runtime_error;
    EXPECT_DOUBLE_EQ(score_static(heat.code, heat.analysis, g, failed, rules).execution, 0.0);
    ExecutionReport ok;
    ok.ran = true;
    EXPECT_DOUBLE_EQ(score_static(heat.code, heat.analysis, g, ok, rules).execution, 1.0);
}

TEST(ExecutionReport, ParsesRunnerJson) {
    auto r = ExecutionReport::from_json(
        R"({"ran": true, "exit_code": 1, "phase": "runtime_error", "stderr_tail": "ZeroDivisionError", "duration_s": 0.4, "timed_out": false})");
    EXPECT_TRUE(r.ran);
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_EQ(r.phase, ExecutionReport::Phase::runtime_error);
    EXPECT_EQ(r.stderr_tail, "ZeroDivisionError");
    EXPECT_THROW(ExecutionReport::from_json("not json"), MalformedJson);
    EXPECT_THROW(ExecutionReport::from_json(R"({"ran": true})"), SchemaViolation);
    EXPECT_THROW(
        ExecutionReport::from_json(
            R"({"ran": true, "exit_code": 0, "phase": "exploded", "stderr_tail": "", "duration_s": 0, "timed_out": false})"),
        SchemaViolation);
}

TEST(ExecutionReport, RunsExternalRunner) {
    TempDir dir;
    auto runner = dir.script("runner.sh",
                             "echo '{\"ran\": true, \"exit_code\": 0, \"phase\": \"ok\", \"stderr_tail\": \"\", "
                             "\"duration_s\": 0.1, \"timed_out\": false, \"args\": \"'\"$2 $3\"'\"}'\n");
    std::vector<std::string> notes;
    auto r = run_exec_runner(runner.string(), "script.py", 30, &notes);
    ASSERT_TRUE(r.has_value());
    EXPECT_EQ(r->phase, ExecutionReport::Phase::ok);
    EXPECT_TRUE(notes.empty());
}

TEST(ExecutionReport, FallsBackWhenRunnerUnusable) {
    TempDir dir;
    std::vector<std::string> notes;
    EXPECT_FALSE(run_exec_runner("", "s.py", 5, &notes).has_value());
    EXPECT_FALSE(run_exec_runner((dir.path() / "absent").string(), "s.py", 5, &notes).has_value());
    auto garbage = dir.script("garbage.sh", "echo hello\n");
    EXPECT_FALSE(run_exec_runner(garbage.string(), "s.py", 5, &notes).has_value());
    ASSERT_EQ(notes.size(), 3u);
    for (const auto& n : notes) EXPECT_NE(n.find("fallback"), std::string::npos);
}

TEST(Judge, ParsesReplies) {
    auto j = parse_judge(R"({"score": 0.8, "justification": "faithful"})");
    ASSERT_TRUE(j.has_value());
    EXPECT_DOUBLE_EQ(j->score, 0.8);
    EXPECT_EQ(j->justification, "faithful");
    EXPECT_DOUBLE_EQ(parse_judge("```json\n{\"score\": 0.25}\n```")->score, 0.25);
    EXPECT_DOUBLE_EQ(parse_judge("Overall fine.\nScore: 0.7\n")->score, 0.7);
    EXPECT_FALSE(parse_judge("{\"score\": 1.4}").has_value());
    EXPECT_FALSE(parse_judge("looks good to me").has_value());
}

TEST(Judge, PromptCarriesRubricAndBothCodes) {
    EXPECT_NE(text::to_lower(judge_system_prompt()).find("judge"), std::string::npos);
    auto user = judge_user_prompt("program heat2d", "from devito import Grid");
    EXPECT_NE(user.find("program heat2d"), std::string::npos);
    EXPECT_NE(user.find("from devito import Grid"), std::string::npos);
    EXPECT_NE(user.find("30"), std::string::npos);
}

TEST(Judge, UsesMockFixture) {
    auto backend = std::make_shared<MockBackend>(MockBackend::from_file(fixture("mock/responses.json")));
    Gateway gateway(backend, {2, 0, std::chrono::milliseconds(1)});
    auto r = judge_llm(load("heat2d.f90"), load("mock/code/heat2d.py"), gateway);
    EXPECT_DOUBLE_EQ(r.score, 0.9);
}

TEST(Judge, RetriesOnceThenGivesUp) {
    auto once = std::make_shared<ScriptedJudge>(std::vector<std::string>{"hmm", "{\"score\": 0.6}"});
    Gateway g1(once, {2, 0, std::chrono::milliseconds(1)});
    EXPECT_DOUBLE_EQ(judge_llm("f", "c", g1).score, 0.6);
    EXPECT_EQ(once->calls, 2u);
    EXPECT_DOUBLE_EQ(once->last.temperature, 0.0);

    auto never = std::make_shared<ScriptedJudge>(std::vector<std::string>{"no idea"});
    Gateway g2(never, {2, 0, std::chrono::milliseconds(1)});
    EXPECT_THROW(judge_llm("f", "c", g2), JudgeUnparseable);
    EXPECT_EQ(never->calls, 2u);
}
