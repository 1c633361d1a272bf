#include "modernize/corpus_ingest.hpp"
#include "modernize/errors.hpp"
#include "modernize/text.hpp"
#include "modernize/workflow_engine.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <mutex>

using namespace modernize;
using namespace std::chrono_literals;

namespace {

std::string fixture(const std::string& rel) { return std::string(MODERNIZE_FIXTURES) + "/" + rel; }

const GraphStore& store() {
    static const GraphStore s = [] {
        auto g = build_graph(ingest_corpus(fixture("docs")), default_dictionary());
        g.build_fulltext();
        return g;
    }();
    return s;
}

class Recorder : public LlmBackend {
public:
    explicit Recorder(std::shared_ptr<LlmBackend> inner) : inner_(std::move(inner)) {}
    std::string complete(const LlmRequest& r) override {
        {
            std::lock_guard lock(mu_);
            prompts.push_back(r.user);
        }
        return inner_->complete(r);
    }
    std::vector<std::string> prompts;

private:
    std::shared_ptr<LlmBackend> inner_;
    std::mutex mu_;
};

struct Rig {
    std::shared_ptr<Recorder> converter;
    std::shared_ptr<MockBackend> judge_backend;
    Gateway convert_gw;
    Gateway judge_gw;
    WorkflowEngine engine;

    explicit Rig(std::shared_ptr<LlmBackend> convert_backend, std::shared_ptr<MockBackend> judge,
                 std::size_t in_flight = 4)
        : converter(std::make_shared<Recorder>(std::move(convert_backend))),
          judge_backend(std::move(judge)),
          convert_gw(converter, {in_flight, 0, 1ms}),
          judge_gw(judge_backend, {in_flight, 0, 1ms}),
          engine(store(), convert_gw, judge_gw) {}
};

std::shared_ptr<MockBackend> fixture_mock(std::chrono::milliseconds latency = 0ms) {
    return std::make_shared<MockBackend>(MockBackend::from_file(fixture("mock/responses.json"), latency));
}

std::vector<Route> routes(const WorkflowResult& r) {
    std::vector<Route> out;
    for (const auto& h : r.history) out.push_back(h.route);
    return out;
}

std::size_t count(const std::vector<Node>& trace, Node n) { return std::count(trace.begin(), trace.end(), n); }

}  // namespace

TEST(Route, Bands) {
    Thresholds t;
    EXPECT_EQ(route(0.90, 1, t), Route::pass);
    EXPECT_EQ(route(0.85, 3, t), Route::pass);
    EXPECT_EQ(route(0.60, 1, t), Route::refine);
    EXPECT_EQ(route(0.55, 2, t), Route::refine);
    EXPECT_EQ(route(0.40, 1, t), Route::reconvert);
    EXPECT_EQ(route(0.10, 2, t), Route::reconvert);
    EXPECT_EQ(route(0.40, 3, t), Route::finalize);
    EXPECT_EQ(route(0.84, 3, t), Route::finalize);
}

TEST(Route, TotalOverGrid) {
    Thresholds t;
    for (int attempt = 1; attempt <= t.max_iterations; ++attempt) {
        for (int i = 0; i <= 1000; ++i) {
            double f = i / 1000.0;
            Route r = route(f, attempt, t);
            if (f >= t.excellent) {
                EXPECT_EQ(r, Route::pass);
            } else if (attempt == t.max_iterations) {
                EXPECT_EQ(r, Route::finalize);
            } else {
                EXPECT_EQ(r, f >= t.acceptable ? Route::refine : Route::reconvert);
            }
        }
    }
}

TEST(Route, ThresholdsAreChecked) {
    EXPECT_NO_THROW(Thresholds{}.check());
    EXPECT_THROW((Thresholds{0.5, 0.6, 0.3, 3}.check()), ConfigError);
    EXPECT_THROW((Thresholds{0.85, 0.55, 0.30, 0}.check()), ConfigError);
}

TEST(Refinement, GuidanceFollowsLowestDimension) {
    EXPECT_EQ(lowest_dimension({1, 1, 1, 1, 0.5}), "fidelity");
    EXPECT_EQ(lowest_dimension({1, 0, 1, 0, 1}), "structure");
    EXPECT_NE(refinement_guidance({1, 1, 1, 1, 0.5}).find("differential operators and equation type"),
              std::string::npos);
    EXPECT_NE(refinement_guidance({1, 1, 1, 0.2, 1}).find("parameter"), std::string::npos);
    EXPECT_NE(refinement_guidance({1, 1, 0.5, 1, 1}).find("invented API"), std::string::npos);
}

TEST(RunSingle, FirstShotPass) {
    Rig rig(fixture_mock(), fixture_mock());
    auto r = rig.engine.run_single(fixture("heat2d.f90"));
    EXPECT_EQ(routes(r), (std::vector<Route>{Route::pass}));
    EXPECT_NEAR(r.report.final, 0.943, 0.001);
    EXPECT_EQ(r.report.grade, Grade::A);
    EXPECT_DOUBLE_EQ(r.report.confidence, 0.95);
    EXPECT_EQ(r.trace, (std::vector<Node>{Node::analyze, Node::retrieve, Node::convert, Node::lint, Node::validate,
                                          Node::route, Node::finalize}));
    EXPECT_EQ(r.code, normalize_code(r.code));
    EXPECT_EQ(r.output.devito_code, r.code);
}

TEST(RunSingle, RefineThenPass) {
    Rig rig(fixture_mock(), fixture_mock());
    auto r = rig.engine.run_single(fixture("advect1d_upwind.f90"));
    ASSERT_EQ(r.history.size(), 2u);
    EXPECT_EQ(routes(r), (std::vector<Route>{Route::refine, Route::pass}));
    EXPECT_NEAR(r.history[0].final_score, 0.60, 0.005);
    EXPECT_NEAR(r.history[1].final_score, 0.90, 0.005);
    EXPECT_EQ(r.best_attempt, 2);
    EXPECT_EQ(count(r.trace, Node::refine), 1u);
    EXPECT_EQ(count(r.trace, Node::retrieve), 1u);
    ASSERT_EQ(rig.converter->prompts.size(), 2u);
    EXPECT_NE(rig.converter->prompts[1].find("Conversion attempt: 2"), std::string::npos);
    EXPECT_NE(rig.converter->prompts[1].find("differential operators and equation type"), std::string::npos);
}

TEST(RunSingle, ReconvertUntilCapKeepsBest) {
    Rig rig(fixture_mock(), fixture_mock());
    auto r = rig.engine.run_single(fixture("fortran/wave1d.f90"));
    EXPECT_EQ(routes(r), (std::vector<Route>{Route::reconvert, Route::reconvert, Route::finalize}));
    for (const auto& h : r.history) EXPECT_NEAR(h.final_score, 0.40, 0.005);
    EXPECT_EQ(r.best_attempt, 1);
    EXPECT_EQ(count(r.trace, Node::retrieve), 3u);
    EXPECT_EQ(count(r.trace, Node::finalize), 1u);
    EXPECT_TRUE(r.below(0.55));
}

TEST(RunSingle, FinalizeSelectsMaxFinal) {
    auto valid = text::read_file(fixture("mock/valid_conversion.json"));
    auto j = nlohmann::json::parse(valid);
    j["devito_code"] = text::read_file(fixture("mock/code/wave1d_loops.py"));
    auto weak = j.dump();
    auto convert = std::make_shared<MockBackend>(
        std::vector<MockBackend::Entry>{{"", "convert", {weak, valid, weak}}});
    auto judge = std::make_shared<MockBackend>(std::vector<MockBackend::Entry>{
        {"program wave1d", "judge", {"{\"score\": 0.15}"}}, {"", "judge", {"{\"score\": 0.2}"}}});
    Rig rig(convert, judge);
    auto r = rig.engine.run_single(fixture("heat2d.f90"));
    ASSERT_EQ(r.history.size(), 3u);
    EXPECT_EQ(r.history.back().route, Route::finalize);
    EXPECT_EQ(r.best_attempt, 2);
    double best = 0;
    for (const auto& h : r.history) best = std::max(best, h.final_score);
    EXPECT_DOUBLE_EQ(r.report.final, best);
}

TEST(RunSingle, SchemaRejectionIsRetried) {
    auto valid = text::read_file(fixture("mock/valid_conversion.json"));
    auto convert = std::make_shared<MockBackend>(
        std::vector<MockBackend::Entry>{{"", "convert", {"{\"devito_code\": \"x\"}", valid}}});
    Rig rig(convert, fixture_mock());
    auto r = rig.engine.run_single(fixture("heat2d.f90"));
    EXPECT_EQ(routes(r), (std::vector<Route>{Route::reconvert, Route::pass}));
    EXPECT_DOUBLE_EQ(r.history[0].final_score, 0.0);
    EXPECT_NE(rig.converter->prompts[1].find("rejected"), std::string::npos);
}

TEST(RunSingle, SchemaFailureOnEveryAttemptThrows) {
    auto convert = std::make_shared<MockBackend>(std::vector<MockBackend::Entry>{{"", "convert", {"not json"}}});
    Rig rig(convert, fixture_mock());
    EXPECT_THROW(rig.engine.run_single(fixture("heat2d.f90")), MalformedJson);
}

TEST(RunSingle, MissingFileThrows) {
    Rig rig(fixture_mock(), fixture_mock());
    EXPECT_THROW(rig.engine.run_single(fixture("absent.f90")), FileError);
}

TEST(RunFifo, StartsInOrderAndBoundsThreads) {
    std::mutex mu;
    std::vector<std::size_t> starts;
    std::atomic<int> live{0}, peak{0};
    run_fifo(10, 3, [&](std::size_t i) {
        {
            std::lock_guard lock(mu);
            starts.push_back(i);
        }
        int now = ++live;
        int p = peak.load();
        while (now > p && !peak.compare_exchange_weak(p, now)) {
        }
        std::this_thread::sleep_for(10ms);
        --live;
    });
    EXPECT_EQ(starts.size(), 10u);
    EXPECT_TRUE(std::is_sorted(starts.begin(), starts.end()));
    EXPECT_LE(peak.load(), 3);
}

TEST(RunBatch, EmptyListGivesEmptyReport) {
    Rig rig(fixture_mock(), fixture_mock());
    auto report = run_batch(rig.engine, {});
    EXPECT_TRUE(report.results.empty());
    EXPECT_EQ(report.exit_code(), 0);
    EXPECT_DOUBLE_EQ(report.throughput_per_hour, 0.0);
}

TEST(RunBatch, ClampsWorkers) {
    Rig rig(fixture_mock(), fixture_mock());
    auto report = run_batch(rig.engine, {fixture("heat2d.f90")}, {1});
    EXPECT_EQ(report.workers, 2u);
    ASSERT_EQ(report.warnings.size(), 1u);
    EXPECT_EQ(report.warnings[0], "workers=1 outside [2, 8], using 2");
}

TEST(RunBatch, IsolatesFailures) {
    Rig rig(fixture_mock(), fixture_mock());
    auto report = run_batch(rig.engine, {fixture("heat2d.f90"), fixture("absent.f90"), fixture("advect1d_upwind.f90")});
    ASSERT_EQ(report.results.size(), 3u);
    EXPECT_FALSE(report.results[0].error);
    ASSERT_TRUE(report.results[1].error);
    EXPECT_NE(report.results[1].error->find("absent.f90"), std::string::npos);
    EXPECT_FALSE(report.results[2].error);
    EXPECT_NEAR(report.results[0].report.final, 0.943, 0.001);
    EXPECT_NEAR(report.results[2].report.final, 0.90, 0.005);
    EXPECT_EQ(report.below_acceptable(), 1u);
    EXPECT_EQ(report.exit_code(), 1);
    auto csv = text::split_lines(report.to_csv());
    ASSERT_EQ(csv.size(), 4u);
    EXPECT_TRUE(text::starts_with(csv[1], "heat2d,0.943,A,0.950,"));
    EXPECT_TRUE(text::starts_with(csv[2], "absent,0.000,F,"));
    auto j = report.to_json();
    EXPECT_EQ(j["files"].size(), 3u);
    EXPECT_EQ(j["below_acceptable"], 1);
}

TEST(RunBatch, ParallelSpeedupUnderLatency) {
    std::vector<std::string> files(12, fixture("heat2d.f90"));
    Rig seq(fixture_mock(100ms), fixture_mock(100ms), 1);
    auto t0 = std::chrono::steady_clock::now();
    for (const auto& f : files) seq.engine.run_single(f);
    double sequential = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    Rig par(fixture_mock(100ms), fixture_mock(100ms), 4);
    auto report = run_batch(par.engine, files, {4, sequential});
    EXPECT_LE(report.wall_s, 0.35 * sequential);
    EXPECT_LE(par.convert_gw.peak_in_flight(), 4u);
    EXPECT_LE(par.judge_gw.peak_in_flight(), 4u);
    EXPECT_GE(report.speedup, 1.0 / 0.35);
    EXPECT_EQ(report.exit_code(), 0);
    EXPECT_NEAR(report.throughput_per_hour, 12.0 / report.wall_s * 3600.0, 1e-6);
}
