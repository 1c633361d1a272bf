#include "modernize/corpus_ingest.hpp"
#include "modernize/errors.hpp"
#include "modernize/eval_harness.hpp"
#include "modernize/text.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace modernize;

namespace {

std::string fixture(const std::string& rel) { return std::string(MODERNIZE_FIXTURES) + "/" + rel; }

struct Kb {
    GraphStore store;
    HashedEmbedder embedder;
};

Kb& kb() {
    static Kb k = [] {
        Kb out;
        out.store = build_graph(ingest_corpus(fixture("corpus")), default_dictionary());
        build_semantic_layer(out.store, out.embedder);
        out.store.build_fulltext();
        return out;
    }();
    return k;
}

const std::vector<Strategy> kAll = {Strategy::comprehensive, Strategy::fast, Strategy::deep, Strategy::hybrid};

}  // namespace

TEST(Metrics, PrecisionAtK) {
    std::set<std::string> truth{"a", "b", "c", "d"};
    EXPECT_DOUBLE_EQ(precision_at_k({"a", "b", "c", "d", "x"}, truth), 0.8);
    EXPECT_DOUBLE_EQ(precision_at_k({}, truth), 0.0);
    EXPECT_DOUBLE_EQ(precision_at_k({"a", "b", "c"}, truth), 1.0);
    EXPECT_DOUBLE_EQ(precision_at_k({"x", "a", "y", "b", "z", "c", "d"}, truth), 0.4);
}

TEST(Metrics, RecallAtK) {
    std::set<std::string> truth{"a", "b", "c", "d"};
    EXPECT_DOUBLE_EQ(recall_at_k({"a", "x", "b", "y", "c", "d"}, truth), 0.75);
    EXPECT_DOUBLE_EQ(recall_at_k({"a"}, {"a"}), 1.0);
    EXPECT_DOUBLE_EQ(recall_at_k({"x", "y"}, truth), 0.0);
    EXPECT_DOUBLE_EQ(recall_at_k({"a", "a", "a"}, truth), 0.25);
}

TEST(Metrics, ReciprocalRankAndMrr) {
    EXPECT_DOUBLE_EQ(reciprocal_rank({"a", "b"}, {"a"}), 1.0);
    EXPECT_DOUBLE_EQ(reciprocal_rank({"x", "a"}, {"a"}), 0.5);
    EXPECT_DOUBLE_EQ(reciprocal_rank({"x", "y"}, {"a"}), 0.0);
    EXPECT_DOUBLE_EQ(mrr({{"a"}, {"x", "b"}, {"y"}}, {{"a"}, {"b"}, {"c"}}), 0.5);
    EXPECT_DOUBLE_EQ(mrr({}, {}), 0.0);
}

TEST(Benchmark, LoadsElevenQueriesOverThreeTiers) {
    auto qs = load_benchmark(fixture("benchmark.jsonl"));
    ASSERT_EQ(qs.size(), 11u);
    std::set<BenchmarkTier> tiers;
    for (const auto& q : qs) {
        tiers.insert(q.tier);
        EXPECT_FALSE(q.ground_truth.empty());
        EXPECT_FALSE(q.expected_topics.empty());
    }
    EXPECT_EQ(tiers.size(), 3u);
}

TEST(Benchmark, RejectsBadFiles) {
    auto dir = std::filesystem::temp_directory_path() / "bench-test";
    std::filesystem::create_directories(dir);
    auto empty_truth = (dir / "empty.jsonl").string();
    text::write_file(empty_truth, R"({"text": "q", "tier": "basic", "ground_truth": []})" "\n");
    EXPECT_THROW(load_benchmark(empty_truth), MissingGroundTruth);
    auto broken = (dir / "broken.jsonl").string();
    text::write_file(broken, "{\"text\": \n");
    EXPECT_THROW(load_benchmark(broken), ParseFailure);
    auto tier = (dir / "tier.jsonl").string();
    text::write_file(tier, R"({"text": "q", "tier": "expert", "ground_truth": ["a"]})" "\n");
    EXPECT_THROW(load_benchmark(tier), ParseFailure);
    std::filesystem::remove_all(dir);
    EXPECT_THROW(run_benchmark(kb().store, {{"q", BenchmarkTier::basic, {}, {}}}, kAll, kb().embedder), MissingGroundTruth);
}

TEST(Benchmark, TruthMayNameSourceDocuments) {
    const auto& chunk = kb().store.chunks().front();
    std::set<std::string> truth{chunk.source_path};
    auto keys = relevance_keys({chunk.chunk_id, "other"}, truth, kb().store);
    EXPECT_EQ(keys, (std::vector<std::string>{chunk.source_path, "other"}));
}

TEST(Benchmark, FixtureMeetsRetrievalTargets) {
    auto qs = load_benchmark(fixture("benchmark.jsonl"));
    auto report = run_benchmark(kb().store, qs, kAll, kb().embedder);
    ASSERT_EQ(report.per_query.size(), qs.size() * kAll.size());
    const auto* comp = report.summary(Strategy::comprehensive);
    const auto* fast = report.summary(Strategy::fast);
    ASSERT_TRUE(comp && fast);
    EXPECT_GE(comp->precision_at_5, 0.90);
    EXPECT_DOUBLE_EQ(comp->mrr, 1.0);
    EXPECT_LE(fast->recall_at_5, comp->recall_at_5);
    for (const auto& m : report.per_query) {
        EXPECT_LT(m.response_time_s, 0.050) << m.text;
        for (double v : {m.precision_at_5, m.recall_at_5, m.reciprocal_rank, m.diversity}) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
    auto md = text::split_lines(report.to_markdown());
    ASSERT_EQ(md.size(), 2 + kAll.size());
    EXPECT_EQ(md[0], "| Strategy | Queries | P@5 | R@5 | MRR | Avg time (s) | Avg diversity |");
    EXPECT_EQ(report.to_json()["strategies"].size(), kAll.size());
}

TEST(Benchmark, DeepCoversComprehensive) {
    for (const auto& q : load_benchmark(fixture("benchmark.jsonl"))) {
        std::set<std::string> comp, deep;
        for (const auto& r : retrieve(make_query(q.text, Strategy::comprehensive), Strategy::comprehensive, kb().store)) {
            comp.insert(r.chunk_id);
        }
        for (const auto& r : retrieve(make_query(q.text, Strategy::deep), Strategy::deep, kb().store)) {
            deep.insert(r.chunk_id);
        }
        EXPECT_TRUE(std::includes(deep.begin(), deep.end(), comp.begin(), comp.end())) << q.text;
    }
}

TEST(Benchmark, EmptyStrategyListGivesEmptyReport) {
    auto report = run_benchmark(kb().store, load_benchmark(fixture("benchmark.jsonl")), {}, kb().embedder);
    EXPECT_TRUE(report.per_query.empty());
    EXPECT_TRUE(report.strategies.empty());
}

TEST(Benchmark, DiversityOfIdenticalAndDistinctChunks) {
    const auto& chunks = kb().store.chunks();
    EXPECT_DOUBLE_EQ(diversity({chunks[0].chunk_id}, kb().store, kb().embedder), 0.0);
    EXPECT_NEAR(diversity({chunks[0].chunk_id, chunks[0].chunk_id}, kb().store, kb().embedder), 0.0, 1e-12);
    EXPECT_GT(diversity({chunks.front().chunk_id, chunks.back().chunk_id}, kb().store, kb().embedder), 0.0);
}
