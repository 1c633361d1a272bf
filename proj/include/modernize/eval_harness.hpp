#pragma once

#include "modernize/fortran_analyzer.hpp"
#include "modernize/knowledge_graph.hpp"
#include "modernize/retrieval_fusion.hpp"
#include "modernize/semantic_layer.hpp"

#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace modernize {

enum class BenchmarkTier { basic, intermediate, advanced };

std::string to_string(BenchmarkTier t);
BenchmarkTier benchmark_tier_from_string(const std::string& s);  // throws Error

/// Ground truth entries are chunk ids or corpus-relative source paths; a
/// retrieved chunk is relevant when either its id or its source path is listed.
struct BenchmarkQuery {
    std::string text;
    BenchmarkTier tier = BenchmarkTier::basic;
    std::set<std::string> ground_truth;
    std::set<std::string> expected_topics;
};

/// One JSON object per line: text, tier, ground_truth, expected_topics.
/// Throws FileError, ParseFailure and MissingGroundTruth.
std::vector<BenchmarkQuery> load_benchmark(const std::string& path);

/// Relevant results over min(k, returned); 0 when nothing is returned.
double precision_at_k(const std::vector<std::string>& results, const std::set<std::string>& truth, std::size_t k = 5);
/// Distinct truth entries found in the top k over the truth size.
double recall_at_k(const std::vector<std::string>& results, const std::set<std::string>& truth, std::size_t k = 5);
/// 1 / rank of the first relevant result, 0 when none is.
double reciprocal_rank(const std::vector<std::string>& results, const std::set<std::string>& truth);
double mrr(const std::vector<std::vector<std::string>>& results, const std::vector<std::set<std::string>>& truths);

/// Maps each chunk id to the truth entry it satisfies (its id or its source path), else keeps the id.
std::vector<std::string> relevance_keys(const std::vector<std::string>& chunk_ids, const std::set<std::string>& truth,
                                        const GraphStore& store);

/// Fused ranking of one free-text query under one strategy.
std::vector<std::string> ranked_chunks(const std::string& text, Strategy strategy, const GraphStore& store,
                                       const RetrievalOptions& options = {});

/// Mean pairwise 1 - cosine over the embeddings of the first `k` chunks; 0 below two.
double diversity(const std::vector<std::string>& chunk_ids, const GraphStore& store, Embedder& embedder,
                 std::size_t k = 5);

struct QueryMetrics {
    std::string text;
    BenchmarkTier tier = BenchmarkTier::basic;
    Strategy strategy = Strategy::comprehensive;
    double precision_at_5 = 0.0;
    double recall_at_5 = 0.0;
    double reciprocal_rank = 0.0;
    double response_time_s = 0.0;
    double diversity = 0.0;
    std::vector<std::string> top;

    nlohmann::json to_json() const;
};

struct StrategySummary {
    Strategy strategy = Strategy::comprehensive;
    std::size_t queries = 0;
    double precision_at_5 = 0.0;
    double recall_at_5 = 0.0;
    double mrr = 0.0;
    double response_time_s = 0.0;
    double diversity = 0.0;

    nlohmann::json to_json() const;
};

struct MetricsReport {
    std::vector<QueryMetrics> per_query;
    std::vector<StrategySummary> strategies;

    const StrategySummary* summary(Strategy s) const;
    nlohmann::json to_json() const;
    /// Strategy comparison table.
    std::string to_markdown() const;
};

/// Every query under every strategy, timed per query. Throws MissingGroundTruth.
MetricsReport run_benchmark(const GraphStore& store, const std::vector<BenchmarkQuery>& queries,
                            const std::vector<Strategy>& strategies, Embedder& embedder,
                            const RetrievalOptions& options = {});

}  // namespace modernize
