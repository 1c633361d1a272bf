#pragma once

#include "modernize/fortran_analyzer.hpp"
#include "modernize/knowledge_graph.hpp"

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace modernize {

enum class RetrievalMode { fulltext, community, concept_expansion, semantic_similar };

std::string to_string(RetrievalMode m);

double type_weight(RetrievalMode m);  // 1.0 / 0.9 / 0.8 / 0.7
double tier_weight(QueryTier t);      // 1.0 / 0.7 / 0.5

struct RetrievalResult {
    std::string chunk_id;
    RetrievalMode mode = RetrievalMode::fulltext;
    double raw_score = 0.0;
    std::optional<int> via_community;
};

struct RetrievalOptions {
    std::size_t fulltext_k = 20;
    std::size_t community_k = 20;
    std::size_t concept_k = 20;
    std::size_t semantic_seeds = 5;
    std::size_t min_communities = 3;
    std::size_t max_communities = 5;
    double hybrid_escalation = 0.5;  // raw cosine of the best fast hit
    bool parallel = true;
    bool escalate = false;  // comprehensive queries run as deep
};

/// Query text terms plus the query's keywords.
std::set<std::string> query_terms(const QuerySpec& query);

/// Builds a query from free text; the tier follows the strategy binding.
QuerySpec make_query(const std::string& text, Strategy strategy);

/// Community node ids: the best `min` always, then up to `max` while the score
/// stays positive. Score = sum of theme-term IDF over matched query terms.
std::vector<std::string> select_communities(const QuerySpec& query, const GraphStore& store,
                                            const RetrievalOptions& options = {});

/// Mode results concatenated in mode order, each mode sorted by score then id.
/// Throws UnknownStrategy for a strategy value outside the enum.
std::vector<RetrievalResult> retrieve(const QuerySpec& query, Strategy strategy, const GraphStore& store,
                                      const RetrievalOptions& options = {});

struct FusionFactors {
    double type_weight = 1.0;
    double community_weight = 1.0;
    double length_weight = 1.0;
    double tier_weight = 1.0;
    double relevance_factor = 1.0;
    double raw_score = 0.0;

    double product() const;
};

struct FusedCandidate {
    std::string chunk_id;
    double composite = 0.0;
    FusionFactors factors;
    RetrievalMode mode = RetrievalMode::fulltext;
    QueryTier tier = QueryTier::primary;
    std::string title;
    std::string content;

    nlohmann::json to_json() const;
};

struct QueryResults {
    QuerySpec query;
    std::vector<RetrievalResult> results;
};

inline constexpr std::size_t kMaxCandidates = 15;

/// 1 - 0.1 * size / max_size; 1 for chunks outside every community.
double community_weight(const GraphStore& store, const std::string& chunk_id);
double length_weight(std::size_t char_length);
/// 1 + fraction of the analysis features (pde, scheme, each BC, dimension) found in `content`.
double relevance_factor(const FortranAnalysis& analysis, const std::string& content);

/// Fulltext scores are max-normalised per query, duplicates collapse to the
/// highest raw score (ties: higher type weight, then higher tier weight),
/// composites follow the product law, top `limit` by composite then id.
std::vector<FusedCandidate> fuse(const std::vector<QueryResults>& per_query, const FortranAnalysis& analysis,
                                 const GraphStore& store, std::size_t limit = kMaxCandidates);

struct RagContext {
    std::vector<FusedCandidate> candidates;
    std::optional<FortranAnalysis> analysis;
    std::string assembled;
};

/// Runs every generated query under its bound strategy and fuses the lot.
RagContext build_context(const FortranAnalysis& analysis, const GraphStore& store, const RetrievalOptions& options = {});

/// Role and requirements, workflow pattern, analysis, examples (when any),
/// source, guidelines, output schema. Attempt numbers above 1 are stamped
/// after the role block; `feedback` lines follow the source.
std::string build_prompt(const std::string& fortran, const RagContext& ctx, int attempt = 1,
                         const std::vector<std::string>& feedback = {});

/// Schema text appended to every conversion prompt.
const std::string& output_schema_text();

}  // namespace modernize
