#pragma once

#include "modernize/knowledge_graph.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

namespace modernize {

using EmbeddingVector = std::vector<double>;

double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

class Embedder {
public:
    virtual ~Embedder() = default;
    /// Unit-norm vector of dimension(). Throws EmptyText on blank input.
    virtual EmbeddingVector embed(const std::string& text) = 0;
    virtual std::size_t dimension() const = 0;
};

/// Signed feature hashing of content terms with sublinear tf, unit-normalised.
class HashedEmbedder : public Embedder {
public:
    explicit HashedEmbedder(std::size_t dimension = 1024, std::uint64_t seed = 0x9e3779b97f4a7c15ULL);
    EmbeddingVector embed(const std::string& text) override;
    std::size_t dimension() const override { return dim_; }

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

/// OpenAI-style `POST {base_url}/embeddings`; plain http only.
class HttpEmbedder : public Embedder {
public:
    HttpEmbedder(std::string base_url, std::string model, std::size_t dimension, double timeout_s = 30.0);
    EmbeddingVector embed(const std::string& text) override;
    std::size_t dimension() const override { return dim_; }

private:
    std::string base_url_;
    std::string model_;
    std::size_t dim_;
    double timeout_s_;
};

/// Embeds (id, text) pairs with at most `max_parallel` calls in flight.
std::map<std::string, EmbeddingVector> embed_all(Embedder& embedder,
                                                 const std::vector<std::pair<std::string, std::string>>& items,
                                                 std::size_t max_parallel = 4);

inline constexpr double kSimilarityThreshold = 0.6;
inline constexpr std::size_t kSimilarityTopK = 8;

struct SimilarityGraph {
    std::vector<Relationship> edges;            // undirected, src < dst, weight = cosine
    std::map<std::string, std::size_t> out_degree;  // kept per node before symmetrisation
    std::size_t dense_edges = 0;                // unordered pairs at or above the threshold
};

SimilarityGraph build_similarity_graph(const std::map<std::string, EmbeddingVector>& vectors,
                                       double threshold = kSimilarityThreshold, std::size_t top_k = kSimilarityTopK);

/// Undirected weighted graph; self-loop weight holds edges collapsed by aggregation.
struct WeightedGraph {
    std::vector<std::string> ids;
    std::vector<std::vector<std::pair<std::size_t, double>>> adj;
    std::vector<double> self;

    std::size_t size() const { return ids.size(); }
    double degree(std::size_t v) const;
    double total_weight() const;  // m
};

/// Nodes in the given order; edges between unknown ids are ignored, parallel edges summed.
WeightedGraph make_graph(const std::vector<std::string>& ids, const std::vector<Relationship>& edges);

/// Q = sum_c [ L_c / m - gamma * (d_c / 2m)^2 ].
double modularity(const WeightedGraph& g, const std::vector<int>& membership, double gamma);

/// Leiden (local moving, refinement, aggregation) iterated until a pass stops
/// improving; `restarts` independently seeded runs, best modularity kept.
/// Communities are renumbered by size descending, then by first node index.
std::vector<int> leiden(const WeightedGraph& g, double gamma, std::uint64_t seed = 42, int restarts = 8);

inline const std::vector<double> kDefaultResolutions = {0.3, 0.5, 0.8, 1.0, 1.2};

struct CommunityDetection {
    std::map<double, std::vector<Community>> by_resolution;  // includes singletons
    std::map<double, double> modularity_at_unit;              // gamma = 1 modularity of each partition
    double working_resolution = 1.0;
};

/// Throws EmptyGraph. Working resolution: the partition with the highest
/// gamma = 1 modularity (first listed resolution on ties).
CommunityDetection detect_communities(const WeightedGraph& g, const std::vector<double>& resolutions = kDefaultResolutions,
                                      std::uint64_t seed = 42);

/// Top-3 TF-IDF title terms joined by "/"; documents are the peer communities'
/// concatenated titles. "untitled" when the titles carry no terms.
std::string label_theme(const Community& community, const GraphStore& store, const std::vector<Community>& peers);

struct SemanticOptions {
    double threshold = kSimilarityThreshold;
    std::size_t top_k = kSimilarityTopK;
    std::vector<double> resolutions = kDefaultResolutions;
    std::uint64_t seed = 42;
    std::size_t max_parallel = 4;
};

struct SemanticReport {
    std::size_t dense_edges = 0;
    std::size_t sparse_edges = 0;
    CommunityDetection detection;

    nlohmann::json to_json() const;
};

/// Embeds every chunk, adds SEMANTIC_SIMILAR edges, detects communities, labels
/// them and attaches the working-resolution communities (size >= 2) with
/// BELONGS_TO edges. Replaces any previous semantic layer.
SemanticReport build_semantic_layer(GraphStore& store, Embedder& embedder, const SemanticOptions& options = {});

}  // namespace modernize
