#pragma once

#include "modernize/corpus_ingest.hpp"

#include <map>
#include <tuple>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

namespace modernize {

enum class EntityKind { code_class, code_function, code_variable, domain_concept, general_term };

std::string to_string(EntityKind kind);
EntityKind entity_kind_from_string(const std::string& s);

struct Entity {
    std::string entity_id;
    std::string name;
    EntityKind kind;
    std::set<std::string> source_chunks;
};

/// "entity:<kind>:<name>"
std::string entity_id(EntityKind kind, const std::string& name);

enum class RelType { MENTIONS, CALLS, INHERITS, RELATED_TO, PART_OF, SEMANTIC_SIMILAR, BELONGS_TO };

inline constexpr RelType kAllRelTypes[] = {RelType::MENTIONS,   RelType::CALLS,   RelType::INHERITS,
                                           RelType::RELATED_TO, RelType::PART_OF, RelType::SEMANTIC_SIMILAR,
                                           RelType::BELONGS_TO};

std::string to_string(RelType type);
RelType rel_type_from_string(const std::string& s);

struct Relationship {
    RelType rel_type;
    std::string src;
    std::string dst;
    double weight = 1.0;
};

struct Community {
    int community_id = 0;
    std::string theme;
    std::vector<std::string> members;  // sorted chunk ids
    double resolution = 1.0;
    std::size_t size = 0;
};

/// "community:<id>"
std::string community_node_id(int community_id);

/// Built-in Devito concept list used when no dictionary file is given.
const std::set<std::string>& default_dictionary();

/// One term per line, '#' comments allowed.
std::set<std::string> load_dictionary(const std::string& path);

inline constexpr std::size_t kRelatedToMinShared = 3;

/// Declaration heads (class/def/assignment), dictionary hits and capitalised
/// multi-word phrases; merged by (name, kind).
std::vector<Entity> extract_entities(const KnowledgeChunk& chunk, const std::set<std::string>& dictionary);

/// `entities` are the per-chunk extraction results merged across the corpus.
std::vector<Relationship> extract_relationships(const std::vector<KnowledgeChunk>& chunks,
                                                const std::vector<Entity>& entities);

/// TF-IDF over content terms: tf = 1 + ln(count), idf = ln((1 + N) / (1 + df)) + 1,
/// cosine-normalised vectors.
class FulltextIndex {
public:
    void build(const std::vector<std::pair<std::string, std::string>>& docs);  // (id, text)

    /// Scores > 0 only, descending, ties by ascending id. Throws EmptyQuery.
    /// With `allowed`, only those ids are considered.
    std::vector<std::pair<std::string, double>> query(const std::string& text, std::size_t k,
                                                      const std::set<std::string>* allowed = nullptr) const;

    std::size_t document_count() const { return norms_.size(); }
    std::size_t document_frequency(const std::string& term) const;
    bool contains(const std::string& id) const { return norms_.count(id) > 0; }

private:
    double idf(std::size_t df) const;

    std::unordered_map<std::string, std::vector<std::pair<std::string, double>>> postings_;  // term -> (id, log tf)
    std::map<std::string, double> norms_;
};

class GraphStore {
public:
    void add_chunk(const KnowledgeChunk& chunk);
    /// Merges source_chunks into an existing entity with the same id.
    void add_entity(const Entity& entity);
    void add_community(const Community& community);
    /// Throws Error on a missing endpoint. Repeated (type, src, dst) keeps the max weight.
    void add_edge(const Relationship& rel);
    void clear_edges(RelType type);
    void clear_communities();

    const KnowledgeChunk* chunk(const std::string& id) const;
    const Entity* entity(const std::string& id) const;
    const Community* community(const std::string& node_id) const;
    bool has_node(const std::string& id) const;

    const std::vector<KnowledgeChunk>& chunks() const { return chunks_; }
    std::vector<const Entity*> entities() const;
    std::vector<const Community*> communities() const;
    const std::vector<Relationship>& edges(RelType type) const;

    /// Edge indices leaving / entering `id` for one relationship type.
    std::vector<const Relationship*> out_edges(RelType type, const std::string& id) const;
    std::vector<const Relationship*> in_edges(RelType type, const std::string& id) const;

    /// Community node id of a chunk, if it belongs to one.
    std::optional<std::string> community_of(const std::string& chunk_id) const;

    std::size_t node_count() const;
    std::size_t edge_count() const;

    /// Must be called after the last add_chunk; queries see exactly the chunk nodes.
    void build_fulltext();
    const FulltextIndex& fulltext() const { return fulltext_; }

    nlohmann::json to_json() const;
    static GraphStore from_json(const nlohmann::json& j);

private:
    struct EdgeKey {
        RelType type;
        std::string src, dst;
        bool operator<(const EdgeKey& o) const {
            return std::tie(type, src, dst) < std::tie(o.type, o.src, o.dst);
        }
    };

    std::vector<KnowledgeChunk> chunks_;
    std::unordered_map<std::string, std::size_t> chunk_index_;
    std::map<std::string, Entity> entities_;
    std::map<std::string, Community> communities_;
    std::map<RelType, std::vector<Relationship>> edges_;
    std::map<EdgeKey, std::size_t> edge_index_;
    std::map<RelType, std::unordered_map<std::string, std::vector<std::size_t>>> out_, in_;
    FulltextIndex fulltext_;
};

/// Chunks, merged entities and the extracted relationships (no semantic layer).
GraphStore build_graph(const std::vector<KnowledgeChunk>& chunks, const std::set<std::string>& dictionary);

std::vector<std::pair<std::string, double>> fulltext_query(const GraphStore& store, const std::string& query,
                                                           std::size_t k);

/// Constraints, indexes, then `:param rows => [...]` / `UNWIND $rows AS row ...`
/// pairs with at most `batch_size` records each. Deterministic.
std::string export_cypher(const GraphStore& store, std::size_t batch_size = 500);

/// Cypher literal (map/list/string/number/bool/null) <-> JSON.
std::string to_cypher_literal(const nlohmann::json& value);
nlohmann::json parse_cypher_literal(const std::string& text);

struct CypherBatch {
    std::string label;     // node label, or relationship type for edges
    bool is_edge = false;
    nlohmann::json rows;   // array
};

struct ParsedCypher {
    std::vector<std::string> schema_statements;
    std::vector<CypherBatch> batches;
};

/// Reads back what export_cypher writes. Throws Error on anything else.
ParsedCypher parse_cypher_export(const std::string& text);

/// Node counts by label, top-10 communities by size, top-10 membership counts.
nlohmann::json graph_stats(const GraphStore& store);

}  // namespace modernize
