#include "modernize/errors.hpp"
#include "modernize/knowledge_graph.hpp"
#include "modernize/text.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>

using namespace modernize;

namespace {

KnowledgeChunk make_chunk(const std::string& id, const std::string& content, ChunkKind kind = ChunkKind::doc_section,
                          std::optional<std::string> parent = std::nullopt) {
    KnowledgeChunk c;
    c.chunk_id = id;
    c.title = id;
    c.content = content;
    c.char_length = content.size();
    c.source_path = id + ".md";
    c.kind = kind;
    c.parent_id = std::move(parent);
    c.directory_category = "root";
    return c;
}

std::set<std::string> ids_of(const std::vector<Entity>& es) {
    std::set<std::string> out;
    for (const auto& e : es) out.insert(e.entity_id);
    return out;
}

bool has_edge(const std::vector<Relationship>& rels, RelType t, const std::string& src, const std::string& dst) {
    return std::any_of(rels.begin(), rels.end(),
                       [&](const Relationship& r) { return r.rel_type == t && r.src == src && r.dst == dst; });
}

GraphStore small_store() {
    std::vector<KnowledgeChunk> chunks{
        make_chunk("a", "def a():\n    return b()\n", ChunkKind::code_unit),
        make_chunk("b", "def b():\n    pass\n", ChunkKind::code_unit),
        make_chunk("c", "class Derivative(Differentiable):\n    pass\n", ChunkKind::code_unit),
        make_chunk("d", "A Grid with a TimeFunction and an Operator.\n\nIt's a \"quoted\" stencil\\path."),
        make_chunk("e", "Grid TimeFunction Operator again.", ChunkKind::doc_section, std::string("d")),
    };
    auto store = build_graph(chunks, default_dictionary());
    store.add_community(Community{0, "grid/operator", {"d", "e"}, 1.0, 2});
    store.add_edge({RelType::BELONGS_TO, "d", community_node_id(0), 1.0});
    store.add_edge({RelType::BELONGS_TO, "e", community_node_id(0), 1.0});
    store.add_edge({RelType::SEMANTIC_SIMILAR, "d", "e", 0.75});
    return store;
}

}  // namespace

TEST(KnowledgeGraph, ClassDeclarationEntities) {
    auto es = extract_entities(make_chunk("x", "class TimeFunction(Function):\n    pass\n", ChunkKind::code_unit),
                               default_dictionary());
    EXPECT_EQ(ids_of(es), (std::set<std::string>{"entity:code_class:TimeFunction",
                                                 "entity:domain_concept:TimeFunction",
                                                 "entity:domain_concept:Function"}));
}

TEST(KnowledgeGraph, PlainProseHasNoEntities) {
    EXPECT_TRUE(extract_entities(make_chunk("x", "just prose with no symbols."), default_dictionary()).empty());
}

TEST(KnowledgeGraph, HeatFixtureHandApplication) {
    auto content = text::read_file(std::string(MODERNIZE_FIXTURES) + "/docs/heat_2d.md");
    // Drop the heading line: chunk content never carries its own title.
    content = content.substr(content.find('\n') + 1);
    auto es = extract_entities(make_chunk("heat", content), default_dictionary());
    std::set<std::string> expected;
    for (const char* v : {"grid", "u", "eqn", "stencil", "op"}) expected.insert(entity_id(EntityKind::code_variable, v));
    for (const char* d : {"Grid", "TimeFunction", "Eq", "Operator", "solve", "dt", "laplace", "forward",
                          "space_order", "stencil", "explicit", "Dirichlet"}) {
        expected.insert(entity_id(EntityKind::domain_concept, d));
    }
    for (const char* g : {"Heat Equation", "Forward Euler", "Dirichlet Boundary Condition"}) {
        expected.insert(entity_id(EntityKind::general_term, g));
    }
    EXPECT_EQ(ids_of(es), expected);
}

TEST(KnowledgeGraph, DictionaryIsCaseSensitiveWholeToken) {
    auto es = extract_entities(make_chunk("x", "A GridLike thing and a grid, not Grid-free. Grid."), {"Grid"});
    ASSERT_EQ(es.size(), 1u);
    EXPECT_EQ(es[0].name, "Grid");
    EXPECT_TRUE(extract_entities(make_chunk("y", "GridLike grid"), {"Grid"}).empty());
}

TEST(KnowledgeGraph, GeneralTermsNeedTwoOrThreeAdjacentCapitals) {
    auto es = extract_entities(make_chunk("x", "Use Perfectly Matched Layer here. Very Long Capitalised Title Run.\n"
                                              "Single Word, Moving Mesh Method."),
                               {});
    std::set<std::string> names;
    for (const auto& e : es) names.insert(e.name);
    EXPECT_EQ(names, (std::set<std::string>{"Perfectly Matched Layer", "Moving Mesh Method", "Single Word"}));
}

TEST(KnowledgeGraph, CallsInheritsPartOf) {
    std::vector<KnowledgeChunk> chunks{make_chunk("a", "def a():\n    b()\n", ChunkKind::code_unit),
                                       make_chunk("b", "def b():\n    pass\n", ChunkKind::code_unit),
                                       make_chunk("c", "class Derivative(Differentiable):\n    pass\n",
                                                  ChunkKind::code_unit),
                                       make_chunk("c~1", "more text", ChunkKind::doc_section, std::string("c"))};
    std::vector<Entity> entities;
    for (const auto& c : chunks) {
        for (auto& e : extract_entities(c, {})) entities.push_back(e);
    }
    auto rels = extract_relationships(chunks, entities);
    EXPECT_TRUE(has_edge(rels, RelType::CALLS, "entity:code_function:a", "entity:code_function:b"));
    EXPECT_FALSE(has_edge(rels, RelType::CALLS, "entity:code_function:b", "entity:code_function:a"));
    EXPECT_TRUE(has_edge(rels, RelType::INHERITS, "entity:code_class:Derivative", "entity:code_class:Differentiable"));
    EXPECT_TRUE(has_edge(rels, RelType::PART_OF, "c~1", "c"));
}

TEST(KnowledgeGraph, RelatedToNeedsThreeSharedEntities) {
    std::vector<KnowledgeChunk> chunks{make_chunk("p", "Grid TimeFunction Operator"),
                                       make_chunk("q", "Grid TimeFunction Operator Eq"),
                                       make_chunk("r", "Grid TimeFunction")};
    std::vector<Entity> entities;
    for (const auto& c : chunks) {
        for (auto& e : extract_entities(c, default_dictionary())) entities.push_back(e);
    }
    auto rels = extract_relationships(chunks, entities);
    std::vector<Relationship> related;
    for (const auto& r : rels) {
        if (r.rel_type == RelType::RELATED_TO) related.push_back(r);
    }
    ASSERT_EQ(related.size(), 1u);
    EXPECT_EQ(related[0].src, "p");
    EXPECT_EQ(related[0].dst, "q");
    EXPECT_DOUBLE_EQ(related[0].weight, 0.3);
}

TEST(KnowledgeGraph, StoreClosureAndMentionsVerbatim) {
    auto store = small_store();
    for (auto t : kAllRelTypes) {
        for (const auto& r : store.edges(t)) {
            EXPECT_TRUE(store.has_node(r.src)) << r.src;
            EXPECT_TRUE(store.has_node(r.dst)) << r.dst;
        }
    }
    for (const auto& r : store.edges(RelType::MENTIONS)) {
        EXPECT_TRUE(text::contains(store.chunk(r.src)->content, store.entity(r.dst)->name));
    }
    EXPECT_NE(store.entity("entity:code_class:Differentiable"), nullptr);
    EXPECT_THROW(store.add_edge({RelType::MENTIONS, "a", "entity:nope", 1.0}), Error);
    EXPECT_EQ(store.community_of("d"), community_node_id(0));
    EXPECT_FALSE(store.community_of("a").has_value());
    EXPECT_EQ(store.fulltext().document_count(), store.chunks().size());
}

TEST(KnowledgeGraph, FulltextHandComputedTfIdf) {
    FulltextIndex idx;
    idx.build({{"d1", "finite difference finite difference stencil"},
               {"d2", "finite element method"},
               {"d3", "spectral difference"}});
    auto hits = idx.query("finite difference", 10);
    // tf = 1 + ln(count), idf = ln(4 / (1 + df)) + 1, cosine, worked out by hand.
    ASSERT_EQ(hits.size(), 3u);
    EXPECT_EQ(hits[0].first, "d1");
    EXPECT_NEAR(hits[0].second, 0.876537, 1e-5);
    EXPECT_EQ(hits[1].first, "d3");
    EXPECT_NEAR(hits[1].second, 0.428046, 1e-5);
    EXPECT_EQ(hits[2].first, "d2");
    EXPECT_NEAR(hits[2].second, 0.334907, 1e-5);

    EXPECT_TRUE(idx.query("tokyo", 5).empty());
    EXPECT_TRUE(idx.query("finite", 0).empty());
    EXPECT_THROW(idx.query("  the of ", 5), EmptyQuery);
    EXPECT_EQ(idx.query("finite difference", 10), hits);

    std::set<std::string> only{"d2"};
    auto restricted = idx.query("finite difference", 10, &only);
    ASSERT_EQ(restricted.size(), 1u);
    EXPECT_EQ(restricted[0].first, "d2");
}

TEST(KnowledgeGraph, FulltextTiesByAscendingId) {
    FulltextIndex idx;
    idx.build({{"z", "wave"}, {"m", "wave"}, {"a", "wave"}});
    auto hits = idx.query("wave", 3);
    ASSERT_EQ(hits.size(), 3u);
    EXPECT_EQ(hits[0].first, "a");
    EXPECT_EQ(hits[1].first, "m");
    EXPECT_EQ(hits[2].first, "z");
}

TEST(KnowledgeGraph, CypherBatchesOfFiveHundred) {
    GraphStore store;
    for (int i = 0; i < 1001; ++i) store.add_chunk(make_chunk("c" + std::to_string(1000 + i), "x"));
    auto parsed = parse_cypher_export(export_cypher(store));
    std::vector<std::size_t> sizes;
    for (const auto& b : parsed.batches) {
        EXPECT_EQ(b.label, "Chunk");
        sizes.push_back(b.rows.size());
    }
    EXPECT_EQ(sizes, (std::vector<std::size_t>{500, 500, 1}));
}

TEST(KnowledgeGraph, CypherEmptyStoreSchemaOnly) {
    GraphStore store;
    auto text = export_cypher(store);
    auto parsed = parse_cypher_export(text);
    EXPECT_TRUE(parsed.batches.empty());
    EXPECT_EQ(parsed.schema_statements.size(), 6u);
    EXPECT_TRUE(text::contains(text, "chunk_content_index"));
    EXPECT_TRUE(text::contains(text, "ON (n.kind)"));
    EXPECT_TRUE(text::contains(text, "ON (n.theme)"));
    EXPECT_FALSE(text::contains(text, "UNWIND"));
}

TEST(KnowledgeGraph, CypherRoundTripMatchesStore) {
    auto store = small_store();
    auto text = export_cypher(store, 3);
    EXPECT_EQ(text, export_cypher(store, 3));
    auto parsed = parse_cypher_export(text);

    std::map<std::string, std::multiset<std::string>> nodes;
    std::multiset<std::string> edges;
    for (const auto& b : parsed.batches) {
        EXPECT_LE(b.rows.size(), 3u);
        for (const auto& row : b.rows) {
            if (b.is_edge) {
                auto end = [&](const nlohmann::json& v) {
                    return v.is_number() ? community_node_id(v.get<int>()) : v.get<std::string>();
                };
                edges.insert(b.label + "|" + end(row["src"]) + "|" + end(row["dst"]) + "|" +
                             std::to_string(row["weight"].get<double>()));
            } else {
                nodes[b.label].insert(row["id"].dump());
                if (b.label == "Chunk") EXPECT_EQ(row["content"], store.chunk(row["id"])->content);
            }
        }
    }
    std::map<std::string, std::multiset<std::string>> want_nodes;
    for (const auto& c : store.chunks()) want_nodes["Chunk"].insert(nlohmann::json(c.chunk_id).dump());
    for (const auto* e : store.entities()) want_nodes["Entity"].insert(nlohmann::json(e->entity_id).dump());
    for (const auto* c : store.communities()) want_nodes["Community"].insert(nlohmann::json(c->community_id).dump());
    std::multiset<std::string> want_edges;
    for (auto t : kAllRelTypes) {
        for (const auto& r : store.edges(t)) {
            want_edges.insert(to_string(t) + "|" + r.src + "|" + r.dst + "|" + std::to_string(r.weight));
        }
    }
    EXPECT_EQ(nodes, want_nodes);
    EXPECT_EQ(edges, want_edges);
}

TEST(KnowledgeGraph, CypherLiteralEscapes) {
    nlohmann::json v = {{"s", "it's a \"q\"\\\nline\ttab\x01"}, {"n", nullptr}, {"f", 0.1}, {"i", -3},
                        {"l", {1, "two", true}}, {"odd key", 1}};
    auto lit = to_cypher_literal(v);
    EXPECT_EQ(lit.find('\n'), std::string::npos);
    EXPECT_EQ(parse_cypher_literal(lit), v);
    EXPECT_THROW(parse_cypher_literal("{a: 'open"), Error);
}

TEST(KnowledgeGraph, StatsHandCount) {
    auto store = small_store();
    auto stats = graph_stats(store);
    // 5 chunks, 1 community and 10 entities: functions a, b; classes Derivative, Differentiable;
    // concepts Derivative, Grid, TimeFunction, Operator, stencil; phrase "Grid TimeFunction Operator".
    EXPECT_EQ(stats["node_counts"][0]["NodeType"], "Entity");
    EXPECT_EQ(stats["node_counts"][0]["Count"], 10);
    EXPECT_EQ(stats["node_counts"][1]["NodeType"], "Chunk");
    EXPECT_EQ(stats["node_counts"][1]["Count"], 5);
    EXPECT_EQ(stats["node_counts"][2]["Count"], 1);
    EXPECT_EQ(stats["top_communities"][0]["com.size"], 2);
    EXPECT_EQ(stats["membership"][0]["member_count"], 2);
}

TEST(KnowledgeGraph, StoreJsonRoundTrip) {
    auto store = small_store();
    auto back = GraphStore::from_json(store.to_json());
    EXPECT_EQ(back.to_json(), store.to_json());
    EXPECT_EQ(back.node_count(), store.node_count());
    EXPECT_EQ(back.edge_count(), store.edge_count());
    EXPECT_EQ(fulltext_query(back, "Grid Operator", 5), fulltext_query(store, "Grid Operator", 5));
}
