#include "modernize/errors.hpp"
#include "modernize/semantic_layer.hpp"

#include "graph_oracle.hpp"

#include <httplib.h>

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <thread>

using namespace modernize;
using namespace modernize::graph_oracle;

namespace {

EmbeddingVector unit(std::vector<double> v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    for (double& x : v) x /= std::sqrt(n);
    return v;
}

}  // namespace

TEST(SemanticLayer, HashedEmbedderDeterministicUnitNorm) {
    HashedEmbedder e;
    auto a = e.embed("heat equation");
    auto b = e.embed("heat equation");
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.size(), 1024u);
    double n = 0.0;
    for (double x : a) n += x * x;
    EXPECT_NEAR(std::sqrt(n), 1.0, 1e-6);
    EXPECT_THROW(e.embed("   "), EmptyText);
    EXPECT_NEAR(std::sqrt([&] {
                    double s = 0.0;
                    for (double x : e.embed("the of")) s += x * x;
                    return s;
                }()),
                1.0, 1e-6);
}

TEST(SemanticLayer, HashedEmbedderOrdersBySharedTerms) {
    HashedEmbedder e;
    double near = cosine(e.embed("heat equation"), e.embed("heat equation solver"));
    double far = cosine(e.embed("heat equation"), e.embed("tokyo weather"));
    // Two of three hashed terms shared, barring collisions: 2 / sqrt(2 * 3).
    EXPECT_NEAR(near, 2.0 / std::sqrt(6.0), 1e-9);
    EXPECT_GT(near, far);
}

TEST(SemanticLayer, TopKAndThresholdLaws) {
    std::map<std::string, EmbeddingVector> vectors;
    // hub + 12 spokes: each spoke = hub direction plus a private axis.
    for (int i = 0; i < 12; ++i) {
        std::vector<double> v(16, 0.0);
        v[0] = 1.0;
        v[i + 1] = 0.3 + 0.02 * i;
        vectors["s" + std::to_string(10 + i)] = unit(v);
    }
    std::vector<double> hub(16, 0.0);
    hub[0] = 1.0;
    vectors["hub"] = unit(hub);
    auto g = build_similarity_graph(vectors);
    EXPECT_EQ(g.out_degree["hub"], 8u);
    for (const auto& [id, d] : g.out_degree) EXPECT_LE(d, 8u);
    for (const auto& e : g.edges) {
        EXPECT_GE(e.weight, 0.6);
        EXPECT_NE(e.src, e.dst);
        EXPECT_LT(e.src, e.dst);
    }
    EXPECT_EQ(g.dense_edges, 12u * 13u / 2u);

    std::map<std::string, EmbeddingVector> few;
    few["a"] = unit({1, 0, 0, 0});
    few["b"] = unit({1, 0.5, 0, 0});
    few["c"] = unit({1, 0, 0.5, 0});
    few["d"] = unit({1, 0, 0, 0.5});
    few["e"] = unit({0, 1, 1, 1});
    EXPECT_EQ(build_similarity_graph(few).out_degree["a"], 3u);

    std::map<std::string, EmbeddingVector> orth;
    for (int i = 0; i < 4; ++i) {
        std::vector<double> v(4, 0.0);
        v[i] = 1.0;
        orth["o" + std::to_string(i)] = v;
    }
    EXPECT_TRUE(build_similarity_graph(orth).edges.empty());
}

TEST(SemanticLayer, UnionSymmetrisation) {
    std::map<std::string, EmbeddingVector> vectors;
    for (int i = 0; i < 4; ++i) {
        std::vector<double> v(8, 0.0);
        v[0] = 1.0;
        v[i + 1] = 0.1 * (i + 1);
        vectors["v" + std::to_string(i)] = unit(v);
    }
    auto g = build_similarity_graph(vectors, 0.6, 1);
    // v0's nearest is v1, v1's v0, v2's v0, v3's v0: union {v0-v1, v0-v2, v0-v3}.
    ASSERT_EQ(g.edges.size(), 3u);
    for (const auto& e : g.edges) EXPECT_EQ(e.src, "v0");
}

TEST(SemanticLayer, TwoCliquesSplitAtUnitResolution) {
    auto f = fixtures()[0];
    auto m = leiden(to_graph(f), 1.0);
    for (int i = 1; i < 4; ++i) EXPECT_EQ(m[i], m[0]);
    for (int i = 5; i < 8; ++i) EXPECT_EQ(m[i], m[4]);
    EXPECT_NE(m[0], m[4]);
}

TEST(SemanticLayer, CompleteGraphLowResolutionIsOneCommunity) {
    auto f = fixtures()[1];
    auto m = leiden(to_graph(f), 0.3);
    for (int v : m) EXPECT_EQ(v, 0);
}

TEST(SemanticLayer, LeidenMatchesBruteForceOptimum) {
    for (const auto& f : fixtures()) {
        auto g = to_graph(f);
        for (double gamma : kDefaultResolutions) {
            SCOPED_TRACE(f.name + " gamma=" + std::to_string(gamma));
            auto m = leiden(g, gamma, 42);
            double got = oracle_modularity(f, m, gamma);
            EXPECT_NEAR(got, brute_force_max(f, gamma), 1e-9);
            EXPECT_NEAR(modularity(g, m, gamma), got, 1e-9);
        }
    }
}

TEST(SemanticLayer, SeededDeterminism) {
    auto g = to_graph(fixtures()[8]);
    EXPECT_EQ(leiden(g, 1.0, 5), leiden(g, 1.0, 5));
}

TEST(SemanticLayer, DetectCommunitiesPartitionAndWorkingResolution) {
    auto f = fixtures()[0];
    auto g = to_graph(f);
    auto d = detect_communities(g);
    ASSERT_EQ(d.by_resolution.size(), 5u);
    for (const auto& [gamma, list] : d.by_resolution) {
        std::set<std::string> seen;
        std::size_t total = 0;
        for (const auto& c : list) {
            EXPECT_EQ(c.size, c.members.size());
            EXPECT_GE(c.size, 1u);
            for (const auto& id : c.members) EXPECT_TRUE(seen.insert(id).second);
            total += c.size;
        }
        EXPECT_EQ(total, 8u);
    }
    double best = -1.0;
    for (const auto& [gamma, q] : d.modularity_at_unit) best = std::max(best, q);
    EXPECT_DOUBLE_EQ(d.modularity_at_unit.at(d.working_resolution), best);
    EXPECT_EQ(d.by_resolution.at(d.working_resolution).size(), 2u);

    EXPECT_THROW(detect_communities(WeightedGraph{}), EmptyGraph);
    auto single = detect_communities(make_graph({"only"}, {}));
    ASSERT_EQ(single.by_resolution.at(1.0).size(), 1u);
    EXPECT_EQ(single.by_resolution.at(1.0)[0].size, 1u);
}

TEST(SemanticLayer, ThemesFromTitles) {
    GraphStore store;
    auto add = [&](const std::string& id, const std::string& title) {
        KnowledgeChunk c;
        c.chunk_id = id;
        c.title = title;
        c.content = "x";
        store.add_chunk(c);
    };
    add("a", "Boundary condition setup");
    add("b", "Dirichlet boundary condition");
    add("c", "Neumann boundary conditions");
    add("d", "Wave propagation");
    add("e", "");
    Community bc{0, "", {"a", "b", "c"}, 1.0, 3};
    Community wave{1, "", {"d"}, 1.0, 1};
    Community blank{2, "", {"e"}, 1.0, 1};
    std::vector<Community> peers{bc, wave, blank};
    // tf: boundary 3, condition 2, rest 1; every term in one peer only, so idf is flat.
    EXPECT_EQ(label_theme(bc, store, peers), "boundary/condition/conditions");
    EXPECT_EQ(label_theme(wave, store, peers), "propagation/wave");
    EXPECT_EQ(label_theme(blank, store, peers), "untitled");
}

TEST(SemanticLayer, BuildLayerAttachesCommunities) {
    auto chunks = ingest_corpus(std::string(MODERNIZE_FIXTURES) + "/docs");
    auto store = build_graph(chunks, default_dictionary());
    HashedEmbedder e(256);
    SemanticOptions opts;
    opts.threshold = 0.05;
    auto report = build_semantic_layer(store, e, opts);
    EXPECT_EQ(report.sparse_edges, store.edges(RelType::SEMANTIC_SIMILAR).size());
    for (const auto* c : store.communities()) {
        EXPECT_GE(c->size, 2u);
        EXPECT_FALSE(c->theme.empty());
        EXPECT_EQ(store.in_edges(RelType::BELONGS_TO, community_node_id(c->community_id)).size(), c->size);
    }
    for (const auto& r : store.edges(RelType::BELONGS_TO)) {
        EXPECT_NE(store.chunk(r.src), nullptr);
        EXPECT_NE(store.community(r.dst), nullptr);
    }
    auto j = report.to_json();
    EXPECT_EQ(j["resolutions"].size(), 5u);
    auto again = build_graph(chunks, default_dictionary());
    build_semantic_layer(again, e, opts);
    EXPECT_EQ(again.to_json(), store.to_json());
}

TEST(SemanticLayer, HttpEmbedderAgainstLocalServer) {
    httplib::Server server;
    server.Post("/v1/embeddings", [](const httplib::Request& req, httplib::Response& res) {
        auto body = nlohmann::json::parse(req.body);
        double x = body["input"].get<std::string>().size();
        nlohmann::json out = {{"data", {{{"embedding", {x, 0.0, 0.0}}}}}};
        res.set_content(out.dump(), "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    HttpEmbedder remote("http://127.0.0.1:" + std::to_string(port) + "/v1", "bge-m3", 3, 5.0);
    auto v = remote.embed("abc");
    EXPECT_EQ(v, (EmbeddingVector{1.0, 0.0, 0.0}));
    HttpEmbedder wrong_dim("http://127.0.0.1:" + std::to_string(port) + "/v1", "bge-m3", 4, 5.0);
    EXPECT_THROW(wrong_dim.embed("abc"), BackendUnavailable);
    server.stop();
    t.join();

    HttpEmbedder dead("http://127.0.0.1:1", "bge-m3", 3, 1.0);
    EXPECT_THROW(dead.embed("abc"), BackendUnavailable);
}
