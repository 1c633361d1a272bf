#include "modernize/eval_harness.hpp"

#include "modernize/errors.hpp"
#include "modernize/text.hpp"

#include <chrono>
#include <cstdio>
#include <sstream>

namespace modernize {

std::string to_string(BenchmarkTier t) {
    switch (t) {
        case BenchmarkTier::basic: return "basic";
        case BenchmarkTier::intermediate: return "intermediate";
        case BenchmarkTier::advanced: return "advanced";
    }
    return "basic";
}

BenchmarkTier benchmark_tier_from_string(const std::string& s) {
    if (s == "basic") return BenchmarkTier::basic;
    if (s == "intermediate") return BenchmarkTier::intermediate;
    if (s == "advanced") return BenchmarkTier::advanced;
    throw Error("unknown benchmark tier: " + s);
}

std::vector<BenchmarkQuery> load_benchmark(const std::string& path) {
    std::vector<BenchmarkQuery> out;
    std::size_t line_no = 0;
    for (const auto& line : text::split_lines(text::read_file(path))) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        BenchmarkQuery q;
        try {
            auto j = nlohmann::json::parse(line);
            q.text = j.at("text").get<std::string>();
            q.tier = benchmark_tier_from_string(j.value("tier", std::string("basic")));
            for (const auto& t : j.value("ground_truth", nlohmann::json::array())) q.ground_truth.insert(t.get<std::string>());
            for (const auto& t : j.value("expected_topics", nlohmann::json::array())) {
                q.expected_topics.insert(t.get<std::string>());
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseFailure(path, "line " + std::to_string(line_no) + ": " + e.what());
        } catch (const MissingGroundTruth&) {
            throw;
        } catch (const Error& e) {
            throw ParseFailure(path, "line " + std::to_string(line_no) + ": " + e.what());
        }
        if (q.ground_truth.empty()) throw MissingGroundTruth(q.text);
        out.push_back(std::move(q));
    }
    return out;
}

double precision_at_k(const std::vector<std::string>& results, const std::set<std::string>& truth, std::size_t k) {
    std::size_t n = std::min(k, results.size());
    if (n == 0) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) hits += truth.count(results[i]);
    return static_cast<double>(hits) / static_cast<double>(n);
}

double recall_at_k(const std::vector<std::string>& results, const std::set<std::string>& truth, std::size_t k) {
    if (truth.empty()) return 0.0;
    std::set<std::string> found;
    for (std::size_t i = 0; i < std::min(k, results.size()); ++i) {
        if (truth.count(results[i])) found.insert(results[i]);
    }
    return static_cast<double>(found.size()) / static_cast<double>(truth.size());
}

double reciprocal_rank(const std::vector<std::string>& results, const std::set<std::string>& truth) {
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (truth.count(results[i])) return 1.0 / static_cast<double>(i + 1);
    }
    return 0.0;
}

double mrr(const std::vector<std::vector<std::string>>& results, const std::vector<std::set<std::string>>& truths) {
    if (results.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        sum += reciprocal_rank(results[i], i < truths.size() ? truths[i] : std::set<std::string>{});
    }
    return sum / static_cast<double>(results.size());
}

std::vector<std::string> relevance_keys(const std::vector<std::string>& chunk_ids, const std::set<std::string>& truth,
                                        const GraphStore& store) {
    std::vector<std::string> out;
    out.reserve(chunk_ids.size());
    for (const auto& id : chunk_ids) {
        const auto* c = store.chunk(id);
        if (!truth.count(id) && c && truth.count(c->source_path)) {
            out.push_back(c->source_path);
        } else {
            out.push_back(id);
        }
    }
    return out;
}

std::vector<std::string> ranked_chunks(const std::string& text, Strategy strategy, const GraphStore& store,
                                       const RetrievalOptions& options) {
    QuerySpec q = make_query(text, strategy);
    auto results = retrieve(q, strategy, store, options);
    std::vector<std::string> out;
    for (const auto& c : fuse({{q, results}}, FortranAnalysis{}, store)) out.push_back(c.chunk_id);
    return out;
}

double diversity(const std::vector<std::string>& chunk_ids, const GraphStore& store, Embedder& embedder,
                 std::size_t k) {
    std::vector<EmbeddingVector> vecs;
    for (std::size_t i = 0; i < std::min(k, chunk_ids.size()); ++i) {
        const auto* c = store.chunk(chunk_ids[i]);
        if (c) vecs.push_back(embedder.embed(c->title + "\n" + c->content));
    }
    if (vecs.size() < 2) return 0.0;
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < vecs.size(); ++i) {
        for (std::size_t j = i + 1; j < vecs.size(); ++j) {
            sum += 1.0 - cosine(vecs[i], vecs[j]);
            ++pairs;
        }
    }
    return sum / static_cast<double>(pairs);
}

nlohmann::json QueryMetrics::to_json() const {
    return {{"text", text},
            {"tier", to_string(tier)},
            {"strategy", to_string(strategy)},
            {"precision_at_5", precision_at_5},
            {"recall_at_5", recall_at_5},
            {"reciprocal_rank", reciprocal_rank},
            {"response_time_s", response_time_s},
            {"diversity", diversity},
            {"top", top}};
}

nlohmann::json StrategySummary::to_json() const {
    return {{"strategy", to_string(strategy)},
            {"queries", queries},
            {"precision_at_5", precision_at_5},
            {"recall_at_5", recall_at_5},
            {"mrr", mrr},
            {"response_time_s", response_time_s},
            {"diversity", diversity}};
}

const StrategySummary* MetricsReport::summary(Strategy s) const {
    for (const auto& x : strategies) {
        if (x.strategy == s) return &x;
    }
    return nullptr;
}

nlohmann::json MetricsReport::to_json() const {
    nlohmann::json q = nlohmann::json::array();
    for (const auto& m : per_query) q.push_back(m.to_json());
    nlohmann::json s = nlohmann::json::array();
    for (const auto& m : strategies) s.push_back(m.to_json());
    return {{"per_query", q}, {"strategies", s}};
}

std::string MetricsReport::to_markdown() const {
    std::ostringstream out;
    out << "| Strategy | Queries | P@5 | R@5 | MRR | Avg time (s) | Avg diversity |\n";
    out << "|---|---|---|---|---|---|---|\n";
    char buf[256];
    for (const auto& s : strategies) {
        std::snprintf(buf, sizeof buf, "| %s | %zu | %.3f | %.3f | %.3f | %.4f | %.3f |\n", to_string(s.strategy).c_str(),
                      s.queries, s.precision_at_5, s.recall_at_5, s.mrr, s.response_time_s, s.diversity);
        out << buf;
    }
    return out.str();
}

MetricsReport run_benchmark(const GraphStore& store, const std::vector<BenchmarkQuery>& queries,
                            const std::vector<Strategy>& strategies, Embedder& embedder,
                            const RetrievalOptions& options) {
    for (const auto& q : queries) {
        if (q.ground_truth.empty()) throw MissingGroundTruth(q.text);
    }
    MetricsReport report;
    for (Strategy s : strategies) {
        StrategySummary sum;
        sum.strategy = s;
        for (const auto& q : queries) {
            QueryMetrics m;
            m.text = q.text;
            m.tier = q.tier;
            m.strategy = s;
            auto t0 = std::chrono::steady_clock::now();
            std::vector<std::string> ranked;
            try {
                ranked = ranked_chunks(q.text, s, store, options);
            } catch (const EmptyQuery&) {
            }
            m.response_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            auto keys = relevance_keys(ranked, q.ground_truth, store);
            m.precision_at_5 = precision_at_k(keys, q.ground_truth, 5);
            m.recall_at_5 = recall_at_k(keys, q.ground_truth, 5);
            m.reciprocal_rank = reciprocal_rank(keys, q.ground_truth);
            m.diversity = diversity(ranked, store, embedder, 5);
            m.top.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(5, ranked.size())));
            sum.precision_at_5 += m.precision_at_5;
            sum.recall_at_5 += m.recall_at_5;
            sum.mrr += m.reciprocal_rank;
            sum.response_time_s += m.response_time_s;
            sum.diversity += m.diversity;
            ++sum.queries;
            report.per_query.push_back(std::move(m));
        }
        if (sum.queries > 0) {
            double n = static_cast<double>(sum.queries);
            sum.precision_at_5 /= n;
            sum.recall_at_5 /= n;
            sum.mrr /= n;
            sum.response_time_s /= n;
            sum.diversity /= n;
        }
        report.strategies.push_back(sum);
    }
    return report;
}

}  // namespace modernize
