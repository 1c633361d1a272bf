#include "modernize/semantic_layer.hpp"

#include "modernize/errors.hpp"
#include "modernize/text.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <limits>
#include <exception>
#include <future>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <thread>

namespace modernize {

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.size() != b.size()) throw Error("embedding dimensions differ");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

namespace {

void normalise(EmbeddingVector& v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n > 0.0) {
        for (double& x : v) x /= n;
    }
}

}  // namespace

HashedEmbedder::HashedEmbedder(std::size_t dimension, std::uint64_t seed) : dim_(dimension), seed_(seed) {
    if (dim_ == 0) throw Error("embedding dimension must be positive");
}

EmbeddingVector HashedEmbedder::embed(const std::string& input) {
    if (text::trim(input).empty()) throw EmptyText();
    auto terms = text::content_terms(input);
    if (terms.empty()) terms = text::tokenize(input);
    if (terms.empty()) terms.push_back(text::trim(input));
    std::map<std::string, double> counts;
    for (const auto& t : terms) counts[t] += 1.0;
    EmbeddingVector v(dim_, 0.0);
    for (const auto& [term, c] : counts) {
        auto h = text::fnv1a64(term, seed_);
        double sign = (h >> 63) ? -1.0 : 1.0;
        v[(h & 0x7fffffffffffffffULL) % dim_] += sign * (1.0 + std::log(c));
    }
    normalise(v);
    return v;
}

HttpEmbedder::HttpEmbedder(std::string base_url, std::string model, std::size_t dimension, double timeout_s)
    : base_url_(std::move(base_url)), model_(std::move(model)), dim_(dimension), timeout_s_(timeout_s) {}

EmbeddingVector HttpEmbedder::embed(const std::string& input) {
    if (text::trim(input).empty()) throw EmptyText();
    auto [host, prefix] = text::split_base_url(base_url_);
    httplib::Client cli(host);
    auto secs = static_cast<time_t>(timeout_s_);
    auto usecs = static_cast<time_t>((timeout_s_ - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    nlohmann::json body = {{"model", model_}, {"input", input}};
    auto res = cli.Post(prefix + "/embeddings", body.dump(), "application/json");
    if (!res) throw BackendUnavailable("embedding service unreachable: " + base_url_);
    if (res->status != 200) {
        throw BackendUnavailable("embedding service returned HTTP " + std::to_string(res->status));
    }
    EmbeddingVector v;
    try {
        v = nlohmann::json::parse(res->body).at("data").at(0).at("embedding").get<EmbeddingVector>();
    } catch (const nlohmann::json::exception& e) {
        throw BackendUnavailable(std::string("embedding response not understood: ") + e.what());
    }
    if (v.size() != dim_) {
        throw BackendUnavailable("embedding has dimension " + std::to_string(v.size()) + ", expected " +
                                 std::to_string(dim_));
    }
    normalise(v);
    return v;
}

std::map<std::string, EmbeddingVector> embed_all(Embedder& embedder,
                                                 const std::vector<std::pair<std::string, std::string>>& items,
                                                 std::size_t max_parallel) {
    std::vector<EmbeddingVector> out(items.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= items.size()) return;
            try {
                out[i] = embedder.embed(items[i].second);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mu);
                if (!failure) failure = std::current_exception();
                next = items.size();
            }
        }
    };
    std::size_t workers = std::max<std::size_t>(1, std::min(max_parallel, items.size()));
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
    std::map<std::string, EmbeddingVector> result;
    for (std::size_t i = 0; i < items.size(); ++i) result[items[i].first] = std::move(out[i]);
    return result;
}

SimilarityGraph build_similarity_graph(const std::map<std::string, EmbeddingVector>& vectors, double threshold,
                                       std::size_t top_k) {
    SimilarityGraph g;
    std::vector<const std::string*> ids;
    std::vector<const EmbeddingVector*> vecs;
    for (const auto& [id, v] : vectors) {
        ids.push_back(&id);
        vecs.push_back(&v);
        g.out_degree[id] = 0;
    }
    const std::size_t n = ids.size();
    std::vector<std::vector<std::pair<double, std::size_t>>> candidates(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double c = cosine(*vecs[i], *vecs[j]);
            if (c >= threshold) {
                candidates[i].push_back({c, j});
                candidates[j].push_back({c, i});
                ++g.dense_edges;
            }
        }
    }
    std::map<std::pair<std::size_t, std::size_t>, double> kept;
    for (std::size_t i = 0; i < n; ++i) {
        auto& cand = candidates[i];
        std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        if (cand.size() > top_k) cand.resize(top_k);
        g.out_degree[*ids[i]] = cand.size();
        for (const auto& [c, j] : cand) kept[{std::min(i, j), std::max(i, j)}] = c;
    }
    for (const auto& [pair, c] : kept) {
        g.edges.push_back({RelType::SEMANTIC_SIMILAR, *ids[pair.first], *ids[pair.second], c});
    }
    return g;
}

// ---------------------------------------------------------------- graph

double WeightedGraph::degree(std::size_t v) const {
    double d = 2.0 * self[v];
    for (const auto& [u, w] : adj[v]) d += w;
    return d;
}

double WeightedGraph::total_weight() const {
    double twice = 0.0;
    for (std::size_t v = 0; v < size(); ++v) twice += degree(v);
    return twice / 2.0;
}

WeightedGraph make_graph(const std::vector<std::string>& ids, const std::vector<Relationship>& edges) {
    WeightedGraph g;
    g.ids = ids;
    g.adj.resize(ids.size());
    g.self.assign(ids.size(), 0.0);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = i;
    std::map<std::pair<std::size_t, std::size_t>, double> weights;
    for (const auto& e : edges) {
        auto a = index.find(e.src), b = index.find(e.dst);
        if (a == index.end() || b == index.end()) continue;
        if (a->second == b->second) {
            g.self[a->second] += e.weight;
            continue;
        }
        weights[{std::min(a->second, b->second), std::max(a->second, b->second)}] += e.weight;
    }
    for (const auto& [pair, w] : weights) {
        g.adj[pair.first].push_back({pair.second, w});
        g.adj[pair.second].push_back({pair.first, w});
    }
    return g;
}

double modularity(const WeightedGraph& g, const std::vector<int>& membership, double gamma) {
    const double m = g.total_weight();
    if (m == 0.0) return 0.0;
    std::map<int, double> internal, degree;
    for (std::size_t v = 0; v < g.size(); ++v) {
        int c = membership[v];
        internal[c] += g.self[v];
        degree[c] += g.degree(v);
        for (const auto& [u, w] : g.adj[v]) {
            if (u > v && membership[u] == c) internal[c] += w;
        }
    }
    double q = 0.0;
    for (const auto& [c, d] : degree) q += internal[c] / m - gamma * (d / (2.0 * m)) * (d / (2.0 * m));
    return q;
}

namespace {

constexpr double kRefineTheta = 0.01;
constexpr double kEps = 1e-12;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(static_cast<std::mt19937::result_type>(seed ^ (seed >> 32))) {}
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }
    double unit() { return static_cast<double>(gen_()) / 4294967296.0; }
    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> p(n);
        std::iota(p.begin(), p.end(), 0);
        for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[below(i)]);
        return p;
    }

private:
    std::mt19937 gen_;
};

// Labels compacted to 0..k-1 in order of first appearance.
int compact(std::vector<int>& labels) {
    std::map<int, int> remap;
    for (int& l : labels) {
        auto [it, fresh] = remap.emplace(l, static_cast<int>(remap.size()));
        l = it->second;
    }
    return static_cast<int>(remap.size());
}

void move_nodes_fast(const WeightedGraph& g, std::vector<int>& part, double gamma, Rng& rng) {
    const std::size_t n = g.size();
    const double m = g.total_weight();
    if (m == 0.0) return;
    std::vector<double> k(n), comm_deg(n, 0.0);
    std::vector<std::size_t> comm_size(n, 0);
    for (std::size_t v = 0; v < n; ++v) {
        k[v] = g.degree(v);
        comm_deg[static_cast<std::size_t>(part[v])] += k[v];
        ++comm_size[static_cast<std::size_t>(part[v])];
    }
    std::vector<std::size_t> empty;
    for (std::size_t c = n; c-- > 0;) {
        if (comm_size[c] == 0) empty.push_back(c);
    }
    std::deque<std::size_t> queue;
    std::vector<char> queued(n, 1);
    for (auto v : rng.permutation(n)) queue.push_back(v);
    std::vector<double> nw(n, 0.0);
    std::vector<std::size_t> touched;
    while (!queue.empty()) {
        std::size_t v = queue.front();
        queue.pop_front();
        queued[v] = 0;
        auto cur = static_cast<std::size_t>(part[v]);
        touched.clear();
        for (const auto& [u, w] : g.adj[v]) {
            auto c = static_cast<std::size_t>(part[u]);
            if (nw[c] == 0.0) touched.push_back(c);
            nw[c] += w;
        }
        comm_deg[cur] -= k[v];
        --comm_size[cur];
        std::size_t best = cur;
        double best_gain = nw[cur] - gamma * k[v] * comm_deg[cur] / (2.0 * m);
        for (auto c : touched) {
            double gain = nw[c] - gamma * k[v] * comm_deg[c] / (2.0 * m);
            if (gain > best_gain + kEps) {
                best = c;
                best_gain = gain;
            }
        }
        if (best_gain < -kEps && comm_size[cur] > 0) {
            // Alone beats every neighbour: take an empty community.
            best = empty.back();
            empty.pop_back();
        }
        for (auto c : touched) nw[c] = 0.0;
        if (comm_size[cur] == 0 && best != cur) empty.push_back(cur);
        part[v] = static_cast<int>(best);
        comm_deg[best] += k[v];
        ++comm_size[best];
        if (best != cur) {
            for (const auto& [u, w] : g.adj[v]) {
                if (!queued[u] && static_cast<std::size_t>(part[u]) != best) {
                    queued[u] = 1;
                    queue.push_back(u);
                }
            }
        }
    }
}

std::vector<int> refine(const WeightedGraph& g, const std::vector<int>& part, double gamma, Rng& rng) {
    const std::size_t n = g.size();
    const double m = g.total_weight();
    std::vector<int> refined(n);
    std::iota(refined.begin(), refined.end(), 0);
    if (m == 0.0) return refined;

    std::map<int, std::vector<std::size_t>> members;
    std::map<int, double> comm_deg;
    std::vector<double> k(n);
    for (std::size_t v = 0; v < n; ++v) {
        k[v] = g.degree(v);
        members[part[v]].push_back(v);
        comm_deg[part[v]] += k[v];
    }
    std::vector<double> r_deg(k), r_ext(n, 0.0);
    std::vector<std::size_t> r_size(n, 1);
    for (std::size_t v = 0; v < n; ++v) {
        for (const auto& [u, w] : g.adj[v]) {
            if (part[u] == part[v]) r_ext[v] += w;
        }
    }
    std::vector<double> nw(n, 0.0);
    std::vector<std::size_t> touched;
    for (auto& [c, nodes] : members) {
        const double dc = comm_deg[c];
        auto order = rng.permutation(nodes.size());
        for (auto oi : order) {
            std::size_t v = nodes[oi];
            auto rv = static_cast<std::size_t>(refined[v]);
            if (r_size[rv] != 1) continue;
            if (r_ext[rv] < gamma * k[v] * (dc - k[v]) / (2.0 * m) - kEps) continue;
            touched.clear();
            for (const auto& [u, w] : g.adj[v]) {
                if (part[u] != c) continue;
                auto t = static_cast<std::size_t>(refined[u]);
                if (t == rv) continue;
                if (nw[t] == 0.0) touched.push_back(t);
                nw[t] += w;
            }
            std::vector<std::pair<std::size_t, double>> options{{rv, 0.0}};
            for (auto t : touched) {
                bool well_connected = r_ext[t] >= gamma * r_deg[t] * (dc - r_deg[t]) / (2.0 * m) - kEps;
                double gain = (nw[t] - gamma * k[v] * r_deg[t] / (2.0 * m)) / m;
                if (well_connected && gain >= 0.0) options.push_back({t, gain});
            }
            double top = 0.0;
            for (const auto& o : options) top = std::max(top, o.second);
            double total = 0.0;
            for (auto& o : options) total += std::exp((o.second - top) / kRefineTheta);
            double pick = rng.unit() * total;
            std::size_t chosen = options.back().first;
            for (const auto& o : options) {
                pick -= std::exp((o.second - top) / kRefineTheta);
                if (pick <= 0.0) {
                    chosen = o.first;
                    break;
                }
            }
            if (chosen != rv) {
                double w_vt = nw[chosen];
                refined[v] = static_cast<int>(chosen);
                r_deg[chosen] += k[v];
                r_size[chosen] += 1;
                r_size[rv] = 0;
                r_ext[chosen] = r_ext[chosen] + r_ext[rv] - 2.0 * w_vt;
            }
            for (auto t : touched) nw[t] = 0.0;
        }
    }
    return refined;
}

WeightedGraph aggregate(const WeightedGraph& g, const std::vector<int>& groups, int count) {
    WeightedGraph a;
    a.ids.resize(static_cast<std::size_t>(count));
    a.adj.resize(static_cast<std::size_t>(count));
    a.self.assign(static_cast<std::size_t>(count), 0.0);
    std::vector<std::map<std::size_t, double>> w(static_cast<std::size_t>(count));
    for (std::size_t v = 0; v < g.size(); ++v) {
        auto gv = static_cast<std::size_t>(groups[v]);
        a.self[gv] += g.self[v];
        for (const auto& [u, weight] : g.adj[v]) {
            auto gu = static_cast<std::size_t>(groups[u]);
            if (gu == gv) {
                if (u > v) a.self[gv] += weight;
            } else {
                w[gv][gu] += weight;
            }
        }
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
        for (const auto& [j, weight] : w[i]) a.adj[i].push_back({j, weight});
    }
    return a;
}

std::vector<int> leiden_pass(const WeightedGraph& g0, std::vector<int> start, double gamma, Rng& rng) {
    WeightedGraph g = g0;
    std::vector<int> part = std::move(start);
    compact(part);
    std::vector<std::size_t> node_of(g0.size());
    std::iota(node_of.begin(), node_of.end(), 0);
    for (int level = 0; level < 64; ++level) {
        move_nodes_fast(g, part, gamma, rng);
        int communities = compact(part);
        if (static_cast<std::size_t>(communities) == g.size()) break;
        auto groups = refine(g, part, gamma, rng);
        int refined_count = compact(groups);
        if (static_cast<std::size_t>(refined_count) == g.size()) {
            groups = part;
            refined_count = communities;
        }
        std::vector<int> next_part(static_cast<std::size_t>(refined_count));
        for (std::size_t v = 0; v < g.size(); ++v) next_part[static_cast<std::size_t>(groups[v])] = part[v];
        for (auto& n : node_of) n = static_cast<std::size_t>(groups[n]);
        g = aggregate(g, groups, refined_count);
        part = std::move(next_part);
    }
    std::vector<int> membership(g0.size());
    for (std::size_t v = 0; v < g0.size(); ++v) membership[v] = part[node_of[v]];
    return membership;
}

// Size descending, then lowest member index.
void canonical_order(std::vector<int>& membership) {
    std::map<int, std::pair<std::size_t, std::size_t>> info;  // label -> (size, first)
    for (std::size_t v = 0; v < membership.size(); ++v) {
        auto [it, fresh] = info.emplace(membership[v], std::make_pair(std::size_t{0}, v));
        ++it->second.first;
    }
    std::vector<std::pair<int, std::pair<std::size_t, std::size_t>>> order(info.begin(), info.end());
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        return a.second.first != b.second.first ? a.second.first > b.second.first : a.second.second < b.second.second;
    });
    std::map<int, int> remap;
    for (std::size_t i = 0; i < order.size(); ++i) remap[order[i].first] = static_cast<int>(i);
    for (int& l : membership) l = remap[l];
}

}  // namespace

std::vector<int> leiden(const WeightedGraph& g, double gamma, std::uint64_t seed, int restarts) {
    std::vector<int> best(g.size());
    std::iota(best.begin(), best.end(), 0);
    double best_q = modularity(g, best, gamma);
    for (int r = 0; r < std::max(1, restarts); ++r) {
        Rng rng(seed + static_cast<std::uint64_t>(r) * 0x9e3779b97f4a7c15ULL);
        std::vector<int> membership(g.size());
        std::iota(membership.begin(), membership.end(), 0);
        if (r > 0 && g.size() > 1) {
            // Later restarts begin from a random coarse partition so local moving can split as well as merge.
            std::size_t labels = 2 + static_cast<std::size_t>(r) % std::max<std::size_t>(1, g.size() / 2);
            for (auto& l : membership) l = static_cast<int>(rng.below(labels));
        }
        double q_run = -std::numeric_limits<double>::infinity();
        for (int iter = 0; iter < 32; ++iter) {
            auto next = leiden_pass(g, membership, gamma, rng);
            canonical_order(next);
            double q = modularity(g, next, gamma);
            if (q <= q_run + kEps) break;
            q_run = q;
            membership = std::move(next);
        }
        if (q_run > best_q + kEps) {
            best_q = q_run;
            best = std::move(membership);
        }
    }
    canonical_order(best);
    return best;
}

CommunityDetection detect_communities(const WeightedGraph& g, const std::vector<double>& resolutions,
                                      std::uint64_t seed) {
    if (g.size() == 0) throw EmptyGraph();
    std::vector<std::future<std::vector<int>>> jobs;
    for (double gamma : resolutions) {
        jobs.push_back(std::async(std::launch::async, [&g, gamma, seed]() { return leiden(g, gamma, seed); }));
    }
    CommunityDetection out;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < resolutions.size(); ++r) {
        auto membership = jobs[r].get();
        double gamma = resolutions[r];
        std::map<int, std::vector<std::string>> groups;
        for (std::size_t v = 0; v < g.size(); ++v) groups[membership[v]].push_back(g.ids[v]);
        auto& list = out.by_resolution[gamma];
        for (auto& [label, ids] : groups) {
            std::sort(ids.begin(), ids.end());
            Community c;
            c.community_id = label;
            c.size = ids.size();
            c.members = std::move(ids);
            c.resolution = gamma;
            list.push_back(std::move(c));
        }
        double q = modularity(g, membership, 1.0);
        out.modularity_at_unit[gamma] = q;
        if (q > best + kEps) {
            best = q;
            out.working_resolution = gamma;
        }
    }
    return out;
}

std::string label_theme(const Community& community, const GraphStore& store, const std::vector<Community>& peers) {
    auto titles = [&](const Community& c) {
        std::map<std::string, double> tf;
        for (const auto& id : c.members) {
            const auto* chunk = store.chunk(id);
            if (!chunk) continue;
            for (const auto& t : text::content_terms(chunk->title)) {
                bool numeric = std::all_of(t.begin(), t.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); });
                if (!numeric) tf[t] += 1.0;
            }
        }
        return tf;
    };
    auto own = titles(community);
    if (own.empty()) return "untitled";
    std::map<std::string, std::size_t> df;
    std::size_t docs = 0;
    bool self_listed = false;
    for (const auto& p : peers) {
        self_listed = self_listed || p.community_id == community.community_id;
        ++docs;
        for (const auto& [t, c] : titles(p)) ++df[t];
    }
    if (!self_listed) {
        ++docs;
        for (const auto& [t, c] : own) ++df[t];
    }
    std::vector<std::pair<double, std::string>> scored;
    for (const auto& [t, c] : own) {
        double idf = std::log((1.0 + static_cast<double>(docs)) / (1.0 + static_cast<double>(df[t]))) + 1.0;
        scored.push_back({(1.0 + std::log(c)) * idf, t});
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::vector<std::string> top;
    for (std::size_t i = 0; i < scored.size() && i < 3; ++i) top.push_back(scored[i].second);
    return text::join(top, "/");
}

nlohmann::json SemanticReport::to_json() const {
    nlohmann::json j;
    j["dense_edges"] = dense_edges;
    j["sparse_edges"] = sparse_edges;
    j["edge_reduction_ratio"] = sparse_edges == 0 ? 0.0 : static_cast<double>(dense_edges) / static_cast<double>(sparse_edges);
    j["working_resolution"] = detection.working_resolution;
    auto& res = j["resolutions"] = nlohmann::json::array();
    for (const auto& [gamma, list] : detection.by_resolution) {
        nlohmann::json r;
        r["resolution"] = gamma;
        auto q = detection.modularity_at_unit.find(gamma);
        r["modularity"] = q == detection.modularity_at_unit.end() ? 0.0 : q->second;
        std::size_t singletons = 0;
        auto& comms = r["communities"] = nlohmann::json::array();
        for (const auto& c : list) {
            if (c.size < 2) {
                ++singletons;
                continue;
            }
            comms.push_back({{"id", c.community_id}, {"size", c.size}, {"theme", c.theme}});
        }
        r["community_count"] = comms.size();
        r["singletons"] = singletons;
        res.push_back(std::move(r));
    }
    return j;
}

SemanticReport build_semantic_layer(GraphStore& store, Embedder& embedder, const SemanticOptions& options) {
    SemanticReport report;
    store.clear_edges(RelType::SEMANTIC_SIMILAR);
    store.clear_communities();
    if (store.chunks().empty()) return report;

    std::vector<std::pair<std::string, std::string>> items;
    std::vector<std::string> ids;
    for (const auto& c : store.chunks()) {
        items.push_back({c.chunk_id, c.title + "\n" + c.content});
        ids.push_back(c.chunk_id);
    }
    auto vectors = embed_all(embedder, items, options.max_parallel);
    auto sim = build_similarity_graph(vectors, options.threshold, options.top_k);
    for (const auto& e : sim.edges) store.add_edge(e);
    report.dense_edges = sim.dense_edges;
    report.sparse_edges = sim.edges.size();

    auto graph = make_graph(ids, sim.edges);
    report.detection = detect_communities(graph, options.resolutions, options.seed);
    for (auto& [gamma, list] : report.detection.by_resolution) {
        for (auto& c : list) c.theme = label_theme(c, store, list);
    }
    for (const auto& c : report.detection.by_resolution.at(report.detection.working_resolution)) {
        if (c.size < 2) continue;
        store.add_community(c);
        for (const auto& m : c.members) store.add_edge({RelType::BELONGS_TO, m, community_node_id(c.community_id), 1.0});
    }
    return report;
}

}  // namespace modernize
