#include "modernize/retrieval_fusion.hpp"

#include "modernize/errors.hpp"
#include "modernize/text.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <sstream>

namespace modernize {

using namespace text;

std::string to_string(RetrievalMode m) {
    switch (m) {
        case RetrievalMode::fulltext: return "fulltext";
        case RetrievalMode::community: return "community";
        case RetrievalMode::concept_expansion: return "concept_expansion";
        case RetrievalMode::semantic_similar: return "semantic_similar";
    }
    return "fulltext";
}

double type_weight(RetrievalMode m) {
    switch (m) {
        case RetrievalMode::fulltext: return 1.0;
        case RetrievalMode::community: return 0.9;
        case RetrievalMode::concept_expansion: return 0.8;
        case RetrievalMode::semantic_similar: return 0.7;
    }
    return 0.7;
}

double tier_weight(QueryTier t) {
    switch (t) {
        case QueryTier::primary: return 1.0;
        case QueryTier::secondary: return 0.7;
        case QueryTier::concept_: return 0.5;
    }
    return 0.5;
}

namespace {

std::string fold(const std::string& term) {
    if (term.size() > 3 && term.back() == 's' && term[term.size() - 2] != 's') return term.substr(0, term.size() - 1);
    return term;
}

std::set<std::string> folded_terms(const std::string& s) {
    std::set<std::string> out;
    for (const auto& t : content_terms(s)) out.insert(fold(t));
    return out;
}

std::set<std::string> community_members(const GraphStore& store, const std::string& node_id) {
    std::set<std::string> out;
    for (const auto* e : store.in_edges(RelType::BELONGS_TO, node_id)) out.insert(e->src);
    return out;
}

void sort_mode(std::vector<RetrievalResult>& rs, std::size_t k) {
    std::sort(rs.begin(), rs.end(), [](const RetrievalResult& a, const RetrievalResult& b) {
        if (a.raw_score != b.raw_score) return a.raw_score > b.raw_score;
        return a.chunk_id < b.chunk_id;
    });
    if (rs.size() > k) rs.resize(k);
}

std::optional<int> community_id_of(const GraphStore& store, const std::string& chunk_id) {
    auto node = store.community_of(chunk_id);
    if (!node) return std::nullopt;
    if (const auto* c = store.community(*node)) return c->community_id;
    return std::nullopt;
}

std::vector<RetrievalResult> fulltext_mode(const std::string& text, const GraphStore& store, std::size_t k,
                                           const std::set<std::string>* allowed) {
    std::vector<RetrievalResult> out;
    for (const auto& [id, score] : store.fulltext().query(text, k, allowed)) {
        out.push_back({id, RetrievalMode::fulltext, score, community_id_of(store, id)});
    }
    return out;
}

std::vector<RetrievalResult> community_mode(const std::set<std::string>& terms, const GraphStore& store,
                                            const std::vector<std::string>& communities, std::size_t k) {
    std::vector<RetrievalResult> out;
    if (terms.empty()) return out;
    for (const auto& node : communities) {
        const auto* com = store.community(node);
        for (const auto& id : community_members(store, node)) {
            const auto* chunk = store.chunk(id);
            if (!chunk) continue;
            std::string hay = to_lower(chunk->title + "\n" + chunk->content);
            std::size_t hit = 0;
            for (const auto& t : terms) hit += contains(hay, t) ? 1 : 0;
            if (hit == 0) continue;
            out.push_back({id, RetrievalMode::community, static_cast<double>(hit) / static_cast<double>(terms.size()),
                           com ? std::optional<int>(com->community_id) : std::nullopt});
        }
    }
    sort_mode(out, k);
    return out;
}

std::vector<RetrievalResult> concept_mode(const QuerySpec& query, const std::set<std::string>& terms,
                                          const GraphStore& store, std::size_t k) {
    std::string lower_text = to_lower(query.text);
    std::vector<const Entity*> seeds;
    for (const auto* e : store.entities()) {
        if (e->kind != EntityKind::domain_concept) continue;
        std::string name = to_lower(e->name);
        if (terms.count(name) || terms.count(fold(name)) || contains_whole_token(lower_text, name)) seeds.push_back(e);
    }
    std::vector<RetrievalResult> out;
    if (seeds.empty()) return out;
    std::map<std::string, std::size_t> hits;
    for (const auto* e : seeds) {
        for (const auto* rel : store.in_edges(RelType::MENTIONS, e->entity_id)) ++hits[rel->src];
    }
    for (const auto& [id, n] : hits) {
        if (!store.chunk(id)) continue;
        out.push_back({id, RetrievalMode::concept_expansion, static_cast<double>(n) / static_cast<double>(seeds.size()),
                       community_id_of(store, id)});
    }
    sort_mode(out, k);
    return out;
}

std::vector<std::pair<std::string, double>> similar_neighbors(const GraphStore& store, const std::string& id) {
    std::vector<std::pair<std::string, double>> out;
    for (const auto* e : store.out_edges(RelType::SEMANTIC_SIMILAR, id)) out.emplace_back(e->dst, e->weight);
    for (const auto* e : store.in_edges(RelType::SEMANTIC_SIMILAR, id)) out.emplace_back(e->src, e->weight);
    return out;
}

std::vector<RetrievalResult> semantic_mode(const std::vector<RetrievalResult>& fulltext, const GraphStore& store,
                                           std::size_t seeds, int hops, std::size_t k) {
    std::set<std::string> reached;
    std::map<std::string, double> frontier;
    for (std::size_t i = 0; i < fulltext.size() && i < seeds; ++i) {
        reached.insert(fulltext[i].chunk_id);
        frontier[fulltext[i].chunk_id] = fulltext[i].raw_score;
    }
    // Each hop keeps its own cap so a deeper search never displaces nearer hits.
    std::vector<RetrievalResult> out;
    for (int hop = 0; hop < hops; ++hop) {
        std::map<std::string, double> next;
        for (const auto& [id, score] : frontier) {
            for (const auto& [nb, w] : similar_neighbors(store, id)) {
                if (reached.count(nb)) continue;
                auto& slot = next[nb];
                slot = std::max(slot, score * w);
            }
        }
        std::vector<RetrievalResult> level;
        for (const auto& [id, s] : next) {
            reached.insert(id);
            if (s > 0) level.push_back({id, RetrievalMode::semantic_similar, s, community_id_of(store, id)});
        }
        sort_mode(level, k);
        out.insert(out.end(), level.begin(), level.end());
        frontier = std::move(next);
    }
    return out;
}

std::string fulltext_text(const QuerySpec& query) {
    std::set<std::string> terms;
    for (const auto& t : content_terms(query.text)) terms.insert(t);
    for (const auto& k : query.keywords) {
        for (const auto& t : content_terms(k)) terms.insert(t);
    }
    return join(std::vector<std::string>(terms.begin(), terms.end()), " ");
}

std::vector<RetrievalResult> graph_retrieve(const QuerySpec& query, const GraphStore& store,
                                            const RetrievalOptions& options, int hops) {
    auto terms = query_terms(query);
    auto selected = select_communities(query, store, options);
    std::set<std::string> allowed;
    for (const auto& node : selected) {
        auto m = community_members(store, node);
        allowed.insert(m.begin(), m.end());
    }
    auto policy = options.parallel ? std::launch::async : std::launch::deferred;
    auto community = std::async(policy, [&] { return community_mode(terms, store, selected, options.community_k); });
    auto concept_ = std::async(policy, [&] { return concept_mode(query, terms, store, options.concept_k); });
    auto fulltext = fulltext_mode(fulltext_text(query), store, options.fulltext_k, allowed.empty() ? nullptr : &allowed);
    auto semantic = semantic_mode(fulltext, store, options.semantic_seeds, hops, options.fulltext_k);

    std::vector<RetrievalResult> out = std::move(fulltext);
    for (auto* part : {&community, &concept_}) {
        auto rs = part->get();
        out.insert(out.end(), rs.begin(), rs.end());
    }
    out.insert(out.end(), semantic.begin(), semantic.end());
    return out;
}

}  // namespace

std::set<std::string> query_terms(const QuerySpec& query) {
    std::set<std::string> out = folded_terms(query.text);
    for (const auto& k : query.keywords) {
        auto t = folded_terms(k);
        out.insert(t.begin(), t.end());
    }
    return out;
}

QuerySpec make_query(const std::string& text, Strategy strategy) {
    QueryTier tier = QueryTier::primary;
    if (strategy == Strategy::fast) tier = QueryTier::secondary;
    if (strategy == Strategy::deep) tier = QueryTier::concept_;
    return {tier, strategy, text, {}};
}

std::vector<std::string> select_communities(const QuerySpec& query, const GraphStore& store,
                                            const RetrievalOptions& options) {
    auto communities = store.communities();
    std::vector<std::set<std::string>> themes;
    std::map<std::string, std::size_t> df;
    for (const auto* c : communities) {
        std::string theme = c->theme;
        std::replace(theme.begin(), theme.end(), '/', ' ');
        themes.push_back(folded_terms(theme));
        for (const auto& t : themes.back()) ++df[t];
    }
    double n = static_cast<double>(communities.size());
    auto terms = query_terms(query);
    std::vector<std::pair<double, const Community*>> scored;
    for (std::size_t i = 0; i < communities.size(); ++i) {
        double score = 0.0;
        for (const auto& t : themes[i]) {
            if (terms.count(t)) score += std::log((1.0 + n) / (1.0 + static_cast<double>(df[t]))) + 1.0;
        }
        scored.emplace_back(score, communities[i]);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second->community_id < b.second->community_id;
    });
    std::vector<std::string> out;
    for (const auto& [score, c] : scored) {
        if (out.size() >= options.max_communities) break;
        if (out.size() >= options.min_communities && score <= 0.0) break;
        out.push_back(community_node_id(c->community_id));
    }
    return out;
}

std::vector<RetrievalResult> retrieve(const QuerySpec& query, Strategy strategy, const GraphStore& store,
                                      const RetrievalOptions& options) {
    switch (strategy) {
        case Strategy::fast:
            return fulltext_mode(fulltext_text(query), store, options.fulltext_k, nullptr);
        case Strategy::comprehensive:
            return graph_retrieve(query, store, options, 1);
        case Strategy::deep:
            return graph_retrieve(query, store, options, 2);
        case Strategy::hybrid: {
            auto fast = fulltext_mode(fulltext_text(query), store, options.fulltext_k, nullptr);
            if (!fast.empty() && fast.front().raw_score >= options.hybrid_escalation) return fast;
            return graph_retrieve(query, store, options, 1);
        }
    }
    throw UnknownStrategy(std::to_string(static_cast<int>(strategy)));
}

double FusionFactors::product() const {
    return raw_score * type_weight * community_weight * length_weight * tier_weight * relevance_factor;
}

nlohmann::json FusedCandidate::to_json() const {
    return {{"chunk_id", chunk_id},
            {"title", title},
            {"composite", composite},
            {"mode", to_string(mode)},
            {"tier", to_string(tier)},
            {"factors",
             {{"raw_score", factors.raw_score},
              {"type_weight", factors.type_weight},
              {"community_weight", factors.community_weight},
              {"length_weight", factors.length_weight},
              {"tier_weight", factors.tier_weight},
              {"relevance_factor", factors.relevance_factor}}}};
}

double community_weight(const GraphStore& store, const std::string& chunk_id) {
    auto node = store.community_of(chunk_id);
    if (!node) return 1.0;
    std::size_t max_size = 0;
    for (const auto* c : store.communities()) max_size = std::max(max_size, c->size);
    const auto* c = store.community(*node);
    if (!c || max_size == 0) return 1.0;
    return 1.0 - 0.1 * static_cast<double>(c->size) / static_cast<double>(max_size);
}

double length_weight(std::size_t char_length) {
    return static_cast<double>(std::min<std::size_t>(char_length, 1000)) / 1000.0;
}

double relevance_factor(const FortranAnalysis& a, const std::string& content) {
    std::vector<std::vector<std::string>> features;
    if (a.pde_class != PdeClass::unknown) {
        std::vector<std::string> f{to_string(a.pde_class), to_lower(pde_name(a))};
        if (a.pde_class == PdeClass::parabolic) f.push_back("diffusion");
        if (a.pde_class == PdeClass::elliptic) f.push_back("poisson");
        features.push_back(f);
    }
    switch (a.scheme) {
        case Scheme::ftcs: features.push_back({"ftcs", "forward euler", "explicit"}); break;
        case Scheme::central: features.push_back({"central", "centered"}); break;
        case Scheme::upwind: features.push_back({"upwind", "one-sided", "backward difference"}); break;
        case Scheme::crank_nicolson: features.push_back({"crank-nicolson", "crank nicolson"}); break;
        case Scheme::jacobi: features.push_back({"jacobi"}); break;
        case Scheme::unknown: break;
    }
    for (auto bc : a.boundary_conditions) {
        if (bc == BoundaryCondition::unknown) continue;
        if (bc == BoundaryCondition::absorbing) {
            features.push_back({"absorbing", "damping", "sponge"});
        } else {
            features.push_back({to_string(bc)});
        }
    }
    if (a.dimensions > 0) {
        static const char* kWords[] = {"", "one", "two", "three"};
        std::string d = std::to_string(a.dimensions);
        std::vector<std::string> f{d + "d", d + "-d", d + " dimensional", d + "-dimensional"};
        if (a.dimensions <= 3) {
            f.push_back(std::string(kWords[a.dimensions]) + "-dimensional");
            f.push_back(std::string(kWords[a.dimensions]) + " dimensional");
        }
        features.push_back(f);
    }
    if (features.empty()) return 1.0;
    std::string hay = to_lower(content);
    std::size_t matched = 0;
    for (const auto& f : features) {
        if (std::any_of(f.begin(), f.end(), [&](const std::string& t) { return contains_whole_token(hay, t); })) {
            ++matched;
        }
    }
    return 1.0 + static_cast<double>(matched) / static_cast<double>(features.size());
}

std::vector<FusedCandidate> fuse(const std::vector<QueryResults>& per_query, const FortranAnalysis& analysis,
                                 const GraphStore& store, std::size_t limit) {
    struct Best {
        double raw;
        RetrievalMode mode;
        QueryTier tier;
    };
    std::map<std::string, Best> best;
    for (const auto& q : per_query) {
        double max_ft = 0.0;
        for (const auto& r : q.results) {
            if (r.mode == RetrievalMode::fulltext) max_ft = std::max(max_ft, r.raw_score);
        }
        for (const auto& r : q.results) {
            if (!store.chunk(r.chunk_id)) continue;
            double raw = r.raw_score;
            if (r.mode == RetrievalMode::fulltext && max_ft > 0) raw /= max_ft;
            Best cand{raw, r.mode, q.query.tier};
            auto it = best.find(r.chunk_id);
            if (it == best.end()) {
                best.emplace(r.chunk_id, cand);
                continue;
            }
            Best& cur = it->second;
            auto key = [](const Best& b) { return std::make_tuple(b.raw, type_weight(b.mode), tier_weight(b.tier)); };
            if (key(cand) > key(cur)) cur = cand;
        }
    }

    std::vector<FusedCandidate> out;
    for (const auto& [id, b] : best) {
        const auto* chunk = store.chunk(id);
        FusedCandidate c;
        c.chunk_id = id;
        c.mode = b.mode;
        c.tier = b.tier;
        c.title = chunk->title;
        c.content = chunk->content;
        c.factors.raw_score = b.raw;
        c.factors.type_weight = type_weight(b.mode);
        c.factors.community_weight = community_weight(store, id);
        c.factors.length_weight = length_weight(chunk->char_length);
        c.factors.tier_weight = tier_weight(b.tier);
        c.factors.relevance_factor = relevance_factor(analysis, chunk->title + "\n" + chunk->content);
        c.composite = c.factors.product();
        out.push_back(std::move(c));
    }
    std::sort(out.begin(), out.end(), [](const FusedCandidate& a, const FusedCandidate& b) {
        if (a.composite != b.composite) return a.composite > b.composite;
        return a.chunk_id < b.chunk_id;
    });
    if (out.size() > limit) out.resize(limit);
    return out;
}

RagContext build_context(const FortranAnalysis& analysis, const GraphStore& store, const RetrievalOptions& options) {
    RagContext ctx;
    ctx.analysis = analysis;
    std::vector<QueryResults> per_query;
    for (const auto& q : generate_queries(analysis)) {
        try {
            Strategy s = options.escalate && q.strategy == Strategy::comprehensive ? Strategy::deep : q.strategy;
            per_query.push_back({q, retrieve(q, s, store, options)});
        } catch (const EmptyQuery&) {
        }
    }
    ctx.candidates = fuse(per_query, analysis, store);
    return ctx;
}

const std::string& output_schema_text() {
    static const std::string kSchema =
        "Return exactly one JSON object with these fields and nothing else:\n"
        "- devito_code: string, complete runnable Python using Devito\n"
        "- conversion_summary: string\n"
        "- key_decisions: list of {decision_type: string, rationale: string}\n"
        "- devito_components: list of {component: string, purpose: string}\n"
        "- equation_type: one of \"parabolic\", \"hyperbolic\", \"elliptic\"\n"
        "- spatial_dimensions: integer 1-3\n"
        "- time_dependent: boolean\n"
        "- conversion_confidence: number 0.0-1.0\n"
        "- validation: {execution_success: boolean, structure: number 0-1, api_compliance: number 0-1, "
        "parameters: number 0-1, fidelity: number 0-1}\n"
        "- usage_notes: list of strings\n"
        "- optimization_hints: list of strings\n";
    return kSchema;
}

std::string build_prompt(const std::string& fortran, const RagContext& ctx, int attempt,
                         const std::vector<std::string>& feedback) {
    std::ostringstream p;
    p << "You are a Fortran→Devito conversion expert. Convert the Fortran finite-difference program below "
         "into an equivalent Devito implementation.\n"
         "\n## Conversion requirements\n"
         "- Preserve the governing equation, discretisation order, grid sizes and physical parameters.\n"
         "- Express every update as a Devito Eq and run it through an Operator; no NumPy time loops.\n"
         "- Use only documented Devito API; do not invent attributes or keyword arguments.\n"
         "- Impose boundary conditions as equations on the boundary points or through subdomains.\n";
    if (attempt > 1) p << "\nConversion attempt: " << attempt << "\n";

    p << "\n## Standard Devito workflow\n"
         "1. grid = Grid(shape=..., extent=...)\n"
         "2. u = TimeFunction(name='u', grid=grid, time_order=..., space_order=...) or Function for static fields\n"
         "3. initialise u.data with 0-based indexing\n"
         "4. eq = Eq(u.forward, ...) or stencil = solve(pde, u.forward)\n"
         "5. boundary equations, e.g. Eq(u[t + 1, 0], 0.0)\n"
         "6. op = Operator([eq] + bcs); op.apply(time_M=nt - 1, dt=dt)\n";

    if (ctx.analysis) {
        const auto& a = *ctx.analysis;
        std::vector<std::string> bcs;
        for (auto bc : a.boundary_conditions) bcs.push_back(to_string(bc));
        std::ostringstream cx;
        cx.setf(std::ios::fixed);
        cx.precision(2);
        cx << a.complexity;
        p << "\n## Problem analysis\n"
          << "- equation type: " << to_string(a.pde_class) << "\n"
          << "- dimensions: " << a.dimensions << "\n"
          << "- complexity: " << cx.str() << "\n"
          << "- scheme: " << to_string(a.scheme) << "\n"
          << "- time stepping: " << to_string(a.time_stepping) << "\n"
          << "- boundary conditions: " << join(bcs, ", ") << "\n";
    }

    if (!ctx.candidates.empty()) {
        p << "\n## Reference examples\n";
        int n = 0;
        for (const auto& c : ctx.candidates) {
            p << "\n### Example " << ++n << ": " << c.title << "\n" << trim(c.content) << "\n";
        }
    }

    p << "\n## Fortran source\n```fortran\n" << trim(fortran) << "\n```\n";

    if (!feedback.empty()) {
        p << "\n## Feedback on the previous attempt\n";
        for (const auto& f : feedback) p << "- " << f << "\n";
    }

    p << "\n## Implementation guidelines\n"
         "- Import only what you use from devito; keep NumPy for initial data only.\n"
         "- Index u.data from 0; the first time index is the time buffer.\n"
         "- For one-sided differences use first_derivative(u, dim=x, side='left') with the side set by the advection sign.\n"
         "- Pass all equations to a single Operator as a list.\n"
         "- Match the Fortran parameter values exactly (grid size, dt, coefficients, step count).\n";

    p << "\n## Output format\n" << output_schema_text();
    return p.str();
}

}  // namespace modernize
