#include "modernize/knowledge_graph.hpp"

#include "modernize/errors.hpp"
#include "modernize/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>
#include <sstream>

namespace modernize {

std::string to_string(EntityKind kind) {
    switch (kind) {
        case EntityKind::code_class: return "code_class";
        case EntityKind::code_function: return "code_function";
        case EntityKind::code_variable: return "code_variable";
        case EntityKind::domain_concept: return "domain_concept";
        case EntityKind::general_term: return "general_term";
    }
    return "general_term";
}

EntityKind entity_kind_from_string(const std::string& s) {
    for (auto k : {EntityKind::code_class, EntityKind::code_function, EntityKind::code_variable,
                   EntityKind::domain_concept, EntityKind::general_term}) {
        if (to_string(k) == s) return k;
    }
    throw Error("unknown entity kind: " + s);
}

std::string entity_id(EntityKind kind, const std::string& name) { return "entity:" + to_string(kind) + ":" + name; }

std::string to_string(RelType type) {
    switch (type) {
        case RelType::MENTIONS: return "MENTIONS";
        case RelType::CALLS: return "CALLS";
        case RelType::INHERITS: return "INHERITS";
        case RelType::RELATED_TO: return "RELATED_TO";
        case RelType::PART_OF: return "PART_OF";
        case RelType::SEMANTIC_SIMILAR: return "SEMANTIC_SIMILAR";
        case RelType::BELONGS_TO: return "BELONGS_TO";
    }
    return "MENTIONS";
}

RelType rel_type_from_string(const std::string& s) {
    for (auto t : kAllRelTypes) {
        if (to_string(t) == s) return t;
    }
    throw Error("unknown relationship type: " + s);
}

std::string community_node_id(int community_id) { return "community:" + std::to_string(community_id); }

const std::set<std::string>& default_dictionary() {
    static const std::set<std::string> kTerms = {
        "Grid", "TimeFunction", "Function", "Operator", "Eq", "solve", "SubDomain", "Constant",
        "first_derivative", "SparseTimeFunction", "SparseFunction", "Dimension", "SpaceDimension",
        "TimeDimension", "SubDimension", "ConditionalDimension", "VectorTimeFunction", "TensorTimeFunction",
        "Inc", "Derivative", "laplace", "dt", "dt2", "dx", "dy", "dz", "forward", "backward", "interpolate",
        "inject", "space_order", "time_order", "staggered", "RickerSource", "Receiver", "TimeAxis",
        "boundary condition", "stencil", "finite difference", "absorbing boundary", "damping",
        "upwind", "periodic", "Dirichlet", "Neumann", "CFL", "wave equation", "heat equation",
        "diffusion", "advection", "Crank-Nicolson", "Jacobi", "Laplace equation", "Poisson equation",
        "time stepping", "explicit", "implicit", "discretization", "convergence"};
    return kTerms;
}

std::set<std::string> load_dictionary(const std::string& path) {
    std::set<std::string> terms;
    for (const auto& line : text::split_lines(text::read_file(path))) {
        auto t = text::trim(line);
        if (!t.empty() && t[0] != '#') terms.insert(t);
    }
    return terms;
}

namespace {

const std::regex kClassDecl(R"(^\s*class\s+([A-Za-z_]\w*)\s*(?:\(([^)]*)\))?\s*:)");
const std::regex kDefDecl(R"(^\s*(?:async\s+)?def\s+([A-Za-z_]\w*)\s*\()");
const std::regex kAssignHead(R"(^\s*([A-Za-z_]\w*(?:\s*,\s*[A-Za-z_]\w*)*)\s*,?\s*=(?!=))");

struct Line {
    std::string text;
    bool code;
};

std::vector<Line> classify_lines(const KnowledgeChunk& chunk) {
    std::vector<Line> out;
    bool in_fence = chunk.kind == ChunkKind::code_unit;
    for (const auto& line : text::split_lines(chunk.content)) {
        auto t = text::trim(line);
        if (chunk.kind == ChunkKind::doc_section && (text::starts_with(t, "```") || text::starts_with(t, "~~~"))) {
            in_fence = !in_fence;
            continue;
        }
        out.push_back({line, in_fence});
    }
    return out;
}

std::vector<std::string> split_names(const std::string& list) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : list + ",") {
        if (c == ',') {
            auto t = text::trim(cur);
            if (!t.empty()) out.push_back(t);
            cur.clear();
        } else {
            cur += c;
        }
    }
    return out;
}

bool capitalised(const std::string& w) {
    return !w.empty() && std::isupper(static_cast<unsigned char>(w[0])) && !text::is_stopword(text::to_lower(w));
}

// Runs of 2-3 capitalised words separated by single spaces.
void general_terms(const std::string& line, std::set<std::string>& out) {
    struct Word {
        std::size_t begin, end;
    };
    std::vector<Word> words;
    for (std::size_t i = 0; i < line.size();) {
        if (std::isalpha(static_cast<unsigned char>(line[i])) && (i == 0 || !text::is_word_char(line[i - 1]))) {
            std::size_t j = i;
            while (j < line.size() && (text::is_word_char(line[j]) || line[j] == '-')) ++j;
            words.push_back({i, j});
            i = j;
        } else {
            ++i;
        }
    }
    std::size_t run_begin = 0, run_end = 0, run_len = 0;
    auto close_run = [&]() {
        if (run_len >= 2 && run_len <= 3) out.insert(line.substr(run_begin, run_end - run_begin));
        run_len = 0;
    };
    for (std::size_t i = 0; i < words.size(); ++i) {
        bool cap = capitalised(line.substr(words[i].begin, words[i].end - words[i].begin));
        bool adjacent = i > 0 && words[i].begin == words[i - 1].end + 1 && line[words[i - 1].end] == ' ';
        if (cap && run_len > 0 && adjacent) {
            run_end = words[i].end;
            ++run_len;
            continue;
        }
        close_run();
        if (cap) {
            run_begin = words[i].begin;
            run_end = words[i].end;
            run_len = 1;
        }
    }
    close_run();
}

// Identifiers immediately followed by "(" that are not part of a def head.
std::set<std::string> called_names(const std::string& content) {
    static const std::regex kCall(R"(([A-Za-z_]\w*)\s*\()");
    std::set<std::string> out;
    for (auto it = std::sregex_iterator(content.begin(), content.end(), kCall); it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        std::size_t name_pos = static_cast<std::size_t>(m.position(1));
        if (name_pos > 0 && text::is_word_char(content[name_pos - 1])) continue;
        std::size_t p = name_pos;
        while (p > 0 && (content[p - 1] == ' ' || content[p - 1] == '\t')) --p;
        bool is_def = p >= 3 && content.compare(p - 3, 3, "def") == 0 &&
                      (p == 3 || !text::is_word_char(content[p - 4])) && p != name_pos;
        bool is_class = p >= 5 && content.compare(p - 5, 5, "class") == 0 &&
                        (p == 5 || !text::is_word_char(content[p - 6])) && p != name_pos;
        if (!is_def && !is_class) out.insert(m[1].str());
    }
    return out;
}

}  // namespace

std::vector<Entity> extract_entities(const KnowledgeChunk& chunk, const std::set<std::string>& dictionary) {
    std::map<std::pair<EntityKind, std::string>, Entity> found;
    auto add = [&](EntityKind kind, const std::string& name) {
        if (name.empty()) return;
        auto& e = found[{kind, name}];
        e.entity_id = entity_id(kind, name);
        e.name = name;
        e.kind = kind;
        e.source_chunks.insert(chunk.chunk_id);
    };

    std::set<std::string> phrases;
    for (const auto& line : classify_lines(chunk)) {
        if (line.code) {
            std::smatch m;
            if (std::regex_search(line.text, m, kClassDecl)) {
                add(EntityKind::code_class, m[1].str());
            } else if (std::regex_search(line.text, m, kDefDecl)) {
                add(EntityKind::code_function, m[1].str());
            } else if (std::regex_search(line.text, m, kAssignHead)) {
                for (const auto& n : split_names(m[1].str())) add(EntityKind::code_variable, n);
            }
        } else {
            general_terms(line.text, phrases);
        }
    }
    for (const auto& term : dictionary) {
        if (text::contains_whole_token(chunk.content, term)) add(EntityKind::domain_concept, term);
    }
    for (const auto& p : phrases) add(EntityKind::general_term, p);

    std::vector<Entity> out;
    for (auto& [key, e] : found) out.push_back(std::move(e));
    return out;
}

std::vector<Relationship> extract_relationships(const std::vector<KnowledgeChunk>& chunks,
                                                const std::vector<Entity>& entities) {
    std::vector<Relationship> rels;
    std::map<std::string, const KnowledgeChunk*> by_id;
    for (const auto& c : chunks) by_id[c.chunk_id] = &c;

    // MENTIONS
    for (const auto& e : entities) {
        for (const auto& cid : e.source_chunks) {
            if (by_id.count(cid)) rels.push_back({RelType::MENTIONS, cid, e.entity_id, 1.0});
        }
    }

    // CALLS: defining chunk of f calls g by name.
    std::map<std::string, std::vector<const KnowledgeChunk*>> defining;
    for (const auto& e : entities) {
        if (e.kind != EntityKind::code_function) continue;
        const std::regex def_re("(^|\\n)\\s*(async\\s+)?def\\s+" + e.name + "\\s*\\(");
        for (const auto& cid : e.source_chunks) {
            auto it = by_id.find(cid);
            if (it != by_id.end() && std::regex_search(it->second->content, def_re)) {
                defining[e.name].push_back(it->second);
            }
        }
    }
    std::set<std::pair<std::string, std::string>> calls;
    for (const auto& [fname, defs] : defining) {
        for (const auto* c : defs) {
            for (const auto& g : called_names(c->content)) {
                if (g != fname && defining.count(g)) calls.insert({fname, g});
            }
        }
    }
    for (const auto& [f, g] : calls) {
        rels.push_back({RelType::CALLS, entity_id(EntityKind::code_function, f),
                        entity_id(EntityKind::code_function, g), 1.0});
    }

    // INHERITS from class heads.
    std::set<std::pair<std::string, std::string>> inherits;
    for (const auto& c : chunks) {
        for (const auto& line : classify_lines(c)) {
            std::smatch m;
            if (!line.code || !std::regex_search(line.text, m, kClassDecl) || !m[2].matched) continue;
            for (auto base : split_names(m[2].str())) {
                if (base.find('=') != std::string::npos || base.find('*') != std::string::npos) continue;
                auto dot = base.rfind('.');
                if (dot != std::string::npos) base = base.substr(dot + 1);
                if (base == "object" || base.empty() || base == m[1].str()) continue;
                inherits.insert({m[1].str(), base});
            }
        }
    }
    for (const auto& [derived, base] : inherits) {
        rels.push_back({RelType::INHERITS, entity_id(EntityKind::code_class, derived),
                        entity_id(EntityKind::code_class, base), 1.0});
    }

    // PART_OF
    for (const auto& c : chunks) {
        if (c.parent_id && by_id.count(*c.parent_id)) rels.push_back({RelType::PART_OF, c.chunk_id, *c.parent_id, 1.0});
    }

    // RELATED_TO: chunks sharing enough distinct entity names.
    std::map<std::string, std::set<std::string>> chunks_by_name;
    for (const auto& e : entities) {
        for (const auto& cid : e.source_chunks) {
            if (by_id.count(cid)) chunks_by_name[e.name].insert(cid);
        }
    }
    std::map<std::pair<std::string, std::string>, std::size_t> shared;
    for (const auto& [name, cids] : chunks_by_name) {
        std::vector<std::string> v(cids.begin(), cids.end());
        for (std::size_t i = 0; i < v.size(); ++i) {
            for (std::size_t j = i + 1; j < v.size(); ++j) ++shared[{v[i], v[j]}];
        }
    }
    for (const auto& [pair, n] : shared) {
        if (n >= kRelatedToMinShared) {
            rels.push_back({RelType::RELATED_TO, pair.first, pair.second, std::min(1.0, static_cast<double>(n) / 10.0)});
        }
    }
    return rels;
}

// ---------------------------------------------------------------- fulltext

void FulltextIndex::build(const std::vector<std::pair<std::string, std::string>>& docs) {
    postings_.clear();
    norms_.clear();
    std::vector<std::map<std::string, double>> tfs;
    for (const auto& [id, body] : docs) {
        std::map<std::string, double> counts;
        for (const auto& t : text::content_terms(body)) counts[t] += 1.0;
        for (auto& [t, c] : counts) c = 1.0 + std::log(c);
        tfs.push_back(std::move(counts));
    }
    for (std::size_t i = 0; i < docs.size(); ++i) {
        norms_[docs[i].first] = 0.0;
        for (const auto& [t, w] : tfs[i]) postings_[t].push_back({docs[i].first, w});
    }
    for (std::size_t i = 0; i < docs.size(); ++i) {
        double sq = 0.0;
        for (const auto& [t, w] : tfs[i]) {
            double x = w * idf(postings_[t].size());
            sq += x * x;
        }
        norms_[docs[i].first] = std::sqrt(sq);
    }
}

double FulltextIndex::idf(std::size_t df) const {
    double n = static_cast<double>(norms_.size());
    return std::log((1.0 + n) / (1.0 + static_cast<double>(df))) + 1.0;
}

std::size_t FulltextIndex::document_frequency(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? 0 : it->second.size();
}

std::vector<std::pair<std::string, double>> FulltextIndex::query(const std::string& q, std::size_t k,
                                                                 const std::set<std::string>* allowed) const {
    auto terms = text::content_terms(q);
    if (terms.empty()) throw EmptyQuery();
    if (k == 0) return {};
    std::map<std::string, double> qtf;
    for (const auto& t : terms) qtf[t] += 1.0;
    double qnorm = 0.0;
    std::map<std::string, double> qw;
    for (auto& [t, c] : qtf) {
        double w = (1.0 + std::log(c)) * idf(document_frequency(t));
        qw[t] = w;
        qnorm += w * w;
    }
    qnorm = std::sqrt(qnorm);
    std::map<std::string, double> dot;
    for (const auto& [t, w] : qw) {
        auto it = postings_.find(t);
        if (it == postings_.end()) continue;
        double term_idf = idf(it->second.size());
        for (const auto& [id, tfw] : it->second) {
            if (allowed && !allowed->count(id)) continue;
            dot[id] += w * tfw * term_idf;
        }
    }
    std::vector<std::pair<std::string, double>> scored;
    for (const auto& [id, d] : dot) {
        double norm = norms_.at(id);
        if (d > 0.0 && norm > 0.0 && qnorm > 0.0) scored.push_back({id, d / (norm * qnorm)});
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

// ---------------------------------------------------------------- store

void GraphStore::add_chunk(const KnowledgeChunk& chunk) {
    if (has_node(chunk.chunk_id)) throw Error("duplicate node id: " + chunk.chunk_id);
    chunk_index_[chunk.chunk_id] = chunks_.size();
    chunks_.push_back(chunk);
}

void GraphStore::add_entity(const Entity& entity) {
    auto it = entities_.find(entity.entity_id);
    if (it == entities_.end()) {
        entities_[entity.entity_id] = entity;
    } else {
        it->second.source_chunks.insert(entity.source_chunks.begin(), entity.source_chunks.end());
    }
}

void GraphStore::add_community(const Community& community) {
    communities_[community_node_id(community.community_id)] = community;
}

void GraphStore::add_edge(const Relationship& rel) {
    if (!has_node(rel.src) || !has_node(rel.dst)) {
        throw Error("edge endpoint missing: " + to_string(rel.rel_type) + " " + rel.src + " -> " + rel.dst);
    }
    EdgeKey key{rel.rel_type, rel.src, rel.dst};
    auto& list = edges_[rel.rel_type];
    auto it = edge_index_.find(key);
    if (it != edge_index_.end()) {
        auto& existing = list[it->second];
        existing.weight = std::max(existing.weight, rel.weight);
        return;
    }
    edge_index_[key] = list.size();
    out_[rel.rel_type][rel.src].push_back(list.size());
    in_[rel.rel_type][rel.dst].push_back(list.size());
    list.push_back(rel);
}

void GraphStore::clear_edges(RelType type) {
    edges_.erase(type);
    out_.erase(type);
    in_.erase(type);
    for (auto it = edge_index_.begin(); it != edge_index_.end();) {
        it = it->first.type == type ? edge_index_.erase(it) : std::next(it);
    }
}

void GraphStore::clear_communities() {
    clear_edges(RelType::BELONGS_TO);
    communities_.clear();
}

const KnowledgeChunk* GraphStore::chunk(const std::string& id) const {
    auto it = chunk_index_.find(id);
    return it == chunk_index_.end() ? nullptr : &chunks_[it->second];
}

const Entity* GraphStore::entity(const std::string& id) const {
    auto it = entities_.find(id);
    return it == entities_.end() ? nullptr : &it->second;
}

const Community* GraphStore::community(const std::string& node_id) const {
    auto it = communities_.find(node_id);
    return it == communities_.end() ? nullptr : &it->second;
}

bool GraphStore::has_node(const std::string& id) const {
    return chunk_index_.count(id) || entities_.count(id) || communities_.count(id);
}

std::vector<const Entity*> GraphStore::entities() const {
    std::vector<const Entity*> out;
    for (const auto& [id, e] : entities_) out.push_back(&e);
    return out;
}

std::vector<const Community*> GraphStore::communities() const {
    std::vector<const Community*> out;
    for (const auto& [id, c] : communities_) out.push_back(&c);
    std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->community_id < b->community_id; });
    return out;
}

const std::vector<Relationship>& GraphStore::edges(RelType type) const {
    static const std::vector<Relationship> kNone;
    auto it = edges_.find(type);
    return it == edges_.end() ? kNone : it->second;
}

std::vector<const Relationship*> GraphStore::out_edges(RelType type, const std::string& id) const {
    std::vector<const Relationship*> out;
    auto t = out_.find(type);
    if (t == out_.end()) return out;
    auto it = t->second.find(id);
    if (it == t->second.end()) return out;
    const auto& list = edges_.at(type);
    for (auto i : it->second) out.push_back(&list[i]);
    return out;
}

std::vector<const Relationship*> GraphStore::in_edges(RelType type, const std::string& id) const {
    std::vector<const Relationship*> out;
    auto t = in_.find(type);
    if (t == in_.end()) return out;
    auto it = t->second.find(id);
    if (it == t->second.end()) return out;
    const auto& list = edges_.at(type);
    for (auto i : it->second) out.push_back(&list[i]);
    return out;
}

std::optional<std::string> GraphStore::community_of(const std::string& chunk_id) const {
    auto out = out_edges(RelType::BELONGS_TO, chunk_id);
    if (out.empty()) return std::nullopt;
    return out.front()->dst;
}

std::size_t GraphStore::node_count() const { return chunks_.size() + entities_.size() + communities_.size(); }

std::size_t GraphStore::edge_count() const {
    std::size_t n = 0;
    for (const auto& [t, list] : edges_) n += list.size();
    return n;
}

void GraphStore::build_fulltext() {
    std::vector<std::pair<std::string, std::string>> docs;
    docs.reserve(chunks_.size());
    for (const auto& c : chunks_) docs.push_back({c.chunk_id, c.title + "\n" + c.content});
    fulltext_.build(docs);
}

nlohmann::json GraphStore::to_json() const {
    nlohmann::json j;
    j["chunks"] = chunks_;
    auto& ents = j["entities"] = nlohmann::json::array();
    for (const auto& [id, e] : entities_) {
        ents.push_back({{"id", e.entity_id}, {"name", e.name}, {"kind", to_string(e.kind)},
                        {"source_chunks", e.source_chunks}});
    }
    auto& comms = j["communities"] = nlohmann::json::array();
    for (const auto* c : communities()) {
        comms.push_back({{"id", c->community_id}, {"theme", c->theme}, {"members", c->members},
                         {"resolution", c->resolution}, {"size", c->size}});
    }
    auto& edges = j["edges"] = nlohmann::json::object();
    for (const auto& [type, list] : edges_) {
        auto& arr = edges[to_string(type)] = nlohmann::json::array();
        for (const auto& r : list) arr.push_back({r.src, r.dst, r.weight});
    }
    return j;
}

GraphStore GraphStore::from_json(const nlohmann::json& j) {
    GraphStore s;
    try {
        for (const auto& c : j.at("chunks")) s.add_chunk(c.get<KnowledgeChunk>());
        for (const auto& e : j.at("entities")) {
            Entity ent{e.at("id").get<std::string>(), e.at("name").get<std::string>(),
                       entity_kind_from_string(e.at("kind").get<std::string>()),
                       e.at("source_chunks").get<std::set<std::string>>()};
            s.add_entity(ent);
        }
        for (const auto& c : j.at("communities")) {
            Community com;
            com.community_id = c.at("id").get<int>();
            com.theme = c.at("theme").get<std::string>();
            com.members = c.at("members").get<std::vector<std::string>>();
            com.resolution = c.at("resolution").get<double>();
            com.size = c.at("size").get<std::size_t>();
            s.add_community(com);
        }
        for (const auto& [type, list] : j.at("edges").items()) {
            auto t = rel_type_from_string(type);
            for (const auto& r : list) {
                s.add_edge({t, r.at(0).get<std::string>(), r.at(1).get<std::string>(), r.at(2).get<double>()});
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed knowledge base: ") + e.what());
    }
    s.build_fulltext();
    return s;
}

GraphStore build_graph(const std::vector<KnowledgeChunk>& chunks, const std::set<std::string>& dictionary) {
    GraphStore store;
    for (const auto& c : chunks) store.add_chunk(c);
    std::map<std::string, Entity> merged;
    for (const auto& c : chunks) {
        for (auto& e : extract_entities(c, dictionary)) {
            auto [it, fresh] = merged.emplace(e.entity_id, e);
            if (!fresh) it->second.source_chunks.insert(e.source_chunks.begin(), e.source_chunks.end());
        }
    }
    std::vector<Entity> entities;
    for (auto& [id, e] : merged) entities.push_back(e);
    for (const auto& e : entities) store.add_entity(e);

    for (const auto& r : extract_relationships(chunks, entities)) {
        if (r.rel_type == RelType::INHERITS && !store.has_node(r.dst)) {
            // Base class declared outside the corpus: materialise it from the subclass's chunks.
            const auto* derived = store.entity(r.src);
            Entity base{r.dst, r.dst.substr(r.dst.rfind(':') + 1), EntityKind::code_class,
                        derived ? derived->source_chunks : std::set<std::string>{}};
            store.add_entity(base);
        }
        store.add_edge(r);
    }
    store.build_fulltext();
    return store;
}

std::vector<std::pair<std::string, double>> fulltext_query(const GraphStore& store, const std::string& query,
                                                           std::size_t k) {
    return store.fulltext().query(query, k);
}

// ---------------------------------------------------------------- cypher

namespace {

bool plain_key(const std::string& k) {
    if (k.empty() || std::isdigit(static_cast<unsigned char>(k[0]))) return false;
    return std::all_of(k.begin(), k.end(), [](char c) { return text::is_word_char(c); });
}

void write_literal(std::ostringstream& os, const nlohmann::json& v) {
    switch (v.type()) {
        case nlohmann::json::value_t::null: os << "null"; break;
        case nlohmann::json::value_t::boolean: os << (v.get<bool>() ? "true" : "false"); break;
        case nlohmann::json::value_t::number_integer:
        case nlohmann::json::value_t::number_unsigned:
        case nlohmann::json::value_t::number_float: os << v.dump(); break;
        case nlohmann::json::value_t::string: {
            os << '\'';
            for (unsigned char c : v.get_ref<const std::string&>()) {
                switch (c) {
                    case '\\': os << "\\\\"; break;
                    case '\'': os << "\\'"; break;
                    case '\n': os << "\\n"; break;
                    case '\r': os << "\\r"; break;
                    case '\t': os << "\\t"; break;
                    default:
                        if (c < 0x20) {
                            static const char* hex = "0123456789abcdef";
                            os << "\\u00" << hex[c >> 4] << hex[c & 15];
                        } else {
                            os << static_cast<char>(c);
                        }
                }
            }
            os << '\'';
            break;
        }
        case nlohmann::json::value_t::array: {
            os << '[';
            bool first = true;
            for (const auto& x : v) {
                if (!first) os << ", ";
                first = false;
                write_literal(os, x);
            }
            os << ']';
            break;
        }
        case nlohmann::json::value_t::object: {
            os << '{';
            bool first = true;
            for (const auto& [k, x] : v.items()) {
                if (!first) os << ", ";
                first = false;
                os << (plain_key(k) ? k : "`" + k + "`") << ": ";
                write_literal(os, x);
            }
            os << '}';
            break;
        }
        default: throw Error("value has no Cypher literal form");
    }
}

class LiteralParser {
public:
    explicit LiteralParser(const std::string& s) : s_(s) {}

    nlohmann::json parse_all() {
        auto v = value();
        skip();
        if (p_ != s_.size()) fail("trailing characters");
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw Error("Cypher literal: " + what + " at offset " + std::to_string(p_));
    }
    void skip() {
        while (p_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[p_]))) ++p_;
    }
    bool eat(char c) {
        skip();
        if (p_ < s_.size() && s_[p_] == c) {
            ++p_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!eat(c)) fail(std::string("expected '") + c + "'");
    }

    nlohmann::json value() {
        skip();
        if (p_ >= s_.size()) fail("unexpected end");
        char c = s_[p_];
        if (c == '{') return map();
        if (c == '[') return list();
        if (c == '\'' || c == '"') return string();
        if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) return number();
        for (const char* kw : {"null", "true", "false"}) {
            if (s_.compare(p_, std::char_traits<char>::length(kw), kw) == 0) {
                p_ += std::char_traits<char>::length(kw);
                if (kw[0] == 'n') return nullptr;
                return kw[0] == 't';
            }
        }
        fail("unexpected character");
    }

    nlohmann::json map() {
        expect('{');
        nlohmann::json out = nlohmann::json::object();
        if (eat('}')) return out;
        do {
            skip();
            std::string key;
            if (p_ < s_.size() && s_[p_] == '`') {
                auto end = s_.find('`', p_ + 1);
                if (end == std::string::npos) fail("unterminated key");
                key = s_.substr(p_ + 1, end - p_ - 1);
                p_ = end + 1;
            } else {
                while (p_ < s_.size() && text::is_word_char(s_[p_])) key += s_[p_++];
            }
            if (key.empty()) fail("empty key");
            expect(':');
            out[key] = value();
        } while (eat(','));
        expect('}');
        return out;
    }

    nlohmann::json list() {
        expect('[');
        nlohmann::json out = nlohmann::json::array();
        if (eat(']')) return out;
        do {
            out.push_back(value());
        } while (eat(','));
        expect(']');
        return out;
    }

    nlohmann::json string() {
        char quote = s_[p_++];
        std::string out;
        while (true) {
            if (p_ >= s_.size()) fail("unterminated string");
            char c = s_[p_++];
            if (c == quote) break;
            if (c != '\\') {
                out += c;
                continue;
            }
            if (p_ >= s_.size()) fail("dangling escape");
            char e = s_[p_++];
            switch (e) {
                case 'n': out += '\n'; break;
                case 'r': out += '\r'; break;
                case 't': out += '\t'; break;
                case 'u': {
                    if (p_ + 4 > s_.size()) fail("short unicode escape");
                    unsigned cp = static_cast<unsigned>(std::stoul(s_.substr(p_, 4), nullptr, 16));
                    p_ += 4;
                    if (cp < 0x80) {
                        out += static_cast<char>(cp);
                    } else if (cp < 0x800) {
                        out += static_cast<char>(0xC0 | (cp >> 6));
                        out += static_cast<char>(0x80 | (cp & 0x3F));
                    } else {
                        out += static_cast<char>(0xE0 | (cp >> 12));
                        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
                        out += static_cast<char>(0x80 | (cp & 0x3F));
                    }
                    break;
                }
                default: out += e;
            }
        }
        return out;
    }

    nlohmann::json number() {
        std::size_t start = p_;
        if (s_[p_] == '-') ++p_;
        bool is_float = false;
        while (p_ < s_.size()) {
            char c = s_[p_];
            if (std::isdigit(static_cast<unsigned char>(c))) {
                ++p_;
            } else if (c == '.' || c == 'e' || c == 'E' || ((c == '+' || c == '-') && (s_[p_ - 1] == 'e' || s_[p_ - 1] == 'E'))) {
                is_float = true;
                ++p_;
            } else {
                break;
            }
        }
        auto tok = s_.substr(start, p_ - start);
        try {
            if (is_float) return std::stod(tok);
            return std::stoll(tok);
        } catch (const std::exception&) {
            fail("bad number " + tok);
        }
    }

    const std::string& s_;
    std::size_t p_ = 0;
};

struct EdgeShape {
    const char* src_label;
    const char* dst_label;
};

EdgeShape edge_shape(RelType t) {
    switch (t) {
        case RelType::MENTIONS: return {"Chunk", "Entity"};
        case RelType::CALLS:
        case RelType::INHERITS: return {"Entity", "Entity"};
        case RelType::BELONGS_TO: return {"Chunk", "Community"};
        default: return {"Chunk", "Chunk"};
    }
}

const char* kSchema[] = {
    "CREATE CONSTRAINT chunk_id_unique IF NOT EXISTS FOR (n:Chunk) REQUIRE n.id IS UNIQUE;",
    "CREATE CONSTRAINT entity_id_unique IF NOT EXISTS FOR (n:Entity) REQUIRE n.id IS UNIQUE;",
    "CREATE INDEX community_id_index IF NOT EXISTS FOR (n:Community) ON (n.id);",
    "CREATE INDEX chunk_kind_index IF NOT EXISTS FOR (n:Chunk) ON (n.kind);",
    "CREATE INDEX community_theme_index IF NOT EXISTS FOR (n:Community) ON (n.theme);",
    "CREATE FULLTEXT INDEX chunk_content_index IF NOT EXISTS FOR (n:Chunk) ON EACH [n.title, n.content];",
};

const std::string kParamPrefix = ":param rows => ";

std::string node_statement(const std::string& label) {
    return "UNWIND $rows AS row MERGE (n:" + label + " {id: row.id}) SET n += row;";
}

std::string edge_statement(RelType t) {
    auto shape = edge_shape(t);
    return std::string("UNWIND $rows AS row MATCH (a:") + shape.src_label + " {id: row.src}) MATCH (b:" +
           shape.dst_label + " {id: row.dst}) MERGE (a)-[r:" + to_string(t) + "]->(b) SET r.weight = row.weight;";
}

nlohmann::json endpoint_value(const GraphStore& store, const std::string& id) {
    if (const auto* c = store.community(id)) return c->community_id;
    return id;
}

void emit_batches(std::ostringstream& os, const std::vector<nlohmann::json>& rows, std::size_t batch_size,
                  const std::string& statement) {
    for (std::size_t i = 0; i < rows.size(); i += batch_size) {
        nlohmann::json batch = nlohmann::json::array();
        for (std::size_t j = i; j < std::min(rows.size(), i + batch_size); ++j) batch.push_back(rows[j]);
        os << kParamPrefix << to_cypher_literal(batch) << ";\n" << statement << "\n";
    }
}

}  // namespace

std::string to_cypher_literal(const nlohmann::json& value) {
    std::ostringstream os;
    write_literal(os, value);
    return os.str();
}

nlohmann::json parse_cypher_literal(const std::string& text) { return LiteralParser(text).parse_all(); }

std::string export_cypher(const GraphStore& store, std::size_t batch_size) {
    if (batch_size == 0) throw Error("batch size must be positive");
    std::ostringstream os;
    for (const char* s : kSchema) os << s << "\n";

    std::vector<const KnowledgeChunk*> chunks;
    for (const auto& c : store.chunks()) chunks.push_back(&c);
    std::sort(chunks.begin(), chunks.end(), [](auto* a, auto* b) { return a->chunk_id < b->chunk_id; });
    std::vector<nlohmann::json> rows;
    for (const auto* c : chunks) {
        nlohmann::json r = {{"id", c->chunk_id},
                            {"title", c->title},
                            {"content", c->content},
                            {"kind", c->kind == ChunkKind::doc_section ? "doc_section" : "code_unit"},
                            {"source_path", c->source_path},
                            {"char_length", c->char_length},
                            {"word_count", c->word_count},
                            {"summary", c->summary},
                            {"directory_category", c->directory_category}};
        if (c->parent_id) r["parent_id"] = *c->parent_id;
        rows.push_back(std::move(r));
    }
    emit_batches(os, rows, batch_size, node_statement("Chunk"));

    rows.clear();
    for (const auto* e : store.entities()) rows.push_back({{"id", e->entity_id}, {"name", e->name}, {"kind", to_string(e->kind)}});
    emit_batches(os, rows, batch_size, node_statement("Entity"));

    rows.clear();
    for (const auto* c : store.communities()) {
        rows.push_back({{"id", c->community_id}, {"theme", c->theme}, {"size", c->size}, {"resolution", c->resolution}});
    }
    emit_batches(os, rows, batch_size, node_statement("Community"));

    for (auto t : kAllRelTypes) {
        std::vector<const Relationship*> edges;
        for (const auto& r : store.edges(t)) edges.push_back(&r);
        std::sort(edges.begin(), edges.end(), [](auto* a, auto* b) {
            return std::tie(a->src, a->dst) < std::tie(b->src, b->dst);
        });
        rows.clear();
        for (const auto* r : edges) {
            rows.push_back({{"src", endpoint_value(store, r->src)}, {"dst", endpoint_value(store, r->dst)},
                            {"weight", r->weight}});
        }
        emit_batches(os, rows, batch_size, edge_statement(t));
    }
    return os.str();
}

ParsedCypher parse_cypher_export(const std::string& text) {
    static const std::regex kNodeStmt(R"(^UNWIND \$rows AS row MERGE \(n:(\w+) \{id: row\.id\}\) SET n \+= row;$)");
    static const std::regex kEdgeStmt(
        R"(^UNWIND \$rows AS row MATCH \(a:\w+ \{id: row\.src\}\) MATCH \(b:\w+ \{id: row\.dst\}\) MERGE \(a\)-\[r:(\w+)\]->\(b\) SET r\.weight = row\.weight;$)");
    ParsedCypher out;
    std::optional<nlohmann::json> pending;
    for (const auto& line : text::split_lines(text)) {
        if (line.empty()) continue;
        std::smatch m;
        if (text::starts_with(line, kParamPrefix)) {
            if (pending) throw Error("parameter block without statement");
            if (!text::ends_with(line, ";")) throw Error("unterminated parameter block");
            pending = parse_cypher_literal(line.substr(kParamPrefix.size(), line.size() - kParamPrefix.size() - 1));
        } else if (std::regex_match(line, m, kNodeStmt) || std::regex_match(line, m, kEdgeStmt)) {
            if (!pending) throw Error("UNWIND without parameter block");
            out.batches.push_back({m[1].str(), text::contains(line, "MATCH"), std::move(*pending)});
            pending.reset();
        } else if (text::starts_with(line, "CREATE ")) {
            out.schema_statements.push_back(line);
        } else {
            throw Error("unrecognised Cypher line: " + line.substr(0, 80));
        }
    }
    if (pending) throw Error("trailing parameter block");
    return out;
}

nlohmann::json graph_stats(const GraphStore& store) {
    std::vector<std::pair<std::string, std::size_t>> counts = {
        {"Chunk", store.chunks().size()}, {"Entity", store.entities().size()}, {"Community", store.communities().size()}};
    std::sort(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    nlohmann::json j;
    auto& nodes = j["node_counts"] = nlohmann::json::array();
    for (const auto& [label, n] : counts) {
        if (n > 0) nodes.push_back({{"NodeType", label}, {"Count", n}});
    }

    auto comms = store.communities();
    std::stable_sort(comms.begin(), comms.end(), [](auto* a, auto* b) { return a->size > b->size; });
    auto& top = j["top_communities"] = nlohmann::json::array();
    for (std::size_t i = 0; i < comms.size() && i < 10; ++i) {
        top.push_back({{"com.id", comms[i]->community_id}, {"com.theme", comms[i]->theme}, {"com.size", comms[i]->size}});
    }

    std::vector<std::pair<const Community*, std::size_t>> members;
    for (const auto* c : store.communities()) {
        members.push_back({c, store.in_edges(RelType::BELONGS_TO, community_node_id(c->community_id)).size()});
    }
    std::stable_sort(members.begin(), members.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    auto& dist = j["membership"] = nlohmann::json::array();
    for (std::size_t i = 0; i < members.size() && i < 10; ++i) {
        dist.push_back({{"com.theme", members[i].first->theme}, {"member_count", members[i].second}});
    }
    j["relationship_counts"] = nlohmann::json::object();
    for (auto t : kAllRelTypes) j["relationship_counts"][to_string(t)] = store.edges(t).size();
    return j;
}

}  // namespace modernize
