#include "modernize/fortran_analyzer.hpp"

#include "modernize/errors.hpp"
#include "modernize/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <regex>

namespace modernize {

using namespace text;

std::string to_string(PdeClass v) {
    switch (v) {
        case PdeClass::parabolic: return "parabolic";
        case PdeClass::hyperbolic: return "hyperbolic";
        case PdeClass::elliptic: return "elliptic";
        case PdeClass::unknown: return "unknown";
    }
    return "unknown";
}

std::string to_string(Scheme v) {
    switch (v) {
        case Scheme::central: return "central";
        case Scheme::upwind: return "upwind";
        case Scheme::crank_nicolson: return "crank_nicolson";
        case Scheme::jacobi: return "jacobi";
        case Scheme::ftcs: return "ftcs";
        case Scheme::unknown: return "unknown";
    }
    return "unknown";
}

std::string to_string(TimeStepping v) {
    switch (v) {
        case TimeStepping::explicit_: return "explicit";
        case TimeStepping::implicit: return "implicit";
        case TimeStepping::none: return "none";
    }
    return "none";
}

std::string to_string(BoundaryCondition v) {
    switch (v) {
        case BoundaryCondition::dirichlet: return "dirichlet";
        case BoundaryCondition::neumann: return "neumann";
        case BoundaryCondition::periodic: return "periodic";
        case BoundaryCondition::absorbing: return "absorbing";
        case BoundaryCondition::unknown: return "unknown";
    }
    return "unknown";
}

std::string to_string(QueryTier v) {
    switch (v) {
        case QueryTier::primary: return "primary";
        case QueryTier::secondary: return "secondary";
        case QueryTier::concept_: return "concept";
    }
    return "primary";
}

std::string to_string(Strategy v) {
    switch (v) {
        case Strategy::comprehensive: return "comprehensive";
        case Strategy::fast: return "fast";
        case Strategy::deep: return "deep";
        case Strategy::hybrid: return "hybrid";
    }
    return "fast";
}

Strategy strategy_from_string(const std::string& s) {
    for (auto v : {Strategy::comprehensive, Strategy::fast, Strategy::deep, Strategy::hybrid}) {
        if (to_string(v) == s) return v;
    }
    throw UnknownStrategy(s);
}

Strategy strategy_for(QueryTier tier) {
    switch (tier) {
        case QueryTier::primary: return Strategy::comprehensive;
        case QueryTier::secondary: return Strategy::fast;
        case QueryTier::concept_: return Strategy::deep;
    }
    return Strategy::fast;
}

nlohmann::json FortranAnalysis::to_json() const {
    nlohmann::json bcs = nlohmann::json::array();
    for (auto bc : boundary_conditions) bcs.push_back(to_string(bc));
    nlohmann::json arrays = nlohmann::json::array();
    for (const auto& [name, rank] : detected_arrays) arrays.push_back({{"name", name}, {"rank", rank}});
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [name, value] : parameters) params[name] = value;
    return {{"dimensions", dimensions},
            {"pde_class", to_string(pde_class)},
            {"scheme", to_string(scheme)},
            {"time_stepping", to_string(time_stepping)},
            {"boundary_conditions", bcs},
            {"stencil_radius", stencil_radius},
            {"confidence", confidence},
            {"complexity", complexity},
            {"detected_arrays", arrays},
            {"detected_loops", detected_loops},
            {"max_loop_depth", max_loop_depth},
            {"parameters", params},
            {"warnings", warnings}};
}

namespace {

struct Stmt {
    std::string text;
    int line;
};

std::string strip_bang_comment(const std::string& line) {
    char quote = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quote) {
            if (c == quote) quote = 0;
        } else if (c == '\'' || c == '"') {
            quote = c;
        } else if (c == '!') {
            return line.substr(0, i);
        }
    }
    return line;
}

bool looks_fixed_form(const std::vector<std::string>& lines) {
    bool comment_col1 = false;
    for (const auto& l : lines) {
        std::string t = trim(l);
        if (!t.empty() && t.back() == '&') return false;
        if (!l.empty() && (l[0] == 'c' || l[0] == 'C' || l[0] == '*') &&
            (l.size() == 1 || l[1] == ' ' || l[1] == '-' || l[1] == '=' || l[1] == '*')) {
            comment_col1 = true;
        }
        if (l.size() > 6 && l.substr(0, 5) == "     " && l[5] != ' ' && l[5] != '0') comment_col1 = true;
    }
    return comment_col1;
}

std::vector<std::string> split_statements(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    char quote = 0;
    for (char c : s) {
        if (quote) {
            if (c == quote) quote = 0;
        } else if (c == '\'' || c == '"') {
            quote = c;
        } else if (c == ';') {
            out.push_back(trim(cur));
            cur.clear();
            continue;
        }
        cur += c;
    }
    out.push_back(trim(cur));
    return out;
}

std::vector<Stmt> normalize(const std::string& source) {
    auto raw = split_lines(source);
    bool fixed = looks_fixed_form(raw);
    std::vector<Stmt> logical;
    std::string pending;
    int pending_line = 0;
    bool continues = false;
    auto flush = [&] {
        if (!trim(pending).empty()) {
            for (auto& s : split_statements(to_lower(pending))) {
                if (!s.empty()) logical.push_back({s, pending_line});
            }
        }
        pending.clear();
    };
    for (std::size_t n = 0; n < raw.size(); ++n) {
        std::string line = raw[n];
        if (fixed) {
            if (!line.empty() && (line[0] == 'c' || line[0] == 'C' || line[0] == '*' || line[0] == '!')) continue;
            line = strip_bang_comment(line);
            if (trim(line).empty()) continue;
            bool cont = line.size() > 5 && trim(line.substr(0, 5)).empty() && line[5] != ' ' && line[5] != '0';
            if (cont) {
                pending += " " + (line.size() > 6 ? line.substr(6) : "");
                continue;
            }
            flush();
            pending = line.size() > 72 ? line.substr(0, 72) : line;
            pending_line = static_cast<int>(n) + 1;
            continue;
        }
        line = trim(strip_bang_comment(line));
        if (line.empty()) continue;
        if (continues) {
            if (line.front() == '&') line.erase(0, 1);
            pending += " " + line;
        } else {
            flush();
            pending = line;
            pending_line = static_cast<int>(n) + 1;
        }
        continues = !pending.empty() && trim(pending).back() == '&';
        if (continues) {
            std::string t = trim(pending);
            pending = t.substr(0, t.size() - 1);
        }
    }
    flush();
    return logical;
}

std::string strip_spaces(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (!std::isspace(static_cast<unsigned char>(c))) out += c;
    }
    return out;
}

/// Contents between the paren at `open` and its partner; `end` receives the partner index.
std::optional<std::string> paren_body(const std::string& s, std::size_t open, std::size_t* end = nullptr) {
    int depth = 0;
    for (std::size_t i = open; i < s.size(); ++i) {
        if (s[i] == '(') ++depth;
        if (s[i] == ')' && --depth == 0) {
            if (end) *end = i;
            return s.substr(open + 1, i - open - 1);
        }
    }
    return std::nullopt;
}

std::vector<std::string> split_top(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    char quote = 0;
    for (char c : s) {
        if (quote) {
            if (c == quote) quote = 0;
        } else if (c == '\'' || c == '"') {
            quote = c;
        } else if (c == '(' || c == '[') {
            ++depth;
        } else if (c == ')' || c == ']') {
            --depth;
        } else if (c == sep && depth == 0) {
            out.push_back(trim(cur));
            cur.clear();
            continue;
        }
        cur += c;
    }
    if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
    return out;
}

struct Bounds {
    std::string lower = "1";
    std::string upper;
};

struct ArrayInfo {
    std::string name;
    std::vector<Bounds> dims;
};

struct Index {
    enum Kind { loop, extreme, slice, other } kind = other;
    std::string var;
    int offset = 0;
    char side = 0;  // 'L' or 'U' for extremes
    int pos = 0;
    bool wraps = false;
};

struct Ref {
    std::string array;
    std::vector<Index> idx;
};

struct Loop {
    int id;
    std::string var;
    bool counted;
    std::string label;
};

struct StencilStmt {
    std::string lhs;
    int rank;
    std::vector<Ref> refs;
    std::vector<int> loops;  // enclosing loop ids, outermost first
    std::string rhs;
};

// Literal or bound-relative indices this close to an end count as boundary points.
constexpr int kNearBound = 2;

const std::regex kTypeDecl(R"(^(real|integer|double\s+precision|logical|complex|character)\b\s*(\*\s*\d+|\([^)]*\))?\s*(.*)$)");
const std::regex kDo(R"(^do\b\s*(\d+)?\s*,?\s*(.*)$)");
const std::regex kDoCounted(R"(^([a-z_]\w*)\s*=\s*(.+)$)");
const std::regex kLabel(R"(^(\d+)\s+(.*)$)");
const std::regex kEndDo(R"(^end\s*do\b.*$)");
const std::regex kAssign(R"(^([a-z_]\w*)\s*(\(.*\))?\s*=(?!=)\s*(.+)$)");
const std::regex kNumber(R"(^[+-]?(\d+\.?\d*|\.\d+)([eEdD][+-]?\d+)?(_\w+)?$)");
const std::regex kSimpleIndex(R"(^([a-z_]\w*)([+-]\d+)?$)");
const std::regex kIntLiteral(R"(^[+-]?\d+$)");
const std::regex kName(R"(([a-z_]\w*)\s*\()");
const std::regex kConvergence(R"((<|>|\.lt\.|\.gt\.|\.le\.|\.ge\.))");
const std::regex kWrapIf(R"(^if\s*\((.*)\)\s*([a-z_]\w*)\s*=\s*([a-z_]\w*|\d+)\s*$)");

const std::set<std::string> kFortranKeywords = {
    "program", "subroutine", "function", "module", "end",      "do",     "enddo",
    "implicit", "integer",   "real",     "dimension", "parameter", "call", "allocate"};

class Scanner {
public:
    explicit Scanner(const std::vector<Stmt>& stmts) : stmts_(stmts) {}

    void run() {
        for (const auto& s : stmts_) statement(s.text);
    }

    std::vector<ArrayInfo> arrays;
    std::map<std::string, std::size_t> array_index;
    std::vector<std::pair<std::string, std::string>> parameters;
    std::vector<StencilStmt> stencils;
    std::vector<std::pair<std::vector<Ref>, Ref>> boundary;  // (rhs refs, lhs)
    std::vector<std::string> boundary_rhs;
    std::set<int> convergence_loops;
    std::map<int, std::string> loop_vars;  // empty for uncounted loops
    std::vector<std::pair<std::string, std::string>> copies;  // whole-array or pointwise a = b
    std::size_t loop_count = 0;
    int max_depth = 0;
    bool periodic_wrap = false;
    bool absorbing = false;

private:
    void statement(std::string text) {
        std::smatch m;
        std::string label;
        if (std::regex_match(text, m, kLabel)) {
            label = m[1];
            text = m[2];
        }
        if (std::regex_match(text, m, kTypeDecl)) {
            declaration(m[3]);
        } else if (starts_with(text, "dimension ") || starts_with(text, "dimension(")) {
            for (const auto& e : split_top(text.substr(9))) entity(e, {}, false);
        } else if (starts_with(text, "parameter") && text.find('(') != std::string::npos) {
            auto body = paren_body(text, text.find('('));
            if (body) {
                for (const auto& e : split_top(*body)) {
                    auto eq = e.find('=');
                    if (eq != std::string::npos) add_parameter(trim(e.substr(0, eq)), trim(e.substr(eq + 1)));
                }
            }
        } else if (std::regex_match(text, m, kDo)) {
            open_loop(m[1], trim(m[2].str()));
        } else if (std::regex_match(text, kEndDo)) {
            if (!loops_.empty()) close_loop();
        } else {
            executable(text);
        }
        if (!label.empty()) {
            while (!loops_.empty() && loops_.back().label == label) close_loop();
        }
    }

    void declaration(const std::string& rest) {
        std::string attrs, entities;
        auto dc = rest.find("::");
        if (dc != std::string::npos) {
            attrs = rest.substr(0, dc);
            entities = rest.substr(dc + 2);
        } else {
            entities = rest;
        }
        std::vector<Bounds> attr_dims;
        bool is_param = false;
        for (const auto& a : split_top(attrs)) {
            std::string t = trim(a);
            if (starts_with(t, "dimension")) {
                auto p = t.find('(');
                if (p != std::string::npos) {
                    if (auto body = paren_body(t, p)) attr_dims = parse_dims(*body);
                }
            } else if (t == "parameter") {
                is_param = true;
            }
        }
        for (const auto& e : split_top(entities)) entity(e, attr_dims, is_param);
    }

    void entity(const std::string& e, const std::vector<Bounds>& attr_dims, bool is_param) {
        std::smatch m;
        static const std::regex kEntity(R"(^([a-z_]\w*)\s*(\(.*?\))?\s*(=\s*(.+))?$)");
        std::string t = trim(e);
        if (!std::regex_match(t, m, kEntity)) return;
        std::string name = m[1];
        std::vector<Bounds> dims = attr_dims;
        if (m[2].matched) {
            std::string d = m[2];
            dims = parse_dims(d.substr(1, d.size() - 2));
        }
        if (!dims.empty()) {
            for (const auto& b : dims) {
                std::string base = strip_upper_base(b.upper);
                if (!base.empty()) bound_names_.insert(base);
            }
            if (!array_index.count(name)) {
                array_index[name] = arrays.size();
                arrays.push_back({name, dims});
            } else {
                arrays[array_index[name]].dims = dims;
            }
            if (contains(name, "damp") || contains(name, "sponge") || contains(name, "absorb") || contains(name, "pml")) {
                absorbing = true;
            }
        } else if (m[3].matched && (is_param || std::regex_match(std::string(m[4]), kNumber))) {
            add_parameter(name, trim(m[4].str()));
        }
    }

    static std::vector<Bounds> parse_dims(const std::string& body) {
        std::vector<Bounds> out;
        for (const auto& d : split_top(body)) {
            Bounds b;
            auto colon = d.find(':');
            if (colon == std::string::npos) {
                b.upper = strip_spaces(d);
            } else {
                b.lower = strip_spaces(d.substr(0, colon));
                b.upper = strip_spaces(d.substr(colon + 1));
                if (b.lower.empty()) b.lower = "1";
            }
            out.push_back(b);
        }
        return out;
    }

    void add_parameter(const std::string& name, const std::string& value) {
        for (const auto& p : parameters) {
            if (p.first == name) return;
        }
        parameters.emplace_back(name, value);
        bound_names_.insert(name);
    }

    void open_loop(const std::string& label, const std::string& rest) {
        Loop l{next_loop_++, "", false, label};
        std::smatch m;
        bool convergence = false;
        if (starts_with(rest, "while")) {
            convergence = std::regex_search(rest, kConvergence);
        } else if (std::regex_match(rest, m, kDoCounted)) {
            l.var = m[1];
            l.counted = true;
        }
        loops_.push_back(l);
        loop_vars[l.id] = l.var;
        if (convergence) convergence_loops.insert(l.id);
        ++loop_count;
        max_depth = std::max(max_depth, static_cast<int>(loops_.size()));
    }

    void close_loop() {
        std::string var = loops_.back().var;
        loops_.pop_back();
        for (auto it = aliases_.begin(); it != aliases_.end();) {
            it = it->second.first == var ? aliases_.erase(it) : std::next(it);
        }
    }

    bool is_loop_var(const std::string& name) const {
        for (const auto& l : loops_) {
            if (l.var == name) return true;
        }
        return false;
    }

    void executable(const std::string& text) {
        std::smatch m;
        if (starts_with(text, "if") && contains(text, "exit") && !loops_.empty() &&
            std::regex_search(text, kConvergence)) {
            convergence_loops.insert(loops_.back().id);
            return;
        }
        if (std::regex_match(text, m, kWrapIf)) {
            std::string cond = m[1], var = m[2], value = m[3];
            if (contains_whole_token(cond, var) && (value == "1" || value == "0" || bound_names_.count(value))) {
                periodic_wrap = true;
            }
            return;
        }
        std::string stmt = text;
        if (starts_with(stmt, "if")) {
            auto p = stmt.find('(');
            std::size_t end = 0;
            if (p == std::string::npos || !paren_body(stmt, p, &end)) return;
            stmt = trim(stmt.substr(end + 1));
            if (starts_with(stmt, "then")) return;
        }
        if (!std::regex_match(stmt, m, kAssign)) return;
        std::string name = m[1];
        std::string rhs = m[3];
        if (!m[2].matched) {
            scalar_assignment(name, trim(rhs));
            return;
        }
        if (!array_index.count(name)) return;
        std::string args = m[2];
        Ref lhs{name, indices(name, args.substr(1, args.size() - 2))};
        auto refs = references(rhs);
        std::smatch c;
        std::string compact = strip_spaces(rhs);
        static const std::regex kCopy(R"(^([a-z_]\w*)\((.*)\)$)");
        if (std::regex_match(compact, c, kCopy) && array_index.count(c[1]) &&
            strip_spaces(args) == "(" + std::string(c[2]) + ")" && c[1] != name) {
            copies.emplace_back(name, c[1]);
            return;
        }
        classify_assignment(lhs, refs, rhs);
    }

    void scalar_assignment(const std::string& name, const std::string& rhs) {
        if (array_index.count(name)) {
            if (array_index.count(rhs)) copies.emplace_back(name, rhs);
            return;
        }
        std::smatch m;
        std::string compact = strip_spaces(rhs);
        if (std::regex_match(compact, m, kSimpleIndex) && is_loop_var(m[1])) {
            int off = m[2].matched ? std::stoi(m[2]) : 0;
            aliases_[name] = {m[1], off};
            return;
        }
        if (loops_.empty() && std::regex_match(compact, kNumber)) add_parameter(name, rhs);
    }

    std::vector<Ref> references(const std::string& rhs) const {
        std::vector<Ref> out;
        for (auto it = std::sregex_iterator(rhs.begin(), rhs.end(), kName); it != std::sregex_iterator(); ++it) {
            std::size_t start = static_cast<std::size_t>(it->position(0));
            if (start > 0 && (is_word_char(rhs[start - 1]) || rhs[start - 1] == '%')) continue;
            std::string name = (*it)[1];
            if (!array_index.count(name)) continue;
            std::size_t open = start + static_cast<std::size_t>(it->length(0)) - 1;
            auto body = paren_body(rhs, open);
            if (!body) continue;
            out.push_back({name, indices(name, *body)});
        }
        return out;
    }

    std::vector<Index> indices(const std::string& array, const std::string& args) const {
        std::vector<Index> out;
        const auto& info = arrays[array_index.at(array)];
        auto parts = split_top(args);
        for (std::size_t d = 0; d < parts.size(); ++d) {
            std::string t = strip_spaces(parts[d]);
            Index ix;
            std::smatch m;
            const Bounds* b = d < info.dims.size() ? &info.dims[d] : nullptr;
            if (t.find(':') != std::string::npos) {
                ix.kind = Index::slice;
            } else if (contains(t, "mod(") || contains(t, "modulo(")) {
                ix.wraps = true;
            } else if (std::regex_match(t, m, kSimpleIndex)) {
                std::string base = m[1];
                int off = m[2].matched ? std::stoi(m[2]) : 0;
                if (is_loop_var(base)) {
                    ix.kind = Index::loop;
                    ix.var = base;
                    ix.offset = off;
                } else if (aliases_.count(base)) {
                    ix.kind = Index::loop;
                    ix.var = aliases_.at(base).first;
                    ix.offset = aliases_.at(base).second + off;
                } else if (bound_names_.count(base) || (b && strip_upper_base(b->upper) == base)) {
                    ix.pos = off - upper_offset(b, base);
                    if (std::abs(ix.pos) <= kNearBound) {
                        ix.kind = Index::extreme;
                        ix.side = 'U';
                    }
                }
            } else if (std::regex_match(t, kIntLiteral)) {
                int v = std::stoi(t);
                int lb = 1;
                if (b && std::regex_match(b->lower, kIntLiteral)) lb = std::stoi(b->lower);
                if (b && std::regex_match(b->upper, kIntLiteral) && std::abs(v - std::stoi(b->upper)) <= kNearBound) {
                    ix.kind = Index::extreme;
                    ix.side = 'U';
                    ix.pos = v - std::stoi(b->upper);
                } else if (std::abs(v - lb) <= kNearBound) {
                    ix.kind = Index::extreme;
                    ix.side = 'L';
                    ix.pos = v - lb;
                }
            }
            out.push_back(ix);
        }
        return out;
    }

    static std::string strip_upper_base(const std::string& upper) {
        std::smatch m;
        if (std::regex_match(upper, m, kSimpleIndex)) return m[1];
        return "";
    }

    static int upper_offset(const Bounds* b, const std::string& base) {
        std::smatch m;
        if (b && std::regex_match(b->upper, m, kSimpleIndex) && m[1] == base && m[2].matched) return std::stoi(m[2]);
        return 0;
    }

    void classify_assignment(const Ref& lhs, const std::vector<Ref>& refs, const std::string& rhs) {
        bool lhs_has_loop = false, lhs_interior = true, lhs_extreme = false;
        for (const auto& ix : lhs.idx) {
            if (ix.kind == Index::loop) {
                lhs_has_loop = true;
                if (ix.offset != 0) lhs_interior = false;
            } else if (ix.kind == Index::extreme) {
                lhs_extreme = true;
            } else if (ix.kind != Index::slice) {
                lhs_interior = false;
            }
        }
        for (const auto& r : refs) {
            for (const auto& ix : r.idx) {
                if (ix.wraps) periodic_wrap = true;
            }
        }
        if (lhs_extreme) {
            boundary.emplace_back(refs, lhs);
            boundary_rhs.push_back(rhs);
            return;
        }
        if (!lhs_has_loop || !lhs_interior) return;
        bool offset = false;
        for (const auto& r : refs) {
            for (const auto& ix : r.idx) {
                if (ix.kind == Index::loop && ix.offset != 0) offset = true;
            }
        }
        if (!offset) return;
        StencilStmt s{lhs.array, static_cast<int>(lhs.idx.size()), refs, {}, rhs};
        for (const auto& l : loops_) s.loops.push_back(l.id);
        stencils.push_back(std::move(s));
    }

    const std::vector<Stmt>& stmts_;
    std::vector<Loop> loops_;
    int next_loop_ = 0;
    std::set<std::string> bound_names_;
    std::map<std::string, std::pair<std::string, int>> aliases_;
};

std::set<BoundaryCondition> classify_boundaries(const Scanner& sc) {
    std::set<BoundaryCondition> out;
    for (std::size_t n = 0; n < sc.boundary.size(); ++n) {
        const auto& [refs, lhs] = sc.boundary[n];
        bool periodic = false, mirrored = false, comparable = false;
        for (std::size_t d = 0; d < lhs.idx.size(); ++d) {
            const Index& l = lhs.idx[d];
            if (l.kind != Index::extreme) continue;
            for (const auto& r : refs) {
                if (d >= r.idx.size()) continue;
                const Index& ri = r.idx[d];
                if (ri.kind != Index::extreme) continue;
                comparable = true;
                if (ri.side != l.side) {
                    periodic = true;
                } else if (ri.pos != l.pos) {
                    mirrored = true;
                }
            }
        }
        if (periodic) {
            out.insert(BoundaryCondition::periodic);
        } else if (mirrored) {
            out.insert(BoundaryCondition::neumann);
        } else if (!comparable) {
            out.insert(BoundaryCondition::dirichlet);
        }
    }
    if (sc.periodic_wrap) out.insert(BoundaryCondition::periodic);
    if (sc.absorbing) out.insert(BoundaryCondition::absorbing);
    if (out.empty()) out.insert(BoundaryCondition::unknown);
    return out;
}

std::set<std::string> copy_component(const std::vector<std::pair<std::string, std::string>>& copies,
                                     const std::string& start) {
    std::set<std::string> seen{start};
    bool grew = true;
    while (grew) {
        grew = false;
        for (const auto& [a, b] : copies) {
            if (seen.count(a) != seen.count(b)) {
                seen.insert(a);
                seen.insert(b);
                grew = true;
            }
        }
    }
    return seen;
}

bool has_half_factor(const std::string& rhs) {
    std::string t = strip_spaces(rhs);
    return contains(t, "0.5") || contains(t, ".5*") || contains(t, "/2.") || contains(t, "/2*") ||
           ends_with(t, "/2") || contains(t, "/2)") || contains(t, "*.5");
}

}  // namespace

FortranAnalysis analyze(const std::string& source) {
    if (trim(source).empty()) throw EmptySource();
    FortranAnalysis a;
    auto stmts = normalize(source);

    bool fortran = false;
    for (const auto& s : stmts) {
        for (const auto& tok : tokenize(s.text)) {
            if (kFortranKeywords.count(tok)) fortran = true;
        }
        if (fortran) break;
    }
    if (!fortran) {
        a.warnings.push_back("no Fortran keywords found");
        return a;
    }

    Scanner sc(stmts);
    sc.run();

    for (const auto& arr : sc.arrays) a.detected_arrays.emplace_back(arr.name, static_cast<int>(arr.dims.size()));
    a.detected_loops = sc.loop_count;
    a.max_loop_depth = sc.max_depth;
    a.parameters = sc.parameters;
    a.boundary_conditions = classify_boundaries(sc);

    bool crank = false, convergence = false, time_loop = false, update_form = false;
    bool central = false, one_sided = false, second_diff = false, three_level = false;
    for (const auto& s : sc.stencils) {
        a.dimensions = std::max(a.dimensions, s.rank);
        std::map<std::pair<std::string, std::size_t>, std::set<int>> offsets;
        std::set<std::string> zero_refs;
        bool self_offset = false, other_offset = false;
        std::set<std::string> index_vars;
        for (const auto& r : s.refs) {
            bool zero = true;
            for (std::size_t d = 0; d < r.idx.size(); ++d) {
                const auto& ix = r.idx[d];
                if (ix.kind != Index::loop) {
                    if (ix.kind != Index::slice) zero = false;
                    continue;
                }
                index_vars.insert(ix.var);
                offsets[{r.array, d}].insert(ix.offset);
                a.stencil_radius = std::max(a.stencil_radius, std::abs(ix.offset));
                if (ix.offset != 0) {
                    zero = false;
                    (r.array == s.lhs ? self_offset : other_offset) = true;
                }
            }
            if (zero && static_cast<int>(r.idx.size()) == s.rank) zero_refs.insert(r.array);
        }
        for (const auto& [key, offs] : offsets) {
            bool plus = std::any_of(offs.begin(), offs.end(), [](int o) { return o > 0; });
            bool minus = std::any_of(offs.begin(), offs.end(), [](int o) { return o < 0; });
            if (plus && minus) {
                central = true;
                if (offs.count(0)) second_diff = true;
            } else if (plus || minus) {
                one_sided = true;
            }
        }
        std::set<std::string> others = zero_refs;
        others.erase(s.lhs);
        if (!zero_refs.empty()) update_form = true;
        if (sc.copies.empty()) {
            if (others.size() >= 2) three_level = true;
        } else {
            auto levels = copy_component(sc.copies, s.lhs);
            std::size_t n = std::count_if(others.begin(), others.end(), [&](const std::string& x) { return levels.count(x) > 0; });
            if (n >= 2) three_level = true;
        }
        if (self_offset && other_offset && has_half_factor(s.rhs)) crank = true;
        bool in_convergence = std::any_of(s.loops.begin(), s.loops.end(),
                                          [&](int id) { return sc.convergence_loops.count(id) > 0; });
        if (in_convergence) convergence = true;
        if (!in_convergence) {
            for (int id : s.loops) {
                const std::string& var = sc.loop_vars.at(id);
                if (!var.empty() && !index_vars.count(var)) time_loop = true;
            }
        }
    }

    if (!sc.stencils.empty()) {
        if (crank) {
            a.scheme = Scheme::crank_nicolson;
            a.time_stepping = TimeStepping::implicit;
            a.pde_class = second_diff ? PdeClass::parabolic : PdeClass::hyperbolic;
        } else if (convergence && !time_loop) {
            a.scheme = Scheme::jacobi;
            a.time_stepping = TimeStepping::none;
            a.pde_class = PdeClass::elliptic;
        } else {
            bool explicit_ = time_loop || update_form;
            a.time_stepping = explicit_ ? TimeStepping::explicit_ : TimeStepping::none;
            if (three_level) {
                a.pde_class = PdeClass::hyperbolic;
                a.scheme = Scheme::central;
            } else if (second_diff) {
                a.pde_class = PdeClass::parabolic;
                a.scheme = explicit_ ? Scheme::ftcs : Scheme::central;
            } else if (one_sided && !central) {
                a.pde_class = PdeClass::hyperbolic;
                a.scheme = Scheme::upwind;
            } else if (central) {
                a.pde_class = PdeClass::hyperbolic;
                a.scheme = Scheme::central;
            }
        }
    } else {
        a.warnings.push_back("no stencil update found");
    }

    int matched = 0;
    matched += a.detected_arrays.empty() ? 0 : 1;
    matched += a.dimensions > 0 ? 1 : 0;
    matched += a.pde_class != PdeClass::unknown ? 1 : 0;
    matched += a.scheme != Scheme::unknown ? 1 : 0;
    matched += (a.time_stepping != TimeStepping::none || a.pde_class == PdeClass::elliptic) ? 1 : 0;
    matched += a.boundary_conditions.count(BoundaryCondition::unknown) ? 0 : 1;
    a.confidence = static_cast<double>(matched) / kExpectedSignatures;

    std::size_t lines = 0;
    for (const auto& l : split_lines(source)) {
        if (!trim(l).empty()) ++lines;
    }
    double c = std::min(1.0, a.max_loop_depth / 3.0) + std::min(1.0, a.detected_arrays.size() / 10.0) +
               std::min(1.0, lines / 500.0);
    a.complexity = std::clamp(c / 3.0, 0.0, 1.0);
    return a;
}

std::string pde_name(const FortranAnalysis& a) {
    switch (a.pde_class) {
        case PdeClass::parabolic: return "heat";
        case PdeClass::hyperbolic: return a.scheme == Scheme::upwind ? "advection" : "wave";
        case PdeClass::elliptic: return "Laplace";
        case PdeClass::unknown: return "";
    }
    return "";
}

namespace {

std::string scheme_title(Scheme s) {
    switch (s) {
        case Scheme::central: return "central difference";
        case Scheme::upwind: return "upwind";
        case Scheme::crank_nicolson: return "Crank-Nicolson";
        case Scheme::jacobi: return "Jacobi iteration";
        case Scheme::ftcs: return "FTCS";
        case Scheme::unknown: return "";
    }
    return "";
}

std::string stability_concept(const FortranAnalysis& a) {
    switch (a.scheme) {
        case Scheme::ftcs: return "FTCS stability condition diffusion number";
        case Scheme::upwind: return "CFL condition upwind stability";
        case Scheme::central:
            return a.pde_class == PdeClass::parabolic ? "diffusion stability time step restriction"
                                                      : "CFL condition wave equation stability";
        case Scheme::crank_nicolson: return "Crank-Nicolson unconditional stability";
        case Scheme::jacobi: return "Jacobi iteration convergence criterion";
        case Scheme::unknown: return "";
    }
    return "";
}

}  // namespace

std::vector<QuerySpec> generate_queries(const FortranAnalysis& a) {
    std::set<std::string> keywords;
    if (a.dimensions > 0) keywords.insert(std::to_string(a.dimensions) + "d");
    if (a.pde_class != PdeClass::unknown) keywords.insert(to_string(a.pde_class));
    if (a.scheme != Scheme::unknown) keywords.insert(to_string(a.scheme));
    if (a.time_stepping != TimeStepping::none) keywords.insert(to_string(a.time_stepping));
    for (auto bc : a.boundary_conditions) {
        if (bc != BoundaryCondition::unknown) keywords.insert(to_string(bc));
    }
    std::string name = pde_name(a);
    if (!name.empty()) keywords.insert(to_lower(name));

    std::vector<QuerySpec> out;
    auto add = [&](QueryTier tier, std::string text) {
        out.push_back({tier, strategy_for(tier), std::move(text), keywords});
    };

    if (name.empty()) {
        add(QueryTier::primary, "finite difference Devito implementation");
    } else {
        std::string dims = a.dimensions > 0 ? std::to_string(a.dimensions) + "D " : "";
        add(QueryTier::primary, dims + name + " equation finite difference Devito implementation");
        if (a.scheme != Scheme::unknown) add(QueryTier::primary, scheme_title(a.scheme) + " scheme " + name + " equation Devito");
    }

    bool known_bc = !a.boundary_conditions.count(BoundaryCondition::unknown);
    bool any_known = !name.empty() || known_bc || a.dimensions > 0;
    if (!any_known) {
        add(QueryTier::secondary, "grid initialization patterns");
        add(QueryTier::concept_, "mathematical equivalence verification");
        return out;
    }
    if (known_bc) add(QueryTier::secondary, "boundary condition implementation");
    add(QueryTier::secondary, "grid initialization patterns");
    switch (a.time_stepping) {
        case TimeStepping::explicit_: add(QueryTier::secondary, "explicit time stepping TimeFunction forward update"); break;
        case TimeStepping::implicit: add(QueryTier::secondary, "implicit time stepping solve linear system"); break;
        case TimeStepping::none:
            if (!known_bc || a.pde_class == PdeClass::elliptic) add(QueryTier::secondary, "steady state iterative solver");
            break;
    }
    if (std::count_if(out.begin(), out.end(), [](const QuerySpec& q) { return q.tier == QueryTier::secondary; }) < 2) {
        add(QueryTier::secondary, "steady state iterative solver");
    }

    add(QueryTier::concept_, "mathematical equivalence verification");
    std::string stability = stability_concept(a);
    if (!stability.empty()) add(QueryTier::concept_, stability);
    return out;
}

}  // namespace modernize
