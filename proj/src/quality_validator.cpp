#include "modernize/quality_validator.hpp"

#include "modernize/errors.hpp"
#include "modernize/python_ast.hpp"
#include "modernize/text.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <regex>
#include <sstream>

#include <unistd.h>

namespace modernize {

nlohmann::json DimensionScores::to_json() const {
    return {{"execution", execution}, {"structure", structure}, {"api", api}, {"parameters", parameters},
            {"fidelity", fidelity}};
}

void ScoringWeights::check() const {
    const std::array<double, 5> w = {execution, structure, api, parameters, fidelity};
    double sum = 0.0;
    for (double v : w) {
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("scoring weight outside [0,1]");
        sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-9) throw ConfigError("scoring weights must sum to 1");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda outside [0,1]");
}

std::string to_string(Grade g) {
    switch (g) {
        case Grade::A: return "A";
        case Grade::B: return "B";
        case Grade::C: return "C";
        case Grade::D: return "D";
        case Grade::F: return "F";
    }
    return "F";
}

Grade grade_for(double final_score) {
    if (final_score >= 0.80) return Grade::A;
    if (final_score >= 0.65) return Grade::B;
    if (final_score >= 0.50) return Grade::C;
    if (final_score >= 0.35) return Grade::D;
    return Grade::F;
}

Combined combine(const DimensionScores& d, double judge, const ScoringWeights& w) {
    Combined c;
    c.traditional = w.execution * d.execution + w.structure * d.structure + w.api * d.api +
                    w.parameters * d.parameters + w.fidelity * d.fidelity;
    c.final = c.traditional * (1.0 - w.lambda) + judge * w.lambda;
    c.grade = grade_for(c.final);
    return c;
}

std::string to_string(ExecutionReport::Phase p) {
    switch (p) {
        case ExecutionReport::Phase::syntax_error: return "syntax_error";
        case ExecutionReport::Phase::import_error: return "import_error";
        case ExecutionReport::Phase::runtime_error: return "runtime_error";
        case ExecutionReport::Phase::ok: return "ok";
    }
    return "ok";
}

ExecutionReport ExecutionReport::from_json(const std::string& raw) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedJson(e.what());
    }
    if (!j.is_object()) throw MalformedJson("execution report is not an object");
    auto field = [&](const char* name) -> const nlohmann::json& {
        if (!j.contains(name)) throw SchemaViolation(name, "missing");
        return j.at(name);
    };
    ExecutionReport r;
    const auto& ran = field("ran");
    if (!ran.is_boolean()) throw SchemaViolation("ran", "type");
    r.ran = ran.get<bool>();
    const auto& code = field("exit_code");
    if (!code.is_number_integer()) throw SchemaViolation("exit_code", "type");
    r.exit_code = code.get<int>();
    const auto& phase = field("phase");
    if (!phase.is_string()) throw SchemaViolation("phase", "type");
    static const std::map<std::string, Phase> kPhases = {{"syntax_error", Phase::syntax_error},
                                                         {"import_error", Phase::import_error},
                                                         {"runtime_error", Phase::runtime_error},
                                                         {"ok", Phase::ok}};
    auto it = kPhases.find(phase.get<std::string>());
    if (it == kPhases.end()) throw SchemaViolation("phase", "enum");
    r.phase = it->second;
    const auto& tail = field("stderr_tail");
    if (!tail.is_string()) throw SchemaViolation("stderr_tail", "type");
    r.stderr_tail = tail.get<std::string>();
    const auto& dur = field("duration_s");
    if (!dur.is_number()) throw SchemaViolation("duration_s", "type");
    r.duration_s = dur.get<double>();
    const auto& to = field("timed_out");
    if (!to.is_boolean()) throw SchemaViolation("timed_out", "type");
    r.timed_out = to.get<bool>();
    if (!r.ran && r.phase != Phase::syntax_error && r.phase != Phase::import_error) {
        throw SchemaViolation("phase", "range");
    }
    return r;
}

std::optional<ExecutionReport> run_exec_runner(const std::string& runner, const std::string& script, int timeout_s,
                                               std::vector<std::string>* notes) {
    auto note = [&](const std::string& s) {
        if (notes) notes->push_back(s);
    };
    if (runner.empty()) {
        note("execution: no exec runner configured; scored by parse+import fallback");
        return std::nullopt;
    }
    if (::access(runner.c_str(), X_OK) != 0) {
        note("execution: exec runner not found at " + runner + "; scored by parse+import fallback");
        return std::nullopt;
    }
    std::string cmd = "'" + runner + "' '" + script + "' --timeout " + std::to_string(timeout_s) + " 2>/dev/null";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) {
        note("execution: could not start exec runner; scored by parse+import fallback");
        return std::nullopt;
    }
    std::string out;
    std::array<char, 4096> buf{};
    while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
    ::pclose(pipe);
    try {
        return ExecutionReport::from_json(text::trim(out));
    } catch (const Error& e) {
        note(std::string("execution: exec runner output unusable (") + e.what() + "); scored by parse+import fallback");
        return std::nullopt;
    }
}

namespace {

std::string callee_of(const py::Node& n) {
    if (n.kind != "Call" || n.children.empty()) return {};
    std::string d = py::dotted_name(n.children[0]);
    auto dot = d.rfind('.');
    return dot == std::string::npos ? d : d.substr(dot + 1);
}

const py::Node* keyword(const py::Node& call, const std::string& name) {
    for (std::size_t i = 1; i < call.children.size(); ++i) {
        if (call.children[i].kind == "Keyword" && call.children[i].value == name) return &call.children[i].children[0];
    }
    return nullptr;
}

std::vector<const py::Node*> positional(const py::Node& call) {
    std::vector<const py::Node*> out;
    for (std::size_t i = 1; i < call.children.size(); ++i) {
        const auto& k = call.children[i].kind;
        if (k != "Keyword" && k != "Starred" && k != "DoubleStarred") out.push_back(&call.children[i]);
    }
    return out;
}

std::optional<double> number_value(const std::string& literal) {
    std::string s;
    for (char c : literal) {
        if (c != '_') s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    if (s.empty() || s.back() == 'j' || text::starts_with(s, "0x") || text::starts_with(s, "0o") ||
        text::starts_with(s, "0b")) {
        return std::nullopt;
    }
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::optional<double> fortran_number(const std::string& value) {
    std::string s = text::to_lower(text::trim(value));
    auto kind = s.find('_');
    if (kind != std::string::npos) s = s.substr(0, kind);
    std::replace(s.begin(), s.end(), 'd', 'e');
    if (s.empty()) return std::nullopt;
    return number_value(s);
}

bool same_value(double a, double b) {
    return std::fabs(a - b) <= 1e-9 * std::max({1.0, std::fabs(a), std::fabs(b)});
}

std::optional<double> literal_of(const py::Node& n) {
    if (n.kind == "Num") return number_value(n.value);
    if (n.kind == "UnaryOp" && (n.value == "-" || n.value == "+") && n.children.size() == 1 &&
        n.children[0].kind == "Num") {
        auto v = number_value(n.children[0].value);
        if (v && n.value == "-") return -*v;
        return v;
    }
    return std::nullopt;
}

enum class Side { none, min, max, near_min, near_max };

Side index_side(const py::Node& n) {
    if (n.kind == "Num") {
        if (n.value == "0") return Side::min;
        if (n.value == "1") return Side::near_min;
        return Side::none;
    }
    if (n.kind == "UnaryOp" && n.value == "-" && n.children.size() == 1 && n.children[0].kind == "Num") {
        if (n.children[0].value == "1") return Side::max;
        if (n.children[0].value == "2") return Side::near_max;
        return Side::none;
    }
    if (n.kind == "Attribute") {
        if (n.value == "symbolic_min") return Side::min;
        if (n.value == "symbolic_max") return Side::max;
        return Side::none;
    }
    if (n.kind == "BinOp" && n.children.size() == 2) {
        const auto& l = n.children[0];
        const auto& r = n.children[1];
        auto ls = index_side(l);
        if (n.value == "-" && r.kind == "Num" && l.kind == "Name") {
            if (r.value == "1") return Side::max;
            if (r.value == "2") return Side::near_max;
        }
        if (n.value == "+" && ls == Side::min && r.kind == "Num" && r.value == "1") return Side::near_min;
        if (n.value == "-" && ls == Side::max && r.kind == "Num" && r.value == "1") return Side::near_max;
    }
    return Side::none;
}

/// Boundary position of a function access: u[t + 1, 0, y] or u.forward.subs({x: x.symbolic_min}).
Side access_side(const py::Node& n) {
    if (n.kind == "Subscript") {
        for (std::size_t i = 1; i < n.children.size(); ++i) {
            auto s = index_side(n.children[i]);
            if (s != Side::none) return s;
        }
        return Side::none;
    }
    if (n.kind == "Call" && !n.children.empty() && n.children[0].kind == "Attribute" &&
        n.children[0].value == "subs") {
        for (std::size_t i = 1; i < n.children.size(); ++i) {
            const auto& d = n.children[i];
            if (d.kind != "Dict") continue;
            for (std::size_t k = 1; k < d.children.size(); k += 2) {
                auto s = index_side(d.children[k]);
                if (s != Side::none) return s;
            }
        }
    }
    return Side::none;
}

bool is_extreme(Side s) { return s == Side::min || s == Side::max; }

bool opposite(Side a, Side b) {
    return (a == Side::min && b == Side::max) || (a == Side::max && b == Side::min);
}

bool neighbour(Side lhs, Side rhs) {
    return (lhs == Side::min && rhs == Side::near_min) || (lhs == Side::max && rhs == Side::near_max);
}

bool references_field(const py::Node& n, const std::set<std::string>& fields) {
    bool found = false;
    py::walk(n, [&](const py::Node& c) {
        if (c.kind == "Name" && fields.count(c.value)) found = true;
    });
    return found;
}

bool derivative_attr(const std::string& a, bool second) {
    static const std::regex kFirst(R"(^d[xyz][lrc]?$)");
    static const std::regex kSecond(R"(^d[xyz]2$|^d[xyz]d[xyz]$)");
    return std::regex_match(a, second ? kSecond : kFirst);
}

}  // namespace

nlohmann::json CodeFeatures::to_json() const {
    nlohmann::json bcs = nlohmann::json::array();
    for (auto b : boundary_conditions) bcs.push_back(to_string(b));
    return {{"dimensions", dimensions}, {"pde_class", to_string(pde_class)}, {"scheme", to_string(scheme)},
            {"boundary_conditions", bcs}};
}

CodeFeatures detect_code_features(const std::string& code) {
    py::Node module = py::parse(code);
    CodeFeatures f;

    std::set<std::string> attrs;
    std::set<std::string> callees;
    std::set<std::string> names;
    std::set<std::string> fields;
    bool time_function = false;
    bool loop_applies = false;
    bool implicit_term = false;
    bool upwind = false;
    int time_order = 1;

    py::walk(module, [&](const py::Node& n) {
        if (n.kind == "Attribute") {
            attrs.insert(n.value);
            if ((n.value == "laplace" || derivative_attr(n.value, true)) && !n.children.empty() &&
                n.children[0].kind == "Attribute" && n.children[0].value == "forward") {
                implicit_term = true;
            }
            static const std::regex kOneSided(R"(^d[xyz][lr]$)");
            if (std::regex_match(n.value, kOneSided)) upwind = true;
        } else if (n.kind == "Name") {
            names.insert(n.value);
        } else if (n.kind == "Call") {
            auto c = callee_of(n);
            callees.insert(c);
            if (c == "first_derivative" && keyword(n, "side")) upwind = true;
        } else if (n.kind == "Assign" && n.children.size() == 2) {
            const auto& target = n.children[0];
            const auto& value = n.children[1];
            auto c = callee_of(value);
            if (target.kind == "Name" && (c == "TimeFunction" || c == "Function")) {
                fields.insert(target.value);
                if (c == "TimeFunction") {
                    time_function = true;
                    if (const auto* to = keyword(value, "time_order"); to && to->kind == "Num") {
                        time_order = std::stoi(to->value);
                    }
                }
            }
            if (f.dimensions == 0 && target.kind == "Tuple" && value.kind == "Attribute" &&
                value.value == "dimensions") {
                f.dimensions = static_cast<int>(target.children.size());
            }
        } else if ((n.kind == "While" || n.kind == "For") && !n.children.empty()) {
            py::walk(n, [&](const py::Node& c) {
                if (c.kind == "Call" && !c.children.empty() && c.children[0].kind == "Attribute" &&
                    c.children[0].value == "apply") {
                    loop_applies = true;
                }
            });
        }
    });

    py::walk(module, [&](const py::Node& n) {
        if (callee_of(n) != "Grid") return;
        const py::Node* shape = keyword(n, "shape");
        auto pos = positional(n);
        if (!shape && !pos.empty()) shape = pos[0];
        if (shape && (shape->kind == "Tuple" || shape->kind == "List")) {
            f.dimensions = static_cast<int>(shape->children.size());
        }
    });

    bool marched = attrs.count("dt") || attrs.count("dt2") || attrs.count("forward") || attrs.count("backward");
    bool second = attrs.count("laplace") || callees.count("second_derivative") ||
                  std::any_of(attrs.begin(), attrs.end(), [](const auto& a) { return derivative_attr(a, true); });
    bool first = callees.count("first_derivative") ||
                 std::any_of(attrs.begin(), attrs.end(), [](const auto& a) { return derivative_attr(a, false); });
    bool iterative = loop_applies && second && !attrs.count("dt") && !attrs.count("dt2");

    if (attrs.count("dt2")) {
        f.pde_class = PdeClass::hyperbolic;
    } else if (iterative || (second && !time_function && !marched)) {
        f.pde_class = PdeClass::elliptic;
    } else if (marched && second) {
        f.pde_class = PdeClass::parabolic;
    } else if (marched && first) {
        f.pde_class = PdeClass::hyperbolic;
    }

    switch (f.pde_class) {
        case PdeClass::elliptic:
            if (loop_applies) f.scheme = Scheme::jacobi;
            break;
        case PdeClass::parabolic:
            if (implicit_term) {
                f.scheme = Scheme::crank_nicolson;
            } else {
                f.scheme = time_order == 1 ? Scheme::ftcs : Scheme::central;
            }
            break;
        case PdeClass::hyperbolic:
            f.scheme = upwind ? Scheme::upwind : Scheme::central;
            break;
        case PdeClass::unknown:
            break;
    }

    static const std::set<std::string> kDamping = {"damp", "sponge", "absorb", "pml", "eta"};
    for (const auto& n : names) {
        if (kDamping.count(text::to_lower(n))) f.boundary_conditions.insert(BoundaryCondition::absorbing);
    }
    py::walk(module, [&](const py::Node& n) {
        auto c = callee_of(n);
        if (c != "Eq" && c != "Inc") return;
        auto args = positional(n);
        if (args.size() < 2) return;
        Side lhs = access_side(*args[0]);
        if (!is_extreme(lhs)) return;
        Side rhs = access_side(*args[1]);
        if (opposite(lhs, rhs)) {
            f.boundary_conditions.insert(BoundaryCondition::periodic);
        } else if (neighbour(lhs, rhs)) {
            f.boundary_conditions.insert(BoundaryCondition::neumann);
        } else if (!references_field(*args[1], fields)) {
            f.boundary_conditions.insert(BoundaryCondition::dirichlet);
        }
    });
    return f;
}

double fidelity_score(const FortranAnalysis& a, const CodeFeatures& c) {
    double sum = 0.0;
    int considered = 0;
    if (a.pde_class != PdeClass::unknown) {
        sum += a.pde_class == c.pde_class ? 1.0 : 0.0;
        ++considered;
    }
    if (a.dimensions > 0) {
        sum += a.dimensions == c.dimensions ? 1.0 : 0.0;
        ++considered;
    }
    if (a.scheme != Scheme::unknown) {
        bool explicit_pair = (a.scheme == Scheme::ftcs && c.scheme == Scheme::central) ||
                             (a.scheme == Scheme::central && c.scheme == Scheme::ftcs);
        sum += a.scheme == c.scheme ? 1.0 : explicit_pair ? 0.5 : 0.0;
        ++considered;
    }
    std::set<BoundaryCondition> known;
    for (auto b : a.boundary_conditions) {
        if (b != BoundaryCondition::unknown) known.insert(b);
    }
    if (!known.empty()) {
        std::size_t inter = 0;
        std::set<BoundaryCondition> uni = known;
        for (auto b : c.boundary_conditions) {
            if (known.count(b)) ++inter;
            uni.insert(b);
        }
        sum += static_cast<double>(inter) / static_cast<double>(uni.size());
        ++considered;
    }
    return considered == 0 ? 0.5 : sum / considered;
}

double parameter_score(const FortranAnalysis& analysis, const std::string& code) {
    std::vector<std::pair<std::string, double>> params;
    for (const auto& [name, value] : analysis.parameters) {
        if (auto v = fortran_number(value)) params.emplace_back(text::to_lower(name), *v);
    }
    if (params.empty()) return 1.0;
    py::Node module;
    try {
        module = py::parse(code);
    } catch (const SyntaxErrorInCode&) {
        return 0.0;
    }

    std::vector<double> literals;
    std::map<const py::Node*, std::size_t> literal_index;
    py::walk(module, [&](const py::Node& n) {
        if (n.kind == "UnaryOp" && literal_of(n)) {
            literal_index[&n] = literals.size();
            literal_index[&n.children[0]] = literals.size();
            literals.push_back(*literal_of(n));
        } else if (n.kind == "Num" && !literal_index.count(&n)) {
            if (auto v = literal_of(n)) {
                literal_index[&n] = literals.size();
                literals.push_back(*v);
            }
        }
    });

    std::multimap<std::string, std::size_t> bindings;
    py::walk(module, [&](const py::Node& n) {
        if (n.kind != "Assign") return;
        const auto& value = n.children.back();
        for (std::size_t i = 0; i + 1 < n.children.size(); ++i) {
            const auto& t = n.children[i];
            if (t.kind == "Name" && literal_index.count(&value)) {
                bindings.emplace(text::to_lower(t.value), literal_index[&value]);
            } else if (t.kind == "Tuple" && value.kind == "Tuple" && t.children.size() == value.children.size()) {
                for (std::size_t k = 0; k < t.children.size(); ++k) {
                    if (t.children[k].kind == "Name" && literal_index.count(&value.children[k])) {
                        bindings.emplace(text::to_lower(t.children[k].value), literal_index[&value.children[k]]);
                    }
                }
            }
        }
    });

    std::vector<bool> used(literals.size(), false);
    std::vector<bool> matched(params.size(), false);
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto [lo, hi] = bindings.equal_range(params[p].first);
        for (auto it = lo; it != hi; ++it) {
            if (!used[it->second] && same_value(literals[it->second], params[p].second)) {
                used[it->second] = true;
                matched[p] = true;
                break;
            }
        }
    }
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (matched[p]) continue;
        for (std::size_t l = 0; l < literals.size(); ++l) {
            if (!used[l] && same_value(literals[l], params[p].second)) {
                used[l] = true;
                matched[p] = true;
                break;
            }
        }
    }
    auto hits = std::count(matched.begin(), matched.end(), true);
    return static_cast<double>(hits) / static_cast<double>(params.size());
}

double structure_score(const std::string& code) {
    py::Node module;
    try {
        module = py::parse(code);
    } catch (const SyntaxErrorInCode&) {
        return 0.0;
    }
    std::set<std::string> callees;
    py::walk(module, [&](const py::Node& n) {
        if (n.kind == "Call") callees.insert(callee_of(n));
    });
    int present = 0;
    present += callees.count("Grid") ? 1 : 0;
    present += callees.count("Function") || callees.count("TimeFunction") ? 1 : 0;
    present += callees.count("Eq") ? 1 : 0;
    present += callees.count("Operator") ? 1 : 0;
    return present / 4.0;
}

bool imports_resolve(const std::string& code, const RuleSet& rules, std::string* unresolved) {
    static const std::set<std::string> kModules = {
        "devito", "numpy", "scipy", "sympy", "matplotlib", "math", "cmath", "os", "sys", "time", "argparse",
        "json", "pathlib", "itertools", "functools", "collections", "typing", "dataclasses", "logging", "random",
        "warnings", "copy", "abc", "enum", "timeit", "contextlib", "re", "string"};
    py::Node module;
    try {
        module = py::parse(code);
    } catch (const SyntaxErrorInCode& e) {
        if (unresolved) *unresolved = e.what();
        return false;
    }
    std::string bad;
    py::walk(module, [&](const py::Node& n) {
        if (!bad.empty()) return;
        auto root = [](const std::string& m) { return m.substr(0, m.find('.')); };
        if (n.kind == "Import") {
            for (const auto& a : n.children) {
                auto mod = a.value.substr(0, a.value.find(" as "));
                if (!kModules.count(root(mod))) bad = mod;
            }
        } else if (n.kind == "ImportFrom") {
            if (!kModules.count(root(n.value))) {
                bad = n.value;
                return;
            }
            if (n.value != "devito") return;
            for (const auto& a : n.children) {
                auto name = a.value.substr(0, a.value.find(" as "));
                if (name != "*" && !rules.allowed_names.count(name)) bad = "devito." + name;
            }
        }
    });
    if (unresolved) *unresolved = bad;
    return bad.empty();
}

DimensionScores score_static(const std::string& code, const FortranAnalysis& analysis, const GuardrailReport& guardrails,
                             const std::optional<ExecutionReport>& exec, const RuleSet& rules,
                             std::vector<std::string>* notes) {
    auto note = [&](const std::string& s) {
        if (notes) notes->push_back(s);
    };
    DimensionScores d;
    if (exec) {
        d.execution = exec->ran && exec->phase == ExecutionReport::Phase::ok && exec->exit_code == 0 &&
                              !exec->timed_out
                          ? 1.0
                          : 0.0;
    } else {
        std::string unresolved;
        d.execution = imports_resolve(code, rules, &unresolved) ? 1.0 : 0.0;
        note("execution: fallback mode (parse + import resolution against Devito " + rules.version + ")" +
             (unresolved.empty() ? std::string() : "; unresolved: " + unresolved));
    }
    d.structure = structure_score(code);
    d.api = 1.0 - std::min(1.0, static_cast<double>(guardrails.denylist_errors()) / 4.0);
    d.parameters = parameter_score(analysis, code);
    try {
        auto features = detect_code_features(code);
        d.fidelity = fidelity_score(analysis, features);
    } catch (const SyntaxErrorInCode&) {
        d.fidelity = 0.0;
        note("fidelity: generated code does not parse");
    }
    return d;
}

std::optional<JudgeResult> parse_judge(const std::string& raw) {
    std::string body = text::trim(raw);
    if (text::starts_with(body, "```")) {
        auto nl = body.find('\n');
        auto end = body.rfind("```");
        if (nl != std::string::npos && end > nl) body = text::trim(body.substr(nl + 1, end - nl - 1));
    }
    try {
        auto j = nlohmann::json::parse(body);
        if (j.is_object() && j.contains("score") && j["score"].is_number()) {
            double s = j["score"].get<double>();
            if (s < 0.0 || s > 1.0 || !std::isfinite(s)) return std::nullopt;
            JudgeResult r{s, {}};
            if (j.contains("justification") && j["justification"].is_string()) {
                r.justification = j["justification"].get<std::string>();
            }
            return r;
        }
    } catch (const nlohmann::json::parse_error&) {
    }
    static const std::regex kScore(R"((?:^|\n)\s*\**score\**\s*[:=]\s*([0-9]*\.?[0-9]+)\s*(?:\n|$))",
                                   std::regex::icase);
    std::smatch m;
    if (!std::regex_search(body, m, kScore)) return std::nullopt;
    double s = std::stod(m[1].str());
    if (s < 0.0 || s > 1.0) return std::nullopt;
    JudgeResult r{s, {}};
    static const std::regex kWhy(R"((?:^|\n)\s*\**justification\**\s*[:=]\s*([^\n]+))", std::regex::icase);
    if (std::regex_search(body, m, kWhy)) r.justification = text::trim(m[1].str());
    return r;
}

std::string judge_system_prompt() {
    return "You are an independent judge of Fortran to Devito conversions. Score the converted code against the "
           "rubric and answer with one JSON object {\"score\": <0.0-1.0>, \"justification\": \"<one line>\"}.";
}

std::string judge_user_prompt(const std::string& fortran, const std::string& devito_code) {
    std::ostringstream os;
    os << "## Rubric\n"
       << "- execution success (30%): the code runs without errors\n"
       << "- code structure (25%): Grid, functions, equations and Operator are organised as in idiomatic Devito\n"
       << "- mathematical logic (25%): the discretised equation matches the Fortran program\n"
       << "- API usage (20%): only documented Devito API is used, correctly\n\n"
       << "## Fortran source\n```fortran\n" << fortran << (text::ends_with(fortran, "\n") ? "" : "\n") << "```\n\n"
       << "## Devito conversion\n```python\n" << devito_code << (text::ends_with(devito_code, "\n") ? "" : "\n")
       << "```\n";
    return os.str();
}

JudgeResult judge_llm(const std::string& fortran, const std::string& devito_code, Gateway& gateway,
                      const std::string& model) {
    LlmRequest req;
    req.system = judge_system_prompt();
    req.user = judge_user_prompt(fortran, devito_code);
    req.temperature = 0.0;
    req.max_tokens = 512;
    req.model = model;
    std::string raw;
    for (int attempt = 0; attempt < 2; ++attempt) {
        raw = gateway.complete(req);
        if (auto r = parse_judge(raw)) return *r;
    }
    throw JudgeUnparseable(raw);
}

nlohmann::json QualityReport::to_json() const {
    return {{"dims", dims.to_json()},
            {"traditional", traditional},
            {"llm_judge", llm_judge},
            {"final", final},
            {"grade", to_string(grade)},
            {"confidence", confidence},
            {"duration_s", duration_s},
            {"notes", notes},
            {"judge_justification", judge_justification},
            {"weights_note", kWeightsNote}};
}

QualityReport make_report(const DimensionScores& dims, double judge, const ScoringWeights& weights,
                          std::optional<double> conversion_confidence) {
    QualityReport r;
    r.dims = dims;
    r.llm_judge = judge;
    auto c = combine(dims, judge, weights);
    r.traditional = c.traditional;
    r.final = c.final;
    r.grade = c.grade;
    r.confidence = conversion_confidence.value_or(kDefaultConfidence);
    return r;
}

std::string quality_csv(const std::vector<std::pair<std::string, QualityReport>>& rows) {
    std::ostringstream os;
    os << "Case,Final,Grade,Confidence,Duration (s),Execution,Structure,API,Parameters,Conv. Fidelity,LLM Judge\n";
    char buf[512];
    for (const auto& [name, r] : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.3f,%s,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f\n", name.c_str(), r.final,
                      to_string(r.grade).c_str(), r.confidence, r.duration_s, r.dims.execution, r.dims.structure,
                      r.dims.api, r.dims.parameters, r.dims.fidelity, r.llm_judge);
        os << buf;
    }
    return os.str();
}

}  // namespace modernize
