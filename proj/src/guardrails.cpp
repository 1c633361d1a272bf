#include "modernize/guardrails.hpp"

#include "modernize/errors.hpp"
#include "modernize/python_ast.hpp"
#include "modernize/text.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <random>

namespace modernize {

namespace fs = std::filesystem;

std::string to_string(Severity s) { return s == Severity::error ? "error" : "warning"; }

nlohmann::json Violation::to_json() const {
    nlohmann::json j = {{"rule_id", rule_id}, {"line", line}, {"severity", to_string(severity)}, {"message", message}};
    j["suggested_fix"] = suggested_fix ? nlohmann::json(*suggested_fix) : nlohmann::json(nullptr);
    return j;
}

namespace {

std::regex compile(const std::string& pattern) {
    try {
        return std::regex(pattern, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
        throw ConfigError("rule pattern does not compile: " + pattern + " (" + e.what() + ")");
    }
}

const std::set<std::string>& devito_names() {
    static const std::set<std::string> kNames = {
        "Grid", "Function", "TimeFunction", "SparseFunction", "SparseTimeFunction", "PrecomputedSparseFunction",
        "PrecomputedSparseTimeFunction", "VectorFunction", "VectorTimeFunction", "TensorFunction",
        "TensorTimeFunction", "Eq", "Inc", "Operator", "solve", "Constant", "first_derivative",
        "second_derivative", "cross_derivative", "generic_derivative", "Derivative", "Dimension", "SpaceDimension",
        "TimeDimension", "SteppingDimension", "ConditionalDimension", "SubDimension", "DefaultDimension",
        "CustomDimension", "SubDomain", "Buffer", "Coefficient", "Substitutions", "configuration",
        "switchconfig", "norm", "sumall", "mmin", "mmax", "inner", "centered", "left", "right", "div", "grad",
        "curl", "laplace", "diag", "sin", "cos", "exp", "sqrt", "Abs", "Max", "Min", "sign", "Le", "Lt", "Ge",
        "Gt", "Ne", "info", "warning", "error", "set_log_level", "NODE", "CELL", "mpi", "Ricker", "Receiver",
        "TimeAxis", "RickerSource", "GaborSource", "DummySource"};
    return kNames;
}

const std::set<std::string>& function_attributes() {
    static const std::set<std::string> kAttrs = {
        "data", "data_with_halo", "data_ro_domain", "data_domain", "dimensions", "space_dimensions", "indices",
        "grid", "shape", "shape_with_halo", "dtype", "name", "space_order", "time_order", "forward", "backward",
        "laplace", "biharmonic", "subs", "xreplace", "evaluate", "time_dim", "staggered", "coefficients", "halo",
        "padding", "diff", "func", "args", "origin", "is_TimeFunction", "save", "avg", "interpolate", "inject",
        "coordinates", "coordinates_data", "npoint", "nt", "time_values", "dt_value"};
    return kAttrs;
}

bool derivative_shorthand(const std::string& attr) {
    static const std::regex kDeriv(R"(^d[xyzt]+[0-9]*[lrc]?$)");
    return std::regex_match(attr, kDeriv);
}

const std::set<std::string>& builtin_names() {
    static const std::set<std::string> kBuiltins = {
        "print", "range", "len", "abs", "min", "max", "sum", "int", "float", "str", "bool", "list", "dict", "set",
        "tuple", "enumerate", "zip", "map", "filter", "sorted", "reversed", "isinstance", "issubclass", "open",
        "round", "pow", "divmod", "any", "all", "type", "object", "super", "iter", "next", "repr", "hasattr",
        "getattr", "setattr", "delattr", "format", "id", "hash", "slice", "staticmethod", "classmethod",
        "property", "complex", "bytes", "bytearray", "frozenset", "callable", "vars", "dir", "globals", "locals",
        "chr", "ord", "hex", "bin", "oct", "memoryview", "input", "exit", "quit", "Ellipsis", "NotImplemented",
        "__name__", "__file__", "__doc__", "Exception", "BaseException", "ValueError", "RuntimeError", "TypeError",
        "KeyError", "IndexError", "AttributeError", "NameError", "ImportError", "ModuleNotFoundError", "OSError",
        "IOError", "FileNotFoundError", "ZeroDivisionError", "ArithmeticError", "FloatingPointError",
        "OverflowError", "AssertionError", "NotImplementedError", "StopIteration", "SystemExit",
        "KeyboardInterrupt", "Warning", "UserWarning", "RuntimeWarning", "DeprecationWarning"};
    return kBuiltins;
}

const std::set<std::string>& function_constructors() {
    static const std::set<std::string> kCtors = {
        "Function", "TimeFunction", "SparseFunction", "SparseTimeFunction", "PrecomputedSparseFunction",
        "PrecomputedSparseTimeFunction", "VectorFunction", "VectorTimeFunction", "TensorFunction",
        "TensorTimeFunction"};
    return kCtors;
}

/// Line with a trailing `#` comment removed; quotes on the same line are respected.
std::string strip_comment(const std::string& line) {
    char quote = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quote) {
            if (c == '\\') {
                ++i;
            } else if (c == quote) {
                quote = 0;
            }
        } else if (c == '\'' || c == '"') {
            quote = c;
        } else if (c == '#') {
            return line.substr(0, i);
        }
    }
    return line;
}

std::vector<std::string> lines_of(const std::string& code) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : code) {
        if (c == '\n') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::string callee_name(const py::Node& call) {
    if (call.kind != "Call" || call.children.empty()) return {};
    return py::dotted_name(call.children[0]);
}

std::vector<const py::Node*> positional_args(const py::Node& call) {
    std::vector<const py::Node*> out;
    for (std::size_t i = 1; i < call.children.size(); ++i) {
        const auto& a = call.children[i];
        if (a.kind != "Keyword" && a.kind != "DoubleStarred" && a.kind != "Starred") out.push_back(&a);
    }
    return out;
}

const py::Node* keyword_arg(const py::Node& call, const std::string& name) {
    for (std::size_t i = 1; i < call.children.size(); ++i) {
        if (call.children[i].kind == "Keyword" && call.children[i].value == name) return &call.children[i].children[0];
    }
    return nullptr;
}

void target_names(const py::Node& t, std::vector<std::string>& out) {
    if (t.kind == "Name") {
        out.push_back(t.value);
    } else if (t.kind == "Tuple" || t.kind == "List" || t.kind == "Starred") {
        for (const auto& c : t.children) target_names(c, out);
    }
}

std::string alias_binding(const std::string& alias) {
    auto as = alias.find(" as ");
    if (as != std::string::npos) return alias.substr(as + 4);
    auto dot = alias.find('.');
    return dot == std::string::npos ? alias : alias.substr(0, dot);
}

std::string alias_source(const std::string& alias) {
    auto as = alias.find(" as ");
    return as == std::string::npos ? alias : alias.substr(0, as);
}

/// Facts gathered from one module, shared by the lint and preflight passes.
struct ModuleFacts {
    std::set<std::string> bound;
    std::map<std::string, const py::Node*> last_value;  // name -> last assigned expression
    std::map<std::string, std::string> dsl_imports;     // local binding -> devito name
    std::vector<std::pair<std::string, int>> dsl_import_lines;
    std::set<std::string> module_aliases;               // `import devito as dv`
    int first_dsl_import_line = 0;
    bool dsl_star = false;
    bool foreign_star = false;
    std::set<std::string> functions;  // names bound to Devito function constructors
    std::map<std::string, std::pair<std::string, bool>> function_grid;  // name -> (grid, time)
    std::map<std::string, int> grid_rank;
    std::vector<std::pair<std::string, int>> loads;  // (name, line)
    bool applies = false;

    bool dsl_imported() const { return first_dsl_import_line > 0; }

    /// Devito name a callee refers to, or empty.
    std::string dsl_callee(const std::string& dotted) const {
        if (dotted.empty()) return {};
        auto dot = dotted.find('.');
        if (dot != std::string::npos) {
            if (module_aliases.count(dotted.substr(0, dot))) return dotted.substr(dot + 1);
            return {};
        }
        if (auto it = dsl_imports.find(dotted); it != dsl_imports.end()) return it->second;
        if (dsl_star && !bound.count(dotted) && devito_names().count(dotted)) return dotted;
        return {};
    }
};

void collect_loads(const py::Node& n, bool store, ModuleFacts& f) {
    if (n.kind == "Name") {
        if (!store) f.loads.emplace_back(n.value, n.line);
        return;
    }
    if (store && (n.kind == "Tuple" || n.kind == "List" || n.kind == "Starred")) {
        for (const auto& c : n.children) collect_loads(c, true, f);
        return;
    }
    if (n.kind == "Assign") {
        for (std::size_t i = 0; i + 1 < n.children.size(); ++i) collect_loads(n.children[i], true, f);
        collect_loads(n.children.back(), false, f);
        return;
    }
    if (n.kind == "AnnAssign") {
        collect_loads(n.children[0], true, f);
        for (std::size_t i = 1; i < n.children.size(); ++i) collect_loads(n.children[i], false, f);
        return;
    }
    if (n.kind == "For" || n.kind == "Comprehension" || n.kind == "NamedExpr") {
        collect_loads(n.children[0], true, f);
        for (std::size_t i = 1; i < n.children.size(); ++i) collect_loads(n.children[i], false, f);
        return;
    }
    if (n.kind == "WithItem") {
        collect_loads(n.children[0], false, f);
        if (n.children.size() > 1) collect_loads(n.children[1], true, f);
        return;
    }
    for (const auto& c : n.children) collect_loads(c, false, f);
}

ModuleFacts gather(const py::Node& module) {
    ModuleFacts f;
    py::walk(module, [&](const py::Node& n) {
        std::vector<std::string> names;
        if (n.kind == "Assign") {
            for (std::size_t i = 0; i + 1 < n.children.size(); ++i) {
                std::vector<std::string> t;
                target_names(n.children[i], t);
                if (n.children[i].kind == "Name") f.last_value[n.children[i].value] = &n.children.back();
                names.insert(names.end(), t.begin(), t.end());
            }
        } else if (n.kind == "AugAssign" || n.kind == "AnnAssign" || n.kind == "For" || n.kind == "Comprehension" ||
                   n.kind == "NamedExpr") {
            target_names(n.children[0], names);
        } else if (n.kind == "WithItem" && n.children.size() > 1) {
            target_names(n.children[1], names);
        } else if (n.kind == "Handler" || n.kind == "FunctionDef" || n.kind == "ClassDef") {
            if (!n.value.empty()) names.push_back(n.value);
        } else if (n.kind == "Param") {
            std::string p = n.value;
            p.erase(0, p.find_first_not_of('*'));
            if (!p.empty()) names.push_back(p);
        } else if (n.kind == "Global" || n.kind == "Nonlocal") {
            for (const auto& part : text::tokenize(n.value)) names.push_back(part);
        } else if (n.kind == "Import") {
            for (const auto& a : n.children) {
                names.push_back(alias_binding(a.value));
                auto src = alias_source(a.value);
                if (src == "devito" || text::starts_with(src, "devito.")) {
                    f.module_aliases.insert(alias_binding(a.value));
                    f.dsl_import_lines.emplace_back(alias_binding(a.value), n.line);
                    if (!f.first_dsl_import_line) f.first_dsl_import_line = n.line;
                }
            }
        } else if (n.kind == "ImportFrom") {
            bool dsl = n.value == "devito" || text::starts_with(n.value, "devito.");
            if (dsl && !f.first_dsl_import_line) f.first_dsl_import_line = n.line;
            for (const auto& a : n.children) {
                if (a.value == "*") {
                    (dsl ? f.dsl_star : f.foreign_star) = true;
                    continue;
                }
                names.push_back(alias_binding(a.value));
                if (dsl) {
                    f.dsl_imports[alias_binding(a.value)] = alias_source(a.value);
                    f.dsl_import_lines.emplace_back(alias_binding(a.value), a.line);
                }
            }
        }
        f.bound.insert(names.begin(), names.end());
    });
    for (const auto& c : module.children) collect_loads(c, false, f);

    py::walk(module, [&](const py::Node& n) {
        if (n.kind == "Call" && !n.children.empty() && n.children[0].kind == "Attribute" &&
            n.children[0].value == "apply") {
            f.applies = true;
        }
        if (n.kind != "Assign" || n.children.size() != 2 || n.children[0].kind != "Name") return;
        const auto& value = n.children[1];
        const auto& name = n.children[0].value;
        auto ctor = f.dsl_callee(callee_name(value));
        if (ctor == "Grid") {
            if (const auto* shape = keyword_arg(value, "shape")) {
                if (shape->kind == "Tuple" || shape->kind == "List") {
                    f.grid_rank[name] = static_cast<int>(shape->children.size());
                }
            } else if (auto pos = positional_args(value); !pos.empty() && pos[0]->kind == "Tuple") {
                f.grid_rank[name] = static_cast<int>(pos[0]->children.size());
            }
        } else if (function_constructors().count(ctor)) {
            f.functions.insert(name);
            if (const auto* g = keyword_arg(value, "grid"); g && g->kind == "Name") {
                f.function_grid[name] = {g->value, ctor == "TimeFunction" || ctor == "SparseTimeFunction"};
            }
        }
    });
    return f;
}

void sort_violations(std::vector<Violation>& v) {
    std::stable_sort(v.begin(), v.end(), [](const Violation& a, const Violation& b) { return a.line < b.line; });
}

}  // namespace

void RuleSet::add_deny(std::string id, std::string pattern, std::string message, std::optional<std::string> fix) {
    if (text::trim(message).empty()) throw ConfigError("deny rule without a message: " + id);
    auto re = compile(pattern);
    denylist.push_back({std::move(id), std::move(pattern), std::move(message), std::move(fix), std::move(re)});
}

void RuleSet::add_substitution(std::string pattern, std::string replacement, std::string requires_import) {
    auto re = compile(pattern);
    substitutions.push_back({std::move(pattern), std::move(replacement), std::move(requires_import), std::move(re)});
}

RuleSet RuleSet::defaults() {
    RuleSet r;
    r.add_deny("deny/chained-derivative", R"(\b([A-Za-z_]\w*)\.d([xyz])\.backward\b)",
               "$1.d$2.backward is not a Devito API (fabricated chained derivative attribute)",
               "first_derivative($1, dim=$2, side='left')");
    r.add_deny("deny/chained-derivative", R"(\b([A-Za-z_]\w*)\.d([xyz])\.forward\b)",
               "$1.d$2.forward is not a Devito API (fabricated chained derivative attribute)",
               "first_derivative($1, dim=$2, side='right')");
    r.add_deny("deny/operator-bc", R"(\bOperator\s*\(.*\bbc\s*=)", "bc= is not a valid Operator argument",
               "append boundary Eq objects to the equation list passed to Operator");
    r.add_deny("deny/subdomain-string", R"(\bSubDomain\s*\(\s*['"])",
               "SubDomain does not accept a string condition",
               "subclass SubDomain and describe the region in define()");
    r.add_deny("deny/one-based-range", R"(\brange\s*\(\s*1\s*,\s*[A-Za-z_]\w*\s*\+\s*1\s*\))",
               "1-based index range carried over from Fortran; Python arrays start at 0",
               "iterate over range(0, n) or express the update as a Devito Eq");
    r.add_deny("deny/one-based-slice", R"(\.data\s*\[[^\]]*\]\s*\[\s*1\s*:\s*\])",
               "1-based offset slice into Function data shifts every value by one point",
               "assign the full interior with u.data[0, :]");
    r.allowed_names = devito_names();
    r.allowed_attributes = function_attributes();
    r.add_substitution(R"(\b([A-Za-z_]\w*)\.d([xyz])\.backward\b)", "first_derivative($1, dim=$2, side='left')",
                       "first_derivative");
    r.add_substitution(R"(\b([A-Za-z_]\w*)\.d([xyz])\.forward\b)", "first_derivative($1, dim=$2, side='right')",
                       "first_derivative");
    return r;
}

RuleSet RuleSet::from_file(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("rules file " + path + " is not valid JSON: " + e.what());
    } catch (const FileError& e) {
        throw ConfigError(e.what());
    }
    RuleSet r = defaults();
    try {
        if (j.contains("version")) r.version = j.at("version").get<std::string>();
        for (const auto& d : j.value("deny", nlohmann::json::array())) {
            std::optional<std::string> fix;
            if (d.contains("fix") && d["fix"].is_string()) fix = d["fix"].get<std::string>();
            r.add_deny(d.at("id").get<std::string>(), d.at("pattern").get<std::string>(),
                       d.value("message", std::string()), fix);
        }
        if (j.contains("allow")) {
            for (const auto& n : j["allow"].value("names", nlohmann::json::array())) r.allowed_names.insert(n.get<std::string>());
            for (const auto& n : j["allow"].value("attributes", nlohmann::json::array())) {
                r.allowed_attributes.insert(n.get<std::string>());
            }
        }
        for (const auto& s : j.value("substitute", nlohmann::json::array())) {
            r.add_substitution(s.at("pattern").get<std::string>(), s.at("replacement").get<std::string>(),
                               s.value("requires_import", std::string()));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("rules file " + path + ": " + e.what());
    }
    return r;
}

std::vector<Violation> lint_api(const std::string& code, const RuleSet& rules) {
    std::vector<Violation> out;
    std::set<int> interior;
    try {
        interior = py::string_interior_lines(code);
    } catch (const SyntaxErrorInCode&) {
    }
    auto lines = lines_of(code);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        int ln = static_cast<int>(i) + 1;
        if (interior.count(ln)) continue;
        std::string body = strip_comment(lines[i]);
        for (const auto& rule : rules.denylist) {
            for (auto it = std::sregex_iterator(body.begin(), body.end(), rule.compiled); it != std::sregex_iterator();
                 ++it) {
                Violation v{rule.id, ln, Severity::error, it->format(rule.message), std::nullopt};
                if (rule.suggested_fix) v.suggested_fix = it->format(*rule.suggested_fix);
                out.push_back(std::move(v));
            }
        }
    }

    py::Node module;
    try {
        module = py::parse(code);
    } catch (const SyntaxErrorInCode&) {
        sort_violations(out);
        return out;
    }
    ModuleFacts f = gather(module);
    if (f.dsl_star) {
        out.push_back({"api/star-import", f.first_dsl_import_line, Severity::warning,
                       "wildcard import from devito hides which API names are used",
                       "import the needed names explicitly"});
    }
    for (const auto& [binding, line] : f.dsl_import_lines) {
        if (f.module_aliases.count(binding)) continue;
        const auto& source = f.dsl_imports.at(binding);
        if (!rules.allowed_names.count(source)) {
            out.push_back({"api/unknown-name", line, Severity::warning,
                           source + " is not part of the Devito " + rules.version + " API surface", std::nullopt});
        }
    }
    py::walk(module, [&](const py::Node& n) {
        if (n.kind != "Attribute" || n.children.empty() || n.children[0].kind != "Name") return;
        const auto& base = n.children[0].value;
        if (f.module_aliases.count(base)) {
            if (!rules.allowed_names.count(n.value)) {
                out.push_back({"api/unknown-name", n.line, Severity::warning,
                               base + "." + n.value + " is not part of the Devito " + rules.version + " API surface",
                               std::nullopt});
            }
        } else if (f.functions.count(base) && !rules.allowed_attributes.count(n.value) &&
                   !derivative_shorthand(n.value)) {
            out.push_back({"api/unknown-attribute", n.line, Severity::warning,
                           base + "." + n.value + " is not an attribute of a Devito function", std::nullopt});
        }
    });
    sort_violations(out);
    return out;
}

std::vector<Violation> preflight_structure(const std::string& code, const RuleSet& rules) {
    py::Node module = py::parse(code);
    ModuleFacts f = gather(module);
    std::vector<Violation> out;

    py::walk(module, [&](const py::Node& n) {
        if (n.kind != "Call") return;
        auto callee = f.dsl_callee(callee_name(n));
        if (callee == "Eq" || callee == "Inc") {
            auto args = positional_args(n);
            if (args.size() < 2 || args.size() > 3) {
                out.push_back({"preflight/eq-arity", n.line, Severity::error,
                               callee + " takes a left-hand side and a right-hand side, got " +
                                   std::to_string(args.size()) + " positional arguments",
                               std::nullopt});
                return;
            }
            static const std::set<std::string> kNonAssignable = {"BinOp", "UnaryOp", "Num", "Str", "Constant",
                                                                 "Compare", "BoolOp", "Lambda", "IfExp"};
            if (kNonAssignable.count(args[0]->kind)) {
                out.push_back({"preflight/lhs", n.line, Severity::error,
                               callee + " left-hand side is not assignable (expected a function access such as "
                                        "u.forward)",
                               std::nullopt});
            }
        } else if (callee == "Operator") {
            auto args = positional_args(n);
            if (args.empty()) {
                out.push_back({"preflight/operator-args", n.line, Severity::error,
                               "Operator needs a list of equations", std::nullopt});
                return;
            }
            const py::Node* eqs = args[0];
            if (eqs->kind == "Name") {
                auto it = f.last_value.find(eqs->value);
                if (it != f.last_value.end()) eqs = it->second;
            }
            static const std::set<std::string> kScalar = {"Num", "Str", "Constant", "Compare", "Dict"};
            auto inner = f.dsl_callee(callee_name(*eqs));
            if (inner == "Eq" || inner == "Inc") {
                out.push_back({"preflight/operator-args", n.line, Severity::warning,
                               "Operator expects a list of equations; a single Eq is passed",
                               "Operator([" + std::string(eqs == args[0] ? "Eq(...)" : args[0]->value) + "])"});
            } else if (kScalar.count(eqs->kind)) {
                out.push_back({"preflight/operator-args", n.line, Severity::error,
                               "Operator argument is not a sequence of equations", std::nullopt});
            }
        }
    });

    py::walk(module, [&](const py::Node& n) {
        if (n.kind != "Subscript" || n.children.empty()) return;
        const auto& base = n.children[0];
        if (base.kind != "Attribute" || base.value != "data" || base.children.empty() ||
            base.children[0].kind != "Name") {
            return;
        }
        auto fit = f.function_grid.find(base.children[0].value);
        if (fit == f.function_grid.end()) return;
        auto git = f.grid_rank.find(fit->second.first);
        if (git == f.grid_rank.end()) return;
        int allowed = git->second + (fit->second.second ? 1 : 0);
        int used = static_cast<int>(n.children.size()) - 1;
        if (used > allowed) {
            out.push_back({"preflight/data-rank", n.line, Severity::error,
                           base.children[0].value + ".data indexed with " + std::to_string(used) +
                               " indices but the function has " + std::to_string(allowed) + " dimensions",
                           std::nullopt});
        }
    });

    if (!f.foreign_star) {
        std::set<std::string> reported;
        for (const auto& [name, line] : f.loads) {
            if (f.bound.count(name) || builtin_names().count(name)) continue;
            if (f.dsl_star && rules.allowed_names.count(name)) continue;
            if (!reported.insert(name).second) continue;
            out.push_back({"preflight/undefined-name", line, Severity::error, "undefined name '" + name + "'",
                           std::nullopt});
        }
    }

    if (f.dsl_imported()) {
        std::set<std::string> loaded;
        for (const auto& [name, _] : f.loads) loaded.insert(name);
        bool used = std::any_of(f.dsl_imports.begin(), f.dsl_imports.end(),
                                [&](const auto& kv) { return loaded.count(kv.first) > 0; }) ||
                    std::any_of(f.module_aliases.begin(), f.module_aliases.end(),
                                [&](const auto& a) { return loaded.count(a) > 0; });
        if (f.dsl_star) {
            used = used || std::any_of(loaded.begin(), loaded.end(), [&](const auto& name) {
                       return !f.bound.count(name) && rules.allowed_names.count(name);
                   });
        }
        if (!used) {
            out.push_back({"preflight/unused-dsl", f.first_dsl_import_line, Severity::error,
                           "Devito imported but none of its names used", "build the solver from Grid, TimeFunction, "
                                                                         "Eq and Operator"});
        }

        int loop_line = 0;
        py::walk(module, [&](const py::Node& n) {
            if (loop_line || (n.kind != "For" && n.kind != "While")) return;
            py::walk(n, [&](const py::Node& s) {
                if (loop_line || (s.kind != "Assign" && s.kind != "AugAssign")) return;
                std::size_t targets = s.kind == "Assign" ? s.children.size() - 1 : 1;
                for (std::size_t i = 0; i < targets; ++i) {
                    const auto& t = s.children[i];
                    if (t.kind == "Subscript" && t.children[0].kind == "Name" &&
                        !f.functions.count(t.children[0].value)) {
                        loop_line = n.line;
                    }
                }
            });
        });
        if (loop_line && !f.applies) {
            out.push_back({"preflight/pseudo-integration", loop_line, Severity::warning,
                           "pseudo-integration: Devito imported but the time loop updates plain arrays and no "
                           "Operator is applied",
                           "express the update as Eq(u.forward, ...) and call op.apply(time_M=...)"});
        }
    }
    sort_violations(out);
    return out;
}

std::string apply_substitutions(const std::string& code, const RuleSet& rules) {
    std::string out = code;
    std::set<std::string> needed;
    for (const auto& s : rules.substitutions) {
        if (!std::regex_search(out, s.compiled)) continue;
        out = std::regex_replace(out, s.compiled, s.replacement);
        if (!s.requires_import.empty()) needed.insert(s.requires_import);
    }
    if (needed.empty()) return out;
    static const std::regex kFromDevito(R"(^(from\s+devito\s+import\s+)([^\n#*()]+?)(\s*(#[^\n]*)?)$)",
                                        std::regex::multiline);
    std::smatch m;
    if (!std::regex_search(out, m, kFromDevito)) return out;
    std::set<std::string> have;
    for (auto& part : text::tokenize(m[2].str())) have.insert(part);
    std::string names = text::trim(m[2].str());
    for (const auto& n : needed) {
        if (!have.count(text::to_lower(n))) names += ", " + n;
    }
    return m.prefix().str() + m[1].str() + names + m[3].str() + m.suffix().str();
}

namespace {

bool is_stdlib(const std::string& module) {
    static const std::set<std::string> kStd = {
        "abc", "argparse", "array", "ast", "asyncio", "bisect", "collections", "contextlib", "copy", "csv",
        "dataclasses", "datetime", "decimal", "enum", "functools", "glob", "hashlib", "heapq", "io", "itertools",
        "json", "logging", "math", "multiprocessing", "operator", "os", "pathlib", "pickle", "random", "re",
        "shutil", "signal", "socket", "statistics", "string", "struct", "subprocess", "sys", "tempfile",
        "textwrap", "threading", "time", "timeit", "traceback", "typing", "unittest", "uuid", "warnings",
        "weakref", "cmath", "fractions", "numbers", "pprint", "queue", "inspect", "importlib"};
    auto dot = module.find('.');
    return kStd.count(dot == std::string::npos ? module : module.substr(0, dot)) > 0;
}

struct ImportLine {
    int group = 0;
    bool from = false;
    std::string key;
    std::string text;
};

std::string tree_signature(const py::Node& module) {
    std::vector<std::string> imports;
    std::string rest;
    for (const auto& c : module.children) {
        if (c.kind == "Import" || c.kind == "ImportFrom") {
            imports.push_back(c.dump());
        } else {
            rest += c.dump();
        }
    }
    std::sort(imports.begin(), imports.end());
    return text::join(imports, "") + "|" + rest;
}

bool top_level_def(const std::string& line) {
    return text::starts_with(line, "def ") || text::starts_with(line, "class ") ||
           text::starts_with(line, "async def ") || text::starts_with(line, "@");
}

}  // namespace

std::string normalize_code(const std::string& code) {
    py::Node module;
    std::set<int> interior;
    try {
        module = py::parse(code);
        interior = py::string_interior_lines(code);
    } catch (const SyntaxErrorInCode& e) {
        throw FormatterFailed(std::string("code does not parse: ") + e.what());
    }
    auto lines = lines_of(code);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        int ln = static_cast<int>(i) + 1;
        if (!interior.count(ln) && !interior.count(ln + 1)) {
            auto end = lines[i].find_last_not_of(" \t\r");
            lines[i] = end == std::string::npos ? std::string() : lines[i].substr(0, end + 1);
        }
    }

    std::size_t first = 0;
    if (!module.children.empty() && module.children[0].kind == "Expr" && !module.children[0].children.empty() &&
        module.children[0].children[0].kind == "Str") {
        first = 1;
    }
    std::size_t last = first;
    std::set<int> seen_lines;
    bool reorderable = true;
    while (last < module.children.size() &&
           (module.children[last].kind == "Import" || module.children[last].kind == "ImportFrom")) {
        const auto& n = module.children[last];
        if (n.line != n.end_line || !seen_lines.insert(n.line).second) reorderable = false;
        ++last;
    }
    if (last > first && reorderable) {
        int begin_line = module.children[first].line;
        int end_line = module.children[last - 1].end_line;
        for (int ln = begin_line; ln <= end_line; ++ln) {
            const auto& l = lines[static_cast<std::size_t>(ln) - 1];
            if (!seen_lines.count(ln) && !text::trim(l).empty()) reorderable = false;
        }
        if (reorderable) {
            std::vector<ImportLine> imports;
            for (std::size_t i = first; i < last; ++i) {
                const auto& n = module.children[i];
                ImportLine il;
                il.from = n.kind == "ImportFrom";
                std::string mod = il.from ? n.value : alias_source(n.children[0].value);
                il.group = mod == "__future__" ? 0 : text::starts_with(mod, ".") ? 3 : is_stdlib(mod) ? 1 : 2;
                il.key = text::to_lower(mod);
                il.text = lines[static_cast<std::size_t>(n.line) - 1];
                imports.push_back(std::move(il));
            }
            std::stable_sort(imports.begin(), imports.end(), [](const ImportLine& a, const ImportLine& b) {
                return std::tie(a.group, a.from, a.key) < std::tie(b.group, b.from, b.key);
            });
            std::vector<std::string> block;
            for (std::size_t i = 0; i < imports.size(); ++i) {
                if (i > 0 && imports[i].group != imports[i - 1].group) block.emplace_back();
                block.push_back(imports[i].text);
            }
            std::vector<std::string> rebuilt(lines.begin(), lines.begin() + (begin_line - 1));
            rebuilt.insert(rebuilt.end(), block.begin(), block.end());
            std::size_t after = static_cast<std::size_t>(end_line);
            if (after < lines.size() && !text::trim(lines[after]).empty()) rebuilt.emplace_back();
            std::set<int> shifted;
            int delta = static_cast<int>(rebuilt.size()) - end_line;
            for (int ln : interior) shifted.insert(ln > end_line ? ln + delta : ln);
            interior = std::move(shifted);
            rebuilt.insert(rebuilt.end(), lines.begin() + static_cast<std::ptrdiff_t>(after), lines.end());
            lines = std::move(rebuilt);
        }
    }

    std::vector<std::string> out;
    std::size_t blanks = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        bool blank = lines[i].empty() && !interior.count(static_cast<int>(i) + 1);
        if (blank) {
            ++blanks;
            continue;
        }
        if (!out.empty() && blanks > 0) {
            std::size_t keep = top_level_def(lines[i]) ? std::min<std::size_t>(blanks, 2) : 1;
            out.insert(out.end(), keep, std::string());
        }
        blanks = 0;
        out.push_back(lines[i]);
    }
    std::string result = out.empty() ? std::string() : text::join(out, "\n") + "\n";

    try {
        if (tree_signature(py::parse(result)) != tree_signature(module)) {
            throw FormatterFailed("normalisation changed the syntax tree");
        }
    } catch (const SyntaxErrorInCode& e) {
        throw FormatterFailed(std::string("normalised code does not parse: ") + e.what());
    }
    return result;
}

FormatResult format_code(const std::string& code, const std::string& formatter) {
    FormatResult r;
    if (!formatter.empty()) {
        std::mt19937_64 rng(std::random_device{}());
        fs::path tmp = fs::temp_directory_path() / ("modernize_fmt_" + text::hex64(rng()) + ".py");
        text::write_file(tmp.string(), code);
        std::string cmd = "'" + formatter + "' '" + tmp.string() + "' >/dev/null 2>&1";
        int rc = std::system(cmd.c_str());
        std::string formatted = text::read_file(tmp.string());
        std::error_code ec;
        fs::remove(tmp, ec);
        if (rc == 0 && py::parses(formatted)) {
            r.code = formatted;
            return r;
        }
        r.warnings.push_back("external formatter " + formatter + " failed (exit " + std::to_string(rc) +
                             "); using built-in normalisation");
    }
    try {
        r.code = normalize_code(code);
    } catch (const FormatterFailed& e) {
        r.code = code;
        r.warnings.push_back(std::string("formatting skipped: ") + e.what());
    }
    return r;
}

std::size_t GuardrailReport::errors() const {
    return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(),
                                                  [](const Violation& v) { return v.severity == Severity::error; }));
}

std::size_t GuardrailReport::warnings() const { return violations.size() - errors(); }

std::size_t GuardrailReport::denylist_errors() const {
    return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(), [](const Violation& v) {
        return v.severity == Severity::error && text::starts_with(v.rule_id, "deny/");
    }));
}

nlohmann::json GuardrailReport::to_json() const {
    nlohmann::json vs = nlohmann::json::array();
    for (const auto& v : violations) vs.push_back(v.to_json());
    return {{"parses", parses}, {"errors", errors()}, {"warnings", warnings()}, {"violations", vs}};
}

GuardrailReport run_guardrails(const std::string& code, const RuleSet& rules) {
    GuardrailReport r;
    r.violations = lint_api(code, rules);
    try {
        auto pre = preflight_structure(code, rules);
        r.violations.insert(r.violations.end(), pre.begin(), pre.end());
    } catch (const SyntaxErrorInCode& e) {
        r.parses = false;
        r.violations.push_back({"preflight/syntax", e.line(), Severity::error, e.what(), std::nullopt});
    }
    sort_violations(r.violations);
    return r;
}

}  // namespace modernize
