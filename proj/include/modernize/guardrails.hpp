#pragma once

#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace modernize {

inline constexpr const char* kDevitoApiVersion = "4.8";

enum class Severity { error, warning };

std::string to_string(Severity s);

struct Violation {
    std::string rule_id;
    int line = 0;
    Severity severity = Severity::error;
    std::string message;
    std::optional<std::string> suggested_fix;

    nlohmann::json to_json() const;
};

struct DenyRule {
    std::string id;
    std::string pattern;
    std::string message;
    /// May reference capture groups as $1, $2, ...
    std::optional<std::string> suggested_fix;
    std::regex compiled;
};

struct Substitution {
    std::string pattern;
    std::string replacement;
    /// Name added to an explicit `from devito import ...` line when a rewrite happens.
    std::string requires_import;
    std::regex compiled;
};

struct RuleSet {
    std::string version = kDevitoApiVersion;
    std::vector<DenyRule> denylist;
    std::set<std::string> allowed_names;       // importable from devito
    std::set<std::string> allowed_attributes;  // on Function / TimeFunction objects
    std::vector<Substitution> substitutions;

    /// Rules seeded for the pinned Devito release.
    static RuleSet defaults();
    /// Defaults extended by a JSON rules file:
    /// {"version", "deny": [{id, pattern, message, fix}], "allow": {"names", "attributes"},
    ///  "substitute": [{pattern, replacement, requires_import}]}. Throws ConfigError.
    static RuleSet from_file(const std::string& path);

    void add_deny(std::string id, std::string pattern, std::string message,
                  std::optional<std::string> fix = std::nullopt);
    void add_substitution(std::string pattern, std::string replacement, std::string requires_import = {});
};

/// Denylist hits (errors) and unknown DSL calls/attributes (warnings). Never throws.
std::vector<Violation> lint_api(const std::string& code, const RuleSet& rules);

/// Structural checks over the syntax tree. Throws SyntaxErrorInCode.
std::vector<Violation> preflight_structure(const std::string& code, const RuleSet& rules = RuleSet::defaults());

/// Idempotent rewrite of every substitution pattern.
std::string apply_substitutions(const std::string& code, const RuleSet& rules);

struct FormatResult {
    std::string code;
    std::vector<std::string> warnings;
};

/// Built-in normalisation (import grouping, trailing whitespace, blank runs), or
/// the executable at `formatter` run in place on a temp copy. A failing external
/// formatter falls back to the built-in pass; unparseable input comes back as is.
/// Both fallbacks add a warning.
FormatResult format_code(const std::string& code, const std::string& formatter = {});

/// Throws FormatterFailed.
std::string normalize_code(const std::string& code);

struct GuardrailReport {
    std::vector<Violation> violations;
    bool parses = true;

    std::size_t errors() const;
    std::size_t warnings() const;
    /// Errors raised by denylist rules only.
    std::size_t denylist_errors() const;
    nlohmann::json to_json() const;
};

/// lint_api plus preflight_structure; a syntax error becomes one fatal violation.
GuardrailReport run_guardrails(const std::string& code, const RuleSet& rules);

}  // namespace modernize
