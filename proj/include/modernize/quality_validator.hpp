#pragma once

#include "modernize/fortran_analyzer.hpp"
#include "modernize/guardrails.hpp"
#include "modernize/llm_gateway.hpp"

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace modernize {

struct DimensionScores {
    double execution = 0.0;
    double structure = 0.0;
    double api = 0.0;
    double parameters = 0.0;
    double fidelity = 0.0;

    nlohmann::json to_json() const;
};

struct ScoringWeights {
    double execution = 0.30;
    double structure = 0.25;
    double api = 0.25;
    double parameters = 0.10;
    double fidelity = 0.10;
    double lambda = 0.5;

    /// Throws ConfigError unless every weight is in [0,1], they sum to 1 and lambda is in [0,1].
    void check() const;
};

/// Only the 0.80 execution+structure+api aggregate is pinned by the reference results;
/// the 0.30/0.25/0.25 split mirrors the judge rubric.
inline constexpr const char* kWeightsNote =
    "parameters=0.10 and fidelity=0.10 are fitted; execution/structure/api share 0.80 as 0.30/0.25/0.25 by convention";

enum class Grade { A, B, C, D, F };

std::string to_string(Grade g);
Grade grade_for(double final_score);  // A >= .80, B >= .65, C >= .50, D >= .35

struct Combined {
    double traditional = 0.0;
    double final = 0.0;
    Grade grade = Grade::F;
};

Combined combine(const DimensionScores& dims, double judge, const ScoringWeights& weights = {});

struct ExecutionReport {
    enum class Phase { syntax_error, import_error, runtime_error, ok };
    bool ran = false;
    int exit_code = 0;
    Phase phase = Phase::ok;
    std::string stderr_tail;
    double duration_s = 0.0;
    bool timed_out = false;

    /// Throws MalformedJson or SchemaViolation.
    static ExecutionReport from_json(const std::string& raw);
};

std::string to_string(ExecutionReport::Phase p);

/// Runs `runner <script> --timeout N` and parses its stdout. Returns nullopt (with
/// a note) when the runner is not configured, missing or its output is unusable.
std::optional<ExecutionReport> run_exec_runner(const std::string& runner, const std::string& script, int timeout_s,
                                               std::vector<std::string>* notes = nullptr);

/// Equation features read back from generated Devito code.
struct CodeFeatures {
    int dimensions = 0;
    PdeClass pde_class = PdeClass::unknown;
    Scheme scheme = Scheme::unknown;
    std::set<BoundaryCondition> boundary_conditions;

    nlohmann::json to_json() const;
};

/// Throws SyntaxErrorInCode.
CodeFeatures detect_code_features(const std::string& code);

/// Mean over the analysis features that are known (pde, dimensions, scheme, BCs).
/// pde and dimensions score 1/0; scheme 1, 0.5 for ftcs vs central, else 0; BCs by
/// Jaccard overlap. 0.5 when the analysis knows nothing.
double fidelity_score(const FortranAnalysis& analysis, const CodeFeatures& code);

/// Fraction of numeric Fortran parameters found in the code: first by an assignment
/// to the same name with an equal value, then by an unused numeric literal of equal value.
double parameter_score(const FortranAnalysis& analysis, const std::string& code);

/// Fraction of {Grid, Function/TimeFunction, Eq, Operator} constructed in the code.
double structure_score(const std::string& code);

/// True when the code parses and every import resolves against the pinned API list.
bool imports_resolve(const std::string& code, const RuleSet& rules, std::string* unresolved = nullptr);

DimensionScores score_static(const std::string& code, const FortranAnalysis& analysis, const GuardrailReport& guardrails,
                             const std::optional<ExecutionReport>& exec, const RuleSet& rules,
                             std::vector<std::string>* notes = nullptr);

struct JudgeResult {
    double score = 0.0;
    std::string justification;
};

/// Score in [0,1] from a judge reply: a JSON object with "score", or a "score: x" line.
std::optional<JudgeResult> parse_judge(const std::string& raw);

std::string judge_system_prompt();
std::string judge_user_prompt(const std::string& fortran, const std::string& devito_code);

/// Temperature 0; one retry on an unparseable reply, then JudgeUnparseable.
JudgeResult judge_llm(const std::string& fortran, const std::string& devito_code, Gateway& gateway,
                      const std::string& model = {});

inline constexpr double kDefaultConfidence = 0.75;

struct QualityReport {
    DimensionScores dims;
    double traditional = 0.0;
    double llm_judge = 0.0;
    double final = 0.0;
    Grade grade = Grade::F;
    double confidence = kDefaultConfidence;
    double duration_s = 0.0;
    std::vector<std::string> notes;
    std::string judge_justification;

    nlohmann::json to_json() const;
};

QualityReport make_report(const DimensionScores& dims, double judge, const ScoringWeights& weights,
                          std::optional<double> conversion_confidence = std::nullopt);

/// Header and one row per case, in the column order of the per-case results table.
std::string quality_csv(const std::vector<std::pair<std::string, QualityReport>>& rows);

}  // namespace modernize
