#pragma once

#include "modernize/fortran_analyzer.hpp"
#include "modernize/guardrails.hpp"
#include "modernize/knowledge_graph.hpp"
#include "modernize/llm_gateway.hpp"
#include "modernize/quality_validator.hpp"
#include "modernize/retrieval_fusion.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace modernize {

enum class Node { analyze, retrieve, convert, lint, validate, route, refine, finalize };
enum class Route { pass, refine, reconvert, finalize };

std::string to_string(Node n);
std::string to_string(Route r);

struct Thresholds {
    double excellent = 0.85;
    double acceptable = 0.55;
    double minimum = 0.30;
    int max_iterations = 3;

    /// Throws ConfigError unless 0 <= minimum < acceptable < excellent <= 1 and max_iterations >= 1.
    void check() const;
};

/// pass at or above excellent; otherwise finalize on the last allowed attempt;
/// otherwise refine in [acceptable, excellent) and reconvert below acceptable.
Route route(double final_score, int attempt, const Thresholds& thresholds = {});

/// Lowest-scoring dimension, first in weight order on ties.
std::string lowest_dimension(const DimensionScores& dims);

/// Targeted guidance for the next prompt, keyed by the lowest dimension.
std::string refinement_guidance(const DimensionScores& dims);

struct HistoryEntry {
    int attempt = 0;
    double final_score = 0.0;
    Route route = Route::pass;

    nlohmann::json to_json() const;
};

struct Attempt {
    int attempt = 0;
    ConversionOutput output;
    std::string code;  // after substitutions, before formatting
    GuardrailReport guardrails;
    QualityReport report;
};

struct WorkflowState {
    std::string file;
    std::optional<FortranAnalysis> analysis;
    std::optional<RagContext> context;
    int attempt = 0;
    std::vector<HistoryEntry> history;
    std::vector<Attempt> attempts;
    std::optional<Attempt> current;
    Node node = Node::analyze;
    std::vector<Node> trace;
    std::vector<std::string> feedback;
    bool escalated = false;
};

struct WorkflowConfig {
    Thresholds thresholds;
    ScoringWeights weights;
    RuleSet rules = RuleSet::defaults();
    RetrievalOptions retrieval;
    std::string model;
    std::string judge_model;
    std::string formatter;    // empty: built-in normalisation
    std::string exec_runner;  // empty: parse + import fallback
    int exec_timeout_s = 120;
    std::string scratch_dir;  // where scripts are written for the runner; default temp dir
};

struct WorkflowResult {
    std::string file;
    ConversionOutput output;
    QualityReport report;
    std::string code;  // formatted
    std::vector<HistoryEntry> history;
    std::vector<Node> trace;
    std::vector<std::string> warnings;
    int best_attempt = 0;
    double duration_s = 0.0;
    std::optional<std::string> error;

    bool below(double threshold) const { return error.has_value() || report.final < threshold; }
    nlohmann::json to_json() const;
};

std::string conversion_system_prompt();

/// One file through analyze, retrieve, convert, lint, validate and route until
/// pass or finalize. Shares only the immutable store and the gateways.
class WorkflowEngine {
public:
    WorkflowEngine(const GraphStore& store, Gateway& converter, Gateway& judge, WorkflowConfig config = {});

    /// Throws FileError, EmptySource and fatal gateway errors; a schema failure
    /// on every attempt rethrows the last one.
    WorkflowResult run_single(const std::string& path) const;
    WorkflowResult run_source(const std::string& name, const std::string& fortran) const;

    const WorkflowConfig& config() const { return config_; }

private:
    void do_convert(WorkflowState& state, const std::string& fortran) const;
    void do_validate(WorkflowState& state, const std::string& fortran) const;

    const GraphStore& store_;
    Gateway& converter_;
    Gateway& judge_;
    WorkflowConfig config_;
};

/// Runs task(0..n-1) on `workers` threads; tasks start in index order.
void run_fifo(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& task);

struct BatchOptions {
    std::size_t workers = kDefaultWorkers;
    std::optional<double> sequential_baseline_s;  // default: sum of per-file durations
};

struct BatchReport {
    std::vector<WorkflowResult> results;  // input order
    std::size_t workers = 0;
    std::vector<std::string> warnings;
    double wall_s = 0.0;
    double sequential_s = 0.0;
    double throughput_per_hour = 0.0;
    double speedup = 0.0;
    double acceptable = 0.55;

    std::size_t below_acceptable() const;
    int exit_code() const { return below_acceptable() > 0 ? 1 : 0; }
    nlohmann::json to_json() const;
    std::string to_csv() const;
};

/// Per-file failures are recorded in the result, never rethrown.
BatchReport run_batch(const WorkflowEngine& engine, const std::vector<std::string>& files, BatchOptions options = {});

}  // namespace modernize
