#include "modernize/workflow_engine.hpp"

#include "modernize/errors.hpp"
#include "modernize/text.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <random>
#include <thread>

namespace modernize {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

std::vector<std::string> error_feedback(const GuardrailReport& g, std::size_t limit = 5) {
    std::vector<std::string> out;
    for (const auto& v : g.violations) {
        if (v.severity != Severity::error) continue;
        std::string line = "Line " + std::to_string(v.line) + ": " + v.message;
        if (v.suggested_fix) line += " (use " + *v.suggested_fix + ")";
        out.push_back(line);
        if (out.size() == limit) break;
    }
    return out;
}

std::string write_scratch(const std::string& dir, const std::string& name, int attempt, const std::string& code) {
    fs::path base = dir.empty() ? fs::temp_directory_path() / "modernize-exec" : fs::path(dir);
    fs::create_directories(base);
    std::mt19937_64 rng(std::random_device{}());
    auto path = base / (name + "_attempt" + std::to_string(attempt) + "_" + text::hex64(rng()).substr(0, 8) + ".py");
    text::write_file(path.string(), code);
    return path.string();
}

}  // namespace

std::string to_string(Node n) {
    switch (n) {
        case Node::analyze: return "analyze";
        case Node::retrieve: return "retrieve";
        case Node::convert: return "convert";
        case Node::lint: return "lint";
        case Node::validate: return "validate";
        case Node::route: return "route";
        case Node::refine: return "refine";
        case Node::finalize: return "finalize";
    }
    return "analyze";
}

std::string to_string(Route r) {
    switch (r) {
        case Route::pass: return "pass";
        case Route::refine: return "refine";
        case Route::reconvert: return "reconvert";
        case Route::finalize: return "finalize";
    }
    return "pass";
}

void Thresholds::check() const {
    if (!(0.0 <= minimum && minimum < acceptable && acceptable < excellent && excellent <= 1.0)) {
        throw ConfigError("thresholds must satisfy 0 <= minimum < acceptable < excellent <= 1");
    }
    if (max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
}

Route route(double final_score, int attempt, const Thresholds& t) {
    if (final_score >= t.excellent) return Route::pass;
    if (attempt >= t.max_iterations) return Route::finalize;
    if (final_score >= t.acceptable) return Route::refine;
    return Route::reconvert;
}

std::string lowest_dimension(const DimensionScores& d) {
    std::pair<const char*, double> dims[] = {{"execution", d.execution},
                                             {"structure", d.structure},
                                             {"api", d.api},
                                             {"parameters", d.parameters},
                                             {"fidelity", d.fidelity}};
    auto best = dims[0];
    for (const auto& x : dims) {
        if (x.second < best.second) best = x;
    }
    return best.first;
}

std::string refinement_guidance(const DimensionScores& d) {
    std::string dim = lowest_dimension(d);
    if (dim == "execution") {
        return "The previous code would not run: import only names that exist in Devito 4.8 and make the script "
               "self-contained.";
    }
    if (dim == "structure") {
        return "Build the solution from Devito objects: a Grid, Function or TimeFunction fields, Eq updates and an "
               "Operator that applies them. Replace Python loops over array elements.";
    }
    if (dim == "api") {
        return "Remove invented API: use documented derivative shortcuts (dx, dx2, dxl, dxr, laplace) or "
               "first_derivative, and pass only documented Operator arguments.";
    }
    if (dim == "parameters") {
        return "Carry over every physical and numerical parameter from the Fortran source with the same names and "
               "values (grid sizes, spacings, time step, step count, coefficients).";
    }
    return "Preserve the differential operators and equation type of the source: keep the same scheme, time "
           "stepping and boundary conditions as the Fortran program.";
}

nlohmann::json HistoryEntry::to_json() const {
    return {{"attempt", attempt}, {"final", final_score}, {"route", to_string(route)}};
}

nlohmann::json WorkflowResult::to_json() const {
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& h : history) hist.push_back(h.to_json());
    nlohmann::json nodes = nlohmann::json::array();
    for (auto n : trace) nodes.push_back(to_string(n));
    nlohmann::json j = {{"file", file},         {"history", hist},          {"trace", nodes},
                        {"warnings", warnings}, {"best_attempt", best_attempt}, {"duration_s", duration_s}};
    if (error) {
        j["error"] = *error;
    } else {
        j["quality"] = report.to_json();
        j["conversion"] = output.to_json();
    }
    return j;
}

std::string conversion_system_prompt() {
    return "You convert legacy Fortran finite-difference programs into Devito Python code. "
           "Reply with one JSON object that follows the requested schema.";
}

WorkflowEngine::WorkflowEngine(const GraphStore& store, Gateway& converter, Gateway& judge, WorkflowConfig config)
    : store_(store), converter_(converter), judge_(judge), config_(std::move(config)) {
    config_.thresholds.check();
    config_.weights.check();
}

WorkflowResult WorkflowEngine::run_single(const std::string& path) const {
    return run_source(path, text::read_file(path));
}

void WorkflowEngine::do_convert(WorkflowState& state, const std::string& fortran) const {
    LlmRequest req{conversion_system_prompt(), build_prompt(fortran, *state.context, state.attempt, state.feedback),
                   0.2, 4096, config_.model};
    std::string raw = converter_.complete(req);
    Attempt a;
    a.attempt = state.attempt;
    a.output = parse_structured(raw);
    state.current = std::move(a);
}

void WorkflowEngine::do_validate(WorkflowState& state, const std::string& fortran) const {
    auto t0 = Clock::now();
    Attempt& a = *state.current;
    std::vector<std::string> notes;
    std::optional<ExecutionReport> exec;
    if (!config_.exec_runner.empty()) {
        auto script = write_scratch(config_.scratch_dir, stem(state.file), state.attempt, a.code);
        exec = run_exec_runner(config_.exec_runner, script, config_.exec_timeout_s, &notes);
        std::error_code ec;
        fs::remove(script, ec);
    }
    auto dims = score_static(a.code, *state.analysis, a.guardrails, exec, config_.rules, &notes);
    double judge = 0.0;
    std::string justification;
    try {
        auto j = judge_llm(fortran, a.code, judge_, config_.judge_model);
        judge = j.score;
        justification = j.justification;
    } catch (const JudgeUnparseable& e) {
        judge = config_.weights.execution * dims.execution + config_.weights.structure * dims.structure +
                config_.weights.api * dims.api + config_.weights.parameters * dims.parameters +
                config_.weights.fidelity * dims.fidelity;
        notes.push_back(std::string("judge: ") + e.what() + "; traditional score used in its place");
    }
    a.report = make_report(dims, judge, config_.weights, a.output.conversion_confidence);
    a.report.notes.insert(a.report.notes.end(), notes.begin(), notes.end());
    a.report.judge_justification = justification;
    a.report.duration_s = seconds_since(t0);
}

WorkflowResult WorkflowEngine::run_source(const std::string& name, const std::string& fortran) const {
    auto t0 = Clock::now();
    const auto& th = config_.thresholds;
    WorkflowState state;
    state.file = name;
    std::exception_ptr last_schema_error;
    auto enter = [&](Node n) {
        state.node = n;
        state.trace.push_back(n);
    };

    enter(Node::analyze);
    state.analysis = analyze(fortran);

    RetrievalOptions retrieval = config_.retrieval;
    bool need_retrieval = true;
    while (true) {
        if (need_retrieval) {
            enter(Node::retrieve);
            retrieval.escalate = state.escalated;
            state.context = build_context(*state.analysis, store_, retrieval);
            need_retrieval = false;
        }
        ++state.attempt;
        enter(Node::convert);
        try {
            do_convert(state, fortran);
        } catch (const MalformedJson& e) {
            last_schema_error = std::current_exception();
            state.current.reset();
            state.feedback = {std::string("The previous reply was rejected (") + e.what() +
                              "). Return exactly one JSON object matching the schema."};
        } catch (const SchemaViolation& e) {
            last_schema_error = std::current_exception();
            state.current.reset();
            state.feedback = {std::string("The previous reply was rejected (") + e.what() +
                              "). Return exactly one JSON object matching the schema."};
        }

        double final_score = 0.0;
        if (state.current) {
            enter(Node::lint);
            Attempt& a = *state.current;
            a.code = apply_substitutions(a.output.devito_code, config_.rules);
            a.guardrails = run_guardrails(a.code, config_.rules);
            enter(Node::validate);
            do_validate(state, fortran);
            final_score = a.report.final;
            state.attempts.push_back(a);
        }

        enter(Node::route);
        Route r = route(final_score, state.attempt, th);
        if (!state.current && r == Route::refine) r = Route::reconvert;
        state.history.push_back({state.attempt, final_score, r});
        if (r == Route::pass || r == Route::finalize) break;
        if (r == Route::refine) {
            enter(Node::refine);
            state.feedback = {refinement_guidance(state.current->report.dims)};
            auto errs = error_feedback(state.current->guardrails);
            state.feedback.insert(state.feedback.end(), errs.begin(), errs.end());
        } else {
            state.escalated = true;
            need_retrieval = true;
            if (state.current) state.feedback = error_feedback(state.current->guardrails);
        }
    }

    enter(Node::finalize);
    if (state.attempts.empty()) std::rethrow_exception(last_schema_error);
    const Attempt* best = &state.attempts.front();
    for (const auto& a : state.attempts) {
        if (a.report.final > best->report.final) best = &a;
    }
    WorkflowResult result;
    result.file = name;
    result.output = best->output;
    result.report = best->report;
    result.best_attempt = best->attempt;
    auto formatted = format_code(best->code, config_.formatter);
    result.code = formatted.code;
    result.output.devito_code = formatted.code;
    result.warnings = formatted.warnings;
    result.history = state.history;
    result.trace = state.trace;
    result.duration_s = seconds_since(t0);
    result.report.duration_s = result.duration_s;
    return result;
}

void run_fifo(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& task) {
    std::atomic<std::size_t> next{0};
    std::size_t threads = std::max<std::size_t>(1, std::min(workers, n));
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) task(i);
        });
    }
    for (auto& th : pool) th.join();
}

std::size_t BatchReport::below_acceptable() const {
    return static_cast<std::size_t>(
        std::count_if(results.begin(), results.end(), [&](const WorkflowResult& r) { return r.below(acceptable); }));
}

nlohmann::json BatchReport::to_json() const {
    nlohmann::json files = nlohmann::json::array();
    for (const auto& r : results) files.push_back(r.to_json());
    return {{"files", files},
            {"workers", workers},
            {"warnings", warnings},
            {"wall_s", wall_s},
            {"sequential_s", sequential_s},
            {"throughput_files_per_hour", throughput_per_hour},
            {"speedup", speedup},
            {"below_acceptable", below_acceptable()}};
}

std::string BatchReport::to_csv() const {
    std::vector<std::pair<std::string, QualityReport>> rows;
    for (const auto& r : results) {
        QualityReport q = r.error ? QualityReport{} : r.report;
        if (r.error) q.duration_s = r.duration_s;
        rows.emplace_back(stem(r.file), q);
    }
    return quality_csv(rows);
}

BatchReport run_batch(const WorkflowEngine& engine, const std::vector<std::string>& files, BatchOptions options) {
    BatchReport report;
    std::string warning;
    report.workers = clamp_workers(options.workers, &warning);
    if (!warning.empty()) report.warnings.push_back(warning);
    report.acceptable = engine.config().thresholds.acceptable;
    report.results.resize(files.size());
    auto t0 = Clock::now();
    run_fifo(files.size(), report.workers, [&](std::size_t i) {
        auto start = Clock::now();
        try {
            report.results[i] = engine.run_single(files[i]);
        } catch (const std::exception& e) {
            WorkflowResult failed;
            failed.file = files[i];
            failed.error = e.what();
            failed.duration_s = seconds_since(start);
            report.results[i] = std::move(failed);
        }
    });
    report.wall_s = seconds_since(t0);
    if (options.sequential_baseline_s) {
        report.sequential_s = *options.sequential_baseline_s;
    } else {
        for (const auto& r : report.results) report.sequential_s += r.duration_s;
    }
    if (!files.empty() && report.wall_s > 0) {
        report.throughput_per_hour = static_cast<double>(files.size()) / report.wall_s * 3600.0;
        report.speedup = report.sequential_s / report.wall_s;
    }
    return report;
}

}  // namespace modernize
