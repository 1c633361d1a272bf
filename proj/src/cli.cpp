#include "modernize/cli.hpp"

#include "modernize/config.hpp"
#include "modernize/corpus_ingest.hpp"
#include "modernize/errors.hpp"
#include "modernize/eval_harness.hpp"
#include "modernize/knowledge_graph.hpp"
#include "modernize/semantic_layer.hpp"
#include "modernize/text.hpp"
#include "modernize/workflow_engine.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>

namespace modernize {

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

struct UsageError : Error {
    using Error::Error;
};

struct Options {
    std::string config_file;
    std::vector<std::string> sets;
    bool mock = false;
    std::string out;
    std::string store;
    std::size_t workers = 0;
    std::optional<std::uint64_t> seed;

    std::string corpus;
    bool dump_chunks = false;
    std::string input;
    std::string query;
    std::string strategy = "comprehensive";
    std::size_t k = kMaxCandidates;
    std::string benchmark;
    std::string strategies = "comprehensive,fast,deep,hybrid";
    std::string cypher;
    bool fix = false;
};

Config make_config(const Options& o) {
    std::vector<std::pair<std::string, std::string>> overrides;
    for (const auto& s : o.sets) {
        auto eq = s.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
        overrides.emplace_back(text::trim(s.substr(0, eq)), s.substr(eq + 1));
    }
    if (!o.out.empty()) overrides.emplace_back("paths.out", o.out);
    if (!o.store.empty()) overrides.emplace_back("paths.store", o.store);
    if (o.workers) overrides.emplace_back("workflow.workers", std::to_string(o.workers));
    if (o.seed) overrides.emplace_back("run.seed", std::to_string(*o.seed));
    return load_config(o.config_file.empty() ? std::nullopt : std::optional<std::string>(o.config_file), overrides);
}

std::string store_file(const Config& c) {
    return c.store_path.empty() ? (fs::path(c.out_dir) / "store.json").string() : c.store_path;
}

void write_out(const Config& c, const std::string& name, const std::string& content) {
    fs::create_directories(c.out_dir);
    text::write_file((fs::path(c.out_dir) / name).string(), content);
}

void require_file(const std::string& path) {
    if (!fs::is_regular_file(path)) throw UsageError("no such file: " + path);
}

GraphStore load_store(const Config& c) {
    auto path = store_file(c);
    require_file(path);
    try {
        return GraphStore::from_json(nlohmann::json::parse(text::read_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw ParseFailure(path, e.what());
    }
}

std::unique_ptr<Embedder> make_embedder(const Config& c, bool mock) {
    if (mock || c.embedder == "hashed") return std::make_unique<HashedEmbedder>(c.embedder_dimension, c.seed);
    return std::make_unique<HttpEmbedder>(c.embedder_endpoint.empty() ? c.llm_endpoint : c.embedder_endpoint,
                                          c.embedder_model, c.embedder_dimension);
}

struct Backends {
    std::shared_ptr<LlmBackend> converter;
    std::shared_ptr<LlmBackend> judge;
};

Backends make_backends(const Config& c, bool mock) {
    if (mock) {
        require_file(c.mock_responses);
        auto m = std::make_shared<MockBackend>(
            MockBackend::from_file(c.mock_responses, std::chrono::milliseconds(c.mock_latency_ms)));
        return {m, m};
    }
    auto conv = std::make_shared<HttpBackend>(c.llm_endpoint, c.llm_api_key, c.llm_timeout_s);
    auto judge = c.judge_endpoint.empty()
                     ? std::shared_ptr<LlmBackend>(conv)
                     : std::make_shared<HttpBackend>(c.judge_endpoint, c.llm_api_key, c.llm_timeout_s);
    return {conv, judge};
}

GatewayOptions gateway_options(const Config& c, bool mock) {
    return {c.workers, c.max_retries, std::chrono::milliseconds(mock ? 0 : c.backoff_ms)};
}

GraphStore store_or_empty(const Config& c, std::ostream& err) {
    auto path = store_file(c);
    if (fs::is_regular_file(path)) return load_store(c);
    err << "warning: no knowledge base at " << path << "; converting without retrieved examples\n";
    GraphStore empty;
    empty.build_fulltext();
    return empty;
}

void print_warnings(const Config& c, std::ostream& err) {
    for (const auto& w : c.warnings) err << "warning: " << w << "\n";
}

int cmd_build_kb(const Options& o, std::ostream& out, std::ostream& err) {
    Config c = make_config(o);
    print_warnings(c, err);
    std::string root = o.corpus.empty() ? c.corpus_root : o.corpus;
    if (!fs::is_directory(root)) throw UsageError("no such corpus directory: " + root);
    std::vector<std::string> failures;
    auto chunks = ingest_corpus(root, &failures);
    for (const auto& f : failures) err << "warning: skipped " << f << "\n";
    auto dictionary = c.dictionary.empty() ? default_dictionary() : load_dictionary(c.dictionary);
    auto store = build_graph(chunks, dictionary);
    auto embedder = make_embedder(c, o.mock);
    SemanticOptions sem;
    sem.seed = c.seed;
    sem.max_parallel = c.workers;
    auto semantic = build_semantic_layer(store, *embedder, sem);
    store.build_fulltext();

    auto path = store_file(c);
    if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
    text::write_file(path, store.to_json().dump());
    nlohmann::json report = {{"corpus", root},
                             {"chunks", chunks.size()},
                             {"skipped", failures},
                             {"graph", graph_stats(store)},
                             {"semantic", semantic.to_json()}};
    write_out(c, "kb_report.json", report.dump(2));
    if (o.dump_chunks) {
        std::string dump;
        std::size_t outside = 0;
        for (const auto& ch : chunks) {
            nlohmann::json j = ch;
            dump += j.dump() + "\n";
            bool in_range = ch.char_length >= kMinChunkChars && ch.char_length <= kMaxChunkChars;
            if (!in_range) ++outside;
        }
        write_out(c, "chunks.jsonl", dump);
        out << "chunks: " << chunks.size() << " (" << outside << " outside [" << kMinChunkChars << ", "
            << kMaxChunkChars << "] kept whole)\n";
    }
    out << "knowledge base: " << chunks.size() << " chunks, " << store.node_count() << " nodes, " << store.edge_count()
        << " edges -> " << path << "\n";
    return kOk;
}

int cmd_analyze(const Options& o, std::ostream& out, std::ostream&) {
    require_file(o.input);
    auto a = analyze(text::read_file(o.input));
    nlohmann::json queries = nlohmann::json::array();
    for (const auto& q : generate_queries(a)) {
        queries.push_back({{"tier", to_string(q.tier)}, {"strategy", to_string(q.strategy)}, {"text", q.text}});
    }
    nlohmann::json j = {{"file", o.input}, {"analysis", a.to_json()}, {"queries", queries}};
    out << j.dump(2) << "\n";
    return kOk;
}

int cmd_retrieve(const Options& o, std::ostream& out, std::ostream& err) {
    Config c = make_config(o);
    print_warnings(c, err);
    Strategy s = strategy_from_string(o.strategy);
    auto store = load_store(c);
    QuerySpec q = make_query(o.query, s);
    auto fused = fuse({{q, retrieve(q, s, store)}}, FortranAnalysis{}, store, o.k);
    nlohmann::json results = nlohmann::json::array();
    for (const auto& f : fused) {
        auto j = f.to_json();
        j.erase("factors");
        results.push_back(j);
    }
    out << nlohmann::json{{"query", o.query}, {"strategy", to_string(s)}, {"results", results}}.dump(2) << "\n";
    return kOk;
}

struct Pipeline {
    Config config;
    GraphStore store;
    Backends backends;
    std::unique_ptr<Gateway> converter;
    std::unique_ptr<Gateway> judge;
    std::unique_ptr<WorkflowEngine> engine;
};

std::unique_ptr<Pipeline> make_pipeline(const Options& o, std::ostream& err) {
    auto p = std::make_unique<Pipeline>();
    p->config = make_config(o);
    print_warnings(p->config, err);
    p->store = store_or_empty(p->config, err);
    p->backends = make_backends(p->config, o.mock);
    p->converter = std::make_unique<Gateway>(p->backends.converter, gateway_options(p->config, o.mock));
    p->judge = std::make_unique<Gateway>(p->backends.judge, gateway_options(p->config, o.mock));
    p->engine = std::make_unique<WorkflowEngine>(p->store, *p->converter, *p->judge, p->config.workflow());
    return p;
}

void write_result(const Config& c, const WorkflowResult& r) {
    auto stem = fs::path(r.file).stem().string();
    if (!r.error) write_out(c, stem + ".py", r.code);
    write_out(c, stem + ".quality.json", r.to_json().dump(2));
}

std::string summary_line(const WorkflowResult& r) {
    if (r.error) return fs::path(r.file).filename().string() + ": failed: " + *r.error;
    std::string routes;
    for (const auto& h : r.history) routes += (routes.empty() ? "" : ",") + to_string(h.route);
    char buf[160];
    std::snprintf(buf, sizeof buf, "final=%.3f grade=%s attempts=%zu routes=[%s]", r.report.final,
                  to_string(r.report.grade).c_str(), r.history.size(), routes.c_str());
    return fs::path(r.file).filename().string() + ": " + buf;
}

int cmd_convert(const Options& o, std::ostream& out, std::ostream& err) {
    require_file(o.input);
    auto p = make_pipeline(o, err);
    auto r = p->engine->run_single(o.input);
    write_result(p->config, r);
    for (const auto& w : r.warnings) err << "warning: " << w << "\n";
    out << summary_line(r) << "\n";
    out << "wrote " << (fs::path(p->config.out_dir) / (fs::path(o.input).stem().string() + ".py")).string() << "\n";
    return r.below(p->config.thresholds.acceptable) ? kFailed : kOk;
}

int cmd_batch(const Options& o, std::ostream& out, std::ostream& err) {
    if (!fs::is_directory(o.input)) throw UsageError("no such directory: " + o.input);
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(o.input)) {
        auto ext = text::to_lower(e.path().extension().string());
        if (e.is_regular_file() && (ext == ".f90" || ext == ".f" || ext == ".f95" || ext == ".for")) {
            files.push_back(e.path().string());
        }
    }
    std::sort(files.begin(), files.end());
    auto p = make_pipeline(o, err);
    BatchOptions bo;
    bo.workers = p->config.workers;
    auto report = run_batch(*p->engine, files, bo);
    for (const auto& w : report.warnings) err << "warning: " << w << "\n";
    for (const auto& r : report.results) {
        write_result(p->config, r);
        out << summary_line(r) << "\n";
    }
    write_out(p->config, "batch_report.json", report.to_json().dump(2));
    write_out(p->config, "batch_report.csv", report.to_csv());
    char buf[200];
    std::snprintf(buf, sizeof buf, "%zu files, %zu below acceptable, wall %.2fs, %.1f files/hour, speedup %.2fx\n",
                  report.results.size(), report.below_acceptable(), report.wall_s, report.throughput_per_hour,
                  report.speedup);
    out << buf;
    return report.exit_code();
}

int cmd_lint(const Options& o, std::ostream& out, std::ostream& err) {
    require_file(o.input);
    Config c = make_config(o);
    print_warnings(c, err);
    auto rules = c.workflow().rules;
    std::string code = text::read_file(o.input);
    if (o.fix) {
        code = apply_substitutions(code, rules);
        auto formatted = format_code(code, c.formatter);
        for (const auto& w : formatted.warnings) err << "warning: " << w << "\n";
        code = formatted.code;
        write_out(c, fs::path(o.input).filename().string(), code);
    }
    auto report = run_guardrails(code, rules);
    for (const auto& v : report.violations) {
        out << o.input << ":" << v.line << ": " << (v.severity == Severity::error ? "error" : "warning") << " ["
            << v.rule_id << "] " << v.message;
        if (v.suggested_fix) out << " (fix: " << *v.suggested_fix << ")";
        out << "\n";
    }
    out << report.errors() << " errors, " << report.warnings() << " warnings\n";
    return report.errors() > 0 ? kFailed : kOk;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream& err) {
    require_file(o.benchmark);
    Config c = make_config(o);
    print_warnings(c, err);
    std::vector<Strategy> strategies;
    for (const auto& s : CLI::detail::split(o.strategies, ',')) {
        if (!text::trim(s).empty()) strategies.push_back(strategy_from_string(text::trim(s)));
    }
    auto store = load_store(c);
    auto queries = load_benchmark(o.benchmark);
    auto embedder = make_embedder(c, o.mock);
    auto report = run_benchmark(store, queries, strategies, *embedder);
    write_out(c, "eval_report.json", report.to_json().dump(2));
    write_out(c, "eval_report.md", report.to_markdown());
    out << report.to_markdown();
    return kOk;
}

int cmd_export_graph(const Options& o, std::ostream& out, std::ostream& err) {
    Config c = make_config(o);
    print_warnings(c, err);
    auto store = load_store(c);
    auto path = fs::path(o.cypher);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    text::write_file(o.cypher, export_cypher(store));
    out << "wrote " << o.cypher << " (" << store.node_count() << " nodes, " << store.edge_count() << " edges)\n";
    return kOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Fortran to Devito modernization pipeline", "modernize"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--config", o.config_file, "Settings file ([section] key = value)");
    app.add_option("--set", o.sets, "Override one setting: section.key=value");
    app.add_flag("--mock", o.mock, "Canned model responses and the local embedder; no network");
    app.add_option("--out", o.out, "Directory for every written artifact");
    app.add_option("--store", o.store, "Knowledge base file (default <out>/store.json)");
    app.add_option("--workers", o.workers, "Concurrent files and model calls (2-8)");
    app.add_option("--seed", o.seed, "Seed for community detection and embeddings");

    auto* build = app.add_subcommand("build-kb", "Ingest a corpus into a knowledge graph with communities");
    build->add_option("corpus", o.corpus, "Corpus directory")->required();
    build->add_flag("--dump-chunks", o.dump_chunks, "Write every chunk to <out>/chunks.jsonl");

    auto* an = app.add_subcommand("analyze", "Print the analysis of a Fortran file");
    an->add_option("file", o.input, "Fortran source")->required();

    auto* ret = app.add_subcommand("retrieve", "Run one retrieval query against the knowledge base");
    ret->add_option("--query", o.query, "Query text")->required();
    ret->add_option("--strategy", o.strategy, "comprehensive, fast, deep or hybrid");
    ret->add_option("--k", o.k, "Results to print");

    auto* conv = app.add_subcommand("convert", "Convert one Fortran file");
    conv->add_option("file", o.input, "Fortran source")->required();

    auto* batch = app.add_subcommand("batch", "Convert every Fortran file in a directory");
    batch->add_option("dir", o.input, "Directory of Fortran sources")->required();

    auto* lint = app.add_subcommand("lint", "Check a Devito script against the guardrails");
    lint->add_option("file", o.input, "Python source")->required();
    lint->add_flag("--fix", o.fix, "Apply substitutions and formatting, write the result under --out");

    auto* ev = app.add_subcommand("eval", "Measure retrieval quality over a benchmark");
    ev->add_option("--benchmark", o.benchmark, "Benchmark file (one JSON query per line)")->required();
    ev->add_option("--strategies", o.strategies, "Comma-separated strategies");

    auto* exp = app.add_subcommand("export-graph", "Write the knowledge graph as Cypher");
    exp->add_option("--cypher", o.cypher, "Output file")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << "run with --help for usage\n";
        return kUsage;
    }

    try {
        if (build->parsed()) return cmd_build_kb(o, out, err);
        if (an->parsed()) return cmd_analyze(o, out, err);
        if (ret->parsed()) return cmd_retrieve(o, out, err);
        if (conv->parsed()) return cmd_convert(o, out, err);
        if (batch->parsed()) return cmd_batch(o, out, err);
        if (lint->parsed()) return cmd_lint(o, out, err);
        if (ev->parsed()) return cmd_eval(o, out, err);
        if (exp->parsed()) return cmd_export_graph(o, out, err);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const UnknownStrategy& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const FileError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailed;
    }
    return kUsage;
}

}  // namespace modernize
