#include "modernize/config.hpp"

#include "modernize/errors.hpp"
#include "modernize/text.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <unistd.h>

namespace modernize {

namespace fs = std::filesystem;

namespace {

double to_real(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
}

long long to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        long long n = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return n;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    }
}

long long to_nonnegative(const std::string& key, const std::string& v) {
    long long n = to_int(key, v);
    if (n < 0) throw ConfigError(key + ": must not be negative");
    return n;
}

std::string fmt(double d) {
    std::ostringstream s;
    s << d;
    return s.str();
}

}  // namespace

const std::vector<std::string>& Config::keys() {
    static const std::vector<std::string> k = {
        "paths.corpus_root", "paths.store",       "paths.out",         "paths.rules",          "paths.formatter",
        "paths.exec_runner", "paths.dictionary",  "llm.endpoint",      "llm.model",            "llm.api_key",
        "llm.timeout_s",     "llm.max_retries",   "llm.backoff_ms",    "judge.endpoint",       "judge.model",
        "workflow.workers",  "workflow.excellent", "workflow.acceptable", "workflow.minimum",  "workflow.max_iterations",
        "workflow.exec_timeout_s", "embedder.backend", "embedder.endpoint", "embedder.model", "embedder.dimension",
        "run.seed",          "mock.responses",    "mock.latency_ms"};
    return k;
}

void Config::set(const std::string& key, const std::string& raw) {
    std::string v = text::trim(raw);
    if (key == "paths.corpus_root") corpus_root = v;
    else if (key == "paths.store") store_path = v;
    else if (key == "paths.out") out_dir = v;
    else if (key == "paths.rules") rules_file = v;
    else if (key == "paths.formatter") formatter = v;
    else if (key == "paths.exec_runner") exec_runner = v;
    else if (key == "paths.dictionary") dictionary = v;
    else if (key == "llm.endpoint") llm_endpoint = v;
    else if (key == "llm.model") llm_model = v;
    else if (key == "llm.api_key") llm_api_key = v;
    else if (key == "llm.timeout_s") llm_timeout_s = to_real(key, v);
    else if (key == "llm.max_retries") max_retries = static_cast<int>(to_nonnegative(key, v));
    else if (key == "llm.backoff_ms") backoff_ms = static_cast<int>(to_nonnegative(key, v));
    else if (key == "judge.endpoint") judge_endpoint = v;
    else if (key == "judge.model") judge_model = v;
    else if (key == "workflow.workers") workers = static_cast<std::size_t>(to_nonnegative(key, v));
    else if (key == "workflow.excellent") thresholds.excellent = to_real(key, v);
    else if (key == "workflow.acceptable") thresholds.acceptable = to_real(key, v);
    else if (key == "workflow.minimum") thresholds.minimum = to_real(key, v);
    else if (key == "workflow.max_iterations") thresholds.max_iterations = static_cast<int>(to_int(key, v));
    else if (key == "workflow.exec_timeout_s") exec_timeout_s = static_cast<int>(to_nonnegative(key, v));
    else if (key == "embedder.backend") {
        if (v != "hashed" && v != "http") throw ConfigError(key + ": expected 'hashed' or 'http', got '" + v + "'");
        embedder = v;
    } else if (key == "embedder.endpoint") embedder_endpoint = v;
    else if (key == "embedder.model") embedder_model = v;
    else if (key == "embedder.dimension") {
        embedder_dimension = static_cast<std::size_t>(to_nonnegative(key, v));
        if (embedder_dimension == 0) throw ConfigError(key + ": must be positive");
    } else if (key == "run.seed") seed = static_cast<std::uint64_t>(to_nonnegative(key, v));
    else if (key == "mock.responses") mock_responses = v;
    else if (key == "mock.latency_ms") mock_latency_ms = static_cast<int>(to_nonnegative(key, v));
    else throw ConfigError("unknown config key: " + key);
}

std::string Config::get(const std::string& key) const {
    if (key == "paths.corpus_root") return corpus_root;
    if (key == "paths.store") return store_path;
    if (key == "paths.out") return out_dir;
    if (key == "paths.rules") return rules_file;
    if (key == "paths.formatter") return formatter;
    if (key == "paths.exec_runner") return exec_runner;
    if (key == "paths.dictionary") return dictionary;
    if (key == "llm.endpoint") return llm_endpoint;
    if (key == "llm.model") return llm_model;
    if (key == "llm.api_key") return llm_api_key;
    if (key == "llm.timeout_s") return fmt(llm_timeout_s);
    if (key == "llm.max_retries") return std::to_string(max_retries);
    if (key == "llm.backoff_ms") return std::to_string(backoff_ms);
    if (key == "judge.endpoint") return judge_endpoint;
    if (key == "judge.model") return judge_model;
    if (key == "workflow.workers") return std::to_string(workers);
    if (key == "workflow.excellent") return fmt(thresholds.excellent);
    if (key == "workflow.acceptable") return fmt(thresholds.acceptable);
    if (key == "workflow.minimum") return fmt(thresholds.minimum);
    if (key == "workflow.max_iterations") return std::to_string(thresholds.max_iterations);
    if (key == "workflow.exec_timeout_s") return std::to_string(exec_timeout_s);
    if (key == "embedder.backend") return embedder;
    if (key == "embedder.endpoint") return embedder_endpoint;
    if (key == "embedder.model") return embedder_model;
    if (key == "embedder.dimension") return std::to_string(embedder_dimension);
    if (key == "run.seed") return std::to_string(seed);
    if (key == "mock.responses") return mock_responses;
    if (key == "mock.latency_ms") return std::to_string(mock_latency_ms);
    throw ConfigError("unknown config key: " + key);
}

void Config::apply_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileError(path, "cannot read config file");
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigINI().from_config(in);
    } catch (const CLI::Error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    for (const auto& item : items) {
        if (item.name == "++" || item.name == "--") continue;
        if (item.parents.size() != 1 || item.parents[0] == "default") {
            throw ConfigError(path + ": setting '" + item.fullname() + "' must sit in a [section]");
        }
        std::string value;
        for (std::size_t i = 0; i < item.inputs.size(); ++i) value += (i ? "," : "") + item.inputs[i];
        set(item.parents[0] + "." + item.name, value);
    }
}

void Config::apply_env(const std::function<std::optional<std::string>(const std::string&)>& getenv) {
    for (const auto& key : keys()) {
        if (auto v = getenv(env_name(key))) set(key, *v);
    }
}

void Config::apply_overrides(const std::vector<std::pair<std::string, std::string>>& overrides) {
    for (const auto& [k, v] : overrides) set(k, v);
}

void Config::finalize() {
    thresholds.check();
    std::string warning;
    workers = clamp_workers(workers, &warning);
    if (!warning.empty()) warnings.push_back(warning);
    auto drop = [&](std::string& path, const std::string& what, bool need_exec) {
        if (path.empty()) return;
        bool ok = fs::exists(path) && (!need_exec || ::access(path.c_str(), X_OK) == 0);
        if (!ok) {
            warnings.push_back(what + " '" + path + "' not usable; disabled");
            path.clear();
        }
    };
    drop(rules_file, "rules file", false);
    drop(formatter, "formatter", true);
    drop(exec_runner, "exec runner", true);
    drop(dictionary, "dictionary", false);
}

WorkflowConfig Config::workflow() const {
    WorkflowConfig w;
    w.thresholds = thresholds;
    w.rules = rules_file.empty() ? RuleSet::defaults() : RuleSet::from_file(rules_file);
    w.model = llm_model;
    w.judge_model = judge_model.empty() ? llm_model : judge_model;
    w.formatter = formatter;
    w.exec_runner = exec_runner;
    w.exec_timeout_s = exec_timeout_s;
    return w;
}

std::string env_name(const std::string& key) {
    std::string out = "MODERNIZE_";
    for (char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

std::optional<std::string> process_env(const std::string& name) {
    const char* v = std::getenv(name.c_str());
    if (!v) return std::nullopt;
    return std::string(v);
}

Config load_config(const std::optional<std::string>& file,
                   const std::vector<std::pair<std::string, std::string>>& overrides,
                   const std::function<std::optional<std::string>(const std::string&)>& getenv) {
    Config c;
    if (file) c.apply_file(*file);
    c.apply_env(getenv);
    c.apply_overrides(overrides);
    c.finalize();
    return c;
}

}  // namespace modernize
