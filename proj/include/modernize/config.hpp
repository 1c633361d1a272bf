#pragma once

#include "modernize/workflow_engine.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace modernize {

/// Flat key-value settings grouped in sections ("section.key"). Layers apply in
/// order: built-in defaults, file, MODERNIZE_<SECTION>_<KEY> environment
/// variables, then explicit overrides.
struct Config {
    std::string corpus_root = "corpus";
    std::string store_path;  // empty: <out_dir>/store.json
    std::string out_dir = "out";
    std::string rules_file;
    std::string formatter;
    std::string exec_runner;
    std::string dictionary;

    std::string llm_endpoint = "http://127.0.0.1:8000/v1";
    std::string llm_model = "qwen2.5-coder";
    std::string llm_api_key;
    double llm_timeout_s = 120.0;
    int max_retries = 3;
    int backoff_ms = 1000;

    std::string judge_endpoint;  // empty: same as llm
    std::string judge_model;     // empty: same as llm

    std::size_t workers = kDefaultWorkers;
    Thresholds thresholds;
    int exec_timeout_s = 120;

    std::string embedder = "hashed";  // hashed | http
    std::string embedder_endpoint;
    std::string embedder_model;
    std::size_t embedder_dimension = 1024;

    std::uint64_t seed = 42;

    std::string mock_responses = "fixtures/mock/responses.json";
    int mock_latency_ms = 0;

    std::vector<std::string> warnings;

    /// Every settable key, "section.key".
    static const std::vector<std::string>& keys();

    /// Throws ConfigError for an unknown key or a value of the wrong type.
    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;

    /// Reads an INI-style file. Throws FileError or ConfigError.
    void apply_file(const std::string& path);
    void apply_env(const std::function<std::optional<std::string>(const std::string&)>& getenv);
    void apply_overrides(const std::vector<std::pair<std::string, std::string>>& overrides);

    /// Thresholds ordered (ConfigError otherwise); workers clamped into [2, 8]
    /// and unusable optional paths cleared, each with a warning.
    void finalize();

    WorkflowConfig workflow() const;
};

/// "MODERNIZE_LLM_MODEL" for "llm.model".
std::string env_name(const std::string& key);

std::optional<std::string> process_env(const std::string& name);

/// Defaults, then `file` when given, then the process environment, then overrides; finalized.
Config load_config(const std::optional<std::string>& file,
                   const std::vector<std::pair<std::string, std::string>>& overrides = {},
                   const std::function<std::optional<std::string>(const std::string&)>& getenv = process_env);

}  // namespace modernize
