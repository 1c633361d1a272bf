#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace modernize {

struct LlmRequest {
    std::string system;
    std::string user;
    double temperature = 0.2;
    int max_tokens = 4096;
    std::string model;
};

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    /// Throws BackendUnavailable, RateLimited or Timeout.
    virtual std::string complete(const LlmRequest& request) = 0;
};

/// Chat-completions over plain http: POST {base_url}/chat/completions.
class HttpBackend : public LlmBackend {
public:
    HttpBackend(std::string base_url, std::string api_key, double timeout_s = 120.0);
    std::string complete(const LlmRequest& request) override;

    static nlohmann::json request_body(const LlmRequest& request);

private:
    std::string base_url_;
    std::string api_key_;
    double timeout_s_;
};

/// Canned responses from a JSON file: [{"match", "kind", "responses": [...]}].
/// kind is "convert" or "judge" (a request is a judge request when its system
/// prompt mentions "judge"). The first entry whose `match` occurs in the user
/// prompt answers; responses[attempt - 1] is returned, clamped to the last one,
/// with the attempt read from a "Conversion attempt: N" line (default 1).
class MockBackend : public LlmBackend {
public:
    struct Entry {
        std::string match;
        std::string kind;
        std::vector<std::string> responses;
    };

    explicit MockBackend(std::vector<Entry> entries, std::chrono::milliseconds latency = std::chrono::milliseconds(0));
    MockBackend(MockBackend&& other) noexcept
        : entries_(std::move(other.entries_)), latency_(other.latency_), calls_(other.calls_.load()) {}
    static MockBackend from_file(const std::string& path, std::chrono::milliseconds latency = std::chrono::milliseconds(0));

    std::string complete(const LlmRequest& request) override;
    std::size_t calls() const { return calls_.load(); }

private:
    std::vector<Entry> entries_;
    std::chrono::milliseconds latency_;
    std::atomic<std::size_t> calls_{0};
};

/// Counting permit with first-come first-served hand-off.
class FifoLimiter {
public:
    explicit FifoLimiter(std::size_t permits);
    void acquire();
    void release();
    std::size_t permits() const { return permits_; }

private:
    std::size_t permits_;
    std::size_t in_use_ = 0;
    std::uint64_t next_ticket_ = 0;
    std::uint64_t serving_ = 0;
    std::mutex mu_;
    std::condition_variable cv_;
};

inline constexpr std::size_t kMinWorkers = 2;
inline constexpr std::size_t kMaxWorkers = 8;
inline constexpr std::size_t kDefaultWorkers = 4;

/// Clamps into [2, 8]; `warning` receives a message when clamping happened.
std::size_t clamp_workers(std::size_t requested, std::string* warning = nullptr);

struct GatewayOptions {
    std::size_t max_in_flight = kDefaultWorkers;
    int max_retries = 3;
    std::chrono::milliseconds backoff_base{1000};  // 1x, 2x, 4x
};

/// Shared front door for all model calls: limiter, retries, in-flight probe.
class Gateway {
public:
    Gateway(std::shared_ptr<LlmBackend> backend, GatewayOptions options = {});

    /// Retries RateLimited and BackendUnavailable with exponential backoff.
    std::string complete(const LlmRequest& request);

    std::size_t in_flight() const { return in_flight_.load(); }
    std::size_t peak_in_flight() const { return peak_.load(); }
    void reset_peak() { peak_.store(0); }
    std::size_t retries() const { return retries_.load(); }
    const GatewayOptions& options() const { return options_; }

private:
    std::shared_ptr<LlmBackend> backend_;
    GatewayOptions options_;
    FifoLimiter limiter_;
    std::atomic<std::size_t> in_flight_{0};
    std::atomic<std::size_t> peak_{0};
    std::atomic<std::size_t> retries_{0};
};

enum class EquationType { parabolic, hyperbolic, elliptic };

std::string to_string(EquationType e);

struct ValidationBlock {
    bool execution_success = false;
    double structure = 0.0;
    double api_compliance = 0.0;
    double parameters = 0.0;
    double fidelity = 0.0;
};

struct ConversionOutput {
    std::string devito_code;
    std::string conversion_summary;
    std::vector<std::pair<std::string, std::string>> key_decisions;      // (decision_type, rationale)
    std::vector<std::pair<std::string, std::string>> devito_components;  // (component, purpose)
    EquationType equation_type = EquationType::parabolic;
    int spatial_dimensions = 1;
    bool time_dependent = true;
    double conversion_confidence = 0.0;
    ValidationBlock validation;
    std::vector<std::string> usage_notes;
    std::vector<std::string> optimization_hints;

    nlohmann::json to_json() const;
};

/// Top-level field names in schema order.
const std::vector<std::string>& conversion_fields();

/// Strips a surrounding code fence, parses one JSON object and validates every
/// field. Throws MalformedJson or SchemaViolation(field, reason) where reason
/// is one of missing, type, range, enum, empty, unknown.
ConversionOutput parse_structured(const std::string& raw);

}  // namespace modernize
