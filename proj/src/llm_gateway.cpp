#include "modernize/llm_gateway.hpp"

#include "modernize/errors.hpp"
#include "modernize/text.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <thread>

namespace modernize {

HttpBackend::HttpBackend(std::string base_url, std::string api_key, double timeout_s)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)), timeout_s_(timeout_s) {}

nlohmann::json HttpBackend::request_body(const LlmRequest& r) {
    return {{"model", r.model},
            {"messages", {{{"role", "system"}, {"content", r.system}}, {{"role", "user"}, {"content", r.user}}}},
            {"temperature", r.temperature},
            {"max_tokens", r.max_tokens}};
}

std::string HttpBackend::complete(const LlmRequest& request) {
    auto [host, prefix] = text::split_base_url(base_url_);
    httplib::Client cli(host);
    auto secs = static_cast<time_t>(timeout_s_);
    auto usecs = static_cast<time_t>((timeout_s_ - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto res = cli.Post(prefix + "/chat/completions", headers, request_body(request).dump(), "application/json");
    if (!res) {
        auto err = res.error();
        if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout) {
            throw Timeout("model endpoint timed out: " + base_url_);
        }
        throw BackendUnavailable("model endpoint unreachable (" + httplib::to_string(err) + "): " + base_url_);
    }
    if (res->status == 429) throw RateLimited("model endpoint rate limited the request");
    if (res->status != 200) throw BackendUnavailable("model endpoint returned HTTP " + std::to_string(res->status));
    try {
        return nlohmann::json::parse(res->body).at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw BackendUnavailable(std::string("model response not understood: ") + e.what());
    }
}

MockBackend::MockBackend(std::vector<Entry> entries, std::chrono::milliseconds latency)
    : entries_(std::move(entries)), latency_(latency) {}

MockBackend MockBackend::from_file(const std::string& path, std::chrono::milliseconds latency) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseFailure(path, e.what());
    }
    std::vector<Entry> entries;
    for (const auto& e : j) {
        Entry entry{e.value("match", ""), e.value("kind", "convert"), {}};
        for (const auto& r : e.at("responses")) entry.responses.push_back(r.is_string() ? r.get<std::string>() : r.dump());
        if (entry.responses.empty()) throw ParseFailure(path, "entry without responses: " + entry.match);
        entries.push_back(std::move(entry));
    }
    return MockBackend(std::move(entries), latency);
}

std::string MockBackend::complete(const LlmRequest& request) {
    ++calls_;
    if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
    std::string kind = text::contains_icase(request.system, "judge") ? "judge" : "convert";
    static const std::regex kAttempt(R"(Conversion attempt: (\d+))");
    std::smatch m;
    std::size_t attempt = 1;
    if (std::regex_search(request.user, m, kAttempt)) attempt = std::max<std::size_t>(1, std::stoul(m[1]));
    for (const auto& e : entries_) {
        if (e.kind != kind) continue;
        if (!e.match.empty() && !text::contains(request.user, e.match)) continue;
        return e.responses[std::min(attempt, e.responses.size()) - 1];
    }
    throw BackendUnavailable("mock backend has no " + kind + " response for this request");
}

FifoLimiter::FifoLimiter(std::size_t permits) : permits_(std::max<std::size_t>(1, permits)) {}

void FifoLimiter::acquire() {
    std::unique_lock lock(mu_);
    std::uint64_t ticket = next_ticket_++;
    cv_.wait(lock, [&] { return serving_ == ticket && in_use_ < permits_; });
    ++in_use_;
    ++serving_;
    cv_.notify_all();
}

void FifoLimiter::release() {
    {
        std::lock_guard lock(mu_);
        --in_use_;
    }
    cv_.notify_all();
}

std::size_t clamp_workers(std::size_t requested, std::string* warning) {
    std::size_t w = std::clamp(requested, kMinWorkers, kMaxWorkers);
    if (w != requested && warning) {
        *warning = "workers=" + std::to_string(requested) + " outside [" + std::to_string(kMinWorkers) + ", " +
                   std::to_string(kMaxWorkers) + "], using " + std::to_string(w);
    }
    return w;
}

Gateway::Gateway(std::shared_ptr<LlmBackend> backend, GatewayOptions options)
    : backend_(std::move(backend)), options_(options), limiter_(options.max_in_flight) {}

std::string Gateway::complete(const LlmRequest& request) {
    for (int attempt = 0;; ++attempt) {
        limiter_.acquire();
        std::size_t now = ++in_flight_;
        std::size_t peak = peak_.load();
        while (now > peak && !peak_.compare_exchange_weak(peak, now)) {
        }
        try {
            std::string out = backend_->complete(request);
            --in_flight_;
            limiter_.release();
            return out;
        } catch (const RateLimited&) {
            --in_flight_;
            limiter_.release();
            if (attempt >= options_.max_retries) throw;
        } catch (const BackendUnavailable&) {
            --in_flight_;
            limiter_.release();
            if (attempt >= options_.max_retries) throw;
        } catch (...) {
            --in_flight_;
            limiter_.release();
            throw;
        }
        ++retries_;
        std::this_thread::sleep_for(options_.backoff_base * (1 << attempt));
    }
}

std::string to_string(EquationType e) {
    switch (e) {
        case EquationType::parabolic: return "parabolic";
        case EquationType::hyperbolic: return "hyperbolic";
        case EquationType::elliptic: return "elliptic";
    }
    return "parabolic";
}

nlohmann::json ConversionOutput::to_json() const {
    nlohmann::json decisions = nlohmann::json::array();
    for (const auto& [t, r] : key_decisions) decisions.push_back({{"decision_type", t}, {"rationale", r}});
    nlohmann::json components = nlohmann::json::array();
    for (const auto& [c, p] : devito_components) components.push_back({{"component", c}, {"purpose", p}});
    return {{"devito_code", devito_code},
            {"conversion_summary", conversion_summary},
            {"key_decisions", decisions},
            {"devito_components", components},
            {"equation_type", to_string(equation_type)},
            {"spatial_dimensions", spatial_dimensions},
            {"time_dependent", time_dependent},
            {"conversion_confidence", conversion_confidence},
            {"validation",
             {{"execution_success", validation.execution_success},
              {"structure", validation.structure},
              {"api_compliance", validation.api_compliance},
              {"parameters", validation.parameters},
              {"fidelity", validation.fidelity}}},
            {"usage_notes", usage_notes},
            {"optimization_hints", optimization_hints}};
}

const std::vector<std::string>& conversion_fields() {
    static const std::vector<std::string> kFields = {
        "devito_code",   "conversion_summary",    "key_decisions", "devito_components",
        "equation_type", "spatial_dimensions",    "time_dependent", "conversion_confidence",
        "validation",    "usage_notes",           "optimization_hints"};
    return kFields;
}

namespace {

std::string strip_fence(const std::string& raw) {
    std::string t = text::trim(raw);
    if (!text::starts_with(t, "```")) return t;
    auto nl = t.find('\n');
    if (nl == std::string::npos) return t;
    std::string body = t.substr(nl + 1);
    std::string tb = text::trim(body);
    if (text::ends_with(tb, "```")) tb = tb.substr(0, tb.size() - 3);
    return text::trim(tb);
}

const nlohmann::json& require(const nlohmann::json& obj, const std::string& key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaViolation(path, "missing");
    return *it;
}

std::string string_field(const nlohmann::json& v, const std::string& path, bool non_empty = false) {
    if (!v.is_string()) throw SchemaViolation(path, "type");
    auto s = v.get<std::string>();
    if (non_empty && text::trim(s).empty()) throw SchemaViolation(path, "empty");
    return s;
}

double unit_number(const nlohmann::json& v, const std::string& path) {
    if (!v.is_number()) throw SchemaViolation(path, "type");
    double d = v.get<double>();
    if (!std::isfinite(d) || d < 0.0 || d > 1.0) throw SchemaViolation(path, "range");
    return d;
}

std::vector<std::pair<std::string, std::string>> pair_list(const nlohmann::json& v, const std::string& path,
                                                           const std::string& a, const std::string& b) {
    if (!v.is_array()) throw SchemaViolation(path, "type");
    std::vector<std::pair<std::string, std::string>> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::string p = path + "[" + std::to_string(i) + "]";
        if (!v[i].is_object()) throw SchemaViolation(p, "type");
        auto first = string_field(require(v[i], a, p + "." + a), p + "." + a);
        auto second = string_field(require(v[i], b, p + "." + b), p + "." + b);
        for (const auto& [k, _] : v[i].items()) {
            if (k != a && k != b) throw SchemaViolation(p + "." + k, "unknown");
        }
        out.emplace_back(first, second);
    }
    return out;
}

std::vector<std::string> string_list(const nlohmann::json& v, const std::string& path) {
    if (!v.is_array()) throw SchemaViolation(path, "type");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(string_field(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

}  // namespace

ConversionOutput parse_structured(const std::string& raw) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(strip_fence(raw));
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedJson(e.what());
    }
    if (!j.is_object()) throw MalformedJson("expected a JSON object");

    ConversionOutput out;
    out.devito_code = string_field(require(j, "devito_code", "devito_code"), "devito_code", true);
    out.conversion_summary = string_field(require(j, "conversion_summary", "conversion_summary"), "conversion_summary");
    out.key_decisions = pair_list(require(j, "key_decisions", "key_decisions"), "key_decisions", "decision_type", "rationale");
    out.devito_components =
        pair_list(require(j, "devito_components", "devito_components"), "devito_components", "component", "purpose");

    auto eq = string_field(require(j, "equation_type", "equation_type"), "equation_type");
    if (eq == "parabolic") {
        out.equation_type = EquationType::parabolic;
    } else if (eq == "hyperbolic") {
        out.equation_type = EquationType::hyperbolic;
    } else if (eq == "elliptic") {
        out.equation_type = EquationType::elliptic;
    } else {
        throw SchemaViolation("equation_type", "enum");
    }

    const auto& dims = require(j, "spatial_dimensions", "spatial_dimensions");
    if (!dims.is_number_integer()) throw SchemaViolation("spatial_dimensions", "type");
    auto d = dims.get<long long>();
    if (d < 1 || d > 3) throw SchemaViolation("spatial_dimensions", "range");
    out.spatial_dimensions = static_cast<int>(d);

    const auto& td = require(j, "time_dependent", "time_dependent");
    if (!td.is_boolean()) throw SchemaViolation("time_dependent", "type");
    out.time_dependent = td.get<bool>();

    out.conversion_confidence = unit_number(require(j, "conversion_confidence", "conversion_confidence"),
                                            "conversion_confidence");

    const auto& v = require(j, "validation", "validation");
    if (!v.is_object()) throw SchemaViolation("validation", "type");
    const auto& es = require(v, "execution_success", "validation.execution_success");
    if (!es.is_boolean()) throw SchemaViolation("validation.execution_success", "type");
    out.validation.execution_success = es.get<bool>();
    out.validation.structure = unit_number(require(v, "structure", "validation.structure"), "validation.structure");
    out.validation.api_compliance =
        unit_number(require(v, "api_compliance", "validation.api_compliance"), "validation.api_compliance");
    out.validation.parameters = unit_number(require(v, "parameters", "validation.parameters"), "validation.parameters");
    out.validation.fidelity = unit_number(require(v, "fidelity", "validation.fidelity"), "validation.fidelity");
    static const std::set<std::string> kValidation = {"execution_success", "structure", "api_compliance", "parameters",
                                                      "fidelity"};
    for (const auto& [k, _] : v.items()) {
        if (!kValidation.count(k)) throw SchemaViolation("validation." + k, "unknown");
    }

    out.usage_notes = string_list(require(j, "usage_notes", "usage_notes"), "usage_notes");
    out.optimization_hints = string_list(require(j, "optimization_hints", "optimization_hints"), "optimization_hints");

    std::set<std::string> known(conversion_fields().begin(), conversion_fields().end());
    for (const auto& [k, _] : j.items()) {
        if (!known.count(k)) throw SchemaViolation(k, "unknown");
    }
    return out;
}

}  // namespace modernize
