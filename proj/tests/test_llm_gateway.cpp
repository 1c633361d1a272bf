#include "modernize/errors.hpp"
#include "modernize/llm_gateway.hpp"
#include "modernize/text.hpp"
#include "schema_cases.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <chrono>
#include <mutex>
#include <thread>

using namespace modernize;
using namespace std::chrono_literals;

namespace {

std::string fixture(const std::string& rel) { return std::string(MODERNIZE_FIXTURES) + "/" + rel; }

LlmRequest convert_request(const std::string& user) { return {"You convert Fortran to Devito.", user}; }
LlmRequest judge_request(const std::string& user) { return {"You are a strict judge.", user}; }

MockBackend small_mock(std::chrono::milliseconds latency = 0ms) {
    return MockBackend({{"program heat", "convert", {"heat-1", "heat-2"}},
                        {"", "convert", {"generic"}},
                        {"program heat", "judge", {"{\"score\": 0.9}"}}},
                       latency);
}

class FlakyBackend : public LlmBackend {
public:
    explicit FlakyBackend(int failures, bool rate_limit) : failures_(failures), rate_limit_(rate_limit) {}
    std::string complete(const LlmRequest&) override {
        if (calls_++ < failures_) {
            if (rate_limit_) throw RateLimited("429");
            throw BackendUnavailable("down");
        }
        return "ok";
    }
    int calls() const { return calls_; }

private:
    int failures_;
    bool rate_limit_;
    int calls_ = 0;
};

class TimeoutBackend : public LlmBackend {
public:
    std::string complete(const LlmRequest&) override {
        ++calls;
        throw Timeout("slow");
    }
    int calls = 0;
};

}  // namespace

TEST(MockBackend, KeyedLookupAndAttemptSelection) {
    auto mock = small_mock();
    EXPECT_EQ(mock.complete(convert_request("program heat\n")), "heat-1");
    EXPECT_EQ(mock.complete(convert_request("program heat\nConversion attempt: 2")), "heat-2");
    EXPECT_EQ(mock.complete(convert_request("program heat\nConversion attempt: 7")), "heat-2");
    EXPECT_EQ(mock.complete(convert_request("program wave\n")), "generic");
    EXPECT_EQ(mock.calls(), 4u);
}

TEST(MockBackend, IsDeterministic) {
    auto a = small_mock();
    auto b = small_mock();
    for (int i = 0; i < 5; ++i) {
        EXPECT_EQ(a.complete(convert_request("program heat")), b.complete(convert_request("program heat")));
    }
}

TEST(MockBackend, JudgeKindComesFromSystemPrompt) {
    auto mock = small_mock();
    EXPECT_EQ(mock.complete(judge_request("program heat")), "{\"score\": 0.9}");
    EXPECT_THROW(mock.complete(judge_request("program wave")), BackendUnavailable);
}

TEST(MockBackend, AppliesLatency) {
    auto mock = small_mock(200ms);
    auto t0 = std::chrono::steady_clock::now();
    mock.complete(convert_request("x"));
    EXPECT_GE(std::chrono::steady_clock::now() - t0, 200ms);
}

TEST(MockBackend, LoadsFixtureFile) {
    auto mock = MockBackend::from_file(fixture("mock/responses.json"));
    auto heat = mock.complete(convert_request("program heat2d\n  implicit none"));
    EXPECT_NO_THROW(parse_structured(heat));
    auto first = parse_structured(mock.complete(convert_request("program advect1d\nConversion attempt: 1")));
    auto second = parse_structured(mock.complete(convert_request("program advect1d\nConversion attempt: 2")));
    EXPECT_NE(first.devito_code, second.devito_code);
}

TEST(MockBackend, BadFileThrowsParseFailure) {
    EXPECT_THROW(MockBackend::from_file(fixture("heat2d.f90")), ParseFailure);
    EXPECT_THROW(MockBackend::from_file(fixture("mock/absent.json")), FileError);
}

TEST(FifoLimiter, GrantsInArrivalOrder) {
    FifoLimiter limiter(1);
    limiter.acquire();
    std::vector<int> order;
    std::mutex mu;
    std::vector<std::thread> threads;
    for (int i = 0; i < 5; ++i) {
        threads.emplace_back([&, i] {
            limiter.acquire();
            {
                std::lock_guard lock(mu);
                order.push_back(i);
            }
            limiter.release();
        });
        std::this_thread::sleep_for(20ms);
    }
    limiter.release();
    for (auto& t : threads) t.join();
    EXPECT_EQ(order, (std::vector<int>{0, 1, 2, 3, 4}));
}

TEST(Gateway, BoundsInFlightCalls) {
    auto backend = std::make_shared<MockBackend>(small_mock(50ms));
    Gateway gateway(backend, {4, 0, 1ms});
    std::vector<std::thread> threads;
    for (int i = 0; i < 12; ++i) threads.emplace_back([&] { gateway.complete(convert_request("x")); });
    for (auto& t : threads) t.join();
    EXPECT_EQ(gateway.peak_in_flight(), 4u);
    EXPECT_EQ(gateway.in_flight(), 0u);
    EXPECT_EQ(backend->calls(), 12u);
}

TEST(Gateway, RetriesTransientFailures) {
    auto rate = std::make_shared<FlakyBackend>(2, true);
    Gateway g1(rate, {2, 3, 10ms});
    auto t0 = std::chrono::steady_clock::now();
    EXPECT_EQ(g1.complete(convert_request("x")), "ok");
    EXPECT_GE(std::chrono::steady_clock::now() - t0, 30ms);
    EXPECT_EQ(rate->calls(), 3);
    EXPECT_EQ(g1.retries(), 2u);

    auto down = std::make_shared<FlakyBackend>(10, false);
    Gateway g2(down, {2, 2, 1ms});
    EXPECT_THROW(g2.complete(convert_request("x")), BackendUnavailable);
    EXPECT_EQ(down->calls(), 3);
    EXPECT_EQ(g2.in_flight(), 0u);
}

TEST(Gateway, DoesNotRetryTimeouts) {
    auto backend = std::make_shared<TimeoutBackend>();
    Gateway gateway(backend, {2, 3, 1ms});
    EXPECT_THROW(gateway.complete(convert_request("x")), Timeout);
    EXPECT_EQ(backend->calls, 1);
}

TEST(Gateway, ClampsWorkers) {
    std::string warning;
    EXPECT_EQ(clamp_workers(4, &warning), 4u);
    EXPECT_TRUE(warning.empty());
    EXPECT_EQ(clamp_workers(1, &warning), 2u);
    EXPECT_EQ(warning, "workers=1 outside [2, 8], using 2");
    EXPECT_EQ(clamp_workers(32, &warning), 8u);
    EXPECT_NE(warning.find("using 8"), std::string::npos);
}

TEST(HttpBackend, RequestBodyWireFormat) {
    LlmRequest r{"sys", "usr", 0.0, 512, "local-model"};
    auto body = HttpBackend::request_body(r);
    EXPECT_EQ(body["model"], "local-model");
    EXPECT_EQ(body["temperature"], 0.0);
    EXPECT_EQ(body["max_tokens"], 512);
    ASSERT_EQ(body["messages"].size(), 2u);
    EXPECT_EQ(body["messages"][0]["role"], "system");
    EXPECT_EQ(body["messages"][0]["content"], "sys");
    EXPECT_EQ(body["messages"][1]["role"], "user");
    EXPECT_EQ(body["messages"][1]["content"], "usr");
}

class HttpBackendServer : public ::testing::Test {
protected:
    void SetUp() override {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            auto body = nlohmann::json::parse(req.body);
            {
                std::lock_guard lock(mu_);
                last_body_ = body;
                last_auth_ = req.get_header_value("Authorization");
            }
            std::string user = body["messages"][1]["content"];
            if (user == "limit") {
                res.status = 429;
                return;
            }
            if (user == "fail") {
                res.status = 500;
                return;
            }
            if (user == "slow") std::this_thread::sleep_for(1500ms);
            nlohmann::json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "echo:" + user}}}}}}};
            res.set_content(reply.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    void TearDown() override {
        server_.stop();
        thread_.join();
    }
    std::string base() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::mutex mu_;
    nlohmann::json last_body_;
    std::string last_auth_;
};

TEST_F(HttpBackendServer, ReturnsAssistantContent) {
    HttpBackend backend(base(), "secret", 5.0);
    EXPECT_EQ(backend.complete({"sys", "hello", 0.2, 64, "m"}), "echo:hello");
    std::lock_guard lock(mu_);
    EXPECT_EQ(last_auth_, "Bearer secret");
    EXPECT_EQ(last_body_["max_tokens"], 64);
}

TEST_F(HttpBackendServer, MapsStatusCodes) {
    HttpBackend backend(base(), "", 5.0);
    EXPECT_THROW(backend.complete({"sys", "limit"}), RateLimited);
    EXPECT_THROW(backend.complete({"sys", "fail"}), BackendUnavailable);
}

TEST_F(HttpBackendServer, SlowReplyIsTimeout) {
    HttpBackend backend(base(), "", 0.3);
    EXPECT_THROW(backend.complete({"sys", "slow"}), Timeout);
}

TEST(HttpBackend, UnreachableServerIsUnavailable) {
    HttpBackend backend("http://127.0.0.1:1/v1", "", 1.0);
    EXPECT_THROW(backend.complete({"sys", "x"}), BackendUnavailable);
}

TEST(ParseStructured, AcceptsValidFixture) {
    auto raw = text::read_file(fixture("mock/valid_conversion.json"));
    auto out = parse_structured(raw);
    EXPECT_NE(out.devito_code.find("Operator"), std::string::npos);
    EXPECT_EQ(out.spatial_dimensions, 2);
    EXPECT_EQ(out.equation_type, EquationType::parabolic);
    auto again = parse_structured(out.to_json().dump());
    EXPECT_EQ(again.to_json(), out.to_json());
    EXPECT_NO_THROW(parse_structured("```json\n" + raw + "\n```"));
}

TEST(ParseStructured, ListsFieldsInSchemaOrder) {
    const auto& f = conversion_fields();
    ASSERT_EQ(f.size(), 11u);
    EXPECT_EQ(f.front(), "devito_code");
    EXPECT_EQ(f.back(), "optimization_hints");
}

TEST(ParseStructured, RejectsEveryMalformedCase) {
    auto valid = nlohmann::json::parse(text::read_file(fixture("mock/valid_conversion.json")));
    auto cases = schema_cases::malformed(valid);
    ASSERT_EQ(cases.size(), 20u);
    for (const auto& c : cases) {
        SCOPED_TRACE(c.name);
        if (c.field.empty()) {
            EXPECT_THROW(parse_structured(c.raw), MalformedJson);
            continue;
        }
        try {
            parse_structured(c.raw);
            ADD_FAILURE() << "accepted";
        } catch (const SchemaViolation& e) {
            EXPECT_EQ(e.field(), c.field);
            EXPECT_EQ(e.reason(), c.reason);
        }
    }
}
