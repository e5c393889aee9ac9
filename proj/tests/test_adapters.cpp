#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <thread>

#include <httplib.h>

#include "genaiops/adapters.hpp"
#include "genaiops/adapters_live.hpp"
#include "test_util.hpp"

using namespace genaiops;

namespace {

ModelSpec mock_spec() {
    ModelSpec spec;
    spec.id = "mock-model";
    spec.model_name = "mock-model";
    spec.endpoint = "mock";
    return spec;
}

} // namespace

// ---------------------------------------------------------------------------
// Mock adapter
// ---------------------------------------------------------------------------

TEST(MockAdapter, FixtureHitByPromptHash) {
    MockConfig cfg;
    cfg.fixtures[sha256_hex("what is up?")] = "the sky";
    MockAdapter adapter(cfg);
    EXPECT_EQ(adapter.complete(mock_spec(), "what is up?").text, "the sky");
}

TEST(MockAdapter, DefaultRuleEchoesLastLine) {
    MockAdapter adapter;
    auto c = adapter.complete(mock_spec(), "system stuff\nSummarize the following text");
    EXPECT_EQ(c.text, "Summarize the following text");
    EXPECT_EQ(c.latency_ms, 0);
    EXPECT_EQ(c.usage.completion_tokens, 4);
}

TEST(MockAdapter, DefaultRuleTruncatesAtThirtyTwoTokens) {
    std::string line;
    for (int i = 0; i < 40; ++i) line += "tok" + std::to_string(i) + " ";
    MockAdapter adapter;
    auto c = adapter.complete(mock_spec(), line);
    auto toks = whitespace_tokens(c.text);
    ASSERT_EQ(toks.size(), 32u);
    EXPECT_EQ(toks.front(), "tok0");
    EXPECT_EQ(toks.back(), "tok31");
}

TEST(MockAdapter, PureFunctionOfPromptAndFixtures) {
    MockAdapter a, b;
    auto spec = mock_spec();
    for (const char* prompt : {"one", "two\nthree", ""}) {
        EXPECT_EQ(a.complete(spec, prompt).text, b.complete(spec, prompt).text);
        EXPECT_EQ(a.complete(spec, prompt).text, a.complete(spec, prompt).text);
    }
}

TEST(MockAdapter, LogprobsAttachedWhenRequested) {
    MockAdapter adapter;
    auto spec = mock_spec();
    spec.want_logprobs = true;
    auto c = adapter.complete(spec, "say\nalpha beta");
    ASSERT_TRUE(c.token_logprobs.has_value());
    ASSERT_EQ(c.token_logprobs->size(), 2u);
    EXPECT_DOUBLE_EQ((*c.token_logprobs)[0].second, -std::log(16.0));
}

TEST(MockAdapter, ReferenceNllIsLogVocabForAnyReference) {
    MockConfig cfg;
    cfg.vocab_size = 16;
    MockAdapter adapter(cfg);
    auto spec = mock_spec();
    EXPECT_NEAR(adapter.score_reference_nll(spec, "any prompt", "the cat sat"), std::log(16.0),
                1e-12);
    EXPECT_NEAR(adapter.score_reference_nll(spec, "other", "one"), std::log(16.0), 1e-12);
    MockConfig cfg32;
    cfg32.vocab_size = 32;
    MockAdapter adapter32(cfg32);
    EXPECT_NEAR(adapter32.score_reference_nll(spec, "p", "ref"), std::log(32.0), 1e-12);
}

TEST(MockAdapter, EmptyReferenceRejected) {
    MockAdapter adapter;
    EXPECT_THROW(adapter.score_reference_nll(mock_spec(), "p", ""), Error);
}

TEST(Adapter, NllWithoutLogprobCapabilityRejected) {
    ChatAdapter adapter(std::make_shared<MockTransport>(), AdapterCapability{false, true, true});
    try {
        adapter.score_reference_nll(mock_spec(), "p", "ref");
        FAIL() << "expected CapabilityMissing";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::CapabilityMissing);
    }
}

TEST(MockAdapter, EmbeddingsDeterministicWithConfiguredDim) {
    MockConfig cfg;
    cfg.embed_dim = 64;
    MockAdapter adapter(cfg);
    auto spec = mock_spec();
    auto v1 = adapter.embed(spec, "hello world");
    auto v2 = adapter.embed(spec, "hello world");
    EXPECT_EQ(v1.size(), 64u);
    EXPECT_EQ(v1, v2);
    EXPECT_NE(v1, adapter.embed(spec, "different text"));
}

TEST(Adapter, EmbedWithoutCapabilityRejected) {
    ChatAdapter adapter(std::make_shared<MockTransport>(), AdapterCapability{true, true, false});
    EXPECT_THROW(adapter.embed(mock_spec(), "text"), Error);
}

// ---------------------------------------------------------------------------
// Cache keys
// ---------------------------------------------------------------------------

TEST(CacheKey, InsertionOrderDoesNotMatter) {
    json a;
    a["model"] = "m";
    a["temperature"] = 0.0;
    a["messages"] = json::array({json{{"role", "user"}, {"content", "hi"}}});
    json b;
    b["messages"] = json::array({json{{"content", "hi"}, {"role", "user"}}});
    b["temperature"] = 0.0;
    b["model"] = "m";
    EXPECT_EQ(cache_key(a), cache_key(b));
}

TEST(CacheKey, DistinctPayloadsDistinctKeys) {
    json a{{"model", "m"}, {"prompt", "x"}};
    json b{{"model", "m"}, {"prompt", "y"}};
    EXPECT_NE(cache_key(a), cache_key(b));
}

// ---------------------------------------------------------------------------
// Record / replay
// ---------------------------------------------------------------------------

TEST(RecordReplay, RoundTripReproducesCompletionsExactly) {
    testutil::TempDir dir;
    std::string cache = dir.file("cache.jsonl").string();
    auto spec = mock_spec();
    spec.want_logprobs = true;

    Completion recorded_a, recorded_nll_b;
    double nll_rec = 0;
    {
        ChatAdapter rec(std::make_shared<RecordTransport>(std::make_shared<MockTransport>(), cache),
                        mock_capability());
        recorded_a = rec.complete(spec, "alpha\nbravo charlie");
        nll_rec = rec.score_reference_nll(spec, "prompt text", "ref tokens");
        (void)rec.embed(spec, "embed me");
    }
    {
        ChatAdapter rep(std::make_shared<ReplayTransport>(cache), mock_capability());
        Completion replayed = rep.complete(spec, "alpha\nbravo charlie");
        EXPECT_EQ(replayed.text, recorded_a.text);
        EXPECT_EQ(replayed.latency_ms, recorded_a.latency_ms);
        ASSERT_TRUE(replayed.token_logprobs.has_value());
        EXPECT_EQ(*replayed.token_logprobs, *recorded_a.token_logprobs);
        EXPECT_DOUBLE_EQ(rep.score_reference_nll(spec, "prompt text", "ref tokens"), nll_rec);
        EXPECT_EQ(rep.embed(spec, "embed me").size(), MockConfig{}.embed_dim);
    }
}

TEST(RecordReplay, ReplayMissIsAnError) {
    testutil::TempDir dir;
    std::string cache = dir.file("cache.jsonl").string();
    {
        ChatAdapter rec(std::make_shared<RecordTransport>(std::make_shared<MockTransport>(), cache),
                        mock_capability());
        rec.complete(mock_spec(), "seen prompt");
    }
    ChatAdapter rep(std::make_shared<ReplayTransport>(cache), mock_capability());
    EXPECT_EQ(rep.complete(mock_spec(), "seen prompt").text, "seen prompt");
    try {
        rep.complete(mock_spec(), "unseen prompt");
        FAIL() << "expected CacheMiss";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::CacheMiss);
    }
}

TEST(RecordReplay, MissingCacheFileIsConfigError) {
    EXPECT_THROW(ReplayTransport("/nonexistent/cache.jsonl"), Error);
}

TEST(RecordReplay, RepeatedIdenticalRequestsAppendOnce) {
    testutil::TempDir dir;
    std::string cache = dir.file("cache.jsonl").string();
    {
        ChatAdapter rec(std::make_shared<RecordTransport>(std::make_shared<MockTransport>(), cache),
                        mock_capability());
        rec.complete(mock_spec(), "same");
        rec.complete(mock_spec(), "same");
        rec.complete(mock_spec(), "same");
    }
    std::string content = testutil::read_file(cache);
    EXPECT_EQ(std::count(content.begin(), content.end(), '\n'), 1);
}

// ---------------------------------------------------------------------------
// Live transport retry behaviour (loopback server)
// ---------------------------------------------------------------------------

namespace {

struct TestServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> hits{0};

    void start() {
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~TestServer() {
        server.stop();
        if (thread.joinable()) thread.join();
    }
};

LiveOptions fast_retry(int max_retries) {
    LiveOptions o;
    o.max_retries = max_retries;
    o.backoff_base_ms = 1;
    o.jitter = false;
    o.sleeper = [](int) {};
    return o;
}

} // namespace

TEST(LiveTransport, ExhaustsRetriesOnPersistent500) {
    TestServer ts;
    ts.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        ts.hits++;
        res.status = 500;
        res.set_content("boom", "text/plain");
    });
    ts.start();

    LiveTransport transport("http://127.0.0.1:" + std::to_string(ts.port), fast_retry(2));
    ChatAdapter adapter(std::shared_ptr<Transport>(&transport, [](Transport*) {}),
                        AdapterCapability{false, true, false});
    ModelSpec spec = mock_spec();
    try {
        adapter.complete(spec, "hello");
        FAIL() << "expected EndpointError";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EndpointError);
        EXPECT_NE(std::string(e.what()).find("500"), std::string::npos);
    }
    EXPECT_EQ(ts.hits.load(), 3);  // initial attempt + max_retries
}

TEST(LiveTransport, RecoversWhenServerHealsWithinBudget) {
    TestServer ts;
    ts.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        int n = ++ts.hits;
        if (n <= 2) {
            res.status = 503;
            res.set_content("warming up", "text/plain");
            return;
        }
        res.set_content(
            R"({"choices":[{"message":{"content":"pong","role":"assistant"}}],)"
            R"("usage":{"prompt_tokens":1,"completion_tokens":1}})",
            "application/json");
    });
    ts.start();

    LiveTransport transport("http://127.0.0.1:" + std::to_string(ts.port), fast_retry(3));
    ChatAdapter adapter(std::shared_ptr<Transport>(&transport, [](Transport*) {}),
                        AdapterCapability{false, true, false});
    auto c = adapter.complete(mock_spec(), "ping");
    EXPECT_EQ(c.text, "pong");
    EXPECT_EQ(ts.hits.load(), 3);
    EXPECT_GE(c.latency_ms, 0);
}

TEST(LiveTransport, NonRetryableStatusFailsImmediately) {
    TestServer ts;
    ts.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        ts.hits++;
        res.status = 400;
        res.set_content("bad request", "text/plain");
    });
    ts.start();

    LiveTransport transport("http://127.0.0.1:" + std::to_string(ts.port), fast_retry(5));
    ChatAdapter adapter(std::shared_ptr<Transport>(&transport, [](Transport*) {}),
                        AdapterCapability{false, true, false});
    EXPECT_THROW(adapter.complete(mock_spec(), "x"), Error);
    EXPECT_EQ(ts.hits.load(), 1);
}

TEST(LiveTransport, SlowServerMapsToTimeout) {
    TestServer ts;
    ts.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        ts.hits++;
        std::this_thread::sleep_for(std::chrono::milliseconds(500));
        res.set_content("{}", "application/json");
    });
    ts.start();

    LiveOptions opts = fast_retry(0);
    opts.timeout_ms = 100;
    LiveTransport transport("http://127.0.0.1:" + std::to_string(ts.port), opts);
    ChatAdapter adapter(std::shared_ptr<Transport>(&transport, [](Transport*) {}),
                        AdapterCapability{false, true, false});
    try {
        adapter.complete(mock_spec(), "slow");
        FAIL() << "expected Timeout";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Timeout);
    }
}

TEST(LiveTransport, BadUrlIsConfigError) {
    try {
        LiveTransport transport("ftp://example");
        FAIL() << "expected ConfigError";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    }
}

TEST(ModelSpec, ValidationRejectsBadValues) {
    ModelSpec spec = mock_spec();
    spec.temperature = -1;
    EXPECT_THROW(spec.validate(), Error);
    spec = mock_spec();
    spec.max_tokens = 0;
    EXPECT_THROW(spec.validate(), Error);
    spec = mock_spec();
    spec.max_retries = -1;
    EXPECT_THROW(spec.validate(), Error);
}
