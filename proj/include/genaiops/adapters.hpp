#pragma once
// Uniform model invocation: an OpenAI-compatible wire layer with pluggable
// transports. The mock transport is a pure function of (request, fixtures);
// record/replay wrap any transport with a content-keyed cache so CI runs are
// fully offline and byte-reproducible. The live HTTP transport lives in
// adapters_live.hpp to keep this header light.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "genaiops/errors.hpp"
#include "genaiops/sha256.hpp"
#include "genaiops/text.hpp"

namespace genaiops {

using json = nlohmann::json;

struct ModelSpec {
    std::string id;
    std::string endpoint;  // base URL, e.g. http://localhost:8000
    std::string model_name;
    double temperature = 0.0;
    int max_tokens = 256;
    std::optional<int64_t> seed;
    bool want_logprobs = false;
    int timeout_ms = 30000;
    int max_retries = 3;

    void validate() const {
        if (temperature < 0) raise(ErrorCode::ConfigError, "temperature must be >= 0");
        if (max_tokens <= 0) raise(ErrorCode::ConfigError, "max_tokens must be positive");
        if (timeout_ms <= 0) raise(ErrorCode::ConfigError, "timeout_ms must be positive");
        if (max_retries < 0) raise(ErrorCode::ConfigError, "max_retries must be >= 0");
    }

    static ModelSpec from_json(const json& j) {
        ModelSpec s;
        s.id = j.value("id", "model");
        s.endpoint = j.value("endpoint", "");
        s.model_name = j.value("model_name", s.id);
        s.temperature = j.value("temperature", 0.0);
        s.max_tokens = j.value("max_tokens", 256);
        if (j.contains("seed") && !j["seed"].is_null()) s.seed = j["seed"].get<int64_t>();
        s.want_logprobs = j.value("want_logprobs", false);
        s.timeout_ms = j.value("timeout_ms", 30000);
        s.max_retries = j.value("max_retries", 3);
        s.validate();
        return s;
    }

    json to_json() const {
        json j{{"id", id},
               {"endpoint", endpoint},
               {"model_name", model_name},
               {"temperature", temperature},
               {"max_tokens", max_tokens},
               {"want_logprobs", want_logprobs},
               {"timeout_ms", timeout_ms},
               {"max_retries", max_retries}};
        if (seed) j["seed"] = *seed;
        return j;
    }
};

struct Usage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

struct Completion {
    std::string text;
    std::optional<std::vector<std::pair<std::string, double>>> token_logprobs;
    long latency_ms = 0;
    Usage usage;
};

struct AdapterCapability {
    bool supports_logprobs = false;
    bool supports_seed = false;
    bool supports_embeddings = false;
};

enum class AdapterMode { Live, Record, Replay, Mock };

inline const char* adapter_mode_name(AdapterMode m) {
    switch (m) {
        case AdapterMode::Live: return "live";
        case AdapterMode::Record: return "record";
        case AdapterMode::Replay: return "replay";
        case AdapterMode::Mock: return "mock";
    }
    return "unknown";
}

inline AdapterMode adapter_mode_from_name(const std::string& s) {
    if (s == "live") return AdapterMode::Live;
    if (s == "record") return AdapterMode::Record;
    if (s == "replay") return AdapterMode::Replay;
    if (s == "mock") return AdapterMode::Mock;
    raise(ErrorCode::ConfigError, "unknown adapter mode '" + s + "'");
}

// ---------------------------------------------------------------------------
// Wire layer
// ---------------------------------------------------------------------------

struct WireRequest {
    std::string path;  // /v1/chat/completions, /v1/completions, /v1/embeddings
    json payload;
};

struct WireResponse {
    json payload;
    long latency_ms = 0;
};

// Canonical cache key: payloads serialize with sorted keys (nlohmann::json
// objects are ordered maps), so semantically identical requests collide.
inline std::string cache_key(const json& payload) { return sha256_hex(payload.dump()); }

class Transport {
public:
    virtual ~Transport() = default;
    virtual WireResponse roundtrip(const WireRequest& request) = 0;
};

// ---------------------------------------------------------------------------
// Mock transport
// ---------------------------------------------------------------------------

struct MockConfig {
    // fixture key: sha256 hex of the prompt text
    std::map<std::string, std::string> fixtures;
    size_t vocab_size = 16;  // uniform token distribution: logprob = -ln(V)
    size_t embed_dim = 64;
    size_t default_token_limit = 32;
};

class MockTransport : public Transport {
public:
    explicit MockTransport(MockConfig config = {}) : config_(std::move(config)) {}

    WireResponse roundtrip(const WireRequest& request) override {
        if (request.path == "/v1/chat/completions") return chat(request.payload);
        if (request.path == "/v1/completions") return completions(request.payload);
        if (request.path == "/v1/embeddings") return embeddings(request.payload);
        raise(ErrorCode::EndpointError, "mock transport: unknown path " + request.path);
    }

    // Fixture hit by prompt hash, else the first N whitespace tokens of the
    // prompt's last non-empty line.
    std::string response_text(const std::string& prompt) const {
        auto it = config_.fixtures.find(sha256_hex(prompt));
        if (it != config_.fixtures.end()) return it->second;
        std::string last_line;
        size_t end = prompt.size();
        while (end > 0) {
            size_t nl = prompt.rfind('\n', end - 1);
            size_t start = nl == std::string::npos ? 0 : nl + 1;
            last_line = prompt.substr(start, end - start);
            if (last_line.find_first_not_of(" \t\r") != std::string::npos) break;
            last_line.clear();
            if (nl == std::string::npos) break;
            end = nl;
        }
        auto toks = whitespace_tokens(last_line);
        std::string out;
        for (size_t i = 0; i < std::min(toks.size(), config_.default_token_limit); ++i) {
            if (i) out += ' ';
            out += toks[i];
        }
        return out;
    }

    double uniform_logprob() const { return -std::log(double(config_.vocab_size)); }

private:
    WireResponse chat(const json& payload) const {
        const auto& messages = payload.at("messages");
        std::string prompt = messages.back().at("content").get<std::string>();
        std::string text = response_text(prompt);
        auto prompt_toks = whitespace_tokens(prompt);
        auto completion_toks = whitespace_tokens(text);
        json choice{{"finish_reason", "stop"},
                    {"index", 0},
                    {"message", {{"content", text}, {"role", "assistant"}}}};
        if (payload.value("logprobs", false)) {
            json entries = json::array();
            for (const auto& t : completion_toks)
                entries.push_back({{"logprob", uniform_logprob()}, {"token", t}});
            choice["logprobs"] = {{"content", entries}};
        }
        json body{{"choices", json::array({choice})},
                  {"model", payload.value("model", "mock")},
                  {"object", "chat.completion"},
                  {"usage",
                   {{"completion_tokens", completion_toks.size()},
                    {"prompt_tokens", prompt_toks.size()}}}};
        return {body, 0};
    }

    WireResponse completions(const json& payload) const {
        std::string text = payload.at("prompt").get<std::string>();
        // echo scoring: report whitespace tokens with offsets and uniform logprobs
        json tokens = json::array(), logprobs = json::array(), offsets = json::array();
        size_t i = 0;
        while (i < text.size()) {
            while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
            size_t start = i;
            while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
            if (i > start) {
                tokens.push_back(text.substr(start, i - start));
                logprobs.push_back(uniform_logprob());
                offsets.push_back(start);
            }
        }
        json choice{{"index", 0},
                    {"logprobs",
                     {{"text_offset", offsets}, {"token_logprobs", logprobs}, {"tokens", tokens}}},
                    {"text", text}};
        json body{{"choices", json::array({choice})},
                  {"model", payload.value("model", "mock")},
                  {"object", "text_completion"},
                  {"usage", {{"completion_tokens", 0}, {"prompt_tokens", tokens.size()}}}};
        return {body, 0};
    }

    WireResponse embeddings(const json& payload) const {
        std::string input = payload.at("input").get<std::string>();
        auto vec = hashed_tf_vector(input, config_.embed_dim);
        json body{{"data", json::array({json{{"embedding", vec}, {"index", 0}, {"object", "embedding"}}})},
                  {"model", payload.value("model", "mock")},
                  {"object", "list"}};
        return {body, 0};
    }

    MockConfig config_;
};

// ---------------------------------------------------------------------------
// Record / replay cache
// ---------------------------------------------------------------------------

struct CacheEntry {
    json response;
    long latency_ms = 0;
};

inline std::map<std::string, CacheEntry> load_cache_file(const std::string& path,
                                                         bool must_exist) {
    std::map<std::string, CacheEntry> cache;
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        if (must_exist) raise(ErrorCode::ConfigError, "cannot open cache file '" + path + "'");
        return cache;
    }
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            raise(ErrorCode::MalformedRecord,
                  path + " line " + std::to_string(line_no) + ": " + e.what());
        }
        CacheEntry entry{j.at("response"), j.value("latency_ms", 0L)};
        cache[j.at("key").get<std::string>()] = std::move(entry);
    }
    return cache;
}

// Pass-through transport that persists every response, keyed by the request
// payload hash. Repeated identical requests are served from the cache.
class RecordTransport : public Transport {
public:
    RecordTransport(std::shared_ptr<Transport> inner, std::string cache_path)
        : inner_(std::move(inner)), path_(std::move(cache_path)) {
        cache_ = load_cache_file(path_, /*must_exist=*/false);
    }

    WireResponse roundtrip(const WireRequest& request) override {
        std::string key = cache_key(request.payload);
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto it = cache_.find(key);
            if (it != cache_.end()) return {it->second.response, it->second.latency_ms};
        }
        WireResponse resp = inner_->roundtrip(request);
        std::lock_guard<std::mutex> lock(mutex_);
        auto [it, inserted] = cache_.emplace(key, CacheEntry{resp.payload, resp.latency_ms});
        if (inserted) {
            std::ofstream out(path_, std::ios::binary | std::ios::app);
            if (!out) raise(ErrorCode::StoreWriteError, "cannot append to cache '" + path_ + "'");
            json line{{"key", key}, {"latency_ms", resp.latency_ms}, {"response", resp.payload}};
            out << line.dump() << '\n';
        }
        return resp;
    }

private:
    std::shared_ptr<Transport> inner_;
    std::string path_;
    std::map<std::string, CacheEntry> cache_;
    std::mutex mutex_;
};

// Cache-only transport: a miss is an error, never a network call. Reads are
// lock-free once constructed.
class ReplayTransport : public Transport {
public:
    explicit ReplayTransport(const std::string& cache_path)
        : cache_(load_cache_file(cache_path, /*must_exist=*/true)) {}

    WireResponse roundtrip(const WireRequest& request) override {
        std::string key = cache_key(request.payload);
        auto it = cache_.find(key);
        if (it == cache_.end())
            raise(ErrorCode::CacheMiss, "no recorded response for request key " + key);
        return {it->second.response, it->second.latency_ms};
    }

private:
    const std::map<std::string, CacheEntry> cache_;
};

// ---------------------------------------------------------------------------
// Adapter
// ---------------------------------------------------------------------------

class ModelAdapter {
public:
    virtual ~ModelAdapter() = default;
    virtual AdapterCapability capability() const = 0;
    virtual Completion complete(const ModelSpec& spec, const std::string& prompt) = 0;
    virtual double score_reference_nll(const ModelSpec& spec, const std::string& prompt,
                                       const std::string& reference) = 0;
    virtual std::vector<double> embed(const ModelSpec& spec, const std::string& text) = 0;
};

// OpenAI-compatible adapter over any transport.
class ChatAdapter : public ModelAdapter {
public:
    ChatAdapter(std::shared_ptr<Transport> transport, AdapterCapability capability)
        : transport_(std::move(transport)), capability_(capability) {}

    AdapterCapability capability() const override { return capability_; }

    Completion complete(const ModelSpec& spec, const std::string& prompt) override {
        spec.validate();
        json payload{{"model", spec.model_name},
                     {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
                     {"temperature", spec.temperature},
                     {"max_tokens", spec.max_tokens}};
        if (spec.seed) payload["seed"] = *spec.seed;
        if (spec.want_logprobs) payload["logprobs"] = true;
        WireResponse resp = transport_->roundtrip({"/v1/chat/completions", payload});

        Completion completion;
        completion.latency_ms = resp.latency_ms;
        try {
            const json& choice = resp.payload.at("choices").at(0);
            completion.text = choice.at("message").at("content").get<std::string>();
            if (spec.want_logprobs && capability_.supports_logprobs &&
                choice.contains("logprobs") && choice["logprobs"].contains("content")) {
                std::vector<std::pair<std::string, double>> lps;
                for (const auto& e : choice["logprobs"]["content"])
                    lps.emplace_back(e.at("token").get<std::string>(),
                                     e.at("logprob").get<double>());
                completion.token_logprobs = std::move(lps);
            }
            if (resp.payload.contains("usage")) {
                completion.usage.prompt_tokens = resp.payload["usage"].value("prompt_tokens", 0L);
                completion.usage.completion_tokens =
                    resp.payload["usage"].value("completion_tokens", 0L);
            }
        } catch (const json::exception& e) {
            raise(ErrorCode::EndpointError, std::string("malformed completion payload: ") + e.what());
        }
        return completion;
    }

    // Teacher forcing through the completions echo mechanism: the endpoint
    // scores prompt + "\n" + reference and reports per-token logprobs with
    // text offsets; the mean -logprob over the reference span is the loss.
    double score_reference_nll(const ModelSpec& spec, const std::string& prompt,
                               const std::string& reference) override {
        if (!capability_.supports_logprobs)
            raise(ErrorCode::CapabilityMissing, "adapter does not report log-probabilities");
        if (reference.empty()) raise(ErrorCode::EmptyReference, "reference must be non-empty");
        std::string scored = prompt + "\n" + reference;
        json payload{{"model", spec.model_name}, {"prompt", scored},      {"echo", true},
                     {"logprobs", 0},            {"max_tokens", 0},       {"temperature", 0.0}};
        WireResponse resp = transport_->roundtrip({"/v1/completions", payload});

        double sum = 0.0;
        long count = 0;
        try {
            const json& lp = resp.payload.at("choices").at(0).at("logprobs");
            const json& offsets = lp.at("text_offset");
            const json& logprobs = lp.at("token_logprobs");
            size_t boundary = prompt.size() + 1;
            for (size_t i = 0; i < offsets.size(); ++i) {
                if (offsets[i].get<size_t>() < boundary) continue;
                if (logprobs[i].is_null()) continue;
                sum += -logprobs[i].get<double>();
                ++count;
            }
        } catch (const json::exception& e) {
            raise(ErrorCode::EndpointError, std::string("malformed logprob payload: ") + e.what());
        }
        if (count == 0) raise(ErrorCode::EmptyReference, "reference produced no scorable tokens");
        return sum / double(count);
    }

    std::vector<double> embed(const ModelSpec& spec, const std::string& text) override {
        if (!capability_.supports_embeddings)
            raise(ErrorCode::CapabilityMissing, "adapter does not support embeddings");
        json payload{{"model", spec.model_name}, {"input", text}};
        WireResponse resp = transport_->roundtrip({"/v1/embeddings", payload});
        try {
            return resp.payload.at("data").at(0).at("embedding").get<std::vector<double>>();
        } catch (const json::exception& e) {
            raise(ErrorCode::EndpointError, std::string("malformed embedding payload: ") + e.what());
        }
    }

private:
    std::shared_ptr<Transport> transport_;
    AdapterCapability capability_;
};

inline AdapterCapability mock_capability() { return {true, true, true}; }

// Deterministic adapter for tests and offline smoke runs.
class MockAdapter : public ChatAdapter {
public:
    explicit MockAdapter(MockConfig config = {})
        : ChatAdapter(std::make_shared<MockTransport>(config), mock_capability()) {}
};

} // namespace genaiops
