#pragma once
// Live HTTP transport for OpenAI-compatible endpoints. Retries transient
// failures (connect errors, timeouts, 429, 5xx) with exponential backoff and
// full jitter; bounds concurrent in-flight requests.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <thread>

#include <httplib.h>

#include "genaiops/adapters.hpp"
#include "genaiops/errors.hpp"

namespace genaiops {

struct LiveOptions {
    int timeout_ms = 30000;
    int max_retries = 3;
    int backoff_base_ms = 250;
    double backoff_factor = 2.0;
    int backoff_cap_ms = 8000;
    bool jitter = true;
    int max_inflight = 4;
    std::function<void(int)> sleeper;  // test hook; defaults to real sleep
};

class LiveTransport : public Transport {
public:
    LiveTransport(std::string endpoint, LiveOptions options = {})
        : endpoint_(std::move(endpoint)), options_(options), inflight_(0) {
        if (endpoint_.rfind("http://", 0) != 0) {
            if (endpoint_.rfind("https://", 0) == 0)
                raise(ErrorCode::ConfigError,
                      "https endpoints require a TLS-enabled build; use an http proxy");
            raise(ErrorCode::ConfigError, "endpoint must be an http:// URL: " + endpoint_);
        }
        if (const char* key = std::getenv("GENAIOPS_API_KEY")) bearer_ = key;
    }

    WireResponse roundtrip(const WireRequest& request) override {
        InflightGuard guard(*this);
        std::string body = request.payload.dump();

        httplib::Client client(endpoint_);
        client.set_connection_timeout(0, options_.timeout_ms * 1000LL);
        client.set_read_timeout(options_.timeout_ms / 1000, (options_.timeout_ms % 1000) * 1000);
        client.set_write_timeout(options_.timeout_ms / 1000, (options_.timeout_ms % 1000) * 1000);
        httplib::Headers headers;
        if (!bearer_.empty()) headers.emplace("Authorization", "Bearer " + bearer_);

        int last_status = 0;
        std::string last_error = "connection failed";
        for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
            if (attempt > 0) sleep_backoff(attempt - 1);
            auto start = std::chrono::steady_clock::now();
            httplib::Result res = client.Post(request.path, headers, body, "application/json");
            long latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - start)
                               .count();
            if (!res) {
                auto err = res.error();
                bool timed_out = err == httplib::Error::ConnectionTimeout ||
                                 err == httplib::Error::Read || err == httplib::Error::Write;
                last_status = 0;
                last_error = timed_out ? "timeout" : httplib::to_string(err);
                if (attempt == options_.max_retries) {
                    if (timed_out)
                        raise(ErrorCode::Timeout, "request to " + request.path + " timed out after " +
                                                      std::to_string(attempt + 1) + " attempts");
                    raise(ErrorCode::EndpointError, "request failed: " + last_error);
                }
                continue;
            }
            int status = res->status;
            if (status >= 200 && status < 300) {
                json payload;
                try {
                    payload = json::parse(res->body);
                } catch (const json::exception& e) {
                    raise(ErrorCode::EndpointError,
                          std::string("endpoint returned invalid JSON: ") + e.what());
                }
                return {payload, latency};
            }
            last_status = status;
            last_error = res->body;
            bool retryable = status == 429 || status >= 500;
            if (!retryable || attempt == options_.max_retries) break;
        }
        raise(ErrorCode::EndpointError, "status " + std::to_string(last_status) + " from " +
                                            request.path + ": " + last_error);
    }

private:
    struct InflightGuard {
        explicit InflightGuard(LiveTransport& t) : t_(t) {
            std::unique_lock<std::mutex> lock(t_.mutex_);
            t_.cv_.wait(lock, [&] { return t_.inflight_ < t_.options_.max_inflight; });
            ++t_.inflight_;
        }
        ~InflightGuard() {
            {
                std::lock_guard<std::mutex> lock(t_.mutex_);
                --t_.inflight_;
            }
            t_.cv_.notify_one();
        }
        LiveTransport& t_;
    };

    void sleep_backoff(int attempt) {
        double delay = options_.backoff_base_ms * std::pow(options_.backoff_factor, attempt);
        delay = std::min(delay, double(options_.backoff_cap_ms));
        if (options_.jitter) {
            static thread_local std::mt19937_64 gen{std::random_device{}()};
            delay *= std::uniform_real_distribution<double>(0.0, 1.0)(gen);
        }
        int ms = int(delay);
        if (options_.sleeper) options_.sleeper(ms);
        else std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    }

    std::string endpoint_;
    LiveOptions options_;
    std::string bearer_;
    int inflight_;
    std::mutex mutex_;
    std::condition_variable cv_;
};

inline LiveOptions live_options_from_spec(const ModelSpec& spec) {
    LiveOptions o;
    o.timeout_ms = spec.timeout_ms;
    o.max_retries = spec.max_retries;
    return o;
}

} // namespace genaiops
