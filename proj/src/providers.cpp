#include "metalake/providers.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "metalake/errors.hpp"
#include "metalake/util.hpp"

namespace metalake {

using nlohmann::json;

void l2_normalize(std::vector<float>& v) {
    double sum = 0.0;
    for (float x : v) sum += static_cast<double>(x) * static_cast<double>(x);
    if (sum <= 0.0) return;
    double inv = 1.0 / std::sqrt(sum);
    for (float& x : v) x = static_cast<float>(static_cast<double>(x) * inv);
}

double cosine_distance(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) throw DimensionMismatch(std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    double dot = 0.0;
    for (size_t i = 0; i < a.size(); ++i) dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return 1.0 - dot;
}

std::vector<float> LocalHashEmbedder::embed(const std::string& text) {
    if (trim(text).empty()) throw EmptyText("embed input empty");
    auto tokens = tokenize(text);
    if (tokens.empty()) throw EmptyText("embed input has no tokens");
    std::vector<float> v(dims_, 0.0f);
    for (const auto& tok : tokens) {
        v[fnv1a64(tok) % dims_] += 1.0f;
    }
    l2_normalize(v);
    return v;
}

void ScriptedGenerationProvider::enqueue(std::string response) {
    std::lock_guard lock(mu_);
    fifo_.push_back(std::move(response));
}

void ScriptedGenerationProvider::add_keyed(std::string prompt_substring, std::string response) {
    std::lock_guard lock(mu_);
    keyed_.emplace_back(std::move(prompt_substring), std::move(response));
}

std::string ScriptedGenerationProvider::generate(const GenerationRequest& req) {
    std::lock_guard lock(mu_);
    prompts_.push_back(req.prompt);
    if (!fifo_.empty()) {
        std::string out = std::move(fifo_.front());
        fifo_.pop_front();
        return out;
    }
    for (const auto& [key, response] : keyed_) {
        if (req.prompt.find(key) != std::string::npos) return response;
    }
    throw ScriptExhausted("no scripted response left for prompt");
}

size_t ScriptedGenerationProvider::remaining() const {
    std::lock_guard lock(mu_);
    return fifo_.size();
}

namespace {

struct Endpoint {
    std::string base;  // scheme://host[:port]
    std::string path;  // /...
};

Endpoint split_endpoint(const std::string& url) {
    auto scheme_end = url.find("://");
    size_t path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

// One POST with the fixed retry schedule. Returns the response body.
std::string post_with_retry(const std::string& endpoint, const std::string& api_key,
                            const RetryPolicy& retry, const std::string& body) {
    Endpoint ep = split_endpoint(endpoint);
    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt < retry.attempts; ++attempt) {
        if (attempt > 0) {
            size_t i = static_cast<size_t>(attempt - 1);
            int ms = i < retry.backoff_ms.size() ? retry.backoff_ms[i] : retry.backoff_ms.back();
            std::this_thread::sleep_for(std::chrono::milliseconds(ms));
        }
        httplib::Client cli(ep.base);
        cli.set_connection_timeout(10, 0);
        cli.set_read_timeout(60, 0);
        httplib::Headers headers;
        if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
        auto res = cli.Post(ep.path, headers, body, "application/json");
        if (res && res->status < 400) return res->body;
        last_error = res ? "HTTP " + std::to_string(res->status)
                         : "transport error " + httplib::to_string(res.error());
    }
    throw ProviderUnavailable(endpoint + " after " + std::to_string(retry.attempts) +
                              " attempts: " + last_error);
}

}  // namespace

RemoteGenerationProvider::RemoteGenerationProvider(std::string endpoint, std::string api_key,
                                                   RetryPolicy retry)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), retry_(std::move(retry)) {}

std::string RemoteGenerationProvider::generate(const GenerationRequest& req) {
    json body = {{"prompt", req.prompt},
                 {"max_tokens", req.max_output_tokens},
                 {"temperature", req.temperature}};
    std::string response = post_with_retry(endpoint_, api_key_, retry_, body.dump());
    json j = json::parse(response, nullptr, false);
    if (j.is_discarded() || !j.contains("text")) {
        throw ProviderUnavailable("malformed generation response from " + endpoint_);
    }
    return j["text"].get<std::string>();
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(std::string endpoint, std::string api_key,
                                                 RetryPolicy retry)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), retry_(std::move(retry)) {}

std::vector<float> RemoteEmbeddingProvider::embed(const std::string& text) {
    if (trim(text).empty()) throw EmptyText("embed input empty");
    json body = {{"input", text}};
    std::string response = post_with_retry(endpoint_, api_key_, retry_, body.dump());
    json j = json::parse(response, nullptr, false);
    if (j.is_discarded() || !j.contains("vector") || !j["vector"].is_array()) {
        throw ProviderUnavailable("malformed embedding response from " + endpoint_);
    }
    std::vector<float> v = j["vector"].get<std::vector<float>>();
    {
        std::lock_guard lock(mu_);
        if (dims_ == 0) dims_ = v.size();
        if (v.size() != dims_) {
            throw DimensionMismatch(std::to_string(v.size()) + " vs " + std::to_string(dims_));
        }
    }
    l2_normalize(v);
    return v;
}

size_t RemoteEmbeddingProvider::dims() const {
    std::lock_guard lock(mu_);
    return dims_;
}

std::unique_ptr<GenerationProvider> generation_from_env() {
    const char* ep = std::getenv("METALAKE_LLM_ENDPOINT");
    if (!ep || !*ep) return nullptr;
    const char* key = std::getenv("METALAKE_LLM_KEY");
    return std::make_unique<RemoteGenerationProvider>(ep, key ? key : "");
}

std::unique_ptr<EmbeddingProvider> embedding_from_env() {
    const char* ep = std::getenv("METALAKE_EMBED_ENDPOINT");
    if (!ep || !*ep) return nullptr;
    const char* key = std::getenv("METALAKE_EMBED_KEY");
    return std::make_unique<RemoteEmbeddingProvider>(ep, key ? key : "");
}

}  // namespace metalake
