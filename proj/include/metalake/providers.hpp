#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace metalake {

struct GenerationRequest {
    std::string prompt;
    int max_output_tokens = 1024;
    double temperature = 0.0;
};

class GenerationProvider {
public:
    virtual ~GenerationProvider() = default;
    virtual std::string generate(const GenerationRequest& req) = 0;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    // Unit L2 norm. Throws EmptyText when the input has no tokens.
    virtual std::vector<float> embed(const std::string& text) = 0;
    virtual size_t dims() const = 0;
};

struct RetryPolicy {
    int attempts = 3;
    std::vector<int> backoff_ms = {1000, 2000, 4000};
};

// Pure function of the input: fixed 64-bit token hash into D buckets,
// term-frequency weights, L2-normalized. Identical across platforms.
class LocalHashEmbedder : public EmbeddingProvider {
public:
    explicit LocalHashEmbedder(size_t dims = 256) : dims_(dims) {}
    std::vector<float> embed(const std::string& text) override;
    size_t dims() const override { return dims_; }

private:
    size_t dims_;
};

// Deterministic test harness: FIFO responses are consumed once, keyed
// responses match any prompt containing the key and are reusable.
class ScriptedGenerationProvider : public GenerationProvider {
public:
    void enqueue(std::string response);
    void add_keyed(std::string prompt_substring, std::string response);
    std::string generate(const GenerationRequest& req) override;
    size_t remaining() const;
    const std::vector<std::string>& prompts_seen() const { return prompts_; }

private:
    mutable std::mutex mu_;
    std::deque<std::string> fifo_;
    std::vector<std::pair<std::string, std::string>> keyed_;
    std::vector<std::string> prompts_;
};

class RemoteGenerationProvider : public GenerationProvider {
public:
    RemoteGenerationProvider(std::string endpoint, std::string api_key,
                             RetryPolicy retry = {});
    std::string generate(const GenerationRequest& req) override;

private:
    std::string endpoint_;
    std::string api_key_;
    RetryPolicy retry_;
};

class RemoteEmbeddingProvider : public EmbeddingProvider {
public:
    RemoteEmbeddingProvider(std::string endpoint, std::string api_key,
                            RetryPolicy retry = {});
    std::vector<float> embed(const std::string& text) override;
    // 0 until the first response fixes the dimension.
    size_t dims() const override;

private:
    std::string endpoint_;
    std::string api_key_;
    RetryPolicy retry_;
    mutable std::mutex mu_;
    size_t dims_ = 0;
};

// Built from METALAKE_LLM_ENDPOINT / METALAKE_LLM_KEY when set.
std::unique_ptr<GenerationProvider> generation_from_env();
// Built from METALAKE_EMBED_ENDPOINT / METALAKE_EMBED_KEY when set.
std::unique_ptr<EmbeddingProvider> embedding_from_env();

void l2_normalize(std::vector<float>& v);
double cosine_distance(const std::vector<float>& a, const std::vector<float>& b);

}  // namespace metalake
