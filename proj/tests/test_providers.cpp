#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "metalake/errors.hpp"
#include "metalake/providers.hpp"

using namespace metalake;
using nlohmann::json;

static double norm(const std::vector<float>& v) {
    double s = 0;
    for (float x : v) s += double(x) * x;
    return std::sqrt(s);
}

TEST_CASE("local hash embedder is deterministic, unit-norm, order-insensitive") {
    LocalHashEmbedder e;
    CHECK(e.dims() == 256);
    auto a = e.embed("gold card amounts");
    auto b = e.embed("gold card amounts");
    CHECK(a == b);
    CHECK(a.size() == 256);
    CHECK(norm(a) == doctest::Approx(1.0).epsilon(1e-5));

    // bag-of-tokens: order and punctuation do not matter
    auto c = e.embed("amounts... CARD gold!");
    CHECK(cosine_distance(a, c) == doctest::Approx(0.0).epsilon(1e-6));

    // different token multiset, different vector
    auto d = e.embed("gold gold card amounts");
    CHECK(cosine_distance(a, d) > 1e-4);
}

TEST_CASE("embedder rejects token-free input") {
    LocalHashEmbedder e;
    CHECK_THROWS_AS(e.embed(""), EmptyText);
    CHECK_THROWS_AS(e.embed("!!! --- ..."), EmptyText);
}

TEST_CASE("cosine distance basics") {
    std::vector<float> x{1, 0, 0}, y{0, 1, 0};
    CHECK(cosine_distance(x, y) == doctest::Approx(1.0));
    CHECK(cosine_distance(x, x) == doctest::Approx(0.0));
    std::vector<float> z{1, 0};
    CHECK_THROWS_AS(cosine_distance(x, z), DimensionMismatch);
}

TEST_CASE("l2_normalize leaves zero vectors alone and scales others") {
    std::vector<float> v{3, 4};
    l2_normalize(v);
    CHECK(v[0] == doctest::Approx(0.6));
    CHECK(v[1] == doctest::Approx(0.8));
    std::vector<float> zero{0, 0};
    l2_normalize(zero);
    CHECK(zero == std::vector<float>{0, 0});
}

TEST_CASE("scripted provider serves fifo first, then keyed, then exhausts") {
    ScriptedGenerationProvider p;
    p.enqueue("first");
    p.enqueue("second");
    p.add_keyed("partition", "picked");
    GenerationRequest req;
    req.prompt = "anything";
    CHECK(p.generate(req) == "first");
    CHECK(p.generate(req) == "second");
    req.prompt = "pick a partition column";
    CHECK(p.generate(req) == "picked");
    CHECK(p.generate(req) == "picked");  // keyed responses are reusable
    req.prompt = "no match";
    CHECK_THROWS_AS(p.generate(req), ScriptExhausted);
    CHECK(p.prompts_seen().size() == 5);
}

TEST_CASE("default retry policy is pinned") {
    RetryPolicy r;
    CHECK(r.attempts == 3);
    CHECK(r.backoff_ms == std::vector<int>{1000, 2000, 4000});
}

namespace {

// In-process HTTP fixture for the remote providers.
struct TestServer {
    httplib::Server server;
    int port = 0;
    std::thread thread;

    void start() {
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~TestServer() {
        server.stop();
        if (thread.joinable()) thread.join();
    }
    std::string url(const std::string& path) {
        return "http://127.0.0.1:" + std::to_string(port) + path;
    }
};

}  // namespace

TEST_CASE("remote generation retries through failures and carries the bearer key") {
    TestServer ts;
    std::atomic<int> hits{0};
    std::string seen_auth, seen_body;
    ts.server.Post("/gen", [&](const httplib::Request& req, httplib::Response& res) {
        int n = ++hits;
        seen_auth = req.get_header_value("Authorization");
        seen_body = req.body;
        if (n < 3) {
            res.status = 500;
            return;
        }
        res.set_content(json{{"text", "reply"}}.dump(), "application/json");
    });
    ts.start();

    RetryPolicy fast;
    fast.backoff_ms = {10, 20, 40};
    RemoteGenerationProvider gen(ts.url("/gen"), "sekrit", fast);
    GenerationRequest req;
    req.prompt = "hello";
    req.max_output_tokens = 64;
    CHECK(gen.generate(req) == "reply");
    CHECK(hits == 3);
    CHECK(seen_auth == "Bearer sekrit");
    json body = json::parse(seen_body);
    CHECK(body["prompt"] == "hello");
    CHECK(body["max_tokens"] == 64);
    CHECK(body["temperature"] == 0.0);
}

TEST_CASE("remote generation gives up after the attempt budget") {
    TestServer ts;
    std::atomic<int> hits{0};
    ts.server.Post("/gen", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 503;
    });
    ts.start();

    RetryPolicy fast;
    fast.backoff_ms = {1, 2, 4};
    RemoteGenerationProvider gen(ts.url("/gen"), "", fast);
    CHECK_THROWS_AS(gen.generate({"p"}), ProviderUnavailable);
    CHECK(hits == 3);
}

TEST_CASE("malformed generation payload is a provider failure") {
    TestServer ts;
    ts.server.Post("/gen", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"unexpected\":true}", "application/json");
    });
    ts.start();
    RetryPolicy fast;
    fast.backoff_ms = {1, 2, 4};
    RemoteGenerationProvider gen(ts.url("/gen"), "", fast);
    CHECK_THROWS_AS(gen.generate({"p"}), ProviderUnavailable);
}

TEST_CASE("remote embeddings normalize and lock their dimension") {
    TestServer ts;
    std::atomic<int> hits{0};
    ts.server.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
        int n = ++hits;
        json body = json::parse(req.body);
        CHECK(body.contains("input"));
        if (n <= 2) {
            res.set_content(json{{"vector", {3.0, 4.0}}}.dump(), "application/json");
        } else {
            res.set_content(json{{"vector", {1.0, 2.0, 3.0}}}.dump(), "application/json");
        }
    });
    ts.start();

    RetryPolicy fast;
    fast.backoff_ms = {1, 2, 4};
    RemoteEmbeddingProvider emb(ts.url("/embed"), "", fast);
    CHECK(emb.dims() == 0);  // unknown until the first response
    auto v = emb.embed("text");
    REQUIRE(v.size() == 2);
    CHECK(v[0] == doctest::Approx(0.6));
    CHECK(v[1] == doctest::Approx(0.8));
    CHECK(emb.dims() == 2);
    CHECK(emb.embed("more").size() == 2);
    CHECK_THROWS_AS(emb.embed("dimension change"), DimensionMismatch);
    CHECK_THROWS_AS(emb.embed("   "), EmptyText);
}

TEST_CASE("env factories return null without endpoints") {
    unsetenv("METALAKE_LLM_ENDPOINT");
    unsetenv("METALAKE_EMBED_ENDPOINT");
    CHECK(generation_from_env() == nullptr);
    CHECK(embedding_from_env() == nullptr);
    setenv("METALAKE_LLM_ENDPOINT", "http://127.0.0.1:1/gen", 1);
    CHECK(generation_from_env() != nullptr);
    unsetenv("METALAKE_LLM_ENDPOINT");
}
