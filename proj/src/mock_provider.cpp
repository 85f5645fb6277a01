#include "covjudge/provider.hpp"

#include <atomic>
#include <chrono>
#include <mutex>

namespace covjudge {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

MockFailure pick_failure(const std::vector<std::pair<MockFailure, double>>& kinds,
                         std::mt19937_64& rng) {
    double total = 0.0;
    for (const auto& [_, w] : kinds) {
        total += w;
    }
    double u = unit_uniform(rng) * total;
    for (const auto& [kind, w] : kinds) {
        if (u < w) {
            return kind;
        }
        u -= w;
    }
    return kinds.back().first;
}

CompletionResult realize(MockFailure failure, std::int64_t prompt_tokens, std::int64_t completion_tokens,
                         const std::optional<std::chrono::milliseconds>& retry_after) {
    ProviderError err;
    switch (failure) {
        case MockFailure::Timeout:
            err.kind = ProviderErrorKind::Timeout;
            err.detail = "mock: simulated timeout";
            return err;
        case MockFailure::RateLimited:
            err.kind = ProviderErrorKind::RateLimited;
            err.detail = "mock: simulated rate limit";
            err.retry_after = retry_after;
            return err;
        case MockFailure::Transport:
            err.kind = ProviderErrorKind::Transport;
            err.detail = "mock: simulated connection reset";
            return err;
        case MockFailure::Server:
            err.kind = ProviderErrorKind::Server;
            err.detail = "mock: simulated HTTP 500";
            return err;
        case MockFailure::MalformedEnvelope:
            err.kind = ProviderErrorKind::MalformedEnvelope;
            err.detail = "mock: empty message content";
            err.prompt_tokens = prompt_tokens;
            return err;
        case MockFailure::MalformedJson:
            return ChatResponse{R"({"coverage_percentage": 80, "covered": ["happy path"], "gaps": [)",
                                prompt_tokens, completion_tokens, {}};
        case MockFailure::MissingField:
            return ChatResponse{
                R"({"covered": ["happy path"], "gaps": [], "recommendations": [], "rubric_flags": {}})",
                prompt_tokens, completion_tokens, {}};
    }
    err.detail = "mock: unknown failure";
    return err;
}

}  // namespace

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::string mock_verdict(double coverage) {
    nlohmann::ordered_json doc;
    doc["coverage_percentage"] = coverage;
    doc["covered"] = {"Successful request returns the expected resource"};
    doc["gaps"] = {"Missing negative authorization scenario"};
    doc["recommendations"] = {"Add a 401 scenario"};
    doc["rubric_flags"] = nlohmann::ordered_json::object();
    return doc.dump();
}

struct MockProvider::Counters {
    std::atomic<std::uint64_t> calls{0};
    std::mutex script_mutex;
    std::size_t script_pos = 0;
};

MockProvider::MockProvider(MockOptions options)
    : options_(std::move(options)), counters_(std::make_shared<Counters>()) {
    if (!(options_.failure_rate >= 0.0 && options_.failure_rate <= 1.0)) {
        throw std::invalid_argument("mock failure_rate must lie in [0, 1]");
    }
    if (options_.failure_kinds.empty()) {
        options_.failure_kinds = {{MockFailure::MalformedJson, 1.0}};
    }
}

std::uint64_t MockProvider::calls() const noexcept { return counters_->calls.load(); }

CompletionResult MockProvider::complete(const ModelConfig&, const ChatRequest& request) {
    const auto start = std::chrono::steady_clock::now();
    const auto index = counters_->calls.fetch_add(1);

    std::optional<MockStep> scripted;
    {
        std::lock_guard lock(counters_->script_mutex);
        if (counters_->script_pos < options_.script.size()) {
            scripted = options_.script[counters_->script_pos++];
        }
    }

    const std::uint64_t stream =
        request.call_key.empty() ? splitmix64(index) : fnv1a(request.call_key);
    std::mt19937_64 rng(splitmix64(options_.seed ^ splitmix64(stream)));

    auto finish = [&](CompletionResult r) {
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - start);
        std::visit([&](auto& v) { v.latency = elapsed; }, r);
        return r;
    };

    if (scripted) {
        if (scripted->failure) {
            return finish(realize(*scripted->failure, scripted->prompt_tokens,
                                  scripted->completion_tokens, options_.retry_after));
        }
        return finish(ChatResponse{scripted->content, scripted->prompt_tokens,
                                   scripted->completion_tokens, {}});
    }

    if (options_.failure_rate > 0.0 && unit_uniform(rng) < options_.failure_rate) {
        return finish(realize(pick_failure(options_.failure_kinds, rng), options_.prompt_tokens,
                              options_.completion_tokens, options_.retry_after));
    }
    std::string content = options_.responder ? options_.responder(request, rng) : mock_verdict(85);
    return finish(ChatResponse{std::move(content), options_.prompt_tokens,
                               options_.completion_tokens, {}});
}

std::shared_ptr<MockProvider> make_mock(MockOptions options) {
    return std::make_shared<MockProvider>(std::move(options));
}

}  // namespace covjudge
