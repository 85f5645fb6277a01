#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace covjudge {

enum class ModelFamily { Gpt4Class, Gpt5Class, OpenWeight, Mock };
enum class ReasoningEffort { None, Low, Medium, High };

std::string_view to_string(ModelFamily family);
std::string_view to_string(ReasoningEffort effort);
std::optional<ModelFamily> parse_model_family(std::string_view text);
std::optional<ReasoningEffort> parse_reasoning_effort(std::string_view text);

/// Only GPT-5 class and open-weight endpoints accept a reasoning-effort field.
bool family_accepts_reasoning_effort(ModelFamily family);

/// Failure modes the mock can inject. The first five surface as ProviderError;
/// MalformedJson and MissingField return a normal response whose content
/// fails verdict validation.
enum class MockFailure {
    Timeout,
    RateLimited,
    Transport,
    Server,
    MalformedEnvelope,
    MalformedJson,
    MissingField,
};

std::string_view to_string(MockFailure failure);
std::optional<MockFailure> parse_mock_failure(std::string_view text);

/// Simulation parameters for family == mock.
struct MockSettings {
    std::optional<std::uint64_t> seed;  // falls back to the run seed
    double failure_rate = 0.0;
    std::vector<std::pair<MockFailure, double>> failure_kinds{{MockFailure::MalformedJson, 1.0}};
    std::int64_t prompt_tokens = 1200;
    std::int64_t completion_tokens = 350;
    // Maximum absolute error (integer points) added to the ground truth by the
    // simulated judge; 0 reproduces the annotation exactly.
    int score_noise = 0;
    std::optional<std::chrono::milliseconds> retry_after;
};

struct ModelConfig {
    std::string id;
    ModelFamily family = ModelFamily::Mock;
    std::string model_name;
    ReasoningEffort reasoning_effort = ReasoningEffort::None;
    double prompt_rate = 0.0;      // USD per million prompt tokens
    double completion_rate = 0.0;  // USD per million completion tokens
    std::string endpoint;
    std::string auth_env_var;
    std::optional<double> temperature;  // overrides the family default
    bool structured_output = false;     // request JSON mode on the wire
    std::chrono::milliseconds request_deadline{120'000};
    MockSettings mock;

    /// Throws std::invalid_argument when an invariant is violated.
    void validate() const;
    /// Temperature actually sent: the override, else 0 for GPT-4 class and
    /// nothing for reasoning families.
    std::optional<double> effective_temperature() const;
};

nlohmann::json model_config_to_json(const ModelConfig& config);
/// Throws std::invalid_argument on unknown enum values or invalid fields.
ModelConfig model_config_from_json(const nlohmann::json& doc);

enum class Role { System, User };

struct ChatMessage {
    Role role = Role::User;
    std::string content;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    bool structured_output = false;
    std::optional<ReasoningEffort> reasoning_effort;
    // Opaque correlation id. Never sent on the wire; the mock derives its
    // random stream from it so outcomes do not depend on scheduling order.
    std::string call_key;

    /// Exactly one system message and at least one user message.
    bool valid() const;
};

struct ChatResponse {
    std::string content;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    std::chrono::milliseconds latency{0};
};

enum class ProviderErrorKind { Timeout, RateLimited, Transport, Server, MalformedEnvelope };

std::string_view to_string(ProviderErrorKind kind);

struct ProviderError {
    ProviderErrorKind kind = ProviderErrorKind::Transport;
    std::string detail;
    std::optional<std::chrono::milliseconds> retry_after;
    // Usage the endpoint reported alongside the failure, if any.
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    std::string raw_body;
    std::chrono::milliseconds latency{0};
};

using CompletionResult = std::variant<ChatResponse, ProviderError>;

/// Raised before any network activity when a live config's secret is unset.
class ProviderAuthError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Provider {
public:
    virtual ~Provider() = default;
    /// Must be safe to call concurrently.
    virtual CompletionResult complete(const ModelConfig& config, const ChatRequest& request) = 0;
};

/// OpenAI-compatible chat-completions request body for `config`.
nlohmann::json build_request_body(const ModelConfig& config, const ChatRequest& request);

/// Interprets a 200 response body: choices[0].message.content and the usage block.
CompletionResult parse_response_envelope(std::string_view body);

/// Parses a Retry-After header value given in (possibly fractional) seconds.
std::optional<std::chrono::milliseconds> parse_retry_after(std::string_view value);

/// Returns the bearer secret for `config`; throws ProviderAuthError when the
/// named environment variable is unset or empty.
std::string resolve_auth(const ModelConfig& config);

/// POSTs to `<endpoint>/chat/completions` with a bearer token.
class HttpProvider final : public Provider {
public:
    CompletionResult complete(const ModelConfig& config, const ChatRequest& request) override;
};

/// One scripted mock outcome: a failure, or a response with explicit content
/// and usage.
struct MockStep {
    std::optional<MockFailure> failure;
    std::string content;
    std::int64_t prompt_tokens = 1200;
    std::int64_t completion_tokens = 350;
};

/// Produces verdict text for a successful mock call.
using MockResponder = std::function<std::string(const ChatRequest&, std::mt19937_64&)>;

struct MockOptions {
    std::vector<MockStep> script;
    std::uint64_t seed = 0;
    double failure_rate = 0.0;
    std::vector<std::pair<MockFailure, double>> failure_kinds{{MockFailure::MalformedJson, 1.0}};
    std::int64_t prompt_tokens = 1200;
    std::int64_t completion_tokens = 350;
    std::optional<std::chrono::milliseconds> retry_after;
    MockResponder responder;  // defaults to a fixed 85% verdict
};

/// Deterministic offline provider. Scripted steps are consumed first, in call
/// order. Afterwards each call fails independently with probability
/// failure_rate, drawn from a generator seeded by (seed, call_key) or, for
/// requests without a call_key, by (seed, call index).
class MockProvider final : public Provider {
public:
    explicit MockProvider(MockOptions options);

    CompletionResult complete(const ModelConfig& config, const ChatRequest& request) override;
    std::uint64_t calls() const noexcept;

private:
    MockOptions options_;
    struct Counters;
    std::shared_ptr<Counters> counters_;
};

std::shared_ptr<MockProvider> make_mock(MockOptions options);

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
double unit_uniform(std::mt19937_64& rng);

/// Verdict document with the given coverage and one entry per list.
std::string mock_verdict(double coverage);

}  // namespace covjudge
