#pragma once

#include "covjudge/corpus.hpp"
#include "covjudge/prompt.hpp"
#include "covjudge/provider.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace covjudge {

struct JudgeVerdict {
    double coverage_percentage = 0.0;
    std::vector<std::string> covered;
    std::vector<std::string> gaps;
    std::vector<std::string> recommendations;
    std::map<std::string, bool> rubric_flags;

    bool operator==(const JudgeVerdict&) const = default;
};

enum class AttemptStatus {
    Success,
    ParseError,
    SchemaError,
    Timeout,
    RateLimited,
    TransportError,
    ServerError,
};

std::string_view to_string(AttemptStatus status);
std::optional<AttemptStatus> parse_attempt_status(std::string_view text);

inline constexpr std::size_t kRawExcerptLimit = 2000;  // characters, not bytes

struct AttemptRecord {
    int index = 1;  // 1-based
    AttemptStatus status = AttemptStatus::Success;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    std::chrono::milliseconds latency{0};
    std::string raw_excerpt;

    bool operator==(const AttemptRecord&) const = default;
};

struct EvaluationRecord {
    std::string ticket_id;
    std::string config_id;
    int run_index = 1;  // 1-based
    std::string prompt_hash;
    std::vector<AttemptRecord> attempts;
    std::optional<JudgeVerdict> verdict;
    bool first_attempt_success = false;
    bool completed = false;

    bool operator==(const EvaluationRecord&) const = default;
    /// Checks the attempt-history invariants (non-empty, single trailing
    /// success, flags consistent with the attempts and verdict).
    bool consistent() const;
};

struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds backoff_base{1000};
    double backoff_multiplier = 2.0;
    std::chrono::milliseconds backoff_cap{60'000};
    std::set<AttemptStatus> retry_on{AttemptStatus::ParseError,    AttemptStatus::SchemaError,
                                     AttemptStatus::Timeout,       AttemptStatus::RateLimited,
                                     AttemptStatus::TransportError, AttemptStatus::ServerError};

    /// max_attempts >= 1, non-negative backoff, success never retried.
    bool valid() const;
    /// Retries every failure with no cap and no backoff; for simulation.
    static RetryPolicy unlimited();
};

enum class VerdictErrorKind { Parse, Schema };

class VerdictError : public std::runtime_error {
public:
    VerdictError(VerdictErrorKind kind, const std::string& detail);
    VerdictErrorKind kind() const noexcept { return kind_; }

private:
    VerdictErrorKind kind_;
};

/// Locates the first candidate document in model output: the content of the
/// first fenced code block if there is one, otherwise the whole text; within
/// it, the outermost balanced {...} starting at the first '{'. String
/// literals and escapes are respected while balancing.
std::optional<std::string_view> extract_document(std::string_view raw);

/// One extraction pass, no repair. Throws VerdictError{Parse} when no
/// well-formed document is found and VerdictError{Schema} on missing or
/// mistyped fields, coverage outside [0, 100], or unknown rubric flag keys.
JudgeVerdict parse_verdict(std::string_view raw, const Rubric& rubric);

/// Truncates to at most `limit` UTF-8 code points.
std::string utf8_prefix(std::string_view text, std::size_t limit);

using Sleeper = std::function<void(std::chrono::milliseconds)>;

struct JudgeOptions {
    PromptConfig prompts;
    Sleeper sleep;            // defaults to std::this_thread::sleep_for
    std::uint64_t seed = 0;   // backoff jitter
};

/// Runs the attempt loop for one (item, config, run) cell. Never throws for
/// provider or verdict failures; exhaustion yields completed == false.
EvaluationRecord evaluate_item(Provider& provider, const ModelConfig& config, const CorpusItem& item,
                               const RetryPolicy& policy, int run_index,
                               const JudgeOptions& options = {});

/// Delay before attempt `next_attempt` (>= 2): full jitter over
/// min(cap, base * multiplier^(next_attempt - 2)).
std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int next_attempt,
                                        std::mt19937_64& rng);

}  // namespace covjudge
