#include "covjudge/judge.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <thread>

namespace covjudge {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& what) {
    throw VerdictError(VerdictErrorKind::Schema, what);
}

std::vector<std::string> string_list(const json& doc, const char* key) {
    const auto it = doc.find(key);
    if (it == doc.end()) {
        schema_error(std::string("missing required field '") + key + "'");
    }
    if (!it->is_array()) {
        schema_error(std::string("field '") + key + "' must be an array of strings");
    }
    std::vector<std::string> out;
    out.reserve(it->size());
    for (const auto& v : *it) {
        if (!v.is_string()) {
            schema_error(std::string("field '") + key + "' must be an array of strings");
        }
        out.push_back(v.get<std::string>());
    }
    return out;
}

// Index of the '}' closing the '{' at `open`, or npos.
std::size_t match_brace(std::string_view text, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = open; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) {
                return i;
            }
        }
    }
    return std::string_view::npos;
}

std::string_view fenced_body(std::string_view raw) {
    const auto open = raw.find("```");
    if (open == std::string_view::npos) {
        return raw;
    }
    auto body_start = raw.find('\n', open + 3);
    if (body_start == std::string_view::npos) {
        return raw.substr(open + 3);
    }
    ++body_start;
    const auto close = raw.find("```", body_start);
    if (close == std::string_view::npos) {
        return raw.substr(body_start);
    }
    return raw.substr(body_start, close - body_start);
}

AttemptStatus status_for(ProviderErrorKind kind) {
    switch (kind) {
        case ProviderErrorKind::Timeout: return AttemptStatus::Timeout;
        case ProviderErrorKind::RateLimited: return AttemptStatus::RateLimited;
        case ProviderErrorKind::Transport: return AttemptStatus::TransportError;
        case ProviderErrorKind::Server: return AttemptStatus::ServerError;
        case ProviderErrorKind::MalformedEnvelope: return AttemptStatus::ParseError;
    }
    return AttemptStatus::TransportError;
}

std::uint64_t key_hash(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::string_view to_string(AttemptStatus status) {
    switch (status) {
        case AttemptStatus::Success: return "success";
        case AttemptStatus::ParseError: return "parse_error";
        case AttemptStatus::SchemaError: return "schema_error";
        case AttemptStatus::Timeout: return "timeout";
        case AttemptStatus::RateLimited: return "rate_limited";
        case AttemptStatus::TransportError: return "transport_error";
        case AttemptStatus::ServerError: return "server_error";
    }
    return "?";
}

std::optional<AttemptStatus> parse_attempt_status(std::string_view text) {
    for (auto s : {AttemptStatus::Success, AttemptStatus::ParseError, AttemptStatus::SchemaError,
                   AttemptStatus::Timeout, AttemptStatus::RateLimited, AttemptStatus::TransportError,
                   AttemptStatus::ServerError}) {
        if (to_string(s) == text) {
            return s;
        }
    }
    return std::nullopt;
}

bool EvaluationRecord::consistent() const {
    if (attempts.empty() || run_index < 1) {
        return false;
    }
    for (std::size_t i = 0; i < attempts.size(); ++i) {
        if (attempts[i].index != static_cast<int>(i) + 1) {
            return false;
        }
        const bool is_last = i + 1 == attempts.size();
        if (attempts[i].status == AttemptStatus::Success && !is_last) {
            return false;
        }
    }
    const bool last_success = attempts.back().status == AttemptStatus::Success;
    return first_attempt_success == (attempts.front().status == AttemptStatus::Success) &&
           completed == verdict.has_value() && completed == last_success;
}

bool RetryPolicy::valid() const {
    return max_attempts >= 1 && backoff_base.count() >= 0 && backoff_multiplier >= 1.0 &&
           backoff_cap.count() >= 0 && !retry_on.contains(AttemptStatus::Success);
}

RetryPolicy RetryPolicy::unlimited() {
    RetryPolicy p;
    p.max_attempts = std::numeric_limits<int>::max();
    p.backoff_base = std::chrono::milliseconds(0);
    p.backoff_cap = std::chrono::milliseconds(0);
    return p;
}

VerdictError::VerdictError(VerdictErrorKind kind, const std::string& detail)
    : std::runtime_error((kind == VerdictErrorKind::Parse ? "parse_error: " : "schema_error: ") + detail),
      kind_(kind) {}

std::optional<std::string_view> extract_document(std::string_view raw) {
    const auto body = fenced_body(raw);
    const auto open = body.find('{');
    if (open == std::string_view::npos) {
        return std::nullopt;
    }
    const auto close = match_brace(body, open);
    if (close == std::string_view::npos) {
        return std::nullopt;
    }
    return body.substr(open, close - open + 1);
}

JudgeVerdict parse_verdict(std::string_view raw, const Rubric& rubric) {
    const auto candidate = extract_document(raw);
    if (!candidate) {
        throw VerdictError(VerdictErrorKind::Parse, "no balanced JSON object in output");
    }
    const json doc = json::parse(*candidate, nullptr, false);
    if (doc.is_discarded()) {
        throw VerdictError(VerdictErrorKind::Parse, "candidate document is not valid JSON");
    }
    if (!doc.is_object()) {
        schema_error("document is not an object");
    }

    JudgeVerdict v;
    const auto cov = doc.find("coverage_percentage");
    if (cov == doc.end()) {
        schema_error("missing required field 'coverage_percentage'");
    }
    if (!cov->is_number()) {
        schema_error("'coverage_percentage' must be a number");
    }
    v.coverage_percentage = cov->get<double>();
    if (!(v.coverage_percentage >= 0.0 && v.coverage_percentage <= 100.0)) {
        schema_error("'coverage_percentage' outside [0, 100]");
    }
    v.covered = string_list(doc, "covered");
    v.gaps = string_list(doc, "gaps");
    v.recommendations = string_list(doc, "recommendations");

    const auto flags = doc.find("rubric_flags");
    if (flags == doc.end()) {
        schema_error("missing required field 'rubric_flags'");
    }
    if (!flags->is_object()) {
        schema_error("'rubric_flags' must be an object");
    }
    for (const auto& [key, value] : flags->items()) {
        if (!rubric.has_key(key)) {
            schema_error("unknown rubric flag '" + key + "'");
        }
        if (!value.is_boolean()) {
            schema_error("rubric flag '" + key + "' must be a boolean");
        }
        v.rubric_flags[key] = value.get<bool>();
    }
    return v;
}

std::string utf8_prefix(std::string_view text, std::size_t limit) {
    std::size_t chars = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto c = static_cast<unsigned char>(text[i]);
        // Continuation bytes never start a character.
        if ((c & 0xC0) != 0x80) {
            if (chars == limit) {
                break;
            }
            ++chars;
        }
        ++i;
    }
    return std::string(text.substr(0, i));
}

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int next_attempt,
                                        std::mt19937_64& rng) {
    const double exponent = std::max(0, next_attempt - 2);
    double ceiling = static_cast<double>(policy.backoff_base.count()) *
                     std::pow(policy.backoff_multiplier, exponent);
    ceiling = std::min(ceiling, static_cast<double>(policy.backoff_cap.count()));
    return std::chrono::milliseconds(static_cast<std::int64_t>(unit_uniform(rng) * ceiling));
}

EvaluationRecord evaluate_item(Provider& provider, const ModelConfig& config, const CorpusItem& item,
                               const RetryPolicy& policy, int run_index, const JudgeOptions& options) {
    if (!policy.valid()) {
        throw std::invalid_argument("invalid retry policy");
    }
    const auto prompt = build_prompt(item, options.prompts);

    EvaluationRecord record;
    record.ticket_id = item.ticket.id;
    record.config_id = config.id;
    record.run_index = run_index;
    record.prompt_hash = prompt.digest();

    ChatRequest request;
    request.messages = {{Role::System, prompt.system_text}, {Role::User, prompt.user_text}};
    request.structured_output = config.structured_output;
    if (family_accepts_reasoning_effort(config.family)) {
        request.reasoning_effort = config.reasoning_effort;
    }
    const auto cell_key = item.ticket.id + "|" + config.id + "|" + std::to_string(run_index);
    std::mt19937_64 jitter(options.seed ^ key_hash(cell_key));

    for (int attempt = 1; attempt <= policy.max_attempts; ++attempt) {
        request.call_key = cell_key + "|" + std::to_string(attempt);
        const auto result = provider.complete(config, request);

        AttemptRecord rec;
        rec.index = attempt;
        std::optional<std::chrono::milliseconds> retry_after;
        if (const auto* resp = std::get_if<ChatResponse>(&result)) {
            rec.prompt_tokens = resp->prompt_tokens;
            rec.completion_tokens = resp->completion_tokens;
            rec.latency = resp->latency;
            rec.raw_excerpt = utf8_prefix(resp->content, kRawExcerptLimit);
            try {
                record.verdict = parse_verdict(resp->content, options.prompts.rubric);
                rec.status = AttemptStatus::Success;
            } catch (const VerdictError& e) {
                rec.status = e.kind() == VerdictErrorKind::Parse ? AttemptStatus::ParseError
                                                                 : AttemptStatus::SchemaError;
            }
        } else {
            const auto& err = std::get<ProviderError>(result);
            rec.status = status_for(err.kind);
            rec.prompt_tokens = err.prompt_tokens;
            rec.completion_tokens = err.completion_tokens;
            rec.latency = err.latency;
            rec.raw_excerpt = utf8_prefix(err.raw_body, kRawExcerptLimit);
            retry_after = err.retry_after;
        }
        const auto status = rec.status;
        record.attempts.push_back(std::move(rec));

        if (status == AttemptStatus::Success || !policy.retry_on.contains(status) ||
            attempt == policy.max_attempts) {
            break;
        }
        const auto delay = (status == AttemptStatus::RateLimited && retry_after)
                               ? *retry_after
                               : backoff_delay(policy, attempt + 1, jitter);
        if (delay.count() > 0) {
            if (options.sleep) {
                options.sleep(delay);
            } else {
                std::this_thread::sleep_for(delay);
            }
        }
    }

    record.completed = record.verdict.has_value();
    record.first_attempt_success = record.attempts.front().status == AttemptStatus::Success;
    return record;
}

}  // namespace covjudge
