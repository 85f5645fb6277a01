#include "covjudge/provider.hpp"

#include <cmath>
#include <cstdlib>

namespace covjudge {

using nlohmann::json;

std::string_view to_string(ModelFamily family) {
    switch (family) {
        case ModelFamily::Gpt4Class: return "gpt4-class";
        case ModelFamily::Gpt5Class: return "gpt5-class";
        case ModelFamily::OpenWeight: return "open-weight";
        case ModelFamily::Mock: return "mock";
    }
    return "?";
}

std::string_view to_string(ReasoningEffort effort) {
    switch (effort) {
        case ReasoningEffort::None: return "none";
        case ReasoningEffort::Low: return "low";
        case ReasoningEffort::Medium: return "medium";
        case ReasoningEffort::High: return "high";
    }
    return "?";
}

std::optional<ModelFamily> parse_model_family(std::string_view text) {
    for (auto f : {ModelFamily::Gpt4Class, ModelFamily::Gpt5Class, ModelFamily::OpenWeight,
                   ModelFamily::Mock}) {
        if (to_string(f) == text) {
            return f;
        }
    }
    return std::nullopt;
}

std::optional<ReasoningEffort> parse_reasoning_effort(std::string_view text) {
    for (auto e : {ReasoningEffort::None, ReasoningEffort::Low, ReasoningEffort::Medium,
                   ReasoningEffort::High}) {
        if (to_string(e) == text) {
            return e;
        }
    }
    return std::nullopt;
}

bool family_accepts_reasoning_effort(ModelFamily family) {
    return family == ModelFamily::Gpt5Class || family == ModelFamily::OpenWeight;
}

std::string_view to_string(MockFailure failure) {
    switch (failure) {
        case MockFailure::Timeout: return "timeout";
        case MockFailure::RateLimited: return "rate_limited";
        case MockFailure::Transport: return "transport";
        case MockFailure::Server: return "server";
        case MockFailure::MalformedEnvelope: return "malformed_envelope";
        case MockFailure::MalformedJson: return "malformed_json";
        case MockFailure::MissingField: return "missing_field";
    }
    return "?";
}

std::optional<MockFailure> parse_mock_failure(std::string_view text) {
    for (auto f : {MockFailure::Timeout, MockFailure::RateLimited, MockFailure::Transport,
                   MockFailure::Server, MockFailure::MalformedEnvelope, MockFailure::MalformedJson,
                   MockFailure::MissingField}) {
        if (to_string(f) == text) {
            return f;
        }
    }
    return std::nullopt;
}

std::string_view to_string(ProviderErrorKind kind) {
    switch (kind) {
        case ProviderErrorKind::Timeout: return "timeout";
        case ProviderErrorKind::RateLimited: return "rate_limited";
        case ProviderErrorKind::Transport: return "transport";
        case ProviderErrorKind::Server: return "server";
        case ProviderErrorKind::MalformedEnvelope: return "malformed_envelope";
    }
    return "?";
}

void ModelConfig::validate() const {
    auto fail = [this](const std::string& what) {
        throw std::invalid_argument("model config '" + id + "': " + what);
    };
    if (id.empty()) {
        throw std::invalid_argument("model config: id is empty");
    }
    if (!(std::isfinite(prompt_rate) && prompt_rate >= 0.0) ||
        !(std::isfinite(completion_rate) && completion_rate >= 0.0)) {
        fail("pricing rates must be non-negative");
    }
    if (reasoning_effort == ReasoningEffort::None && family_accepts_reasoning_effort(family)) {
        fail("reasoning_effort 'none' is not valid for the " + std::string(to_string(family)) +
             " family");
    }
    if (request_deadline.count() <= 0) {
        fail("request deadline must be positive");
    }
    if (family == ModelFamily::Mock) {
        if (!(mock.failure_rate >= 0.0 && mock.failure_rate <= 1.0)) {
            fail("mock failure_rate must lie in [0, 1]");
        }
        double total = 0.0;
        for (const auto& [kind, weight] : mock.failure_kinds) {
            if (!(weight >= 0.0)) {
                fail("mock failure weights must be non-negative");
            }
            total += weight;
        }
        if (mock.failure_rate > 0.0 && total <= 0.0) {
            fail("mock failure_kinds must have positive total weight");
        }
        if (mock.prompt_tokens < 0 || mock.completion_tokens < 0 || mock.score_noise < 0) {
            fail("mock token counts and noise must be non-negative");
        }
        return;
    }
    if (model_name.empty() || endpoint.empty() || auth_env_var.empty()) {
        fail("model_name, endpoint and auth_env_var are required for live providers");
    }
}

std::optional<double> ModelConfig::effective_temperature() const {
    if (temperature) {
        return temperature;
    }
    if (family == ModelFamily::Gpt4Class) {
        return 0.0;
    }
    return std::nullopt;
}

json model_config_to_json(const ModelConfig& c) {
    json doc = {
        {"id", c.id},
        {"family", to_string(c.family)},
        {"model_name", c.model_name},
        {"reasoning_effort", to_string(c.reasoning_effort)},
        {"prompt_rate", c.prompt_rate},
        {"completion_rate", c.completion_rate},
        {"endpoint", c.endpoint},
        {"auth_env_var", c.auth_env_var},
        {"structured_output", c.structured_output},
        {"request_deadline_ms", c.request_deadline.count()},
    };
    if (c.temperature) {
        doc["temperature"] = *c.temperature;
    }
    if (c.family == ModelFamily::Mock) {
        json kinds = json::object();
        for (const auto& [kind, weight] : c.mock.failure_kinds) {
            kinds[std::string(to_string(kind))] = weight;
        }
        json mock = {
            {"failure_rate", c.mock.failure_rate},
            {"failure_kinds", kinds},
            {"prompt_tokens", c.mock.prompt_tokens},
            {"completion_tokens", c.mock.completion_tokens},
            {"score_noise", c.mock.score_noise},
        };
        if (c.mock.seed) {
            mock["seed"] = *c.mock.seed;
        }
        if (c.mock.retry_after) {
            mock["retry_after_ms"] = c.mock.retry_after->count();
        }
        doc["mock"] = mock;
    }
    return doc;
}

ModelConfig model_config_from_json(const json& doc) {
    if (!doc.is_object()) {
        throw std::invalid_argument("model config must be an object");
    }
    ModelConfig c;
    try {
        c.id = doc.at("id").get<std::string>();
        const auto family_name = doc.at("family").get<std::string>();
        const auto family = parse_model_family(family_name);
        if (!family) {
            throw std::invalid_argument("unknown model family '" + family_name + "'");
        }
        c.family = *family;
        c.model_name = doc.value("model_name", std::string());
        const auto effort_name = doc.value("reasoning_effort", std::string("none"));
        const auto effort = parse_reasoning_effort(effort_name);
        if (!effort) {
            throw std::invalid_argument("unknown reasoning effort '" + effort_name + "'");
        }
        c.reasoning_effort = *effort;
        c.prompt_rate = doc.at("prompt_rate").get<double>();
        c.completion_rate = doc.at("completion_rate").get<double>();
        c.endpoint = doc.value("endpoint", std::string());
        c.auth_env_var = doc.value("auth_env_var", std::string());
        if (const auto it = doc.find("temperature"); it != doc.end() && !it->is_null()) {
            c.temperature = it->get<double>();
        }
        c.structured_output = doc.value("structured_output", false);
        c.request_deadline = std::chrono::milliseconds(doc.value("request_deadline_ms", 120'000LL));
        if (const auto it = doc.find("mock"); it != doc.end()) {
            const auto& m = *it;
            if (const auto s = m.find("seed"); s != m.end()) {
                c.mock.seed = s->get<std::uint64_t>();
            }
            c.mock.failure_rate = m.value("failure_rate", 0.0);
            if (const auto k = m.find("failure_kinds"); k != m.end()) {
                c.mock.failure_kinds.clear();
                for (const auto& [name, weight] : k->items()) {
                    const auto kind = parse_mock_failure(name);
                    if (!kind) {
                        throw std::invalid_argument("unknown mock failure kind '" + name + "'");
                    }
                    c.mock.failure_kinds.emplace_back(*kind, weight.get<double>());
                }
            }
            c.mock.prompt_tokens = m.value("prompt_tokens", c.mock.prompt_tokens);
            c.mock.completion_tokens = m.value("completion_tokens", c.mock.completion_tokens);
            c.mock.score_noise = m.value("score_noise", 0);
            if (const auto r = m.find("retry_after_ms"); r != m.end()) {
                c.mock.retry_after = std::chrono::milliseconds(r->get<std::int64_t>());
            }
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("model config: ") + e.what());
    }
    c.validate();
    return c;
}

bool ChatRequest::valid() const {
    std::size_t systems = 0;
    std::size_t users = 0;
    for (const auto& m : messages) {
        (m.role == Role::System ? systems : users) += 1;
    }
    return systems == 1 && users >= 1;
}

json build_request_body(const ModelConfig& config, const ChatRequest& request) {
    json messages = json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", m.role == Role::System ? "system" : "user"},
                            {"content", m.content}});
    }
    json body = {{"model", config.model_name}, {"messages", messages}};
    if (family_accepts_reasoning_effort(config.family)) {
        const auto effort = request.reasoning_effort.value_or(config.reasoning_effort);
        if (effort != ReasoningEffort::None) {
            body["reasoning_effort"] = to_string(effort);
        }
    }
    if (const auto t = config.effective_temperature()) {
        body["temperature"] = *t;
    }
    if (request.structured_output || config.structured_output) {
        body["response_format"] = {{"type", "json_object"}};
    }
    return body;
}

CompletionResult parse_response_envelope(std::string_view body) {
    auto malformed = [&](std::string detail) {
        ProviderError err;
        err.kind = ProviderErrorKind::MalformedEnvelope;
        err.detail = std::move(detail);
        err.raw_body = std::string(body);
        return err;
    };
    const json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        return malformed("response body is not a JSON object");
    }
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    if (const auto usage = doc.find("usage"); usage != doc.end() && usage->is_object()) {
        const auto p = usage->find("prompt_tokens");
        const auto c = usage->find("completion_tokens");
        if (p != usage->end() && p->is_number_integer()) {
            prompt_tokens = p->get<std::int64_t>();
        }
        if (c != usage->end() && c->is_number_integer()) {
            completion_tokens = c->get<std::int64_t>();
        }
    }
    const auto choices = doc.find("choices");
    const json* content = nullptr;
    if (choices != doc.end() && choices->is_array() && !choices->empty()) {
        const auto& first = (*choices)[0];
        if (first.is_object()) {
            if (const auto msg = first.find("message"); msg != first.end() && msg->is_object()) {
                if (const auto ct = msg->find("content"); ct != msg->end()) {
                    content = &*ct;
                }
            }
        }
    }
    if (content == nullptr || !content->is_string() || content->get_ref<const std::string&>().empty()) {
        auto err = malformed("choices[0].message.content missing or empty");
        err.prompt_tokens = prompt_tokens;
        err.completion_tokens = completion_tokens;
        return err;
    }
    ChatResponse resp;
    resp.content = content->get<std::string>();
    resp.prompt_tokens = prompt_tokens;
    resp.completion_tokens = completion_tokens;
    return resp;
}

std::optional<std::chrono::milliseconds> parse_retry_after(std::string_view value) {
    const std::string text(value);
    char* end = nullptr;
    const double seconds = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || !std::isfinite(seconds) || seconds < 0.0) {
        return std::nullopt;
    }
    while (*end == ' ' || *end == '\t') {
        ++end;
    }
    if (*end != '\0') {
        return std::nullopt;
    }
    return std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(seconds * 1000.0)));
}

std::string resolve_auth(const ModelConfig& config) {
    if (config.auth_env_var.empty()) {
        throw ProviderAuthError("model config '" + config.id + "' names no auth environment variable");
    }
    const char* value = std::getenv(config.auth_env_var.c_str());
    if (value == nullptr || *value == '\0') {
        throw ProviderAuthError("environment variable " + config.auth_env_var + " for model config '" +
                                config.id + "' is not set");
    }
    return value;
}

}  // namespace covjudge
