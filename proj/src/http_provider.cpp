#include "covjudge/provider.hpp"

#include <httplib.h>

namespace covjudge {

namespace {

using Clock = std::chrono::steady_clock;

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;    // without trailing slash
};

Endpoint split_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = url.find('/', host_start);
    Endpoint ep;
    if (path_start == std::string::npos) {
        ep.origin = url;
    } else {
        ep.origin = url.substr(0, path_start);
        ep.path = url.substr(path_start);
    }
    while (!ep.path.empty() && ep.path.back() == '/') {
        ep.path.pop_back();
    }
    return ep;
}

ProviderError make_error(ProviderErrorKind kind, std::string detail) {
    ProviderError err;
    err.kind = kind;
    err.detail = std::move(detail);
    return err;
}

}  // namespace

CompletionResult HttpProvider::complete(const ModelConfig& config, const ChatRequest& request) {
    const auto token = resolve_auth(config);
    if (!request.valid()) {
        throw std::invalid_argument("chat request needs one system message and at least one user message");
    }
    const auto ep = split_endpoint(config.endpoint);
    httplib::Client client(ep.origin);
    const auto deadline = config.request_deadline;
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(deadline);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(deadline - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    client.set_bearer_token_auth(token);

    const auto body = build_request_body(config, request).dump();
    const auto start = Clock::now();
    bool deadline_hit = false;

    httplib::Request req;
    req.method = "POST";
    req.path = ep.path + "/chat/completions";
    req.body = body;
    req.set_header("Content-Type", "application/json");
    req.set_header("Accept", "application/json");
    // Aborts slow bodies that trickle in under the per-read timeout.
    req.progress = [&](std::uint64_t, std::uint64_t) {
        if (Clock::now() - start > deadline) {
            deadline_hit = true;
            return false;
        }
        return true;
    };

    const auto result = client.send(req);
    const auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start);

    if (!result) {
        const auto err = result.error();
        ProviderError out;
        if (deadline_hit || err == httplib::Error::ConnectionTimeout || latency >= deadline) {
            out = make_error(ProviderErrorKind::Timeout,
                             "request exceeded the " + std::to_string(deadline.count()) + " ms deadline");
        } else {
            out = make_error(ProviderErrorKind::Transport, httplib::to_string(err));
        }
        out.latency = latency;
        return out;
    }

    const auto& res = *result;
    if (res.status == 200) {
        auto parsed = parse_response_envelope(res.body);
        std::visit([&](auto& v) { v.latency = latency; }, parsed);
        return parsed;
    }

    ProviderError out;
    const auto excerpt = res.body.substr(0, 500);
    if (res.status == 429) {
        out = make_error(ProviderErrorKind::RateLimited, "HTTP 429: " + excerpt);
        if (res.has_header("Retry-After")) {
            out.retry_after = parse_retry_after(res.get_header_value("Retry-After"));
        }
    } else if (res.status == 408 || res.status == 504) {
        out = make_error(ProviderErrorKind::Timeout, "HTTP " + std::to_string(res.status) + ": " + excerpt);
    } else if (res.status >= 500) {
        out = make_error(ProviderErrorKind::Server, "HTTP " + std::to_string(res.status) + ": " + excerpt);
    } else {
        out = make_error(ProviderErrorKind::Transport, "HTTP " + std::to_string(res.status) + ": " + excerpt);
    }
    out.raw_body = res.body;
    out.latency = latency;
    return out;
}

}  // namespace covjudge
