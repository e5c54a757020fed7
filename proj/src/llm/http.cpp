#include "tsrules/llm/http.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "tsrules/error.hpp"

namespace tsrules::llm {

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

Endpoint split_endpoint(const std::string& url) {
    const auto scheme = url.find("://");
    const auto from = scheme == std::string::npos ? 0 : scheme + 3;
    const auto slash = url.find('/', from);
    if (slash == std::string::npos) return {url, "/"};
    return {url.substr(0, slash), url.substr(slash)};
}

std::string text_of(const nlohmann::json& content) {
    if (content.is_string()) return content.get<std::string>();
    if (content.is_array()) {
        std::string out;
        for (const auto& part : content) {
            if (part.is_object() && part.contains("text") && part["text"].is_string()) {
                out += part["text"].get<std::string>();
            }
        }
        return out;
    }
    return {};
}

}  // namespace

HttpBackend::HttpBackend(BackendConfig cfg) : Backend(std::move(cfg)) {}

nlohmann::json HttpBackend::request_body(const std::string& prompt, std::span<const std::uint8_t> image) const {
    auto content = nlohmann::json::array();
    content.push_back({{"type", "text"}, {"text", prompt}});
    if (!image.empty()) {
        const std::string bytes(reinterpret_cast<const char*>(image.data()), image.size());
        content.push_back({{"type", "image_url"},
                           {"image_url", {{"url", "data:image/png;base64," + httplib::detail::base64_encode(bytes)}}}});
    }
    return {{"model", config().model_id},
            {"temperature", config().temperature},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", content}}})}};
}

std::string HttpBackend::response_text(const std::string& body) {
    const auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::MalformedResponse, "response body is not JSON");
    if (const auto c = j.find("choices"); c != j.end() && c->is_array() && !c->empty()) {
        const auto& first = (*c)[0];
        if (first.contains("message") && first["message"].contains("content")) {
            return text_of(first["message"]["content"]);
        }
        if (first.contains("text")) return text_of(first["text"]);
    }
    if (const auto c = j.find("content"); c != j.end()) return text_of(*c);
    throw Error(ErrorCode::MalformedResponse, "response has no completion text");
}

std::string HttpBackend::do_complete(const std::string& prompt, std::span<const std::uint8_t> image) {
    const auto& cfg = config();
    const auto ep = split_endpoint(cfg.endpoint);
    httplib::Client client(ep.origin);
    const auto secs = [](std::chrono::milliseconds ms) {
        return std::pair{static_cast<time_t>(ms.count() / 1000), static_cast<time_t>((ms.count() % 1000) * 1000)};
    };
    const auto [s, us] = secs(cfg.timeout);
    client.set_connection_timeout(s, us);
    client.set_read_timeout(s, us);
    client.set_write_timeout(s, us);

    httplib::Headers headers;
    if (!cfg.api_key_env.empty()) {
        if (const char* key = std::getenv(cfg.api_key_env.c_str()); key && *key) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }
    const auto body = request_body(prompt, image).dump();

    ErrorCode last = ErrorCode::TransportError;
    std::string detail;
    for (unsigned attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(cfg.backoff * (1u << std::min(attempt - 1, 10u)));
        const auto started = std::chrono::steady_clock::now();
        const auto res = client.Post(ep.path, headers, body, "application/json");
        if (!res) {
            const auto elapsed = std::chrono::steady_clock::now() - started;
            const auto err = res.error();
            last = err == httplib::Error::ConnectionTimeout || elapsed >= cfg.timeout ? ErrorCode::Timeout
                                                                                     : ErrorCode::TransportError;
            detail = httplib::to_string(err);
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last = ErrorCode::RetriesExhausted;
            detail = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            throw Error(ErrorCode::TransportError, cfg.endpoint + " answered HTTP " + std::to_string(res->status));
        }
        return response_text(res->body);
    }
    throw Error(last, cfg.endpoint + ": " + detail + " after " + std::to_string(cfg.max_retries + 1) + " attempts");
}

}  // namespace tsrules::llm
