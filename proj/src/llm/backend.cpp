#include "tsrules/llm/backend.hpp"

#include <algorithm>

#include "tsrules/error.hpp"
#include "tsrules/llm/http.hpp"
#include "tsrules/llm/scripted.hpp"

namespace tsrules::llm {

std::string_view to_string(BackendKind kind) noexcept {
    return kind == BackendKind::Http ? "http" : "scripted";
}

std::optional<BackendKind> parse_backend_kind(std::string_view text) noexcept {
    if (text == "scripted") return BackendKind::Scripted;
    if (text == "http") return BackendKind::Http;
    return std::nullopt;
}

void validate(const BackendConfig& cfg) {
    const auto bad = [&](const std::string& what) {
        throw Error(ErrorCode::InvalidConfig, "backend '" + cfg.name + "': " + what);
    };
    if (cfg.name.empty()) bad("name is empty");
    if (cfg.temperature != 0.0) bad("temperature must be 0");
    if (cfg.max_retries > 20) bad("max_retries above 20");
    if (cfg.max_in_flight == 0 || cfg.max_in_flight > 1024) bad("max_in_flight must lie in [1, 1024]");
    if (cfg.timeout.count() <= 0) bad("timeout must be positive");
    if (cfg.backoff.count() < 0) bad("backoff must be non-negative");
    if (!(cfg.label_noise >= 0.0 && cfg.label_noise <= 1.0)) bad("label_noise must lie in [0, 1]");
    if (cfg.top_features == 0) bad("top_features must be positive");
    if (cfg.top_phrases == 0) bad("top_phrases must be positive");
    if (cfg.kind == BackendKind::Http) {
        if (cfg.endpoint.empty()) bad("http backend needs an endpoint");
        if (cfg.model_id.empty()) bad("http backend needs a model_id");
    }
}

nlohmann::json to_json(const BackendConfig& cfg) {
    return {
        {"kind", to_string(cfg.kind)},
        {"name", cfg.name},
        {"endpoint", cfg.endpoint},
        {"model_id", cfg.model_id},
        {"temperature", cfg.temperature},
        {"max_retries", cfg.max_retries},
        {"timeout_ms", cfg.timeout.count()},
        {"backoff_ms", cfg.backoff.count()},
        {"api_key_env", cfg.api_key_env},
        {"max_in_flight", cfg.max_in_flight},
        {"seed", cfg.seed},
        {"label_noise", cfg.label_noise},
        {"top_features", cfg.top_features},
        {"top_phrases", cfg.top_phrases},
    };
}

BackendConfig backend_config_from_json(const nlohmann::json& j) {
    BackendConfig cfg;
    try {
        if (const auto it = j.find("kind"); it != j.end()) {
            const auto kind = parse_backend_kind(it->get<std::string>());
            if (!kind) throw Error(ErrorCode::InvalidConfig, "unknown backend kind " + it->dump());
            cfg.kind = *kind;
        }
        cfg.name = j.value("name", cfg.kind == BackendKind::Http ? std::string("http") : cfg.name);
        cfg.endpoint = j.value("endpoint", cfg.endpoint);
        cfg.model_id = j.value("model_id", cfg.model_id);
        cfg.temperature = j.value("temperature", cfg.temperature);
        cfg.max_retries = j.value("max_retries", cfg.max_retries);
        cfg.timeout = std::chrono::milliseconds(j.value("timeout_ms", cfg.timeout.count()));
        cfg.backoff = std::chrono::milliseconds(j.value("backoff_ms", cfg.backoff.count()));
        cfg.api_key_env = j.value("api_key_env", cfg.api_key_env);
        cfg.max_in_flight = j.value("max_in_flight", cfg.max_in_flight);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.label_noise = j.value("label_noise", cfg.label_noise);
        cfg.top_features = j.value("top_features", cfg.top_features);
        cfg.top_phrases = j.value("top_phrases", cfg.top_phrases);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("backend config: ") + e.what());
    }
    validate(cfg);
    return cfg;
}

Backend::Backend(BackendConfig cfg)
    : cfg_(std::move(cfg)), in_flight_(static_cast<std::ptrdiff_t>(std::clamp(cfg_.max_in_flight, 1u, 1024u))) {
    validate(cfg_);
}

std::string Backend::complete(const std::string& prompt, std::span<const std::uint8_t> image) {
    calls_.fetch_add(1);
    in_flight_.acquire();
    struct Release {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
    } release{in_flight_};
    return do_complete(prompt, image);
}

std::unique_ptr<Backend> make_backend(const BackendConfig& cfg) {
    if (cfg.kind == BackendKind::Http) return std::make_unique<HttpBackend>(cfg);
    return std::make_unique<ScriptedBackend>(cfg);
}

}  // namespace tsrules::llm
