#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <semaphore>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

namespace tsrules::llm {

enum class BackendKind { Scripted, Http };

std::string_view to_string(BackendKind kind) noexcept;
std::optional<BackendKind> parse_backend_kind(std::string_view text) noexcept;

struct BackendConfig {
    BackendKind kind = BackendKind::Scripted;
    std::string name = "scripted";
    std::string endpoint;
    std::string model_id;
    double temperature = 0.0;
    unsigned max_retries = 3;
    std::chrono::milliseconds timeout{30000};
    std::chrono::milliseconds backoff{250};
    // Name of the environment variable holding a bearer token; never its value.
    std::string api_key_env;
    unsigned max_in_flight = 4;

    // Scripted backend only.
    std::uint64_t seed = 0;
    double label_noise = 0.0;
    std::size_t top_features = 2;
    std::size_t top_phrases = 10;

    friend bool operator==(const BackendConfig&, const BackendConfig&) = default;
};

// Throws Error(InvalidConfig).
void validate(const BackendConfig& cfg);

nlohmann::json to_json(const BackendConfig& cfg);
BackendConfig backend_config_from_json(const nlohmann::json& j);

class Backend {
public:
    explicit Backend(BackendConfig cfg);
    virtual ~Backend() = default;
    Backend(const Backend&) = delete;
    Backend& operator=(const Backend&) = delete;

    // Thread-safe; at most cfg.max_in_flight calls run at once.
    std::string complete(const std::string& prompt, std::span<const std::uint8_t> image = {});

    std::size_t calls() const noexcept { return calls_.load(); }
    const BackendConfig& config() const noexcept { return cfg_; }
    const std::string& name() const noexcept { return cfg_.name; }

protected:
    virtual std::string do_complete(const std::string& prompt, std::span<const std::uint8_t> image) = 0;

private:
    BackendConfig cfg_;
    std::atomic<std::size_t> calls_{0};
    std::counting_semaphore<1024> in_flight_;
};

std::unique_ptr<Backend> make_backend(const BackendConfig& cfg);

}  // namespace tsrules::llm
