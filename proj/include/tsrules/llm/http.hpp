#pragma once

#include "tsrules/llm/backend.hpp"

namespace tsrules::llm {

// Chat-completions style endpoint. Sends
// {model, temperature: 0, messages: [{role: "user", content: [text, image_url]}]}
// and reads the first choice's text. Retries transport failures, 429 and 5xx
// with exponential backoff.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(BackendConfig cfg);

    // Exposed for tests.
    nlohmann::json request_body(const std::string& prompt, std::span<const std::uint8_t> image) const;
    static std::string response_text(const std::string& body);

protected:
    std::string do_complete(const std::string& prompt, std::span<const std::uint8_t> image) override;
};

}  // namespace tsrules::llm
