#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include "tsrules/dataset.hpp"
#include "tsrules/error.hpp"
#include "tsrules/llm/backend.hpp"
#include "tsrules/llm/prompts.hpp"

namespace tsrules::llm {

// Deterministic stand-in for a model. Answers are a pure function of the
// prompt's task and payload, the image digest, the seed, and whatever was
// configured below before the first call.
class ScriptedBackend : public Backend {
public:
    explicit ScriptedBackend(BackendConfig cfg);

    // Labeling oracle: answers follow these annotations, flipped with
    // probability cfg.label_noise per (id, trial).
    void set_truth(const Dataset& labeled);
    void set_truth(std::string id, Annotation annotation);

    // Fixed answers for one (id, trial); they take precedence over the oracle.
    void script_label(const std::string& id, std::size_t trial, Label label, std::string reason);
    void script_failure(const std::string& id, std::size_t trial, ErrorCode code);

    // Replaces the built-in behavior for a task.
    using Handler = std::function<std::string(const PromptView&)>;
    void override_task(Task task, Handler handler);

protected:
    std::string do_complete(const std::string& prompt, std::span<const std::uint8_t> image) override;

private:
    struct Scripted {
        std::optional<std::pair<Label, std::string>> answer;
        std::optional<ErrorCode> failure;
    };

    std::map<std::string, Annotation> truth_;
    std::map<std::pair<std::string, std::size_t>, Scripted> scripts_;
    std::map<Task, Handler> overrides_;

    std::string answer_label(const nlohmann::json& payload, std::span<const std::uint8_t> image) const;
    std::string answer_patterns(const nlohmann::json& payload) const;
    std::string answer_prototype(const nlohmann::json& payload) const;
    std::string answer_modify(const nlohmann::json& payload) const;
    std::string answer_taxonomy(const nlohmann::json& payload) const;
};

}  // namespace tsrules::llm
