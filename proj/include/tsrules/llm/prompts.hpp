#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace tsrules::llm {

enum class Task { Label, Patterns, Prototype, Modify, Taxonomy };

std::string_view task_name(Task task) noexcept;
std::optional<Task> parse_task(std::string_view name) noexcept;

// Template text shipped in prompts/<task>.txt.
std::string_view prompt_template(Task task) noexcept;

// Replaces {name} for every name in vars; other braces are left alone.
std::string render(std::string_view tpl, const std::map<std::string, std::string>& vars);

// Builds the prompt for a task; the payload lands in the trailing json block.
std::string build_prompt(Task task, const nlohmann::json& payload,
                         std::map<std::string, std::string> vars = {});

// The task header and json payload of a prompt built by build_prompt.
struct PromptView {
    Task task;
    nlohmann::json payload;
};
std::optional<PromptView> read_prompt(std::string_view prompt);

// First balanced {...} span in text that parses as a JSON object.
std::optional<nlohmann::json> first_json_object(std::string_view text);

// Rule grammar as shown to models.
std::string_view grammar_text() noexcept;

}  // namespace tsrules::llm
