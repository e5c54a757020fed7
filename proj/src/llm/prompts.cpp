#include "tsrules/llm/prompts.hpp"

#include "tsrules/prompts_embedded.hpp"

namespace tsrules::llm {

std::string_view task_name(Task task) noexcept {
    switch (task) {
        case Task::Label: return "label";
        case Task::Patterns: return "patterns";
        case Task::Prototype: return "prototype";
        case Task::Modify: return "modify";
        case Task::Taxonomy: return "taxonomy";
    }
    return "";
}

std::optional<Task> parse_task(std::string_view name) noexcept {
    for (const auto t : {Task::Label, Task::Patterns, Task::Prototype, Task::Modify, Task::Taxonomy}) {
        if (task_name(t) == name) return t;
    }
    return std::nullopt;
}

std::string_view prompt_template(Task task) noexcept {
    switch (task) {
        case Task::Label: return embedded::k_label;
        case Task::Patterns: return embedded::k_patterns;
        case Task::Prototype: return embedded::k_prototype;
        case Task::Modify: return embedded::k_modify;
        case Task::Taxonomy: return embedded::k_taxonomy;
    }
    return "";
}

std::string render(std::string_view tpl, const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(tpl.size());
    std::size_t i = 0;
    while (i < tpl.size()) {
        if (tpl[i] == '{') {
            const auto close = tpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                const auto it = vars.find(std::string(tpl.substr(i + 1, close - i - 1)));
                if (it != vars.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out += tpl[i++];
    }
    return out;
}

std::string build_prompt(Task task, const nlohmann::json& payload, std::map<std::string, std::string> vars) {
    vars["payload"] = payload.dump(2);
    return render(prompt_template(task), vars);
}

std::optional<PromptView> read_prompt(std::string_view prompt) {
    static constexpr std::string_view kHeader = "### task: ";
    const auto h = prompt.find(kHeader);
    if (h == std::string_view::npos) return std::nullopt;
    const auto start = h + kHeader.size();
    const auto end = prompt.find('\n', start);
    auto name = prompt.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    while (!name.empty() && (name.back() == '\r' || name.back() == ' ')) name.remove_suffix(1);
    const auto task = parse_task(name);
    if (!task) return std::nullopt;

    static constexpr std::string_view kOpen = "```json\n";
    const auto open = prompt.find(kOpen, start);
    if (open == std::string_view::npos) return PromptView{*task, nlohmann::json::object()};
    const auto body = open + kOpen.size();
    const auto close = prompt.find("\n```", body);
    if (close == std::string_view::npos) return std::nullopt;
    auto payload = nlohmann::json::parse(prompt.substr(body, close - body), nullptr, false);
    if (payload.is_discarded()) return std::nullopt;
    return PromptView{*task, std::move(payload)};
}

std::optional<nlohmann::json> first_json_object(std::string_view text) {
    for (std::size_t start = text.find('{'); start != std::string_view::npos; start = text.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (c == '\\') {
                    ++i;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}' && --depth == 0) {
                auto j = nlohmann::json::parse(text.substr(start, i - start + 1), nullptr, false);
                if (!j.is_discarded() && j.is_object()) return j;
                break;
            }
        }
    }
    return std::nullopt;
}

std::string_view grammar_text() noexcept {
    return R"grammar(rule     := clause (";" clause)*
clause   := "if" bexpr "then" "anomaly" ("as" STRING)?
bexpr    := bterm ("||" bterm)*
bterm    := bfac ("&&" bfac)*
bfac     := "!" bfac | "(" bexpr ")" | cmp
cmp      := aexpr (">=" | "<=" | ">" | "<" | "==" | "!=") aexpr
aexpr    := term (("+"|"-") term)*
term     := fac (("*"|"/") fac)*
fac      := NUMBER | "-" NUMBER | IDENT | "values" "[" SIGNED_INT "]"
          | IDENT "(" aexpr ("," aexpr)* ")" | "(" aexpr ")"
functions: ratio(a, b), abs(a))grammar";
}

}  // namespace tsrules::llm
