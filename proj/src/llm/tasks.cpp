#include "tsrules/llm/tasks.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <set>

#include "tsrules/error.hpp"
#include "tsrules/llm/prompts.hpp"
#include "tsrules/rule_parser.hpp"

namespace tsrules::llm {

namespace {

std::string lower_trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string feature_list() {
    std::string out;
    for (const auto f : kAllFeatures) {
        if (!out.empty()) out += ", ";
        out += feature_name(f);
    }
    return out;
}

// Rule text from a JSON "rule" field, else a fenced block, else the whole answer.
std::string extract_rule(const std::string& text) {
    if (const auto j = first_json_object(text); j && j->contains("rule") && (*j)["rule"].is_string()) {
        return (*j)["rule"].get<std::string>();
    }
    if (const auto open = text.find("```"); open != std::string::npos) {
        const auto body = text.find('\n', open);
        const auto close = body == std::string::npos ? std::string::npos : text.find("```", body);
        if (close != std::string::npos) return text.substr(body + 1, close - body - 1);
    }
    return text;
}

std::string extract_note(const std::string& text) {
    if (const auto j = first_json_object(text); j && j->contains("note") && (*j)["note"].is_string()) {
        return (*j)["note"].get<std::string>();
    }
    return {};
}

// Asks for a rule, feeding parse errors back until one parses.
Proposal ask_for_rule(Backend& backend, const std::string& prompt, ErrorCode give_up) {
    std::string feedback;
    std::string last_error;
    for (unsigned attempt = 0; attempt <= backend.config().max_retries; ++attempt) {
        const auto answer = backend.complete(prompt + feedback);
        const auto text = extract_rule(answer);
        try {
            return {rule::print(rule::parse(text)), extract_note(answer)};
        } catch (const ParseError& e) {
            last_error = e.what();
            feedback = "\n\nYour previous rule could not be parsed (" + last_error + "):\n" + text +
                       "\nReturn a corrected rule in the same JSON format.\n";
        }
    }
    throw Error(give_up, "no parseable rule after " + std::to_string(backend.config().max_retries + 1) +
                             " attempts; last error: " + last_error);
}

nlohmann::json trajectory_payload(const Trajectory* t) {
    auto out = nlohmann::json::array();
    if (!t) return out;
    for (const auto& e : *t) {
        nlohmann::json j = {{"iteration", e.iteration},
                            {"rule", e.rule_text},
                            {"f1", e.report.f1},
                            {"behavior", to_string(e.behavior)},
                            {"note", e.modification_note},
                            {"improved_current", e.improved_current},
                            {"improved_best", e.improved_best}};
        if (e.proposed_rule) j["proposed_rule"] = *e.proposed_rule;
        if (e.proposed_report) j["proposed_f1"] = e.proposed_report->f1;
        if (e.failure) j["failure"] = *e.failure;
        out.push_back(std::move(j));
    }
    return out;
}

}  // namespace

LabelResponse parse_label_response(std::string_view text) {
    const auto j = first_json_object(text);
    if (!j) throw Error(ErrorCode::NoStructuredObject, "label answer holds no JSON object");
    const auto it = j->find("label");
    if (it == j->end() || !it->is_string()) {
        throw Error(ErrorCode::InvalidLabelValue, "label field missing or not a string");
    }
    const auto label = parse_label(lower_trim(it->get<std::string>()));
    if (!label) throw Error(ErrorCode::InvalidLabelValue, "label must be anomaly or normal");
    const auto r = j->find("reason");
    if (r == j->end() || !r->is_string() || lower_trim(r->get<std::string>()).empty()) {
        throw Error(ErrorCode::EmptyReason, "label answer has no reason");
    }
    return {*label, r->get<std::string>()};
}

std::string label_prompt(const LabelRequest& request) {
    const nlohmann::json payload = {{"series_id", request.id},
                                    {"trial", request.trial},
                                    {"trials", request.trials},
                                    {"weeks", request.weeks}};
    return build_prompt(Task::Label, payload, {{"context", request.context}});
}

LabelResponse request_label(Backend& backend, const LabelRequest& request, std::span<const std::uint8_t> png) {
    return parse_label_response(backend.complete(label_prompt(request), png));
}

nlohmann::json to_json(const QualitativePatterns& p) {
    auto out = nlohmann::json::array();
    for (const auto& ph : p.phrases) out.push_back({{"phrase", ph.text}, {"support", ph.support}});
    return out;
}

QualitativePatterns extract_patterns(const Dataset& labeled, Backend& backend) {
    std::map<std::string, std::size_t> counts;
    for (const auto& r : labeled.records) {
        if (r.annotation && !lower_trim(r.annotation->reason).empty()) ++counts[r.annotation->reason];
    }
    if (counts.empty()) throw Error(ErrorCode::EmptyReasonCorpus, "no labeled record carries a reason");
    auto reasons = nlohmann::json::array();
    for (const auto& [text, n] : counts) reasons.push_back({{"text", text}, {"count", n}});
    const auto top_n = backend.config().top_phrases;
    const auto prompt = build_prompt(Task::Patterns, {{"reasons", reasons}, {"top_n", top_n}},
                                     {{"top_n", std::to_string(top_n)}});
    const auto j = first_json_object(backend.complete(prompt));
    if (!j) throw Error(ErrorCode::NoStructuredObject, "pattern answer holds no JSON object");
    const auto it = j->find("phrases");
    if (it == j->end() || !it->is_array()) throw Error(ErrorCode::MalformedResponse, "pattern answer has no phrases");
    QualitativePatterns out;
    for (const auto& p : *it) {
        if (!p.is_object() || !p.contains("phrase") || !p["phrase"].is_string()) continue;
        auto text = p["phrase"].get<std::string>();
        if (lower_trim(text).empty()) continue;
        std::size_t support = 0;
        if (p.contains("support") && p["support"].is_number()) {
            support = static_cast<std::size_t>(std::max(0.0, p["support"].get<double>()));
        }
        out.phrases.push_back({std::move(text), support});
    }
    return out;
}

std::string generate_prototype(const PrototypeRequest& request, Backend& backend) {
    const nlohmann::json payload = {{"patterns", to_json(request.patterns)},
                                    {"stats", to_json(request.stats)},
                                    {"window", request.features.window},
                                    {"candidate", request.candidate}};
    const auto prompt = build_prompt(Task::Prototype, payload,
                                     {{"grammar", std::string(grammar_text())},
                                      {"features", feature_list()},
                                      {"window", std::to_string(request.features.window)},
                                      {"candidate", std::to_string(request.candidate)}});
    return ask_for_rule(backend, prompt, ErrorCode::PrototypeUnparseable).rule_text;
}

Proposal propose_modification(const ModificationRequest& request, Backend& backend) {
    const nlohmann::json payload = {{"rule", request.rule_text},
                                    {"behavior", to_string(request.behavior)},
                                    {"report", to_json(request.report)},
                                    {"anomaly_rate", request.anomaly_rate},
                                    {"stats", to_json(request.stats)},
                                    {"trajectory", trajectory_payload(request.trajectory)}};
    const auto prompt = build_prompt(Task::Modify, payload,
                                     {{"grammar", std::string(grammar_text())},
                                      {"features", feature_list()},
                                      {"window", std::to_string(request.features.window)}});
    return ask_for_rule(backend, prompt, ErrorCode::ModificationUnparseable);
}

Taxonomy generate_taxonomy(const rule::RuleAst& ast, Backend& backend) {
    auto clauses = nlohmann::json::array();
    for (std::size_t i = 0; i < ast.clauses.size(); ++i) {
        clauses.push_back({{"index", i}, {"text", rule::print(ast.clauses[i])}});
    }
    const auto prompt = build_prompt(Task::Taxonomy, {{"rule", rule::print(ast)}, {"clauses", clauses}});
    const auto j = first_json_object(backend.complete(prompt));
    if (!j) throw Error(ErrorCode::NoStructuredObject, "taxonomy answer holds no JSON object");
    auto t = taxonomy_from_json(*j);
    for (std::size_t i = 0; i < ast.clauses.size(); ++i) {
        const auto a = t.assignment.find(i);
        if (a == t.assignment.end()) {
            throw Error(ErrorCode::MalformedResponse, "clause " + std::to_string(i) + " has no category");
        }
        if (!t.has_category(a->second)) {
            throw Error(ErrorCode::MalformedResponse, "clause " + std::to_string(i) + " names unknown category '" +
                                                          a->second + "'");
        }
    }
    std::erase_if(t.assignment, [&](const auto& kv) { return kv.first >= ast.clauses.size(); });
    return t;
}

}  // namespace tsrules::llm
