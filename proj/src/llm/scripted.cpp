#include "tsrules/llm/scripted.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "tsrules/llm/policy.hpp"
#include "tsrules/rng.hpp"
#include "tsrules/rule_parser.hpp"

namespace tsrules::llm {

namespace {

constexpr std::string_view kToAnomaly = "current week looks higher than recent weeks";
constexpr std::string_view kToNormal = "current week is consistent with historical levels";

// Scripted answers come wrapped in a little prose, as real models tend to do.
std::string wrap(const nlohmann::json& j) { return "Here is my answer.\n" + j.dump() + "\n"; }

std::vector<std::string> words(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (const char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || ch == '-' || ch == '\'') {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

bool edge_word(const std::string& w) {
    static const std::set<std::string> stop = {"a",  "an",   "the",  "of", "in", "on", "to", "and",
                                               "or", "is",   "are",  "was", "were", "it", "its",
                                               "this", "that", "for", "at", "by", "be", "as", "from"};
    return stop.count(w) > 0;
}

std::vector<policy::Attempt> attempts_from(const nlohmann::json& trajectory) {
    std::vector<policy::Attempt> out;
    if (!trajectory.is_array()) return out;
    for (const auto& e : trajectory) {
        if (!e.is_object()) continue;
        out.push_back({e.value("rule", std::string{}), e.value("note", std::string{}),
                       e.value("improved_current", false)});
    }
    return out;
}

}  // namespace

ScriptedBackend::ScriptedBackend(BackendConfig cfg) : Backend(std::move(cfg)) {}

void ScriptedBackend::set_truth(const Dataset& labeled) {
    for (const auto& r : labeled.records) {
        if (r.annotation) truth_[r.sample.id] = *r.annotation;
    }
}

void ScriptedBackend::set_truth(std::string id, Annotation annotation) {
    truth_[std::move(id)] = std::move(annotation);
}

void ScriptedBackend::script_label(const std::string& id, std::size_t trial, Label label, std::string reason) {
    scripts_[{id, trial}].answer = std::pair{label, std::move(reason)};
}

void ScriptedBackend::script_failure(const std::string& id, std::size_t trial, ErrorCode code) {
    scripts_[{id, trial}].failure = code;
}

void ScriptedBackend::override_task(Task task, Handler handler) { overrides_[task] = std::move(handler); }

std::string ScriptedBackend::do_complete(const std::string& prompt, std::span<const std::uint8_t> image) {
    const auto view = read_prompt(prompt);
    if (!view) throw Error(ErrorCode::TransportError, "scripted backend: prompt has no task header or payload");
    if (const auto it = overrides_.find(view->task); it != overrides_.end()) return it->second(*view);
    switch (view->task) {
        case Task::Label: return answer_label(view->payload, image);
        case Task::Patterns: return answer_patterns(view->payload);
        case Task::Prototype: return answer_prototype(view->payload);
        case Task::Modify: return answer_modify(view->payload);
        case Task::Taxonomy: return answer_taxonomy(view->payload);
    }
    throw Error(ErrorCode::TransportError, "scripted backend: unknown task");
}

std::string ScriptedBackend::answer_label(const nlohmann::json& payload, std::span<const std::uint8_t> image) const {
    const auto id = payload.value("series_id", std::string{});
    const auto trial = payload.value("trial", std::size_t{1});
    if (const auto s = scripts_.find({id, trial}); s != scripts_.end()) {
        if (s->second.failure) {
            throw Error(*s->second.failure, "scripted failure for " + id + " trial " + std::to_string(trial));
        }
        if (s->second.answer) {
            return wrap({{"label", to_string(s->second.answer->first)}, {"reason", s->second.answer->second}});
        }
    }
    const auto t = truth_.find(id);
    if (t == truth_.end()) throw Error(ErrorCode::TransportError, "scripted backend has no answer for " + id);

    const std::string_view bytes(reinterpret_cast<const char*>(image.data()), image.size());
    std::uint64_t h = derive_seed(config().seed, fnv1a(name()));
    h = derive_seed(h, fnv1a(id));
    h = derive_seed(h, fnv1a(bytes));
    Rng rng(derive_seed(h, trial));
    Label label = t->second.label;
    std::string reason = t->second.reason;
    if (rng.uniform() < config().label_noise) {
        label = label == Label::Anomaly ? Label::Normal : Label::Anomaly;
        reason = label == Label::Anomaly ? kToAnomaly : kToNormal;
    }
    if (reason.empty()) reason = label == Label::Anomaly ? kToAnomaly : kToNormal;
    return wrap({{"label", to_string(label)}, {"reason", reason}});
}

std::string ScriptedBackend::answer_patterns(const nlohmann::json& payload) const {
    std::map<std::string, std::size_t> support;
    for (const auto& r : payload.value("reasons", nlohmann::json::array())) {
        const auto text = r.is_string() ? r.get<std::string>() : r.value("text", std::string{});
        const auto count = r.is_object() ? r.value("count", std::size_t{1}) : std::size_t{1};
        const auto w = words(text);
        std::set<std::string> seen;
        for (std::size_t n = 2; n <= 4; ++n) {
            for (std::size_t i = 0; i + n <= w.size(); ++i) {
                if (edge_word(w[i]) || edge_word(w[i + n - 1])) continue;
                std::string g = w[i];
                for (std::size_t k = 1; k < n; ++k) g += " " + w[i + k];
                if (seen.insert(g).second) support[g] += count;
            }
        }
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(support.begin(), support.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        const auto na = std::count(a.first.begin(), a.first.end(), ' ');
        const auto nb = std::count(b.first.begin(), b.first.end(), ' ');
        return na > nb;
    });
    const auto top = std::min(ranked.size(), payload.value("top_n", config().top_phrases));
    auto phrases = nlohmann::json::array();
    for (std::size_t i = 0; i < top; ++i) {
        phrases.push_back({{"phrase", ranked[i].first}, {"support", ranked[i].second}});
    }
    return wrap({{"phrases", phrases}});
}

std::string ScriptedBackend::answer_prototype(const nlohmann::json& payload) const {
    const auto stats = class_stats_from_json(payload.at("stats"));
    const auto candidate = payload.value("candidate", std::size_t{0});
    const auto ast = policy::prototype(stats, config().top_features, config().seed, candidate);
    return wrap({{"rule", rule::print(ast)},
                 {"note", "top " + std::to_string(ast.clauses.size()) + " separating features"}});
}

std::string ScriptedBackend::answer_modify(const nlohmann::json& payload) const {
    policy::ModifyInput in;
    in.rule_text = payload.at("rule").get<std::string>();
    in.rule = rule::parse(in.rule_text);
    in.rule_text = rule::print(in.rule);
    const auto behavior = parse_behavior(payload.at("behavior").get<std::string>());
    if (!behavior) throw Error(ErrorCode::MalformedResponse, "scripted backend: unknown behavior");
    in.behavior = *behavior;
    in.report = eval_report_from_json(payload.at("report"));
    in.stats = class_stats_from_json(payload.at("stats"));
    in.history = attempts_from(payload.value("trajectory", nlohmann::json::array()));
    in.top_features = config().top_features;
    in.seed = config().seed;
    const auto m = policy::modify(in);
    return wrap({{"rule", rule::print(m.rule)}, {"note", m.note}});
}

std::string ScriptedBackend::answer_taxonomy(const nlohmann::json& payload) const {
    const auto ast = rule::parse(payload.at("rule").get<std::string>());
    return wrap(to_json(policy::taxonomy(ast)));
}

}  // namespace tsrules::llm
