#include "tsrules/labeling.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "tsrules/chart.hpp"
#include "tsrules/error.hpp"
#include "tsrules/io.hpp"
#include "tsrules/llm/tasks.hpp"
#include "tsrules/parallel.hpp"
#include "tsrules/rule_eval.hpp"
#include "tsrules/rule_parser.hpp"

namespace tsrules {

void validate(const ConsensusConfig& cfg) {
    if (cfg.trials_per_model == 0 || cfg.trials_per_model % 2 == 0) {
        throw Error(ErrorCode::InvalidConfig, "trials_per_model must be odd and positive");
    }
    if (cfg.prefilter) {
        try {
            rule::parse(*cfg.prefilter);
        } catch (const ParseError& e) {
            throw Error(ErrorCode::InvalidConfig, std::string("prefilter does not parse: ") + e.what());
        }
    }
}

nlohmann::json to_json(const ConsensusConfig& cfg) {
    nlohmann::json j = {{"trials_per_model", cfg.trials_per_model},
                        {"context_prompt", cfg.context_prompt},
                        {"features", to_json(cfg.features)}};
    j["prefilter"] = cfg.prefilter ? nlohmann::json(*cfg.prefilter) : nlohmann::json(nullptr);
    return j;
}

ConsensusConfig consensus_config_from_json(const nlohmann::json& j) {
    try {
        ConsensusConfig c;
        c.trials_per_model = j.value("trials_per_model", c.trials_per_model);
        if (j.contains("prefilter") && !j["prefilter"].is_null()) c.prefilter = j["prefilter"].get<std::string>();
        c.context_prompt = j.value("context_prompt", c.context_prompt);
        if (j.contains("features")) c.features = feature_config_from_json(j["features"]);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("consensus config: ") + e.what());
    }
}

std::string_view to_string(ConsensusStatus s) noexcept {
    switch (s) {
        case ConsensusStatus::Accepted: return "Accepted";
        case ConsensusStatus::Disagreement: return "Disagreement";
        case ConsensusStatus::Prefiltered: return "Prefiltered";
        case ConsensusStatus::BackendFailure: return "BackendFailure";
    }
    return "";
}

namespace {

std::optional<ConsensusStatus> parse_status(std::string_view s) {
    for (const auto v : {ConsensusStatus::Accepted, ConsensusStatus::Disagreement, ConsensusStatus::Prefiltered,
                         ConsensusStatus::BackendFailure}) {
        if (to_string(v) == s) return v;
    }
    return std::nullopt;
}

nlohmann::json vote_json(const Vote& v) {
    nlohmann::json j = {{"backend", v.backend}, {"trial", v.trial}};
    if (v.label) j["label"] = to_string(*v.label);
    if (!v.reason.empty()) j["reason"] = v.reason;
    if (v.failure) j["failure"] = to_string(*v.failure);
    return j;
}

Vote vote_from_json(const nlohmann::json& j) {
    Vote v;
    v.backend = j.at("backend").get<std::string>();
    v.trial = j.at("trial").get<std::size_t>();
    if (j.contains("label")) {
        v.label = parse_label(j["label"].get<std::string>());
        if (!v.label) throw Error(ErrorCode::MalformedRecord, "vote label must be anomaly or normal");
    }
    v.reason = j.value("reason", std::string{});
    if (j.contains("failure")) {
        v.failure = parse_error_code(j["failure"].get<std::string>());
        if (!v.failure) throw Error(ErrorCode::MalformedRecord, "unknown failure code in vote");
    }
    return v;
}

}  // namespace

std::optional<Label> majority(const std::vector<Vote>& votes) {
    std::size_t a = 0, n = 0;
    for (const auto& v : votes) {
        if (!v.label) continue;
        (*v.label == Label::Anomaly ? a : n) += 1;
    }
    if (a == n) return std::nullopt;
    return a > n ? Label::Anomaly : Label::Normal;
}

ConsensusOutcome consensus_label(const TimeSeriesSample& sample, const ConsensusConfig& cfg,
                                 const std::vector<llm::Backend*>& backends) {
    ConsensusOutcome out;
    if (cfg.prefilter) {
        const auto d = rule::evaluate(rule::parse(*cfg.prefilter), sample, cfg.features);
        if (d.is_anomaly) {
            out.status = ConsensusStatus::Prefiltered;
            out.label = Label::Anomaly;
            out.reason = "prefilter";
            return out;
        }
    }
    if (backends.empty()) throw Error(ErrorCode::InvalidConfig, "consensus labeling needs at least one backend");

    const auto png = render_chart(sample);
    bool any_failed_backend = false;
    for (auto* b : backends) {
        std::vector<Vote> mine;
        for (std::size_t t = 1; t <= cfg.trials_per_model; ++t) {
            Vote v{b->name(), t, std::nullopt, {}, std::nullopt};
            try {
                const auto r = llm::request_label(
                    *b, {sample.id, t, cfg.trials_per_model, sample.values.size(), cfg.context_prompt}, png);
                v.label = r.label;
                v.reason = r.reason;
            } catch (const Error& e) {
                v.failure = e.code();
            }
            mine.push_back(std::move(v));
        }
        any_failed_backend |= std::none_of(mine.begin(), mine.end(), [](const Vote& v) { return v.label.has_value(); });
        out.majorities.push_back(majority(mine));
        out.votes.insert(out.votes.end(), mine.begin(), mine.end());
    }

    if (any_failed_backend) {
        out.status = ConsensusStatus::BackendFailure;
        return out;
    }
    const auto first = out.majorities.front();
    const bool unanimous = first && std::all_of(out.majorities.begin(), out.majorities.end(),
                                                [&](const std::optional<Label>& m) { return m == first; });
    if (!unanimous) {
        out.status = ConsensusStatus::Disagreement;
        return out;
    }
    out.status = ConsensusStatus::Accepted;
    out.label = first;
    for (const auto& v : out.votes) {
        if (v.label == first) {
            out.reason = v.reason;
            break;
        }
    }
    return out;
}

nlohmann::json to_json(const DisagreementEntry& e) {
    auto votes = nlohmann::json::array();
    for (const auto& v : e.votes) votes.push_back(vote_json(v));
    return {{"id", e.id}, {"status", to_string(e.status)}, {"votes", votes}, {"chart_path", e.chart_path}};
}

DisagreementEntry disagreement_from_json(const nlohmann::json& j) {
    try {
        DisagreementEntry e;
        e.id = j.at("id").get<std::string>();
        const auto status = parse_status(j.value("status", std::string("Disagreement")));
        if (!status) throw Error(ErrorCode::MalformedRecord, "unknown status");
        e.status = *status;
        for (const auto& v : j.at("votes")) e.votes.push_back(vote_from_json(v));
        e.chart_path = j.value("chart_path", std::string{});
        return e;
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::MalformedRecord, std::string("disagreement entry: ") + ex.what());
    }
}

std::string dump_disagreements(const std::vector<DisagreementEntry>& report) {
    std::string out;
    for (const auto& e : report) out += to_json(e).dump() + "\n";
    return out;
}

std::vector<DisagreementEntry> parse_disagreements(std::string_view jsonl) {
    std::vector<DisagreementEntry> out;
    std::istringstream in{std::string(jsonl)};
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw Error(ErrorCode::MalformedRecord, "report line " + std::to_string(n) + " is not JSON");
        out.push_back(disagreement_from_json(j));
    }
    return out;
}

std::string chart_file_name(std::string_view id) {
    std::string out;
    for (const char c : id) {
        const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
        out += ok ? c : '_';
    }
    if (out.empty() || out.front() == '.') out.insert(out.begin(), '_');
    return out + ".png";
}

LabelingResult label_dataset(const Dataset& input, const ConsensusConfig& cfg,
                             const std::vector<llm::Backend*>& backends, const LabelingOptions& options) {
    validate(cfg);
    LabelingResult res;
    res.outcomes.resize(input.size());
    parallel_for(input.size(), options.jobs, [&](std::size_t i) {
        res.outcomes[i] = consensus_label(input.records[i].sample, cfg, backends);
    });

    res.labeled.schema_version = input.schema_version;
    for (std::size_t i = 0; i < input.size(); ++i) {
        const auto& o = res.outcomes[i];
        const auto& sample = input.records[i].sample;
        if (o.status == ConsensusStatus::Accepted || o.status == ConsensusStatus::Prefiltered) {
            Record r{sample, Annotation{*o.label, o.reason.value_or(""),
                                        o.status == ConsensusStatus::Accepted ? Provenance::LLMConsensus
                                                                              : Provenance::PreFilter}};
            res.labeled.records.push_back(std::move(r));
            continue;
        }
        DisagreementEntry e{sample.id, o.status, o.votes, {}};
        if (options.chart_dir) {
            const auto path = *options.chart_dir / chart_file_name(sample.id);
            write_file(path, render_chart(sample));
            e.chart_path = path.string();
        }
        res.report.push_back(std::move(e));
    }
    return res;
}

Dataset apply_overrides(const Dataset& labeled, std::string_view overrides_jsonl, const Dataset* pool) {
    Dataset out = labeled;
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < out.size(); ++i) index[out.records[i].sample.id] = i;
    std::map<std::string, const Record*> extra;
    if (pool) {
        for (const auto& r : pool->records) extra[r.sample.id] = &r;
    }

    std::istringstream in{std::string(overrides_jsonl)};
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto where = "override line " + std::to_string(n);
        const auto j = nlohmann::json::parse(line, nullptr, false);
        // Template rows nobody has filled in yet.
        if (j.is_object() && j.contains("label") && j["label"].is_null()) continue;
        if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j["id"].is_string() ||
            !j.contains("label") || !j["label"].is_string()) {
            throw Error(ErrorCode::MalformedRecord, where + " needs string fields id and label");
        }
        const auto id = j["id"].get<std::string>();
        const auto label = parse_label(j["label"].get<std::string>());
        if (!label) throw Error(ErrorCode::MalformedRecord, where + ": label must be anomaly or normal");
        auto reason = j.value("reason", std::string{});
        if (reason.empty()) reason = "human review";
        const Annotation a{*label, std::move(reason), Provenance::HumanOverride};

        if (const auto it = index.find(id); it != index.end()) {
            out.records[it->second].annotation = a;
        } else if (const auto p = extra.find(id); p != extra.end()) {
            index[id] = out.size();
            out.records.push_back(Record{p->second->sample, a});
        } else {
            throw Error(ErrorCode::UnknownSampleId, where + ": no sample with id '" + id + "'");
        }
    }
    return out;
}

Dataset apply_overrides(const Dataset& labeled, const std::filesystem::path& overrides, const Dataset* pool) {
    return apply_overrides(labeled, std::string_view(read_file(overrides)), pool);
}

}  // namespace tsrules
