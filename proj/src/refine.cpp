#include "tsrules/refine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>

#include "tsrules/error.hpp"
#include "tsrules/io.hpp"
#include "tsrules/llm/tasks.hpp"
#include "tsrules/parallel.hpp"
#include "tsrules/rng.hpp"
#include "tsrules/rule_parser.hpp"

namespace tsrules {

void validate(const RefinementConfig& cfg) {
    const auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
    if (!(cfg.target_f1 > 0.0 && cfg.target_f1 <= 1.0)) bad("target_f1 must lie in (0, 1]");
    if (cfg.patience == 0) bad("patience must be positive");
    if (cfg.max_epochs == 0) bad("max_epochs must be positive");
    if (cfg.epoch_patience == 0) bad("epoch_patience must be positive");
    if (cfg.num_starts == 0) bad("num_starts must be positive");
    if (!(cfg.epoch_gap_threshold >= 0.0)) bad("epoch_gap_threshold must be non-negative");
    if (cfg.features.window == 0) bad("feature window must be positive");
    const auto& s = cfg.split;
    if (!(s.train > 0.0 && s.validation > 0.0 && s.test > 0.0)) {
        throw Error(ErrorCode::InvalidFractions, "every split fraction must be positive");
    }
    if (std::abs(s.train + s.validation + s.test - 1.0) > 1e-9) {
        throw Error(ErrorCode::InvalidFractions, "split fractions must sum to 1");
    }
}

nlohmann::json to_json(const RefinementConfig& cfg) {
    return {{"max_iterations", cfg.max_iterations},
            {"target_f1", cfg.target_f1},
            {"patience", cfg.patience},
            {"epoch_gap_threshold", cfg.epoch_gap_threshold},
            {"max_epochs", cfg.max_epochs},
            {"epoch_patience", cfg.epoch_patience},
            {"num_starts", cfg.num_starts},
            {"split", {cfg.split.train, cfg.split.validation, cfg.split.test}},
            {"seed", cfg.seed},
            {"features", to_json(cfg.features)},
            {"behavior",
             {{"max_failure_rate", cfg.behavior.max_failure_rate},
              {"all_anomaly_rate", cfg.behavior.all_anomaly_rate},
              {"all_normal_rate", cfg.behavior.all_normal_rate},
              {"gap", cfg.behavior.gap}}}};
}

RefinementConfig refinement_config_from_json(const nlohmann::json& j) {
    try {
        RefinementConfig c;
        c.max_iterations = j.value("max_iterations", c.max_iterations);
        c.target_f1 = j.value("target_f1", c.target_f1);
        c.patience = j.value("patience", c.patience);
        c.epoch_gap_threshold = j.value("epoch_gap_threshold", c.epoch_gap_threshold);
        c.max_epochs = j.value("max_epochs", c.max_epochs);
        c.epoch_patience = j.value("epoch_patience", c.epoch_patience);
        c.num_starts = j.value("num_starts", c.num_starts);
        if (j.contains("split")) {
            const auto& s = j["split"];
            c.split = {s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>()};
        }
        c.seed = j.value("seed", c.seed);
        if (j.contains("features")) c.features = feature_config_from_json(j["features"]);
        if (j.contains("behavior")) {
            const auto& b = j["behavior"];
            c.behavior.max_failure_rate = b.value("max_failure_rate", c.behavior.max_failure_rate);
            c.behavior.all_anomaly_rate = b.value("all_anomaly_rate", c.behavior.all_anomaly_rate);
            c.behavior.all_normal_rate = b.value("all_normal_rate", c.behavior.all_normal_rate);
            c.behavior.gap = b.value("gap", c.behavior.gap);
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("refinement config: ") + e.what());
    }
}

double refine_score(const EvalReport& report, const BehaviorThresholds& t) noexcept {
    const auto n = report.total();
    if (n > 0 && static_cast<double>(report.failures) / static_cast<double>(n) > t.max_failure_rate) return 0.0;
    return report.f1;
}

std::string_view to_string(StopReason r) noexcept {
    switch (r) {
        case StopReason::TargetReached: return "TargetReached";
        case StopReason::MaxIterations: return "MaxIterations";
        case StopReason::Patience: return "Patience";
        case StopReason::MaxEpochs: return "MaxEpochs";
    }
    return "";
}

RefineResult refine_rule(const std::string& r0, const Dataset& train, const RefinementConfig& cfg,
                         llm::Backend& backend, const Trajectory& history, std::size_t epoch) {
    rule::RuleAst current;
    try {
        current = rule::parse(r0);
    } catch (const ParseError& e) {
        throw Error(ErrorCode::InitialRuleUnparseable, e.what());
    }
    const auto stats = summarize_class_stats(train, cfg.features);
    const double rate = train.anomaly_rate();

    RefineResult res;
    std::string current_text = rule::print(current);
    EvalReport current_report = evaluate_rule(current, train, cfg.features, cfg.jobs);
    res.best_rule = current_text;
    res.best_report = current_report;

    const auto score = [&](const EvalReport& r) { return refine_score(r, cfg.behavior); };
    Trajectory seen = history;
    const std::size_t first = history.empty() ? 1 : history.back().iteration + 1;
    std::size_t stale = 0;
    for (std::size_t i = 0; i < cfg.max_iterations; ++i) {
        if (score(res.best_report) >= cfg.target_f1) {
            res.stop = StopReason::TargetReached;
            return res;
        }
        if (stale >= cfg.patience) {
            res.stop = StopReason::Patience;
            return res;
        }
        TrajectoryEntry entry;
        entry.iteration = first + i;
        entry.epoch = epoch;
        entry.rule_text = current_text;
        entry.report = current_report;
        entry.behavior = analyze_behavior(current_report, rate, cfg.behavior);
        seen.push_back(entry);

        try {
            llm::ModificationRequest req{current_text, entry.behavior, current_report, &seen, stats, rate,
                                         cfg.features};
            const auto proposal = llm::propose_modification(req, backend);
            const auto ast = rule::parse(proposal.rule_text);
            const auto report = evaluate_rule(ast, train, cfg.features, cfg.jobs);
            entry.modification_note = proposal.note;
            entry.proposed_rule = proposal.rule_text;
            entry.proposed_report = report;
            if (score(report) > score(res.best_report)) {
                res.best_rule = proposal.rule_text;
                res.best_report = report;
                entry.improved_best = true;
            }
            if (score(report) > score(current_report)) {
                current_text = proposal.rule_text;
                current_report = report;
                entry.improved_current = true;
            }
        } catch (const Error& e) {
            entry.failure = e.what();
        }
        stale = entry.improved_best ? 0 : stale + 1;
        seen.back() = entry;
        res.trajectory.push_back(std::move(entry));
    }
    res.stop = score(res.best_report) >= cfg.target_f1 ? StopReason::TargetReached : StopReason::MaxIterations;
    return res;
}

bool epoch_accepted(double learn_f1, double validation_f1, double threshold) noexcept {
    // Small slack so that a gap printed as 0.05 is not rejected by rounding.
    return std::abs(learn_f1 - validation_f1) <= threshold + 1e-12;
}

EpochsResult run_epochs(const std::string& prototype, const Dataset& learning, const Dataset& validation,
                        const RefinementConfig& cfg, llm::Backend& backend) {
    EpochsResult res;
    try {
        res.rule_text = rule::print(rule::parse(prototype));
    } catch (const ParseError& e) {
        throw Error(ErrorCode::InitialRuleUnparseable, e.what());
    }
    const auto eval = [&](const std::string& text, const Dataset& d) {
        return evaluate_rule(rule::parse(text), d, cfg.features, cfg.jobs);
    };
    res.learn_report = eval(res.rule_text, learning);
    res.validation_report = eval(res.rule_text, validation);
    const auto score = [&](const EvalReport& r) { return refine_score(r, cfg.behavior); };
    double best_val = score(res.validation_report);

    std::size_t stale = 0;
    for (std::size_t e = 1; e <= cfg.max_epochs; ++e) {
        if (score(res.validation_report) >= cfg.target_f1) {
            res.stop = StopReason::TargetReached;
            return res;
        }
        auto r = refine_rule(res.rule_text, learning, cfg, backend, res.trajectory, e);
        res.trajectory.insert(res.trajectory.end(), r.trajectory.begin(), r.trajectory.end());
        const auto val = eval(r.best_rule, validation);
        EpochRecord rec{e, r.best_rule, score(r.best_report), score(val),
                        epoch_accepted(score(r.best_report), score(val), cfg.epoch_gap_threshold)};
        res.epochs.push_back(rec);
        if (rec.accepted) {
            res.rule_text = r.best_rule;
            res.learn_report = r.best_report;
            res.validation_report = val;
        }
        if (rec.accepted && rec.validation_f1 > best_val) {
            best_val = rec.validation_f1;
            stale = 0;
        } else if (++stale >= cfg.epoch_patience) {
            res.stop = StopReason::Patience;
            return res;
        }
    }
    res.stop = score(res.validation_report) >= cfg.target_f1 ? StopReason::TargetReached : StopReason::MaxEpochs;
    return res;
}

EpochsResult run_epochs(const std::string& prototype, const Dataset& train, const RefinementConfig& cfg,
                        llm::Backend& backend) {
    const double val_share = cfg.split.validation / (cfg.split.train + cfg.split.validation);
    const auto [learning, validation] = split_two(train, val_share, derive_seed(cfg.seed, 1));
    return run_epochs(prototype, learning, validation, cfg, backend);
}

namespace {

nlohmann::json metrics_json(const std::map<std::string, EvalReport>& m) {
    auto j = nlohmann::json::object();
    for (const auto& [k, v] : m) j[k] = to_json(v);
    return j;
}

}  // namespace

nlohmann::json to_json(const RuleArtifact& a) {
    nlohmann::json j = {{"schema_version", kSchemaVersion},
                        {"rule_text", a.rule_text},
                        {"metrics", metrics_json(a.metrics)},
                        {"trajectory_path", a.trajectory_path},
                        {"config_hash", a.config_hash},
                        {"created_at", a.created_at},
                        {"seed", a.seed},
                        {"features", to_json(a.features)},
                        {"selected_candidate", a.selected_candidate},
                        {"candidates", a.candidates}};
    if (a.taxonomy) j["taxonomy"] = to_json(*a.taxonomy);
    return j;
}

RuleArtifact rule_artifact_from_json(const nlohmann::json& j) {
    try {
        RuleArtifact a;
        a.rule_text = j.at("rule_text").get<std::string>();
        rule::parse(a.rule_text);
        const auto metrics = j.value("metrics", nlohmann::json::object());
        for (const auto& [k, v] : metrics.items()) {
            a.metrics[k] = eval_report_from_json(v);
        }
        a.trajectory_path = j.value("trajectory_path", std::string{});
        a.config_hash = j.value("config_hash", std::string{});
        a.created_at = j.value("created_at", std::string{});
        a.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("features")) a.features = feature_config_from_json(j["features"]);
        a.selected_candidate = j.value("selected_candidate", std::size_t{0});
        a.candidates = j.value("candidates", nlohmann::json::array());
        if (j.contains("taxonomy")) a.taxonomy = taxonomy_from_json(j["taxonomy"]);
        return a;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedRecord, std::string("rule artifact: ") + e.what());
    } catch (const ParseError& e) {
        throw Error(ErrorCode::MalformedRecord, std::string("rule artifact: rule text does not parse: ") + e.what());
    }
}

RuleArtifact load_artifact(const std::filesystem::path& path) {
    const auto j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::MalformedRecord, "'" + path.string() + "' is not JSON");
    return rule_artifact_from_json(j);
}

void save_artifact(const std::filesystem::path& path, const RuleArtifact& a) {
    write_file(path, to_json(a).dump(2) + "\n");
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::size_t select_candidate(const std::vector<Candidate>& candidates) {
    std::optional<std::size_t> best;
    const auto test_f1 = [&](std::size_t i) {
        const auto it = candidates[i].metrics.find("test");
        return it == candidates[i].metrics.end() ? -1.0 : refine_score(it->second);
    };
    const auto clauses = [&](std::size_t i) { return rule::parse(candidates[i].rule_text).clauses.size(); };
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (candidates[i].failure) continue;
        if (!best) {
            best = i;
            continue;
        }
        const auto b = *best;
        if (test_f1(i) != test_f1(b)) {
            if (test_f1(i) > test_f1(b)) best = i;
        } else if (clauses(i) != clauses(b)) {
            if (clauses(i) < clauses(b)) best = i;
        } else if (candidates[i].rule_text < candidates[b].rule_text) {
            best = i;
        }
    }
    if (!best) throw Error(ErrorCode::PrototypeUnparseable, "no candidate produced a rule");
    return *best;
}

LearnResult learn(const Dataset& labeled, const RefinementConfig& cfg, llm::Backend& backend) {
    validate(cfg);
    LearnResult out;
    out.split = split_dataset(labeled, cfg.split, cfg.seed);
    const auto& train = out.split.train;
    const auto& validation = out.split.validation;
    const auto stats = summarize_class_stats(train, cfg.features);

    llm::QualitativePatterns patterns;
    try {
        patterns = llm::extract_patterns(train, backend);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyReasonCorpus) throw;
    }

    out.candidates.resize(cfg.num_starts);
    std::vector<std::optional<Error>> errors(cfg.num_starts);
    parallel_for(cfg.num_starts, cfg.jobs, [&](std::size_t k) {
        auto& c = out.candidates[k];
        c.index = k;
        c.seed = derive_seed(cfg.seed, 100 + k);
        try {
            c.prototype = llm::generate_prototype({patterns, stats, cfg.features, k}, backend);
        } catch (const Error& e) {
            c.failure = e.what();
            errors[k] = e;
            return;
        }
        auto local = cfg;
        local.jobs = cfg.num_starts > 1 ? 1 : cfg.jobs;
        auto r = run_epochs(c.prototype, train, validation, local, backend);
        c.rule_text = r.rule_text;
        c.epochs = std::move(r.epochs);
        c.trajectory = std::move(r.trajectory);
        const auto ast = rule::parse(c.rule_text);
        c.metrics["train"] = r.learn_report;
        c.metrics["validation"] = r.validation_report;
        c.metrics["test"] = evaluate_rule(ast, out.split.test, cfg.features, local.jobs);
    });
    if (std::all_of(out.candidates.begin(), out.candidates.end(), [](const Candidate& c) { return c.failure; })) {
        throw *errors.front();
    }

    const auto pick = select_candidate(out.candidates);
    const auto& w = out.candidates[pick];
    auto& a = out.artifact;
    a.rule_text = w.rule_text;
    a.metrics = w.metrics;
    a.seed = cfg.seed;
    a.features = cfg.features;
    a.selected_candidate = pick;
    a.created_at = utc_timestamp();
    const nlohmann::json hashed = {{"refine", to_json(cfg)}, {"backend", llm::to_json(backend.config())}};
    a.config_hash = to_hex(fnv1a(hashed.dump()));
    for (const auto& c : out.candidates) {
        nlohmann::json s = {{"index", c.index}, {"seed", c.seed}, {"prototype", c.prototype}};
        if (c.failure) {
            s["failure"] = *c.failure;
        } else {
            s["rule_text"] = c.rule_text;
            s["iterations"] = c.trajectory.size();
            for (const auto& [k, v] : c.metrics) s["f1"][k] = v.f1;
        }
        a.candidates.push_back(std::move(s));
    }
    return out;
}

}  // namespace tsrules
