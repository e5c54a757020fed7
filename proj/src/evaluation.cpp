#include "tsrules/evaluation.hpp"

#include <algorithm>
#include <thread>

#include "tsrules/error.hpp"

namespace tsrules {

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t /*tn*/, std::size_t fn) noexcept {
    if (tp == 0 && fp == 0 && fn == 0) return {1.0, 1.0, 1.0};
    Metrics m;
    const auto d = [](std::size_t x) { return static_cast<double>(x); };
    if (tp + fp > 0) m.precision = d(tp) / d(tp + fp);
    if (tp + fn > 0) m.recall = d(tp) / d(tp + fn);
    if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

double EvalReport::anomaly_rate() const noexcept {
    const std::size_t scored = tp + fp + tn + fn;
    return scored == 0 ? 0.0 : static_cast<double>(tp + fn) / static_cast<double>(scored);
}

EvalReport EvalReport::from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn,
                                   std::size_t failures) noexcept {
    EvalReport r;
    r.tp = tp;
    r.fp = fp;
    r.tn = tn;
    r.fn = fn;
    r.failures = failures;
    const auto m = metrics_from_counts(tp, fp, tn, fn);
    r.precision = m.precision;
    r.recall = m.recall;
    r.f1 = m.f1;
    const std::size_t scored = tp + fp + tn + fn;
    r.predicted_positive_rate =
        scored == 0 ? 0.0 : static_cast<double>(tp + fp) / static_cast<double>(scored);
    return r;
}

nlohmann::json to_json(const EvalReport& r) {
    return {{"tp", r.tp},
            {"fp", r.fp},
            {"tn", r.tn},
            {"fn", r.fn},
            {"failures", r.failures},
            {"precision", r.precision},
            {"recall", r.recall},
            {"f1", r.f1},
            {"predicted_positive_rate", r.predicted_positive_rate}};
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
    return EvalReport::from_counts(j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(),
                                   j.at("tn").get<std::size_t>(), j.at("fn").get<std::size_t>(),
                                   j.at("failures").get<std::size_t>());
}

std::string_view to_string(Behavior b) noexcept {
    switch (b) {
        case Behavior::OverConservative: return "OverConservative";
        case Behavior::OverAggressive: return "OverAggressive";
        case Behavior::Balanced: return "Balanced";
        case Behavior::DegenerateAllNormal: return "DegenerateAllNormal";
        case Behavior::DegenerateAllAnomaly: return "DegenerateAllAnomaly";
        case Behavior::Failing: return "Failing";
    }
    return "Balanced";
}

std::optional<Behavior> parse_behavior(std::string_view name) noexcept {
    for (const auto b : {Behavior::OverConservative, Behavior::OverAggressive, Behavior::Balanced,
                         Behavior::DegenerateAllNormal, Behavior::DegenerateAllAnomaly, Behavior::Failing}) {
        if (to_string(b) == name) return b;
    }
    return std::nullopt;
}

Behavior analyze_behavior(const EvalReport& r, double dataset_anomaly_rate,
                          const BehaviorThresholds& t) noexcept {
    const std::size_t total = r.total();
    if (total > 0 && static_cast<double>(r.failures) / static_cast<double>(total) > t.max_failure_rate) {
        return Behavior::Failing;
    }
    if (r.predicted_positive_rate >= t.all_anomaly_rate) return Behavior::DegenerateAllAnomaly;
    if (r.predicted_positive_rate <= t.all_normal_rate && dataset_anomaly_rate > t.all_normal_rate) {
        return Behavior::DegenerateAllNormal;
    }
    if (r.precision - r.recall >= t.gap) return Behavior::OverConservative;
    if (r.recall - r.precision >= t.gap) return Behavior::OverAggressive;
    return Behavior::Balanced;
}

EvalReport tally(const Dataset& dataset, const std::vector<rule::Decision>& decisions) {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0, failures = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& record = dataset.records[i];
        if (!record.annotation) {
            throw Error(ErrorCode::MissingLabel, "sample '" + record.sample.id + "' is unlabeled");
        }
        const auto& d = decisions[i];
        if (d.failed) {
            ++failures;
            continue;
        }
        const bool truth = record.annotation->label == Label::Anomaly;
        if (d.is_anomaly) {
            truth ? ++tp : ++fp;
        } else {
            truth ? ++fn : ++tn;
        }
    }
    return EvalReport::from_counts(tp, fp, tn, fn, failures);
}

std::vector<rule::Decision> decide_all(const rule::CompiledRule& rule, const Dataset& dataset,
                                       unsigned jobs) {
    std::vector<rule::Decision> out(dataset.size());
    const std::size_t n = dataset.size();
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    const auto run = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) out[i] = rule(dataset.records[i].sample);
    };
    if (jobs == 1) {
        run(0, n);
        return out;
    }
    {
        std::vector<std::jthread> workers;
        const std::size_t chunk = (n + jobs - 1) / jobs;
        for (std::size_t begin = 0; begin < n; begin += chunk) {
            workers.emplace_back(run, begin, std::min(n, begin + chunk));
        }
    }
    return out;
}

EvalReport evaluate_rule(const rule::RuleAst& ast, const Dataset& dataset, const FeatureConfig& cfg,
                         unsigned jobs) {
    const rule::CompiledRule compiled(ast, cfg);
    return tally(dataset, decide_all(compiled, dataset, jobs));
}

EvalReport baseline_zscore(const Dataset& dataset, double threshold, const FeatureConfig& cfg) {
    if (!(threshold > 0.0)) throw Error(ErrorCode::InvalidConfig, "z-score threshold must be positive");
    std::vector<rule::Decision> decisions;
    decisions.reserve(dataset.size());
    for (const auto& record : dataset.records) {
        const auto hist = history_stats(record.sample.values);
        rule::Decision d;
        d.is_anomaly = z_score(record.sample.current(), hist, cfg) >= threshold;
        decisions.push_back(d);
    }
    return tally(dataset, decisions);
}

}  // namespace tsrules
