#include "tsrules/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsrules/error.hpp"

namespace tsrules {

std::string_view feature_name(Feature f) noexcept {
    switch (f) {
        case Feature::CurrentValue: return "current_value";
        case Feature::RecentMean: return "recent_mean";
        case Feature::RecentStd: return "recent_std";
        case Feature::ZScore: return "z_score";
        case Feature::TrendSlope: return "trend_slope";
        case Feature::ZeroRate: return "zero_rate";
        case Feature::HistMax: return "hist_max";
        case Feature::HistMin: return "hist_min";
    }
    return "";
}

std::optional<Feature> feature_from_name(std::string_view name) noexcept {
    for (const auto f : kAllFeatures) {
        if (feature_name(f) == name) return f;
    }
    return std::nullopt;
}

bool is_windowed(Feature f) noexcept {
    return f == Feature::RecentMean || f == Feature::RecentStd || f == Feature::TrendSlope ||
           f == Feature::ZeroRate;
}

double safe_divide(double numerator, double denominator, const FeatureConfig& cfg) noexcept {
    if (std::abs(denominator) >= cfg.epsilon) return numerator / denominator;
    if (std::abs(numerator) < cfg.epsilon) return 0.0;
    return numerator > 0.0 ? cfg.sentinel : -cfg.sentinel;
}

namespace window {

namespace {
std::span<const double> preceding(std::span<const double> values, std::size_t k) noexcept {
    return values.subspan(values.size() - 1 - k, k);
}
}  // namespace

double mean(std::span<const double> values, std::size_t k) noexcept {
    double sum = 0.0;
    for (const double x : preceding(values, k)) sum += x;
    return sum / static_cast<double>(k);
}

double stddev(std::span<const double> values, std::size_t k) noexcept {
    const double m = mean(values, k);
    double ss = 0.0;
    for (const double x : preceding(values, k)) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(k));
}

double slope(std::span<const double> values, std::size_t k, const FeatureConfig& cfg) noexcept {
    const auto w = preceding(values, k);
    const double x_mean = (static_cast<double>(k) - 1.0) / 2.0;
    const double y_mean = mean(values, k);
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double dx = static_cast<double>(i) - x_mean;
        sxy += dx * (w[i] - y_mean);
        sxx += dx * dx;
    }
    return safe_divide(sxy, sxx, cfg);
}

double zero_rate(std::span<const double> values, std::size_t k) noexcept {
    const auto w = preceding(values, k);
    const auto zeros = std::count(w.begin(), w.end(), 0.0);
    return static_cast<double>(zeros) / static_cast<double>(k);
}

}  // namespace window

HistoryStats history_stats(std::span<const double> values) noexcept {
    HistoryStats h;
    const auto hist = values.first(values.size() - 1);
    if (hist.empty()) return h;
    double sum = 0.0;
    h.max = hist.front();
    h.min = hist.front();
    for (const double x : hist) {
        sum += x;
        h.max = std::max(h.max, x);
        h.min = std::min(h.min, x);
    }
    h.mean = sum / static_cast<double>(hist.size());
    double ss = 0.0;
    for (const double x : hist) ss += (x - h.mean) * (x - h.mean);
    h.stddev = std::sqrt(ss / static_cast<double>(hist.size()));
    return h;
}

double z_score(double current, const HistoryStats& history, const FeatureConfig& cfg) noexcept {
    return safe_divide(current - history.mean, history.stddev, cfg);
}

double FeatureVector::operator[](Feature f) const noexcept {
    switch (f) {
        case Feature::CurrentValue: return current_value;
        case Feature::RecentMean: return recent_mean;
        case Feature::RecentStd: return recent_std;
        case Feature::ZScore: return z_score;
        case Feature::TrendSlope: return trend_slope;
        case Feature::ZeroRate: return zero_rate;
        case Feature::HistMax: return hist_max;
        case Feature::HistMin: return hist_min;
    }
    return 0.0;
}

double FeatureVector::value_at(long index) const {
    const auto n = static_cast<long>(values.size());
    const long resolved = index < 0 ? n + index : index;
    if (resolved < 0 || resolved >= n) {
        throw std::out_of_range("values[" + std::to_string(index) + "] outside series of length " +
                                std::to_string(n));
    }
    return values[static_cast<std::size_t>(resolved)];
}

std::array<double, kFeatureCount> FeatureVector::as_array() const noexcept {
    std::array<double, kFeatureCount> out{};
    for (std::size_t i = 0; i < kFeatureCount; ++i) out[i] = (*this)[kAllFeatures[i]];
    return out;
}

FeatureVector compute_features(const TimeSeriesSample& sample, const FeatureConfig& cfg) {
    const std::span<const double> values = sample.values;
    if (values.size() < 2 || cfg.window == 0 || cfg.window > values.size() - 1) {
        throw Error(ErrorCode::WindowTooLarge,
                    "window " + std::to_string(cfg.window) + " exceeds history of " +
                        std::to_string(values.empty() ? 0 : values.size() - 1) + " values in '" +
                        sample.id + "'");
    }
    const auto hist = history_stats(values);
    FeatureVector fv;
    fv.values = values;
    fv.window = cfg.window;
    fv.current_value = values.back();
    fv.recent_mean = window::mean(values, cfg.window);
    fv.recent_std = window::stddev(values, cfg.window);
    fv.z_score = z_score(fv.current_value, hist, cfg);
    fv.trend_slope = window::slope(values, cfg.window, cfg);
    fv.zero_rate = window::zero_rate(values, cfg.window);
    fv.hist_max = hist.max;
    fv.hist_min = hist.min;
    return fv;
}

double nearest_rank(std::span<const double> sorted, double p) noexcept {
    const auto n = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

namespace {

FeatureSummary summarize(std::vector<double> xs) {
    FeatureSummary s;
    s.count = xs.size();
    double sum = 0.0;
    for (const double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    double ss = 0.0;
    for (const double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(xs.size()));
    std::sort(xs.begin(), xs.end());
    s.p5 = nearest_rank(xs, 5);
    s.p25 = nearest_rank(xs, 25);
    s.p50 = nearest_rank(xs, 50);
    s.p75 = nearest_rank(xs, 75);
    s.p95 = nearest_rank(xs, 95);
    return s;
}

}  // namespace

ClassStats summarize_class_stats(const Dataset& dataset, const FeatureConfig& cfg) {
    std::array<std::vector<double>, kFeatureCount> anomaly;
    std::array<std::vector<double>, kFeatureCount> normal;
    for (const auto& record : dataset.records) {
        if (!record.annotation) continue;
        const auto fv = compute_features(record.sample, cfg).as_array();
        auto& target = record.annotation->label == Label::Anomaly ? anomaly : normal;
        for (std::size_t i = 0; i < kFeatureCount; ++i) target[i].push_back(fv[i]);
    }
    if (anomaly[0].empty()) throw Error(ErrorCode::MissingClass, "no anomaly samples");
    if (normal[0].empty()) throw Error(ErrorCode::MissingClass, "no normal samples");

    ClassStats stats;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        stats.anomaly.emplace(kAllFeatures[i], summarize(std::move(anomaly[i])));
        stats.normal.emplace(kAllFeatures[i], summarize(std::move(normal[i])));
    }
    return stats;
}

namespace {

nlohmann::json summary_json(const std::map<Feature, FeatureSummary>& m) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [f, s] : m) {
        j[std::string(feature_name(f))] = {{"mean", s.mean}, {"std", s.stddev}, {"p5", s.p5},
                                           {"p25", s.p25},   {"p50", s.p50},    {"p75", s.p75},
                                           {"p95", s.p95},   {"count", s.count}};
    }
    return j;
}

std::map<Feature, FeatureSummary> summary_from_json(const nlohmann::json& j) {
    std::map<Feature, FeatureSummary> m;
    for (const auto& [name, s] : j.items()) {
        const auto f = feature_from_name(name);
        if (!f) continue;
        m.emplace(*f, FeatureSummary{s.at("mean").get<double>(), s.at("std").get<double>(),
                                     s.at("p5").get<double>(), s.at("p25").get<double>(),
                                     s.at("p50").get<double>(), s.at("p75").get<double>(),
                                     s.at("p95").get<double>(), s.at("count").get<std::size_t>()});
    }
    return m;
}

}  // namespace

nlohmann::json to_json(const ClassStats& stats) {
    return {{"anomaly", summary_json(stats.anomaly)}, {"normal", summary_json(stats.normal)}};
}

ClassStats class_stats_from_json(const nlohmann::json& j) {
    return ClassStats{summary_from_json(j.at("anomaly")), summary_from_json(j.at("normal"))};
}

nlohmann::json to_json(const FeatureConfig& cfg) {
    return {{"window", cfg.window}, {"sentinel", cfg.sentinel}, {"epsilon", cfg.epsilon}};
}

FeatureConfig feature_config_from_json(const nlohmann::json& j) {
    FeatureConfig cfg;
    cfg.window = j.value("window", cfg.window);
    cfg.sentinel = j.value("sentinel", cfg.sentinel);
    cfg.epsilon = j.value("epsilon", cfg.epsilon);
    if (cfg.window == 0) throw Error(ErrorCode::InvalidConfig, "feature window must be positive");
    return cfg;
}

}  // namespace tsrules
