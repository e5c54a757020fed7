#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string_view>

#include "tsrules/dataset.hpp"

namespace tsrules {

struct FeatureConfig {
    std::size_t window = 8;
    // Replaces +-infinity wherever a denominator vanishes.
    double sentinel = 1e9;
    // Magnitudes below this count as zero for the sentinel rule.
    double epsilon = 1e-9;

    friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

// Named features; the first four windowed ones take an optional window argument
// in the rule language.
enum class Feature {
    CurrentValue,
    RecentMean,
    RecentStd,
    ZScore,
    TrendSlope,
    ZeroRate,
    HistMax,
    HistMin,
};

inline constexpr std::array kAllFeatures = {
    Feature::CurrentValue, Feature::RecentMean, Feature::RecentStd, Feature::ZScore,
    Feature::TrendSlope,   Feature::ZeroRate,   Feature::HistMax,   Feature::HistMin,
};
inline constexpr std::size_t kFeatureCount = kAllFeatures.size();

std::string_view feature_name(Feature f) noexcept;
std::optional<Feature> feature_from_name(std::string_view name) noexcept;
bool is_windowed(Feature f) noexcept;

// a / b, or the sentinel convention when |b| < epsilon:
// 0 if |a| < epsilon, otherwise +-sentinel with the sign of a.
double safe_divide(double numerator, double denominator, const FeatureConfig& cfg) noexcept;

// Window statistics over the k values immediately preceding the last one.
// Callers guarantee 1 <= k <= values.size() - 1.
namespace window {
double mean(std::span<const double> values, std::size_t k) noexcept;
double stddev(std::span<const double> values, std::size_t k) noexcept;  // population
double slope(std::span<const double> values, std::size_t k, const FeatureConfig& cfg) noexcept;
double zero_rate(std::span<const double> values, std::size_t k) noexcept;
}  // namespace window

// History = every value except the last.
struct HistoryStats {
    double mean = 0.0;
    double stddev = 0.0;
    double max = 0.0;
    double min = 0.0;
};
HistoryStats history_stats(std::span<const double> values) noexcept;
double z_score(double current, const HistoryStats& history, const FeatureConfig& cfg) noexcept;

struct FeatureVector {
    std::span<const double> values;
    std::size_t window = 0;
    double current_value = 0.0;
    double recent_mean = 0.0;
    double recent_std = 0.0;
    double z_score = 0.0;
    double trend_slope = 0.0;
    double zero_rate = 0.0;
    double hist_max = 0.0;
    double hist_min = 0.0;

    double operator[](Feature f) const noexcept;
    // Python-style indexing: -1 is the current value. Throws std::out_of_range.
    double value_at(long index) const;
    std::array<double, kFeatureCount> as_array() const noexcept;
};

// The returned vector views sample.values; keep the sample alive.
// Throws Error(WindowTooLarge) when cfg.window exceeds the history length.
FeatureVector compute_features(const TimeSeriesSample& sample, const FeatureConfig& cfg);

struct FeatureSummary {
    double mean = 0.0;
    double stddev = 0.0;
    double p5 = 0.0;
    double p25 = 0.0;
    double p50 = 0.0;
    double p75 = 0.0;
    double p95 = 0.0;
    std::size_t count = 0;

    friend bool operator==(const FeatureSummary&, const FeatureSummary&) = default;
};

struct ClassStats {
    std::map<Feature, FeatureSummary> anomaly;
    std::map<Feature, FeatureSummary> normal;

    const std::map<Feature, FeatureSummary>& of(Label label) const {
        return label == Label::Anomaly ? anomaly : normal;
    }
    friend bool operator==(const ClassStats&, const ClassStats&) = default;
};

// Nearest-rank percentile of a sorted, non-empty range; p in (0, 100].
double nearest_rank(std::span<const double> sorted, double p) noexcept;

// Throws Error(MissingClass) unless both labels are present.
ClassStats summarize_class_stats(const Dataset& dataset, const FeatureConfig& cfg);

nlohmann::json to_json(const ClassStats& stats);
ClassStats class_stats_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FeatureConfig& cfg);
FeatureConfig feature_config_from_json(const nlohmann::json& j);

}  // namespace tsrules
