#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "tsrules/error.hpp"
#include "tsrules/features.hpp"
#include "tsrules/rng.hpp"
#include "tsrules/synth.hpp"

using namespace tsrules;

namespace {

TimeSeriesSample sample(std::vector<double> values) {
    return TimeSeriesSample{"t", std::move(values), {}, nlohmann::json::object()};
}

// Closed-form least squares slope, kept separate from the centred form in the library.
double slope_oracle(const std::vector<double>& y) {
    const double k = static_cast<double>(y.size());
    double sx = 0, sy = 0, sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double x = static_cast<double>(i);
        sx += x;
        sy += y[i];
        sxy += x * y[i];
        sxx += x * x;
    }
    return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

}  // namespace

TEST(ComputeFeatures, ConstantSeries) {
    const auto s = sample(std::vector<double>(12, 10.0));
    const auto fv = compute_features(s, FeatureConfig{});
    EXPECT_EQ(fv.z_score, 0.0);
    EXPECT_EQ(fv.trend_slope, 0.0);
    EXPECT_EQ(fv.recent_std, 0.0);
    EXPECT_EQ(fv.recent_mean, 10.0);
    EXPECT_EQ(fv.zero_rate, 0.0);
}

TEST(ComputeFeatures, ZScoreAgainstHandArithmetic) {
    // History 8,12,... has mean 10 and population std 2; (16 - 10) / 2 = 3.
    const auto s = sample({8, 12, 8, 12, 8, 12, 8, 12, 16});
    const auto fv = compute_features(s, FeatureConfig{});
    EXPECT_DOUBLE_EQ(fv.z_score, 3.0);
    EXPECT_DOUBLE_EQ(fv.recent_mean, 10.0);
    EXPECT_DOUBLE_EQ(fv.recent_std, 2.0);
    EXPECT_EQ(fv.hist_max, 12.0);
    EXPECT_EQ(fv.hist_min, 8.0);
}

TEST(ComputeFeatures, ZeroHistoryUsesSentinel) {
    auto values = std::vector<double>(20, 0.0);
    values.back() = 12.0;
    const auto fv = compute_features(sample(values), FeatureConfig{});
    EXPECT_EQ(fv.zero_rate, 1.0);
    EXPECT_EQ(fv.z_score, 1e9);
    values.back() = -3.0;
    EXPECT_EQ(compute_features(sample(values), FeatureConfig{}).z_score, -1e9);
}

TEST(ComputeFeatures, SlopeMatchesClosedFormOracle) {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(30);
        for (auto& x : v) x = rng.uniform(-50, 50);
        for (const std::size_t k : {2u, 3u, 8u, 29u}) {
            const auto fv = compute_features(sample(v), FeatureConfig{.window = k});
            const std::vector<double> w(v.end() - 1 - static_cast<long>(k), v.end() - 1);
            EXPECT_NEAR(fv.trend_slope, slope_oracle(w), 1e-9);
        }
    }
}

TEST(ComputeFeatures, WindowExcludesCurrentValue) {
    const auto fv = compute_features(sample({0, 0, 0, 0, 5, 5, 5, 5, 0, 0, 1000}),
                                     FeatureConfig{.window = 4});
    EXPECT_DOUBLE_EQ(fv.recent_mean, 2.5);
    EXPECT_DOUBLE_EQ(fv.zero_rate, 0.5);
    EXPECT_EQ(fv.current_value, 1000);
}

TEST(ComputeFeatures, WindowTooLarge) {
    try {
        compute_features(sample(std::vector<double>(8, 1.0)), FeatureConfig{.window = 8});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::WindowTooLarge);
    }
}

TEST(ComputeFeatures, AlwaysFiniteAndNoLookAhead) {
    const auto d = synth_generate(SynthConfig{.n_series = 200, .seed = 9});
    for (const auto& r : d.records) {
        const auto full = compute_features(r.sample, FeatureConfig{});
        for (const double x : full.as_array()) EXPECT_TRUE(std::isfinite(x));
        // Appending a future week changes which value is "current"; recomputing on
        // the original prefix must reproduce the original features bit-for-bit.
        auto extended = r.sample;
        extended.values.push_back(1e6);
        auto prefix = extended;
        prefix.values.pop_back();
        const auto again = compute_features(prefix, FeatureConfig{});
        EXPECT_EQ(full.as_array(), again.as_array());
    }
}

TEST(NearestRank, MatchesDefinition) {
    const std::vector<double> xs = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    EXPECT_EQ(nearest_rank(xs, 5), 1);
    EXPECT_EQ(nearest_rank(xs, 25), 3);
    EXPECT_EQ(nearest_rank(xs, 50), 5);
    EXPECT_EQ(nearest_rank(xs, 95), 10);
    const std::vector<double> one = {7};
    EXPECT_EQ(nearest_rank(one, 5), 7);
}

TEST(ClassStats, SingletonClasses) {
    Dataset d;
    auto anomaly = std::vector<double>(10, 1.0);
    anomaly.back() = 80;
    auto normal = std::vector<double>(10, 1.0);
    normal.back() = 5;
    d.records.push_back({sample(anomaly), Annotation{Label::Anomaly, "r", Provenance::SyntheticTruth}});
    d.records.push_back({sample(normal), Annotation{Label::Normal, "r", Provenance::SyntheticTruth}});
    d.records[1].sample.id = "u";
    const auto stats = summarize_class_stats(d, FeatureConfig{});
    EXPECT_EQ(stats.anomaly.at(Feature::CurrentValue).mean, 80);
    EXPECT_EQ(stats.normal.at(Feature::CurrentValue).mean, 5);
    EXPECT_EQ(stats.anomaly.at(Feature::CurrentValue).count, 1u);
}

TEST(ClassStats, DegenerateDistribution) {
    Dataset d;
    for (int i = 0; i < 6; ++i) {
        d.records.push_back({sample(std::vector<double>(10, 3.0)),
                             Annotation{i < 2 ? Label::Anomaly : Label::Normal, "r", Provenance::SyntheticTruth}});
        d.records.back().sample.id = std::to_string(i);
    }
    const auto stats = summarize_class_stats(d, FeatureConfig{});
    const auto& s = stats.normal.at(Feature::RecentMean);
    EXPECT_EQ(s.stddev, 0.0);
    EXPECT_EQ(s.count, 4u);
    for (const double p : {s.p5, s.p25, s.p50, s.p75, s.p95}) EXPECT_EQ(p, 3.0);
}

TEST(ClassStats, SyntheticAnomaliesAreHigher) {
    const auto d = synth_generate(SynthConfig{.n_series = 600, .seed = 21});
    const auto stats = summarize_class_stats(d, FeatureConfig{});
    EXPECT_GT(stats.anomaly.at(Feature::CurrentValue).mean, stats.normal.at(Feature::CurrentValue).mean);
    EXPECT_EQ(stats.anomaly.at(Feature::CurrentValue).count, d.count(Label::Anomaly));
    EXPECT_EQ(stats.normal.at(Feature::CurrentValue).count, d.count(Label::Normal));
    EXPECT_EQ(class_stats_from_json(to_json(stats)), stats);
}

TEST(ClassStats, MissingClass) {
    Dataset d;
    d.records.push_back({sample(std::vector<double>(10, 3.0)),
                         Annotation{Label::Normal, "r", Provenance::SyntheticTruth}});
    try {
        summarize_class_stats(d, FeatureConfig{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MissingClass);
    }
}

TEST(SafeDivide, SentinelConvention) {
    const FeatureConfig cfg;
    EXPECT_EQ(safe_divide(6, 3, cfg), 2);
    EXPECT_EQ(safe_divide(0, 0, cfg), 0);
    EXPECT_EQ(safe_divide(5e-10, 0, cfg), 0);
    EXPECT_EQ(safe_divide(60, 0, cfg), 1e9);
    EXPECT_EQ(safe_divide(-60, 1e-12, cfg), -1e9);
}
