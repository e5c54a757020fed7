#include "tsrules/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "tsrules/error.hpp"
#include "tsrules/rng.hpp"

namespace tsrules {

namespace {

constexpr double kCeiling = 100.0;

double clamp_metric(double x) {
    x = std::clamp(x, 0.0, kCeiling);
    return std::round(x * 100.0) / 100.0;
}

struct Generator {
    Rng& rng;
    std::size_t length;
    double noise;

    // Noise scales mildly with the level, as percentage-style metrics do.
    double jitter(double level) { return rng.normal(0.0, noise * (0.5 + level / 20.0)); }

    std::vector<double> flat(double level) {
        std::vector<double> v(length);
        for (auto& x : v) x = level + jitter(level);
        return v;
    }

    std::size_t span(std::size_t lo, std::size_t hi) {
        return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
    }

    std::vector<double> make(Archetype a) {
        const std::size_t last = length - 1;
        switch (a) {
            case Archetype::Stable:
                return flat(rng.uniform(2.0, 22.0));
            case Archetype::Volatile: {
                const double base = rng.uniform(5.0, 25.0);
                auto v = flat(base);
                for (auto& x : v) x += rng.normal(0.0, 1.5 * noise);
                // Occasional past bursts keep a high current week within the historical range.
                const std::size_t bursts = 2 + rng.below(4);
                for (std::size_t k = 0; k < bursts; ++k) {
                    v[rng.below(last)] += rng.uniform(10.0, 25.0);
                }
                return v;
            }
            case Archetype::BenignSharpDecrease: {
                auto v = flat(rng.uniform(35.0, 70.0));
                const std::size_t drop = std::min<std::size_t>(span(1, 3), last);
                for (std::size_t t = length - drop; t < length; ++t) v[t] = rng.uniform(0.0, 5.0);
                return v;
            }
            case Archetype::SuddenSpike: {
                const double base = rng.uniform(2.0, 20.0);
                auto v = flat(base);
                v[last] = base + rng.uniform(40.0, 75.0);
                return v;
            }
            case Archetype::SustainedElevation: {
                auto v = flat(rng.uniform(2.0, 15.0));
                const double level = rng.uniform(35.0, 60.0);
                const std::size_t weeks = std::min<std::size_t>(span(3, 6), last);
                for (std::size_t t = length - weeks - 1; t < length; ++t) v[t] = level + jitter(level);
                return v;
            }
            case Archetype::RiseAfterZeros: {
                std::vector<double> v(length, 0.0);
                // Some activity early on, then a long run of zero weeks before the rise.
                const std::size_t zeros = std::min(last, std::max<std::size_t>(8, span(length / 4, length / 2)));
                const std::size_t active = last - zeros;
                const double base = rng.uniform(1.0, 8.0);
                for (std::size_t t = 0; t < active; ++t) {
                    v[t] = rng.bernoulli(0.6) ? base + jitter(base) : 0.0;
                }
                v[last] = rng.uniform(12.0, 30.0);
                return v;
            }
            case Archetype::EscalatingTrend: {
                const double base = rng.uniform(2.0, 12.0);
                auto v = flat(base);
                const double rise = rng.uniform(35.0, 60.0);
                const std::size_t ramp = std::min<std::size_t>(span(6, 12), last);
                for (std::size_t k = 0; k <= ramp; ++k) {
                    const double level = base + rise * static_cast<double>(k) / static_cast<double>(ramp);
                    v[last - ramp + k] = level + jitter(level * 0.5);
                }
                return v;
            }
        }
        return flat(1.0);
    }
};

template <std::size_t N>
Archetype pick(Rng& rng, const std::array<Archetype, N>& pool,
               const std::map<Archetype, double>& weights) {
    double total = 0.0;
    for (const auto a : pool) {
        if (auto it = weights.find(a); it != weights.end()) total += it->second;
    }
    double u = rng.uniform() * total;
    for (const auto a : pool) {
        const auto it = weights.find(a);
        const double w = it == weights.end() ? 0.0 : it->second;
        if (w <= 0.0) continue;
        if (u < w) return a;
        u -= w;
    }
    for (auto it = pool.rbegin(); it != pool.rend(); ++it) {
        if (auto w = weights.find(*it); w != weights.end() && w->second > 0.0) return *it;
    }
    return pool.front();
}

template <std::size_t N>
double weight_sum(const std::array<Archetype, N>& pool, const std::map<Archetype, double>& weights) {
    double total = 0.0;
    for (const auto a : pool) {
        if (auto it = weights.find(a); it != weights.end()) total += it->second;
    }
    return total;
}

}  // namespace

std::string_view to_string(Archetype a) noexcept {
    switch (a) {
        case Archetype::SuddenSpike: return "SuddenSpike";
        case Archetype::SustainedElevation: return "SustainedElevation";
        case Archetype::RiseAfterZeros: return "RiseAfterZeros";
        case Archetype::EscalatingTrend: return "EscalatingTrend";
        case Archetype::Stable: return "Stable";
        case Archetype::Volatile: return "Volatile";
        case Archetype::BenignSharpDecrease: return "BenignSharpDecrease";
    }
    return "Stable";
}

std::optional<Archetype> parse_archetype(std::string_view name) noexcept {
    for (const auto a : kAnomalyArchetypes) {
        if (to_string(a) == name) return a;
    }
    for (const auto a : kNormalArchetypes) {
        if (to_string(a) == name) return a;
    }
    return std::nullopt;
}

bool is_anomalous(Archetype a) noexcept {
    return std::find(kAnomalyArchetypes.begin(), kAnomalyArchetypes.end(), a) !=
           kAnomalyArchetypes.end();
}

std::string_view archetype_reason(Archetype a) noexcept {
    switch (a) {
        case Archetype::SuddenSpike:
            return "current week is significantly higher than recent weeks, a sudden spike breaking established trends";
        case Archetype::SustainedElevation:
            return "recent weeks are significantly higher than historical levels, a sustained elevation";
        case Archetype::RiseAfterZeros:
            return "current week rises after a long period of zero values";
        case Archetype::EscalatingTrend:
            return "recent weeks show an escalating upward trend breaking established trends";
        case Archetype::Stable:
            return "current week is consistent with historical levels";
        case Archetype::Volatile:
            return "fluctuations stay within the historical range";
        case Archetype::BenignSharpDecrease:
            return "sharp decrease in the current week indicates an improvement, not an anomaly";
    }
    return "";
}

void validate(const SynthConfig& cfg) {
    if (cfg.n_series == 0) throw Error(ErrorCode::InvalidConfig, "n_series must be positive");
    if (cfg.series_length < kMinSeriesLength) {
        throw Error(ErrorCode::InvalidConfig,
                    "series_length must be at least " + std::to_string(kMinSeriesLength));
    }
    if (!(cfg.anomaly_rate >= 0.0 && cfg.anomaly_rate <= 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "anomaly_rate must lie in [0, 1]");
    }
    if (!(cfg.noise_std >= 0.0) || !std::isfinite(cfg.noise_std)) {
        throw Error(ErrorCode::InvalidConfig, "noise_std must be non-negative");
    }
    double total = 0.0;
    for (const auto& [a, w] : cfg.archetype_weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw Error(ErrorCode::InvalidConfig, "archetype weights must be non-negative");
        }
        total += w;
    }
    if (!(total > 0.0)) throw Error(ErrorCode::InvalidConfig, "archetype weights must sum to > 0");
    if (cfg.anomaly_rate > 0.0 && !(weight_sum(kAnomalyArchetypes, cfg.archetype_weights) > 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "anomaly_rate > 0 needs a positive anomaly archetype weight");
    }
    if (cfg.anomaly_rate < 1.0 && !(weight_sum(kNormalArchetypes, cfg.archetype_weights) > 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "anomaly_rate < 1 needs a positive normal archetype weight");
    }
}

Dataset synth_generate(const SynthConfig& cfg) {
    validate(cfg);
    const std::size_t n = cfg.n_series;
    const auto n_anomalies =
        static_cast<std::size_t>(std::llround(static_cast<double>(n) * cfg.anomaly_rate));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng placement(derive_seed(cfg.seed, 0));
    placement.shuffle(order);
    std::vector<bool> anomalous(n, false);
    for (std::size_t k = 0; k < n_anomalies; ++k) anomalous[order[k]] = true;

    const int width = std::max(5, static_cast<int>(std::to_string(n - 1).size()));
    Dataset out;
    out.records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(derive_seed(cfg.seed, i + 1));
        const Archetype a = anomalous[i] ? pick(rng, kAnomalyArchetypes, cfg.archetype_weights)
                                         : pick(rng, kNormalArchetypes, cfg.archetype_weights);
        Generator gen{rng, cfg.series_length, cfg.noise_std};
        auto values = gen.make(a);
        for (auto& x : values) x = clamp_metric(x);

        std::string digits = std::to_string(i);
        digits.insert(0, static_cast<std::size_t>(width) - std::min<std::size_t>(digits.size(), width), '0');
        Record r;
        r.sample.id = "s" + digits;
        r.sample.values = std::move(values);
        r.sample.meta.emplace("archetype", std::string(to_string(a)));
        r.annotation = Annotation{anomalous[i] ? Label::Anomaly : Label::Normal,
                                  std::string(archetype_reason(a)), Provenance::SyntheticTruth};
        out.records.push_back(std::move(r));
    }
    return out;
}

nlohmann::json to_json(const SynthConfig& cfg) {
    auto weights = nlohmann::json::object();
    for (const auto& [a, w] : cfg.archetype_weights) weights[std::string(to_string(a))] = w;
    return {{"n_series", cfg.n_series},       {"series_length", cfg.series_length},
            {"anomaly_rate", cfg.anomaly_rate}, {"archetype_weights", weights},
            {"noise_std", cfg.noise_std},     {"seed", cfg.seed}};
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
    try {
        SynthConfig c;
        c.n_series = j.value("n_series", c.n_series);
        c.series_length = j.value("series_length", c.series_length);
        c.anomaly_rate = j.value("anomaly_rate", c.anomaly_rate);
        c.noise_std = j.value("noise_std", c.noise_std);
        c.seed = j.value("seed", c.seed);
        if (j.contains("archetype_weights")) {
            // Listed archetypes replace their default weight; the rest keep it.
            for (const auto& [name, w] : j["archetype_weights"].items()) {
                const auto a = parse_archetype(name);
                if (!a) throw Error(ErrorCode::InvalidConfig, "unknown archetype '" + name + "'");
                c.archetype_weights[*a] = w.get<double>();
            }
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("synth config: ") + e.what());
    }
}

}  // namespace tsrules
