#include <gtest/gtest.h>
#include <png.h>

#include <filesystem>

#include "tsrules/chart.hpp"
#include "tsrules/error.hpp"
#include "tsrules/labeling.hpp"
#include "tsrules/llm/scripted.hpp"
#include "tsrules/synth.hpp"

using namespace tsrules;

namespace {

struct Decoded {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint8_t> rgb;

    Rgb at(std::uint32_t x, std::uint32_t y) const {
        const auto* p = &rgb[(std::size_t{y} * width + x) * 3];
        return {p[0], p[1], p[2]};
    }
};

// Independent decoder: libpng expands the palette to RGB.
Decoded decode(const std::vector<std::uint8_t>& bytes) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
        ADD_FAILURE() << "libpng: " << img.message;
        return {};
    }
    img.format = PNG_FORMAT_RGB;
    Decoded d{img.width, img.height, std::vector<std::uint8_t>(PNG_IMAGE_SIZE(img))};
    if (!png_image_finish_read(&img, nullptr, d.rgb.data(), 0, nullptr)) ADD_FAILURE() << "libpng: " << img.message;
    return d;
}

TimeSeriesSample series(std::string id, std::vector<double> v) {
    return TimeSeriesSample{std::move(id), std::move(v), {}, nlohmann::json::object()};
}

llm::BackendConfig named(std::string name) {
    llm::BackendConfig c;
    c.name = std::move(name);
    return c;
}

template <class F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::Io;
}

}  // namespace

TEST(Png, EncoderOutputDecodes) {
    const std::array<Rgb, 2> palette = {Rgb{0, 0, 0}, Rgb{250, 10, 20}};
    std::vector<std::uint8_t> px(6 * 4, 0);
    px[1 * 6 + 2] = 1;
    const auto d = decode(encode_png(6, 4, palette, px));
    ASSERT_EQ(d.width, 6u);
    ASSERT_EQ(d.height, 4u);
    EXPECT_EQ(d.at(2, 1), (Rgb{250, 10, 20}));
    EXPECT_EQ(d.at(0, 0), (Rgb{0, 0, 0}));
}

TEST(Chart, SameSampleSameBytes) {
    const auto s = synth_generate(SynthConfig{.n_series = 1, .seed = 8}).records[0].sample;
    EXPECT_EQ(render_chart(s), render_chart(s));
}

TEST(Chart, SyntheticSeriesDecodesAtDeclaredSize) {
    const auto s = synth_generate(SynthConfig{.n_series = 1, .seed = 9}).records[0].sample;
    ASSERT_EQ(s.values.size(), 53u);
    const auto png = render_chart(s);
    const auto d = decode(png);
    EXPECT_EQ(d.width, 800u);
    EXPECT_EQ(d.height, 400u);
    // Decoded pixels match the raster through the palette.
    const auto r = rasterize_chart(s);
    for (std::uint32_t y = 0; y < r.height; y += 7) {
        for (std::uint32_t x = 0; x < r.width; x += 5) ASSERT_EQ(d.at(x, y), kChartPalette[r.at(x, y)]);
    }
}

TEST(Chart, ConstantSeriesIsHorizontalAtMidPlot) {
    const auto r = rasterize_chart(series("c", std::vector<double>(20, 7.0)));
    const std::uint32_t plot_h = kChartHeight - kMarginTop - kMarginBottom;
    const std::uint32_t mid = kMarginTop + (plot_h - 1) / 2;
    for (std::uint32_t x = kMarginLeft + 10; x < kChartWidth - kMarginRight - 20; x += 11) {
        std::vector<std::uint32_t> rows;
        for (std::uint32_t y = kMarginTop; y < kChartHeight - kMarginBottom; ++y) {
            if (r.at(x, y) == kSeries) rows.push_back(y);
        }
        ASSERT_FALSE(rows.empty()) << x;
        EXPECT_LE(std::abs(static_cast<int>(rows.front()) - static_cast<int>(mid)), 1) << x;
        EXPECT_LE(rows.back() - rows.front(), 1u) << x;
    }
}

TEST(Chart, HigherValuesDrawHigher) {
    std::vector<double> v(10, 1.0);
    v.back() = 100.0;
    const auto r = rasterize_chart(series("s", v));
    const auto top_row = [&](std::uint32_t x) {
        for (std::uint32_t y = 0; y < r.height; ++y)
            if (r.at(x, y) == kSeries) return y;
        return r.height;
    };
    EXPECT_LT(top_row(kChartWidth - kMarginRight - 1), top_row(kMarginLeft + 2));
}

TEST(Consensus, MajorityOfThree) {
    std::vector<Vote> v(3);
    v[0].label = Label::Anomaly;
    v[1].label = Label::Anomaly;
    v[2].label = Label::Normal;
    EXPECT_EQ(majority(v), Label::Anomaly);
    v[1].label.reset();
    EXPECT_EQ(majority(v), std::nullopt);
}

TEST(Consensus, UnanimousMajoritiesAreAccepted) {
    llm::ScriptedBackend a(named("a")), b(named("b"));
    a.script_label("x", 1, Label::Anomaly, "spike");
    a.script_label("x", 2, Label::Anomaly, "spike");
    a.script_label("x", 3, Label::Normal, "flat");
    for (std::size_t t = 1; t <= 3; ++t) b.script_label("x", t, Label::Anomaly, "jump");
    const auto o = consensus_label(series("x", std::vector<double>(12, 2.0)), {}, {&a, &b});
    EXPECT_EQ(o.status, ConsensusStatus::Accepted);
    EXPECT_EQ(o.label, Label::Anomaly);
    EXPECT_EQ(o.reason, "spike");
    ASSERT_EQ(o.votes.size(), 6u);
    for (const auto& m : o.majorities) EXPECT_EQ(m, o.label);
}

TEST(Consensus, SplitMajoritiesAreDisagreement) {
    llm::ScriptedBackend a(named("a")), b(named("b"));
    for (std::size_t t = 1; t <= 3; ++t) {
        a.script_label("x", t, Label::Anomaly, "spike");
        b.script_label("x", t, Label::Normal, "flat");
    }
    const auto o = consensus_label(series("x", std::vector<double>(12, 2.0)), {}, {&a, &b});
    EXPECT_EQ(o.status, ConsensusStatus::Disagreement);
    EXPECT_FALSE(o.label);
}

TEST(Consensus, BackendFailingEveryTrial) {
    llm::ScriptedBackend a(named("a")), b(named("b"));
    for (std::size_t t = 1; t <= 3; ++t) {
        a.script_label("x", t, Label::Anomaly, "spike");
        b.script_failure("x", t, ErrorCode::RetriesExhausted);
    }
    const auto o = consensus_label(series("x", std::vector<double>(12, 2.0)), {}, {&a, &b});
    EXPECT_EQ(o.status, ConsensusStatus::BackendFailure);
    EXPECT_EQ(o.votes[3].failure, ErrorCode::RetriesExhausted);
}

TEST(Consensus, PrefilterSkipsBackends) {
    llm::ScriptedBackend a(named("a"));
    ConsensusConfig cfg;
    cfg.prefilter = "if zero_rate(8) == 1.0 && current_value >= 12 then anomaly";
    std::vector<double> v(20, 3.0);
    for (std::size_t i = 11; i < 19; ++i) v[i] = 0.0;
    v.back() = 15.0;
    const auto o = consensus_label(series("z", v), cfg, {&a});
    EXPECT_EQ(o.status, ConsensusStatus::Prefiltered);
    EXPECT_EQ(o.label, Label::Anomaly);
    EXPECT_EQ(a.calls(), 0u);
}

TEST(Consensus, EvenTrialsRejected) {
    ConsensusConfig cfg;
    cfg.trials_per_model = 2;
    EXPECT_EQ(code_of([&] { validate(cfg); }), ErrorCode::InvalidConfig);
    cfg.trials_per_model = 3;
    cfg.prefilter = "if then";
    EXPECT_EQ(code_of([&] { validate(cfg); }), ErrorCode::InvalidConfig);
}

TEST(LabelDataset, AllAgreeKeepsEverySample) {
    auto truth = synth_generate(SynthConfig{.n_series = 60, .seed = 21});
    llm::ScriptedBackend a(named("a")), b(named("b"));
    a.set_truth(truth);
    b.set_truth(truth);
    Dataset input = truth;
    for (auto& r : input.records) r.annotation.reset();
    const auto res = label_dataset(input, {}, {&a, &b}, {.jobs = 3});
    EXPECT_TRUE(res.report.empty());
    ASSERT_EQ(res.labeled.size(), input.size());
    for (std::size_t i = 0; i < input.size(); ++i) {
        EXPECT_EQ(res.labeled.records[i].sample.id, truth.records[i].sample.id);
        EXPECT_EQ(res.labeled.records[i].annotation->label, truth.records[i].annotation->label);
        EXPECT_EQ(res.labeled.records[i].annotation->provenance, Provenance::LLMConsensus);
    }
    EXPECT_EQ(a.calls(), 180u);
}

TEST(LabelDataset, OneEngineeredDisagreement) {
    auto truth = synth_generate(SynthConfig{.n_series = 30, .seed = 22});
    llm::ScriptedBackend a(named("a")), b(named("b"));
    a.set_truth(truth);
    b.set_truth(truth);
    const auto& victim = truth.records[4];
    const Label other = victim.annotation->label == Label::Anomaly ? Label::Normal : Label::Anomaly;
    for (std::size_t t = 1; t <= 3; ++t) b.script_label(victim.sample.id, t, other, "disagree");
    const auto dir = std::filesystem::temp_directory_path() / "tsrules_label_charts";
    std::filesystem::remove_all(dir);
    const auto res = label_dataset(truth, {}, {&a, &b}, {.jobs = 1, .chart_dir = dir});
    EXPECT_EQ(res.labeled.size(), truth.size() - 1);
    ASSERT_EQ(res.report.size(), 1u);
    EXPECT_EQ(res.report[0].id, victim.sample.id);
    EXPECT_EQ(res.report[0].votes.size(), 6u);
    EXPECT_TRUE(std::filesystem::exists(res.report[0].chart_path));
    for (const auto& r : res.labeled.records) EXPECT_NE(r.sample.id, victim.sample.id);

    const auto again = parse_disagreements(dump_disagreements(res.report));
    ASSERT_EQ(again.size(), 1u);
    EXPECT_EQ(again[0].votes, res.report[0].votes);
    EXPECT_EQ(again[0].chart_path, res.report[0].chart_path);
    std::filesystem::remove_all(dir);
}

TEST(LabelDataset, ParallelEqualsSequential) {
    auto truth = synth_generate(SynthConfig{.n_series = 80, .seed = 23});
    auto cfg = named("a");
    cfg.label_noise = 0.3;
    llm::ScriptedBackend a(cfg);
    auto cfg_b = named("b");
    cfg_b.label_noise = 0.3;
    llm::ScriptedBackend b(cfg_b);
    a.set_truth(truth);
    b.set_truth(truth);
    const auto seq = label_dataset(truth, {}, {&a, &b}, {.jobs = 1});
    const auto par = label_dataset(truth, {}, {&a, &b}, {.jobs = 4});
    EXPECT_EQ(seq.labeled, par.labeled);
    EXPECT_EQ(dump_disagreements(seq.report), dump_disagreements(par.report));
    EXPECT_FALSE(seq.report.empty());
}

TEST(Overrides, FlipOneSample) {
    const auto d = synth_generate(SynthConfig{.n_series = 10, .seed = 24});
    const auto& target = d.records[2];
    const auto flipped = target.annotation->label == Label::Anomaly ? "normal" : "anomaly";
    const auto out = apply_overrides(
        d, std::string_view("{\"id\":\"" + target.sample.id + "\",\"label\":\"" + flipped + "\",\"reason\":\"checked\"}\n"));
    std::size_t changed = 0;
    for (std::size_t i = 0; i < d.size(); ++i) changed += !(out.records[i] == d.records[i]);
    EXPECT_EQ(changed, 1u);
    EXPECT_EQ(out.records[2].annotation->provenance, Provenance::HumanOverride);
    EXPECT_EQ(out.records[2].annotation->reason, "checked");
}

TEST(Overrides, EmptyFileIsIdentity) {
    const auto d = synth_generate(SynthConfig{.n_series = 10, .seed = 24});
    EXPECT_EQ(apply_overrides(d, std::string_view("")), d);
}

TEST(Overrides, UnknownId) {
    const auto d = synth_generate(SynthConfig{.n_series = 10, .seed = 24});
    EXPECT_EQ(code_of([&] { apply_overrides(d, std::string_view(R"({"id":"nope","label":"normal"})")); }),
              ErrorCode::UnknownSampleId);
}

TEST(Overrides, ExcludedSampleComesBackFromPool) {
    auto d = synth_generate(SynthConfig{.n_series = 10, .seed = 24});
    const auto pool = d;
    const auto id = d.records.back().sample.id;
    d.records.pop_back();
    const auto out = apply_overrides(d, std::string_view(R"({"id":")" + id + R"(","label":"normal"})"), &pool);
    ASSERT_EQ(out.size(), 10u);
    EXPECT_EQ(out.records.back().sample.id, id);
    EXPECT_EQ(out.records.back().annotation->provenance, Provenance::HumanOverride);
}

TEST(ChartFileName, Sanitized) {
    EXPECT_EQ(chart_file_name("a/b c"), "a_b_c.png");
    EXPECT_EQ(chart_file_name(".."), "_...png");
}
