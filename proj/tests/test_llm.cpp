#include <gtest/gtest.h>
#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <thread>

#include "tsrules/error.hpp"
#include "tsrules/llm/http.hpp"
#include "tsrules/llm/policy.hpp"
#include "tsrules/llm/prompts.hpp"
#include "tsrules/llm/scripted.hpp"
#include "tsrules/llm/tasks.hpp"
#include "tsrules/rule_parser.hpp"
#include "tsrules/synth.hpp"

using namespace tsrules;
using namespace tsrules::llm;

namespace {

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

FeatureSummary summary(double mean, double sd) {
    FeatureSummary s;
    s.mean = mean;
    s.stddev = sd;
    s.p5 = s.p25 = s.p50 = s.p75 = s.p95 = mean;
    s.count = 10;
    return s;
}

// Only the listed features separate the classes; every other feature matches.
ClassStats stats_with(std::map<Feature, std::pair<double, double>> gaps) {
    ClassStats s;
    for (const auto f : kAllFeatures) {
        s.anomaly[f] = summary(1.0, 1.0);
        s.normal[f] = summary(1.0, 1.0);
    }
    for (const auto& [f, means] : gaps) {
        s.anomaly[f] = summary(means.first, 5.0);
        s.normal[f] = summary(means.second, 5.0);
    }
    return s;
}

BackendConfig scripted(std::uint64_t seed = 1) {
    BackendConfig c;
    c.seed = seed;
    return c;
}

std::string modify_once(const std::string& rule, Behavior behavior, const ClassStats& stats,
                        const Trajectory* trajectory = nullptr) {
    ScriptedBackend b(scripted());
    ModificationRequest req;
    req.rule_text = rule;
    req.behavior = behavior;
    req.report = EvalReport::from_counts(10, 2, 80, 8);
    req.stats = stats;
    req.trajectory = trajectory;
    return propose_modification(req, b).rule_text;
}

}  // namespace

TEST(Prompts, TemplatesCarryTaskHeaderAndPayload) {
    for (const auto t : {Task::Label, Task::Patterns, Task::Prototype, Task::Modify, Task::Taxonomy}) {
        const auto p = build_prompt(t, {{"k", 1}});
        const auto view = read_prompt(p);
        ASSERT_TRUE(view) << task_name(t);
        EXPECT_EQ(view->task, t);
        EXPECT_EQ(view->payload, (nlohmann::json{{"k", 1}}));
    }
}

TEST(Prompts, RenderLeavesUnknownBracesAlone) {
    EXPECT_EQ(render("{a} {\"x\": 1} {b}", {{"a", "A"}}), "A {\"x\": 1} {b}");
}

TEST(Prompts, FirstJsonObjectSkipsBrokenSpans) {
    const auto j = first_json_object("noise {not json} then {\"a\": \"}\"} and {\"b\": 2}");
    ASSERT_TRUE(j);
    EXPECT_EQ((*j)["a"], "}");
    EXPECT_FALSE(first_json_object("no object here"));
}

TEST(LabelResponse, DirectParse) {
    const auto r = parse_label_response(R"({"label":"anomaly","reason":"spike vs history"})");
    EXPECT_EQ(r.label, Label::Anomaly);
    EXPECT_EQ(r.reason, "spike vs history");
}

TEST(LabelResponse, EmbeddedInProse) {
    const auto r = parse_label_response("Looking at the chart.\n{\"label\": \"Normal\", \"reason\": \"flat\"}\nDone.");
    EXPECT_EQ(r.label, Label::Normal);
    EXPECT_EQ(r.reason, "flat");
}

TEST(LabelResponse, Errors) {
    EXPECT_EQ(code_of([] { parse_label_response(R"({"label":"maybe"})"); }), ErrorCode::InvalidLabelValue);
    EXPECT_EQ(code_of([] { parse_label_response("anomaly, clearly"); }), ErrorCode::NoStructuredObject);
    EXPECT_EQ(code_of([] { parse_label_response(R"({"label":"anomaly","reason":"  "})"); }), ErrorCode::EmptyReason);
    EXPECT_EQ(code_of([] { parse_label_response(R"({"label":"anomaly"})"); }), ErrorCode::EmptyReason);
}

TEST(LabelPrompt, CarriesNoSeriesValues) {
    const auto p = label_prompt({"s1", 2, 3, 53, ""});
    EXPECT_EQ(p.find("12345.678"), std::string::npos);
    const auto view = read_prompt(p);
    ASSERT_TRUE(view);
    EXPECT_EQ(view->payload, (nlohmann::json{{"series_id", "s1"}, {"trial", 2}, {"trials", 3}, {"weeks", 53}}));
}

TEST(Scripted, IdenticalInputsGiveIdenticalOutputs) {
    const auto d = synth_generate(SynthConfig{.n_series = 50, .seed = 3});
    auto cfg = scripted(9);
    cfg.label_noise = 0.3;
    ScriptedBackend a(cfg), b(cfg);
    a.set_truth(d);
    b.set_truth(d);
    const std::vector<std::uint8_t> img = {1, 2, 3};
    for (const auto& r : d.records) {
        const auto p = label_prompt({r.sample.id, 1, 1, r.sample.values.size(), ""});
        EXPECT_EQ(a.complete(p, img), a.complete(p, img));
        EXPECT_EQ(a.complete(p, img), b.complete(p, img));
    }
    EXPECT_EQ(a.calls(), 150u);
}

TEST(Scripted, NoiseFreeOracleReturnsGeneratorLabels) {
    const auto d = synth_generate(SynthConfig{.n_series = 300, .seed = 11});
    ScriptedBackend b(scripted());
    b.set_truth(d);
    for (const auto& r : d.records) {
        const auto got = request_label(b, {r.sample.id, 1, 1, r.sample.values.size(), ""}, {});
        EXPECT_EQ(got.label, r.annotation->label) << r.sample.id;
        EXPECT_EQ(got.reason, r.annotation->reason);
    }
}

TEST(Scripted, NoiseRateIsRoughlyHonoured) {
    const auto d = synth_generate(SynthConfig{.n_series = 2000, .seed = 12});
    auto cfg = scripted(4);
    cfg.label_noise = 0.2;
    ScriptedBackend b(cfg);
    b.set_truth(d);
    std::size_t flipped = 0;
    for (const auto& r : d.records) {
        flipped += request_label(b, {r.sample.id, 1, 1, 53, ""}, {}).label != r.annotation->label;
    }
    // Binomial(2000, 0.2): sd ~ 17.9, so +-100 is over 5 sd.
    EXPECT_NEAR(static_cast<double>(flipped), 400.0, 100.0);
}

TEST(Scripted, ScriptedAnswersAndFailures) {
    ScriptedBackend b(scripted());
    b.script_label("x", 1, Label::Anomaly, "scripted reason");
    b.script_failure("x", 2, ErrorCode::Timeout);
    EXPECT_EQ(request_label(b, {"x", 1, 2, 10, ""}, {}).reason, "scripted reason");
    EXPECT_EQ(code_of([&] { request_label(b, {"x", 2, 2, 10, ""}, {}); }), ErrorCode::Timeout);
    EXPECT_EQ(code_of([&] { request_label(b, {"unknown", 1, 1, 10, ""}, {}); }), ErrorCode::TransportError);
}

TEST(Patterns, RepeatedReasonYieldsItsTrigram) {
    Dataset d;
    for (int i = 0; i < 5; ++i) {
        Record r;
        r.sample = {"s" + std::to_string(i), std::vector<double>(10, 1.0), {}, nlohmann::json::object()};
        r.annotation = Annotation{Label::Anomaly, "sharp spike above history", Provenance::SyntheticTruth};
        d.records.push_back(r);
    }
    ScriptedBackend b(scripted());
    const auto p = extract_patterns(d, b);
    const auto it = std::find_if(p.phrases.begin(), p.phrases.end(),
                                 [](const Phrase& ph) { return ph.text == "sharp spike above"; });
    ASSERT_NE(it, p.phrases.end());
    EXPECT_EQ(it->support, 5u);
}

TEST(Patterns, EmptyCorpus) {
    Dataset d;
    Record r;
    r.sample = {"s", std::vector<double>(10, 1.0), {}, nlohmann::json::object()};
    r.annotation = Annotation{Label::Normal, "", Provenance::SyntheticTruth};
    d.records.push_back(r);
    ScriptedBackend b(scripted());
    EXPECT_EQ(code_of([&] { extract_patterns(d, b); }), ErrorCode::EmptyReasonCorpus);
}

TEST(Patterns, SyntheticReasonsSurfaceGeneratorVocabulary) {
    const auto d = synth_generate(SynthConfig{.n_series = 400, .seed = 5});
    ScriptedBackend b(scripted());
    const auto p = extract_patterns(d, b);
    ASSERT_FALSE(p.phrases.empty());
    EXPECT_LE(p.phrases.size(), 10u);
    std::vector<std::string> texts;
    for (const auto& ph : p.phrases) {
        EXPECT_FALSE(ph.text.empty());
        texts.push_back(ph.text);
    }
    for (std::size_t i = 1; i < p.phrases.size(); ++i) EXPECT_GE(p.phrases[i - 1].support, p.phrases[i].support);
    const auto has = [&](const std::string& s) { return std::find(texts.begin(), texts.end(), s) != texts.end(); };
    EXPECT_TRUE(has("current week"));
    EXPECT_TRUE(has("historical levels"));
}

TEST(Prototype, MidpointOfClassMeans) {
    ScriptedBackend b(scripted());
    PrototypeRequest req;
    req.stats = stats_with({{Feature::CurrentValue, {80.0, 10.0}}});
    EXPECT_EQ(generate_prototype(req, b), "if current_value >= 45 then anomaly");
}

TEST(Prototype, TopTwoFeaturesAsSeparateClauses) {
    ScriptedBackend b(scripted());
    PrototypeRequest req;
    // zero_rate is lower for anomalies, so its clause points the other way.
    req.stats = stats_with({{Feature::CurrentValue, {80.0, 10.0}}, {Feature::ZeroRate, {0.0, 40.0}}});
    EXPECT_EQ(generate_prototype(req, b), "if current_value >= 45 then anomaly;\nif zero_rate <= 20 then anomaly");
}

TEST(Prototype, IdenticalStats) {
    ScriptedBackend b(scripted());
    PrototypeRequest req;
    req.stats = stats_with({});
    EXPECT_EQ(code_of([&] { generate_prototype(req, b); }), ErrorCode::NoDiscriminativeFeature);
}

TEST(Prototype, CandidatesJitterWithinBounds) {
    const auto stats = stats_with({{Feature::CurrentValue, {80.0, 10.0}}});
    std::set<std::string> seen;
    for (std::size_t k = 1; k <= 20; ++k) {
        const auto ast = policy::prototype(stats, 2, 7, k);
        const auto& c = std::get<rule::Compare>(ast.clauses[0].condition->node);
        const double t = std::get<rule::Number>(c.rhs->node).value;
        EXPECT_GE(t, 45.0 * 0.85 - 1e-9);
        EXPECT_LE(t, 45.0 * 1.15 + 1e-9);
        seen.insert(rule::print(ast));
    }
    EXPECT_GT(seen.size(), 10u);
}

TEST(Prototype, UnparseableAnswersAreRetriedThenRejected) {
    auto cfg = scripted();
    cfg.max_retries = 2;
    ScriptedBackend b(cfg);
    int calls = 0;
    b.override_task(Task::Prototype, [&](const PromptView&) {
        return ++calls < 3 ? std::string("{\"rule\": \"if current_value >>= 3 then anomaly\"}")
                           : std::string("```\nif current_value >= 3 then anomaly\n```");
    });
    PrototypeRequest req;
    EXPECT_EQ(generate_prototype(req, b), "if current_value >= 3 then anomaly");
    EXPECT_EQ(calls, 3);

    ScriptedBackend bad(cfg);
    bad.override_task(Task::Prototype, [](const PromptView&) { return std::string("no rule today"); });
    EXPECT_EQ(code_of([&] { generate_prototype(req, bad); }), ErrorCode::PrototypeUnparseable);
    EXPECT_EQ(bad.calls(), 3u);
}

TEST(Modify, OverConservativeLowersThreshold) {
    const auto stats = stats_with({{Feature::CurrentValue, {80.0, 10.0}}, {Feature::ZScore, {10.0, 0.0}}});
    EXPECT_EQ(modify_once("if current_value >= 50 then anomaly", Behavior::OverConservative, stats),
              "if current_value >= 45 then anomaly");
}

TEST(Modify, OverAggressiveRaisesThreshold) {
    const auto stats = stats_with({{Feature::CurrentValue, {80.0, 10.0}}});
    EXPECT_EQ(modify_once("if current_value >= 50 then anomaly", Behavior::OverAggressive, stats),
              "if current_value >= 55 then anomaly");
}

TEST(Modify, BalancedStepsTowardTheWeakerMetric) {
    const auto stats = stats_with({{Feature::CurrentValue, {80.0, 10.0}}});
    ScriptedBackend b(scripted());
    ModificationRequest req;
    req.rule_text = "if current_value >= 50 then anomaly";
    req.behavior = Behavior::Balanced;
    req.stats = stats;
    req.report = EvalReport::from_counts(8, 1, 80, 3);  // recall below precision
    EXPECT_EQ(propose_modification(req, b).rule_text, "if current_value >= 47.5 then anomaly");
    req.report = EvalReport::from_counts(8, 3, 80, 1);
    EXPECT_EQ(propose_modification(req, b).rule_text, "if current_value >= 52.5 then anomaly");
}

TEST(Modify, RepeatedFailureSwitchesToNextFeature) {
    const auto stats = stats_with({{Feature::CurrentValue, {80.0, 10.0}}, {Feature::ZScore, {10.0, 0.0}}});
    TrajectoryEntry e;
    e.iteration = 1;
    e.rule_text = "if current_value >= 50 then anomaly";
    e.behavior = Behavior::OverConservative;
    e.modification_note = "loosen:all:0.1";
    e.proposed_rule = "if current_value >= 45 then anomaly";
    const Trajectory t = {e};
    EXPECT_EQ(modify_once("if current_value >= 50 then anomaly", Behavior::OverConservative, stats, &t),
              "if current_value >= 50 then anomaly;\nif z_score >= 5 then anomaly");
}

TEST(Modify, DegenerateRegeneratesWithExtraFeature) {
    const auto stats = stats_with({{Feature::CurrentValue, {80.0, 10.0}},
                                   {Feature::ZScore, {10.0, 0.0}},
                                   {Feature::TrendSlope, {3.0, 0.0}}});
    EXPECT_EQ(modify_once("if current_value >= 5000 then anomaly", Behavior::DegenerateAllNormal, stats),
              "if current_value >= 45 then anomaly;\nif z_score >= 5 then anomaly;\nif trend_slope >= 1.5 then anomaly");
}

TEST(Modify, ShiftRespectsDirectionAndNegation) {
    const auto ast = rule::parse("if 10 <= current_value && !(z_score > 4) && zero_rate <= 0.5 && "
                                 "trend_slope == 2 && recent_mean >= -20 then anomaly");
    EXPECT_EQ(rule::print(policy::shift_thresholds(ast, 0.1, true)),
              "if 9 <= current_value && !(z_score > 4.4) && zero_rate <= 0.55 && trend_slope == 2 && "
              "recent_mean >= -22 then anomaly");
}

TEST(Taxonomy, SeverityTiers) {
    ScriptedBackend b(scripted());
    const auto t = generate_taxonomy(rule::parse("if current_value >= 80 then anomaly"), b);
    ASSERT_EQ(t.categories.size(), 1u);
    EXPECT_EQ(t.assignment.at(0), "Critical Stock-Out Crisis");
}

TEST(Taxonomy, ReferenceRulesMapToTheirCategories) {
    const std::vector<std::pair<std::string, std::string>> cases = {
        {"if current_value >= 80.0 then anomaly", "Critical Stock-Out Crisis"},
        {"if ratio(current_value, values[-2]) > 10 && current_value >= 50 then anomaly", "Critical Stock-Out Crisis"},
        {"if current_value >= 35 && z_score >= 5.0 then anomaly", "Moderate Stock Pressure"},
        {"if recent_mean < 3.0 && current_value >= 12 then anomaly", "Moderate Stock Pressure"},
    };
    for (const auto& [text, name] : cases) {
        EXPECT_EQ(policy::taxonomy(rule::parse(text)).assignment.at(0), name) << text;
    }
}

TEST(Taxonomy, DistinctFeaturesGetDistinctCategories) {
    ScriptedBackend b(scripted());
    const auto t = generate_taxonomy(rule::parse("if z_score >= 4 then anomaly; if zero_rate <= 0.1 then anomaly"), b);
    ASSERT_EQ(t.categories.size(), 2u);
    EXPECT_NE(t.assignment.at(0), t.assignment.at(1));
}

TEST(Taxonomy, IncompleteAnswerIsRejected) {
    ScriptedBackend b(scripted());
    b.override_task(Task::Taxonomy, [](const PromptView&) {
        return std::string(R"({"categories":[{"name":"A","description":"a"}],"assignment":{"0":"A"}})");
    });
    EXPECT_EQ(code_of([&] { generate_taxonomy(rule::parse("if z_score >= 4 then anomaly; if zero_rate <= 0.1 then anomaly"), b); }),
              ErrorCode::MalformedResponse);
}

TEST(Backend, ConfigValidation) {
    auto c = scripted();
    c.temperature = 0.7;
    EXPECT_EQ(code_of([&] { validate(c); }), ErrorCode::InvalidConfig);
    c = scripted();
    c.kind = BackendKind::Http;
    EXPECT_EQ(code_of([&] { validate(c); }), ErrorCode::InvalidConfig);
    c.endpoint = "http://localhost:1/v1";
    c.model_id = "m";
    EXPECT_NO_THROW(validate(c));
    EXPECT_EQ(backend_config_from_json(to_json(c)), c);
}

TEST(Backend, ConcurrentCallsAreCountedAndBounded) {
    auto cfg = scripted();
    cfg.max_in_flight = 2;
    ScriptedBackend b(cfg);
    std::atomic<int> active{0}, peak{0};
    b.override_task(Task::Taxonomy, [&](const PromptView&) {
        const int now = ++active;
        int p = peak.load();
        while (now > p && !peak.compare_exchange_weak(p, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
        --active;
        return std::string("{}");
    });
    const auto prompt = build_prompt(Task::Taxonomy, nlohmann::json::object());
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) {
        threads.emplace_back([&] {
            for (int k = 0; k < 5; ++k) b.complete(prompt);
        });
    }
    for (auto& t : threads) t.join();
    EXPECT_EQ(b.calls(), 40u);
    EXPECT_LE(peak.load(), 2);
}

TEST(Http, RequestBodyShape) {
    BackendConfig c;
    c.kind = BackendKind::Http;
    c.endpoint = "http://localhost:1/v1/chat/completions";
    c.model_id = "vision-model";
    HttpBackend b(c);
    const std::vector<std::uint8_t> png = {'P', 'N', 'G'};
    const auto body = b.request_body("hello", png);
    EXPECT_EQ(body["model"], "vision-model");
    EXPECT_EQ(body["temperature"], 0.0);
    const auto& content = body["messages"][0]["content"];
    EXPECT_EQ(body["messages"][0]["role"], "user");
    EXPECT_EQ(content[0]["text"], "hello");
    EXPECT_EQ(content[1]["image_url"]["url"], "data:image/png;base64,UE5H");
    EXPECT_EQ(b.request_body("x", {})["messages"][0]["content"].size(), 1u);
}

TEST(Http, ResponseTextShapes) {
    EXPECT_EQ(HttpBackend::response_text(R"({"choices":[{"message":{"content":"hi"}}]})"), "hi");
    EXPECT_EQ(HttpBackend::response_text(R"({"choices":[{"message":{"content":[{"type":"text","text":"a"},{"text":"b"}]}}]})"),
              "ab");
    EXPECT_EQ(HttpBackend::response_text(R"({"content":[{"type":"text","text":"c"}]})"), "c");
    EXPECT_EQ(code_of([] { HttpBackend::response_text("<html>"); }), ErrorCode::MalformedResponse);
    EXPECT_EQ(code_of([] { HttpBackend::response_text("{}"); }), ErrorCode::MalformedResponse);
}

TEST(Http, UnreachableEndpointIsTransportError) {
    BackendConfig c;
    c.kind = BackendKind::Http;
    c.endpoint = "http://127.0.0.1:9/v1/chat/completions";
    c.model_id = "m";
    c.max_retries = 2;
    c.backoff = std::chrono::milliseconds(1);
    c.timeout = std::chrono::milliseconds(2000);
    HttpBackend b(c);
    EXPECT_EQ(code_of([&] { b.complete("hi"); }), ErrorCode::TransportError);
}

class LocalServer : public ::testing::Test {
protected:
    void SetUp() override {
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    void TearDown() override {
        server_.stop();
        thread_.join();
    }
    BackendConfig config(std::string path) const {
        BackendConfig c;
        c.kind = BackendKind::Http;
        c.endpoint = "http://127.0.0.1:" + std::to_string(port_) + path;
        c.model_id = "m";
        c.max_retries = 3;
        c.backoff = std::chrono::milliseconds(1);
        c.api_key_env = "TSRULES_TEST_TOKEN";
        return c;
    }
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

TEST_F(LocalServer, RetriesServerErrorsThenSucceeds) {
    std::atomic<int> hits{0};
    std::string auth;
    server_.Post("/v1/chat", [&](const httplib::Request& req, httplib::Response& res) {
        auth = req.get_header_value("Authorization");
        if (++hits < 3) {
            res.status = hits == 1 ? 503 : 429;
            return;
        }
        const auto body = nlohmann::json::parse(req.body);
        res.set_content(nlohmann::json{{"choices", {{{"message", {{"content", body["model"]}}}}}}}.dump(),
                        "application/json");
    });
    setenv("TSRULES_TEST_TOKEN", "secret-token", 1);
    HttpBackend b(config("/v1/chat"));
    EXPECT_EQ(b.complete("hello"), "m");
    EXPECT_EQ(hits.load(), 3);
    EXPECT_EQ(auth, "Bearer secret-token");
    unsetenv("TSRULES_TEST_TOKEN");
}

TEST_F(LocalServer, PersistentServerErrorExhaustsRetries) {
    std::atomic<int> hits{0};
    server_.Post("/v1/chat", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 500;
    });
    HttpBackend b(config("/v1/chat"));
    EXPECT_EQ(code_of([&] { b.complete("hello"); }), ErrorCode::RetriesExhausted);
    EXPECT_EQ(hits.load(), 4);
}

TEST_F(LocalServer, ClientErrorIsNotRetried) {
    std::atomic<int> hits{0};
    server_.Post("/v1/chat", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 401;
    });
    HttpBackend b(config("/v1/chat"));
    EXPECT_EQ(code_of([&] { b.complete("hello"); }), ErrorCode::TransportError);
    EXPECT_EQ(hits.load(), 1);
}

TEST_F(LocalServer, SlowServerTimesOut) {
    server_.Post("/v1/chat", [&](const httplib::Request&, httplib::Response& res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(400));
        res.set_content("{}", "application/json");
    });
    auto c = config("/v1/chat");
    c.max_retries = 0;
    c.timeout = std::chrono::milliseconds(100);
    HttpBackend b(c);
    EXPECT_EQ(code_of([&] { b.complete("hello"); }), ErrorCode::Timeout);
}
