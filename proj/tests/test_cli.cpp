#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "tsrules/dataset.hpp"
#include "tsrules/evaluation.hpp"
#include "tsrules/io.hpp"
#include "tsrules/refine.hpp"
#include "tsrules/rule_parser.hpp"

using namespace tsrules;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("tsrules_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    Result run(std::vector<std::string> args) {
        args.insert(args.begin(), "tsrules");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
        return {code, out.str(), err.str()};
    }

    nlohmann::json manifest(const std::string& name) const {
        return nlohmann::json::parse(read_file(path(name)));
    }

    fs::path dir_;
};

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) {
        if (!l.empty()) out.push_back(l);
    }
    return out;
}

}  // namespace

TEST_F(Cli, SynthIsRepeatable) {
    ASSERT_EQ(run({"synth", "--n", "200", "--seed", "42", "--out", path("a.jsonl")}).code, 0);
    ASSERT_EQ(run({"synth", "--n", "200", "--seed", "42", "--out", path("b.jsonl")}).code, 0);
    EXPECT_EQ(read_file(path("a.jsonl")), read_file(path("b.jsonl")));
    EXPECT_EQ(load_dataset(path("a.jsonl"), true).size(), 200u);

    const auto m = manifest("a.manifest.json");
    EXPECT_EQ(m["command"], "synth");
    EXPECT_EQ(m["status"], "ok");
    EXPECT_EQ(m["seeds"], nlohmann::json::array({42}));
    EXPECT_EQ(m["config_hash"], manifest("b.manifest.json")["config_hash"]);
    EXPECT_EQ(m["outputs"]["dataset"], path("a.jsonl"));
}

TEST_F(Cli, FlagsOverrideFileOverridesDefaults) {
    write_file(path("c.toml"), std::string_view("[synth]\nn_series = 50\nseed = 3\n"));
    ASSERT_EQ(run({"--config", path("c.toml"), "synth", "--out", path("f.jsonl")}).code, 0);
    EXPECT_EQ(load_dataset(path("f.jsonl"), true).size(), 50u);
    ASSERT_EQ(run({"--config", path("c.toml"), "synth", "--n", "30", "--out", path("g.jsonl")}).code, 0);
    EXPECT_EQ(load_dataset(path("g.jsonl"), true).size(), 30u);
    EXPECT_EQ(manifest("g.manifest.json")["seeds"], nlohmann::json::array({3}));
    ASSERT_EQ(run({"synth", "--out", path("d.jsonl")}).code, 0);
    EXPECT_EQ(load_dataset(path("d.jsonl"), true).size(), 1000u);
    EXPECT_NE(manifest("f.manifest.json")["config_hash"], manifest("g.manifest.json")["config_hash"]);
}

TEST_F(Cli, BadConfigIsADomainError) {
    write_file(path("c.toml"), std::string_view("[synth]\nn_sries = 50\n"));
    const auto r = run({"--config", path("c.toml"), "synth", "--out", path("x.jsonl")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("InvalidConfig"), std::string::npos);
    const auto m = manifest("x.manifest.json");
    EXPECT_EQ(m["status"], "error");
    EXPECT_EQ(m["error"]["code"], "InvalidConfig");

    write_file(path("d.toml"), std::string_view("[synth\n"));
    EXPECT_EQ(run({"--config", path("d.toml"), "synth", "--out", path("y.jsonl")}).code, 1);
    EXPECT_EQ(run({"--config", path("missing.toml"), "synth", "--out", path("z.jsonl")}).code, 1);
}

TEST_F(Cli, UsageErrorsListFlags) {
    auto r = run({"synth", "--bogus", "1", "--out", path("x.jsonl")});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("--out"), std::string::npos);
    EXPECT_FALSE(fs::exists(path("x.manifest.json")));

    r = run({"detect", "--data", path("x.jsonl")});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("--artifact"), std::string::npos);

    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"synth"}).code, 2);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(Cli, DetectWritesOneLinePerSample) {
    ASSERT_EQ(run({"synth", "--n", "300", "--seed", "1", "--out", path("d.jsonl")}).code, 0);
    const std::string rule =
        "if current_value >= 40 then anomaly as \"big\"; if zero_rate >= 0.5 && current_value > 0 then anomaly";
    ASSERT_EQ(run({"--jobs", "1", "detect", "--rule-text", rule, "--data", path("d.jsonl"), "--out",
                   path("one.jsonl")})
                  .code,
              0);
    ASSERT_EQ(run({"--jobs", "4", "detect", "--rule-text", rule, "--data", path("d.jsonl"), "--out",
                   path("four.jsonl")})
                  .code,
              0);
    const auto text = read_file(path("one.jsonl"));
    EXPECT_EQ(text, read_file(path("four.jsonl")));
    const auto lines = lines_of(text);
    ASSERT_EQ(lines.size(), 300u);
    EXPECT_EQ(lines[0].rfind("{\"id\":", 0), 0u);
    bool saw_category = false;
    for (const auto& l : lines) {
        const auto j = nlohmann::json::parse(l);
        EXPECT_EQ(j.size(), 4u);
        if (j["category"].is_string()) saw_category = j["category"] == "big";
    }
    EXPECT_TRUE(saw_category);

    const auto r = run({"detect", "--rule-text", rule, "--data", path("d.jsonl")});
    EXPECT_EQ(r.out, text);
    EXPECT_TRUE(fs::exists("detect.manifest.json"));
    fs::remove("detect.manifest.json");
}

TEST_F(Cli, EvalReportConservesCounts) {
    ASSERT_EQ(run({"synth", "--n", "300", "--seed", "2", "--out", path("d.jsonl")}).code, 0);
    ASSERT_EQ(run({"synth", "--n", "300", "--seed", "3", "--out", path("t.jsonl")}).code, 0);
    write_file(path("rule.txt"), std::string_view("if current_value >= 40 then anomaly"));
    for (const auto& args : std::vector<std::vector<std::string>>{
             {"--rule", path("rule.txt")},
             {"--rule-text", "if values[-60] > 1 then anomaly"},
             {"--baseline", "zscore", "--threshold", "2.5"},
             {"--baseline", "centroid", "--train", path("t.jsonl")}}) {
        std::vector<std::string> cmd = {"eval", "--data", path("d.jsonl"), "--out", path("r.json")};
        cmd.insert(cmd.end(), args.begin(), args.end());
        ASSERT_EQ(run(cmd).code, 0) << args[0];
        const auto j = nlohmann::json::parse(read_file(path("r.json")));
        const auto rep = eval_report_from_json(j["report"]);
        EXPECT_EQ(rep.total(), 300u);
        EXPECT_EQ(j["samples"], 300);
    }
    EXPECT_EQ(run({"eval", "--data", path("d.jsonl"), "--baseline", "centroid"}).code, 2);
    EXPECT_EQ(run({"eval", "--data", path("d.jsonl")}).code, 2);
    EXPECT_EQ(run({"eval", "--data", path("d.jsonl"), "--rule-text", "if x >= 1 then anomaly", "--out",
                   path("bad.json")})
                  .code,
              1);
}

TEST_F(Cli, LabelReviewApply) {
    ASSERT_EQ(run({"synth", "--n", "120", "--seed", "5", "--out", path("d.jsonl")}).code, 0);
    write_file(path("c.toml"), std::string_view(R"([labeling]
trials_per_model = 3

[[backends]]
name = "a"
seed = 1
label_noise = 0.3

[[backends]]
name = "b"
seed = 2
label_noise = 0.3
)"));
    ASSERT_EQ(run({"--config", path("c.toml"), "label", "--data", path("d.jsonl"), "--out", path("l.jsonl")}).code,
              0);
    const auto labeled = load_dataset(path("l.jsonl"), true);
    const auto report = lines_of(read_file(path("l.disagreements.jsonl")));
    ASSERT_FALSE(report.empty());
    EXPECT_EQ(labeled.size() + report.size(), 120u);
    EXPECT_EQ(manifest("l.manifest.json")["seeds"], nlohmann::json::array({1, 2}));

    ASSERT_EQ(run({"review", "--data", path("d.jsonl"), "--report", path("l.disagreements.jsonl")}).code, 0);
    const auto tmpl = lines_of(read_file(path("l.disagreements.overrides.jsonl")));
    ASSERT_EQ(tmpl.size(), report.size());
    std::string filled;
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
        auto j = nlohmann::json::parse(tmpl[i]);
        EXPECT_TRUE(j["label"].is_null());
        EXPECT_TRUE(fs::exists(j["chart"].get<std::string>()));
        if (i == 0) j["label"] = "anomaly";  // the rest stay unreviewed
        filled += j.dump() + "\n";
    }
    write_file(path("o.jsonl"), filled);
    ASSERT_EQ(run({"review", "--data", path("d.jsonl"), "--apply", path("o.jsonl"), "--labeled", path("l.jsonl"),
                   "--out", path("m.jsonl")})
                  .code,
              0);
    const auto merged = load_dataset(path("m.jsonl"), true);
    ASSERT_EQ(merged.size(), labeled.size() + 1);
    EXPECT_EQ(merged.records.back().annotation->provenance, Provenance::HumanOverride);

    EXPECT_EQ(run({"review", "--data", path("d.jsonl")}).code, 2);
}

TEST_F(Cli, LearnAugmentDetect) {
    ASSERT_EQ(run({"synth", "--n", "600", "--seed", "8", "--out", path("d.jsonl")}).code, 0);
    ASSERT_EQ(run({"label", "--data", path("d.jsonl"), "--out", path("l.jsonl")}).code, 0);
    const auto r = run({"learn", "--data", path("l.jsonl"), "--out", path("a.json"), "--starts", "2",
                        "--iterations", "5", "--seed", "4"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto a = load_artifact(path("a.json"));
    EXPECT_EQ(a.trajectory_path, "a.trajectory.jsonl");
    EXPECT_TRUE(fs::exists(path("a.trajectory.jsonl")));
    EXPECT_EQ(r.out, a.rule_text + "\n");
    EXPECT_EQ(manifest("a.manifest.json")["config_hash"], a.config_hash);

    ASSERT_EQ(run({"augment", "--artifact", path("a.json"), "--out", path("b.json"), "--data", path("d.jsonl")}).code,
              0);
    const auto b = load_artifact(path("b.json"));
    ASSERT_TRUE(b.taxonomy);
    for (const auto& c : rule::parse(b.rule_text).clauses) EXPECT_TRUE(c.category);

    ASSERT_EQ(run({"detect", "--artifact", path("a.json"), "--data", path("d.jsonl"), "--out", path("x.jsonl")}).code,
              0);
    ASSERT_EQ(run({"detect", "--artifact", path("b.json"), "--data", path("d.jsonl"), "--out", path("y.jsonl")}).code,
              0);
    const auto x = lines_of(read_file(path("x.jsonl")));
    const auto y = lines_of(read_file(path("y.jsonl")));
    ASSERT_EQ(x.size(), y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto jx = nlohmann::json::parse(x[i]);
        const auto jy = nlohmann::json::parse(y[i]);
        EXPECT_EQ(jx["is_anomaly"], jy["is_anomaly"]);
        EXPECT_EQ(jy["category"].is_string(), jy["is_anomaly"].get<bool>());
    }
}

TEST_F(Cli, Render) {
    ASSERT_EQ(run({"synth", "--n", "10", "--out", path("d.jsonl")}).code, 0);
    ASSERT_EQ(run({"render", "--data", path("d.jsonl"), "--id", "s00003", "--out", path("c.png")}).code, 0);
    EXPECT_EQ(read_file(path("c.png")).substr(1, 3), "PNG");
    const auto r = run({"render", "--data", path("d.jsonl"), "--id", "nope", "--out", path("n.png")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("UnknownSampleId"), std::string::npos);
    EXPECT_EQ(manifest("n.manifest.json")["error"]["code"], "UnknownSampleId");
}
