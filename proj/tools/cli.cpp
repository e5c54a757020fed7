#include "cli.hpp"

#include <functional>
#include <map>
#include <memory>
#include <thread>

#include <CLI11.hpp>

#include "config.hpp"
#include "tsrules/augment.hpp"
#include "tsrules/centroid.hpp"
#include "tsrules/chart.hpp"
#include "tsrules/error.hpp"
#include "tsrules/evaluation.hpp"
#include "tsrules/io.hpp"
#include "tsrules/labeling.hpp"
#include "tsrules/llm/scripted.hpp"
#include "tsrules/refine.hpp"
#include "tsrules/rule_eval.hpp"
#include "tsrules/rule_parser.hpp"
#include "tsrules/synth.hpp"

#ifndef TSRULES_VERSION
#define TSRULES_VERSION "0.0.0"
#endif

namespace tsrules::cli {

namespace fs = std::filesystem;

nlohmann::json to_json(const RunManifest& m) {
    nlohmann::json j = {{"command", m.command},
                        {"tool_version", m.tool_version},
                        {"config_hash", m.config_hash},
                        {"config", m.config},
                        {"seeds", m.seeds},
                        {"inputs", m.inputs},
                        {"outputs", m.outputs},
                        {"started_at", m.started_at},
                        {"finished_at", m.finished_at},
                        {"elapsed_ms", m.elapsed_ms},
                        {"status", m.ok ? "ok" : "error"}};
    if (m.error_code) j["error"] = {{"code", *m.error_code}, {"message", m.error_message.value_or("")}};
    return j;
}

namespace {

// Bad flag combinations found after parsing; exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Context {
    Settings settings;
    unsigned jobs = 1;
    RunManifest& manifest;
    std::ostream& out;
    std::ostream& err;
};

void emit(const std::string& path, std::string_view text, std::ostream& out) {
    if (path == "-") {
        out << text;
    } else {
        write_file(path, text);
    }
}

std::string sibling(const std::string& path, const std::string& suffix) {
    return fs::path(path).replace_extension(suffix).string();
}

const Record& find_record(const Dataset& d, const std::string& id) {
    for (const auto& r : d.records) {
        if (r.sample.id == id) return r;
    }
    throw Error(ErrorCode::UnknownSampleId, "no sample with id '" + id + "'");
}

// --- synth ---------------------------------------------------------------

struct SynthOpts {
    std::optional<std::size_t> n, length;
    std::optional<double> rate, noise;
    std::optional<std::uint64_t> seed;
    std::string out;
};

void synth_cmd(Context& ctx, const SynthOpts& o) {
    ctx.settings.set("synth", "n_series", o.n);
    ctx.settings.set("synth", "series_length", o.length);
    ctx.settings.set("synth", "anomaly_rate", o.rate);
    ctx.settings.set("synth", "noise_std", o.noise);
    ctx.settings.set("synth", "seed", o.seed);
    const auto cfg = ctx.settings.synth();
    ctx.manifest.config = {{"synth", to_json(cfg)}};
    ctx.manifest.seeds = {cfg.seed};
    ctx.manifest.outputs["dataset"] = o.out;
    const auto d = synth_generate(cfg);
    write_file(o.out, dump_dataset(d));
    ctx.err << "wrote " << d.size() << " series (" << d.count(Label::Anomaly) << " anomalous) to " << o.out << "\n";
}

// --- label ---------------------------------------------------------------

struct LabelOpts {
    std::string data, out;
    std::optional<std::string> report, charts, prefilter;
    std::optional<std::size_t> trials;
    std::optional<double> noise;
};

void label_cmd(Context& ctx, const LabelOpts& o) {
    ctx.settings.set("labeling", "trials_per_model", o.trials);
    ctx.settings.set("labeling", "prefilter", o.prefilter);
    const auto cfg = ctx.settings.consensus();
    auto panel = ctx.settings.panel();
    if (o.noise) {
        for (auto& b : panel) {
            if (b.kind == llm::BackendKind::Scripted) b.label_noise = *o.noise;
        }
    }
    const auto report_path = o.report.value_or(sibling(o.out, ".disagreements.jsonl"));
    auto panel_json = nlohmann::json::array();
    for (const auto& b : panel) {
        panel_json.push_back(to_json(b));
        ctx.manifest.seeds.push_back(b.seed);
    }
    ctx.manifest.config = {{"labeling", to_json(cfg)}, {"backends", panel_json}};
    ctx.manifest.inputs["dataset"] = o.data;
    ctx.manifest.outputs["labeled"] = o.out;
    ctx.manifest.outputs["disagreements"] = report_path;
    if (o.charts) ctx.manifest.outputs["charts"] = *o.charts;

    const auto input = load_dataset(o.data, false);
    std::vector<std::unique_ptr<llm::Backend>> owned;
    std::vector<llm::Backend*> backends;
    for (const auto& b : panel) {
        owned.push_back(llm::make_backend(b));
        // The scripted stand-in answers from whatever labels the input carries.
        if (auto* s = dynamic_cast<llm::ScriptedBackend*>(owned.back().get())) s->set_truth(input);
        backends.push_back(owned.back().get());
    }
    LabelingOptions options;
    options.jobs = ctx.jobs;
    if (o.charts) options.chart_dir = *o.charts;
    const auto result = label_dataset(input, cfg, backends, options);
    write_file(o.out, dump_dataset(result.labeled));
    write_file(report_path, dump_disagreements(result.report));

    std::map<ConsensusStatus, std::size_t> tally;
    for (const auto& outcome : result.outcomes) ++tally[outcome.status];
    ctx.err << "labeled " << result.labeled.size() << " of " << input.size() << ": ";
    for (const auto s : {ConsensusStatus::Accepted, ConsensusStatus::Prefiltered, ConsensusStatus::Disagreement,
                         ConsensusStatus::BackendFailure}) {
        ctx.err << to_string(s) << "=" << tally[s] << " ";
    }
    ctx.err << "\n";
}

// --- review --------------------------------------------------------------

struct ReviewOpts {
    std::optional<std::string> report, charts, template_path;
    std::string data;
    std::optional<std::string> apply, labeled, out;
};

void review_cmd(Context& ctx, const ReviewOpts& o) {
    ctx.manifest.inputs["dataset"] = o.data;
    const auto pool = load_dataset(o.data, false);
    if (o.apply) {
        if (!o.labeled || !o.out) throw UsageError("review --apply needs --labeled and --out");
        ctx.manifest.inputs["overrides"] = *o.apply;
        ctx.manifest.inputs["labeled"] = *o.labeled;
        ctx.manifest.outputs["labeled"] = *o.out;
        const auto labeled = load_dataset(*o.labeled, true);
        const auto merged = apply_overrides(labeled, fs::path(*o.apply), &pool);
        write_file(*o.out, dump_dataset(merged));
        ctx.err << "wrote " << merged.size() << " labeled samples to " << *o.out << "\n";
        return;
    }
    if (!o.report) throw UsageError("review needs --report, or --apply with --labeled and --out");
    const auto charts = o.charts.value_or(sibling(*o.report, ".charts"));
    const auto tmpl = o.template_path.value_or(sibling(*o.report, ".overrides.jsonl"));
    ctx.manifest.inputs["disagreements"] = *o.report;
    ctx.manifest.outputs["charts"] = charts;
    ctx.manifest.outputs["template"] = tmpl;

    const auto entries = parse_disagreements(read_file(*o.report));
    std::string lines;
    for (const auto& e : entries) {
        const auto& rec = find_record(pool, e.id);
        const auto chart = (fs::path(charts) / chart_file_name(e.id)).string();
        write_file(chart, render_chart(rec.sample));
        auto votes = nlohmann::json::array();
        for (const auto& v : e.votes) {
            votes.push_back({{"backend", v.backend},
                             {"trial", v.trial},
                             {"label", v.label ? nlohmann::json(to_string(*v.label)) : nlohmann::json(nullptr)},
                             {"reason", v.reason}});
        }
        nlohmann::ordered_json row = {{"id", e.id},          {"label", nullptr},
                                      {"reason", ""},        {"status", to_string(e.status)},
                                      {"chart", chart},      {"votes", votes}};
        lines += row.dump() + "\n";
    }
    write_file(tmpl, lines);
    ctx.err << entries.size() << " samples to review; fill in 'label' in " << tmpl << "\n";
}

// --- learn ---------------------------------------------------------------

struct LearnOpts {
    std::string data, out;
    std::optional<std::string> trajectory;
    std::optional<std::size_t> starts, iterations, patience, epochs;
    std::optional<double> target;
    std::optional<std::uint64_t> seed;
};

void learn_cmd(Context& ctx, const LearnOpts& o) {
    ctx.settings.set("refine", "num_starts", o.starts);
    ctx.settings.set("refine", "max_iterations", o.iterations);
    ctx.settings.set("refine", "patience", o.patience);
    ctx.settings.set("refine", "max_epochs", o.epochs);
    ctx.settings.set("refine", "target_f1", o.target);
    ctx.settings.set("refine", "seed", o.seed);
    auto cfg = ctx.settings.refinement();
    cfg.jobs = ctx.jobs;
    const auto bcfg = ctx.settings.backend();
    const auto trajectory_path = o.trajectory.value_or(sibling(o.out, ".trajectory.jsonl"));
    ctx.manifest.config = {{"refine", to_json(cfg)}, {"backend", to_json(bcfg)}};
    ctx.manifest.seeds = {cfg.seed, bcfg.seed};
    ctx.manifest.inputs["labeled"] = o.data;
    ctx.manifest.outputs["artifact"] = o.out;
    ctx.manifest.outputs["trajectory"] = trajectory_path;

    const auto data = load_dataset(o.data, true);
    const auto backend = llm::make_backend(bcfg);
    auto result = learn(data, cfg, *backend);
    const auto& winner = result.candidates.at(result.artifact.selected_candidate);
    write_file(trajectory_path, dump_trajectory(winner.trajectory));
    // Relative to the artifact so the pair can be moved together.
    result.artifact.trajectory_path =
        fs::path(trajectory_path).lexically_relative(fs::path(o.out).parent_path()).generic_string();
    save_artifact(o.out, result.artifact);

    const auto& test = result.artifact.metrics.at("test");
    ctx.out << result.artifact.rule_text << "\n";
    ctx.err << "candidate " << result.artifact.selected_candidate << " of " << result.candidates.size()
            << ", test F1 " << test.f1 << ", " << backend->calls() << " backend calls\n";
}

// --- eval ----------------------------------------------------------------

struct EvalOpts {
    std::optional<std::string> rule, rule_text, baseline, train;
    std::optional<double> threshold;
    std::string data;
    std::string out = "-";
};

// An artifact JSON or a plain rule file.
std::string rule_from_file(const std::string& path) {
    const auto text = read_file(path);
    const auto j = nlohmann::json::parse(text, nullptr, false);
    if (!j.is_discarded() && j.is_object()) return rule_artifact_from_json(j).rule_text;
    return text;
}

void eval_cmd(Context& ctx, const EvalOpts& o) {
    const int chosen = !!o.rule + !!o.rule_text + !!o.baseline;
    if (chosen != 1) throw UsageError("eval needs exactly one of --rule, --rule-text, --baseline");
    const auto features = ctx.settings.features();
    ctx.manifest.inputs["dataset"] = o.data;
    ctx.manifest.outputs["report"] = o.out;
    const auto data = load_dataset(o.data, true);

    nlohmann::ordered_json result;
    EvalReport report;
    if (o.baseline) {
        const double threshold = o.threshold.value_or(3.0);
        if (*o.baseline == "zscore") {
            ctx.manifest.config = {{"features", to_json(features)}, {"baseline", "zscore"}, {"threshold", threshold}};
            report = baseline_zscore(data, threshold, features);
            result["detector"] = "zscore >= " + rule::format_number(threshold);
        } else if (*o.baseline == "centroid") {
            if (!o.train) throw UsageError("--baseline centroid needs --train");
            ctx.manifest.config = {{"features", to_json(features)}, {"baseline", "centroid"}};
            ctx.manifest.inputs["train"] = *o.train;
            const auto model = baseline_centroid_train(load_dataset(*o.train, true), features);
            std::vector<rule::Decision> decisions;
            decisions.reserve(data.size());
            for (const auto& r : data.records) {
                decisions.push_back({baseline_centroid_predict(model, r.sample) == Label::Anomaly, std::nullopt, false});
            }
            report = tally(data, decisions);
            result["detector"] = "centroid";
        } else {
            throw UsageError("--baseline must be zscore or centroid");
        }
    } else {
        if (o.rule) ctx.manifest.inputs["rule"] = *o.rule;
        const auto text = o.rule ? rule_from_file(*o.rule) : *o.rule_text;
        const auto ast = rule::parse(text);
        ctx.manifest.config = {{"features", to_json(features)}, {"rule", rule::print(ast)}};
        report = evaluate_rule(ast, data, features, ctx.jobs);
        result["detector"] = rule::print(ast);
    }
    const double rate = data.empty() ? 0.0 : static_cast<double>(data.count(Label::Anomaly)) / data.size();
    result["samples"] = data.size();
    result["anomaly_rate"] = rate;
    result["behavior"] = to_string(analyze_behavior(report, rate));
    result["report"] = to_json(report);
    emit(o.out, result.dump(2) + "\n", ctx.out);
}

// --- augment -------------------------------------------------------------

struct AugmentOpts {
    std::string artifact, out;
    std::optional<std::string> data;
};

void augment_cmd(Context& ctx, const AugmentOpts& o) {
    const auto bcfg = ctx.settings.backend();
    ctx.manifest.config = {{"backend", to_json(bcfg)}};
    ctx.manifest.seeds = {bcfg.seed};
    ctx.manifest.inputs["artifact"] = o.artifact;
    ctx.manifest.outputs["artifact"] = o.out;
    const auto before = load_artifact(o.artifact);
    const auto backend = llm::make_backend(bcfg);
    const auto after = augment_artifact(before, *backend);
    if (o.data) {
        ctx.manifest.inputs["dataset"] = *o.data;
        const auto d = load_dataset(*o.data, false);
        if (!verify_invariance(rule::parse(before.rule_text), rule::parse(after.rule_text), d, before.features,
                               ctx.jobs)) {
            throw std::logic_error("categorized rule changed a detection decision");
        }
        ctx.err << "decisions unchanged on " << d.size() << " samples\n";
    }
    save_artifact(o.out, after);
    ctx.out << after.rule_text << "\n";
}

// --- detect --------------------------------------------------------------

struct DetectOpts {
    std::optional<std::string> artifact, rule_text;
    std::string data;
    std::string out = "-";
};

void detect_cmd(Context& ctx, const DetectOpts& o) {
    if (!!o.artifact == !!o.rule_text) throw UsageError("detect needs exactly one of --artifact, --rule-text");
    std::string text;
    FeatureConfig features;
    if (o.artifact) {
        ctx.manifest.inputs["artifact"] = *o.artifact;
        const auto a = load_artifact(*o.artifact);
        text = a.rule_text;
        features = a.features;  // the settings the rule was learned under
    } else {
        text = *o.rule_text;
        features = ctx.settings.features();
    }
    const rule::CompiledRule compiled(rule::parse(text), features);
    ctx.manifest.config = {{"features", to_json(features)}, {"rule", rule::print(compiled.ast())}};
    ctx.manifest.inputs["dataset"] = o.data;
    ctx.manifest.outputs["decisions"] = o.out;

    const auto data = load_dataset(o.data, false);
    const auto decisions = decide_all(compiled, data, ctx.jobs);
    std::string lines;
    lines.reserve(data.size() * 64);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& d = decisions[i];
        const nlohmann::ordered_json row = {
            {"id", data.records[i].sample.id},
            {"is_anomaly", d.is_anomaly},
            {"category", d.category ? nlohmann::ordered_json(*d.category) : nlohmann::ordered_json(nullptr)},
            {"failed", d.failed}};
        lines += row.dump();
        lines += '\n';
    }
    emit(o.out, lines, ctx.out);
}

// --- render --------------------------------------------------------------

struct RenderOpts {
    std::string data, id, out;
};

void render_cmd(Context& ctx, const RenderOpts& o) {
    ctx.manifest.config = {{"width", kChartWidth}, {"height", kChartHeight}};
    ctx.manifest.inputs["dataset"] = o.data;
    ctx.manifest.outputs["png"] = o.out;
    const auto data = load_dataset(o.data, false);
    write_file(o.out, render_chart(find_record(data, o.id).sample));
}

void write_manifest(const std::string& path, RunManifest& m, std::chrono::steady_clock::time_point started,
                    std::ostream& err) {
    m.finished_at = utc_timestamp();
    m.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    m.config_hash = config_hash(m.config);
    try {
        write_file(path, to_json(m).dump(2) + "\n");
    } catch (const std::exception& e) {
        err << "warning: could not write run manifest: " << e.what() << "\n";
    }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Learn, evaluate and apply logic rules for weekly time-series anomalies", "tsrules"};
    app.set_version_flag("--version", TSRULES_VERSION);
    app.require_subcommand(1);
    app.fallthrough();

    std::optional<std::string> config_path, manifest_path;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    app.add_option("--config", config_path, "TOML settings file; flags override its keys");
    app.add_option("--jobs", jobs, "Worker threads (results match a single-threaded run)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--manifest", manifest_path, "Run manifest path (default: next to the main output)");

    // name -> (subcommand, primary output, action)
    struct Entry {
        CLI::App* sub;
        std::function<std::string()> primary;
        std::function<void(Context&)> action;
    };
    std::vector<Entry> entries;

    SynthOpts so;
    {
        auto* s = app.add_subcommand("synth", "Generate a labeled synthetic dataset");
        s->add_option("--n", so.n, "Number of series");
        s->add_option("--length", so.length, "Weeks per series");
        s->add_option("--rate", so.rate, "Fraction of anomalous series");
        s->add_option("--noise", so.noise, "Noise standard deviation");
        s->add_option("--seed", so.seed, "Generator seed");
        s->add_option("--out", so.out, "Dataset JSONL")->required();
        entries.push_back({s, [&] { return so.out; }, [&](Context& c) { synth_cmd(c, so); }});
    }
    LabelOpts lo;
    {
        auto* s = app.add_subcommand("label", "Label a dataset by multi-model consensus");
        s->add_option("--data", lo.data, "Input dataset JSONL")->required();
        s->add_option("--out", lo.out, "Labeled dataset JSONL")->required();
        s->add_option("--report", lo.report, "Disagreement report JSONL (default: <out>.disagreements.jsonl)");
        s->add_option("--charts", lo.charts, "Directory for charts of reported samples");
        s->add_option("--trials", lo.trials, "Trials per model (odd)");
        s->add_option("--prefilter", lo.prefilter, "Rule whose matches are labeled anomalous without asking");
        s->add_option("--noise", lo.noise, "Label noise of scripted backends");
        entries.push_back({s, [&] { return lo.out; }, [&](Context& c) { label_cmd(c, lo); }});
    }
    ReviewOpts ro;
    {
        auto* s = app.add_subcommand("review", "Render disagreements for review, or apply filled-in overrides");
        s->add_option("--data", ro.data, "Dataset the report refers to")->required();
        s->add_option("--report", ro.report, "Disagreement report JSONL");
        s->add_option("--charts", ro.charts, "Chart directory (default: <report>.charts)");
        s->add_option("--template", ro.template_path, "Overrides template (default: <report>.overrides.jsonl)");
        s->add_option("--apply", ro.apply, "Filled-in overrides JSONL");
        s->add_option("--labeled", ro.labeled, "Labeled dataset the overrides apply to");
        s->add_option("--out", ro.out, "Merged labeled dataset");
        entries.push_back({s, [&] { return ro.apply ? ro.out.value_or("review") : ro.report.value_or("review"); },
                           [&](Context& c) { review_cmd(c, ro); }});
    }
    LearnOpts le;
    {
        auto* s = app.add_subcommand("learn", "Learn a rule artifact from a labeled dataset");
        s->add_option("--data", le.data, "Labeled dataset JSONL")->required();
        s->add_option("--out", le.out, "Rule artifact JSON")->required();
        s->add_option("--trajectory", le.trajectory, "Trajectory JSONL (default: <out>.trajectory.jsonl)");
        s->add_option("--starts", le.starts, "Number of candidate starts");
        s->add_option("--iterations", le.iterations, "Refinement iterations per epoch");
        s->add_option("--patience", le.patience, "Iterations without improvement before an epoch stops");
        s->add_option("--epochs", le.epochs, "Maximum epochs");
        s->add_option("--target", le.target, "Target F1");
        s->add_option("--seed", le.seed, "Split and candidate seed");
        entries.push_back({s, [&] { return le.out; }, [&](Context& c) { learn_cmd(c, le); }});
    }
    EvalOpts eo;
    {
        auto* s = app.add_subcommand("eval", "Score a rule or a baseline on a labeled dataset");
        s->add_option("--rule", eo.rule, "Rule artifact JSON or rule text file");
        s->add_option("--rule-text", eo.rule_text, "Rule given inline");
        s->add_option("--baseline", eo.baseline, "zscore or centroid");
        s->add_option("--threshold", eo.threshold, "z-score baseline threshold (default 3)");
        s->add_option("--train", eo.train, "Training data for the centroid baseline");
        s->add_option("--data", eo.data, "Labeled dataset JSONL")->required();
        s->add_option("--out", eo.out, "Report JSON, - for stdout")->capture_default_str();
        entries.push_back({s, [&] { return eo.out; }, [&](Context& c) { eval_cmd(c, eo); }});
    }
    AugmentOpts ao;
    {
        auto* s = app.add_subcommand("augment", "Attach anomaly categories to an artifact's rule");
        s->add_option("--artifact", ao.artifact, "Rule artifact JSON")->required();
        s->add_option("--out", ao.out, "Categorized artifact JSON")->required();
        s->add_option("--data", ao.data, "Dataset on which to confirm decisions are unchanged");
        entries.push_back({s, [&] { return ao.out; }, [&](Context& c) { augment_cmd(c, ao); }});
    }
    DetectOpts dopt;
    {
        auto* s = app.add_subcommand("detect", "Apply a rule to every series of a dataset");
        s->add_option("--artifact", dopt.artifact, "Rule artifact JSON");
        s->add_option("--rule-text", dopt.rule_text, "Rule given inline");
        s->add_option("--data", dopt.data, "Dataset JSONL")->required();
        s->add_option("--out", dopt.out, "Decisions JSONL, - for stdout")->capture_default_str();
        entries.push_back({s, [&] { return dopt.out; }, [&](Context& c) { detect_cmd(c, dopt); }});
    }
    RenderOpts rn;
    {
        auto* s = app.add_subcommand("render", "Render one series as a PNG chart");
        s->add_option("--data", rn.data, "Dataset JSONL")->required();
        s->add_option("--id", rn.id, "Sample id")->required();
        s->add_option("--out", rn.out, "PNG path")->required();
        entries.push_back({s, [&] { return rn.out; }, [&](Context& c) { render_cmd(c, rn); }});
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        const auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.back()->help());
        return 2;
    }

    const auto it = std::find_if(entries.begin(), entries.end(), [](const Entry& e) { return e.sub->parsed(); });
    RunManifest manifest;
    manifest.command = it->sub->get_name();
    manifest.tool_version = TSRULES_VERSION;
    manifest.started_at = utc_timestamp();
    const auto started = std::chrono::steady_clock::now();
    const auto primary = it->primary();
    const auto mpath = manifest_path.value_or(primary == "-" ? manifest.command + ".manifest.json"
                                                             : sibling(primary, ".manifest.json"));
    if (config_path) manifest.inputs["config"] = *config_path;

    const auto fail = [&](std::string code, const std::string& message) {
        manifest.ok = false;
        manifest.error_code = std::move(code);
        manifest.error_message = message;
        err << "error: " << message << "\n";
        write_manifest(mpath, manifest, started, err);
        return 1;
    };
    try {
        Context ctx{config_path ? Settings::from_toml_file(*config_path) : Settings{}, jobs, manifest, out, err};
        it->action(ctx);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n\n" << it->sub->help();
        return 2;
    } catch (const Error& e) {
        return fail(std::string(to_string(e.code())), e.what());
    } catch (const std::exception& e) {
        return fail("Internal", std::string("Internal: ") + e.what());
    }
    write_manifest(mpath, manifest, started, err);
    return 0;
}

}  // namespace tsrules::cli
