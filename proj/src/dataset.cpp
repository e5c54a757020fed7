#include "tsrules/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "tsrules/error.hpp"
#include "tsrules/rng.hpp"

namespace tsrules {

namespace {

constexpr std::string_view kNonFiniteMarker = "\x01nonfinite:";

// JSON has no NaN/Infinity literals but common writers (Python's json module)
// emit them. Quote them outside of strings so the record parses and the
// value check can report NonFiniteValue instead of a generic syntax error.
std::string quote_nonfinite_literals(std::string_view line) {
    static constexpr std::string_view kTokens[] = {"-Infinity", "Infinity", "NaN"};
    std::string out;
    out.reserve(line.size());
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_string) {
            out += c;
            if (c == '\\' && i + 1 < line.size()) {
                out += line[++i];
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
            out += c;
            continue;
        }
        bool replaced = false;
        for (const auto token : kTokens) {
            if (line.substr(i, token.size()) == token) {
                out += "\"\\u0001nonfinite:";
                out += token;
                out += '"';
                i += token.size() - 1;
                replaced = true;
                break;
            }
        }
        if (!replaced) out += c;
    }
    return out;
}

[[noreturn]] void fail_at(ErrorCode code, std::size_t line, const std::string& what) {
    throw Error(code, "record " + std::to_string(line) + ": " + what);
}

}  // namespace

std::string_view to_string(Label label) noexcept {
    return label == Label::Anomaly ? "anomaly" : "normal";
}

std::string_view to_string(Provenance provenance) noexcept {
    switch (provenance) {
        case Provenance::LLMConsensus: return "llm_consensus";
        case Provenance::PreFilter: return "prefilter";
        case Provenance::HumanOverride: return "human_override";
        case Provenance::SyntheticTruth: return "synthetic_truth";
    }
    return "synthetic_truth";
}

std::optional<Label> parse_label(std::string_view text) noexcept {
    if (text == "anomaly") return Label::Anomaly;
    if (text == "normal") return Label::Normal;
    return std::nullopt;
}

std::optional<Provenance> parse_provenance(std::string_view text) noexcept {
    if (text == "llm_consensus") return Provenance::LLMConsensus;
    if (text == "prefilter") return Provenance::PreFilter;
    if (text == "human_override") return Provenance::HumanOverride;
    if (text == "synthetic_truth") return Provenance::SyntheticTruth;
    return std::nullopt;
}

bool Dataset::fully_labeled() const noexcept {
    return std::all_of(records.begin(), records.end(),
                       [](const Record& r) { return r.is_labeled(); });
}

std::size_t Dataset::count(Label label) const noexcept {
    return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [&](const Record& r) {
        return r.annotation && r.annotation->label == label;
    }));
}

double Dataset::anomaly_rate() const noexcept {
    if (records.empty()) return 0.0;
    return static_cast<double>(count(Label::Anomaly)) / static_cast<double>(records.size());
}

std::vector<std::string> Dataset::ids() const {
    std::vector<std::string> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.sample.id);
    return out;
}

void validate_sample(const TimeSeriesSample& sample) {
    if (sample.id.empty()) throw Error(ErrorCode::MalformedRecord, "empty sample id");
    for (std::size_t i = 0; i < sample.values.size(); ++i) {
        if (!std::isfinite(sample.values[i])) {
            throw Error(ErrorCode::NonFiniteValue,
                        "sample '" + sample.id + "' value " + std::to_string(i) + " is not finite");
        }
    }
    if (sample.values.size() < kMinSeriesLength) {
        throw Error(ErrorCode::SeriesTooShort,
                    "sample '" + sample.id + "' has " + std::to_string(sample.values.size()) +
                        " values, need at least " + std::to_string(kMinSeriesLength));
    }
}

void validate_dataset(const Dataset& dataset) {
    std::set<std::string_view> seen;
    for (const auto& record : dataset.records) {
        validate_sample(record.sample);
        if (record.annotation && record.annotation->provenance == Provenance::LLMConsensus &&
            record.annotation->reason.empty()) {
            throw Error(ErrorCode::MalformedRecord,
                        "sample '" + record.sample.id + "' has consensus label without reason");
        }
        if (!seen.insert(record.sample.id).second) {
            throw Error(ErrorCode::DuplicateId, "duplicate id '" + record.sample.id + "'");
        }
    }
}

nlohmann::json record_to_json(const Record& record) {
    nlohmann::json j = record.sample.extra.is_object() ? record.sample.extra : nlohmann::json::object();
    j["id"] = record.sample.id;
    j["values"] = record.sample.values;
    if (!record.sample.meta.empty()) j["meta"] = record.sample.meta;
    if (record.annotation) {
        j["label"] = to_string(record.annotation->label);
        j["reason"] = record.annotation->reason;
        j["provenance"] = to_string(record.annotation->provenance);
    }
    return j;
}

Record record_from_json(const nlohmann::json& j, std::size_t line) {
    if (!j.is_object()) fail_at(ErrorCode::MalformedRecord, line, "not a JSON object");
    Record record;
    auto& sample = record.sample;

    const auto id = j.find("id");
    if (id == j.end() || !id->is_string() || id->get<std::string>().empty()) {
        fail_at(ErrorCode::MalformedRecord, line, "missing or empty string field 'id'");
    }
    sample.id = id->get<std::string>();

    const auto values = j.find("values");
    if (values == j.end() || !values->is_array()) {
        fail_at(ErrorCode::MalformedRecord, line, "missing array field 'values'");
    }
    sample.values.reserve(values->size());
    for (const auto& v : *values) {
        if (v.is_number()) {
            const double x = v.get<double>();
            if (!std::isfinite(x)) fail_at(ErrorCode::NonFiniteValue, line, "non-finite value");
            sample.values.push_back(x);
        } else if (v.is_string() && v.get<std::string>().starts_with(kNonFiniteMarker)) {
            fail_at(ErrorCode::NonFiniteValue, line,
                    "value " + v.get<std::string>().substr(kNonFiniteMarker.size()));
        } else {
            fail_at(ErrorCode::MalformedRecord, line, "non-numeric entry in 'values'");
        }
    }

    if (const auto meta = j.find("meta"); meta != j.end()) {
        if (!meta->is_object()) fail_at(ErrorCode::MalformedRecord, line, "'meta' must be an object");
        for (const auto& [key, value] : meta->items()) {
            if (!value.is_string()) {
                fail_at(ErrorCode::MalformedRecord, line, "meta value for '" + key + "' is not a string");
            }
            sample.meta.emplace(key, value.get<std::string>());
        }
    }

    if (const auto label = j.find("label"); label != j.end()) {
        const auto parsed = label->is_string() ? parse_label(label->get<std::string>()) : std::nullopt;
        if (!parsed) fail_at(ErrorCode::MalformedRecord, line, "label must be \"anomaly\" or \"normal\"");
        Annotation a;
        a.label = *parsed;
        if (const auto reason = j.find("reason"); reason != j.end()) {
            if (!reason->is_string()) fail_at(ErrorCode::MalformedRecord, line, "'reason' must be a string");
            a.reason = reason->get<std::string>();
        }
        a.provenance = Provenance::HumanOverride;
        if (const auto prov = j.find("provenance"); prov != j.end()) {
            const auto p = prov->is_string() ? parse_provenance(prov->get<std::string>()) : std::nullopt;
            if (!p) fail_at(ErrorCode::MalformedRecord, line, "unknown provenance");
            a.provenance = *p;
        }
        record.annotation = std::move(a);
    }

    for (const auto& [key, value] : j.items()) {
        if (key == "id" || key == "values" || key == "meta" || key == "label" || key == "reason" ||
            key == "provenance") {
            continue;
        }
        sample.extra[key] = value;
    }

    try {
        validate_sample(sample);
    } catch (const Error& e) {
        fail_at(e.code(), line, e.what());
    }
    return record;
}

Dataset parse_dataset(std::string_view jsonl, bool expect_labels) {
    Dataset dataset;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= jsonl.size()) {
        auto end = jsonl.find('\n', start);
        if (end == std::string_view::npos) end = jsonl.size();
        auto line = jsonl.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

        nlohmann::json j;
        try {
            j = nlohmann::json::parse(quote_nonfinite_literals(line));
        } catch (const nlohmann::json::parse_error& e) {
            fail_at(ErrorCode::MalformedRecord, line_no, e.what());
        }
        Record record = record_from_json(j, line_no);
        if (expect_labels && !record.annotation) {
            fail_at(ErrorCode::MissingLabel, line_no, "record '" + record.sample.id + "' has no label");
        }
        if (record.annotation && record.annotation->provenance == Provenance::LLMConsensus &&
            record.annotation->reason.empty()) {
            fail_at(ErrorCode::MalformedRecord, line_no, "consensus label requires a reason");
        }
        if (!seen.insert(record.sample.id).second) {
            fail_at(ErrorCode::DuplicateId, line_no, "duplicate id '" + record.sample.id + "'");
        }
        dataset.records.push_back(std::move(record));
        if (end == jsonl.size()) break;
    }
    return dataset;
}

Dataset load_dataset(const std::filesystem::path& path, bool expect_labels) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open dataset '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_dataset(buffer.str(), expect_labels);
}

std::string dump_dataset(const Dataset& dataset) {
    std::string out;
    for (const auto& record : dataset.records) {
        out += record_to_json(record).dump();
        out += '\n';
    }
    return out;
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write dataset '" + path.string() + "'");
    out << dump_dataset(dataset);
    if (!out) throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

namespace {

std::size_t floor_share(std::size_t n, double fraction) {
    // The epsilon absorbs representation error such as 10 * 0.2 = 2.0000000000000004
    // or 10 * 0.7 = 6.999999999999999.
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction + 1e-9));
}

Dataset gather(const Dataset& source, std::vector<std::size_t> indices) {
    std::sort(indices.begin(), indices.end());
    Dataset out;
    out.schema_version = source.schema_version;
    out.records.reserve(indices.size());
    for (const auto i : indices) out.records.push_back(source.records[i]);
    return out;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(order);
    return order;
}

}  // namespace

DatasetSplit split_dataset(const Dataset& dataset, const SplitFractions& fractions,
                           std::uint64_t seed) {
    if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "cannot split an empty dataset");
    if (!(fractions.train > 0.0 && fractions.validation > 0.0 && fractions.test > 0.0)) {
        throw Error(ErrorCode::InvalidFractions, "every split fraction must be positive");
    }
    if (std::abs(fractions.train + fractions.validation + fractions.test - 1.0) > 1e-9) {
        throw Error(ErrorCode::InvalidFractions, "split fractions must sum to 1");
    }
    const std::size_t n = dataset.size();
    const std::size_t n_val = floor_share(n, fractions.validation);
    const std::size_t n_test = floor_share(n, fractions.test);
    const auto order = shuffled_indices(n, seed);

    const auto first = order.begin();
    return DatasetSplit{
        .train = gather(dataset, {first + static_cast<std::ptrdiff_t>(n_val + n_test), order.end()}),
        .validation = gather(dataset, {first, first + static_cast<std::ptrdiff_t>(n_val)}),
        .test = gather(dataset, {first + static_cast<std::ptrdiff_t>(n_val),
                                 first + static_cast<std::ptrdiff_t>(n_val + n_test)}),
    };
}

std::pair<Dataset, Dataset> split_two(const Dataset& dataset, double second_fraction,
                                      std::uint64_t seed) {
    if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "cannot split an empty dataset");
    if (!(second_fraction > 0.0 && second_fraction < 1.0)) {
        throw Error(ErrorCode::InvalidFractions, "split fraction must lie in (0, 1)");
    }
    const std::size_t n_second = floor_share(dataset.size(), second_fraction);
    const auto order = shuffled_indices(dataset.size(), seed);
    const auto mid = order.begin() + static_cast<std::ptrdiff_t>(n_second);
    return {gather(dataset, {mid, order.end()}), gather(dataset, {order.begin(), mid})};
}

Dataset concat(const Dataset& a, const Dataset& b) {
    Dataset out = a;
    out.records.insert(out.records.end(), b.records.begin(), b.records.end());
    return out;
}

}  // namespace tsrules
