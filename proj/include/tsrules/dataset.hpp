#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace tsrules {

inline constexpr std::size_t kMinSeriesLength = 8;
inline constexpr std::string_view kSchemaVersion = "1";

enum class Label { Anomaly, Normal };
enum class Provenance { LLMConsensus, PreFilter, HumanOverride, SyntheticTruth };

std::string_view to_string(Label label) noexcept;
std::string_view to_string(Provenance provenance) noexcept;
std::optional<Label> parse_label(std::string_view text) noexcept;
std::optional<Provenance> parse_provenance(std::string_view text) noexcept;

struct TimeSeriesSample {
    std::string id;
    std::vector<double> values;
    std::map<std::string, std::string> meta;
    // Unrecognised top-level record fields, carried through save/load untouched.
    nlohmann::json extra = nlohmann::json::object();

    double current() const { return values.back(); }

    friend bool operator==(const TimeSeriesSample&, const TimeSeriesSample&) = default;
};

struct Annotation {
    Label label = Label::Normal;
    std::string reason;
    Provenance provenance = Provenance::SyntheticTruth;

    friend bool operator==(const Annotation&, const Annotation&) = default;
};

// A sample with an optional label; a LabeledSample is a Record whose
// annotation is engaged.
struct Record {
    TimeSeriesSample sample;
    std::optional<Annotation> annotation;

    bool is_labeled() const noexcept { return annotation.has_value(); }
    bool is_anomaly() const noexcept {
        return annotation && annotation->label == Label::Anomaly;
    }

    friend bool operator==(const Record&, const Record&) = default;
};

struct Dataset {
    std::vector<Record> records;
    std::string schema_version{kSchemaVersion};

    std::size_t size() const noexcept { return records.size(); }
    bool empty() const noexcept { return records.empty(); }
    bool fully_labeled() const noexcept;
    std::size_t count(Label label) const noexcept;
    double anomaly_rate() const noexcept;
    std::vector<std::string> ids() const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Throws Error(NonFiniteValue | SeriesTooShort | MalformedRecord) on violation.
void validate_sample(const TimeSeriesSample& sample);

// Checks per-record invariants and id uniqueness.
void validate_dataset(const Dataset& dataset);

nlohmann::json record_to_json(const Record& record);
// `line` is only used for error messages.
Record record_from_json(const nlohmann::json& json, std::size_t line);

Dataset load_dataset(const std::filesystem::path& path, bool expect_labels);
Dataset parse_dataset(std::string_view jsonl, bool expect_labels);
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);
std::string dump_dataset(const Dataset& dataset);

struct SplitFractions {
    double train = 0.6;
    double validation = 0.2;
    double test = 0.2;
};

struct DatasetSplit {
    Dataset train;
    Dataset validation;
    Dataset test;
};

// Seeded shuffle, floor-allocated validation/test sizes, remainder to train.
// Each part keeps the input's relative order.
DatasetSplit split_dataset(const Dataset& dataset, const SplitFractions& fractions,
                           std::uint64_t seed);

// Two-way variant: second part gets floor(n * second_fraction), first the rest.
std::pair<Dataset, Dataset> split_two(const Dataset& dataset, double second_fraction,
                                      std::uint64_t seed);

Dataset concat(const Dataset& a, const Dataset& b);

}  // namespace tsrules
