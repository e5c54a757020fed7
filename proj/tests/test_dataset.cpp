#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "tsrules/dataset.hpp"
#include "tsrules/error.hpp"
#include "tsrules/synth.hpp"

using namespace tsrules;

namespace {

std::string series(int n, double v = 1.0) {
    std::string s = "[";
    for (int i = 0; i < n; ++i) {
        if (i) s += ",";
        s += std::to_string(v + i);
    }
    return s + "]";
}

ErrorCode code_of(const std::string& jsonl, bool expect_labels = false) {
    try {
        parse_dataset(jsonl, expect_labels);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an error";
    return ErrorCode::Io;
}

Dataset numbered(std::size_t n) {
    Dataset d;
    for (std::size_t i = 0; i < n; ++i) {
        Record r;
        r.sample.id = "id" + std::to_string(i);
        r.sample.values.assign(8, static_cast<double>(i));
        d.records.push_back(r);
    }
    return d;
}

}  // namespace

TEST(LoadDataset, PreservesOrderOfValidRecords) {
    const auto d = parse_dataset("{\"id\":\"b\",\"values\":" + series(8) + "}\n{\"id\":\"a\",\"values\":" +
                                     series(9) + "}\n",
                                 false);
    ASSERT_EQ(d.size(), 2u);
    EXPECT_EQ(d.records[0].sample.id, "b");
    EXPECT_EQ(d.records[1].sample.id, "a");
    EXPECT_EQ(d.records[1].sample.values.size(), 9u);
    EXPECT_FALSE(d.records[0].is_labeled());
}

TEST(LoadDataset, ParsesLabeledFiftyThreeWeekRecord) {
    const auto d = parse_dataset(
        "{\"values\":" + series(53) + ",\"label\":\"anomaly\",\"reason\":\"spike\",\"id\":\"x\"}", true);
    ASSERT_EQ(d.size(), 1u);
    ASSERT_TRUE(d.records[0].annotation);
    EXPECT_EQ(d.records[0].annotation->label, Label::Anomaly);
    EXPECT_EQ(d.records[0].sample.values.size(), 53u);
}

TEST(LoadDataset, RejectsNonFiniteValues) {
    EXPECT_EQ(code_of("{\"id\":\"x\",\"values\":[1,2,NaN]}"), ErrorCode::NonFiniteValue);
    EXPECT_EQ(code_of("{\"id\":\"x\",\"values\":[1,2,3,4,5,6,7,-Infinity]}"), ErrorCode::NonFiniteValue);
    // Inside a string the token is ordinary text.
    EXPECT_EQ(parse_dataset("{\"id\":\"NaN\",\"values\":" + series(8) + "}", false).records[0].sample.id,
              "NaN");
}

TEST(LoadDataset, ReportsLineNumberOfMalformedRecord) {
    try {
        parse_dataset("{\"id\":\"a\",\"values\":" + series(8) + "}\n{\"id\": oops}\n", false);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MalformedRecord);
        EXPECT_NE(std::string(e.what()).find("record 2"), std::string::npos) << e.what();
    }
}

TEST(LoadDataset, RejectsInvariantViolations) {
    const auto rec = "{\"id\":\"a\",\"values\":" + series(8) + "}\n";
    EXPECT_EQ(code_of(rec + rec), ErrorCode::DuplicateId);
    EXPECT_EQ(code_of("{\"id\":\"a\",\"values\":" + series(7) + "}"), ErrorCode::SeriesTooShort);
    EXPECT_EQ(code_of(rec, true), ErrorCode::MissingLabel);
    EXPECT_EQ(code_of("{\"id\":\"a\",\"values\":" + series(8) + ",\"label\":\"maybe\"}"),
              ErrorCode::MalformedRecord);
    EXPECT_EQ(code_of("{\"id\":\"a\",\"values\":" + series(8) +
                      ",\"label\":\"normal\",\"provenance\":\"llm_consensus\"}"),
              ErrorCode::MalformedRecord);
}

TEST(SaveDataset, RoundTripKeepsUnknownFieldsAndMeta) {
    auto d = synth_generate(SynthConfig{.n_series = 20, .seed = 3});
    d.records[0].sample.extra["source"] = "warehouse-7";
    d.records[1].sample.extra["weights"] = {1, 2, 3};
    const auto path = std::filesystem::temp_directory_path() / "tsrules_roundtrip.jsonl";
    save_dataset(path, d);
    const auto back = load_dataset(path, true);
    EXPECT_EQ(back, d);
    std::filesystem::remove(path);
}

TEST(SplitDataset, AllocatesFloorSizesWithRemainderToTrain) {
    const auto s = split_dataset(numbered(10), {0.6, 0.2, 0.2}, 7);
    EXPECT_EQ(s.train.size(), 6u);
    EXPECT_EQ(s.validation.size(), 2u);
    EXPECT_EQ(s.test.size(), 2u);

    const auto t = split_dataset(numbered(5), {0.5, 0.25, 0.25}, 1);
    EXPECT_EQ(t.train.size(), 3u);
    EXPECT_EQ(t.validation.size(), 1u);
    EXPECT_EQ(t.test.size(), 1u);
}

TEST(SplitDataset, IsDeterministicDisjointAndExhaustive) {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const auto d = numbered(3 + seed * 7);
        const auto a = split_dataset(d, {0.7, 0.15, 0.15}, seed);
        const auto b = split_dataset(d, {0.7, 0.15, 0.15}, seed);
        EXPECT_EQ(a.train, b.train);
        EXPECT_EQ(a.validation, b.validation);
        EXPECT_EQ(a.test, b.test);

        std::multiset<std::string> seen;
        for (const auto* part : {&a.train, &a.validation, &a.test}) {
            for (const auto& id : part->ids()) seen.insert(id);
        }
        const auto ids = d.ids();
        EXPECT_EQ(seen, std::multiset<std::string>(ids.begin(), ids.end()));
    }
}

TEST(SplitDataset, RejectsBadFractions) {
    EXPECT_THROW(split_dataset(numbered(10), {0.5, 0.2, 0.2}, 1), Error);
    EXPECT_THROW(split_dataset(numbered(10), {0.8, 0.2, 0.0}, 1), Error);
    EXPECT_THROW(split_dataset(Dataset{}, {0.6, 0.2, 0.2}, 1), Error);
}

TEST(SplitTwo, SecondPartIsFloorShare) {
    const auto [first, second] = split_two(numbered(11), 0.25, 4);
    EXPECT_EQ(first.size(), 9u);
    EXPECT_EQ(second.size(), 2u);
}
