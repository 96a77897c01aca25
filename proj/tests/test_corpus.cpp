#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "crowdtopic/corpus.hpp"
#include "oracles.hpp"

using namespace crowdtopic;
using namespace crowdtopic::corpus;

namespace {

Campaign sample_campaign(std::string id = "c1") {
    Campaign c;
    c.id = std::move(id);
    c.goal_amount = 10000;
    c.raised_amount = 5000;
    c.start_date = {2020, 1, 1};
    c.end_date = {2020, 1, 31};
    c.days_left = 3;
    c.top_donor_amount = 1000;
    c.min_donor_amount = 10;
    c.n_supporters = 25;
    c.campaign_text = "Help our child fight leukemia.";
    c.incentive_text = "Donations qualify for tax benefits under section 80G.";
    return c;
}

std::string line_for(const Campaign& c) { return to_json_line(c); }

CampaignSet labeled_set(std::size_t ones, std::size_t zeros) {
    CampaignSet s;
    s.source = "mem";
    for (std::size_t i = 0; i < ones + zeros; ++i) {
        Campaign c = sample_campaign("id" + std::to_string(i));
        const int label = i < ones ? 1 : 0;
        if (label == 1) c.raised_amount = c.goal_amount;
        s.records.push_back({c, label});
    }
    return s;
}

} // namespace

TEST(Date, ParseAndFormatRoundTrip) {
    const Date d = Date::parse("2020-02-29");
    EXPECT_EQ(d, (Date{2020, 2, 29}));
    EXPECT_EQ(d.iso(), "2020-02-29");
}

TEST(Date, RejectsImpossibleDates) {
    EXPECT_THROW(Date::parse("2021-02-29"), ParseError);
    EXPECT_THROW(Date::parse("2021-13-01"), ParseError);
    EXPECT_THROW(Date::parse("2021-04-31"), ParseError);
    EXPECT_THROW(Date::parse("2021-4-01"), ParseError);
    EXPECT_THROW(Date::parse("20210401"), ParseError);
    EXPECT_THROW(Date::parse("2021-04-0x"), ParseError);
}

TEST(Date, DaysBetweenMatchesDayStepping) {
    const int starts[][3] = {{1999, 12, 31}, {2000, 2, 27}, {2019, 1, 1}, {2020, 2, 28}, {2100, 2, 28}};
    for (const auto& s : starts) {
        for (int span : {0, 1, 2, 30, 59, 365, 366, 1461}) {
            const Date a{s[0], s[1], s[2]};
            const Date b = Date::from_days(a.days_since_epoch() + span);
            EXPECT_EQ(days_between(a, b), oracle::days_by_stepping(a.year, a.month, a.day, b.year, b.month, b.day))
                << a.iso() << " -> " << b.iso();
        }
    }
}

TEST(Date, EpochAnchors) {
    EXPECT_EQ((Date{1970, 1, 1}).days_since_epoch(), 0);
    EXPECT_EQ((Date{2020, 1, 31}).days_since_epoch() - (Date{2020, 1, 1}).days_since_epoch(), 30);
    EXPECT_EQ(Date::from_days(-1), (Date{1969, 12, 31}));
}

TEST(Label, GoalAttainedIsInclusive) {
    Campaign c = sample_campaign();
    c.goal_amount = 10000;
    c.raised_amount = 10000;
    EXPECT_EQ(label_campaign(c), 1);
    c.raised_amount = 9999.99;
    EXPECT_EQ(label_campaign(c), 0);
    c.raised_amount = 15000;
    EXPECT_EQ(label_campaign(c), 1);
}

TEST(Validate, AcceptsSample) { EXPECT_NO_THROW(validate(sample_campaign())); }

TEST(Validate, NamesTheViolatedRule) {
    Campaign c = sample_campaign();
    c.end_date = {2019, 12, 31};
    try {
        validate(c);
        FAIL() << "expected a validation error";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("end_date ≥ start_date"), std::string::npos);
    }
    c = sample_campaign();
    c.top_donor_amount = 6000;
    EXPECT_THROW(validate(c), ValidationError);
    c = sample_campaign();
    c.goal_amount = 0;
    EXPECT_THROW(validate(c), ValidationError);
    c = sample_campaign();
    c.n_supporters = 0;
    EXPECT_THROW(validate(c), ValidationError);
    c.raised_amount = c.top_donor_amount = c.min_donor_amount = 0;
    EXPECT_NO_THROW(validate(c));
}

TEST(ParseRecord, RoundTripsThroughJsonLine) {
    const Campaign c = sample_campaign();
    EXPECT_EQ(parse_campaign_record(line_for(c)), c);
}

TEST(ParseRecord, MissingFieldIsSchemaError) {
    auto j = to_json(sample_campaign());
    j.erase("goal_amount");
    try {
        parse_campaign_record(j.dump());
        FAIL() << "expected a schema error";
    } catch (const SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("goal_amount"), std::string::npos);
    }
}

TEST(ParseRecord, WrongTypeIsSchemaError) {
    auto j = to_json(sample_campaign());
    j["n_supporters"] = "many";
    EXPECT_THROW(parse_campaign_record(j.dump()), SchemaError);
    j = to_json(sample_campaign());
    j["n_supporters"] = 2.5;
    EXPECT_THROW(parse_campaign_record(j.dump()), SchemaError);
}

TEST(ParseRecord, MalformedJsonIsParseError) {
    EXPECT_THROW(parse_campaign_record("{\"id\": "), ParseError);
    EXPECT_THROW(parse_campaign_record("[1, 2]"), ParseError);
}

TEST(ReadCorpus, ReportsLineNumbers) {
    std::stringstream in;
    in << line_for(sample_campaign("a")) << "\n\n" << "{broken\n";
    try {
        read_corpus(in, "input.jsonl");
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("input.jsonl:3"), std::string::npos) << e.what();
    }
}

TEST(ReadCorpus, RejectsDuplicateIds) {
    std::stringstream in;
    in << line_for(sample_campaign("a")) << '\n' << line_for(sample_campaign("b")) << '\n'
       << line_for(sample_campaign("a")) << '\n';
    try {
        read_corpus(in, "dup.jsonl");
        FAIL() << "expected a validation error";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("duplicate id 'a' on lines 1 and 3"), std::string::npos) << e.what();
    }
}

TEST(ReadCorpus, LabelsEveryRecord) {
    std::stringstream in;
    Campaign hit = sample_campaign("hit");
    hit.raised_amount = hit.goal_amount;
    in << line_for(sample_campaign("miss")) << "\r\n" << line_for(hit) << '\n';
    const CampaignSet s = read_corpus(in, "mem");
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s.labels(), (std::vector<int>{0, 1}));
}

TEST(ReadCorpus, FileRoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "crowdtopic_corpus_roundtrip.jsonl";
    const CampaignSet s = labeled_set(3, 2);
    save_corpus(path, s);
    const CampaignSet back = load_corpus(path);
    ASSERT_EQ(back.size(), s.size());
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(back.records[i], s.records[i]);
    std::filesystem::remove(path);
    EXPECT_THROW(load_corpus(path), ValidationError);
}

TEST(Split, CountsAndStratification) {
    const CampaignSet s = labeled_set(210, 200);
    const Split sp = split_train_test(s, 250, 11);
    EXPECT_EQ(sp.train.size(), 250u);
    EXPECT_EQ(sp.test.size(), 160u);
    // round(250 * 210 / 410) = 128 successes in training.
    EXPECT_EQ(sp.train.count_label(1), 128u);
    EXPECT_EQ(sp.test.count_label(1), 82u);
}

TEST(Split, DisjointCoveringAndOrderPreserving) {
    const CampaignSet s = labeled_set(30, 20);
    const Split sp = split_train_test(s, 35, 3);
    std::vector<std::string> ids;
    for (const auto* part : {&sp.train, &sp.test}) {
        for (const auto& r : part->records) ids.push_back(r.campaign.id);
    }
    std::sort(ids.begin(), ids.end());
    EXPECT_EQ(std::unique(ids.begin(), ids.end()), ids.end());
    EXPECT_EQ(ids.size(), 50u);

    auto position = [&](const std::string& id) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s.records[i].campaign.id == id) return i;
        }
        return s.size();
    };
    for (const auto* part : {&sp.train, &sp.test}) {
        for (std::size_t i = 1; i < part->size(); ++i) {
            EXPECT_LT(position(part->records[i - 1].campaign.id), position(part->records[i].campaign.id));
        }
    }
}

TEST(Split, DeterministicPerSeed) {
    const CampaignSet s = labeled_set(30, 20);
    auto ids = [](const CampaignSet& set) {
        std::vector<std::string> out;
        for (const auto& r : set.records) out.push_back(r.campaign.id);
        return out;
    };
    EXPECT_EQ(ids(split_train_test(s, 30, 5).train), ids(split_train_test(s, 30, 5).train));
    EXPECT_NE(ids(split_train_test(s, 30, 5).train), ids(split_train_test(s, 30, 6).train));
}

TEST(Split, RejectsDegenerateCounts) {
    const CampaignSet s = labeled_set(210, 200);
    EXPECT_THROW(split_train_test(s, 0, 1), ArgumentError);
    EXPECT_THROW(split_train_test(s, 410, 1), ArgumentError);
    EXPECT_THROW(split_train_test(s, 500, 1), ArgumentError);
}

TEST(Split, SingleClassInput) {
    const CampaignSet s = labeled_set(10, 0);
    const Split sp = split_train_test(s, 7, 2);
    EXPECT_EQ(sp.train.size(), 7u);
    EXPECT_EQ(sp.test.size(), 3u);
}
