#include <cstring>
#include <sstream>

#include <gtest/gtest.h>

#include "crowdtopic/features.hpp"
#include "crowdtopic/forest.hpp"
#include "crowdtopic/random.hpp"
#include "oracles.hpp"

using namespace crowdtopic;
using namespace crowdtopic::features;

namespace {

corpus::Campaign sample_campaign() {
    corpus::Campaign c;
    c.id = "c1";
    c.goal_amount = 10000;
    c.raised_amount = 5000;
    c.start_date = {2020, 1, 1};
    c.end_date = {2020, 1, 31};
    c.days_left = 4;
    c.top_donor_amount = 900;
    c.min_donor_amount = 20;
    c.n_supporters = 25;
    return c;
}

FeatureLayout numeric_only() { return FeatureLayout(0, 0, numeric_slot_names()); }

FeatureMatrix random_matrix(std::size_t rows, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    FeatureMatrix m;
    m.layout = FeatureLayout(2, 0, {"a", "b", "c"});
    for (std::size_t i = 0; i < rows; ++i) {
        const double t = uniform01(rng);
        NamedVector nums{{"a", "b", "c"}, {standard_normal(rng) * 5 + 3, uniform01(rng) * 100, 7.0}};
        m.add(fuse({t, 1.0 - t}, {}, nums, m.layout), uniform01(rng) < 0.5 ? 1 : 0, "r" + std::to_string(i));
    }
    return m;
}

} // namespace

TEST(Numeric, SlotsInFixedOrder) {
    const auto v = numeric_features(sample_campaign());
    EXPECT_EQ(v.names, (std::vector<std::string>{"goal_amount", "duration_days", "days_left", "top_donor_amount",
                                                 "min_donor_amount", "n_supporters", "mean_donation"}));
    EXPECT_EQ(v.values, (std::vector<double>{10000, 30, 4, 900, 20, 25, 200}));
}

TEST(Numeric, ZeroSupportersGiveZeroMeanDonation) {
    auto c = sample_campaign();
    c.n_supporters = 0;
    c.raised_amount = 0;
    EXPECT_EQ(numeric_features(c).values.back(), 0.0);
}

TEST(Numeric, RaisedAmountSwitch) {
    const auto v = numeric_features(sample_campaign(), {.include_raised_amount = true});
    ASSERT_EQ(v.values.size(), 8u);
    EXPECT_EQ(v.names.back(), "raised_amount");
    EXPECT_EQ(v.values.back(), 5000.0);
}

TEST(Fuse, ConcatenatesInLayoutOrder) {
    const FeatureLayout layout(2, 2, numeric_slot_names());
    const auto nums = numeric_features(sample_campaign());
    const auto v = fuse({0.7, 0.3}, {0.4, 0.6}, nums, layout);
    ASSERT_EQ(v.values.size(), 11u);
    std::vector<double> expected{0.7, 0.3, 0.4, 0.6};
    expected.insert(expected.end(), nums.values.begin(), nums.values.end());
    EXPECT_EQ(v.values, expected);
    EXPECT_EQ(layout.slot_names()[0], "campaign_topic_0");
    EXPECT_EQ(layout.slot_names()[3], "incentive_topic_1");
    EXPECT_EQ(layout.slot_names()[4], "goal_amount");
}

TEST(Fuse, DisabledIncentiveChannel) {
    const FeatureLayout layout(2, 0, numeric_slot_names());
    const auto v = fuse({0.5, 0.5}, {}, numeric_features(sample_campaign()), layout);
    EXPECT_EQ(v.values.size(), 9u);
}

TEST(Fuse, LayoutRoundTripsThroughSlotNames) {
    for (const auto& layout : {FeatureLayout(2, 2, numeric_slot_names()), FeatureLayout(3, 0, numeric_slot_names()),
                               FeatureLayout(1, 4, numeric_slot_names({.include_raised_amount = true}))}) {
        const auto back = FeatureLayout::from_slot_names(layout.slot_names());
        EXPECT_EQ(back, layout);
        EXPECT_EQ(back.fingerprint(), layout.fingerprint());
    }
    EXPECT_NE(FeatureLayout(2, 2, numeric_slot_names()).fingerprint(),
              FeatureLayout(2, 1, numeric_slot_names()).fingerprint());
}

TEST(Fuse, LengthMismatchIsLayoutError) {
    const FeatureLayout layout(2, 2, numeric_slot_names());
    const auto nums = numeric_features(sample_campaign());
    EXPECT_THROW(fuse({1.0}, {0.5, 0.5}, nums, layout), LayoutError);
    EXPECT_THROW(fuse({0.5, 0.5}, {}, nums, layout), LayoutError);
    EXPECT_THROW(fuse({0.5, 0.5}, {0.5, 0.5}, NamedVector{{"goal_amount"}, {1.0}}, layout), LayoutError);
}

TEST(Fuse, RejectsNonProportions) {
    const FeatureLayout layout(2, 0, numeric_slot_names());
    const auto nums = numeric_features(sample_campaign());
    EXPECT_THROW(fuse({0.7, 0.7}, {}, nums, layout), ArgumentError);
    EXPECT_THROW(fuse({1.5, -0.5}, {}, nums, layout), ArgumentError);
}

TEST(Fuse, PreservesValuesExactly) {
    Rng rng = make_rng(5);
    const FeatureLayout layout(3, 2, numeric_slot_names());
    for (int trial = 0; trial < 100; ++trial) {
        const double a = uniform01(rng);
        const double b = uniform01(rng) * (1.0 - a);
        const std::vector<double> tc{a, b, 1.0 - a - b};
        const double c = uniform01(rng);
        const std::vector<double> ti{c, 1.0 - c};
        NamedVector nums{numeric_slot_names(), {}};
        for (int i = 0; i < 7; ++i) nums.values.push_back(standard_normal(rng) * 1e4);
        if (std::abs(tc[0] + tc[1] + tc[2] - 1.0) > 1e-9) continue;
        const auto v = fuse(tc, ti, nums, layout);
        std::size_t j = 0;
        for (double x : tc) EXPECT_EQ(std::memcmp(&v.values[j++], &x, sizeof x), 0);
        for (double x : ti) EXPECT_EQ(std::memcmp(&v.values[j++], &x, sizeof x), 0);
        for (double x : nums.values) EXPECT_EQ(std::memcmp(&v.values[j++], &x, sizeof x), 0);
    }
}

TEST(Standardizer, HandComputedPopulationDeviation) {
    FeatureMatrix m;
    m.layout = FeatureLayout(0, 0, {"x"});
    m.add({{2.0}, m.layout}, 0);
    m.add({{4.0}, m.layout}, 1);
    const auto s = fit_standardizer(m);
    EXPECT_DOUBLE_EQ(s.mean[0], 3.0);
    EXPECT_DOUBLE_EQ(s.deviation[0], 1.0);
    FeatureMatrix probe;
    probe.layout = m.layout;
    probe.add({{5.0}, m.layout}, 1);
    EXPECT_DOUBLE_EQ(apply_standardizer(probe, s).rows[0][0], 2.0);
}

TEST(Standardizer, MatchesOracleDeviation) {
    const auto m = random_matrix(57, 3);
    const auto s = fit_standardizer(m);
    for (std::size_t j = 0; j < m.layout.size(); ++j) {
        std::vector<double> col;
        for (const auto& r : m.rows) col.push_back(r[j]);
        EXPECT_NEAR(s.deviation[j], oracle::population_sd(col), 1e-9 * (1.0 + s.deviation[j]));
    }
}

TEST(Standardizer, ConstantSlotFlaggedAndZeroed) {
    const auto m = random_matrix(20, 4);
    const auto s = fit_standardizer(m);
    EXPECT_TRUE(s.zero_deviation[4]);
    EXPECT_EQ(s.deviation[4], 0.0);
    for (const auto& r : apply_standardizer(m, s).rows) EXPECT_EQ(r[4], 0.0);
}

TEST(Standardizer, TrainingMatrixCentredAndRefitIsIdentity) {
    const auto m = random_matrix(40, 5);
    const auto z = apply_standardizer(m, fit_standardizer(m));
    const auto s2 = fit_standardizer(z);
    for (std::size_t j = 0; j < m.layout.size(); ++j) {
        EXPECT_NEAR(s2.mean[j], 0.0, 1e-9);
        if (!s2.zero_deviation[j]) {
            EXPECT_NEAR(s2.deviation[j], 1.0, 1e-9);
        }
    }
}

TEST(Standardizer, NeverUsesTestRows) {
    const auto train = random_matrix(30, 6);
    const auto test = random_matrix(25, 7);
    const auto s = fit_standardizer(train);
    (void)apply_standardizer(test, s);
    (void)apply_standardizer(train, s);
    EXPECT_EQ(fit_standardizer(train), s);
}

TEST(Standardizer, Errors) {
    FeatureMatrix one;
    one.layout = FeatureLayout(0, 0, {"x"});
    one.add({{1.0}, one.layout}, 0);
    EXPECT_THROW(fit_standardizer(one), ArgumentError);
    const auto m = random_matrix(10, 8);
    FeatureMatrix other;
    other.layout = FeatureLayout(0, 0, {"x"});
    other.add({{1.0}, other.layout}, 0);
    other.add({{2.0}, other.layout}, 0);
    EXPECT_THROW(apply_standardizer(other, fit_standardizer(m)), LayoutError);
}

TEST(Matrix, RejectsForeignLayoutAndBadLabels) {
    FeatureMatrix m;
    m.layout = numeric_only();
    EXPECT_THROW(m.add(fuse({0.5, 0.5}, {}, numeric_features(sample_campaign()), FeatureLayout(2, 0, numeric_slot_names())), 1),
                 LayoutError);
    EXPECT_THROW(m.add(fuse({}, {}, numeric_features(sample_campaign()), m.layout), 2), ArgumentError);
}

TEST(Csv, HeaderAndRoundTrip) {
    const auto m = random_matrix(12, 9);
    std::stringstream ss;
    write_csv(ss, m);
    std::string header;
    std::getline(std::stringstream(ss.str()), header);
    EXPECT_EQ(header, "id,campaign_topic_0,campaign_topic_1,a,b,c,label");
    const auto back = read_csv(ss);
    EXPECT_EQ(back.layout, m.layout);
    EXPECT_EQ(back.rows, m.rows);
    EXPECT_EQ(back.labels, m.labels);
    EXPECT_EQ(back.ids, m.ids);
}

TEST(Csv, MalformedInput) {
    std::stringstream empty;
    EXPECT_THROW(read_csv(empty), ParseError);
    std::stringstream bad_header("x,a,label\n");
    EXPECT_THROW(read_csv(bad_header), ParseError);
    std::stringstream bad_number("id,a,label\nr1,abc,1\n");
    EXPECT_THROW(read_csv(bad_number), ParseError);
    std::stringstream bad_label("id,a,label\nr1,1.5,2\n");
    EXPECT_THROW(read_csv(bad_label), ParseError);
    std::stringstream short_row("id,a,label\nr1,1\n");
    EXPECT_THROW(read_csv(short_row), ParseError);
}

TEST(Forest, PredictionsInvariantUnderSlotDoubling) {
    auto m = random_matrix(80, 10);
    // Give the labels some structure so trees have splits to make.
    for (std::size_t i = 0; i < m.size(); ++i) m.labels[i] = m.rows[i][2] + m.rows[i][0] * 4 > 4 ? 1 : 0;
    auto doubled = m;
    for (auto& r : doubled.rows) {
        for (auto& v : r) v *= 2.0;
    }
    forest::ForestParams p;
    p.n_trees = 25;
    p.seed = 3;
    const auto f1 = forest::train_forest(m, p);
    const auto f2 = forest::train_forest(doubled, p);
    EXPECT_EQ(forest::predict_all(f1, m), forest::predict_all(f2, doubled));
}
