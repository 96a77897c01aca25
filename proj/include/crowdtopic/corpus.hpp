#pragma once

// Campaign records: data model, JSONL ingestion, success labels and the
// stratified train/test split.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "crowdtopic/error.hpp"
#include "crowdtopic/random.hpp"

namespace crowdtopic::corpus {

/// Proleptic Gregorian calendar date.
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    /// Days since 1970-01-01 (Hinnant's days_from_civil).
    [[nodiscard]] std::int64_t days_since_epoch() const {
        const std::int64_t y = month <= 2 ? year - 1 : year;
        const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
        const std::int64_t yoe = y - era * 400;
        const std::int64_t mp = (month + 9) % 12;
        const std::int64_t doy = (153 * mp + 2) / 5 + day - 1;
        const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        return era * 146097 + doe - 719468;
    }

    static Date from_days(std::int64_t z) {
        z += 719468;
        const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
        const std::int64_t doe = z - era * 146097;
        const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
        const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        const std::int64_t mp = (5 * doy + 2) / 153;
        const int d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
        const int m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
        const int y = static_cast<int>(yoe + era * 400 + (m <= 2 ? 1 : 0));
        return {y, m, d};
    }

    /// Parses "YYYY-MM-DD"; rejects impossible dates such as 2021-02-30.
    static Date parse(std::string_view text) {
        auto fail = [&] { return ParseError("invalid date '" + std::string(text) + "' (expected YYYY-MM-DD)"); };
        if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw fail();
        auto field = [&](std::size_t pos, std::size_t len) {
            int v = 0;
            const char* first = text.data() + pos;
            auto [ptr, ec] = std::from_chars(first, first + len, v);
            if (ec != std::errc{} || ptr != first + len) throw fail();
            return v;
        };
        Date d{field(0, 4), field(5, 2), field(8, 2)};
        if (d.month < 1 || d.month > 12 || d.day < 1 || from_days(d.days_since_epoch()) != d) throw fail();
        return d;
    }

    [[nodiscard]] std::string iso() const {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
        return buf;
    }

    friend bool operator==(const Date&, const Date&) = default;
    friend auto operator<=>(const Date& a, const Date& b) { return a.days_since_epoch() <=> b.days_since_epoch(); }
};

/// Days from start to end (negative if end precedes start).
inline std::int64_t days_between(const Date& start, const Date& end) {
    return end.days_since_epoch() - start.days_since_epoch();
}

/// One crowdfunding record. Amounts are unitless positive decimals: source
/// platforms mix currencies and no conversion is attempted.
struct Campaign {
    std::string id;
    double goal_amount = 0.0;
    double raised_amount = 0.0;
    Date start_date;
    Date end_date;
    std::int64_t days_left = 0;
    double top_donor_amount = 0.0;
    double min_donor_amount = 0.0;
    std::int64_t n_supporters = 0;
    std::string campaign_text;
    std::string incentive_text;

    friend bool operator==(const Campaign&, const Campaign&) = default;
};

/// Throws ValidationError naming the violated rule.
inline void validate(const Campaign& c) {
    auto check = [&](bool ok, const char* rule) {
        if (!ok) throw ValidationError("campaign '" + c.id + "' violates " + rule);
    };
    const bool finite = std::isfinite(c.goal_amount) && std::isfinite(c.raised_amount) &&
                        std::isfinite(c.top_donor_amount) && std::isfinite(c.min_donor_amount);
    check(finite, "amounts must be finite");
    check(c.goal_amount > 0.0, "goal_amount > 0");
    check(c.raised_amount >= 0.0, "raised_amount ≥ 0");
    check(c.top_donor_amount >= 0.0, "top_donor_amount ≥ 0");
    check(c.min_donor_amount >= 0.0, "min_donor_amount ≥ 0");
    check(c.days_left >= 0, "days_left ≥ 0");
    check(c.n_supporters >= 0, "n_supporters ≥ 0");
    check(c.end_date >= c.start_date, "end_date ≥ start_date");
    if (c.n_supporters > 0) {
        check(c.min_donor_amount <= c.top_donor_amount && c.top_donor_amount <= c.raised_amount,
              "min_donor_amount ≤ top_donor_amount ≤ raised_amount");
    } else {
        check(c.raised_amount == 0.0, "raised_amount = 0 when n_supporters = 0");
    }
}

/// 1 when the goal is attained (raised ≥ goal, equality inclusive), else 0.
inline int label_campaign(const Campaign& c) { return c.raised_amount >= c.goal_amount ? 1 : 0; }

struct LabeledCampaign {
    Campaign campaign;
    int label = 0;

    friend bool operator==(const LabeledCampaign&, const LabeledCampaign&) = default;
};

struct CampaignSet {
    std::vector<LabeledCampaign> records;
    std::string source;

    [[nodiscard]] std::size_t size() const { return records.size(); }
    [[nodiscard]] bool empty() const { return records.empty(); }
    [[nodiscard]] std::size_t count_label(int label) const {
        return static_cast<std::size_t>(
            std::count_if(records.begin(), records.end(), [&](const auto& r) { return r.label == label; }));
    }
    [[nodiscard]] std::vector<int> labels() const {
        std::vector<int> out;
        out.reserve(records.size());
        for (const auto& r : records) out.push_back(r.label);
        return out;
    }
};

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(std::string("missing required field '") + key + "'");
    return *it;
}

inline double require_number(const nlohmann::json& obj, const char* key) {
    const auto& v = require(obj, key);
    if (!v.is_number()) throw SchemaError(std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

inline std::int64_t require_integer(const nlohmann::json& obj, const char* key) {
    const auto& v = require(obj, key);
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9.0e15) return static_cast<std::int64_t>(d);
    }
    throw SchemaError(std::string("field '") + key + "' must be an integer");
}

inline std::string require_string(const nlohmann::json& obj, const char* key) {
    const auto& v = require(obj, key);
    if (!v.is_string()) throw SchemaError(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

} // namespace detail

/// Parses one JSONL record and validates the Campaign invariants.
inline Campaign parse_campaign_record(std::string_view line) {
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError("record is not a JSON object");

    Campaign c;
    c.id = detail::require_string(obj, "id");
    c.goal_amount = detail::require_number(obj, "goal_amount");
    c.raised_amount = detail::require_number(obj, "raised_amount");
    c.start_date = Date::parse(detail::require_string(obj, "start_date"));
    c.end_date = Date::parse(detail::require_string(obj, "end_date"));
    c.days_left = detail::require_integer(obj, "days_left");
    c.top_donor_amount = detail::require_number(obj, "top_donor_amount");
    c.min_donor_amount = detail::require_number(obj, "min_donor_amount");
    c.n_supporters = detail::require_integer(obj, "n_supporters");
    c.campaign_text = detail::require_string(obj, "campaign_text");
    c.incentive_text = detail::require_string(obj, "incentive_text");
    validate(c);
    return c;
}

inline nlohmann::ordered_json to_json(const Campaign& c) {
    nlohmann::ordered_json j;
    j["id"] = c.id;
    j["goal_amount"] = c.goal_amount;
    j["raised_amount"] = c.raised_amount;
    j["start_date"] = c.start_date.iso();
    j["end_date"] = c.end_date.iso();
    j["days_left"] = c.days_left;
    j["top_donor_amount"] = c.top_donor_amount;
    j["min_donor_amount"] = c.min_donor_amount;
    j["n_supporters"] = c.n_supporters;
    j["campaign_text"] = c.campaign_text;
    j["incentive_text"] = c.incentive_text;
    return j;
}

inline std::string to_json_line(const Campaign& c) { return to_json(c).dump(); }

/// Reads JSONL from a stream. Blank lines are skipped; any failing line aborts
/// with its 1-based line number.
inline CampaignSet read_corpus(std::istream& in, std::string source) {
    CampaignSet set;
    set.source = std::move(source);
    std::map<std::string, std::size_t> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        Campaign c;
        try {
            c = parse_campaign_record(line);
        } catch (const ParseError& e) {
            throw ParseError(set.source + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const SchemaError& e) {
            throw SchemaError(set.source + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError(set.source + ":" + std::to_string(line_no) + ": " + e.what());
        }
        auto [it, inserted] = seen.emplace(c.id, line_no);
        if (!inserted) {
            throw ValidationError(set.source + ": duplicate id '" + c.id + "' on lines " +
                                  std::to_string(it->second) + " and " + std::to_string(line_no));
        }
        const int label = label_campaign(c);
        set.records.push_back({std::move(c), label});
    }
    return set;
}

inline CampaignSet load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open corpus file '" + path.string() + "'");
    return read_corpus(in, path.string());
}

inline void write_corpus(std::ostream& out, const CampaignSet& set) {
    for (const auto& r : set.records) out << to_json_line(r.campaign) << '\n';
}

inline void save_corpus(const std::filesystem::path& path, const CampaignSet& set) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeFailure("cannot write '" + path.string() + "'");
    write_corpus(out, set);
}

struct Split {
    CampaignSet train;
    CampaignSet test;
};

/// Stratified, seeded partition. Each class contributes
/// round(train_count * class_size / n) training records (the remainder goes to
/// the other class), chosen by a per-class shuffle. Both halves keep the
/// input's relative order.
inline Split split_train_test(const CampaignSet& set, std::size_t train_count, std::uint64_t seed) {
    const std::size_t n = set.size();
    if (train_count == 0 || train_count >= n) {
        throw ArgumentError("train_count must satisfy 0 < train_count < " + std::to_string(n) + " (got " +
                            std::to_string(train_count) + ")");
    }
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < n; ++i) by_class[set.records[i].label].push_back(i);

    std::size_t take1 = static_cast<std::size_t>(
        std::llround(static_cast<double>(train_count) * static_cast<double>(by_class[1].size()) / static_cast<double>(n)));
    take1 = std::min(take1, by_class[1].size());
    std::size_t take0 = train_count - take1;
    if (take0 > by_class[0].size()) {
        take0 = by_class[0].size();
        take1 = train_count - take0;
    }

    Rng rng = make_rng(seed);
    std::vector<char> in_train(n, 0);
    for (int cls = 0; cls < 2; ++cls) {
        auto& idx = by_class[cls];
        shuffle(std::span<std::size_t>(idx), rng);
        const std::size_t take = cls == 1 ? take1 : take0;
        for (std::size_t j = 0; j < take; ++j) in_train[idx[j]] = 1;
    }

    Split out;
    out.train.source = set.source + "#train";
    out.test.source = set.source + "#test";
    for (std::size_t i = 0; i < n; ++i) (in_train[i] ? out.train : out.test).records.push_back(set.records[i]);
    return out;
}

} // namespace crowdtopic::corpus
