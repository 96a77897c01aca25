#pragma once

// Predictor vectors: campaign-text topic proportions, incentive-text topic
// proportions, then the numeric campaign attributes. Standardization is fitted
// on training rows only and reused for test rows.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "crowdtopic/corpus.hpp"
#include "crowdtopic/error.hpp"

namespace crowdtopic::features {

/// The seven numeric slots, in emission order. Start and end dates collapse
/// into duration_days; raised_amount is replaced by mean_donation because the
/// label is defined by raised ≥ goal.
inline constexpr std::array<std::string_view, 7> kNumericSlots = {
    "goal_amount",      "duration_days", "days_left",    "top_donor_amount",
    "min_donor_amount", "n_supporters",  "mean_donation"};

struct NumericOptions {
    /// Appends raw raised_amount as an eighth slot. Leaks the label.
    bool include_raised_amount = false;
};

struct NamedVector {
    std::vector<std::string> names;
    std::vector<double> values;
};

inline std::vector<std::string> numeric_slot_names(const NumericOptions& opt = {}) {
    std::vector<std::string> names(kNumericSlots.begin(), kNumericSlots.end());
    if (opt.include_raised_amount) names.emplace_back("raised_amount");
    return names;
}

inline NamedVector numeric_features(const corpus::Campaign& c, const NumericOptions& opt = {}) {
    const double mean_donation =
        c.n_supporters > 0 ? c.raised_amount / static_cast<double>(c.n_supporters) : 0.0;
    NamedVector out{numeric_slot_names(opt),
                    {c.goal_amount, static_cast<double>(corpus::days_between(c.start_date, c.end_date)),
                     static_cast<double>(c.days_left), c.top_donor_amount, c.min_donor_amount,
                     static_cast<double>(c.n_supporters), mean_donation}};
    if (opt.include_raised_amount) out.values.push_back(c.raised_amount);
    return out;
}

class FeatureLayout {
public:
    FeatureLayout() = default;
    FeatureLayout(std::size_t k_campaign, std::size_t k_incentive, std::vector<std::string> numeric_names)
        : k_campaign_(k_campaign), k_incentive_(k_incentive), numeric_(std::move(numeric_names)) {}

    [[nodiscard]] std::size_t k_campaign() const { return k_campaign_; }
    [[nodiscard]] std::size_t k_incentive() const { return k_incentive_; }
    [[nodiscard]] const std::vector<std::string>& numeric_names() const { return numeric_; }
    [[nodiscard]] std::size_t size() const { return k_campaign_ + k_incentive_ + numeric_.size(); }

    /// campaign_topic_<k>..., incentive_topic_<k>..., numeric names.
    [[nodiscard]] std::vector<std::string> slot_names() const {
        std::vector<std::string> names;
        names.reserve(size());
        for (std::size_t k = 0; k < k_campaign_; ++k) names.push_back("campaign_topic_" + std::to_string(k));
        for (std::size_t k = 0; k < k_incentive_; ++k) names.push_back("incentive_topic_" + std::to_string(k));
        names.insert(names.end(), numeric_.begin(), numeric_.end());
        return names;
    }

    /// Rebuilds a layout from slot names; inverse of slot_names().
    static FeatureLayout from_slot_names(const std::vector<std::string>& names) {
        std::size_t kc = 0;
        std::size_t ki = 0;
        std::size_t i = 0;
        while (i < names.size() && names[i] == "campaign_topic_" + std::to_string(kc)) ++kc, ++i;
        while (i < names.size() && names[i] == "incentive_topic_" + std::to_string(ki)) ++ki, ++i;
        std::vector<std::string> numeric(names.begin() + static_cast<std::ptrdiff_t>(i), names.end());
        for (const auto& n : numeric) {
            if (n.rfind("campaign_topic_", 0) == 0 || n.rfind("incentive_topic_", 0) == 0) {
                throw LayoutError("topic slot '" + n + "' out of order");
            }
        }
        return {kc, ki, std::move(numeric)};
    }

    /// FNV-1a 64 over the slot names, as 16 hex digits.
    [[nodiscard]] std::string fingerprint() const {
        std::uint64_t h = 0xCBF29CE484222325ULL;
        for (const auto& name : slot_names()) {
            for (unsigned char c : name) h = (h ^ c) * 0x100000001B3ULL;
            h = (h ^ '\n') * 0x100000001B3ULL;
        }
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }

    friend bool operator==(const FeatureLayout&, const FeatureLayout&) = default;

private:
    std::size_t k_campaign_ = 0;
    std::size_t k_incentive_ = 0;
    std::vector<std::string> numeric_;
};

struct FeatureVector {
    std::vector<double> values;
    FeatureLayout layout;
};

/// Concatenates in layout order without rescaling. Each non-empty topical
/// group must be a proportion vector (entries in [0, 1], sum 1 ± 1e-9).
inline FeatureVector fuse(const std::vector<double>& theta_campaign, const std::vector<double>& theta_incentive,
                          const NamedVector& numerics, const FeatureLayout& layout) {
    if (theta_campaign.size() != layout.k_campaign() || theta_incentive.size() != layout.k_incentive() ||
        numerics.values.size() != layout.numeric_names().size()) {
        throw LayoutError("fuse: input lengths do not match the layout");
    }
    if (numerics.names != layout.numeric_names()) throw LayoutError("fuse: numeric slot names differ from the layout");
    auto check_group = [](const std::vector<double>& g, const char* what) {
        if (g.empty()) return;
        double sum = 0.0;
        for (double v : g) {
            if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError(std::string(what) + " proportion outside [0, 1]");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw ArgumentError(std::string(what) + " proportions do not sum to 1");
    };
    check_group(theta_campaign, "campaign topic");
    check_group(theta_incentive, "incentive topic");

    FeatureVector out;
    out.layout = layout;
    out.values.reserve(layout.size());
    out.values.insert(out.values.end(), theta_campaign.begin(), theta_campaign.end());
    out.values.insert(out.values.end(), theta_incentive.begin(), theta_incentive.end());
    out.values.insert(out.values.end(), numerics.values.begin(), numerics.values.end());
    return out;
}

struct FeatureMatrix {
    FeatureLayout layout;
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::vector<std::string> ids;

    [[nodiscard]] std::size_t size() const { return rows.size(); }
    [[nodiscard]] bool empty() const { return rows.empty(); }

    void add(FeatureVector v, int label, std::string id = {}) {
        if (!(v.layout == layout)) throw LayoutError("row layout differs from the matrix layout");
        if (label != 0 && label != 1) throw ArgumentError("labels must be 0 or 1");
        rows.push_back(std::move(v.values));
        labels.push_back(label);
        ids.push_back(std::move(id));
    }
};

struct Standardizer {
    std::vector<double> mean;
    std::vector<double> deviation; // population standard deviation
    std::vector<bool> zero_deviation;
    std::string layout_fingerprint;

    friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

/// Per-slot mean and population standard deviation over the training rows.
inline Standardizer fit_standardizer(const FeatureMatrix& train) {
    if (train.size() < 2) throw ArgumentError("fit_standardizer needs at least two rows");
    const std::size_t width = train.layout.size();
    const double n = static_cast<double>(train.size());
    Standardizer s;
    s.layout_fingerprint = train.layout.fingerprint();
    s.mean.assign(width, 0.0);
    s.deviation.assign(width, 0.0);
    s.zero_deviation.assign(width, false);
    for (const auto& row : train.rows) {
        for (std::size_t j = 0; j < width; ++j) s.mean[j] += row[j];
    }
    for (auto& m : s.mean) m /= n;
    for (const auto& row : train.rows) {
        for (std::size_t j = 0; j < width; ++j) {
            const double d = row[j] - s.mean[j];
            s.deviation[j] += d * d;
        }
    }
    for (std::size_t j = 0; j < width; ++j) {
        s.deviation[j] = std::sqrt(s.deviation[j] / n);
        s.zero_deviation[j] = s.deviation[j] == 0.0;
    }
    return s;
}

/// (x - mean) / deviation per slot; flagged zero-deviation slots become 0.
inline FeatureMatrix apply_standardizer(const FeatureMatrix& m, const Standardizer& s) {
    if (m.layout.fingerprint() != s.layout_fingerprint || s.mean.size() != m.layout.size()) {
        throw LayoutError("standardizer was fitted on a different layout");
    }
    FeatureMatrix out = m;
    for (auto& row : out.rows) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            row[j] = s.zero_deviation[j] ? 0.0 : (row[j] - s.mean[j]) / s.deviation[j];
        }
    }
    return out;
}

inline nlohmann::ordered_json to_json(const Standardizer& s) {
    nlohmann::ordered_json j;
    j["format"] = "crowdtopic.standardizer";
    j["version"] = 1;
    j["layout_fingerprint"] = s.layout_fingerprint;
    j["mean"] = s.mean;
    j["deviation"] = s.deviation;
    j["zero_deviation"] = s.zero_deviation;
    return j;
}

// Delimited export ------------------------------------------------------------

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

/// Comma-separated: header "id,<slot names>,label", one line per row.
inline void write_csv(std::ostream& out, const FeatureMatrix& m) {
    out << "id";
    for (const auto& name : m.layout.slot_names()) out << ',' << name;
    out << ",label\n";
    for (std::size_t i = 0; i < m.size(); ++i) {
        out << m.ids[i];
        for (double v : m.rows[i]) out << ',' << format_double(v);
        out << ',' << m.labels[i] << '\n';
    }
}

inline FeatureMatrix read_csv(std::istream& in) {
    auto split = [](const std::string& line) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        return cells;
    };
    std::string line;
    if (!std::getline(in, line)) throw ParseError("feature file is empty");
    auto header = split(line);
    if (header.size() < 2 || header.front() != "id" || header.back() != "label") {
        throw ParseError("feature header must start with 'id' and end with 'label'");
    }
    FeatureMatrix m;
    m.layout = FeatureLayout::from_slot_names({header.begin() + 1, header.end() - 1});
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != header.size()) throw ParseError("feature line " + std::to_string(line_no) + ": wrong column count");
        std::vector<double> row(m.layout.size());
        for (std::size_t j = 0; j < row.size(); ++j) {
            const auto& cell = cells[j + 1];
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), row[j]);
            if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
                throw ParseError("feature line " + std::to_string(line_no) + ": bad number '" + cell + "'");
            }
        }
        const auto& lab = cells.back();
        if (lab != "0" && lab != "1") throw ParseError("feature line " + std::to_string(line_no) + ": label must be 0 or 1");
        m.rows.push_back(std::move(row));
        m.labels.push_back(lab == "1" ? 1 : 0);
        m.ids.push_back(cells.front());
    }
    return m;
}

inline void save_csv(const std::filesystem::path& path, const FeatureMatrix& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeFailure("cannot write '" + path.string() + "'");
    write_csv(out, m);
}

inline FeatureMatrix load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open feature file '" + path.string() + "'");
    return read_csv(in);
}

} // namespace crowdtopic::features
