#pragma once

// Confusion counts, accuracy/precision/recall/F1 and the evaluation report.
// Class 1 (success) is the positive class. A metric whose denominator is zero
// is undefined (empty optional), never 0.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "crowdtopic/error.hpp"
#include "crowdtopic/features.hpp"
#include "crowdtopic/forest.hpp"

namespace crowdtopic::eval {

struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t tn = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    [[nodiscard]] std::size_t total() const { return tp + tn + fp + fn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred) {
    if (y_true.size() != y_pred.size()) throw ArgumentError("label vectors differ in length");
    if (y_true.empty()) throw ArgumentError("label vectors are empty");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i];
        const int p = y_pred[i];
        if ((t != 0 && t != 1) || (p != 0 && p != 1)) throw ArgumentError("labels must be 0 or 1");
        if (t == 1) {
            (p == 1 ? cm.tp : cm.fn)++;
        } else {
            (p == 1 ? cm.fp : cm.tn)++;
        }
    }
    return cm;
}

struct Metrics {
    double accuracy = 0.0;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
};

/// Harmonic mean 2PR/(P+R); undefined when either input is, or P+R = 0.
inline std::optional<double> f1_score(std::optional<double> precision, std::optional<double> recall) {
    if (!precision || !recall || *precision + *recall == 0.0) return std::nullopt;
    return 2.0 * *precision * *recall / (*precision + *recall);
}

inline Metrics metrics(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw ArgumentError("metrics of an empty confusion matrix");
    auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    Metrics m;
    m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    m.precision = ratio(cm.tp, cm.tp + cm.fp);
    m.recall = ratio(cm.tp, cm.tp + cm.fn);
    m.f1 = f1_score(m.precision, m.recall);
    return m;
}

/// Accuracy on y_test of always predicting the training majority (tie → 1).
inline double majority_baseline(std::span<const int> y_train, std::span<const int> y_test) {
    if (y_train.empty() || y_test.empty()) throw ArgumentError("majority_baseline needs non-empty label vectors");
    std::size_t ones = 0;
    for (int y : y_train) ones += y == 1;
    const int majority = 2 * ones >= y_train.size() ? 1 : 0;
    std::size_t hits = 0;
    for (int y : y_test) hits += y == majority;
    return static_cast<double>(hits) / static_cast<double>(y_test.size());
}

struct TopicSummary {
    std::string channel;
    std::vector<std::vector<std::string>> top_words; // one list per topic
};

struct MetricsReport {
    Metrics metrics;
    ConfusionMatrix counts;
    double baseline_accuracy = 0.0;
    std::vector<TopicSummary> topics;
    nlohmann::ordered_json run_config = nlohmann::ordered_json::object();
};

inline nlohmann::ordered_json optional_json(const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

inline nlohmann::ordered_json to_json(const MetricsReport& r) {
    nlohmann::ordered_json j;
    j["format"] = "crowdtopic.report";
    j["version"] = 1;
    j["metrics"] = {{"accuracy", r.metrics.accuracy},
                    {"precision", optional_json(r.metrics.precision)},
                    {"recall", optional_json(r.metrics.recall)},
                    {"f1", optional_json(r.metrics.f1)}};
    j["confusion"] = {{"tp", r.counts.tp}, {"tn", r.counts.tn}, {"fp", r.counts.fp}, {"fn", r.counts.fn}};
    j["baseline_accuracy"] = r.baseline_accuracy;
    auto topics = nlohmann::ordered_json::array();
    for (const auto& t : r.topics) {
        nlohmann::ordered_json jt;
        jt["channel"] = t.channel;
        jt["num_topics"] = t.top_words.size();
        jt["top_words"] = t.top_words;
        topics.push_back(std::move(jt));
    }
    j["topics"] = std::move(topics);
    j["run_config"] = r.run_config;
    return j;
}

/// "78.00%" style, or "undefined".
inline std::string percent(const std::optional<double>& v) {
    if (!v) return "undefined";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", *v * 100.0);
    return buf;
}

inline std::string render_text(const MetricsReport& r) {
    std::ostringstream out;
    for (const auto& t : r.topics) {
        out << "Topics: " << t.channel << " (K=" << t.top_words.size() << ")\n";
        for (std::size_t k = 0; k < t.top_words.size(); ++k) {
            out << "  topic " << k << ":";
            for (const auto& w : t.top_words[k]) out << ' ' << w;
            out << '\n';
        }
        out << '\n';
    }
    out << "Metric      Value\n";
    out << "accuracy    " << percent(r.metrics.accuracy) << '\n';
    out << "precision   " << percent(r.metrics.precision) << '\n';
    out << "recall      " << percent(r.metrics.recall) << '\n';
    out << "f1          " << percent(r.metrics.f1) << '\n';
    out << "baseline    " << percent(r.baseline_accuracy) << "  (training-majority class)\n\n";
    out << "Confusion   tp=" << r.counts.tp << " tn=" << r.counts.tn << " fp=" << r.counts.fp << " fn=" << r.counts.fn
        << '\n';
    return out.str();
}

/// Scores the forest on the test matrix and assembles the report. y_train
/// feeds the majority baseline.
inline MetricsReport evaluate_run(const forest::RandomForest& f, const features::FeatureMatrix& test,
                                  std::span<const int> y_train, std::vector<TopicSummary> topics,
                                  nlohmann::ordered_json run_config = nlohmann::ordered_json::object()) {
    const std::vector<int> predicted = forest::predict_all(f, test);
    MetricsReport r;
    r.counts = confusion(test.labels, predicted);
    r.metrics = metrics(r.counts);
    r.baseline_accuracy = majority_baseline(y_train, test.labels);
    r.topics = std::move(topics);
    r.run_config = std::move(run_config);
    return r;
}

inline void save_report(const std::filesystem::path& dir, const MetricsReport& r) {
    std::ofstream json_out(dir / "report.json", std::ios::binary);
    std::ofstream text_out(dir / "report.txt", std::ios::binary);
    if (!json_out || !text_out) throw RuntimeFailure("cannot write report files in '" + dir.string() + "'");
    json_out << to_json(r).dump(2) << '\n';
    text_out << render_text(r);
}

} // namespace crowdtopic::eval
