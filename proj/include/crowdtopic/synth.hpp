#pragma once

// Synthetic data with known ground truth: planted-topic corpora, greedy topic
// alignment against the truth, and labeled campaign sets shaped like a small
// medical crowdfunding crawl.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "crowdtopic/corpus.hpp"
#include "crowdtopic/error.hpp"
#include "crowdtopic/random.hpp"
#include "crowdtopic/seed_terms.hpp"
#include "crowdtopic/textprep.hpp"
#include "crowdtopic/topicmodel.hpp"

namespace crowdtopic::synth {

using topics::Matrix;
using textprep::TokenizedDoc;
using textprep::Vocabulary;

struct PlantedSpec {
    std::size_t num_topics = 2;
    std::size_t vocab_size = 200;
    std::size_t num_docs = 400;
    double doc_len_mean = 60.0;
    double alpha_true = 0.5;
    double topic_sharpness = 0.05; // smaller -> sharper topics
    std::uint64_t seed = 7;
    /// seed_terms[k] names the top-ranked words of planted topic k.
    std::vector<std::vector<std::string>> seed_terms;

    void validate() const {
        if (num_topics < 1) throw ArgumentError("planted corpus needs K ≥ 1");
        if (vocab_size < num_topics) throw ArgumentError("planted corpus needs V ≥ K");
        if (num_docs < 1) throw ArgumentError("planted corpus needs D ≥ 1");
        if (!(doc_len_mean > 0.0)) throw ArgumentError("doc_len_mean must be > 0");
        if (!(alpha_true > 0.0) || !(topic_sharpness > 0.0)) throw ArgumentError("Dirichlet concentrations must be > 0");
        if (seed_terms.size() > num_topics) throw ArgumentError("seed terms given for more topics than K");
        std::size_t total = 0;
        for (const auto& t : seed_terms) total += t.size();
        if (total > vocab_size) throw ArgumentError("more seed terms than vocabulary slots");
    }
};

/// K=2, V=200, D=400, 60 tokens per document, sharpness 0.05, seed 7, with the
/// default campaign seed terms planted as the top words of their topics.
inline PlantedSpec reference_planted_spec() {
    PlantedSpec spec;
    spec.seed_terms = topics::default_campaign_seeds().topics;
    return spec;
}

struct PlantedCorpus {
    std::vector<TokenizedDoc> docs;
    Matrix true_phi;   // K x V
    Matrix true_theta; // D x K
    Vocabulary vocab;
    PlantedSpec spec;
};

/// Normalized draw from Dirichlet(concentration), computed in log space.
inline std::vector<double> dirichlet_draw(Rng& rng, const std::vector<double>& concentration) {
    std::vector<double> logs(concentration.size());
    for (std::size_t i = 0; i < logs.size(); ++i) logs[i] = log_gamma_draw(rng, concentration[i]);
    const double top = *std::max_element(logs.begin(), logs.end());
    double sum = 0.0;
    for (auto& v : logs) sum += (v = std::exp(v - top));
    for (auto& v : logs) v /= sum;
    return logs;
}

/// Samples document lengths (Poisson around the mean, at least 1), then one
/// topic per token from theta_d and one word per token from phi_topic.
inline std::vector<std::uint32_t> sample_document(Rng& rng, const Matrix& phi, std::span<const double> theta,
                                                  double doc_len_mean) {
    const std::size_t len = std::max<std::size_t>(1, poisson_draw(rng, doc_len_mean));
    auto draw = [&](std::span<const double> p) {
        const double u = uniform01(rng);
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < p.size(); ++i) {
            acc += p[i];
            if (u < acc) return i;
        }
        return p.size() - 1;
    };
    std::vector<std::uint32_t> words(len);
    for (auto& w : words) w = static_cast<std::uint32_t>(draw(phi.row(draw(theta))));
    return words;
}

namespace detail {

inline std::vector<std::string> generated_terms(std::size_t v) {
    std::vector<std::string> terms(v);
    for (std::size_t i = 0; i < v; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "w%03zu", i);
        terms[i] = buf;
    }
    return terms;
}

/// Draws the K x V topic matrix, then relabels columns so that seed term j of
/// topic k sits on the column holding that topic's j-th largest weight.
/// Relabeling columns leaves the distribution of phi unchanged.
inline Matrix planted_phi(Rng& rng, const PlantedSpec& spec, std::vector<std::string>& terms) {
    const std::size_t K = spec.num_topics;
    const std::size_t V = spec.vocab_size;
    Matrix phi(K, V);
    const std::vector<double> conc(V, spec.topic_sharpness);
    for (std::size_t k = 0; k < K; ++k) {
        const auto row = dirichlet_draw(rng, conc);
        std::copy(row.begin(), row.end(), phi.row(k).begin());
    }
    terms = generated_terms(V);
    std::vector<char> reserved(V, 0);
    for (std::size_t k = 0; k < spec.seed_terms.size(); ++k) {
        for (const auto& term : spec.seed_terms[k]) {
            std::size_t best = V;
            for (std::size_t w = 0; w < V; ++w) {
                if (!reserved[w] && (best == V || phi(k, w) > phi(k, best))) best = w;
            }
            reserved[best] = 1;
            terms[best] = term;
        }
    }
    // Generated names stay sorted by column so ids and lexicographic order agree.
    std::vector<std::string> generated;
    for (std::size_t w = 0; w < V; ++w) {
        if (!reserved[w]) generated.push_back(terms[w]);
    }
    std::sort(generated.begin(), generated.end());
    std::size_t next = 0;
    for (std::size_t w = 0; w < V; ++w) {
        if (!reserved[w]) terms[w] = generated[next++];
    }
    return phi;
}

} // namespace detail

/// Deterministic for a given spec (including its seed).
inline PlantedCorpus generate_planted_corpus(const PlantedSpec& spec) {
    spec.validate();
    Rng rng = make_rng(spec.seed);
    PlantedCorpus out;
    out.spec = spec;
    std::vector<std::string> terms;
    out.true_phi = detail::planted_phi(rng, spec, terms);
    out.vocab = Vocabulary(std::move(terms));

    const std::size_t K = spec.num_topics;
    out.true_theta = Matrix(spec.num_docs, K);
    const std::vector<double> conc(K, spec.alpha_true);
    out.docs.reserve(spec.num_docs);
    for (std::size_t d = 0; d < spec.num_docs; ++d) {
        if (K == 1) {
            out.true_theta(d, 0) = 1.0;
        } else {
            const auto theta = dirichlet_draw(rng, conc);
            std::copy(theta.begin(), theta.end(), out.true_theta.row(d).begin());
        }
        TokenizedDoc doc;
        doc.source_id = "doc" + std::to_string(d);
        doc.token_ids = sample_document(rng, out.true_phi, out.true_theta.row(d), spec.doc_len_mean);
        out.docs.push_back(std::move(doc));
    }
    return out;
}

/// Ids of the n largest entries of a row, ties to the lower id.
inline std::vector<std::size_t> top_ids(std::span<const double> row, std::size_t n) {
    std::vector<std::size_t> ids(row.size());
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    n = std::min(n, ids.size());
    std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n), ids.end(),
                      [&](std::size_t a, std::size_t b) { return row[a] != row[b] ? row[a] > row[b] : a < b; });
    ids.resize(n);
    return ids;
}

struct Alignment {
    std::vector<std::size_t> estimated_for_true; // true topic t <-> estimated topic estimated_for_true[t]
    std::vector<double> overlap;                 // |top_n(true t) ∩ top_n(est)| / n
};

/// Greedy matching on top-n word-set overlap: repeatedly pairs the unmatched
/// (true, estimated) topics with the largest overlap, ties to the lower true
/// index and then the lower estimated index. Word ties inside a row go to the
/// lower id, which is lexicographic order for generated vocabularies.
inline Alignment align_topics(const Matrix& true_phi, const Matrix& est_phi, std::size_t n = 10) {
    if (true_phi.rows != est_phi.rows || true_phi.cols != est_phi.cols) {
        throw ArgumentError("align_topics needs matrices of equal shape");
    }
    const std::size_t K = true_phi.rows;
    std::vector<std::set<std::size_t>> true_top(K);
    std::vector<std::set<std::size_t>> est_top(K);
    for (std::size_t k = 0; k < K; ++k) {
        auto a = top_ids(true_phi.row(k), n);
        auto b = top_ids(est_phi.row(k), n);
        true_top[k] = {a.begin(), a.end()};
        est_top[k] = {b.begin(), b.end()};
    }
    const double denom = static_cast<double>(std::min(n, true_phi.cols));
    std::vector<std::vector<double>> score(K, std::vector<double>(K));
    for (std::size_t t = 0; t < K; ++t) {
        for (std::size_t e = 0; e < K; ++e) {
            std::size_t common = 0;
            for (auto w : true_top[t]) common += est_top[e].count(w);
            score[t][e] = static_cast<double>(common) / denom;
        }
    }
    Alignment out{std::vector<std::size_t>(K), std::vector<double>(K)};
    std::vector<char> used_t(K, 0);
    std::vector<char> used_e(K, 0);
    for (std::size_t round = 0; round < K; ++round) {
        std::size_t bt = K;
        std::size_t be = K;
        for (std::size_t t = 0; t < K; ++t) {
            if (used_t[t]) continue;
            for (std::size_t e = 0; e < K; ++e) {
                if (used_e[e]) continue;
                if (bt == K || score[t][e] > score[bt][be]) bt = t, be = e;
            }
        }
        used_t[bt] = used_e[be] = 1;
        out.estimated_for_true[bt] = be;
        out.overlap[bt] = score[bt][be];
    }
    return out;
}

// Campaign generation --------------------------------------------------------

struct CampaignSynthSpec {
    std::size_t n = 410;
    double success_fraction = 210.0 / 410.0;
    double class_separation = 3.0;
    PlantedSpec campaign_text = [] {
        PlantedSpec s;
        s.seed_terms = topics::default_campaign_seeds().topics;
        return s;
    }();
    PlantedSpec incentive_text = [] {
        PlantedSpec s;
        s.vocab_size = 150;
        s.doc_len_mean = 30.0;
        s.seed_terms = topics::default_incentive_seeds().topics;
        return s;
    }();
    std::uint64_t seed = 7;

    void validate() const {
        if (n < 2) throw ArgumentError("generate_campaigns needs n ≥ 2");
        if (!(success_fraction >= 0.0 && success_fraction <= 1.0)) throw ArgumentError("success_fraction must lie in [0, 1]");
        if (!(class_separation >= 0.0) || !std::isfinite(class_separation)) {
            throw ArgumentError("class_separation must be ≥ 0");
        }
        campaign_text.validate();
        incentive_text.validate();
    }
};

struct ChannelTruth {
    Vocabulary vocab;
    Matrix true_phi;
    Matrix true_theta; // one row per campaign
};

struct CampaignSynthesis {
    corpus::CampaignSet set;
    ChannelTruth campaign_text;
    ChannelTruth incentive_text;
    CampaignSynthSpec spec;
};

/// Number of successes: success_fraction * n rounded up, where products within
/// 1e-9 of an integer count as that integer.
inline std::size_t success_count(std::size_t n, double fraction) {
    const double exact = fraction * static_cast<double>(n);
    const double nearest = std::round(exact);
    if (std::abs(exact - nearest) < 1e-9) return static_cast<std::size_t>(nearest);
    return static_cast<std::size_t>(std::ceil(exact));
}

namespace detail {

inline constexpr std::string_view kFiller[] = {"for", "the", "and", "of", "with", "to"};

/// Sentences of eight words, each capitalized and closed with a period, with a
/// stop word woven in now and then.
inline std::string render_text(Rng& rng, const std::vector<std::uint32_t>& words, const Vocabulary& vocab) {
    std::string text;
    for (std::size_t i = 0; i < words.size(); ++i) {
        const bool sentence_start = i % 8 == 0;
        if (i > 0) text += sentence_start ? ". " : " ";
        std::string w = vocab.term(words[i]);
        if (sentence_start && !w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 32);
        text += w;
        if (!sentence_start && uniform01(rng) < 0.15) {
            text += ' ';
            text += kFiller[uniform_index(rng, std::size(kFiller))];
        }
    }
    text += '.';
    return text;
}

} // namespace detail

/// Labeled campaigns with class-conditional numerics and topic mixtures.
///
/// Numerics: per-feature standard normal draws are shifted by ±separation/2
/// (success +, failure −) in a direction chosen per feature: lower goals,
/// longer durations, fewer days left and more supporters mark success. The
/// raised/goal ratio is drawn from a narrow band on the correct side of 1
/// (success [1, ...), failure (..., 1)), so mean donation only weakly
/// reveals the label when separation is 0.
///
/// Texts: theta_d ~ Dirichlet(alpha_k) with alpha_k = alpha_true * (1 +
/// separation) for the class's preferred topic (success: 0, failure: 1) and
/// alpha_true elsewhere; separation 0 makes both classes' mixtures identical.
inline CampaignSynthesis generate_campaigns(const CampaignSynthSpec& spec) {
    spec.validate();
    Rng rng = make_rng(spec.seed);
    CampaignSynthesis out;
    out.spec = spec;
    out.set.source = "synthetic:seed=" + std::to_string(spec.seed);

    std::vector<int> labels(spec.n, 0);
    const std::size_t n_success = success_count(spec.n, spec.success_fraction);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_success), 1);
    shuffle(std::span<int>(labels), rng);

    auto setup_channel = [&](const PlantedSpec& ps, ChannelTruth& truth, Rng& channel_rng) {
        std::vector<std::string> terms;
        truth.true_phi = detail::planted_phi(channel_rng, ps, terms);
        truth.vocab = Vocabulary(std::move(terms));
        truth.true_theta = Matrix(spec.n, ps.num_topics);
    };
    Rng campaign_rng = make_rng(derive_seed(spec.seed, 1));
    Rng incentive_rng = make_rng(derive_seed(spec.seed, 2));
    setup_channel(spec.campaign_text, out.campaign_text, campaign_rng);
    setup_channel(spec.incentive_text, out.incentive_text, incentive_rng);

    auto channel_text = [&](const PlantedSpec& ps, ChannelTruth& truth, Rng& channel_rng, std::size_t i, int label) {
        const std::size_t K = ps.num_topics;
        if (K == 1) {
            truth.true_theta(i, 0) = 1.0;
        } else {
            std::vector<double> conc(K, ps.alpha_true);
            conc[(label == 1 ? 0 : 1) % K] *= 1.0 + spec.class_separation;
            const auto theta = dirichlet_draw(channel_rng, conc);
            std::copy(theta.begin(), theta.end(), truth.true_theta.row(i).begin());
        }
        const auto words = sample_document(channel_rng, truth.true_phi, truth.true_theta.row(i), ps.doc_len_mean);
        return detail::render_text(channel_rng, words, truth.vocab);
    };

    const auto base_date = corpus::Date{2019, 1, 1}.days_since_epoch();
    for (std::size_t i = 0; i < spec.n; ++i) {
        const int label = labels[i];
        const double shift = (label == 1 ? 0.5 : -0.5) * spec.class_separation;
        auto z = [&] { return standard_normal(rng); };

        corpus::Campaign c;
        char id[32];
        std::snprintf(id, sizeof id, "syn-%04zu", i);
        c.id = id;
        c.goal_amount = std::round(std::clamp(9000.0 * std::exp(0.25 * (z() - shift)), 4000.0, 20000.0));
        const auto duration = static_cast<std::int64_t>(std::max(1.0, std::round(30.0 + 8.0 * (z() + shift))));
        c.start_date = corpus::Date::from_days(base_date + static_cast<std::int64_t>(uniform_index(rng, 1000)));
        c.end_date = corpus::Date::from_days(c.start_date.days_since_epoch() + duration);
        c.days_left = static_cast<std::int64_t>(std::max(0.0, std::round(4.0 + 2.0 * (z() - shift))));
        c.n_supporters = static_cast<std::int64_t>(std::max(1.0, std::round(std::exp(4.0 + 0.8 * (z() + shift)))));

        const double band = 0.05 * std::abs(z());
        const double ratio = label == 1 ? 1.0 + band : std::max(0.05, 1.0 - 0.001 - band);
        c.raised_amount = label == 1 ? std::ceil(c.goal_amount * ratio) : std::floor(c.goal_amount * ratio);
        if (label == 0 && c.raised_amount >= c.goal_amount) c.raised_amount = c.goal_amount - 1.0;
        const double mean = c.raised_amount / static_cast<double>(c.n_supporters);
        if (c.n_supporters == 1) {
            c.top_donor_amount = c.min_donor_amount = c.raised_amount;
        } else {
            c.min_donor_amount = std::floor(mean * (0.05 + 0.95 * uniform01(rng)));
            c.top_donor_amount = std::min(c.raised_amount, std::ceil(mean * (1.0 + 3.0 * uniform01(rng))));
        }

        c.campaign_text = channel_text(spec.campaign_text, out.campaign_text, campaign_rng, i, label);
        c.incentive_text = channel_text(spec.incentive_text, out.incentive_text, incentive_rng, i, label);
        corpus::validate(c);
        out.set.records.push_back({std::move(c), label});
    }
    return out;
}

inline nlohmann::ordered_json channel_truth_json(const ChannelTruth& t) {
    nlohmann::ordered_json j;
    j["terms"] = t.vocab.terms();
    j["true_phi"] = topics::matrix_to_json(t.true_phi);
    j["true_theta"] = topics::matrix_to_json(t.true_theta);
    return j;
}

/// Sidecar describing everything the generator drew, for oracle checks.
inline nlohmann::ordered_json truth_json(const CampaignSynthesis& s) {
    nlohmann::ordered_json j;
    j["format"] = "crowdtopic.synth_truth";
    j["version"] = 1;
    j["seed"] = s.spec.seed;
    j["n"] = s.spec.n;
    j["success_fraction"] = s.spec.success_fraction;
    j["class_separation"] = s.spec.class_separation;
    j["numeric_model"] = {
        {"shift", "success +separation/2, failure -separation/2 on standard normal draws"},
        {"goal_amount", "clamp(9000 * exp(0.25 * (z - shift)), 4000, 20000)"},
        {"duration_days", "max(1, 30 + 8 * (z + shift))"},
        {"days_left", "max(0, 4 + 2 * (z - shift))"},
        {"n_supporters", "max(1, exp(4 + 0.8 * (z + shift)))"},
        {"raised_over_goal", "success 1 + 0.05|z|, failure 1 - 0.001 - 0.05|z|"},
    };
    j["labels"] = s.set.labels();
    j["campaign_text"] = channel_truth_json(s.campaign_text);
    j["incentive_text"] = channel_truth_json(s.incentive_text);
    return j;
}

} // namespace crowdtopic::synth
