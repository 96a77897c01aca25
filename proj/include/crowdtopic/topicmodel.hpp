#pragma once

/*
 * Seeded LDA trained by collapsed Gibbs sampling.
 *
 *   k in [0, K)  topics        w in [0, V)  vocabulary ids
 *   d in [0, D)  documents     z[d][i]      topic of the i-th token of d
 *
 * Domain knowledge enters in two places:
 *   1. tokens of a seed word start in the seed's designated topic;
 *   2. the topic-word prior is asymmetric, beta_kw = beta * seed_boost when w
 *      seeds topic k and beta otherwise.
 *
 * The collapsed conditional for one token (counts exclude that token):
 *
 *   p(z = k) ∝ (ndk[d][k] + alpha) * (nkw[k][w] + beta_kw) / (nk[k] + sum_w beta_kw)
 *
 * Estimates averaged over post-burn-in samples:
 *
 *   phi_kw   = (nkw[k][w] + beta_kw) / (nk[k] + sum_w beta_kw)
 *   theta_dk = (ndk[d][k] + alpha) / (N_d + K * alpha)
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "crowdtopic/error.hpp"
#include "crowdtopic/parallel.hpp"
#include "crowdtopic/random.hpp"
#include "crowdtopic/textprep.hpp"

namespace crowdtopic::topics {

using textprep::TokenizedDoc;
using textprep::Vocabulary;

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

struct Hyperparams {
    std::size_t num_topics = 2;
    double alpha = 1.0;
    double beta = 0.01;
    double seed_boost = 50.0;

    /// alpha = 1, beta = 0.01, seed_boost = 50. alpha stays fixed across K so
    /// held-out perplexities of different K are comparable.
    static Hyperparams defaults(std::size_t k) { return {k, 1.0, 0.01, 50.0}; }

    void validate() const {
        if (num_topics < 1) throw ArgumentError("number of topics must be ≥ 1");
        if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ArgumentError("alpha must be > 0");
        if (!(beta > 0.0) || !std::isfinite(beta)) throw ArgumentError("beta must be > 0");
        if (!(seed_boost >= 1.0) || !std::isfinite(seed_boost)) throw ArgumentError("seed_boost must be ≥ 1");
    }
};

struct GibbsSchedule {
    std::size_t iters = 1000;
    std::size_t burnin = 500;
    std::size_t sample_lag = 10;

    void validate() const {
        if (iters <= burnin) throw ArgumentError("Gibbs schedule needs iters > burnin");
        if (sample_lag < 1) throw ArgumentError("Gibbs schedule needs sample_lag ≥ 1");
    }
};

/// Seed terms per topic; list i seeds topic i. Lists may be empty.
struct SeedSpec {
    std::vector<std::vector<std::string>> topics;

    [[nodiscard]] bool empty() const {
        return std::all_of(topics.begin(), topics.end(), [](const auto& t) { return t.empty(); });
    }
    /// Drops lists for topics >= k.
    [[nodiscard]] SeedSpec truncated(std::size_t k) const {
        SeedSpec out;
        out.topics.assign(topics.begin(), topics.begin() + static_cast<std::ptrdiff_t>(std::min(k, topics.size())));
        return out;
    }
    friend bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

/// A SeedSpec bound to vocabulary ids.
struct ResolvedSeeds {
    std::vector<int> topic_of_word; // -1 when the word seeds nothing
    std::vector<std::string> warnings;

    [[nodiscard]] std::size_t vocab_size() const { return topic_of_word.size(); }

    static ResolvedSeeds none(std::size_t vocab_size) { return {std::vector<int>(vocab_size, -1), {}}; }

    static ResolvedSeeds from_ids(std::size_t vocab_size, const std::vector<std::vector<std::uint32_t>>& ids) {
        ResolvedSeeds out = none(vocab_size);
        for (std::size_t k = 0; k < ids.size(); ++k) {
            for (auto w : ids[k]) {
                if (w >= vocab_size) throw ArgumentError("seed word id out of range");
                if (out.topic_of_word[w] >= 0 && out.topic_of_word[w] != static_cast<int>(k)) {
                    throw ArgumentError("a word may seed at most one topic");
                }
                out.topic_of_word[w] = static_cast<int>(k);
            }
        }
        return out;
    }

    [[nodiscard]] std::size_t max_topic_plus_one() const {
        int m = -1;
        for (int t : topic_of_word) m = std::max(m, t);
        return static_cast<std::size_t>(m + 1);
    }
};

/// Terms missing from the vocabulary are skipped with a warning. A term listed
/// under two topics, or a non-empty list for a topic >= K, is an error.
inline ResolvedSeeds resolve_seeds(const SeedSpec& spec, const Vocabulary& vocab, std::size_t num_topics) {
    ResolvedSeeds out = ResolvedSeeds::none(vocab.size());
    for (std::size_t k = 0; k < spec.topics.size(); ++k) {
        if (spec.topics[k].empty()) continue;
        if (k >= num_topics) {
            throw ArgumentError("seed list for topic " + std::to_string(k) + " but K = " + std::to_string(num_topics));
        }
        for (const auto& term : spec.topics[k]) {
            auto id = vocab.id_of(term);
            if (!id) {
                out.warnings.push_back("seed term '" + term + "' not in vocabulary; ignored");
                continue;
            }
            int& slot = out.topic_of_word[*id];
            if (slot >= 0 && slot != static_cast<int>(k)) {
                throw ArgumentError("seed term '" + term + "' assigned to topics " + std::to_string(slot) + " and " +
                                    std::to_string(k));
            }
            slot = static_cast<int>(k);
        }
    }
    return out;
}

/// beta_kw with its per-topic row sums.
class TopicWordPrior {
public:
    TopicWordPrior(const Hyperparams& hyper, const ResolvedSeeds& seeds)
        : seeds_(&seeds), beta_(hyper.beta), boosted_(hyper.beta * hyper.seed_boost),
          row_sum_(hyper.num_topics, hyper.beta * static_cast<double>(seeds.vocab_size())) {
        for (int t : seeds.topic_of_word) {
            if (t >= 0 && static_cast<std::size_t>(t) < hyper.num_topics) row_sum_[t] += boosted_ - beta_;
        }
    }

    [[nodiscard]] double at(std::size_t k, std::uint32_t w) const {
        return seeds_->topic_of_word[w] == static_cast<int>(k) ? boosted_ : beta_;
    }
    [[nodiscard]] double row_sum(std::size_t k) const { return row_sum_[k]; }

private:
    const ResolvedSeeds* seeds_;
    double beta_;
    double boosted_;
    std::vector<double> row_sum_;
};

/// Topic assignments and the count tables they imply.
struct GibbsState {
    std::size_t num_topics = 0;
    std::size_t vocab_size = 0;
    std::vector<std::vector<std::uint32_t>> z;
    std::vector<std::uint32_t> ndk; // D x K
    std::vector<std::uint32_t> nkw; // K x V
    std::vector<std::uint32_t> nk;  // K
    Rng rng;

    [[nodiscard]] std::size_t num_docs() const { return z.size(); }
    [[nodiscard]] std::uint32_t doc_topic(std::size_t d, std::size_t k) const { return ndk[d * num_topics + k]; }
    [[nodiscard]] std::uint32_t topic_word(std::size_t k, std::size_t w) const { return nkw[k * vocab_size + w]; }
};

/// Largest deviation from 1 observed when the sampling distributions were
/// normalized (only collected when requested).
struct SweepStats {
    double max_normalization_error = 0.0;
    std::size_t draws = 0;
};

namespace detail {

inline void check_corpus(const std::vector<TokenizedDoc>& corpus, std::size_t vocab_size) {
    if (corpus.empty()) throw ArgumentError("topic model needs a non-empty corpus");
    for (const auto& doc : corpus) {
        for (auto w : doc.token_ids) {
            if (w >= vocab_size) throw ArgumentError("token id " + std::to_string(w) + " outside vocabulary");
        }
    }
}

} // namespace detail

/// Seed-word tokens start in their designated topic; all other tokens get a
/// uniformly random topic from the seeded generator.
inline GibbsState init_state(const std::vector<TokenizedDoc>& corpus, const Hyperparams& hyper,
                             const ResolvedSeeds& seeds, std::uint64_t seed) {
    hyper.validate();
    const std::size_t K = hyper.num_topics;
    const std::size_t V = seeds.vocab_size();
    detail::check_corpus(corpus, V);
    if (seeds.max_topic_plus_one() > K) throw ArgumentError("seed topic index ≥ K");

    GibbsState s;
    s.num_topics = K;
    s.vocab_size = V;
    s.rng = make_rng(seed);
    s.z.resize(corpus.size());
    s.ndk.assign(corpus.size() * K, 0);
    s.nkw.assign(K * V, 0);
    s.nk.assign(K, 0);
    for (std::size_t d = 0; d < corpus.size(); ++d) {
        const auto& words = corpus[d].token_ids;
        auto& zd = s.z[d];
        zd.resize(words.size());
        for (std::size_t i = 0; i < words.size(); ++i) {
            const auto w = words[i];
            const int seeded = seeds.topic_of_word[w];
            const auto k = seeded >= 0 ? static_cast<std::uint32_t>(seeded)
                                       : static_cast<std::uint32_t>(uniform_index(s.rng, K));
            zd[i] = k;
            ++s.ndk[d * K + k];
            ++s.nkw[k * V + w];
            ++s.nk[k];
        }
    }
    return s;
}

/// One pass over every token in document order, resampling each assignment
/// from the collapsed conditional.
inline void gibbs_sweep(GibbsState& s, const std::vector<TokenizedDoc>& corpus, const Hyperparams& hyper,
                        const ResolvedSeeds& seeds, SweepStats* stats = nullptr) {
    const std::size_t K = s.num_topics;
    const std::size_t V = s.vocab_size;
    const TopicWordPrior prior(hyper, seeds);
    const double boosted = hyper.beta * hyper.seed_boost;
    std::vector<double> inv_denominator(K);
    std::vector<double> cumulative(K);

    for (std::size_t d = 0; d < corpus.size(); ++d) {
        const auto& words = corpus[d].token_ids;
        auto& zd = s.z[d];
        std::uint32_t* ndk = s.ndk.data() + d * K;
        for (std::size_t i = 0; i < words.size(); ++i) {
            const auto w = words[i];
            const auto old = zd[i];
            --ndk[old];
            --s.nkw[old * V + w];
            --s.nk[old];

            const int seeded = seeds.topic_of_word[w];
            double total = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                const double beta_kw = static_cast<int>(k) == seeded ? boosted : hyper.beta;
                const double p = (ndk[k] + hyper.alpha) * (s.nkw[k * V + w] + beta_kw) /
                                 (s.nk[k] + prior.row_sum(k));
                total += p;
                cumulative[k] = total;
            }
            if (stats) {
                double normalized = 0.0;
                double prev = 0.0;
                for (std::size_t k = 0; k < K; ++k) {
                    normalized += (cumulative[k] - prev) / total;
                    prev = cumulative[k];
                }
                stats->max_normalization_error = std::max(stats->max_normalization_error, std::abs(normalized - 1.0));
                ++stats->draws;
            }
            const double u = uniform01(s.rng) * total;
            std::uint32_t k = 0;
            while (k + 1 < K && cumulative[k] <= u) ++k;

            zd[i] = k;
            ++ndk[k];
            ++s.nkw[k * V + w];
            ++s.nk[k];
        }
    }
}

/// Point estimate of phi from one state.
inline Matrix phi_from_state(const GibbsState& s, const Hyperparams& hyper, const ResolvedSeeds& seeds) {
    const TopicWordPrior prior(hyper, seeds);
    Matrix phi(s.num_topics, s.vocab_size);
    for (std::size_t k = 0; k < s.num_topics; ++k) {
        const double denom = s.nk[k] + prior.row_sum(k);
        for (std::size_t w = 0; w < s.vocab_size; ++w) {
            phi(k, w) = (s.topic_word(k, w) + prior.at(k, static_cast<std::uint32_t>(w))) / denom;
        }
    }
    return phi;
}

/// Point estimate of theta from one state.
inline Matrix theta_from_state(const GibbsState& s, const Hyperparams& hyper) {
    const std::size_t K = s.num_topics;
    Matrix theta(s.num_docs(), K);
    for (std::size_t d = 0; d < s.num_docs(); ++d) {
        const double denom = static_cast<double>(s.z[d].size()) + static_cast<double>(K) * hyper.alpha;
        for (std::size_t k = 0; k < K; ++k) theta(d, k) = (s.doc_topic(d, k) + hyper.alpha) / denom;
    }
    return theta;
}

struct TopicModel {
    Hyperparams hyper;
    GibbsSchedule schedule;
    Matrix phi;   // K x V
    Matrix theta; // D x K, training documents
    std::string vocab_fingerprint;
    SeedSpec seeds;
    std::uint64_t training_seed = 0;

    [[nodiscard]] std::size_t num_topics() const { return phi.rows; }
    [[nodiscard]] std::size_t vocab_size() const { return phi.cols; }

    friend bool operator==(const TopicModel& a, const TopicModel& b) {
        return a.phi == b.phi && a.theta == b.theta && a.vocab_fingerprint == b.vocab_fingerprint &&
               a.seeds == b.seeds && a.training_seed == b.training_seed && a.hyper.num_topics == b.hyper.num_topics &&
               a.hyper.alpha == b.hyper.alpha && a.hyper.beta == b.hyper.beta &&
               a.hyper.seed_boost == b.hyper.seed_boost;
    }
};

/// A finished chain: the averaged model and the final sampler state.
struct Chain {
    TopicModel model;
    GibbsState final_state;
};

/// Runs `schedule.iters` sweeps after initialization. From sweep burnin + lag
/// on, every lag-th sweep contributes a phi/theta sample; the model holds their
/// mean. If the schedule yields no sample, the final state is used.
inline Chain run_chain(const std::vector<TokenizedDoc>& corpus, const Hyperparams& hyper, const ResolvedSeeds& seeds,
                       const GibbsSchedule& schedule, std::uint64_t seed, SweepStats* stats = nullptr) {
    schedule.validate();
    Chain out;
    out.final_state = init_state(corpus, hyper, seeds, seed);
    auto& state = out.final_state;

    Matrix phi_sum(hyper.num_topics, seeds.vocab_size());
    Matrix theta_sum(corpus.size(), hyper.num_topics);
    std::size_t samples = 0;
    auto accumulate = [&] {
        const Matrix phi = phi_from_state(state, hyper, seeds);
        const Matrix theta = theta_from_state(state, hyper);
        for (std::size_t i = 0; i < phi.data.size(); ++i) phi_sum.data[i] += phi.data[i];
        for (std::size_t i = 0; i < theta.data.size(); ++i) theta_sum.data[i] += theta.data[i];
        ++samples;
    };
    for (std::size_t it = 1; it <= schedule.iters; ++it) {
        gibbs_sweep(state, corpus, hyper, seeds, stats);
        if (it > schedule.burnin && (it - schedule.burnin) % schedule.sample_lag == 0) accumulate();
    }
    if (samples == 0) accumulate();
    const double scale = 1.0 / static_cast<double>(samples);
    for (auto& v : phi_sum.data) v *= scale;
    for (auto& v : theta_sum.data) v *= scale;

    out.model.hyper = hyper;
    out.model.schedule = schedule;
    out.model.phi = std::move(phi_sum);
    out.model.theta = std::move(theta_sum);
    out.model.training_seed = seed;
    return out;
}

inline TopicModel run_gibbs(const std::vector<TokenizedDoc>& corpus, const Hyperparams& hyper,
                            const ResolvedSeeds& seeds, const GibbsSchedule& schedule, std::uint64_t seed) {
    return run_chain(corpus, hyper, seeds, schedule, seed).model;
}

/// run_gibbs on a vocabulary-bound corpus; records the fingerprint and seeds.
inline TopicModel fit_topic_model(const std::vector<TokenizedDoc>& corpus, const Vocabulary& vocab,
                                  const Hyperparams& hyper, const SeedSpec& seeds, const GibbsSchedule& schedule,
                                  std::uint64_t seed, std::vector<std::string>* warnings = nullptr) {
    const ResolvedSeeds resolved = resolve_seeds(seeds, vocab, hyper.num_topics);
    if (warnings) warnings->insert(warnings->end(), resolved.warnings.begin(), resolved.warnings.end());
    TopicModel model = run_gibbs(corpus, hyper, resolved, schedule, seed);
    model.vocab_fingerprint = vocab.fingerprint();
    model.seeds = seeds;
    return model;
}

/// Fold-in: Gibbs over one unseen document with phi held fixed. Returns the
/// mean of the smoothed theta over the second half of the sweeps. An empty
/// document gets the uniform prior.
inline std::vector<double> infer_theta(const TopicModel& model, const TokenizedDoc& doc, std::size_t iters,
                                       std::uint64_t seed) {
    const std::size_t K = model.num_topics();
    const double alpha = model.hyper.alpha;
    if (doc.token_ids.empty()) return std::vector<double>(K, 1.0 / static_cast<double>(K));
    for (auto w : doc.token_ids) {
        if (w >= model.vocab_size()) throw ArgumentError("token id outside the model's vocabulary");
    }
    Rng rng = make_rng(seed);
    const std::size_t n = doc.token_ids.size();
    std::vector<std::uint32_t> z(n);
    std::vector<std::uint32_t> nd(K, 0);
    for (auto& zi : z) {
        zi = static_cast<std::uint32_t>(uniform_index(rng, K));
        ++nd[zi];
    }
    const double denom = static_cast<double>(n) + static_cast<double>(K) * alpha;
    std::vector<double> sum(K, 0.0);
    std::size_t samples = 0;
    auto accumulate = [&] {
        for (std::size_t k = 0; k < K; ++k) sum[k] += (nd[k] + alpha) / denom;
        ++samples;
    };
    std::vector<double> cumulative(K);
    for (std::size_t it = 1; it <= iters; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto w = doc.token_ids[i];
            --nd[z[i]];
            double total = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                total += (nd[k] + alpha) * model.phi(k, w);
                cumulative[k] = total;
            }
            const double u = uniform01(rng) * total;
            std::uint32_t k = 0;
            while (k + 1 < K && cumulative[k] <= u) ++k;
            z[i] = k;
            ++nd[k];
        }
        if (it > iters / 2) accumulate();
    }
    if (samples == 0) accumulate();
    for (auto& v : sum) v /= static_cast<double>(samples);
    return sum;
}

/// exp(-sum_d sum_i log sum_k theta_dk phi_k,w_di / sum_d N_d) for given thetas.
/// Zero-length documents contribute nothing.
inline double perplexity_given(const Matrix& phi, const std::vector<std::vector<double>>& thetas,
                               const std::vector<TokenizedDoc>& heldout) {
    if (heldout.empty()) throw ArgumentError("perplexity needs at least one held-out document");
    if (thetas.size() != heldout.size()) throw ArgumentError("one theta per held-out document required");
    double log_likelihood = 0.0;
    std::size_t tokens = 0;
    for (std::size_t d = 0; d < heldout.size(); ++d) {
        const auto& theta = thetas[d];
        if (theta.size() != phi.rows) throw ArgumentError("theta length differs from the number of topics");
        for (auto w : heldout[d].token_ids) {
            if (w >= phi.cols) throw ArgumentError("held-out token outside the model's vocabulary");
            double p = 0.0;
            for (std::size_t k = 0; k < phi.rows; ++k) p += theta[k] * phi(k, w);
            log_likelihood += std::log(p);
            ++tokens;
        }
    }
    if (tokens == 0) throw ArgumentError("held-out documents contain no tokens");
    return std::exp(-log_likelihood / static_cast<double>(tokens));
}

/// Held-out perplexity by document completion: theta_d is folded in on the
/// even-position tokens of document d (seed derive_seed(seed, d)) and the
/// odd-position tokens are scored. Folding in on the scored tokens themselves
/// rewards larger K regardless of fit.
inline double perplexity(const TopicModel& model, const std::vector<TokenizedDoc>& heldout, std::size_t fold_in_iters,
                         std::uint64_t seed) {
    if (heldout.empty()) throw ArgumentError("perplexity needs at least one held-out document");
    std::vector<std::vector<double>> thetas;
    std::vector<TokenizedDoc> scored(heldout.size());
    thetas.reserve(heldout.size());
    for (std::size_t d = 0; d < heldout.size(); ++d) {
        TokenizedDoc observed;
        const auto& ids = heldout[d].token_ids;
        for (std::size_t i = 0; i < ids.size(); ++i) (i % 2 == 0 ? observed : scored[d]).token_ids.push_back(ids[i]);
        thetas.push_back(infer_theta(model, observed, fold_in_iters, derive_seed(seed, d)));
    }
    return perplexity_given(model.phi, thetas, scored);
}

/// Prior settings shared by every candidate K.
struct TopicSettings {
    std::optional<double> alpha;
    double beta = 0.01;
    double seed_boost = 50.0;

    [[nodiscard]] Hyperparams for_k(std::size_t k) const {
        Hyperparams h = Hyperparams::defaults(k);
        if (alpha) h.alpha = *alpha;
        h.beta = beta;
        h.seed_boost = seed_boost;
        return h;
    }
};

struct KSelection {
    std::size_t chosen_k = 0;
    struct Row {
        std::size_t k;
        std::optional<double> perplexity; // empty when nothing was compared
    };
    std::vector<Row> table;
};

struct KSelectionOptions {
    double heldout_fraction = 0.2;
    GibbsSchedule schedule;
    TopicSettings settings;
    std::size_t fold_in_iters = 100;
    std::size_t threads = 1;
};

/// Fits one model per candidate on a seeded training split and returns the K
/// with the lowest held-out perplexity. Perplexities within a relative 1e-9 of
/// each other count as tied and the smaller K wins. Seed lists for topics
/// beyond a candidate's K are dropped for that candidate.
inline KSelection select_k(const std::vector<TokenizedDoc>& corpus, std::vector<std::size_t> candidates,
                           const ResolvedSeeds& seeds, const KSelectionOptions& opt, std::uint64_t seed) {
    if (candidates.empty()) throw ArgumentError("select_k needs at least one candidate");
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    if (candidates.front() < 1) throw ArgumentError("candidate K must be ≥ 1");
    KSelection out;
    if (candidates.size() == 1) {
        out.chosen_k = candidates.front();
        out.table.push_back({candidates.front(), std::nullopt});
        return out;
    }
    if (corpus.size() < 2) throw ArgumentError("select_k needs at least two documents for a held-out split");
    if (!(opt.heldout_fraction > 0.0 && opt.heldout_fraction < 1.0)) {
        throw ArgumentError("heldout_fraction must lie in (0, 1)");
    }

    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng(derive_seed(seed, 0));
    shuffle(std::span<std::size_t>(order), rng);
    auto n_held = static_cast<std::size_t>(std::llround(opt.heldout_fraction * static_cast<double>(corpus.size())));
    n_held = std::clamp<std::size_t>(n_held, 1, corpus.size() - 1);
    std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_held));
    std::sort(order.begin() + static_cast<std::ptrdiff_t>(n_held), order.end());
    std::vector<TokenizedDoc> heldout;
    std::vector<TokenizedDoc> train;
    for (std::size_t i = 0; i < order.size(); ++i) (i < n_held ? heldout : train).push_back(corpus[order[i]]);

    std::vector<double> scores(candidates.size());
    parallel_for(candidates.size(), opt.threads, [&](std::size_t i) {
        const std::size_t k = candidates[i];
        ResolvedSeeds local = seeds;
        for (int& t : local.topic_of_word) {
            if (t >= static_cast<int>(k)) t = -1;
        }
        const TopicModel model = run_gibbs(train, opt.settings.for_k(k), local, opt.schedule, derive_seed(seed, 1 + i));
        scores[i] = perplexity(model, heldout, opt.fold_in_iters, derive_seed(seed, 1001 + i));
    });

    std::size_t best = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        out.table.push_back({candidates[i], scores[i]});
        const bool tied = std::abs(scores[i] - scores[best]) <= 1e-9 * std::max(scores[i], scores[best]);
        if (!tied && scores[i] < scores[best]) best = i;
    }
    out.chosen_k = candidates[best];
    return out;
}

/// The n terms with the largest phi_kw, ties broken lexicographically.
inline std::vector<std::string> top_words(const TopicModel& model, std::size_t k, std::size_t n,
                                          const Vocabulary& vocab) {
    if (k >= model.num_topics()) throw ArgumentError("topic index " + std::to_string(k) + " out of range");
    if (vocab.size() != model.vocab_size()) throw ArgumentError("vocabulary size differs from the model");
    if (n > vocab.size()) throw ArgumentError("requested more top words than vocabulary terms");
    std::vector<std::uint32_t> ids(vocab.size());
    std::iota(ids.begin(), ids.end(), 0U);
    const auto row = model.phi.row(k);
    std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n), ids.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                          if (row[a] != row[b]) return row[a] > row[b];
                          return vocab.term(a) < vocab.term(b);
                      });
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(vocab.term(ids[i]));
    return out;
}

// Serialization ------------------------------------------------------------

inline nlohmann::ordered_json matrix_to_json(const Matrix& m) {
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < m.rows; ++r) {
        const auto row = m.row(r);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j, std::size_t cols_hint = 0) {
    if (!j.is_array()) throw SchemaError("matrix must be an array of rows");
    Matrix m(j.size(), j.empty() ? cols_hint : j.front().size());
    for (std::size_t r = 0; r < m.rows; ++r) {
        const auto& row = j[r];
        if (!row.is_array() || row.size() != m.cols) throw SchemaError("matrix rows must have equal length");
        for (std::size_t c = 0; c < m.cols; ++c) m(r, c) = row[c].get<double>();
    }
    return m;
}

inline nlohmann::ordered_json to_json(const TopicModel& m) {
    nlohmann::ordered_json j;
    j["format"] = "crowdtopic.topic_model";
    j["version"] = 1;
    j["hyperparameters"] = {{"num_topics", m.hyper.num_topics},
                            {"alpha", m.hyper.alpha},
                            {"beta", m.hyper.beta},
                            {"seed_boost", m.hyper.seed_boost}};
    j["schedule"] = {{"iters", m.schedule.iters}, {"burnin", m.schedule.burnin}, {"sample_lag", m.schedule.sample_lag}};
    j["training_seed"] = m.training_seed;
    j["vocab_fingerprint"] = m.vocab_fingerprint;
    j["vocab_size"] = m.vocab_size();
    j["seed_terms"] = m.seeds.topics;
    j["phi"] = matrix_to_json(m.phi);
    j["theta"] = matrix_to_json(m.theta);
    return j;
}

inline TopicModel topic_model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "crowdtopic.topic_model") throw SchemaError("not a topic model file");
        TopicModel m;
        const auto& h = j.at("hyperparameters");
        m.hyper = {h.at("num_topics").get<std::size_t>(), h.at("alpha").get<double>(), h.at("beta").get<double>(),
                   h.at("seed_boost").get<double>()};
        const auto& s = j.at("schedule");
        m.schedule = {s.at("iters").get<std::size_t>(), s.at("burnin").get<std::size_t>(),
                      s.at("sample_lag").get<std::size_t>()};
        m.training_seed = j.at("training_seed").get<std::uint64_t>();
        m.vocab_fingerprint = j.at("vocab_fingerprint").get<std::string>();
        m.seeds.topics = j.at("seed_terms").get<std::vector<std::vector<std::string>>>();
        m.phi = matrix_from_json(j.at("phi"));
        m.theta = matrix_from_json(j.at("theta"), m.hyper.num_topics);
        if (m.phi.rows != m.hyper.num_topics || m.phi.cols != j.at("vocab_size").get<std::size_t>() ||
            m.theta.cols != m.hyper.num_topics) {
            throw SchemaError("topic model matrices disagree with the recorded shape");
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed topic model: ") + e.what());
    }
}

inline void save_topic_model(const std::filesystem::path& path, const TopicModel& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeFailure("cannot write '" + path.string() + "'");
    out << to_json(m).dump(1) << '\n';
}

/// Loads a model and checks it was trained against `vocab`.
inline TopicModel load_topic_model(const std::filesystem::path& path, const Vocabulary& vocab) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open topic model '" + path.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    TopicModel m = topic_model_from_json(j);
    if (m.vocab_fingerprint != vocab.fingerprint()) {
        throw FingerprintMismatch(path.string() + ": model vocabulary fingerprint " + m.vocab_fingerprint +
                                  " does not match vocabulary " + vocab.fingerprint());
    }
    return m;
}

} // namespace crowdtopic::topics
