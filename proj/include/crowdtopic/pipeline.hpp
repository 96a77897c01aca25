#pragma once

// Stage orchestration behind the command-line tool. Every stage reads and
// writes plain files in one output directory:
//
//   topics    split.json, vocab_<channel>.txt, topic_model_<channel>.json,
//             topics.txt, topics_summary.json
//   train     features_train.csv, features_test.csv, standardizer.json,
//             forest.json, train_summary.json
//   eval      report.json, report.txt
//
// One master seed governs the run. Sub-seeds are derive_seed(master, i):
//   1 split, 2 campaign-text model, 3 incentive-text model, 4 fold-in, 5 forest.
// Fold-in of campaign j uses derive_seed(fold-in seed, 2j + channel).

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "crowdtopic/corpus.hpp"
#include "crowdtopic/error.hpp"
#include "crowdtopic/eval.hpp"
#include "crowdtopic/features.hpp"
#include "crowdtopic/forest.hpp"
#include "crowdtopic/parallel.hpp"
#include "crowdtopic/random.hpp"
#include "crowdtopic/seed_terms.hpp"
#include "crowdtopic/synth.hpp"
#include "crowdtopic/textprep.hpp"
#include "crowdtopic/topicmodel.hpp"

namespace crowdtopic::pipeline {

namespace fs = std::filesystem;
using textprep::Channel;

enum class NounMode { pass_through, lexicon };

struct ChannelConfig {
    std::size_t k = 2;                        // 0 disables the channel
    std::vector<std::size_t> k_candidates;    // non-empty: choose K by held-out perplexity
    topics::TopicSettings settings;
    topics::GibbsSchedule schedule;
    topics::SeedSpec seeds;
    bool use_seeds = true;
};

struct RunConfig {
    fs::path input;
    fs::path out_dir = "out";
    std::uint64_t seed = 7;
    std::size_t threads = 1;

    NounMode noun_mode = NounMode::pass_through;
    std::optional<fs::path> noun_lexicon_file;
    std::optional<fs::path> stopwords_file;
    std::size_t min_df = 2;
    double max_df_ratio = 0.95;

    std::optional<std::size_t> train_count;
    double train_fraction = 250.0 / 410.0;

    ChannelConfig campaign = [] {
        ChannelConfig c;
        c.seeds = topics::default_campaign_seeds();
        return c;
    }();
    ChannelConfig incentive = [] {
        ChannelConfig c;
        c.seeds = topics::default_incentive_seeds();
        return c;
    }();
    std::size_t fold_in_iters = 100;
    std::size_t top_n = 10;

    features::NumericOptions numeric;
    forest::ForestParams forest;

    [[nodiscard]] const ChannelConfig& channel(Channel c) const {
        return c == Channel::campaign_text ? campaign : incentive;
    }

    /// Numeric constraints of every module, checked before any work.
    void validate() const {
        if (min_df < 1) throw ArgumentError("min_df must be ≥ 1");
        if (!(max_df_ratio > 0.0 && max_df_ratio <= 1.0)) throw ArgumentError("max_df_ratio must lie in (0, 1]");
        if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ArgumentError("train_fraction must lie in (0, 1)");
        if (fold_in_iters < 1) throw ArgumentError("fold_in_iters must be ≥ 1");
        if (top_n < 1) throw ArgumentError("top_n must be ≥ 1");
        if (threads < 1) throw ArgumentError("threads must be ≥ 1");
        for (Channel ch : {Channel::campaign_text, Channel::incentive_text}) {
            const auto& c = channel(ch);
            const std::string name(textprep::channel_name(ch));
            c.schedule.validate();
            if (c.k == 0 && !c.k_candidates.empty()) throw ArgumentError(name + ": K candidates given for a disabled channel");
            for (auto k : c.k_candidates) {
                if (k < 1) throw ArgumentError(name + ": candidate K must be ≥ 1");
            }
            if (c.k > 0) c.settings.for_k(c.k).validate();
        }
        if (campaign.k == 0) throw ArgumentError("the campaign-text channel cannot be disabled");
        forest.validate();
    }

    /// Training-set size for n records; throws when it leaves either side empty.
    [[nodiscard]] std::size_t resolve_train_count(std::size_t n) const {
        const std::size_t count =
            train_count ? *train_count
                        : static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
        if (count == 0 || count >= n) {
            throw ArgumentError("train_count " + std::to_string(count) + " must satisfy 0 < train_count < " +
                                std::to_string(n) + " (records in input)");
        }
        return count;
    }
};

inline nlohmann::ordered_json to_json(const ChannelConfig& c) {
    nlohmann::ordered_json j;
    j["k"] = c.k;
    j["k_candidates"] = c.k_candidates;
    if (c.settings.alpha) {
        j["alpha"] = *c.settings.alpha;
    } else {
        j["alpha"] = topics::Hyperparams::defaults(1).alpha;
    }
    j["beta"] = c.settings.beta;
    j["seed_boost"] = c.settings.seed_boost;
    j["schedule"] = {{"iters", c.schedule.iters}, {"burnin", c.schedule.burnin}, {"sample_lag", c.schedule.sample_lag}};
    j["use_seeds"] = c.use_seeds;
    j["seed_terms"] = c.seeds.topics;
    return j;
}

/// Everything that influences results. The output directory and thread count
/// are left out: neither changes any artifact.
inline nlohmann::ordered_json to_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["input"] = c.input.generic_string();
    j["seed"] = c.seed;
    j["preprocessing"] = {
        {"noun_mode", c.noun_mode == NounMode::lexicon ? "lexicon" : "pass-through"},
        {"noun_lexicon_file", c.noun_lexicon_file ? nlohmann::ordered_json(c.noun_lexicon_file->generic_string())
                                                  : nlohmann::ordered_json(nullptr)},
        {"stopwords_file", c.stopwords_file ? nlohmann::ordered_json(c.stopwords_file->generic_string())
                                            : nlohmann::ordered_json(nullptr)},
        {"min_df", c.min_df},
        {"max_df_ratio", c.max_df_ratio}};
    j["split"] = {{"train_count", c.train_count ? nlohmann::ordered_json(*c.train_count) : nlohmann::ordered_json(nullptr)},
                  {"train_fraction", c.train_fraction},
                  {"seed", derive_seed(c.seed, 1)}};
    j["campaign_text"] = to_json(c.campaign);
    j["incentive_text"] = to_json(c.incentive);
    j["fold_in_iters"] = c.fold_in_iters;
    j["top_n"] = c.top_n;
    j["include_raised_amount"] = c.numeric.include_raised_amount;
    auto fp = c.forest;
    fp.seed = derive_seed(c.seed, 5);
    j["forest"] = forest::to_json(fp);
    return j;
}

// Helpers -------------------------------------------------------------------

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeFailure("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw RuntimeFailure("write failed for '" + path.string() + "'");
}

inline void write_json(const fs::path& path, const nlohmann::ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

inline nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

inline void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw RuntimeFailure("cannot create output directory '" + dir.string() + "': " + ec.message());
}

/// Runs a stage body, prefixing any error message with the stage name while
/// keeping its exit-code class.
template <class Fn>
auto run_stage(std::string_view stage, Fn&& body) -> decltype(body()) {
    const std::string prefix = std::string(stage) + ": ";
    try {
        return body();
    } catch (const FingerprintMismatch& e) {
        throw FingerprintMismatch(prefix + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(prefix + e.what());
    } catch (const RuntimeFailure& e) {
        throw RuntimeFailure(prefix + e.what());
    } catch (const std::exception& e) {
        throw RuntimeFailure(prefix + e.what());
    }
}

inline textprep::LexiconConfig lexicon_config(const RunConfig& cfg) {
    textprep::LexiconConfig lex;
    lex.stopwords = cfg.stopwords_file ? textprep::load_term_file(*cfg.stopwords_file) : textprep::default_stopwords();
    if (cfg.noun_lexicon_file) {
        lex.noun_lexicon = textprep::load_term_file(*cfg.noun_lexicon_file);
    } else if (cfg.noun_mode == NounMode::lexicon) {
        lex.noun_lexicon = textprep::default_noun_lexicon();
    }
    lex.min_df = cfg.min_df;
    lex.max_df_ratio = cfg.max_df_ratio;
    lex.validate();
    return lex;
}

inline const std::string& channel_text(const corpus::Campaign& c, Channel ch) {
    return ch == Channel::campaign_text ? c.campaign_text : c.incentive_text;
}

inline std::vector<Channel> active_channels(const RunConfig& cfg) {
    std::vector<Channel> out{Channel::campaign_text};
    if (cfg.incentive.k > 0) out.push_back(Channel::incentive_text);
    return out;
}

inline fs::path vocab_path(const fs::path& dir, Channel ch) {
    return dir / ("vocab_" + std::string(textprep::channel_name(ch)) + ".txt");
}
inline fs::path model_path(const fs::path& dir, Channel ch) {
    return dir / ("topic_model_" + std::string(textprep::channel_name(ch)) + ".json");
}

inline corpus::CampaignSet load_validated_input(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.input.empty()) throw ArgumentError("no input file given");
    return corpus::load_corpus(cfg.input);
}

inline nlohmann::ordered_json split_json(const corpus::Split& s) {
    nlohmann::ordered_json j;
    j["format"] = "crowdtopic.split";
    j["version"] = 1;
    auto ids = [](const corpus::CampaignSet& set) {
        std::vector<std::string> out;
        for (const auto& r : set.records) out.push_back(r.campaign.id);
        return out;
    };
    j["train"] = ids(s.train);
    j["test"] = ids(s.test);
    return j;
}

/// Rebuilds a split of `set` from the id lists in split.json.
inline corpus::Split load_split(const fs::path& path, const corpus::CampaignSet& set) {
    const auto j = read_json(path);
    std::map<std::string, const corpus::LabeledCampaign*> by_id;
    for (const auto& r : set.records) by_id.emplace(r.campaign.id, &r);
    corpus::Split s;
    s.train.source = set.source + "#train";
    s.test.source = set.source + "#test";
    try {
        for (const char* part : {"train", "test"}) {
            auto& dest = std::string_view(part) == "train" ? s.train : s.test;
            for (const auto& id : j.at(part)) {
                auto it = by_id.find(id.get<std::string>());
                if (it == by_id.end()) {
                    throw SchemaError(path.string() + ": id '" + id.get<std::string>() + "' not in the input");
                }
                dest.records.push_back(*it->second);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
    return s;
}

// Stages ----------------------------------------------------------------------

struct ChannelResult {
    Channel channel;
    textprep::Vocabulary vocab;
    topics::TopicModel model;
    std::optional<topics::KSelection> selection;
    std::vector<std::string> warnings;
};

struct TopicsResult {
    corpus::Split split;
    std::vector<ChannelResult> channels;
};

inline std::vector<eval::TopicSummary> topic_summaries(const std::vector<ChannelResult>& channels, std::size_t top_n) {
    std::vector<eval::TopicSummary> out;
    for (const auto& c : channels) {
        eval::TopicSummary s{std::string(textprep::channel_name(c.channel)), {}};
        const std::size_t n = std::min(top_n, c.vocab.size());
        for (std::size_t k = 0; k < c.model.num_topics(); ++k) s.top_words.push_back(topics::top_words(c.model, k, n, c.vocab));
        out.push_back(std::move(s));
    }
    return out;
}

inline std::string render_topics(const std::vector<eval::TopicSummary>& summaries) {
    std::string out;
    for (const auto& s : summaries) {
        out += "Channel " + s.channel + " (K=" + std::to_string(s.top_words.size()) + ")\n";
        for (std::size_t k = 0; k < s.top_words.size(); ++k) {
            out += "  Topic " + std::to_string(k + 1) + ":";
            for (const auto& w : s.top_words[k]) out += " " + w;
            out += "\n";
        }
    }
    return out;
}

inline ChannelResult fit_channel(const RunConfig& cfg, const corpus::CampaignSet& train,
                                 const textprep::LexiconConfig& lex, Channel ch) {
    const ChannelConfig& cc = cfg.channel(ch);
    const std::uint64_t model_seed = derive_seed(cfg.seed, ch == Channel::campaign_text ? 2 : 3);
    std::vector<std::vector<std::string>> words;
    words.reserve(train.size());
    for (const auto& r : train.records) words.push_back(textprep::preprocess(channel_text(r.campaign, ch), lex));

    ChannelResult out{ch, textprep::build_vocabulary(words, lex), {}, std::nullopt, {}};
    std::vector<textprep::TokenizedDoc> docs;
    docs.reserve(words.size());
    for (std::size_t i = 0; i < words.size(); ++i) {
        docs.push_back(textprep::encode(words[i], out.vocab, train.records[i].campaign.id, ch));
    }

    const topics::SeedSpec seeds = cc.use_seeds ? cc.seeds : topics::SeedSpec{};
    std::size_t k = cc.k;
    if (!cc.k_candidates.empty()) {
        std::size_t k_max = seeds.topics.size();
        for (auto c : cc.k_candidates) k_max = std::max(k_max, c);
        const auto resolved = topics::resolve_seeds(seeds, out.vocab, k_max);
        topics::KSelectionOptions opt;
        opt.schedule = cc.schedule;
        opt.settings = cc.settings;
        opt.fold_in_iters = cfg.fold_in_iters;
        opt.threads = cfg.threads;
        out.selection = topics::select_k(docs, cc.k_candidates, resolved, opt, derive_seed(model_seed, 1));
        k = out.selection->chosen_k;
    }
    out.model = topics::fit_topic_model(docs, out.vocab, cc.settings.for_k(k), seeds.truncated(k), cc.schedule,
                                        model_seed, &out.warnings);
    return out;
}

inline nlohmann::ordered_json topics_summary_json(const TopicsResult& r, std::size_t top_n) {
    nlohmann::ordered_json j;
    j["format"] = "crowdtopic.topics_summary";
    j["version"] = 1;
    j["n_train"] = r.split.train.size();
    j["n_test"] = r.split.test.size();
    const auto summaries = topic_summaries(r.channels, top_n);
    auto channels = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < r.channels.size(); ++i) {
        const auto& c = r.channels[i];
        nlohmann::ordered_json jc;
        jc["channel"] = std::string(textprep::channel_name(c.channel));
        jc["num_topics"] = c.model.num_topics();
        jc["vocab_size"] = c.vocab.size();
        jc["vocab_fingerprint"] = c.vocab.fingerprint();
        jc["seed_warnings"] = c.warnings;
        if (c.selection) {
            auto table = nlohmann::ordered_json::array();
            for (const auto& row : c.selection->table) {
                table.push_back({{"k", row.k},
                                 {"perplexity", row.perplexity ? nlohmann::ordered_json(*row.perplexity)
                                                               : nlohmann::ordered_json(nullptr)}});
            }
            jc["k_selection"] = {{"chosen_k", c.selection->chosen_k}, {"table", std::move(table)}};
        }
        jc["top_words"] = summaries[i].top_words;
        channels.push_back(std::move(jc));
    }
    j["channels"] = std::move(channels);
    return j;
}

/// Splits the input, builds per-channel vocabularies on the training split and
/// fits one seeded topic model per active channel.
inline TopicsResult run_topics(const RunConfig& cfg) {
    return run_stage("topics", [&] {
        const corpus::CampaignSet set = load_validated_input(cfg);
        const std::size_t train_count = cfg.resolve_train_count(set.size());
        const textprep::LexiconConfig lex = lexicon_config(cfg);
        ensure_dir(cfg.out_dir);

        TopicsResult r;
        r.split = corpus::split_train_test(set, train_count, derive_seed(cfg.seed, 1));
        const auto channels = active_channels(cfg);
        r.channels.resize(channels.size());
        parallel_for(channels.size(), std::min<std::size_t>(cfg.threads, channels.size()), [&](std::size_t i) {
            r.channels[i] = fit_channel(cfg, r.split.train, lex, channels[i]);
        });

        write_json(cfg.out_dir / "run_config.json", to_json(cfg));
        write_json(cfg.out_dir / "split.json", split_json(r.split));
        for (const auto& c : r.channels) {
            textprep::save_vocabulary(vocab_path(cfg.out_dir, c.channel), c.vocab);
            topics::save_topic_model(model_path(cfg.out_dir, c.channel), c.model);
        }
        write_text(cfg.out_dir / "topics.txt", render_topics(topic_summaries(r.channels, cfg.top_n)));
        write_json(cfg.out_dir / "topics_summary.json", topics_summary_json(r, cfg.top_n));
        return r;
    });
}

/// Reloads the topics stage's artifacts, checking model/vocabulary fingerprints.
inline std::vector<ChannelResult> load_channels(const RunConfig& cfg) {
    std::vector<ChannelResult> out;
    for (Channel ch : active_channels(cfg)) {
        ChannelResult c{ch, textprep::load_vocabulary(vocab_path(cfg.out_dir, ch)), {}, std::nullopt, {}};
        c.model = topics::load_topic_model(model_path(cfg.out_dir, ch), c.vocab);
        out.push_back(std::move(c));
    }
    return out;
}

struct FeatureSets {
    features::FeatureMatrix train;
    features::FeatureMatrix test;
};

/// Fused features for both splits. Topic proportions of every campaign,
/// training ones included, come from fold-in against the fitted models.
inline FeatureSets build_features(const RunConfig& cfg, const corpus::Split& split,
                                  const std::vector<ChannelResult>& channels) {
    const textprep::LexiconConfig lex = lexicon_config(cfg);
    std::size_t k_campaign = 0;
    std::size_t k_incentive = 0;
    for (const auto& c : channels) (c.channel == Channel::campaign_text ? k_campaign : k_incentive) = c.model.num_topics();
    const features::FeatureLayout layout(k_campaign, k_incentive, features::numeric_slot_names(cfg.numeric));

    std::vector<const corpus::LabeledCampaign*> all;
    for (const auto& r : split.train.records) all.push_back(&r);
    for (const auto& r : split.test.records) all.push_back(&r);

    const std::uint64_t fold_seed = derive_seed(cfg.seed, 4);
    std::vector<features::FeatureVector> vectors(all.size());
    parallel_for(all.size(), cfg.threads, [&](std::size_t j) {
        const auto& c = all[j]->campaign;
        std::vector<double> theta[2];
        for (const auto& ch : channels) {
            const int slot = ch.channel == Channel::campaign_text ? 0 : 1;
            const auto doc = textprep::encode(textprep::preprocess(channel_text(c, ch.channel), lex), ch.vocab, c.id,
                                              ch.channel);
            theta[slot] = topics::infer_theta(ch.model, doc, cfg.fold_in_iters,
                                              derive_seed(fold_seed, 2 * j + static_cast<std::size_t>(slot)));
        }
        vectors[j] = features::fuse(theta[0], theta[1], features::numeric_features(c, cfg.numeric), layout);
    });

    FeatureSets out;
    out.train.layout = layout;
    out.test.layout = layout;
    for (std::size_t j = 0; j < all.size(); ++j) {
        auto& dest = j < split.train.size() ? out.train : out.test;
        dest.add(std::move(vectors[j]), all[j]->label, all[j]->campaign.id);
    }
    return out;
}

struct TrainResult {
    FeatureSets standardized;
    features::Standardizer standardizer;
    forest::RandomForest forest;
    double train_accuracy = 0.0;
};

inline TrainResult train_from(const RunConfig& cfg, const corpus::Split& split,
                              const std::vector<ChannelResult>& channels) {
    const FeatureSets raw = build_features(cfg, split, channels);
    TrainResult r;
    r.standardizer = features::fit_standardizer(raw.train);
    r.standardized.train = features::apply_standardizer(raw.train, r.standardizer);
    r.standardized.test = features::apply_standardizer(raw.test, r.standardizer);
    forest::ForestParams params = cfg.forest;
    params.seed = derive_seed(cfg.seed, 5);
    r.forest = forest::train_forest(r.standardized.train, params, cfg.threads);
    const auto predicted = forest::predict_all(r.forest, r.standardized.train);
    r.train_accuracy = eval::metrics(eval::confusion(r.standardized.train.labels, predicted)).accuracy;

    features::save_csv(cfg.out_dir / "features_train.csv", r.standardized.train);
    features::save_csv(cfg.out_dir / "features_test.csv", r.standardized.test);
    write_json(cfg.out_dir / "standardizer.json", features::to_json(r.standardizer));
    forest::save_forest(cfg.out_dir / "forest.json", r.forest);
    nlohmann::ordered_json summary;
    summary["format"] = "crowdtopic.train_summary";
    summary["version"] = 1;
    summary["n_train"] = r.standardized.train.size();
    summary["n_test"] = r.standardized.test.size();
    summary["slots"] = r.standardized.train.layout.slot_names();
    summary["layout_fingerprint"] = r.standardized.train.layout.fingerprint();
    summary["n_trees"] = r.forest.trees.size();
    summary["train_accuracy"] = r.train_accuracy;
    write_json(cfg.out_dir / "train_summary.json", summary);
    return r;
}

/// Builds standardized fused features from the topics stage's artifacts and
/// trains the forest.
inline TrainResult run_train(const RunConfig& cfg) {
    return run_stage("train", [&] {
        const corpus::CampaignSet set = load_validated_input(cfg);
        const corpus::Split split = load_split(cfg.out_dir / "split.json", set);
        return train_from(cfg, split, load_channels(cfg));
    });
}

inline eval::MetricsReport eval_from(const RunConfig& cfg, const forest::RandomForest& f,
                                     const features::FeatureMatrix& train, const features::FeatureMatrix& test,
                                     const std::vector<ChannelResult>& channels) {
    if (!(train.layout == test.layout)) throw LayoutError("training and test feature layouts differ");
    auto report = eval::evaluate_run(f, test, train.labels, topic_summaries(channels, cfg.top_n), to_json(cfg));
    eval::save_report(cfg.out_dir, report);
    return report;
}

/// Scores the saved forest on the saved test features and writes the report.
inline eval::MetricsReport run_eval(const RunConfig& cfg) {
    return run_stage("eval", [&] {
        cfg.validate();
        const auto f = forest::load_forest(cfg.out_dir / "forest.json");
        const auto train = features::load_csv(cfg.out_dir / "features_train.csv");
        const auto test = features::load_csv(cfg.out_dir / "features_test.csv");
        return eval_from(cfg, f, train, test, load_channels(cfg));
    });
}

/// topics, train and eval in one pass.
inline eval::MetricsReport run_pipeline(const RunConfig& cfg) {
    const TopicsResult topics_result = run_topics(cfg);
    const TrainResult trained =
        run_stage("train", [&] { return train_from(cfg, topics_result.split, topics_result.channels); });
    return run_stage("eval", [&] {
        return eval_from(cfg, trained.forest, trained.standardized.train, trained.standardized.test,
                         topics_result.channels);
    });
}

// Synthetic fixtures --------------------------------------------------------

/// Writes campaigns.jsonl and truth.json into `out_dir`.
inline synth::CampaignSynthesis run_synth(const synth::CampaignSynthSpec& spec, const fs::path& out_dir) {
    return run_stage("synth", [&] {
        spec.validate();
        ensure_dir(out_dir);
        auto s = synth::generate_campaigns(spec);
        corpus::save_corpus(out_dir / "campaigns.jsonl", s.set);
        write_json(out_dir / "truth.json", synth::truth_json(s));
        return s;
    });
}

} // namespace crowdtopic::pipeline
