// crowdtopic: synthetic fixtures, seeded topic models, forest training and
// evaluation from the command line.
//
// Exit codes: 0 success, 1 validation error, 2 runtime failure.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "crowdtopic/crowdtopic.hpp"

namespace {

using namespace crowdtopic;
using pipeline::RunConfig;

struct Flags {
    RunConfig cfg;
    std::vector<std::size_t> k_candidates_campaign;
    std::vector<std::size_t> k_candidates_incentive;
    double alpha = 0.0;
    std::string noun_mode = "pass-through";
    std::string noun_lexicon;
    std::string stopwords;
    std::size_t train_count = 0;
    std::string features_per_split = "sqrt";
    bool no_seeds = false;
    bool no_bootstrap = false;

    synth::CampaignSynthSpec synth;
};

void add_run_options(CLI::App* sub, Flags& f) {
    auto& c = f.cfg;
    sub->add_option("--input,-i", c.input, "Campaign records, one JSON object per line")->required();

    sub->add_option("--k-campaign", c.campaign.k, "Topics for campaign text")->capture_default_str();
    sub->add_option("--k-incentive", c.incentive.k, "Topics for incentive text (0 disables the channel)")
        ->capture_default_str();
    sub->add_option("--k-candidates", f.k_candidates_campaign, "Candidate K list for campaign text, e.g. 1,2,4")
        ->delimiter(',');
    sub->add_option("--k-candidates-incentive", f.k_candidates_incentive, "Candidate K list for incentive text")
        ->delimiter(',');
    sub->add_option("--alpha", f.alpha, "Document-topic prior (default 1.0)");
    sub->add_option("--beta", c.campaign.settings.beta, "Topic-word prior")->capture_default_str();
    sub->add_option("--seed-boost", c.campaign.settings.seed_boost, "Prior multiplier for seed words")
        ->capture_default_str();
    sub->add_option("--iters", c.campaign.schedule.iters, "Gibbs sweeps")->capture_default_str();
    sub->add_option("--burnin", c.campaign.schedule.burnin, "Sweeps before sampling starts")->capture_default_str();
    sub->add_option("--sample-lag", c.campaign.schedule.sample_lag, "Sweeps between samples")->capture_default_str();
    sub->add_flag("--no-seeds", f.no_seeds, "Plain LDA: ignore the seed term lists");
    sub->add_option("--fold-in-iters", c.fold_in_iters, "Fold-in sweeps per document")->capture_default_str();
    sub->add_option("--top-n", c.top_n, "Top words listed per topic")->capture_default_str();

    sub->add_option("--noun-mode", f.noun_mode, "pass-through or lexicon")
        ->check(CLI::IsMember({"pass-through", "lexicon"}))
        ->capture_default_str();
    sub->add_option("--noun-lexicon", f.noun_lexicon, "Noun lexicon file (implies lexicon mode)");
    sub->add_option("--stopwords", f.stopwords, "Stop-word file replacing the built-in list");
    sub->add_option("--min-df", c.min_df, "Minimum document frequency")->capture_default_str();
    sub->add_option("--max-df-ratio", c.max_df_ratio, "Maximum document-frequency ratio")->capture_default_str();

    sub->add_option("--train-count", f.train_count, "Training records (overrides --train-fraction)");
    sub->add_option("--train-fraction", c.train_fraction, "Training share when no count is given")
        ->capture_default_str();
    sub->add_flag("--include-raised-amount", c.numeric.include_raised_amount,
                  "Add raw raised_amount as a feature (leaks the label)");

    sub->add_option("--trees", c.forest.n_trees, "Trees in the forest")->capture_default_str();
    sub->add_option("--max-depth", c.forest.max_depth, "Maximum tree depth")->capture_default_str();
    sub->add_option("--min-samples-leaf", c.forest.min_samples_leaf, "Minimum rows per leaf")->capture_default_str();
    sub->add_option("--min-samples-split", c.forest.min_samples_split, "Minimum rows to split a node")
        ->capture_default_str();
    sub->add_option("--features-per-split", f.features_per_split, "Candidate slots per node: integer or sqrt")
        ->capture_default_str();
    sub->add_flag("--no-bootstrap", f.no_bootstrap, "Grow every tree on the full training set");
}

/// Copies flag values that need translation into the run configuration.
/// Topic prior and schedule flags apply to both channels.
void finish_config(Flags& f, std::uint64_t seed, const std::string& out_dir, std::size_t threads) {
    auto& c = f.cfg;
    c.seed = seed;
    c.out_dir = out_dir;
    c.threads = threads;
    c.campaign.k_candidates = f.k_candidates_campaign;
    c.incentive.k_candidates = f.k_candidates_incentive;
    if (f.alpha != 0.0) c.campaign.settings.alpha = f.alpha;
    c.incentive.settings = c.campaign.settings;
    c.incentive.schedule = c.campaign.schedule;
    c.campaign.use_seeds = c.incentive.use_seeds = !f.no_seeds;
    c.noun_mode = f.noun_mode == "lexicon" ? pipeline::NounMode::lexicon : pipeline::NounMode::pass_through;
    if (!f.noun_lexicon.empty()) c.noun_lexicon_file = f.noun_lexicon;
    if (!f.stopwords.empty()) c.stopwords_file = f.stopwords;
    if (f.train_count != 0) c.train_count = f.train_count;
    if (f.features_per_split != "sqrt") {
        std::size_t pos = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(f.features_per_split, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != f.features_per_split.size() || v == 0) {
            throw ArgumentError("--features-per-split must be a positive integer or 'sqrt'");
        }
        c.forest.features_per_split = v;
    }
    c.forest.bootstrap = !f.no_bootstrap;
}

void print_report(const eval::MetricsReport& r) { std::cout << eval::render_text(r); }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Seeded topic features and random-forest prediction for charity crowdfunding campaigns"};
    app.set_config("--config", "", "Configuration file (TOML or INI; flags override it)");
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);

    std::uint64_t seed = 7;
    std::string out_dir = "out";
    std::size_t threads = 1;
    app.add_option("--seed", seed, "Master seed")->capture_default_str();
    app.add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
    app.add_option("--threads", threads, "Worker threads (results do not depend on it)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    Flags flags;

    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic campaign fixture and its truth sidecar");
    synth_cmd->add_option("--n", flags.synth.n, "Number of campaigns")->capture_default_str();
    synth_cmd->add_option("--success-frac", flags.synth.success_fraction, "Share of successful campaigns")
        ->capture_default_str();
    synth_cmd->add_option("--class-separation", flags.synth.class_separation,
                          "Class mean separation in standard deviations")
        ->capture_default_str();

    auto* topics_cmd = app.add_subcommand("topics", "Split the input and fit one topic model per text channel");
    auto* train_cmd = app.add_subcommand("train", "Build fused features and train the forest");
    auto* eval_cmd = app.add_subcommand("eval", "Score the forest on the test split and write the report");
    auto* pipeline_cmd = app.add_subcommand("pipeline", "topics, train and eval in one run");
    for (auto* sub : {topics_cmd, train_cmd, eval_cmd, pipeline_cmd}) add_run_options(sub, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (synth_cmd->parsed()) {
            flags.synth.seed = seed;
            const auto s = pipeline::run_synth(flags.synth, out_dir);
            std::cout << "wrote " << s.set.size() << " campaigns (" << s.set.count_label(1) << " successful) to "
                      << (std::filesystem::path(out_dir) / "campaigns.jsonl").string() << '\n';
            return 0;
        }
        finish_config(flags, seed, out_dir, threads);
        if (topics_cmd->parsed()) {
            const auto r = pipeline::run_topics(flags.cfg);
            for (const auto& c : r.channels) {
                if (!c.selection) continue;
                std::cout << "K selection (" << textprep::channel_name(c.channel) << ")\n";
                for (const auto& row : c.selection->table) {
                    std::cout << "  K=" << row.k << "  perplexity="
                              << (row.perplexity ? std::to_string(*row.perplexity) : std::string("n/a")) << '\n';
                }
                std::cout << "  chosen K=" << c.selection->chosen_k << '\n';
            }
            for (const auto& c : r.channels) {
                for (const auto& w : c.warnings) std::cerr << "warning: " << w << '\n';
            }
            std::cout << pipeline::render_topics(pipeline::topic_summaries(r.channels, flags.cfg.top_n));
        } else if (train_cmd->parsed()) {
            const auto r = pipeline::run_train(flags.cfg);
            std::cout << "trained " << r.forest.trees.size() << " trees on " << r.standardized.train.size()
                      << " rows; training accuracy " << eval::percent(r.train_accuracy) << '\n';
        } else if (eval_cmd->parsed()) {
            print_report(pipeline::run_eval(flags.cfg));
        } else if (pipeline_cmd->parsed()) {
            print_report(pipeline::run_pipeline(flags.cfg));
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
