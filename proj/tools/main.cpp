#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scitext/pipeline.hpp"

namespace {

// Stable exit codes, one per failure class.
enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kConfigError = 2,
    kMissingArtifact = 3,
    kIoError = 4,
    kFormatError = 5,
    kValidationError = 6,
};

struct GlobalOptions {
    std::string config_path;
    std::string run_dir;
    std::int64_t seed = -1;
    std::string scenario;
    std::vector<std::string> backends;
};

scitext::RunConfig load_config(const GlobalOptions& options) {
    auto config = scitext::RunConfig::from_file(options.config_path);
    if (!options.run_dir.empty()) config.run_dir = options.run_dir;
    if (options.seed >= 0) config.seed = static_cast<std::uint64_t>(options.seed);
    if (!options.scenario.empty()) config.scenario = scitext::scenario_from_tag(options.scenario);
    config.training.seed = config.seed;
    return config;
}

void add_global_options(CLI::App* cmd, GlobalOptions& options, bool with_backends) {
    cmd->add_option("--config", options.config_path, "Run configuration file (json)")
        ->required();
    cmd->add_option("--run-dir", options.run_dir, "Run directory (overrides config)");
    cmd->add_option("--seed", options.seed, "Seed for every stochastic stage (overrides config)");
    cmd->add_option("--scenario", options.scenario,
                    "Input composition: abstract | keywords | abstract_and_keywords")
        ->check(CLI::IsMember({"abstract", "keywords", "abstract_and_keywords"}));
    if (with_backends) {
        cmd->add_option("--backend", options.backends,
                        "Restrict to these backend ids (repeatable)");
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scientific text classification pipeline: fine-tune pluggable classifier "
                 "backends, expand the corpus by hard-voting over model predictions, retrain "
                 "and evaluate."};
    app.require_subcommand(1);

    GlobalOptions options;

    auto* ingest = app.add_subcommand("ingest", "Load, validate and deduplicate the corpora");
    add_global_options(ingest, options, false);

    auto* split_cmd = app.add_subcommand("split", "Partition the labeled corpus");
    add_global_options(split_cmd, options, false);
    std::string split_corpus = "corpus/labeled.jsonl";
    std::string split_out = "splits";
    split_cmd->add_option("--corpus-file", split_corpus, "Corpus artifact to split");
    split_cmd->add_option("--out", split_out, "Splits directory (run-dir relative)");

    auto* train = app.add_subcommand("train", "Learning-rate search and fine-tuning");
    add_global_options(train, options, true);
    std::string train_splits = "splits";
    std::string train_models = "models";
    train->add_option("--splits-dir", train_splits, "Splits directory (run-dir relative)");
    train->add_option("--models-dir", train_models, "Models output directory");

    auto* infer = app.add_subcommand("infer", "Top-k inference on the unlabeled corpus");
    add_global_options(infer, options, true);
    std::string infer_models = "models";
    std::string infer_out = "predictions";
    infer->add_option("--models-dir", infer_models, "Models directory");
    infer->add_option("--out", infer_out, "Predictions output directory");

    auto* vote = app.add_subcommand("vote", "Hard-vote the per-model predictions");
    add_global_options(vote, options, false);
    std::string vote_predictions = "predictions";
    std::string vote_out = "votes";
    vote->add_option("--predictions-dir", vote_predictions, "Predictions directory");
    vote->add_option("--out", vote_out, "Votes output directory");

    auto* expand = app.add_subcommand("expand", "Merge vote-accepted documents and re-split");
    add_global_options(expand, options, false);
    std::string expand_votes = "votes";
    std::string expand_out = "expanded";
    expand->add_option("--votes-dir", expand_votes, "Votes directory");
    expand->add_option("--out", expand_out, "Expanded corpus output directory");

    auto* evaluate = app.add_subcommand("evaluate", "Micro metrics on the test split");
    add_global_options(evaluate, options, true);
    std::string eval_models = "models";
    std::string eval_splits = "splits";
    std::string eval_out = "metrics";
    evaluate->add_option("--models-dir", eval_models, "Models directory");
    evaluate->add_option("--splits-dir", eval_splits, "Splits directory");
    evaluate->add_option("--out", eval_out, "Metrics output directory");

    auto* report = app.add_subcommand("report", "Comparison tables against baselines");
    add_global_options(report, options, false);
    std::vector<std::string> report_metrics{"metrics"};
    std::string report_out = "report";
    report->add_option("--metrics-dir", report_metrics, "Metrics directories (repeatable)");
    report->add_option("--out", report_out, "Report output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        const auto config = load_config(options);
        if (ingest->parsed()) {
            scitext::cmd_ingest(config);
        } else if (split_cmd->parsed()) {
            scitext::cmd_split(config, split_corpus, split_out);
        } else if (train->parsed()) {
            scitext::cmd_train(config, options.backends, train_splits, train_models);
        } else if (infer->parsed()) {
            scitext::cmd_infer(config, options.backends, infer_models, infer_out);
        } else if (vote->parsed()) {
            scitext::cmd_vote(config, vote_predictions, vote_out);
        } else if (expand->parsed()) {
            scitext::cmd_expand(config, expand_votes, expand_out);
        } else if (evaluate->parsed()) {
            scitext::cmd_evaluate(config, eval_models, eval_splits, eval_out, options.backends);
        } else if (report->parsed()) {
            scitext::cmd_report(config, report_metrics, report_out);
        }
    } catch (const scitext::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const scitext::MissingArtifactError& e) {
        std::cerr << "missing artifact: " << e.what() << "\n";
        return kMissingArtifact;
    } catch (const scitext::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kIoError;
    } catch (const scitext::FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kFormatError;
    } catch (const scitext::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kValidationError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kOk;
}
