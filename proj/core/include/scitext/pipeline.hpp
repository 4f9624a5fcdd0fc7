#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scitext/corpus.hpp"
#include "scitext/ensemble.hpp"
#include "scitext/preprocess.hpp"
#include "scitext/training.hpp"

namespace scitext {

struct BackendDescriptor {
    std::string id;
    std::string kind = "lightweight";
    double alpha = 1.0;
    // Fraction of the train partition this backend sees, drawn by a keyed
    // hash so distinct seeds give distinct subsamples.
    double subsample_fraction = 1.0;
    std::uint64_t subsample_seed = 0;
};

struct CorpusPaths {
    std::filesystem::path labeled;
    std::string labeled_format = "jsonl";
    std::filesystem::path unlabeled; // optional; required for infer/vote/expand
    std::string unlabeled_format = "jsonl";
    std::filesystem::path baselines; // optional; used by report
};

// Declarative description of one pipeline run. The seed propagates to every
// stochastic stage; identical configs with the lightweight backend reproduce
// identical stage outputs.
struct RunConfig {
    std::string dataset_name = "corpus";
    std::vector<std::string> label_space;
    Scenario scenario = Scenario::abstract_and_keywords;
    CorpusPaths corpus;
    SplitRatios ratios;
    std::vector<BackendDescriptor> backends;
    TrainConfig training;
    VotePolicy vote;
    std::size_t max_len = 512;
    std::uint64_t seed = 7;
    std::filesystem::path run_dir = "run";

    static RunConfig from_file(const std::filesystem::path& path);

    // Checks structural validity; with check_paths also that referenced
    // input files exist.
    void validate(bool check_paths = true) const;

    LabelSpace labels() const { return LabelSpace(label_space); }

    // Hex digest over the semantically meaningful fields: changing the run
    // directory or field order leaves it alone, changing the seed does not.
    std::string fingerprint() const;
};

// Appends one line per completed stage to <run_dir>/experiment.jsonl:
// {run_id, stage, config_fingerprint, started, finished, outputs}.
void append_experiment_record(const RunConfig& config, const std::string& stage,
                              const std::string& outputs_json,
                              const std::string& started, const std::string& finished);

// Stage commands. Each validates its upstream artifacts, writes its own
// artifact under the run directory and appends to the experiment record.
// Directory arguments are run-dir-relative so a retrain after expansion can
// target expanded splits without touching earlier artifacts.

void cmd_ingest(const RunConfig& config);

void cmd_split(const RunConfig& config, const std::string& corpus_file = "corpus/labeled.jsonl",
               const std::string& splits_dir = "splits");

void cmd_train(const RunConfig& config, const std::vector<std::string>& only_backends = {},
               const std::string& splits_dir = "splits", const std::string& models_dir = "models");

void cmd_infer(const RunConfig& config, const std::vector<std::string>& only_backends = {},
               const std::string& models_dir = "models",
               const std::string& predictions_dir = "predictions");

void cmd_vote(const RunConfig& config, const std::string& predictions_dir = "predictions",
              const std::string& votes_dir = "votes");

void cmd_expand(const RunConfig& config, const std::string& votes_dir = "votes",
                const std::string& expanded_dir = "expanded");

void cmd_evaluate(const RunConfig& config, const std::string& models_dir = "models",
                  const std::string& splits_dir = "splits",
                  const std::string& metrics_dir = "metrics",
                  const std::vector<std::string>& only_backends = {});

void cmd_report(const RunConfig& config, const std::vector<std::string>& metrics_dirs = {"metrics"},
                const std::string& report_dir = "report");

} // namespace scitext
