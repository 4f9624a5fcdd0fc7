#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "scitext/backend.hpp"

namespace scitext {

struct TrainConfig {
    std::vector<double> learning_rates{2e-5, 5e-6, 1e-6, 2e-6};
    double adam_epsilon = 1e-8; // forwarded to gradient-based backends
    std::size_t max_epochs = 20;
    // Fraction of total optimization steps spent on linear warmup, rounded up
    // to at least one step when positive.
    double warmup_fraction = 1e-4;
    std::size_t patience = 3; // epochs without strict improvement before stopping
    std::size_t batch_size = 16;
    std::uint64_t seed = 0;

    void validate() const;
    std::string fingerprint() const;
};

struct EpochRecord {
    std::size_t epoch = 0; // 1-based
    double train_loss = 0.0;
    double val_micro_f1 = 0.0;
    double learning_rate = 0.0; // base rate of the trial
};

struct Checkpoint {
    std::shared_ptr<ClassifierBackend> backend; // snapshot at the best epoch
    std::size_t epoch = 0;
    double val_micro_f1 = 0.0;
    std::string config_fingerprint;
};

// Linear warmup to 1 at warmup_steps, then linear decay to 0 at total_steps.
double schedule_multiplier(std::size_t step, std::size_t total_steps,
                           std::size_t warmup_steps);

struct FineTuneData {
    std::vector<EncodedExample> train;      // label_index set on every example
    std::vector<EncodedExample> validation; // label_index set on every example
};

// Called after each epoch to score the model; injectable so score sequences
// can be scripted in tests.
using EpochScorer =
    std::function<double(const ClassifierBackend&, std::span<const EncodedExample>)>;

// Argmax predictions on the validation set against its labels, micro-F1.
double micro_f1_score(const ClassifierBackend& backend,
                      std::span<const EncodedExample> validation);

struct FineTuneOutcome {
    Checkpoint best;
    std::vector<EpochRecord> trace;
};

// Runs up to max_epochs with the warmup/decay schedule applied to `lr`,
// evaluating validation micro-F1 after each epoch. Stops once `patience`
// consecutive epochs pass without strict improvement; the returned checkpoint
// holds the highest-scoring epoch's snapshot.
FineTuneOutcome fine_tune(ClassifierBackend& backend, const FineTuneData& data,
                          const TrainConfig& config, double lr,
                          const EpochScorer& scorer = micro_f1_score);

using BackendFactory = std::function<std::unique_ptr<ClassifierBackend>()>;

struct LrSearchResult {
    double best_lr = 0.0;
    std::map<double, FineTuneOutcome> per_lr;
    std::vector<double> diverged;
};

// One fine_tune per configured rate, each from a fresh backend instance.
// best_lr maximizes checkpoint micro-F1; ties go to the smaller rate.
LrSearchResult lr_search(const BackendFactory& factory, const FineTuneData& data,
                         const TrainConfig& config,
                         const EpochScorer& scorer = micro_f1_score);

} // namespace scitext
