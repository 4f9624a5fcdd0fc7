#include "scitext/training.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "scitext/corpus.hpp"
#include "scitext/evaluation.hpp"

namespace scitext {

void TrainConfig::validate() const {
    if (learning_rates.empty()) {
        throw ValidationError("learning rate grid is empty");
    }
    for (double lr : learning_rates) {
        if (!(lr > 0.0)) {
            throw ValidationError("learning rates must be positive");
        }
    }
    if (warmup_fraction < 0.0 || warmup_fraction >= 1.0) {
        throw ValidationError("warmup_fraction must be in [0, 1)");
    }
    if (patience < 1) {
        throw ValidationError("patience must be at least 1");
    }
    if (max_epochs < 1) {
        throw ValidationError("max_epochs must be at least 1");
    }
    if (batch_size < 1) {
        throw ValidationError("batch_size must be at least 1");
    }
}

std::string TrainConfig::fingerprint() const {
    std::ostringstream os;
    os.precision(17);
    os << "lrs=";
    for (double lr : learning_rates) os << lr << ',';
    os << ";eps=" << adam_epsilon << ";epochs=" << max_epochs << ";warmup=" << warmup_fraction
       << ";patience=" << patience << ";batch=" << batch_size << ";seed=" << seed;
    std::ostringstream hex;
    hex << std::hex << fnv1a64(os.str());
    return hex.str();
}

double schedule_multiplier(std::size_t step, std::size_t total_steps, std::size_t warmup_steps) {
    if (total_steps == 0 || step > total_steps) {
        throw ValidationError("schedule step out of range");
    }
    if (warmup_steps >= total_steps) {
        throw ValidationError("warmup_steps must be smaller than total_steps");
    }
    if (step < warmup_steps) {
        return static_cast<double>(step) / static_cast<double>(warmup_steps);
    }
    return static_cast<double>(total_steps - step) /
           static_cast<double>(total_steps - warmup_steps);
}

double micro_f1_score(const ClassifierBackend& backend,
                      std::span<const EncodedExample> validation) {
    if (validation.empty()) {
        throw ValidationError("validation set is empty");
    }
    auto probs = backend.predict_proba(validation);

    std::vector<LabelId> golds;
    std::vector<LabelId> preds;
    golds.reserve(validation.size());
    preds.reserve(validation.size());
    for (std::size_t i = 0; i < validation.size(); ++i) {
        if (!validation[i].label_index) {
            throw ValidationError("validation example without a label");
        }
        golds.push_back(*validation[i].label_index);
        std::size_t best = 0;
        for (std::size_t l = 1; l < probs[i].size(); ++l) {
            if (probs[i][l] > probs[i][best]) best = l;
        }
        preds.push_back(static_cast<LabelId>(best));
    }
    return micro_metrics(confusion(golds, preds, backend.labels())).micro_f1;
}

namespace {

std::size_t resolve_warmup_steps(const TrainConfig& config, std::size_t total_steps) {
    if (config.warmup_fraction <= 0.0 || total_steps <= 1) return 0;
    auto steps = static_cast<std::size_t>(
        std::ceil(config.warmup_fraction * static_cast<double>(total_steps)));
    steps = std::max<std::size_t>(steps, 1);
    return std::min(steps, total_steps - 1);
}

} // namespace

FineTuneOutcome fine_tune(ClassifierBackend& backend, const FineTuneData& data,
                          const TrainConfig& config, double lr, const EpochScorer& scorer) {
    config.validate();
    if (std::find(config.learning_rates.begin(), config.learning_rates.end(), lr) ==
        config.learning_rates.end()) {
        throw ValidationError("learning rate is not part of the configured grid");
    }
    if (data.train.empty() || data.validation.empty()) {
        throw ValidationError("fine_tune needs non-empty train and validation sets");
    }

    const std::size_t steps_per_epoch =
        (data.train.size() + config.batch_size - 1) / config.batch_size;
    const std::size_t total_steps = steps_per_epoch * config.max_epochs;
    const std::size_t warmup_steps = resolve_warmup_steps(config, total_steps);

    FineTuneOutcome outcome;
    outcome.best.config_fingerprint = config.fingerprint();

    std::size_t global_step = 0;
    std::size_t epochs_without_improvement = 0;
    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        double loss_sum = 0.0;
        for (std::size_t begin = 0; begin < data.train.size(); begin += config.batch_size) {
            const std::size_t end = std::min(begin + config.batch_size, data.train.size());
            const double effective_lr =
                lr * schedule_multiplier(global_step, total_steps, warmup_steps);
            const double loss = backend.fine_tune_step(
                std::span<const EncodedExample>(data.train).subspan(begin, end - begin),
                effective_lr);
            if (!std::isfinite(loss)) {
                throw DivergenceError("non-finite loss at learning rate " + std::to_string(lr),
                                      lr);
            }
            loss_sum += loss;
            ++global_step;
        }

        EpochRecord record;
        record.epoch = epoch;
        record.train_loss = loss_sum / static_cast<double>(steps_per_epoch);
        record.val_micro_f1 = scorer(backend, data.validation);
        record.learning_rate = lr;
        outcome.trace.push_back(record);

        if (!outcome.best.backend || record.val_micro_f1 > outcome.best.val_micro_f1) {
            outcome.best.backend = backend.clone();
            outcome.best.epoch = epoch;
            outcome.best.val_micro_f1 = record.val_micro_f1;
            epochs_without_improvement = 0;
        } else if (++epochs_without_improvement >= config.patience) {
            break;
        }
    }
    return outcome;
}

LrSearchResult lr_search(const BackendFactory& factory, const FineTuneData& data,
                         const TrainConfig& config, const EpochScorer& scorer) {
    config.validate();

    LrSearchResult result;
    bool have_best = false;
    for (double lr : config.learning_rates) {
        auto backend = factory();
        if (!backend) {
            throw ValidationError("backend factory returned null");
        }
        try {
            auto outcome = fine_tune(*backend, data, config, lr, scorer);
            const double score = outcome.best.val_micro_f1;
            const bool better =
                !have_best || score > result.per_lr.at(result.best_lr).best.val_micro_f1 ||
                (score == result.per_lr.at(result.best_lr).best.val_micro_f1 &&
                 lr < result.best_lr);
            result.per_lr.emplace(lr, std::move(outcome));
            if (better) {
                result.best_lr = lr;
                have_best = true;
            }
        } catch (const DivergenceError&) {
            result.diverged.push_back(lr);
        }
    }
    if (!have_best) {
        throw DivergenceError("every learning rate in the grid diverged",
                              config.learning_rates.front());
    }
    return result;
}

} // namespace scitext
