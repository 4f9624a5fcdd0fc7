#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "scitext/labels.hpp"
#include "scitext/preprocess.hpp"
#include "scitext/tokenizer.hpp"

namespace scitext {

// Classifier contract every model must satisfy, whether a pretrained encoder
// adapter or the lightweight reference model.
//
// predict_proba returns one distribution per input, aligned to label-space
// order, each non-negative and summing to 1 within 1e-6, and is deterministic
// for fixed parameters. fine_tune_step consumes a labeled batch and returns a
// finite non-negative loss; a non-finite loss signals divergence and the
// caller aborts the learning-rate trial.
class ClassifierBackend {
public:
    virtual ~ClassifierBackend() = default;

    virtual const std::string& model_id() const = 0;
    virtual const Tokenizer& tokenizer() const = 0;
    virtual const LabelSpace& labels() const = 0;

    virtual std::vector<std::vector<double>> predict_proba(
        std::span<const EncodedExample> batch) const = 0;

    virtual double fine_tune_step(std::span<const EncodedExample> batch,
                                  double learning_rate) = 0;

    virtual std::unique_ptr<ClassifierBackend> clone() const = 0;
};

// Multinomial model with additive smoothing: the deterministic desk-scale
// stand-in behind the backend contract.
//
//   log P(token | class) = log((weight + alpha) / (total + alpha * V))
//
// Class priors are proportional to accumulated class weights (uniform while
// untrained). fine_tune_step is a closed-form refit: the batch's token and
// class counts are added with weight learning_rate * refit_gain, and the step
// reports the batch's mean negative log-likelihood under the pre-step
// parameters. The gain maps encoder-scale learning rates onto count weights
// the additive smoothing does not drown out; at the default 1e6 a rate of
// 1e-6 counts each example once per visit.
class LightweightBackend final : public ClassifierBackend {
public:
    LightweightBackend(std::string model_id, std::shared_ptr<const WordTokenizer> tokenizer,
                       LabelSpace labels, double alpha = 1.0, double refit_gain = 1e6);

    const std::string& model_id() const override { return model_id_; }
    const Tokenizer& tokenizer() const override { return *tokenizer_; }
    const LabelSpace& labels() const override { return labels_; }

    std::vector<std::vector<double>> predict_proba(
        std::span<const EncodedExample> batch) const override;

    double fine_tune_step(std::span<const EncodedExample> batch,
                          double learning_rate) override;

    std::unique_ptr<ClassifierBackend> clone() const override;

    // Closed-form fit with unit weight per example; resets nothing, so fitting
    // an already-trained model accumulates.
    void fit(std::span<const EncodedExample> examples);

    double alpha() const { return alpha_; }
    double refit_gain() const { return refit_gain_; }
    double class_log_prior(LabelId label) const;
    double token_log_likelihood(LabelId label, std::int32_t token_id) const;

    std::shared_ptr<const WordTokenizer> shared_tokenizer() const { return tokenizer_; }

    // Checkpoint layout: descriptor.json {model_id, kind, tokenizer_vocab,
    // weights, labels} next to vocab.txt and weights.json.
    void save(const std::filesystem::path& dir) const;
    static LightweightBackend load(const std::filesystem::path& dir);

private:
    void accumulate(std::span<const EncodedExample> batch, double weight);
    std::vector<double> log_posterior(const EncodedExample& example) const;

    std::string model_id_;
    std::shared_ptr<const WordTokenizer> tokenizer_;
    LabelSpace labels_;
    double alpha_;
    double refit_gain_;

    std::vector<double> class_weight_;              // per label
    std::vector<std::vector<double>> token_weight_; // [label][token id]
    std::vector<double> token_total_;               // per label, sum over tokens
};

// Builds a word tokenizer over the train partition (composed per scenario)
// and fits a LightweightBackend on it in closed form. An empty label_space
// means: derive it from the gold labels present in train.
LightweightBackend train_lightweight(const DatasetBundle& bundle, Scenario scenario,
                                     std::size_t max_len, double alpha = 1.0,
                                     std::string model_id = "lightweight",
                                     LabelSpace label_space = {});

} // namespace scitext
