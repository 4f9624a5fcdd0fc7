#include <doctest.h>

#include <cmath>
#include <limits>
#include <memory>
#include <random>

#include "scitext/training.hpp"
#include "support/oracles.hpp"

using namespace scitext;

namespace {

// Minimal contract implementation for orchestration tests: uniform
// predictions, fixed loss, optional NaN loss to simulate divergence.
class StubBackend final : public ClassifierBackend {
public:
    explicit StubBackend(bool diverge = false)
        : id_("stub"),
          tokenizer_(std::make_shared<const WordTokenizer>(
              WordTokenizer::from_texts(std::vector<std::string>{"alpha beta"}))),
          labels_({"A", "B"}),
          diverge_(diverge) {}

    const std::string& model_id() const override { return id_; }
    const Tokenizer& tokenizer() const override { return *tokenizer_; }
    const LabelSpace& labels() const override { return labels_; }

    std::vector<std::vector<double>> predict_proba(
        std::span<const EncodedExample> batch) const override {
        return std::vector<std::vector<double>>(batch.size(), {0.5, 0.5});
    }

    double fine_tune_step(std::span<const EncodedExample>, double) override {
        ++steps;
        return diverge_ ? std::numeric_limits<double>::quiet_NaN() : 0.25;
    }

    std::unique_ptr<ClassifierBackend> clone() const override {
        return std::make_unique<StubBackend>(*this);
    }

    std::size_t steps = 0;

private:
    std::string id_;
    std::shared_ptr<const WordTokenizer> tokenizer_;
    LabelSpace labels_;
    bool diverge_;
};

FineTuneData tiny_data(const ClassifierBackend& backend, std::size_t n_train = 4) {
    FineTuneData data;
    for (std::size_t i = 0; i < n_train; ++i) {
        data.train.push_back(encode("alpha beta", backend.tokenizer(), 8,
                                    static_cast<std::int32_t>(i % 2)));
    }
    data.validation.push_back(encode("alpha", backend.tokenizer(), 8, 0));
    return data;
}

EpochScorer scripted(std::vector<double> scores) {
    auto next = std::make_shared<std::size_t>(0);
    return [scores = std::move(scores), next](const ClassifierBackend&,
                                              std::span<const EncodedExample>) {
        REQUIRE(*next < scores.size());
        return scores[(*next)++];
    };
}

TrainConfig quick_config() {
    TrainConfig config;
    config.max_epochs = 20;
    config.batch_size = 2;
    config.patience = 3;
    return config;
}

} // namespace

TEST_SUITE("training") {

TEST_CASE("schedule_multiplier ramps up linearly then decays to zero") {
    CHECK(schedule_multiplier(0, 1100, 100) == 0.0);
    CHECK(schedule_multiplier(100, 1100, 100) == 1.0);
    CHECK(schedule_multiplier(600, 1100, 100) == 0.5); // (1100-600)/(1100-100)
    CHECK(schedule_multiplier(1100, 1100, 100) == 0.0);
    CHECK(schedule_multiplier(50, 1100, 100) == 0.5);
}

TEST_CASE("schedule_multiplier is continuous, piecewise linear and bounded") {
    const std::size_t total = 977;
    const std::size_t warmup = 61;
    double prev = schedule_multiplier(0, total, warmup);
    CHECK(prev == 0.0);
    for (std::size_t step = 1; step <= total; ++step) {
        const double m = schedule_multiplier(step, total, warmup);
        CHECK(m >= 0.0);
        CHECK(m <= 1.0);
        // Steps never jump by more than one linear-segment slope.
        const double max_slope =
            std::max(1.0 / static_cast<double>(warmup),
                     1.0 / static_cast<double>(total - warmup));
        CHECK(std::abs(m - prev) <= max_slope + 1e-12);
        prev = m;
    }
}

TEST_CASE("schedule_multiplier rejects out-of-range arguments") {
    CHECK_THROWS_AS(schedule_multiplier(11, 10, 2), ValidationError);
    CHECK_THROWS_AS(schedule_multiplier(0, 10, 10), ValidationError);
}

TEST_CASE("fine_tune stops after patience stale epochs and keeps the best checkpoint") {
    StubBackend backend;
    auto data = tiny_data(backend);
    auto config = quick_config();

    SUBCASE("peak then decline, patience 2") {
        config.patience = 2;
        auto outcome = fine_tune(backend, data, config, config.learning_rates.front(),
                                 scripted({0.5, 0.6, 0.59, 0.58, 0.99}));
        CHECK(outcome.trace.size() == 4); // stops after epoch 4
        CHECK(outcome.best.epoch == 2);
        CHECK(outcome.best.val_micro_f1 == 0.6);
    }

    SUBCASE("a tie is not an improvement") {
        config.patience = 1;
        auto outcome = fine_tune(backend, data, config, config.learning_rates.front(),
                                 scripted({0.7, 0.7, 0.9}));
        CHECK(outcome.trace.size() == 2);
        CHECK(outcome.best.epoch == 1);
        CHECK(outcome.best.val_micro_f1 == 0.7);
    }

    SUBCASE("strictly increasing scores run every epoch") {
        std::vector<double> scores;
        for (int i = 0; i < 20; ++i) scores.push_back(0.5 + 0.02 * i);
        auto outcome = fine_tune(backend, data, config, config.learning_rates.front(),
                                 scripted(scores));
        CHECK(outcome.trace.size() == 20);
        CHECK(outcome.best.epoch == 20);
    }
}

TEST_CASE("fine_tune agrees with the early-stopping oracle on random score sequences") {
    std::mt19937_64 rng(515);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> scores;
        for (int i = 0; i < 20; ++i) scores.push_back(unit(rng));
        const std::size_t patience = 1 + rng() % 4;

        StubBackend backend;
        auto data = tiny_data(backend);
        auto config = quick_config();
        config.patience = patience;

        auto outcome = fine_tune(backend, data, config, config.learning_rates.front(),
                                 scripted(scores));
        auto oracle = testing::early_stop_oracle(scores, patience, config.max_epochs);
        CHECK(outcome.trace.size() == oracle.epochs_run);
        CHECK(outcome.best.epoch == oracle.best_epoch);
        CHECK(outcome.best.val_micro_f1 == oracle.best_score);
        CHECK(outcome.trace.size() <= oracle.best_epoch + patience);

        double max_seen = 0.0;
        for (const auto& record : outcome.trace) max_seen = std::max(max_seen, record.val_micro_f1);
        CHECK(outcome.best.val_micro_f1 == max_seen);
    }
}

TEST_CASE("fine_tune validates its inputs") {
    StubBackend backend;
    auto data = tiny_data(backend);
    auto config = quick_config();
    CHECK_THROWS_AS(fine_tune(backend, data, config, 123.0, scripted({0.5})),
                    ValidationError);

    FineTuneData empty;
    CHECK_THROWS_AS(
        fine_tune(backend, empty, config, config.learning_rates.front(), scripted({0.5})),
        ValidationError);
}

TEST_CASE("fine_tune aborts the trial on non-finite loss") {
    StubBackend backend(/*diverge=*/true);
    auto data = tiny_data(backend);
    auto config = quick_config();
    CHECK_THROWS_AS(
        fine_tune(backend, data, config, config.learning_rates.front(), scripted({0.5})),
        DivergenceError);
}

TEST_CASE("lr_search picks the rate with the best scripted peak") {
    // Peaks mirroring a four-rate search where 1e-6 tops out at 0.8971.
    auto config = quick_config();
    config.patience = 1;
    REQUIRE(config.learning_rates == std::vector<double>{2e-5, 5e-6, 1e-6, 2e-6});

    const std::vector<double> peaks{0.8788, 0.8824, 0.8971, 0.8891};
    auto trial_index = std::make_shared<std::size_t>(0);
    BackendFactory factory = [trial_index]() {
        ++*trial_index;
        return std::make_unique<StubBackend>();
    };
    EpochScorer scorer = [trial_index, peaks](const ClassifierBackend&,
                                              std::span<const EncodedExample>) {
        return peaks[*trial_index - 1];
    };

    StubBackend proto;
    auto data = tiny_data(proto);
    auto result = lr_search(factory, data, config, scorer);
    CHECK(result.best_lr == 1e-6);
    CHECK(result.per_lr.at(1e-6).best.val_micro_f1 == 0.8971);
    CHECK(result.per_lr.size() == 4);
}

TEST_CASE("lr_search breaks peak ties toward the smaller rate") {
    auto config = quick_config();
    config.patience = 1;

    const std::vector<double> peaks{0.9, 0.9, 0.8, 0.7}; // grid order 2e-5, 5e-6, 1e-6, 2e-6
    auto trial_index = std::make_shared<std::size_t>(0);
    BackendFactory factory = [trial_index]() {
        ++*trial_index;
        return std::make_unique<StubBackend>();
    };
    EpochScorer scorer = [trial_index, peaks](const ClassifierBackend&,
                                              std::span<const EncodedExample>) {
        return peaks[*trial_index - 1];
    };

    StubBackend proto;
    auto data = tiny_data(proto);
    auto result = lr_search(factory, data, config, scorer);
    CHECK(result.best_lr == 5e-6); // smaller of the tied 2e-5 and 5e-6
}

TEST_CASE("lr_search with a single-element grid returns that rate") {
    auto config = quick_config();
    config.learning_rates = {3e-6};
    config.patience = 1;

    BackendFactory factory = []() { return std::make_unique<StubBackend>(); };
    StubBackend proto;
    auto data = tiny_data(proto);
    auto result = lr_search(factory, data, config, scripted(std::vector<double>(40, 0.5)));
    CHECK(result.best_lr == 3e-6);
}

TEST_CASE("lr_search reports when every rate diverges") {
    auto config = quick_config();
    BackendFactory factory = []() { return std::make_unique<StubBackend>(/*diverge=*/true); };
    StubBackend proto;
    auto data = tiny_data(proto);
    CHECK_THROWS_AS(lr_search(factory, data, config, scripted({0.5})), DivergenceError);
}

TEST_CASE("a full lr_search over lightweight backends is reproducible") {
    auto tokenizer = std::make_shared<const WordTokenizer>(WordTokenizer::from_texts(
        std::vector<std::string>{"enzyme protein cell", "circuit voltage signal"}));
    LabelSpace labels({"Bio", "ECE"});

    FineTuneData data;
    std::mt19937_64 rng(99);
    const std::vector<std::string> bio{"enzyme", "protein", "cell"};
    const std::vector<std::string> ece{"circuit", "voltage", "signal"};
    for (int i = 0; i < 40; ++i) {
        const bool is_bio = i % 2 == 0;
        const auto& words = is_bio ? bio : ece;
        std::string text;
        for (int t = 0; t < 6; ++t) {
            if (t > 0) text.push_back(' ');
            text += words[rng() % words.size()];
        }
        auto& sink = (i < 32) ? data.train : data.validation;
        sink.push_back(encode(text, *tokenizer, 16, is_bio ? 0 : 1));
    }

    auto config = quick_config();
    config.max_epochs = 6;
    BackendFactory factory = [&]() {
        return std::make_unique<LightweightBackend>("nb", tokenizer, labels, 1.0);
    };

    auto first = lr_search(factory, data, config);
    auto second = lr_search(factory, data, config);
    CHECK(first.best_lr == second.best_lr);
    REQUIRE(first.per_lr.size() == second.per_lr.size());
    for (const auto& [lr, outcome] : first.per_lr) {
        const auto& other = second.per_lr.at(lr);
        REQUIRE(outcome.trace.size() == other.trace.size());
        for (std::size_t e = 0; e < outcome.trace.size(); ++e) {
            CHECK(outcome.trace[e].train_loss == other.trace[e].train_loss);
            CHECK(outcome.trace[e].val_micro_f1 == other.trace[e].val_micro_f1);
        }
        CHECK(outcome.best.epoch == other.best.epoch);
    }
}

} // TEST_SUITE("training")
