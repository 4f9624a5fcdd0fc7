#include <benchmark/benchmark.h>

#include <random>

#include "scitext/backend.hpp"
#include "scitext/corpus.hpp"
#include "scitext/ensemble.hpp"
#include "scitext/evaluation.hpp"
#include "scitext/preprocess.hpp"

using namespace scitext;

namespace {

const LabelSpace kLabels({"CS", "Civil", "ECE", "MAE", "Medical", "Psychology",
                          "Biochemistry"});

std::vector<Prediction> make_ballot(std::mt19937_64& rng) {
    std::vector<Prediction> preds;
    for (int m = 0; m < 4; ++m) {
        Prediction p;
        p.doc_id = "doc";
        p.model_id = "m" + std::to_string(m);
        const auto top = static_cast<LabelId>(rng() % kLabels.size());
        p.ranked = {{top, 0.8},
                    {static_cast<LabelId>((top + 1) % kLabels.size()), 0.1},
                    {static_cast<LabelId>((top + 2) % kLabels.size()), 0.1}};
        preds.push_back(std::move(p));
    }
    return preds;
}

void BM_CleanText(benchmark::State& state) {
    const std::string raw =
        "Advancing Scientific Text-Classification (2024): 77 ways to Fine-Tune models, "
        "with UPPER and lower case, punctuation... and   runs   of   spaces!";
    for (auto _ : state) {
        benchmark::DoNotOptimize(clean_text(raw));
    }
}
BENCHMARK(BM_CleanText);

void BM_HardVote(benchmark::State& state) {
    std::mt19937_64 rng(1);
    std::vector<std::vector<Prediction>> ballots;
    for (int i = 0; i < 1024; ++i) ballots.push_back(make_ballot(rng));
    const VotePolicy policy{.min_votes = 2};
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(hard_vote(ballots[i++ & 1023], policy));
    }
}
BENCHMARK(BM_HardVote);

void BM_MicroMetrics(benchmark::State& state) {
    std::mt19937_64 rng(2);
    std::vector<LabelId> golds;
    std::vector<LabelId> preds;
    for (int i = 0; i < 10000; ++i) {
        golds.push_back(static_cast<LabelId>(rng() % kLabels.size()));
        preds.push_back(static_cast<LabelId>(rng() % kLabels.size()));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(micro_metrics(confusion(golds, preds, kLabels)));
    }
}
BENCHMARK(BM_MicroMetrics);

void BM_SplitLargeCorpus(benchmark::State& state) {
    Corpus corpus;
    corpus.name = "bench";
    corpus.label_space = LabelSpace({"X"});
    for (int i = 0; i < 53949; ++i) {
        Document d;
        d.id = "doc-" + std::to_string(i);
        d.title = "t";
        corpus.documents.push_back(std::move(d));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(split(corpus, {0.8, 0.1, 0.1}, 42));
    }
}
BENCHMARK(BM_SplitLargeCorpus);

void BM_LightweightPredict(benchmark::State& state) {
    auto tokenizer = std::make_shared<const WordTokenizer>(WordTokenizer::from_texts(
        std::vector<std::string>{"enzyme protein cell tissue circuit voltage signal current "
                                 "bridge concrete beam neuron stress therapy"}));
    LightweightBackend backend("bench", tokenizer, kLabels);
    std::mt19937_64 rng(3);
    std::vector<EncodedExample> train;
    const std::vector<std::string> words{"enzyme", "protein", "cell", "tissue", "circuit",
                                         "voltage", "signal", "current", "bridge", "concrete"};
    for (int i = 0; i < 256; ++i) {
        std::string text;
        for (int t = 0; t < 24; ++t) {
            if (t > 0) text.push_back(' ');
            text += words[rng() % words.size()];
        }
        train.push_back(encode(text, *tokenizer, 64, static_cast<std::int32_t>(rng() % 7)));
    }
    backend.fit(train);

    for (auto _ : state) {
        benchmark::DoNotOptimize(
            backend.predict_proba(std::span<const EncodedExample>(train).subspan(0, 16)));
    }
}
BENCHMARK(BM_LightweightPredict);

} // namespace

BENCHMARK_MAIN();
