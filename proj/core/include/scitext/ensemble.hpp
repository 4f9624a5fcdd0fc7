#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "scitext/labels.hpp"
#include "scitext/preprocess.hpp"

namespace scitext {

struct RankedLabel {
    LabelId label = 0;
    double probability = 0.0;
};

// One model's ranked top-k categories for one document.
struct Prediction {
    std::string doc_id;
    std::string model_id;
    Scenario scenario = Scenario::abstract_and_keywords;
    std::vector<RankedLabel> ranked; // descending probability, distinct labels
};

struct VoteResult {
    std::string doc_id;
    LabelId label = 0;
    int votes = 0;
    int total_models = 0;
    bool tie_broken = false;
    double summed_probability = 0.0; // sum of the winner's top-1 probabilities
};

// Winner fell short of the quorum; the document is excluded from expansion.
struct VoteRejection {
    std::string doc_id;
    int best_votes = 0;
    int total_models = 0;
};

using VoteOutcome = std::variant<VoteResult, VoteRejection>;

bool is_accepted(const VoteOutcome& outcome);

struct VotePolicy {
    int min_votes = 2;
    std::string tie_break = "summed-top1-probability";
};

// Top-k labels by probability, descending; ties keep label-space order.
// The distribution must sum to 1 within 1e-6.
std::vector<RankedLabel> rank_topk(std::span<const double> distribution, std::size_t k);

// Counts each model's top-1 vote. Ties at the top vote count are broken by
// highest summed top-1 probability, then by label-space index.
VoteOutcome hard_vote(std::span<const Prediction> predictions, const VotePolicy& policy);

struct AgreementStats {
    std::map<int, std::size_t> votes_histogram; // accepted results only
    std::size_t rejections = 0;
};

AgreementStats agreement_stats(std::span<const VoteOutcome> outcomes);

// For one model: percentage of documents retrieved by query d whose top-1
// prediction is d, per domain d. Every document needs a query class.
std::map<LabelId, double> per_domain_agreement(
    std::span<const Prediction> predictions,
    const std::unordered_map<std::string, LabelId>& query_classes,
    std::string_view model_id);

// Line-delimited interoperability formats.
// Prediction: {doc_id, model_id, scenario, ranked: [{label, prob}]}
// Vote:       {doc_id, label, votes, tie_broken, summed_probability}
std::string prediction_to_json(const Prediction& prediction, const LabelSpace& labels);
Prediction prediction_from_json(std::string_view line, const LabelSpace& labels);
std::string vote_result_to_json(const VoteResult& result, const LabelSpace& labels);
VoteResult vote_result_from_json(std::string_view line, const LabelSpace& labels);

} // namespace scitext
