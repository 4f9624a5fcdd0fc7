#include "scitext/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

namespace scitext {

namespace {
using nlohmann::json;
}

bool is_accepted(const VoteOutcome& outcome) {
    return std::holds_alternative<VoteResult>(outcome);
}

std::vector<RankedLabel> rank_topk(std::span<const double> distribution, std::size_t k) {
    if (distribution.empty()) {
        throw ValidationError("cannot rank an empty distribution");
    }
    if (k > distribution.size()) {
        throw ValidationError("k exceeds the label-space size");
    }
    double sum = 0.0;
    for (double p : distribution) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw ValidationError("distribution entries must be finite and non-negative");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
        throw ValidationError("distribution does not sum to 1");
    }

    std::vector<std::size_t> order(distribution.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return distribution[a] > distribution[b]; // stable keeps label-space order on ties
    });

    std::vector<RankedLabel> ranked;
    ranked.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        ranked.push_back({static_cast<LabelId>(order[i]), distribution[order[i]]});
    }
    return ranked;
}

VoteOutcome hard_vote(std::span<const Prediction> predictions, const VotePolicy& policy) {
    if (predictions.empty()) {
        throw ValidationError("hard_vote needs at least one prediction");
    }
    const int total_models = static_cast<int>(predictions.size());
    if (policy.min_votes < 1 || policy.min_votes > total_models) {
        throw ValidationError("min_votes must be between 1 and the number of models");
    }
    if (policy.tie_break != "summed-top1-probability") {
        throw ValidationError("unknown tie-break rule: " + policy.tie_break);
    }

    const std::string& doc_id = predictions.front().doc_id;
    std::set<std::string> model_ids;
    std::map<LabelId, int> votes;
    std::map<LabelId, double> summed_top1;
    for (const auto& p : predictions) {
        if (p.doc_id != doc_id) {
            throw ValidationError("predictions for different documents in one vote: " + doc_id +
                                  " vs " + p.doc_id);
        }
        if (!model_ids.insert(p.model_id).second) {
            throw ValidationError("duplicate model in vote: " + p.model_id);
        }
        if (p.ranked.empty()) {
            throw ValidationError("prediction without ranked labels: " + p.model_id);
        }
        votes[p.ranked.front().label] += 1;
        summed_top1[p.ranked.front().label] += p.ranked.front().probability;
    }

    int max_votes = 0;
    for (const auto& [label, count] : votes) max_votes = std::max(max_votes, count);

    std::vector<LabelId> contenders;
    for (const auto& [label, count] : votes) {
        if (count == max_votes) contenders.push_back(label);
    }
    // std::map iterates in label order, so contenders are already sorted by
    // label-space index; the probability tie-break keeps the first best.
    LabelId winner = contenders.front();
    for (LabelId label : contenders) {
        if (summed_top1[label] > summed_top1[winner]) winner = label;
    }

    if (max_votes < policy.min_votes) {
        return VoteRejection{doc_id, max_votes, total_models};
    }
    VoteResult result;
    result.doc_id = doc_id;
    result.label = winner;
    result.votes = max_votes;
    result.total_models = total_models;
    result.tie_broken = contenders.size() > 1;
    result.summed_probability = summed_top1[winner];
    return result;
}

AgreementStats agreement_stats(std::span<const VoteOutcome> outcomes) {
    AgreementStats stats;
    for (const auto& outcome : outcomes) {
        if (const auto* result = std::get_if<VoteResult>(&outcome)) {
            stats.votes_histogram[result->votes] += 1;
        } else {
            stats.rejections += 1;
        }
    }
    return stats;
}

std::map<LabelId, double> per_domain_agreement(
    std::span<const Prediction> predictions,
    const std::unordered_map<std::string, LabelId>& query_classes, std::string_view model_id) {
    std::map<LabelId, std::size_t> retrieved;
    std::map<LabelId, std::size_t> matching;
    for (const auto& p : predictions) {
        if (p.model_id != model_id) continue;
        auto it = query_classes.find(p.doc_id);
        if (it == query_classes.end()) {
            throw ValidationError("document without a query class: " + p.doc_id);
        }
        if (p.ranked.empty()) {
            throw ValidationError("prediction without ranked labels: " + p.doc_id);
        }
        retrieved[it->second] += 1;
        if (p.ranked.front().label == it->second) matching[it->second] += 1;
    }
    std::map<LabelId, double> agreement;
    for (const auto& [domain, count] : retrieved) {
        agreement[domain] =
            100.0 * static_cast<double>(matching[domain]) / static_cast<double>(count);
    }
    return agreement;
}

std::string prediction_to_json(const Prediction& prediction, const LabelSpace& labels) {
    json ranked = json::array();
    for (const auto& r : prediction.ranked) {
        ranked.push_back({{"label", labels.name(r.label)}, {"prob", r.probability}});
    }
    json j{{"doc_id", prediction.doc_id},
           {"model_id", prediction.model_id},
           {"scenario", std::string(to_tag(prediction.scenario))},
           {"ranked", std::move(ranked)}};
    return j.dump();
}

Prediction prediction_from_json(std::string_view line, const LabelSpace& labels) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw FormatError("prediction line is not a json object");
    }
    Prediction p;
    p.doc_id = j.at("doc_id").get<std::string>();
    p.model_id = j.at("model_id").get<std::string>();
    p.scenario = scenario_from_tag(j.at("scenario").get<std::string>());
    for (const auto& r : j.at("ranked")) {
        p.ranked.push_back(
            {labels.require(r.at("label").get<std::string>()), r.at("prob").get<double>()});
    }
    return p;
}

std::string vote_result_to_json(const VoteResult& result, const LabelSpace& labels) {
    json j{{"doc_id", result.doc_id},
           {"label", labels.name(result.label)},
           {"votes", result.votes},
           {"total_models", result.total_models},
           {"tie_broken", result.tie_broken},
           {"summed_probability", result.summed_probability}};
    return j.dump();
}

VoteResult vote_result_from_json(std::string_view line, const LabelSpace& labels) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw FormatError("vote line is not a json object");
    }
    VoteResult result;
    result.doc_id = j.at("doc_id").get<std::string>();
    result.label = labels.require(j.at("label").get<std::string>());
    result.votes = j.at("votes").get<int>();
    result.total_models = j.value("total_models", 0);
    result.tie_broken = j.at("tie_broken").get<bool>();
    result.summed_probability = j.at("summed_probability").get<double>();
    return result;
}

} // namespace scitext
