#include "support/oracles.hpp"

#include <cmath>

namespace scitext::testing {

OracleVote vote_oracle(const std::vector<Prediction>& predictions, int min_votes,
                       std::size_t label_count) {
    std::vector<int> counts(label_count, 0);
    std::vector<double> probs(label_count, 0.0);
    for (const auto& p : predictions) {
        counts[static_cast<std::size_t>(p.ranked.front().label)] += 1;
        probs[static_cast<std::size_t>(p.ranked.front().label)] += p.ranked.front().probability;
    }

    int max_votes = 0;
    for (int c : counts) max_votes = std::max(max_votes, c);

    int tied = 0;
    for (int c : counts) tied += (c == max_votes);

    std::size_t winner = label_count;
    for (std::size_t l = 0; l < label_count; ++l) {
        if (counts[l] != max_votes) continue;
        if (winner == label_count || probs[l] > probs[winner]) winner = l;
    }

    OracleVote result;
    result.votes = max_votes;
    result.tie_broken = tied > 1;
    result.label = static_cast<LabelId>(winner);
    result.summed_probability = probs[winner];
    result.accepted = max_votes >= min_votes;
    return result;
}

OracleMetrics metrics_recount(const std::vector<LabelId>& golds,
                              const std::vector<LabelId>& preds, std::size_t label_count) {
    std::vector<double> tp(label_count, 0.0);
    std::vector<double> fp(label_count, 0.0);
    std::vector<double> fn(label_count, 0.0);
    double correct = 0.0;
    for (std::size_t i = 0; i < golds.size(); ++i) {
        const auto g = static_cast<std::size_t>(golds[i]);
        const auto p = static_cast<std::size_t>(preds[i]);
        if (g == p) {
            tp[g] += 1.0;
            correct += 1.0;
        } else {
            fn[g] += 1.0;
            fp[p] += 1.0;
        }
    }

    OracleMetrics m;
    double tp_sum = 0.0;
    double fp_sum = 0.0;
    double fn_sum = 0.0;
    m.class_precision.resize(label_count);
    m.class_recall.resize(label_count);
    m.class_f1.resize(label_count);
    for (std::size_t l = 0; l < label_count; ++l) {
        m.class_precision[l] = (tp[l] + fp[l]) == 0.0 ? 0.0 : tp[l] / (tp[l] + fp[l]);
        m.class_recall[l] = (tp[l] + fn[l]) == 0.0 ? 0.0 : tp[l] / (tp[l] + fn[l]);
        const double den = 2.0 * tp[l] + fp[l] + fn[l];
        m.class_f1[l] = den == 0.0 ? 0.0 : 2.0 * tp[l] / den;
        tp_sum += tp[l];
        fp_sum += fp[l];
        fn_sum += fn[l];
    }
    m.micro_precision = (tp_sum + fp_sum) == 0.0 ? 0.0 : tp_sum / (tp_sum + fp_sum);
    m.micro_recall = (tp_sum + fn_sum) == 0.0 ? 0.0 : tp_sum / (tp_sum + fn_sum);
    const double den = 2.0 * tp_sum + fp_sum + fn_sum;
    m.micro_f1 = den == 0.0 ? 0.0 : 2.0 * tp_sum / den;
    m.accuracy = golds.empty() ? 0.0 : correct / static_cast<double>(golds.size());
    return m;
}

OracleEarlyStop early_stop_oracle(const std::vector<double>& scores, std::size_t patience,
                                  std::size_t max_epochs) {
    OracleEarlyStop out;
    std::size_t stale = 0;
    for (std::size_t epoch = 1; epoch <= max_epochs && epoch <= scores.size(); ++epoch) {
        const double score = scores[epoch - 1];
        out.epochs_run = epoch;
        if (epoch == 1 || score > out.best_score) {
            out.best_score = score;
            out.best_epoch = epoch;
            stale = 0;
        } else if (++stale >= patience) {
            break;
        }
    }
    return out;
}

std::vector<double> bayes_posterior_oracle(
    const std::vector<std::vector<std::int32_t>>& train_docs,
    const std::vector<LabelId>& train_labels, const std::vector<std::int32_t>& test_doc,
    std::size_t label_count, std::size_t vocab_size, double alpha) {
    std::vector<double> class_docs(label_count, 0.0);
    std::vector<std::vector<double>> token_counts(label_count,
                                                  std::vector<double>(vocab_size, 0.0));
    std::vector<double> token_totals(label_count, 0.0);
    for (std::size_t d = 0; d < train_docs.size(); ++d) {
        const auto l = static_cast<std::size_t>(train_labels[d]);
        class_docs[l] += 1.0;
        for (auto t : train_docs[d]) {
            token_counts[l][static_cast<std::size_t>(t)] += 1.0;
            token_totals[l] += 1.0;
        }
    }

    std::vector<double> joint(label_count, 0.0);
    double norm = 0.0;
    for (std::size_t l = 0; l < label_count; ++l) {
        double prob = class_docs[l] / static_cast<double>(train_docs.size());
        for (auto t : test_doc) {
            prob *= (token_counts[l][static_cast<std::size_t>(t)] + alpha) /
                    (token_totals[l] + alpha * static_cast<double>(vocab_size));
        }
        joint[l] = prob;
        norm += prob;
    }
    for (double& p : joint) p /= norm;
    return joint;
}

} // namespace scitext::testing
