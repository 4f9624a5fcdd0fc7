#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scitext/labels.hpp"

namespace scitext {

// Square tally, rows = gold, columns = predicted, axes in label-space order.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(LabelSpace labels);

    void add(LabelId gold, LabelId predicted, std::size_t count = 1);

    std::size_t at(LabelId gold, LabelId predicted) const;
    std::size_t size() const { return labels_.size(); }
    std::size_t total() const;
    std::size_t trace() const;
    std::size_t row_total(LabelId gold) const;
    std::size_t col_total(LabelId predicted) const;

    const LabelSpace& labels() const { return labels_; }

private:
    std::size_t cell(LabelId gold, LabelId predicted) const;

    LabelSpace labels_;
    std::vector<std::size_t> counts_;
};

ConfusionMatrix confusion(std::span<const LabelId> golds, std::span<const LabelId> preds,
                          const LabelSpace& labels);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct MetricsReport {
    double micro_f1 = 0.0;
    double micro_precision = 0.0;
    double micro_recall = 0.0;
    double accuracy = 0.0;
    std::vector<ClassMetrics> per_class; // label-space order
    std::size_t n_examples = 0;
};

// Pooled true/false positives across classes. For single-label exhaustive
// predictions micro precision, recall, F1 and accuracy coincide exactly.
// Per-class 0/0 is defined as 0.
MetricsReport micro_metrics(const ConfusionMatrix& matrix);

// "0.8924 / 0.8924 / 0.8924 / 89%": micro F1, recall, precision at four
// decimals, accuracy as a rounded integer percent.
std::string format_metrics_row(const MetricsReport& report);

struct BaselineRow {
    std::string method;
    std::string dataset;
    std::string accuracy_text; // rendered verbatim
    double accuracy = 0.0;
};

// Delimited {method, dataset, accuracy} table of literature results.
std::vector<BaselineRow> load_baselines(const std::filesystem::path& path);

struct ComparisonDocument {
    std::string delimited; // csv, plain values
    std::string human;     // aligned table, per-column maxima wrapped in **
};

// Juxtaposes computed accuracies with supplied literature baselines, one row
// per method/model, one column per dataset.
ComparisonDocument render_comparison(
    const std::map<std::pair<std::string, std::string>, MetricsReport>& reports,
    std::span<const BaselineRow> baselines);

} // namespace scitext
