#include "scitext/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace scitext {

ConfusionMatrix::ConfusionMatrix(LabelSpace labels)
    : labels_(std::move(labels)), counts_(labels_.size() * labels_.size(), 0) {
    if (labels_.empty()) {
        throw ValidationError("confusion matrix needs a non-empty label space");
    }
}

std::size_t ConfusionMatrix::cell(LabelId gold, LabelId predicted) const {
    if (gold < 0 || predicted < 0 || static_cast<std::size_t>(gold) >= labels_.size() ||
        static_cast<std::size_t>(predicted) >= labels_.size()) {
        throw ValidationError("label id outside the matrix label space");
    }
    return static_cast<std::size_t>(gold) * labels_.size() + static_cast<std::size_t>(predicted);
}

void ConfusionMatrix::add(LabelId gold, LabelId predicted, std::size_t count) {
    counts_[cell(gold, predicted)] += count;
}

std::size_t ConfusionMatrix::at(LabelId gold, LabelId predicted) const {
    return counts_[cell(gold, predicted)];
}

std::size_t ConfusionMatrix::total() const {
    std::size_t sum = 0;
    for (auto c : counts_) sum += c;
    return sum;
}

std::size_t ConfusionMatrix::trace() const {
    std::size_t sum = 0;
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        sum += counts_[i * labels_.size() + i];
    }
    return sum;
}

std::size_t ConfusionMatrix::row_total(LabelId gold) const {
    std::size_t sum = 0;
    for (std::size_t p = 0; p < labels_.size(); ++p) {
        sum += counts_[cell(gold, static_cast<LabelId>(p))];
    }
    return sum;
}

std::size_t ConfusionMatrix::col_total(LabelId predicted) const {
    std::size_t sum = 0;
    for (std::size_t g = 0; g < labels_.size(); ++g) {
        sum += counts_[cell(static_cast<LabelId>(g), predicted)];
    }
    return sum;
}

ConfusionMatrix confusion(std::span<const LabelId> golds, std::span<const LabelId> preds,
                          const LabelSpace& labels) {
    if (golds.size() != preds.size()) {
        throw ValidationError("gold and prediction lists differ in length");
    }
    ConfusionMatrix matrix(labels);
    for (std::size_t i = 0; i < golds.size(); ++i) {
        matrix.add(golds[i], preds[i]);
    }
    return matrix;
}

namespace {

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double f1_from_counts(double tp, double fp, double fn) {
    const double den = 2.0 * tp + fp + fn;
    return den == 0.0 ? 0.0 : 2.0 * tp / den;
}

} // namespace

MetricsReport micro_metrics(const ConfusionMatrix& matrix) {
    const std::size_t total = matrix.total();
    if (total == 0) {
        throw ValidationError("cannot compute metrics on an empty confusion matrix");
    }

    MetricsReport report;
    report.n_examples = total;

    double tp = 0.0;
    double fp = 0.0;
    double fn = 0.0;
    const std::size_t n = matrix.size();
    report.per_class.resize(n);
    for (std::size_t l = 0; l < n; ++l) {
        const auto id = static_cast<LabelId>(l);
        const double l_tp = static_cast<double>(matrix.at(id, id));
        const double l_fp = static_cast<double>(matrix.col_total(id)) - l_tp;
        const double l_fn = static_cast<double>(matrix.row_total(id)) - l_tp;
        report.per_class[l].precision = safe_div(l_tp, l_tp + l_fp);
        report.per_class[l].recall = safe_div(l_tp, l_tp + l_fn);
        report.per_class[l].f1 = f1_from_counts(l_tp, l_fp, l_fn);
        tp += l_tp;
        fp += l_fp;
        fn += l_fn;
    }

    report.micro_precision = safe_div(tp, tp + fp);
    report.micro_recall = safe_div(tp, tp + fn);
    report.micro_f1 = f1_from_counts(tp, fp, fn);
    report.accuracy =
        static_cast<double>(matrix.trace()) / static_cast<double>(total);
    return report;
}

std::string format_metrics_row(const MetricsReport& report) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << report.micro_f1 << " / " << report.micro_recall
       << " / " << report.micro_precision << " / "
       << static_cast<long long>(std::llround(report.accuracy * 100.0)) << '%';
    return os.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field.push_back(c);
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

std::string trimmed(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    std::size_t e = s.find_last_not_of(" \t");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

} // namespace

std::vector<BaselineRow> load_baselines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open baselines file: " + path.string());
    }
    std::vector<BaselineRow> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trimmed(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (first) {
            first = false;
            // Header row is optional; skip it when it names the columns.
            if (fields.size() >= 3 && trimmed(fields[0]) == "method") continue;
        }
        if (fields.size() < 3) {
            throw FormatError("baselines row needs {method, dataset, accuracy}: " + line);
        }
        BaselineRow row;
        row.method = trimmed(fields[0]);
        row.dataset = trimmed(fields[1]);
        row.accuracy_text = trimmed(fields[2]);
        try {
            row.accuracy = std::stod(row.accuracy_text);
        } catch (const std::exception&) {
            throw FormatError("baselines accuracy is not numeric: " + row.accuracy_text);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

ComparisonDocument render_comparison(
    const std::map<std::pair<std::string, std::string>, MetricsReport>& reports,
    std::span<const BaselineRow> baselines) {
    // Columns: datasets in baseline order of first appearance, then any
    // report-only datasets sorted by name.
    std::vector<std::string> datasets;
    auto add_dataset = [&](const std::string& d) {
        if (std::find(datasets.begin(), datasets.end(), d) == datasets.end()) {
            datasets.push_back(d);
        }
    };
    for (const auto& b : baselines) add_dataset(b.dataset);
    {
        std::set<std::string> report_datasets;
        for (const auto& [key, report] : reports) report_datasets.insert(key.second);
        for (const auto& d : report_datasets) add_dataset(d);
    }

    struct Row {
        std::string method;
        std::vector<std::string> cells;  // rendered text, "-" when absent
        std::vector<double> values;      // NaN when absent
    };

    const double nan = std::nan("");
    std::vector<Row> rows;
    auto row_for = [&](const std::string& method) -> Row& {
        for (auto& r : rows) {
            if (r.method == method) return r;
        }
        rows.push_back({method, std::vector<std::string>(datasets.size(), "-"),
                        std::vector<double>(datasets.size(), nan)});
        return rows.back();
    };
    auto dataset_index = [&](const std::string& d) {
        return static_cast<std::size_t>(
            std::find(datasets.begin(), datasets.end(), d) - datasets.begin());
    };

    for (const auto& b : baselines) {
        Row& row = row_for(b.method);
        const std::size_t d = dataset_index(b.dataset);
        row.cells[d] = b.accuracy_text; // verbatim
        row.values[d] = b.accuracy;
    }
    for (const auto& [key, report] : reports) {
        Row& row = row_for(key.first);
        const std::size_t d = dataset_index(key.second);
        std::ostringstream cell;
        cell << std::fixed << std::setprecision(2) << report.accuracy * 100.0;
        row.cells[d] = cell.str();
        row.values[d] = report.accuracy * 100.0;
    }

    // Per-column maxima; equal values are all bolded.
    std::vector<double> col_max(datasets.size(), nan);
    for (const auto& row : rows) {
        for (std::size_t d = 0; d < datasets.size(); ++d) {
            if (!std::isnan(row.values[d]) &&
                (std::isnan(col_max[d]) || row.values[d] > col_max[d])) {
                col_max[d] = row.values[d];
            }
        }
    }

    ComparisonDocument doc;
    {
        std::ostringstream csv;
        csv << "method";
        for (const auto& d : datasets) csv << ',' << csv_escape(d);
        csv << '\n';
        for (const auto& row : rows) {
            csv << csv_escape(row.method);
            for (const auto& cell : row.cells) csv << ',' << csv_escape(cell);
            csv << '\n';
        }
        doc.delimited = csv.str();
    }
    {
        std::vector<std::vector<std::string>> table;
        std::vector<std::string> header{"Method"};
        header.insert(header.end(), datasets.begin(), datasets.end());
        table.push_back(std::move(header));
        for (const auto& row : rows) {
            std::vector<std::string> cells{row.method};
            for (std::size_t d = 0; d < datasets.size(); ++d) {
                const bool bold = !std::isnan(row.values[d]) && row.values[d] == col_max[d];
                cells.push_back(bold ? "**" + row.cells[d] + "**" : row.cells[d]);
            }
            table.push_back(std::move(cells));
        }

        std::vector<std::size_t> widths(table.front().size(), 0);
        for (const auto& r : table) {
            for (std::size_t c = 0; c < r.size(); ++c) widths[c] = std::max(widths[c], r[c].size());
        }
        std::ostringstream text;
        for (std::size_t i = 0; i < table.size(); ++i) {
            for (std::size_t c = 0; c < table[i].size(); ++c) {
                text << (c == 0 ? "| " : " | ") << std::left << std::setw(static_cast<int>(widths[c]))
                     << table[i][c];
            }
            text << " |\n";
            if (i == 0) {
                for (std::size_t c = 0; c < widths.size(); ++c) {
                    text << (c == 0 ? "|" : "|") << std::string(widths[c] + 2, '-');
                }
                text << "|\n";
            }
        }
        doc.human = text.str();
    }
    return doc;
}

} // namespace scitext
