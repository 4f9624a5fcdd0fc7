#include "scitext/backend.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace scitext {

namespace {

using nlohmann::json;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open file: " + path.string());
    }
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw FormatError("file is not valid json: " + path.string());
    }
    return j;
}

void write_json_file(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write file: " + path.string());
    }
    out << j.dump(2) << '\n';
}

} // namespace

LightweightBackend::LightweightBackend(std::string model_id,
                                       std::shared_ptr<const WordTokenizer> tokenizer,
                                       LabelSpace labels, double alpha, double refit_gain)
    : model_id_(std::move(model_id)),
      tokenizer_(std::move(tokenizer)),
      labels_(std::move(labels)),
      alpha_(alpha),
      refit_gain_(refit_gain) {
    if (!tokenizer_) {
        throw ValidationError("lightweight backend needs a tokenizer");
    }
    if (labels_.empty()) {
        throw ValidationError("lightweight backend needs a non-empty label space");
    }
    if (!(alpha_ > 0.0)) {
        throw ValidationError("smoothing constant alpha must be positive");
    }
    if (!(refit_gain_ > 0.0)) {
        throw ValidationError("refit gain must be positive");
    }
    const std::size_t n_labels = labels_.size();
    class_weight_.assign(n_labels, 0.0);
    token_weight_.assign(n_labels, std::vector<double>(tokenizer_->vocab_size(), 0.0));
    token_total_.assign(n_labels, 0.0);
}

double LightweightBackend::class_log_prior(LabelId label) const {
    const auto l = static_cast<std::size_t>(label);
    double total = 0.0;
    for (double w : class_weight_) total += w;
    if (total <= 0.0) {
        return -std::log(static_cast<double>(labels_.size()));
    }
    return class_weight_[l] > 0.0 ? std::log(class_weight_[l] / total) : kNegInf;
}

double LightweightBackend::token_log_likelihood(LabelId label, std::int32_t token_id) const {
    const auto l = static_cast<std::size_t>(label);
    const double v = static_cast<double>(tokenizer_->vocab_size());
    const double count = token_weight_[l][static_cast<std::size_t>(token_id)];
    return std::log((count + alpha_) / (token_total_[l] + alpha_ * v));
}

std::vector<double> LightweightBackend::log_posterior(const EncodedExample& example) const {
    if (example.tokenizer_fingerprint != tokenizer_->fingerprint()) {
        throw ValidationError("example was encoded with a different tokenizer than backend '" +
                              model_id_ + "'");
    }
    const std::size_t n_labels = labels_.size();
    std::vector<double> score(n_labels);
    for (std::size_t l = 0; l < n_labels; ++l) {
        score[l] = class_log_prior(static_cast<LabelId>(l));
    }
    const std::size_t n = std::min(example.input_ids.size(), example.attention_mask.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (!example.attention_mask[i]) break; // mask is a prefix
        const std::int32_t id = example.input_ids[i];
        if (tokenizer_->is_special(id) && id != tokenizer_->unk_id()) continue;
        for (std::size_t l = 0; l < n_labels; ++l) {
            if (score[l] == kNegInf) continue;
            score[l] += token_log_likelihood(static_cast<LabelId>(l), id);
        }
    }
    return score;
}

std::vector<std::vector<double>> LightweightBackend::predict_proba(
    std::span<const EncodedExample> batch) const {
    if (batch.empty()) {
        throw ValidationError("predict_proba called with an empty batch");
    }
    std::vector<std::vector<double>> out;
    out.reserve(batch.size());
    for (const auto& example : batch) {
        auto score = log_posterior(example);
        double max_score = kNegInf;
        for (double s : score) max_score = std::max(max_score, s);

        std::vector<double> probs(score.size(), 0.0);
        double norm = 0.0;
        for (std::size_t l = 0; l < score.size(); ++l) {
            if (score[l] != kNegInf) {
                probs[l] = std::exp(score[l] - max_score);
                norm += probs[l];
            }
        }
        for (double& p : probs) p /= norm;
        out.push_back(std::move(probs));
    }
    return out;
}

void LightweightBackend::accumulate(std::span<const EncodedExample> batch, double weight) {
    if (weight == 0.0) return;
    for (const auto& example : batch) {
        if (!example.label_index) {
            throw ValidationError("training example without a label");
        }
        const auto l = static_cast<std::size_t>(*example.label_index);
        if (l >= labels_.size()) {
            throw ValidationError("label index out of range: " + std::to_string(l));
        }
        class_weight_[l] += weight;
        const std::size_t n = std::min(example.input_ids.size(), example.attention_mask.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (!example.attention_mask[i]) break;
            const std::int32_t id = example.input_ids[i];
            if (tokenizer_->is_special(id) && id != tokenizer_->unk_id()) continue;
            token_weight_[l][static_cast<std::size_t>(id)] += weight;
            token_total_[l] += weight;
        }
    }
}

double LightweightBackend::fine_tune_step(std::span<const EncodedExample> batch,
                                          double learning_rate) {
    if (batch.empty()) {
        throw ValidationError("fine_tune_step called with an empty batch");
    }
    // Loss under the pre-step parameters, so a zero learning rate leaves both
    // the parameters and the reported loss untouched.
    auto probs = predict_proba(batch);
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (!batch[i].label_index) {
            throw ValidationError("training example without a label");
        }
        const auto l = static_cast<std::size_t>(*batch[i].label_index);
        if (l >= labels_.size()) {
            throw ValidationError("label index out of range: " + std::to_string(l));
        }
        loss += -std::log(std::max(probs[i][l], 1e-300));
    }
    loss /= static_cast<double>(batch.size());

    accumulate(batch, learning_rate * refit_gain_);
    return loss;
}

std::unique_ptr<ClassifierBackend> LightweightBackend::clone() const {
    return std::make_unique<LightweightBackend>(*this);
}

void LightweightBackend::fit(std::span<const EncodedExample> examples) {
    accumulate(examples, 1.0);
}

void LightweightBackend::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    tokenizer_->save_vocab(dir / "vocab.txt");

    json weights;
    weights["alpha"] = alpha_;
    weights["refit_gain"] = refit_gain_;
    weights["class_weight"] = class_weight_;
    weights["token_total"] = token_total_;
    json per_label = json::array();
    for (const auto& row : token_weight_) {
        json entries = json::array();
        for (std::size_t t = 0; t < row.size(); ++t) {
            if (row[t] != 0.0) entries.push_back(json::array({t, row[t]}));
        }
        per_label.push_back(std::move(entries));
    }
    weights["token_weight"] = std::move(per_label);
    write_json_file(weights, dir / "weights.json");

    json descriptor;
    descriptor["model_id"] = model_id_;
    descriptor["kind"] = "lightweight";
    descriptor["tokenizer_vocab"] = "vocab.txt";
    descriptor["weights"] = "weights.json";
    descriptor["labels"] = labels_.names();
    write_json_file(descriptor, dir / "descriptor.json");
}

LightweightBackend LightweightBackend::load(const std::filesystem::path& dir) {
    const json descriptor = read_json_file(dir / "descriptor.json");
    const std::string kind = descriptor.value("kind", "lightweight");
    if (kind != "lightweight") {
        throw FormatError("unsupported backend kind: " + kind);
    }
    auto tokenizer = std::make_shared<const WordTokenizer>(
        WordTokenizer::from_vocab_file(dir / descriptor.at("tokenizer_vocab").get<std::string>()));
    LabelSpace labels(descriptor.at("labels").get<std::vector<std::string>>());

    const json weights = read_json_file(dir / descriptor.at("weights").get<std::string>());
    LightweightBackend backend(descriptor.at("model_id").get<std::string>(), tokenizer,
                               std::move(labels), weights.at("alpha").get<double>(),
                               weights.value("refit_gain", 1e6));
    backend.class_weight_ = weights.at("class_weight").get<std::vector<double>>();
    backend.token_total_ = weights.at("token_total").get<std::vector<double>>();
    const auto& per_label = weights.at("token_weight");
    if (backend.class_weight_.size() != backend.labels_.size() ||
        backend.token_total_.size() != backend.labels_.size() ||
        per_label.size() != backend.labels_.size()) {
        throw FormatError("weights file does not match the label space: " + dir.string());
    }
    for (std::size_t l = 0; l < per_label.size(); ++l) {
        for (const auto& entry : per_label[l]) {
            const auto t = entry.at(0).get<std::size_t>();
            if (t >= backend.tokenizer_->vocab_size()) {
                throw FormatError("token id outside vocabulary in weights file");
            }
            backend.token_weight_[l][t] = entry.at(1).get<double>();
        }
    }
    return backend;
}

LightweightBackend train_lightweight(const DatasetBundle& bundle, Scenario scenario,
                                     std::size_t max_len, double alpha, std::string model_id,
                                     LabelSpace label_space) {
    if (bundle.train.empty()) {
        throw ValidationError("train partition is empty");
    }

    LabelSpace space = std::move(label_space);
    if (space.empty()) {
        // No configured space: derive it from the gold labels seen in train.
        std::vector<std::string> names;
        for (const auto& doc : bundle.train) {
            if (doc.gold_label &&
                std::find(names.begin(), names.end(), *doc.gold_label) == names.end()) {
                names.push_back(*doc.gold_label);
            }
        }
        std::sort(names.begin(), names.end());
        space = LabelSpace(names);
    }

    std::vector<std::string> texts;
    std::vector<LabelId> labels_of;
    texts.reserve(bundle.train.size());
    for (const auto& doc : bundle.train) {
        if (!doc.gold_label) {
            throw ValidationError("unlabeled document in train partition: " + doc.id);
        }
        texts.push_back(compose_input(doc, scenario));
        labels_of.push_back(space.require(*doc.gold_label));
    }

    auto tokenizer = std::make_shared<const WordTokenizer>(WordTokenizer::from_texts(texts));
    LightweightBackend backend(std::move(model_id), tokenizer, space, alpha);

    std::vector<EncodedExample> examples;
    examples.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        examples.push_back(encode(texts[i], *tokenizer, max_len, labels_of[i]));
    }
    backend.fit(examples);
    return backend;
}

} // namespace scitext
