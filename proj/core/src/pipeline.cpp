#include "scitext/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "scitext/backend.hpp"
#include "scitext/evaluation.hpp"

namespace scitext {

namespace {

using nlohmann::json;

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
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write file: " + path.string());
    }
    out << j.dump(2) << '\n';
}

void write_text_file(const std::string& text, const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write file: " + path.string());
    }
    out << text;
}

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%FT%TZ", &tm);
    return buf;
}

void require_artifact(const std::filesystem::path& path, const std::string& what,
                      const std::string& producer) {
    if (!std::filesystem::exists(path)) {
        throw MissingArtifactError("missing " + what + ": " + path.string() + " (run `" +
                                   producer + "` first)");
    }
}

Corpus load_artifact_corpus(const std::filesystem::path& path, const LabelSpace& labels) {
    auto result = load_corpus(path, RecordFormat::jsonl, labels);
    if (!result.errors.empty()) {
        throw FormatError("corrupt corpus artifact " + path.string() + ": " +
                          result.errors.front().reason);
    }
    return std::move(result.corpus);
}

std::string format_lr(double lr) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", lr);
    return buf;
}

// Tracks one stage: wall-clock bounds plus the outputs line appended to the
// experiment record on finish.
class StageScope {
public:
    StageScope(const RunConfig& config, std::string stage)
        : config_(config), stage_(std::move(stage)), started_(iso_timestamp()) {
        std::filesystem::create_directories(config_.run_dir);
    }

    void finish(const json& outputs) {
        append_experiment_record(config_, stage_, outputs.dump(), started_, iso_timestamp());
        std::cout << "[" << stage_ << "] done " << outputs.dump() << "\n";
    }

private:
    const RunConfig& config_;
    std::string stage_;
    std::string started_;
};

json per_class_json(const Corpus& corpus) {
    json counts = json::object();
    const auto tally = corpus.per_class_counts();
    for (std::size_t l = 0; l < tally.size(); ++l) {
        counts[corpus.label_space.name(static_cast<LabelId>(l))] = tally[l];
    }
    return counts;
}

void save_documents(const std::vector<Document>& docs, const LabelSpace& labels,
                    const std::string& name, const std::filesystem::path& path) {
    Corpus view;
    view.name = name;
    view.label_space = labels;
    view.documents = docs;
    std::filesystem::create_directories(path.parent_path());
    save_corpus(view, path);
}

bool subsample_keeps(std::uint64_t run_seed, std::uint64_t subsample_seed, std::string_view id,
                     double fraction) {
    if (fraction >= 1.0) return true;
    const std::uint64_t key = shuffle_key(mix64(run_seed) ^ mix64(subsample_seed + 1), id);
    constexpr std::uint64_t kBuckets = 1u << 20;
    return static_cast<double>(key % kBuckets) < fraction * static_cast<double>(kBuckets);
}

std::vector<BackendDescriptor> select_backends(const RunConfig& config,
                                               const std::vector<std::string>& only) {
    if (only.empty()) return config.backends;
    std::vector<BackendDescriptor> out;
    for (const auto& id : only) {
        auto it = std::find_if(config.backends.begin(), config.backends.end(),
                               [&](const BackendDescriptor& b) { return b.id == id; });
        if (it == config.backends.end()) {
            throw ConfigError("unknown backend id: " + id);
        }
        out.push_back(*it);
    }
    return out;
}

struct ComposedDocs {
    std::vector<std::string> ids;
    std::vector<std::string> texts;
    std::vector<std::optional<std::int32_t>> label_indices;
    std::vector<std::string> skipped; // unusable for this scenario
};

ComposedDocs compose_documents(const std::vector<Document>& docs, Scenario scenario,
                               const LabelSpace& labels) {
    ComposedDocs out;
    out.ids.reserve(docs.size());
    for (const auto& doc : docs) {
        std::string text;
        try {
            text = compose_input(doc, scenario);
        } catch (const ValidationError&) {
            out.skipped.push_back(doc.id);
            continue;
        }
        out.ids.push_back(doc.id);
        out.texts.push_back(std::move(text));
        if (doc.gold_label) {
            out.label_indices.emplace_back(labels.require(*doc.gold_label));
        } else {
            out.label_indices.emplace_back(std::nullopt);
        }
    }
    return out;
}

std::vector<EncodedExample> encode_all(const ComposedDocs& docs, const Tokenizer& tokenizer,
                                       std::size_t max_len) {
    std::vector<EncodedExample> examples;
    examples.reserve(docs.texts.size());
    for (std::size_t i = 0; i < docs.texts.size(); ++i) {
        examples.push_back(encode(docs.texts[i], tokenizer, max_len, docs.label_indices[i]));
    }
    return examples;
}

DatasetBundle load_bundle(const RunConfig& config, const std::filesystem::path& splits_dir) {
    const LabelSpace labels = config.labels();
    for (const char* part : {"train.jsonl", "validation.jsonl", "test.jsonl"}) {
        require_artifact(splits_dir / part, "splits", "scitext split");
    }
    DatasetBundle bundle;
    bundle.seed = config.seed;
    bundle.ratios = config.ratios;
    bundle.train = load_artifact_corpus(splits_dir / "train.jsonl", labels).documents;
    bundle.validation = load_artifact_corpus(splits_dir / "validation.jsonl", labels).documents;
    bundle.test = load_artifact_corpus(splits_dir / "test.jsonl", labels).documents;
    return bundle;
}

void save_bundle(const DatasetBundle& bundle, const LabelSpace& labels,
                 const std::string& dataset, const std::filesystem::path& splits_dir) {
    save_documents(bundle.train, labels, dataset, splits_dir / "train.jsonl");
    save_documents(bundle.validation, labels, dataset, splits_dir / "validation.jsonl");
    save_documents(bundle.test, labels, dataset, splits_dir / "test.jsonl");
    json summary{{"dataset", dataset},
                 {"seed", bundle.seed},
                 {"ratios",
                  {{"train", bundle.ratios.train},
                   {"validation", bundle.ratios.validation},
                   {"test", bundle.ratios.test}}},
                 {"sizes",
                  {{"train", bundle.train.size()},
                   {"validation", bundle.validation.size()},
                   {"test", bundle.test.size()}}}};
    write_json_file(summary, splits_dir / "summary.json");
}

} // namespace

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    const json j = read_json_file(path);
    if (!j.is_object()) {
        throw ConfigError("run config must be a json object: " + path.string());
    }

    RunConfig config;
    try {
        config.dataset_name = j.value("dataset_name", std::string("corpus"));
        config.label_space = j.at("label_space").get<std::vector<std::string>>();
        config.scenario = scenario_from_tag(j.value("scenario", "abstract_and_keywords"));
        config.seed = j.value("seed", std::uint64_t{7});
        config.max_len = j.value("max_len", std::size_t{512});
        if (j.contains("run_dir")) config.run_dir = j.at("run_dir").get<std::string>();

        const json& corpus = j.at("corpus");
        config.corpus.labeled = corpus.at("labeled").get<std::string>();
        config.corpus.labeled_format = corpus.value("labeled_format", std::string("jsonl"));
        if (corpus.contains("unlabeled")) {
            config.corpus.unlabeled = corpus.at("unlabeled").get<std::string>();
            config.corpus.unlabeled_format =
                corpus.value("unlabeled_format", std::string("jsonl"));
        }
        if (corpus.contains("baselines")) {
            config.corpus.baselines = corpus.at("baselines").get<std::string>();
        }

        if (j.contains("split")) {
            const json& split = j.at("split");
            config.ratios.train = split.value("train", 0.8);
            config.ratios.validation = split.value("validation", 0.1);
            config.ratios.test = split.value("test", 0.1);
        }

        for (const json& b : j.at("backends")) {
            BackendDescriptor d;
            d.id = b.at("id").get<std::string>();
            d.kind = b.value("kind", std::string("lightweight"));
            d.alpha = b.value("alpha", 1.0);
            d.subsample_fraction = b.value("subsample_fraction", 1.0);
            d.subsample_seed = b.value("subsample_seed", std::uint64_t{0});
            config.backends.push_back(std::move(d));
        }

        if (j.contains("training")) {
            const json& t = j.at("training");
            if (t.contains("learning_rates")) {
                config.training.learning_rates = t.at("learning_rates").get<std::vector<double>>();
            }
            config.training.adam_epsilon = t.value("adam_epsilon", 1e-8);
            config.training.max_epochs = t.value("max_epochs", std::size_t{20});
            config.training.warmup_fraction = t.value("warmup_fraction", 1e-4);
            config.training.patience = t.value("patience", std::size_t{3});
            config.training.batch_size = t.value("batch_size", std::size_t{16});
        }
        config.training.seed = config.seed;

        if (j.contains("vote")) {
            const json& v = j.at("vote");
            config.vote.min_votes = v.value("min_votes", 2);
            config.vote.tie_break = v.value("tie_break", std::string("summed-top1-probability"));
        }
    } catch (const json::exception& e) {
        throw ConfigError("malformed run config " + path.string() + ": " + e.what());
    }
    return config;
}

void RunConfig::validate(bool check_paths) const {
    if (label_space.empty()) {
        throw ConfigError("label_space is empty");
    }
    try {
        LabelSpace space(label_space);
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
    if (dataset_name.empty() || dataset_name.find_first_of(",\"\n") != std::string::npos) {
        throw ConfigError("dataset_name must be non-empty and free of commas, quotes, newlines");
    }
    if (backends.empty()) {
        throw ConfigError("at least one backend is required");
    }
    std::vector<std::string> ids;
    for (const auto& b : backends) {
        if (b.id.empty() ||
            b.id.find_first_not_of(
                "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-") !=
                std::string::npos) {
            throw ConfigError("backend id must be non-empty [A-Za-z0-9_-]: '" + b.id + "'");
        }
        if (std::find(ids.begin(), ids.end(), b.id) != ids.end()) {
            throw ConfigError("duplicate backend id: " + b.id);
        }
        ids.push_back(b.id);
        if (b.kind != "lightweight") {
            throw ConfigError("unsupported backend kind: " + b.kind);
        }
        if (!(b.alpha > 0.0)) {
            throw ConfigError("backend alpha must be positive: " + b.id);
        }
        if (!(b.subsample_fraction > 0.0) || b.subsample_fraction > 1.0) {
            throw ConfigError("subsample_fraction must be in (0, 1]: " + b.id);
        }
    }
    if (vote.min_votes < 1 || vote.min_votes > static_cast<int>(backends.size())) {
        throw ConfigError("vote.min_votes must be between 1 and the number of backends");
    }
    if (max_len < 3) {
        throw ConfigError("max_len must be at least 3");
    }
    if (std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9 ||
        ratios.train < 0 || ratios.validation < 0 || ratios.test < 0) {
        throw ConfigError("split ratios must be non-negative and sum to 1");
    }
    try {
        training.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }

    if (check_paths) {
        if (corpus.labeled.empty() || !std::filesystem::exists(corpus.labeled)) {
            throw ConfigError("labeled corpus path does not exist: " + corpus.labeled.string());
        }
        if (!corpus.unlabeled.empty() && !std::filesystem::exists(corpus.unlabeled)) {
            throw ConfigError("unlabeled corpus path does not exist: " +
                              corpus.unlabeled.string());
        }
        if (!corpus.baselines.empty() && !std::filesystem::exists(corpus.baselines)) {
            throw ConfigError("baselines path does not exist: " + corpus.baselines.string());
        }
    }
}

std::string RunConfig::fingerprint() const {
    json j;
    j["dataset_name"] = dataset_name;
    j["label_space"] = label_space;
    j["scenario"] = std::string(to_tag(scenario));
    j["corpus"] = {{"labeled", corpus.labeled.string()},
                   {"labeled_format", corpus.labeled_format},
                   {"unlabeled", corpus.unlabeled.string()},
                   {"unlabeled_format", corpus.unlabeled_format},
                   {"baselines", corpus.baselines.string()}};
    j["split"] = {{"train", ratios.train},
                  {"validation", ratios.validation},
                  {"test", ratios.test}};
    json backends_json = json::array();
    for (const auto& b : backends) {
        backends_json.push_back({{"id", b.id},
                                 {"kind", b.kind},
                                 {"alpha", b.alpha},
                                 {"subsample_fraction", b.subsample_fraction},
                                 {"subsample_seed", b.subsample_seed}});
    }
    j["backends"] = std::move(backends_json);
    j["training"] = {{"learning_rates", training.learning_rates},
                     {"adam_epsilon", training.adam_epsilon},
                     {"max_epochs", training.max_epochs},
                     {"warmup_fraction", training.warmup_fraction},
                     {"patience", training.patience},
                     {"batch_size", training.batch_size}};
    j["vote"] = {{"min_votes", vote.min_votes}, {"tie_break", vote.tie_break}};
    j["max_len"] = max_len;
    j["seed"] = seed;

    std::ostringstream hex;
    hex << std::hex << fnv1a64(j.dump());
    return hex.str();
}

void append_experiment_record(const RunConfig& config, const std::string& stage,
                              const std::string& outputs_json, const std::string& started,
                              const std::string& finished) {
    json record;
    record["run_id"] = config.fingerprint();
    record["stage"] = stage;
    record["config_fingerprint"] = config.fingerprint();
    record["started"] = started;
    record["finished"] = finished;
    record["outputs"] = json::parse(outputs_json);

    std::filesystem::create_directories(config.run_dir);
    std::ofstream out(config.run_dir / "experiment.jsonl", std::ios::binary | std::ios::app);
    if (!out) {
        throw IoError("cannot append to experiment record in " + config.run_dir.string());
    }
    out << record.dump() << '\n';
}

void cmd_ingest(const RunConfig& config) {
    config.validate(true);
    StageScope stage(config, "ingest");
    const LabelSpace labels = config.labels();

    auto labeled = load_corpus(config.corpus.labeled,
                               record_format_from_tag(config.corpus.labeled_format), labels,
                               config.dataset_name);
    auto deduped = deduplicate(labeled.corpus);

    const auto corpus_dir = config.run_dir / "corpus";
    std::filesystem::create_directories(corpus_dir);
    save_corpus(deduped.corpus, corpus_dir / "labeled.jsonl");

    json report;
    report["labeled_records"] = labeled.corpus.documents.size() + labeled.errors.size();
    report["labeled_documents"] = deduped.corpus.documents.size();
    report["labeled_duplicates_removed"] = deduped.removed_count;
    report["per_class_counts"] = per_class_json(deduped.corpus);
    json errors = json::array();
    for (const auto& e : labeled.errors) {
        errors.push_back({{"record", e.record_number}, {"reason", e.reason}});
    }
    report["record_errors"] = std::move(errors);

    if (!config.corpus.unlabeled.empty()) {
        auto unlabeled = load_corpus(config.corpus.unlabeled,
                                     record_format_from_tag(config.corpus.unlabeled_format),
                                     labels, config.dataset_name + "-unlabeled");
        for (auto& doc : unlabeled.corpus.documents) doc.source = DocumentSource::retrieved;
        auto unlabeled_deduped = deduplicate(unlabeled.corpus);
        save_corpus(unlabeled_deduped.corpus, corpus_dir / "unlabeled.jsonl");
        report["unlabeled_documents"] = unlabeled_deduped.corpus.documents.size();
        report["unlabeled_duplicates_removed"] = unlabeled_deduped.removed_count;
        json uerrors = json::array();
        for (const auto& e : unlabeled.errors) {
            uerrors.push_back({{"record", e.record_number}, {"reason", e.reason}});
        }
        report["unlabeled_record_errors"] = std::move(uerrors);
    }

    write_json_file(report, corpus_dir / "ingest_report.json");
    stage.finish(report);
}

void cmd_split(const RunConfig& config, const std::string& corpus_file,
               const std::string& splits_dir) {
    config.validate(false);
    StageScope stage(config, "split");

    const auto corpus_path = config.run_dir / corpus_file;
    require_artifact(corpus_path, "ingested corpus", "scitext ingest");
    auto corpus = load_artifact_corpus(corpus_path, config.labels());

    auto bundle = split(corpus, config.ratios, config.seed);
    save_bundle(bundle, corpus.label_space, config.dataset_name, config.run_dir / splits_dir);

    json outputs{{"dataset", config.dataset_name},
                 {"train", bundle.train.size()},
                 {"validation", bundle.validation.size()},
                 {"test", bundle.test.size()}};
    stage.finish(outputs);
}

void cmd_train(const RunConfig& config, const std::vector<std::string>& only_backends,
               const std::string& splits_dir, const std::string& models_dir) {
    config.validate(false);
    StageScope stage(config, "train");
    const LabelSpace labels = config.labels();

    auto bundle = load_bundle(config, config.run_dir / splits_dir);
    if (bundle.validation.empty()) {
        throw ValidationError("validation split is empty; adjust split ratios");
    }

    auto val_composed = compose_documents(bundle.validation, config.scenario, labels);

    TrainConfig train_config = config.training;
    train_config.seed = config.seed;

    json outputs = json::object();
    for (const auto& descriptor : select_backends(config, only_backends)) {
        std::vector<Document> subsample;
        for (const auto& doc : bundle.train) {
            if (subsample_keeps(config.seed, descriptor.subsample_seed, doc.id,
                                descriptor.subsample_fraction)) {
                subsample.push_back(doc);
            }
        }
        if (subsample.empty()) {
            throw ValidationError("subsample for backend '" + descriptor.id + "' is empty");
        }

        auto composed = compose_documents(subsample, config.scenario, labels);
        auto tokenizer = std::make_shared<const WordTokenizer>(
            WordTokenizer::from_texts(composed.texts));

        FineTuneData data;
        data.train = encode_all(composed, *tokenizer, config.max_len);
        data.validation = encode_all(val_composed, *tokenizer, config.max_len);
        for (const auto& example : data.train) {
            if (!example.label_index) {
                throw ValidationError("unlabeled document in train split");
            }
        }

        BackendFactory factory = [&]() {
            return std::make_unique<LightweightBackend>(descriptor.id, tokenizer, labels,
                                                        descriptor.alpha);
        };
        auto search = lr_search(factory, data, train_config);

        const auto models_root = config.run_dir / models_dir;
        json runs = json::object();
        for (const auto& [lr, outcome] : search.per_lr) {
            const std::string run_name =
                descriptor.id + "-" + format_lr(lr) + "-" + std::to_string(config.seed);
            const auto run_dir = models_root / run_name;
            std::filesystem::create_directories(run_dir);

            std::ofstream trace(run_dir / "trace.jsonl", std::ios::binary);
            for (const auto& record : outcome.trace) {
                json line{{"epoch", record.epoch},
                          {"train_loss", record.train_loss},
                          {"val_micro_f1", record.val_micro_f1},
                          {"learning_rate", record.learning_rate}};
                trace << line.dump() << '\n';
            }
            trace.close();

            auto* snapshot = dynamic_cast<const LightweightBackend*>(outcome.best.backend.get());
            if (snapshot == nullptr) {
                throw ValidationError("checkpoint backend is not a lightweight model");
            }
            snapshot->save(run_dir);

            runs[format_lr(lr)] = {{"run_dir", run_name},
                                   {"best_epoch", outcome.best.epoch},
                                   {"val_micro_f1", outcome.best.val_micro_f1},
                                   {"epochs_run", outcome.trace.size()}};
        }

        const auto& best = search.per_lr.at(search.best_lr);
        json summary;
        summary["model_id"] = descriptor.id;
        summary["best_lr"] = search.best_lr;
        summary["best_val_micro_f1"] = best.best.val_micro_f1;
        summary["best_epoch"] = best.best.epoch;
        summary["best_run"] =
            descriptor.id + "-" + format_lr(search.best_lr) + "-" + std::to_string(config.seed);
        summary["config_fingerprint"] = best.best.config_fingerprint;
        summary["runs"] = std::move(runs);
        summary["diverged"] = search.diverged;
        summary["subsample_size"] = subsample.size();
        summary["vocab_size"] = tokenizer->vocab_size();
        summary["skipped_documents"] = composed.skipped.size();
        write_json_file(summary, models_root / descriptor.id / "summary.json");

        outputs[descriptor.id] = {{"best_lr", search.best_lr},
                                  {"best_val_micro_f1", best.best.val_micro_f1},
                                  {"subsample_size", subsample.size()}};
    }
    stage.finish(outputs);
}

namespace {

LightweightBackend load_best_backend(const RunConfig& config, const std::string& models_dir,
                                     const std::string& backend_id) {
    const auto summary_path = config.run_dir / models_dir / backend_id / "summary.json";
    require_artifact(summary_path, "trained model for backend '" + backend_id + "'",
                     "scitext train");
    const json summary = read_json_file(summary_path);
    return LightweightBackend::load(config.run_dir / models_dir /
                                    summary.at("best_run").get<std::string>());
}

} // namespace

void cmd_infer(const RunConfig& config, const std::vector<std::string>& only_backends,
               const std::string& models_dir, const std::string& predictions_dir) {
    config.validate(false);
    StageScope stage(config, "infer");
    const LabelSpace labels = config.labels();

    const auto unlabeled_path = config.run_dir / "corpus" / "unlabeled.jsonl";
    require_artifact(unlabeled_path, "unlabeled corpus", "scitext ingest");
    auto unlabeled = load_artifact_corpus(unlabeled_path, labels);

    auto composed = compose_documents(unlabeled.documents, config.scenario, labels);
    const std::size_t k = std::min<std::size_t>(3, labels.size());

    std::unordered_map<std::string, LabelId> query_classes;
    for (const auto& doc : unlabeled.documents) {
        if (doc.query_class) {
            query_classes[doc.id] = labels.require(*doc.query_class);
        }
    }
    bool all_have_query_class = !composed.ids.empty();
    for (const auto& id : composed.ids) {
        all_have_query_class = all_have_query_class && query_classes.count(id) > 0;
    }

    const auto out_dir = config.run_dir / predictions_dir;
    std::filesystem::create_directories(out_dir);
    std::ofstream out(out_dir / "predictions.jsonl", std::ios::binary);
    if (!out) {
        throw IoError("cannot write predictions");
    }

    json agreement_tables = json::object();
    json outputs = json::object();
    for (const auto& descriptor : select_backends(config, only_backends)) {
        auto backend = load_best_backend(config, models_dir, descriptor.id);
        auto examples = encode_all(composed, backend.tokenizer(), config.max_len);

        std::vector<Prediction> predictions;
        predictions.reserve(examples.size());
        for (std::size_t begin = 0; begin < examples.size();
             begin += config.training.batch_size) {
            const std::size_t end =
                std::min(begin + config.training.batch_size, examples.size());
            auto probs = backend.predict_proba(
                std::span<const EncodedExample>(examples).subspan(begin, end - begin));
            for (std::size_t i = 0; i < probs.size(); ++i) {
                Prediction p;
                p.doc_id = composed.ids[begin + i];
                p.model_id = descriptor.id;
                p.scenario = config.scenario;
                p.ranked = rank_topk(probs[i], k);
                predictions.push_back(std::move(p));
            }
        }

        for (const auto& p : predictions) {
            out << prediction_to_json(p, labels) << '\n';
        }

        if (all_have_query_class) {
            auto agreement = per_domain_agreement(predictions, query_classes, descriptor.id);
            json table = json::object();
            for (const auto& [domain, pct] : agreement) {
                table[labels.name(domain)] = pct;
            }
            agreement_tables[descriptor.id] = std::move(table);
        }
        outputs[descriptor.id] = {{"documents", predictions.size()}};
    }
    out.close();

    if (!agreement_tables.empty()) {
        write_json_file(agreement_tables, out_dir / "agreement_by_domain.json");
        outputs["agreement_by_domain"] = agreement_tables;
    }
    outputs["skipped_documents"] = composed.skipped.size();
    stage.finish(outputs);
}

void cmd_vote(const RunConfig& config, const std::string& predictions_dir,
              const std::string& votes_dir) {
    config.validate(false);
    StageScope stage(config, "vote");
    const LabelSpace labels = config.labels();

    const auto predictions_path = config.run_dir / predictions_dir / "predictions.jsonl";
    require_artifact(predictions_path, "predictions", "scitext infer");

    std::ifstream in(predictions_path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open predictions: " + predictions_path.string());
    }

    std::vector<std::string> doc_order;
    std::unordered_map<std::string, std::vector<Prediction>> by_doc;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto p = prediction_from_json(line, labels);
        if (p.scenario != config.scenario) {
            throw ValidationError("prediction scenario '" + std::string(to_tag(p.scenario)) +
                                  "' does not match the configured scenario");
        }
        auto [it, inserted] = by_doc.try_emplace(p.doc_id);
        if (inserted) doc_order.push_back(p.doc_id);
        it->second.push_back(std::move(p));
    }

    std::vector<VoteOutcome> outcomes;
    outcomes.reserve(doc_order.size());
    for (const auto& doc_id : doc_order) {
        outcomes.push_back(hard_vote(by_doc.at(doc_id), config.vote));
    }

    const auto out_dir = config.run_dir / votes_dir;
    std::filesystem::create_directories(out_dir);
    std::ofstream votes_out(out_dir / "votes.jsonl", std::ios::binary);
    std::ofstream rejections_out(out_dir / "rejections.jsonl", std::ios::binary);
    for (const auto& outcome : outcomes) {
        if (const auto* result = std::get_if<VoteResult>(&outcome)) {
            votes_out << vote_result_to_json(*result, labels) << '\n';
        } else {
            const auto& rejection = std::get<VoteRejection>(outcome);
            json j{{"doc_id", rejection.doc_id},
                   {"best_votes", rejection.best_votes},
                   {"total_models", rejection.total_models}};
            rejections_out << j.dump() << '\n';
        }
    }
    votes_out.close();
    rejections_out.close();

    auto stats = agreement_stats(outcomes);
    json histogram = json::object();
    for (const auto& [votes, count] : stats.votes_histogram) {
        histogram[std::to_string(votes)] = count;
    }
    json agreement{{"histogram", std::move(histogram)},
                   {"rejections", stats.rejections},
                   {"documents", outcomes.size()},
                   {"min_votes", config.vote.min_votes}};
    write_json_file(agreement, out_dir / "agreement.json");
    stage.finish(agreement);
}

void cmd_expand(const RunConfig& config, const std::string& votes_dir,
                const std::string& expanded_dir) {
    config.validate(false);
    StageScope stage(config, "expand");
    const LabelSpace labels = config.labels();

    const auto votes_path = config.run_dir / votes_dir / "votes.jsonl";
    require_artifact(votes_path, "votes", "scitext vote");
    const auto labeled_path = config.run_dir / "corpus" / "labeled.jsonl";
    require_artifact(labeled_path, "ingested corpus", "scitext ingest");
    const auto unlabeled_path = config.run_dir / "corpus" / "unlabeled.jsonl";
    require_artifact(unlabeled_path, "unlabeled corpus", "scitext ingest");

    auto original = load_artifact_corpus(labeled_path, labels);
    auto unlabeled = load_artifact_corpus(unlabeled_path, labels);
    std::unordered_map<std::string, const Document*> unlabeled_by_id;
    for (const auto& doc : unlabeled.documents) unlabeled_by_id[doc.id] = &doc;

    std::vector<std::pair<Document, std::string>> accepted;
    std::ifstream in(votes_path, std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto vote = vote_result_from_json(line, labels);
        auto it = unlabeled_by_id.find(vote.doc_id);
        if (it == unlabeled_by_id.end()) {
            throw ValidationError("voted document not in unlabeled corpus: " + vote.doc_id);
        }
        accepted.emplace_back(*it->second, labels.name(vote.label));
    }

    const auto per_class_before = per_class_json(original);
    auto merged = merge(original, accepted);
    merged.corpus.name = config.dataset_name + "-expanded";

    const auto out_dir = config.run_dir / expanded_dir;
    std::filesystem::create_directories(out_dir);
    save_corpus(merged.corpus, out_dir / "corpus.jsonl");

    auto bundle = split(merged.corpus, config.ratios, config.seed);
    save_bundle(bundle, labels, merged.corpus.name, out_dir / "splits");

    json summary;
    summary["original_total"] = original.documents.size();
    summary["accepted"] = accepted.size();
    summary["collisions"] = merged.collisions;
    summary["expanded_total"] = merged.corpus.documents.size();
    summary["per_class_before"] = per_class_before;
    summary["per_class_after"] = per_class_json(merged.corpus);
    summary["splits"] = {{"train", bundle.train.size()},
                         {"validation", bundle.validation.size()},
                         {"test", bundle.test.size()}};
    write_json_file(summary, out_dir / "summary.json");
    stage.finish(summary);
}

void cmd_evaluate(const RunConfig& config, const std::string& models_dir,
                  const std::string& splits_dir, const std::string& metrics_dir,
                  const std::vector<std::string>& only_backends) {
    config.validate(false);
    StageScope stage(config, "evaluate");
    const LabelSpace labels = config.labels();

    const auto splits_root = config.run_dir / splits_dir;
    require_artifact(splits_root / "test.jsonl", "test split", "scitext split");
    auto test_docs = load_artifact_corpus(splits_root / "test.jsonl", labels).documents;

    std::string dataset = config.dataset_name;
    if (std::filesystem::exists(splits_root / "summary.json")) {
        dataset = read_json_file(splits_root / "summary.json").value("dataset", dataset);
    }

    auto composed = compose_documents(test_docs, config.scenario, labels);
    for (const auto& index : composed.label_indices) {
        if (!index) {
            throw ValidationError("test split contains unlabeled documents");
        }
    }

    const auto out_dir = config.run_dir / metrics_dir;
    std::filesystem::create_directories(out_dir);
    std::ofstream records(out_dir / "metrics.jsonl", std::ios::binary);
    std::ostringstream table;
    table << "model,dataset,n_examples,micro_f1,micro_recall,micro_precision,accuracy_percent\n";

    json outputs = json::object();
    json summary = json::object();
    summary["dataset"] = dataset;
    json models = json::object();
    for (const auto& descriptor : select_backends(config, only_backends)) {
        auto backend = load_best_backend(config, models_dir, descriptor.id);
        auto examples = encode_all(composed, backend.tokenizer(), config.max_len);

        std::vector<LabelId> golds;
        std::vector<LabelId> preds;
        golds.reserve(examples.size());
        for (std::size_t begin = 0; begin < examples.size();
             begin += config.training.batch_size) {
            const std::size_t end =
                std::min(begin + config.training.batch_size, examples.size());
            auto probs = backend.predict_proba(
                std::span<const EncodedExample>(examples).subspan(begin, end - begin));
            for (std::size_t i = 0; i < probs.size(); ++i) {
                golds.push_back(*composed.label_indices[begin + i]);
                std::size_t best = 0;
                for (std::size_t l = 1; l < probs[i].size(); ++l) {
                    if (probs[i][l] > probs[i][best]) best = l;
                }
                preds.push_back(static_cast<LabelId>(best));
            }
        }

        auto matrix = confusion(golds, preds, labels);
        auto report = micro_metrics(matrix);

        json per_class = json::object();
        for (std::size_t l = 0; l < report.per_class.size(); ++l) {
            per_class[labels.name(static_cast<LabelId>(l))] = {
                {"precision", report.per_class[l].precision},
                {"recall", report.per_class[l].recall},
                {"f1", report.per_class[l].f1}};
        }
        json counts = json::array();
        for (std::size_t g = 0; g < labels.size(); ++g) {
            json row = json::array();
            for (std::size_t p = 0; p < labels.size(); ++p) {
                row.push_back(matrix.at(static_cast<LabelId>(g), static_cast<LabelId>(p)));
            }
            counts.push_back(std::move(row));
        }

        json metrics;
        metrics["model_id"] = descriptor.id;
        metrics["dataset"] = dataset;
        metrics["n_examples"] = report.n_examples;
        metrics["micro_f1"] = report.micro_f1;
        metrics["micro_recall"] = report.micro_recall;
        metrics["micro_precision"] = report.micro_precision;
        metrics["accuracy"] = report.accuracy;
        metrics["formatted"] = format_metrics_row(report);
        metrics["per_class"] = std::move(per_class);
        metrics["confusion"] = std::move(counts);
        write_json_file(metrics, out_dir / (descriptor.id + ".json"));

        json record{{"model_id", descriptor.id},
                    {"dataset", dataset},
                    {"n_examples", report.n_examples},
                    {"micro_f1", report.micro_f1},
                    {"micro_recall", report.micro_recall},
                    {"micro_precision", report.micro_precision},
                    {"accuracy", report.accuracy}};
        records << record.dump() << '\n';

        char row[160];
        std::snprintf(row, sizeof(row), "%s,%s,%zu,%.4f,%.4f,%.4f,%lld\n", descriptor.id.c_str(),
                      dataset.c_str(), report.n_examples, report.micro_f1, report.micro_recall,
                      report.micro_precision,
                      static_cast<long long>(std::llround(report.accuracy * 100.0)));
        table << row;

        models[descriptor.id] = {{"micro_f1", report.micro_f1},
                                 {"accuracy", report.accuracy}};
        outputs[descriptor.id] = {{"micro_f1", report.micro_f1},
                                  {"accuracy", report.accuracy},
                                  {"n_examples", report.n_examples}};
    }
    summary["models"] = std::move(models);
    write_json_file(summary, out_dir / "summary.json");
    records.close();
    write_text_file(table.str(), out_dir / "metrics.csv");
    stage.finish(outputs);
}

void cmd_report(const RunConfig& config, const std::vector<std::string>& metrics_dirs,
                const std::string& report_dir) {
    config.validate(false);
    StageScope stage(config, "report");

    std::map<std::pair<std::string, std::string>, MetricsReport> reports;
    for (const auto& dir : metrics_dirs) {
        const auto metrics_root = config.run_dir / dir;
        require_artifact(metrics_root / "summary.json", "metrics", "scitext evaluate");
        for (const auto& entry : std::filesystem::directory_iterator(metrics_root)) {
            if (entry.path().extension() != ".json" ||
                entry.path().filename() == "summary.json") {
                continue;
            }
            const json metrics = read_json_file(entry.path());
            MetricsReport report;
            report.micro_f1 = metrics.at("micro_f1").get<double>();
            report.micro_recall = metrics.at("micro_recall").get<double>();
            report.micro_precision = metrics.at("micro_precision").get<double>();
            report.accuracy = metrics.at("accuracy").get<double>();
            report.n_examples = metrics.at("n_examples").get<std::size_t>();
            reports[{metrics.at("model_id").get<std::string>(),
                     metrics.at("dataset").get<std::string>()}] = report;
        }
    }

    std::vector<BaselineRow> baselines;
    if (!config.corpus.baselines.empty()) {
        baselines = load_baselines(config.corpus.baselines);
    }

    auto comparison = render_comparison(reports, baselines);

    std::ostringstream md;
    md << "# Model comparison (accuracy %)\n\n" << comparison.human << '\n';
    md << "# Micro metrics (F1 / recall / precision / accuracy)\n\n";
    for (const auto& [key, report] : reports) {
        md << "- " << key.first << " on " << key.second << ": " << format_metrics_row(report)
           << '\n';
    }

    const auto out_dir = config.run_dir / report_dir;
    write_text_file(comparison.delimited, out_dir / "comparison.csv");
    write_text_file(md.str(), out_dir / "comparison.md");

    json outputs{{"models", reports.size()}, {"baselines", baselines.size()}};
    stage.finish(outputs);
}

} // namespace scitext
