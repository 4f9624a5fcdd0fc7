#include "scitext/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "scitext/preprocess.hpp"

namespace scitext {

namespace {

using nlohmann::json;

std::vector<std::string> split_on(std::string_view text, char delim) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = text.find(delim, start);
        if (pos == std::string_view::npos) {
            parts.emplace_back(text.substr(start));
            break;
        }
        parts.emplace_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> parse_keywords(std::string_view field) {
    std::vector<std::string> keywords;
    for (auto& part : split_on(field, ';')) {
        auto k = trim(part);
        if (!k.empty()) keywords.push_back(std::move(k));
    }
    return keywords;
}

// RFC-4180-style reader: quoted fields may contain the delimiter, doubled
// quotes and line breaks.
class DelimitedReader {
public:
    DelimitedReader(std::istream& in, char delim) : in_(in), delim_(delim) {}

    bool next_row(std::vector<std::string>& row) {
        row.clear();
        if (!peek_ok()) return false;

        std::string field;
        bool quoted = false;
        bool any = false;
        int c;
        while ((c = in_.get()) != EOF) {
            any = true;
            char ch = static_cast<char>(c);
            if (quoted) {
                if (ch == '"') {
                    if (in_.peek() == '"') {
                        field.push_back('"');
                        in_.get();
                    } else {
                        quoted = false;
                    }
                } else {
                    field.push_back(ch);
                }
            } else if (ch == '"' && field.empty()) {
                quoted = true;
            } else if (ch == delim_) {
                row.push_back(std::move(field));
                field.clear();
            } else if (ch == '\n') {
                break;
            } else if (ch == '\r') {
                if (in_.peek() == '\n') in_.get();
                break;
            } else {
                field.push_back(ch);
            }
        }
        if (!any) return false;
        row.push_back(std::move(field));
        return true;
    }

private:
    bool peek_ok() { return in_.peek() != EOF; }

    std::istream& in_;
    char delim_;
};

struct ParsedRecord {
    Document doc;
    bool ok = false;
    std::string reason;
};

ParsedRecord document_from_fields(std::string id, std::string title, std::string abstract,
                                  std::vector<std::string> keywords, std::string label,
                                  std::string query_class, const LabelSpace& label_space) {
    ParsedRecord rec;
    rec.doc.id = trim(id);
    rec.doc.title = std::move(title);
    rec.doc.abstract = std::move(abstract);
    rec.doc.keywords = std::move(keywords);

    if (rec.doc.id.empty()) {
        rec.reason = "missing id";
        return rec;
    }
    if (!rec.doc.has_text()) {
        rec.reason = "record has no title, abstract or keywords";
        return rec;
    }
    label = trim(label);
    if (!label.empty()) {
        if (!label_space.contains(label)) {
            rec.reason = "label not in label space: " + label;
            return rec;
        }
        rec.doc.gold_label = label;
    }
    query_class = trim(query_class);
    if (!query_class.empty()) {
        if (!label_space.contains(query_class)) {
            rec.reason = "query class not in label space: " + query_class;
            return rec;
        }
        rec.doc.query_class = query_class;
    }
    rec.ok = true;
    return rec;
}

LoadResult load_delimited(std::istream& in, char delim, const LabelSpace& label_space,
                          std::string corpus_name) {
    DelimitedReader reader(in, delim);
    std::vector<std::string> header;
    if (!reader.next_row(header)) {
        throw FormatError("delimited file is empty, expected a header row");
    }

    std::unordered_map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[trim(header[i])] = i;
    for (const char* required : {"id", "title", "abstract", "keywords"}) {
        if (!col.count(required)) {
            throw FormatError(std::string("delimited header misses required column: ") + required);
        }
    }

    auto get = [&](const std::vector<std::string>& row, const char* name) -> std::string {
        auto it = col.find(name);
        if (it == col.end() || it->second >= row.size()) return "";
        return row[it->second];
    };

    LoadResult result;
    result.corpus.name = std::move(corpus_name);
    result.corpus.label_space = label_space;

    std::unordered_set<std::string> seen_ids;
    std::vector<std::string> row;
    std::size_t record_number = 0;
    while (reader.next_row(row)) {
        if (row.size() == 1 && trim(row[0]).empty()) continue; // blank line
        ++record_number;
        auto rec = document_from_fields(get(row, "id"), get(row, "title"), get(row, "abstract"),
                                        parse_keywords(get(row, "keywords")), get(row, "label"),
                                        get(row, "query_class"), label_space);
        if (rec.ok && !seen_ids.insert(rec.doc.id).second) {
            rec.ok = false;
            rec.reason = "duplicate id: " + rec.doc.id;
        }
        if (rec.ok) {
            result.corpus.documents.push_back(std::move(rec.doc));
        } else {
            result.errors.push_back({record_number, std::move(rec.reason)});
        }
    }
    return result;
}

std::string json_string_or_empty(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return "";
    if (it->is_string()) return it->get<std::string>();
    throw FormatError(std::string("field is not a string: ") + key);
}

LoadResult load_jsonl(std::istream& in, const LabelSpace& label_space, std::string corpus_name) {
    LoadResult result;
    result.corpus.name = std::move(corpus_name);
    result.corpus.label_space = label_space;

    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t record_number = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++record_number;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            result.errors.push_back({record_number, "line is not a json object"});
            continue;
        }

        ParsedRecord rec;
        try {
            std::vector<std::string> keywords;
            if (auto it = j.find("keywords"); it != j.end() && !it->is_null()) {
                if (it->is_array()) {
                    for (const auto& k : *it) keywords.push_back(k.get<std::string>());
                } else if (it->is_string()) {
                    keywords = parse_keywords(it->get<std::string>());
                } else {
                    throw FormatError("keywords is neither array nor string");
                }
            }
            rec = document_from_fields(json_string_or_empty(j, "id"),
                                       json_string_or_empty(j, "title"),
                                       json_string_or_empty(j, "abstract"), std::move(keywords),
                                       json_string_or_empty(j, "label"),
                                       json_string_or_empty(j, "query_class"), label_space);
            if (auto it = j.find("source"); rec.ok && it != j.end() && it->is_string()) {
                rec.doc.source = document_source_from_tag(it->get<std::string>());
            }
        } catch (const std::exception& e) {
            rec.ok = false;
            rec.reason = e.what();
        }

        if (rec.ok && !seen_ids.insert(rec.doc.id).second) {
            rec.ok = false;
            rec.reason = "duplicate id: " + rec.doc.id;
        }
        if (rec.ok) {
            result.corpus.documents.push_back(std::move(rec.doc));
        } else {
            result.errors.push_back({record_number, std::move(rec.reason)});
        }
    }
    return result;
}

json document_to_json(const Document& doc) {
    json j;
    j["id"] = doc.id;
    j["title"] = doc.title;
    j["abstract"] = doc.abstract;
    j["keywords"] = doc.keywords;
    if (doc.gold_label) j["label"] = *doc.gold_label;
    if (doc.query_class) j["query_class"] = *doc.query_class;
    if (doc.source != DocumentSource::original) j["source"] = std::string(to_tag(doc.source));
    return j;
}

} // namespace

std::string_view to_tag(DocumentSource source) {
    return source == DocumentSource::original ? "original" : "retrieved";
}

DocumentSource document_source_from_tag(std::string_view tag) {
    if (tag == "original") return DocumentSource::original;
    if (tag == "retrieved") return DocumentSource::retrieved;
    throw FormatError("unknown document source tag: " + std::string(tag));
}

std::vector<std::size_t> Corpus::per_class_counts() const {
    std::vector<std::size_t> counts(label_space.size(), 0);
    for (const auto& doc : documents) {
        if (doc.gold_label) {
            counts[static_cast<std::size_t>(label_space.require(*doc.gold_label))]++;
        }
    }
    return counts;
}

std::size_t Corpus::labeled_count() const {
    std::size_t n = 0;
    for (const auto& doc : documents) n += doc.gold_label.has_value();
    return n;
}

RecordFormat record_format_from_tag(std::string_view tag) {
    if (tag == "csv") return RecordFormat::csv;
    if (tag == "tsv") return RecordFormat::tsv;
    if (tag == "jsonl") return RecordFormat::jsonl;
    throw FormatError("unknown record format tag: " + std::string(tag));
}

std::string_view to_tag(RecordFormat format) {
    switch (format) {
        case RecordFormat::csv: return "csv";
        case RecordFormat::tsv: return "tsv";
        case RecordFormat::jsonl: return "jsonl";
    }
    throw FormatError("unknown record format");
}

LoadResult load_corpus(const std::filesystem::path& path, RecordFormat format,
                       const LabelSpace& label_space, std::string corpus_name) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open corpus file: " + path.string());
    }
    if (corpus_name.empty()) corpus_name = path.stem().string();
    switch (format) {
        case RecordFormat::csv: return load_delimited(in, ',', label_space, std::move(corpus_name));
        case RecordFormat::tsv: return load_delimited(in, '\t', label_space, std::move(corpus_name));
        case RecordFormat::jsonl: return load_jsonl(in, label_space, std::move(corpus_name));
    }
    throw FormatError("unknown record format");
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write corpus file: " + path.string());
    }
    for (const auto& doc : corpus.documents) {
        out << document_to_json(doc).dump() << '\n';
    }
    if (!out) {
        throw IoError("short write to corpus file: " + path.string());
    }
}

std::string dedup_key(const Document& doc) {
    // '\n' cannot survive clean_text, so the parts cannot bleed into each other.
    return clean_text(doc.title) + '\n' + clean_text(doc.abstract);
}

DedupResult deduplicate(const Corpus& corpus) {
    DedupResult result;
    result.corpus.name = corpus.name;
    result.corpus.label_space = corpus.label_space;
    result.corpus.documents.reserve(corpus.documents.size());

    std::unordered_set<std::string> seen;
    seen.reserve(corpus.documents.size());
    for (const auto& doc : corpus.documents) {
        if (seen.insert(dedup_key(doc)).second) {
            result.corpus.documents.push_back(doc);
        }
    }
    result.removed_count = corpus.documents.size() - result.corpus.documents.size();
    return result;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t shuffle_key(std::uint64_t seed, std::string_view doc_id) {
    return mix64(fnv1a64(doc_id) ^ mix64(seed));
}

DatasetBundle split(const Corpus& corpus, SplitRatios ratios, std::uint64_t seed) {
    const double sum = ratios.train + ratios.validation + ratios.test;
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ValidationError("split ratios must sum to 1, got " + std::to_string(sum));
    }
    if (ratios.train < 0 || ratios.validation < 0 || ratios.test < 0) {
        throw ValidationError("split ratios must be non-negative");
    }
    if (corpus.documents.empty()) {
        throw ValidationError("cannot split an empty corpus");
    }

    const std::size_t n = corpus.documents.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto ka = shuffle_key(seed, corpus.documents[a].id);
        const auto kb = shuffle_key(seed, corpus.documents[b].id);
        if (ka != kb) return ka < kb;
        return corpus.documents[a].id < corpus.documents[b].id;
    });

    std::size_t n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios.train));
    const std::size_t n_val =
        static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios.validation));
    const std::size_t n_test =
        static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios.test));
    n_train += n - (n_train + n_val + n_test); // remainder goes to the largest partition

    DatasetBundle bundle;
    bundle.seed = seed;
    bundle.ratios = ratios;
    bundle.train.reserve(n_train);
    bundle.validation.reserve(n_val);
    bundle.test.reserve(n_test);
    for (std::size_t i = 0; i < n; ++i) {
        const Document& doc = corpus.documents[order[i]];
        if (i < n_train) {
            bundle.train.push_back(doc);
        } else if (i < n_train + n_val) {
            bundle.validation.push_back(doc);
        } else {
            bundle.test.push_back(doc);
        }
    }
    return bundle;
}

MergeResult merge(const Corpus& original,
                  const std::vector<std::pair<Document, std::string>>& accepted) {
    Corpus unioned;
    unioned.name = original.name;
    unioned.label_space = original.label_space;
    unioned.documents.reserve(original.documents.size() + accepted.size());
    unioned.documents = original.documents;

    for (const auto& [doc, label] : accepted) {
        if (!original.label_space.contains(label)) {
            throw ValidationError("voted label not in label space: " + label);
        }
        Document labeled = doc;
        labeled.gold_label = label;
        labeled.source = DocumentSource::retrieved;
        unioned.documents.push_back(std::move(labeled));
    }

    auto deduped = deduplicate(unioned);
    auto base = deduplicate(original);

    MergeResult result;
    result.corpus = std::move(deduped.corpus);
    // Collisions among the accepted documents themselves or against originals.
    result.collisions =
        base.corpus.documents.size() + accepted.size() - result.corpus.documents.size();
    return result;
}

} // namespace scitext
