#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scitext/labels.hpp"

namespace scitext {

enum class DocumentSource { original, retrieved };

std::string_view to_tag(DocumentSource source);
DocumentSource document_source_from_tag(std::string_view tag);

// One scholarly record. At least one of title / abstract / keywords is
// non-empty for a usable document.
struct Document {
    std::string id;
    std::string title;
    std::string abstract;
    std::vector<std::string> keywords;
    std::optional<std::string> gold_label;
    std::optional<std::string> query_class;
    DocumentSource source = DocumentSource::original;

    bool has_text() const {
        if (!title.empty() || !abstract.empty()) return true;
        for (const auto& k : keywords) {
            if (!k.empty()) return true;
        }
        return false;
    }
};

// A named labeled collection over a fixed label space.
struct Corpus {
    std::string name;
    LabelSpace label_space;
    std::vector<Document> documents;

    // Gold-label tally aligned to label-space order; sums to labeled_count().
    std::vector<std::size_t> per_class_counts() const;
    std::size_t labeled_count() const;
};

struct SplitRatios {
    double train = 0.8;
    double validation = 0.1;
    double test = 0.1;
};

// Disjoint train/validation/test partitions of one corpus.
struct DatasetBundle {
    std::vector<Document> train;
    std::vector<Document> validation;
    std::vector<Document> test;
    std::uint64_t seed = 0;
    SplitRatios ratios;
};

enum class RecordFormat { csv, tsv, jsonl };

RecordFormat record_format_from_tag(std::string_view tag);
std::string_view to_tag(RecordFormat format);

struct RecordError {
    std::size_t record_number = 0; // 1-based position among data records
    std::string reason;
};

struct LoadResult {
    Corpus corpus;
    std::vector<RecordError> errors;
};

// Reads one Document per record. Malformed records (no text, duplicate or
// missing id, unknown label) land in the error report instead of the corpus.
LoadResult load_corpus(const std::filesystem::path& path, RecordFormat format,
                       const LabelSpace& label_space, std::string corpus_name = "");

// Line-delimited record output; the canonical on-disk corpus form.
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

// Content key used for duplicate removal: cleaned title and cleaned abstract.
std::string dedup_key(const Document& doc);

struct DedupResult {
    Corpus corpus;
    std::size_t removed_count = 0;
};

// Keeps the first occurrence of every dedup key, in input order. Idempotent.
DedupResult deduplicate(const Corpus& corpus);

// Deterministic shuffle-and-partition. The permutation is keyed on
// (seed, document id), so partitions do not depend on input order. Partition
// sizes are floor(n * ratio) with the remainder absorbed by train.
DatasetBundle split(const Corpus& corpus, SplitRatios ratios, std::uint64_t seed);

struct MergeResult {
    Corpus corpus;
    std::size_t collisions = 0; // accepted docs dropped as duplicates of existing keys
};

// Union of the original corpus and vote-accepted documents (which get their
// voted label as gold_label), deduplicated with originals taking precedence.
MergeResult merge(const Corpus& original,
                  const std::vector<std::pair<Document, std::string>>& accepted);

// Stable 64-bit content hashes used for seeded shuffling and subsampling.
std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t mix64(std::uint64_t x);
std::uint64_t shuffle_key(std::uint64_t seed, std::string_view doc_id);

} // namespace scitext
