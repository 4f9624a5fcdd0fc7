#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scitext/corpus.hpp"

namespace scitext {

class Tokenizer;

// Which document fields compose the model input text. Fixed per pipeline run.
enum class Scenario { abstract_only, keywords_only, abstract_and_keywords };

Scenario scenario_from_tag(std::string_view tag);
std::string_view to_tag(Scenario scenario);

// Token-id sequence plus attention mask, padded to a fixed length. The mask is
// 1 exactly at non-padding positions, which form a prefix of the sequence.
struct EncodedExample {
    std::vector<std::int32_t> input_ids;
    std::vector<std::int8_t> attention_mask;
    std::optional<std::int32_t> label_index;
    std::uint64_t tokenizer_fingerprint = 0;

    std::size_t real_token_count() const {
        std::size_t n = 0;
        for (auto m : attention_mask) n += static_cast<std::size_t>(m);
        return n;
    }
};

// Lowercases, replaces non-alphabetic characters with spaces, collapses runs
// of whitespace and trims. Output is (lowercase-letter | single-space)*.
std::string clean_text(std::string_view raw);

// Cleaned title plus the scenario's fields, single-space joined, empty parts
// skipped. Throws ValidationError if nothing remains for this scenario.
std::string compose_input(const Document& doc, Scenario scenario);

// Sequence-start/end markers added, truncated to max_len, padded with the
// tokenizer's pad id. max_len must leave room for the two marker tokens.
EncodedExample encode(std::string_view text, const Tokenizer& tokenizer, std::size_t max_len,
                      std::optional<std::int32_t> label_index = std::nullopt);

} // namespace scitext
