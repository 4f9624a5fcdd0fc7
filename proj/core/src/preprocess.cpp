#include "scitext/preprocess.hpp"

#include <cctype>

#include "scitext/tokenizer.hpp"

namespace scitext {

Scenario scenario_from_tag(std::string_view tag) {
    if (tag == "abstract") return Scenario::abstract_only;
    if (tag == "keywords") return Scenario::keywords_only;
    if (tag == "abstract_and_keywords") return Scenario::abstract_and_keywords;
    throw FormatError("unknown scenario tag: " + std::string(tag));
}

std::string_view to_tag(Scenario scenario) {
    switch (scenario) {
        case Scenario::abstract_only: return "abstract";
        case Scenario::keywords_only: return "keywords";
        case Scenario::abstract_and_keywords: return "abstract_and_keywords";
    }
    throw FormatError("unknown scenario");
}

std::string clean_text(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (unsigned char c : raw) {
        if (std::isalpha(c)) {
            if (pending_space && !out.empty()) out.push_back(' ');
            pending_space = false;
            out.push_back(static_cast<char>(std::tolower(c)));
        } else {
            pending_space = true;
        }
    }
    return out;
}

namespace {

void append_part(std::string& text, std::string part) {
    if (part.empty()) return;
    if (!text.empty()) text.push_back(' ');
    text += part;
}

std::string joined_keywords(const Document& doc) {
    std::string joined;
    for (const auto& k : doc.keywords) {
        if (!joined.empty()) joined.push_back(' ');
        joined += k;
    }
    return joined;
}

} // namespace

std::string compose_input(const Document& doc, Scenario scenario) {
    std::string text;
    append_part(text, clean_text(doc.title));
    if (scenario != Scenario::keywords_only) {
        append_part(text, clean_text(doc.abstract));
    }
    if (scenario != Scenario::abstract_only) {
        append_part(text, clean_text(joined_keywords(doc)));
    }
    if (text.empty()) {
        throw ValidationError("document " + doc.id + " has no usable text for scenario '" +
                              std::string(to_tag(scenario)) + "'");
    }
    return text;
}

EncodedExample encode(std::string_view text, const Tokenizer& tokenizer, std::size_t max_len,
                      std::optional<std::int32_t> label_index) {
    if (text.empty()) {
        throw ValidationError("cannot encode empty text");
    }
    if (max_len < 3) {
        throw ValidationError("max_len must be at least 3 to fit the marker tokens");
    }

    auto tokens = tokenizer.tokenize(text);
    const std::size_t budget = max_len - 2;
    if (tokens.size() > budget) tokens.resize(budget);

    EncodedExample example;
    example.input_ids.reserve(max_len);
    example.input_ids.push_back(tokenizer.bos_id());
    for (const auto& tok : tokens) {
        example.input_ids.push_back(tokenizer.token_to_id(tok));
    }
    example.input_ids.push_back(tokenizer.eos_id());

    const std::size_t real = example.input_ids.size();
    example.input_ids.resize(max_len, tokenizer.pad_id());
    example.attention_mask.assign(max_len, 0);
    for (std::size_t i = 0; i < real; ++i) example.attention_mask[i] = 1;

    example.label_index = label_index;
    example.tokenizer_fingerprint = tokenizer.fingerprint();
    return example;
}

} // namespace scitext
