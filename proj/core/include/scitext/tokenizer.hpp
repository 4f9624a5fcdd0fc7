#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace scitext {

// Contract every backend's tokenizer satisfies: text -> tokens -> ids and
// back, plus the special ids the encoder needs. fingerprint() identifies the
// vocabulary so encoded examples can be checked against the scoring backend.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;

    virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
    virtual std::int32_t token_to_id(std::string_view token) const = 0;
    virtual std::string id_to_token(std::int32_t id) const = 0;
    virtual std::size_t vocab_size() const = 0;

    virtual std::int32_t pad_id() const = 0;
    virtual std::int32_t unk_id() const = 0;
    virtual std::int32_t bos_id() const = 0;
    virtual std::int32_t eos_id() const = 0;

    virtual std::uint64_t fingerprint() const = 0;
};

// Whitespace word tokenizer over a fixed vocabulary. Ids 0..3 are the special
// tokens [pad] [unk] [cls] [sep]; the remaining vocabulary is sorted, so a
// vocabulary built twice from the same texts is identical.
class WordTokenizer final : public Tokenizer {
public:
    WordTokenizer();
    explicit WordTokenizer(std::vector<std::string> vocab_words);

    template <typename Range>
    static WordTokenizer from_texts(const Range& texts) {
        std::vector<std::string> words;
        for (const auto& text : texts) {
            for (auto& tok : split_whitespace(text)) words.push_back(std::move(tok));
        }
        return WordTokenizer(dedupe_sorted(std::move(words)));
    }

    static WordTokenizer from_vocab_file(const std::filesystem::path& path);
    void save_vocab(const std::filesystem::path& path) const;

    std::vector<std::string> tokenize(std::string_view text) const override;
    std::int32_t token_to_id(std::string_view token) const override;
    std::string id_to_token(std::int32_t id) const override;
    std::size_t vocab_size() const override { return tokens_.size(); }

    std::int32_t pad_id() const override { return 0; }
    std::int32_t unk_id() const override { return 1; }
    std::int32_t bos_id() const override { return 2; }
    std::int32_t eos_id() const override { return 3; }

    std::uint64_t fingerprint() const override { return fingerprint_; }

    bool is_special(std::int32_t id) const { return id >= 0 && id <= 3; }

private:
    static std::vector<std::string> split_whitespace(std::string_view text);
    static std::vector<std::string> dedupe_sorted(std::vector<std::string> words);
    void rebuild_index();

    std::vector<std::string> tokens_; // id -> token, specials first
    std::unordered_map<std::string, std::int32_t> index_;
    std::uint64_t fingerprint_ = 0;
};

} // namespace scitext
