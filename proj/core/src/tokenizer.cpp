#include "scitext/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "scitext/corpus.hpp"
#include "scitext/errors.hpp"

namespace scitext {

namespace {
const char* kSpecials[] = {"[pad]", "[unk]", "[cls]", "[sep]"};
}

WordTokenizer::WordTokenizer() : WordTokenizer(std::vector<std::string>{}) {}

WordTokenizer::WordTokenizer(std::vector<std::string> vocab_words) {
    tokens_.reserve(vocab_words.size() + 4);
    for (const char* s : kSpecials) tokens_.emplace_back(s);
    for (auto& w : vocab_words) tokens_.push_back(std::move(w));
    rebuild_index();
}

void WordTokenizer::rebuild_index() {
    index_.clear();
    index_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        auto [it, inserted] = index_.emplace(tokens_[i], static_cast<std::int32_t>(i));
        if (!inserted) {
            throw ValidationError("duplicate token in vocabulary: " + tokens_[i]);
        }
    }
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& tok : tokens_) {
        h = mix64(h ^ fnv1a64(tok));
    }
    fingerprint_ = h;
}

std::vector<std::string> WordTokenizer::split_whitespace(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
        } else {
            cur.push_back(static_cast<char>(c));
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<std::string> WordTokenizer::dedupe_sorted(std::vector<std::string> words) {
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    return words;
}

std::vector<std::string> WordTokenizer::tokenize(std::string_view text) const {
    return split_whitespace(text);
}

std::int32_t WordTokenizer::token_to_id(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? unk_id() : it->second;
}

std::string WordTokenizer::id_to_token(std::int32_t id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
        throw ValidationError("token id out of range: " + std::to_string(id));
    }
    return tokens_[static_cast<std::size_t>(id)];
}

WordTokenizer WordTokenizer::from_vocab_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open vocabulary file: " + path.string());
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    for (std::size_t i = 0; i < 4; ++i) {
        if (i >= lines.size() || lines[i] != kSpecials[i]) {
            throw FormatError("vocabulary file lacks the special-token header: " + path.string());
        }
    }
    WordTokenizer tok;
    tok.tokens_ = std::move(lines);
    tok.rebuild_index();
    return tok;
}

void WordTokenizer::save_vocab(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write vocabulary file: " + path.string());
    }
    for (const auto& tok : tokens_) out << tok << '\n';
}

} // namespace scitext
