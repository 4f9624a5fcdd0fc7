#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>

#include "scitext/corpus.hpp"
#include "support/synthetic.hpp"

using namespace scitext;
using scitext::testing::TempDir;

namespace {

LabelSpace wos_labels() {
    return LabelSpace({"Computer Science", "Civil Engineering", "Electrical Engineering",
                       "Mechanical Engineering", "Medical Sciences", "Psychology",
                       "Biochemistry"});
}

Document doc(std::string id, std::string title, std::string abstract,
             std::vector<std::string> keywords = {},
             std::optional<std::string> label = std::nullopt) {
    Document d;
    d.id = std::move(id);
    d.title = std::move(title);
    d.abstract = std::move(abstract);
    d.keywords = std::move(keywords);
    d.gold_label = std::move(label);
    return d;
}

Corpus corpus_of(std::vector<Document> docs, LabelSpace labels = wos_labels()) {
    Corpus c;
    c.name = "test";
    c.label_space = std::move(labels);
    c.documents = std::move(docs);
    return c;
}

std::vector<std::string> ids_of(const std::vector<Document>& docs) {
    std::vector<std::string> ids;
    for (const auto& d : docs) ids.push_back(d.id);
    return ids;
}

// Digits are cleaned away, so dedup-sensitive fixtures need alphabetic serials.
std::string letters(std::size_t n) {
    std::string s;
    do {
        s.push_back(static_cast<char>('a' + n % 26));
        n /= 26;
    } while (n > 0);
    return s;
}

} // namespace

TEST_SUITE("corpus") {

TEST_CASE("load_corpus reads well-formed delimited records") {
    TempDir tmp("corpus-load");
    const auto path = tmp.path() / "records.csv";
    {
        std::ofstream out(path);
        out << "id,title,abstract,keywords,label,query_class\n";
        out << "a,First Title,Some abstract text,kw one;kw two,Psychology,\n";
        out << "b,\"Comma, in title\",More text,,Biochemistry,Psychology\n";
        out << "c,Third,,only keywords here,,\n";
    }
    auto result = load_corpus(path, RecordFormat::csv, wos_labels());
    CHECK(result.errors.empty());
    REQUIRE(result.corpus.documents.size() == 3);
    CHECK(result.corpus.documents[0].keywords == std::vector<std::string>{"kw one", "kw two"});
    CHECK(result.corpus.documents[1].title == "Comma, in title");
    CHECK(result.corpus.documents[1].gold_label == "Biochemistry");
    CHECK(result.corpus.documents[1].query_class == "Psychology");
    CHECK_FALSE(result.corpus.documents[2].gold_label.has_value());
}

TEST_CASE("load_corpus collects malformed records instead of dropping them silently") {
    TempDir tmp("corpus-bad");
    const auto path = tmp.path() / "records.csv";
    {
        std::ofstream out(path);
        out << "id,title,abstract,keywords,label\n";
        out << "a,Fine,text,,Psychology\n";
        out << "b,,,,\n"; // no text at all
        out << "c,Also fine,text,,\n";
    }
    auto result = load_corpus(path, RecordFormat::csv, wos_labels());
    CHECK(result.corpus.documents.size() == 2);
    REQUIRE(result.errors.size() == 1);
    CHECK(result.errors[0].record_number == 2);
}

TEST_CASE("load_corpus flags unknown labels and duplicate ids") {
    TempDir tmp("corpus-bad2");
    const auto path = tmp.path() / "records.jsonl";
    {
        std::ofstream out(path);
        out << R"({"id":"a","title":"One","abstract":"text","keywords":[]})" << "\n";
        out << R"({"id":"a","title":"Two","abstract":"text","keywords":[]})" << "\n";
        out << R"({"id":"b","title":"Three","abstract":"text","label":"Alchemy"})" << "\n";
    }
    auto result = load_corpus(path, RecordFormat::jsonl, wos_labels());
    CHECK(result.corpus.documents.size() == 1);
    REQUIRE(result.errors.size() == 2);
    CHECK(result.errors[0].reason == "duplicate id: a");
}

TEST_CASE("load_corpus errors") {
    TempDir tmp("corpus-err");
    CHECK_THROWS_AS(load_corpus(tmp.path() / "absent.csv", RecordFormat::csv, wos_labels()),
                    IoError);
    CHECK_THROWS_AS(record_format_from_tag("xml"), FormatError);

    const auto path = tmp.path() / "noheader.csv";
    {
        std::ofstream out(path);
        out << "id,title\n";
        out << "a,b\n";
    }
    CHECK_THROWS_AS(load_corpus(path, RecordFormat::csv, wos_labels()), FormatError);
}

TEST_CASE("load_corpus reproduces the per-class tallies of a full-size export") {
    const std::vector<std::pair<std::string, std::size_t>> expected{
        {"Computer Science", 6514}, {"Civil Engineering", 4237},
        {"Electrical Engineering", 5483}, {"Mechanical Engineering", 3297},
        {"Medical Sciences", 14625}, {"Psychology", 7142}, {"Biochemistry", 5687}};

    TempDir tmp("corpus-full");
    const auto path = tmp.path() / "export.csv";
    {
        std::ofstream out(path);
        out << "id,title,abstract,keywords,label\n";
        std::size_t serial = 0;
        for (const auto& [label, count] : expected) {
            for (std::size_t i = 0; i < count; ++i) {
                out << 'd' << serial << ",study " << serial << ",text " << serial << ",,"
                    << label << '\n';
                ++serial;
            }
        }
    }

    auto result = load_corpus(path, RecordFormat::csv, wos_labels());
    CHECK(result.errors.empty());
    CHECK(result.corpus.documents.size() == 46985);

    const auto counts = result.corpus.per_class_counts();
    const auto& space = result.corpus.label_space;
    for (const auto& [label, count] : expected) {
        CHECK(counts[static_cast<std::size_t>(space.require(label))] == count);
    }
}

TEST_CASE("save_corpus round-trips documents through the line-delimited format") {
    TempDir tmp("corpus-save");
    auto c = corpus_of({doc("a", "Title A", "Abstract A", {"k1", "k2"}, "Psychology"),
                        doc("b", "Title B", "", {}, std::nullopt)});
    c.documents[1].query_class = "Biochemistry";
    c.documents[1].source = DocumentSource::retrieved;

    const auto path = tmp.path() / "out.jsonl";
    save_corpus(c, path);
    auto reloaded = load_corpus(path, RecordFormat::jsonl, wos_labels());
    CHECK(reloaded.errors.empty());
    REQUIRE(reloaded.corpus.documents.size() == 2);
    CHECK(reloaded.corpus.documents[0].keywords == c.documents[0].keywords);
    CHECK(reloaded.corpus.documents[1].query_class == "Biochemistry");
    CHECK(reloaded.corpus.documents[1].source == DocumentSource::retrieved);
}

TEST_CASE("deduplicate removes equal-key documents, keeping the first") {
    auto c = corpus_of({doc("a", "Deep Learning", "An abstract."),
                        doc("b", "Deep Learning", "An abstract."),
                        doc("c", "Something else", "Entirely.")});
    auto result = deduplicate(c);
    CHECK(result.removed_count == 1);
    CHECK(ids_of(result.corpus.documents) == std::vector<std::string>{"a", "c"});
}

TEST_CASE("deduplicate treats punctuation and case variants as duplicates") {
    auto c = corpus_of({doc("a", "Deep-Learning!", "The 2024 Abstract."),
                        doc("b", "deep learning", "the abstract")});
    CHECK(dedup_key(c.documents[0]) == dedup_key(c.documents[1]));
    auto result = deduplicate(c);
    CHECK(result.corpus.documents.size() == 1);
    CHECK(result.removed_count == 1);
}

TEST_CASE("deduplicate leaves all-unique corpora unchanged and is idempotent") {
    std::mt19937_64 rng(42);
    std::vector<Document> docs;
    for (int i = 0; i < 200; ++i) {
        // Small key alphabet forces plenty of collisions.
        docs.push_back(doc("id" + std::to_string(i), "title " + std::to_string(rng() % 12),
                           "abstract " + std::to_string(rng() % 6)));
    }
    auto once = deduplicate(corpus_of(docs));
    auto twice = deduplicate(once.corpus);
    CHECK(twice.removed_count == 0);
    CHECK(ids_of(twice.corpus.documents) == ids_of(once.corpus.documents));

    auto unique_only = deduplicate(twice.corpus);
    CHECK(unique_only.removed_count == 0);
}

TEST_CASE("split applies the floor rule with the remainder going to train") {
    SUBCASE("n = 8716") {
        std::vector<Document> docs;
        for (int i = 0; i < 8716; ++i) docs.push_back(doc("d" + std::to_string(i), "t", "a"));
        auto bundle = split(corpus_of(std::move(docs)), {0.8, 0.1, 0.1}, 3);
        CHECK(bundle.train.size() == 6974); // floor gives 6972, remainder 2 joins train
        CHECK(bundle.validation.size() == 871);
        CHECK(bundle.test.size() == 871);
    }
    SUBCASE("n = 10 divides exactly") {
        std::vector<Document> docs;
        for (int i = 0; i < 10; ++i) docs.push_back(doc("d" + std::to_string(i), "t", "a"));
        auto bundle = split(corpus_of(std::move(docs)), {0.8, 0.1, 0.1}, 3);
        CHECK(bundle.train.size() == 8);
        CHECK(bundle.validation.size() == 1);
        CHECK(bundle.test.size() == 1);
    }
}

TEST_CASE("split is deterministic and independent of input order") {
    std::vector<Document> docs;
    for (int i = 0; i < 137; ++i) docs.push_back(doc("d" + std::to_string(i), "t", "a"));
    auto c = corpus_of(docs);

    auto first = split(c, {0.8, 0.1, 0.1}, 99);
    auto second = split(c, {0.8, 0.1, 0.1}, 99);
    CHECK(ids_of(first.train) == ids_of(second.train));
    CHECK(ids_of(first.validation) == ids_of(second.validation));
    CHECK(ids_of(first.test) == ids_of(second.test));

    std::reverse(docs.begin(), docs.end());
    auto reversed = split(corpus_of(docs), {0.8, 0.1, 0.1}, 99);
    CHECK(ids_of(reversed.train) == ids_of(first.train));
    CHECK(ids_of(reversed.validation) == ids_of(first.validation));
    CHECK(ids_of(reversed.test) == ids_of(first.test));

    auto other_seed = split(c, {0.8, 0.1, 0.1}, 100);
    CHECK(ids_of(other_seed.train) != ids_of(first.train));
}

TEST_CASE("split partitions are disjoint and exhaustive") {
    std::mt19937_64 rng(7);
    for (int n : {3, 4, 10, 57, 101}) {
        std::vector<Document> docs;
        for (int i = 0; i < n; ++i) docs.push_back(doc("d" + std::to_string(i), "t", "a"));
        auto bundle = split(corpus_of(std::move(docs)), {0.7, 0.15, 0.15}, rng());

        std::set<std::string> seen;
        for (const auto* part : {&bundle.train, &bundle.validation, &bundle.test}) {
            for (const auto& d : *part) CHECK(seen.insert(d.id).second);
        }
        CHECK(seen.size() == static_cast<std::size_t>(n));
    }
}

TEST_CASE("split rejects bad inputs") {
    auto c = corpus_of({doc("a", "t", "a")});
    CHECK_THROWS_AS(split(c, {0.8, 0.1, 0.2}, 1), ValidationError);
    CHECK_THROWS_AS(split(corpus_of({}), {0.8, 0.1, 0.1}, 1), ValidationError);
}

TEST_CASE("merge adds voted documents and reports the expanded arithmetic") {
    // Scaled to the real expansion: 46985 originals, 6964 unique accepted.
    std::vector<Document> originals;
    originals.reserve(46985);
    for (std::size_t i = 0; i < 46985; ++i) {
        originals.push_back(
            doc("orig" + std::to_string(i), "known study " + letters(i), "a", {}, "Psychology"));
    }
    std::vector<std::pair<Document, std::string>> accepted;
    accepted.reserve(6964);
    for (std::size_t i = 0; i < 6964; ++i) {
        accepted.emplace_back(
            doc("new" + std::to_string(i), "retrieved study " + letters(i), "a"),
            "Biochemistry");
    }

    auto result = merge(corpus_of(std::move(originals)), accepted);
    CHECK(result.corpus.documents.size() == 53949);
    CHECK(result.collisions == 0);

    const auto counts = result.corpus.per_class_counts();
    const auto& space = result.corpus.label_space;
    CHECK(counts[static_cast<std::size_t>(space.require("Biochemistry"))] == 6964);
    CHECK(result.corpus.documents.back().source == DocumentSource::retrieved);
    CHECK(result.corpus.documents.back().gold_label == "Biochemistry");
}

TEST_CASE("merge with an empty accepted list equals the deduplicated original") {
    auto c = corpus_of({doc("a", "Same", "Text", {}, "Psychology"),
                        doc("b", "Same", "Text", {}, "Psychology"),
                        doc("c", "Other", "Text", {}, "Biochemistry")});
    auto result = merge(c, {});
    auto deduped = deduplicate(c);
    CHECK(ids_of(result.corpus.documents) == ids_of(deduped.corpus.documents));
    CHECK(result.collisions == 0);
}

TEST_CASE("merge counts collisions against existing dedup keys") {
    auto c = corpus_of({doc("a", "Known Title", "Known abstract", {}, "Psychology"),
                        doc("b", "Other Title", "Other abstract", {}, "Biochemistry")});
    std::vector<std::pair<Document, std::string>> accepted;
    accepted.emplace_back(doc("x", "Known Title", "Known abstract"), "Psychology"); // collides
    accepted.emplace_back(doc("y", "Fresh Title", "Fresh abstract"), "Psychology");
    accepted.emplace_back(doc("z", "Fresh Title", "Fresh abstract"), "Psychology"); // collides

    auto result = merge(c, accepted);
    CHECK(result.corpus.documents.size() == 3);
    CHECK(result.collisions == 2);

    SUBCASE("per-class counts never decrease") {
        auto before = deduplicate(c).corpus.per_class_counts();
        auto after = result.corpus.per_class_counts();
        for (std::size_t l = 0; l < before.size(); ++l) {
            CHECK(after[l] >= before[l]);
        }
    }
}

TEST_CASE("merge arithmetic matches set semantics on random inputs") {
    std::mt19937_64 rng(2718);
    for (int trial = 0; trial < 20; ++trial) {
        // Small key alphabet so collisions are frequent.
        auto random_doc = [&](const std::string& id_prefix, int i) {
            return doc(id_prefix + std::to_string(i), "topic " + letters(rng() % 25),
                       "about " + letters(rng() % 5));
        };
        std::vector<Document> originals;
        const int n_orig = 5 + static_cast<int>(rng() % 40);
        for (int i = 0; i < n_orig; ++i) {
            auto d = random_doc("o", i);
            d.gold_label = rng() % 2 == 0 ? "Psychology" : "Biochemistry";
            originals.push_back(std::move(d));
        }
        std::vector<std::pair<Document, std::string>> accepted;
        const int n_acc = static_cast<int>(rng() % 30);
        for (int i = 0; i < n_acc; ++i) {
            accepted.emplace_back(random_doc("a", i),
                                  rng() % 2 == 0 ? "Psychology" : "Biochemistry");
        }

        auto original = corpus_of(originals);
        auto result = merge(original, accepted);

        std::set<std::string> keys;
        for (const auto& d : originals) keys.insert(dedup_key(d));
        const std::size_t base = keys.size();
        for (const auto& [d, label] : accepted) keys.insert(dedup_key(d));
        CHECK(result.corpus.documents.size() == keys.size());
        CHECK(result.collisions == base + accepted.size() - keys.size());

        auto before = deduplicate(original).corpus.per_class_counts();
        auto after = result.corpus.per_class_counts();
        for (std::size_t l = 0; l < before.size(); ++l) {
            CHECK(after[l] >= before[l]);
        }
    }
}

TEST_CASE("merge rejects labels outside the label space") {
    auto c = corpus_of({doc("a", "T", "A", {}, "Psychology")});
    std::vector<std::pair<Document, std::string>> accepted;
    accepted.emplace_back(doc("x", "N", "B"), "Astrology");
    CHECK_THROWS_AS(merge(c, accepted), ValidationError);
}

} // TEST_SUITE("corpus")
