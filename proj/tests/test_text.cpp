#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "qrw/error.hpp"
#include "qrw/rng.hpp"
#include "qrw/text.hpp"

using namespace qrw;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    std::string path = std::string("/tmp/qrw_text_") + name;
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("tokenize lowercases and splits on non-alphanumerics") {
    CHECK(tokenize("The Cross Entropy") == std::vector<std::string>{"the", "cross", "entropy"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("Sea-Turtle Diet!") == std::vector<std::string>{"sea", "turtle", "diet"});
    CHECK(tokenize("a1-b2") == std::vector<std::string>{"a1", "b2"});
}

TEST_CASE("tokenize is idempotent on its own space-joined output") {
    Rng rng(7, "tokenize-idem");
    const std::string alphabet = "aB !-_9.,';/XyZ\t";
    for (int round = 0; round < 200; ++round) {
        std::string text;
        std::size_t len = rng.below(40);
        for (std::size_t i = 0; i < len; ++i) text.push_back(alphabet[rng.below(alphabet.size())]);
        auto once = tokenize(text);
        std::string joined;
        for (std::size_t i = 0; i < once.size(); ++i) {
            if (i) joined.push_back(' ');
            joined += once[i];
        }
        CHECK(tokenize(joined) == once);
    }
}

TEST_CASE("corpus builds document frequencies per document") {
    Corpus corpus = Corpus::build({{"d1", "a b"}, {"d2", "b c"}});
    const auto& vocab = corpus.vocabulary();
    CHECK(vocab.df(vocab.id_of("a")) == 1);
    CHECK(vocab.df(vocab.id_of("b")) == 2);
    CHECK(vocab.df(vocab.id_of("c")) == 1);

    Corpus empty = Corpus::build({});
    CHECK(empty.vocabulary().size() == 0);

    Corpus repeated = Corpus::build({{"d1", "b b"}});
    CHECK(repeated.vocabulary().df(repeated.vocabulary().id_of("b")) == 1);
}

TEST_CASE("vocabulary ids are a contiguous bijection") {
    Corpus corpus = Corpus::build({{"d1", "x y z x"}, {"d2", "w y"}});
    const auto& vocab = corpus.vocabulary();
    for (TokenId id = 0; id < vocab.size(); ++id)
        CHECK(vocab.id_of(vocab.surface_of(id)) == id);
    CHECK(vocab.id_of("unseen") == kNoToken);
}

TEST_CASE("collection term counts sum to total tokens") {
    Corpus corpus = Corpus::build({{"d1", "a a b"}, {"d2", "c"}, {"d3", ""}});
    uint64_t sum = 0;
    for (TokenId id = 0; id < corpus.vocabulary().size(); ++id) sum += corpus.collection_tf(id);
    CHECK(sum == corpus.total_tokens());
    CHECK(corpus.total_tokens() == 4);
    CHECK(corpus.doc(2).tokens.empty());
}

TEST_CASE("jsonl corpus loading") {
    auto path = write_temp("ok.jsonl", "{\"id\": \"d1\", \"text\": \"a b\"}\n"
                                       "{\"id\": \"d2\", \"text\": \"c\"}\n");
    Corpus corpus = load_corpus_jsonl(path);
    REQUIRE(corpus.size() == 2);
    CHECK(corpus.doc(0).doc_id == "d1");
    CHECK(corpus.doc(0).tokens.size() == 2);

    auto dup = write_temp("dup.jsonl", "{\"id\": \"d1\", \"text\": \"a\"}\n"
                                       "{\"id\": \"d1\", \"text\": \"b\"}\n");
    CHECK_THROWS_AS(load_corpus_jsonl(dup), DataError);

    auto missing = write_temp("missing.jsonl", "{\"id\": \"d1\"}\n");
    CHECK_THROWS_AS(load_corpus_jsonl(missing), DataError);

    auto broken = write_temp("broken.jsonl", "{\"id\": \"d1\", \"text\"\n");
    try {
        load_corpus_jsonl(broken);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        // line number surfaces in the message
        CHECK(std::string(e.what()).find(":1:") != std::string::npos);
    }
}

TEST_CASE("query TSV and TREC qrels round-trip") {
    QuerySet queries;
    queries.queries = {{"q1", "sea turtle diet"}, {"q2", "cross entropy"}};
    auto qpath = write_temp("queries.tsv", "");
    save_queries_tsv(queries, qpath);
    QuerySet loaded = load_queries_tsv(qpath);
    REQUIRE(loaded.queries.size() == 2);
    CHECK(loaded.queries[1].text == "cross entropy");

    auto qrels_path = write_temp("qrels.trec", "q1 0 d1 1\nq1 0 d2 0\nq2 0 d9 2\n");
    Qrels qrels = load_qrels(qrels_path);
    CHECK(qrels["q1"].count("d1") == 1);
    CHECK(qrels["q1"].count("d2") == 0);  // rel 0 is not relevant
    CHECK(qrels["q2"].count("d9") == 1);
}

TEST_CASE("stopword list covers common function words only") {
    CHECK(is_stopword("the"));
    CHECK(is_stopword("of"));
    CHECK_FALSE(is_stopword("entropy"));
}
