#include "qrw/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "qrw/error.hpp"
#include "qrw/rng.hpp"

namespace qrw {

namespace {

constexpr std::size_t kRelevantPerQuery = 2;
constexpr std::size_t kBridgePerQuery = 1;
constexpr std::size_t kDistractorsPerQuery = 2;
constexpr std::size_t kDocsPerTopic = kRelevantPerQuery + kBridgePerQuery + kDistractorsPerQuery;

std::string padded(const char* prefix, std::size_t n, int width = 4) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, n);
    return buf;
}

std::vector<double> random_unit_vector(Rng& rng, std::size_t dim) {
    std::vector<double> v(dim);
    double norm = 0.0;
    for (auto& x : v) {
        x = rng.normal();
        norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) norm = 1.0;
    for (auto& x : v) x /= norm;
    return v;
}

std::vector<double> jittered(const std::vector<double>& center, Rng& rng, double noise) {
    std::vector<double> v(center.size());
    double norm = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = center[i] + noise * rng.normal();
        norm += v[i] * v[i];
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) norm = 1.0;
    for (auto& x : v) x /= norm;
    return v;
}

std::string join(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

void shuffle_tokens(std::vector<std::string>& tokens, Rng& rng) {
    for (std::size_t i = tokens.size(); i > 1; --i)
        std::swap(tokens[i - 1], tokens[rng.below(i)]);
}

}  // namespace

SynthDataset generate_synthetic(const SynthSpec& spec) {
    if (spec.n_docs == 0 || spec.n_queries == 0 || spec.vocab_size == 0 || spec.doc_len == 0)
        throw ConfigError("generate_synthetic: all counts must be positive");
    if (spec.mismatch_rate < 0.0 || spec.mismatch_rate > 1.0)
        throw ConfigError("generate_synthetic: mismatch_rate must be in [0, 1]");
    if (spec.doc_len < 6)
        throw ConfigError("generate_synthetic: doc_len must be at least 6");
    if (spec.vocab_size < 2 * spec.n_queries + 8)
        throw DataError("generate_synthetic: vocabulary too small for the requested synonym pairs");
    if (spec.n_docs < kDocsPerTopic * spec.n_queries)
        throw DataError("generate_synthetic: need at least " +
                        std::to_string(kDocsPerTopic * spec.n_queries) + " docs for " +
                        std::to_string(spec.n_queries) + " queries");

    std::size_t remaining = spec.vocab_size - 2 * spec.n_queries;
    std::size_t support_pool = std::max<std::size_t>(4, remaining / 3);
    std::size_t filler_pool = remaining - support_pool;

    std::vector<std::string> supports(support_pool);
    for (std::size_t i = 0; i < support_pool; ++i) supports[i] = padded("ctx", i);
    std::vector<std::string> fillers(filler_pool);
    for (std::size_t i = 0; i < filler_pool; ++i) fillers[i] = padded("fill", i);

    Rng root(spec.seed, "synth");
    SynthDataset dataset;

    std::vector<std::pair<std::string, std::string>> docs;
    docs.reserve(spec.n_docs);
    std::size_t doc_counter = 0;
    auto next_doc_id = [&doc_counter]() { return padded("d", doc_counter++, 6); };

    auto sample_filler = [&fillers](Rng& rng) { return fillers[rng.below(fillers.size())]; };

    for (std::size_t n = 0; n < spec.n_queries; ++n) {
        Rng topic_rng = root.split("topic").split(n);
        std::string term = padded("term", n);
        std::string synonym = padded("syn", n);
        dataset.synonyms.emplace_back(term, synonym);

        // Three support words per topic, distinct.
        std::vector<std::string> topic_support;
        Rng support_rng = topic_rng.split("support");
        while (topic_support.size() < 3) {
            const auto& word = supports[support_rng.below(supports.size())];
            if (std::find(topic_support.begin(), topic_support.end(), word) ==
                topic_support.end())
                topic_support.push_back(word);
        }

        std::string query_id = padded("qry", n);
        dataset.queries.queries.push_back(
            {query_id, join({term, topic_support[0], topic_support[1]})});

        // Relevant documents: the discriminative slot flips to the synonym
        // with probability mismatch_rate, and only one query support word
        // survives, so the raw query cannot reach mismatch documents ahead
        // of the distractors below.
        Rng mismatch_rng = topic_rng.split("mismatch");
        for (std::size_t r = 0; r < kRelevantPerQuery; ++r) {
            bool mismatch = mismatch_rng.bernoulli(spec.mismatch_rate);
            std::vector<std::string> tokens{mismatch ? synonym : term,
                                            topic_support[r % 2], topic_support[2]};
            Rng doc_rng = topic_rng.split("rel-doc").split(r);
            while (tokens.size() < spec.doc_len) tokens.push_back(sample_filler(doc_rng));
            shuffle_tokens(tokens, doc_rng);
            std::string doc_id = next_doc_id();
            dataset.qrels[query_id].insert(doc_id);
            docs.emplace_back(doc_id, join(tokens));
        }

        // Bridge document: both surface forms plus all supports; ranks top
        // for the raw query and exposes the synonym to feedback methods.
        {
            std::vector<std::string> tokens{term,          synonym,
                                            topic_support[0], topic_support[1],
                                            topic_support[2]};
            Rng doc_rng = topic_rng.split("bridge-doc");
            while (tokens.size() < spec.doc_len) tokens.push_back(sample_filler(doc_rng));
            shuffle_tokens(tokens, doc_rng);
            docs.emplace_back(next_doc_id(), join(tokens));
        }

        // Distractors: support words without either discriminative form.
        for (std::size_t x = 0; x < kDistractorsPerQuery; ++x) {
            std::vector<std::string> tokens{topic_support[0], topic_support[1],
                                            topic_support[2]};
            Rng doc_rng = topic_rng.split("distractor-doc").split(x);
            while (tokens.size() < spec.doc_len) tokens.push_back(sample_filler(doc_rng));
            shuffle_tokens(tokens, doc_rng);
            docs.emplace_back(next_doc_id(), join(tokens));
        }
    }

    Rng filler_rng = root.split("filler-docs");
    while (docs.size() < spec.n_docs) {
        std::vector<std::string> tokens;
        tokens.reserve(spec.doc_len);
        for (std::size_t i = 0; i < spec.doc_len; ++i) tokens.push_back(sample_filler(filler_rng));
        docs.emplace_back(next_doc_id(), join(tokens));
    }

    dataset.corpus = Corpus::build(std::move(docs));

    // Embeddings: each topic's term and synonym share a jittered center, so
    // similarity-based methods and learned policies can generalize; pool
    // words get independent vectors.
    EmbeddingTable table(spec.embedding_dim, spec.seed);
    Rng emb_rng = root.split("embeddings");
    for (std::size_t n = 0; n < spec.n_queries; ++n) {
        Rng center_rng = emb_rng.split("center").split(n);
        auto center = random_unit_vector(center_rng, spec.embedding_dim);
        Rng jitter_rng = emb_rng.split("jitter").split(n);
        table.insert(padded("term", n), jittered(center, jitter_rng, 0.25));
        table.insert(padded("syn", n), jittered(center, jitter_rng, 0.25));
    }
    Rng pool_rng = emb_rng.split("pool");
    for (const auto& word : supports) table.insert(word, random_unit_vector(pool_rng, spec.embedding_dim));
    for (const auto& word : fillers) table.insert(word, random_unit_vector(pool_rng, spec.embedding_dim));
    dataset.embeddings = std::move(table);

    return dataset;
}

void write_synthetic(const SynthDataset& dataset, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    auto path = [&out_dir](const char* name) {
        return (std::filesystem::path(out_dir) / name).string();
    };

    {
        std::ofstream out(path("corpus.jsonl"));
        if (!out) throw DataError("cannot write corpus.jsonl in " + out_dir);
        for (const auto& doc : dataset.corpus.documents()) {
            // Hand-rolled emit keeps lines byte-stable.
            out << "{\"id\": \"" << doc.doc_id << "\", \"text\": \"" << doc.text << "\"}\n";
        }
    }

    save_queries_tsv(dataset.queries, path("queries.tsv"));
    QuerySet train_split, dev_split;
    for (std::size_t i = 0; i < dataset.queries.queries.size(); ++i)
        (i % 2 == 0 ? train_split : dev_split).queries.push_back(dataset.queries.queries[i]);
    save_queries_tsv(train_split, path("train_queries.tsv"));
    save_queries_tsv(dev_split, path("dev_queries.tsv"));

    {
        std::vector<std::pair<std::string, std::string>> rows;
        for (const auto& query : dataset.queries.queries) {
            auto it = dataset.qrels.find(query.query_id);
            if (it == dataset.qrels.end()) continue;
            std::vector<std::string> ids(it->second.begin(), it->second.end());
            std::sort(ids.begin(), ids.end());
            for (auto& id : ids) rows.emplace_back(query.query_id, id);
        }
        save_qrels(rows, path("qrels.trec"));
    }

    {
        std::ofstream out(path("synonyms.tsv"));
        if (!out) throw DataError("cannot write synonyms.tsv in " + out_dir);
        for (const auto& [term, synonym] : dataset.synonyms) out << term << '\t' << synonym << '\n';
    }

    dataset.embeddings.save(path("embeddings.txt"));
}

}  // namespace qrw
