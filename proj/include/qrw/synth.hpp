#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qrw/embeddings.hpp"
#include "qrw/text.hpp"

namespace qrw {

struct SynthSpec {
    std::size_t n_docs = 1000;
    std::size_t n_queries = 200;
    std::size_t vocab_size = 1200;
    std::size_t doc_len = 12;         // tokens per document
    double mismatch_rate = 0.8;
    uint64_t seed = 0;
    std::size_t embedding_dim = 16;
};

struct SynthDataset {
    Corpus corpus;
    QuerySet queries;
    Qrels qrels;
    std::vector<std::pair<std::string, std::string>> synonyms;  // query term -> doc synonym
    EmbeddingTable embeddings;
};

/// Deterministic vocabulary-mismatch benchmark. Each query carries one
/// discriminative term; with probability mismatch_rate a relevant document
/// replaces it with a synonym that never matches the raw query. Bridge
/// documents rank high for the raw query and contain both forms, so
/// feedback-based expansion has guaranteed headroom. Distractor documents
/// share the query's support terms and crowd out mismatch documents until
/// the synonym is added.
SynthDataset generate_synthetic(const SynthSpec& spec);

/// Writes corpus.jsonl, queries.tsv, train_queries.tsv, dev_queries.tsv,
/// qrels.trec, synonyms.tsv and embeddings.txt into out_dir.
void write_synthetic(const SynthDataset& dataset, const std::string& out_dir);

}  // namespace qrw
