#pragma once

#include <string>
#include <vector>

#include "qrw/embeddings.hpp"
#include "qrw/index.hpp"

namespace qrw {

enum class ExpansionMethod { tfidf, rm, emb_feedback, emb_vocab };

ExpansionMethod parse_expansion_method(const std::string& name);

struct ExpansionConfig {
    ExpansionMethod method = ExpansionMethod::tfidf;
    std::size_t terms_per_source = 300;  // N
    std::size_t feedback_docs = 9;       // K
    double rm_lambda = 0.65;
    double dirichlet_u = 1500.0;
};

/// Adds the top-N TF-IDF terms of each of the top-K feedback documents to
/// the query. Stopwords are filtered here (this method opts in); q0 tokens
/// are never removed and stay in original order.
std::vector<std::string> prf_tfidf(const std::vector<std::string>& q0_tokens,
                                   const RankedList& feedback, const InvertedIndex& index,
                                   const ExpansionConfig& config);

/// Relevance-model term posterior over the candidate vocabulary (q0 terms
/// plus all terms of the K feedback documents), renormalized to sum to 1.
struct RelevanceModelResult {
    std::vector<std::pair<std::string, double>> distribution;  // sorted desc, tie by surface
    std::vector<std::string> expanded_query;
};

RelevanceModelResult relevance_model(const std::vector<std::string>& q0_tokens,
                                     const RankedList& feedback, const InvertedIndex& index,
                                     const ExpansionConfig& config);

/// Candidates ranked by cosine similarity between their embedding and the
/// query's mean embedding; top-N appended. Source is either the terms of
/// the feedback documents or the embedding table's vocabulary.
std::vector<std::string> embedding_expand(const std::vector<std::string>& q0_tokens,
                                          const RankedList& feedback, const InvertedIndex& index,
                                          const EmbeddingTable& table,
                                          const ExpansionConfig& config);

/// Dispatch on config.method.
std::vector<std::string> expand_query(const std::vector<std::string>& q0_tokens,
                                      const RankedList& feedback, const InvertedIndex& index,
                                      const EmbeddingTable* table, const ExpansionConfig& config);

}  // namespace qrw
