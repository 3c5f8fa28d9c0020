#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "qrw/text.hpp"

namespace qrw {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Sorted (doc ordinal, term frequency) pairs for one term.
struct PostingList {
    TokenId term = kNoToken;
    std::vector<std::pair<uint32_t, uint32_t>> entries;  // ascending doc ordinal, tf >= 1
};

struct Hit {
    std::string doc_id;
    double score;
};

/// Ordered retrieval output. Scores non-increasing; ties broken by
/// ascending doc_id; no duplicates.
struct RankedList {
    std::string query_id;
    std::vector<Hit> hits;
};

/// The black-box retrieval environment: an immutable inverted index with
/// BM25 ranking and Dirichlet-smoothed document language models. Keeps the
/// forward token store so feedback methods can read retrieved documents.
class InvertedIndex {
  public:
    static InvertedIndex build(const Corpus& corpus, Bm25Params params = {});

    std::size_t n_docs() const { return doc_ids_.size(); }
    double avgdl() const { return avgdl_; }
    uint32_t doc_len(std::size_t ordinal) const {
        return static_cast<uint32_t>(doc_tokens_[ordinal].size());
    }
    const std::string& doc_id(std::size_t ordinal) const { return doc_ids_[ordinal]; }
    std::optional<std::size_t> ordinal_of(const std::string& doc_id) const;
    const std::vector<TokenId>& doc_tokens(std::size_t ordinal) const {
        return doc_tokens_[ordinal];
    }
    /// Distinct terms of a document in first-occurrence order.
    std::vector<TokenId> distinct_terms(std::size_t ordinal) const;

    const Vocabulary& vocabulary() const { return vocab_; }
    const Bm25Params& params() const { return params_; }

    uint32_t df(TokenId term) const;
    uint32_t tf(TokenId term, std::size_t ordinal) const;

    /// ln(1 + (N - df + 0.5) / (df + 0.5)); non-negative by construction.
    double idf(TokenId term) const;

    /// P(t|C): collection probability; sums to 1 over the vocabulary.
    double collection_prob(TokenId term) const { return collection_prob_[term]; }

    /// BM25 score of one document for a query given as surface tokens.
    /// Query term multiplicity multiplies the term's contribution; terms
    /// absent from the vocabulary are skipped.
    double bm25_score(const std::vector<std::string>& query_tokens, std::size_t ordinal) const;

    /// Top-k by BM25, deterministic tie-break by ascending doc_id.
    RankedList search(const std::vector<std::string>& query_tokens, std::size_t k) const;

    /// Dirichlet-smoothed P(t|d) = (tf + u P(t|C)) / (|d| + u).
    /// Throws NumericError when u == 0 and the document is empty.
    double dirichlet_prob(TokenId term, std::size_t ordinal, double u) const;

    /// Versioned JSON persistence. The forward store is the source of
    /// truth; postings and statistics are rebuilt on load.
    void save(const std::string& path) const;
    static InvertedIndex load(const std::string& path);

  private:
    Bm25Params params_;
    Vocabulary vocab_;
    std::vector<PostingList> postings_;  // indexed by TokenId
    std::vector<std::vector<TokenId>> doc_tokens_;
    std::vector<std::string> doc_ids_;
    std::unordered_map<std::string, std::size_t> ordinal_by_id_;
    std::vector<double> collection_prob_;
    double avgdl_ = 0.0;
    uint64_t total_tokens_ = 0;

    void index_postings();
    std::vector<double> score_all(const std::vector<std::string>& query_tokens) const;
};

}  // namespace qrw
