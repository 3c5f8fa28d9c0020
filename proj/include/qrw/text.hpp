#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace qrw {

using TokenId = uint32_t;
inline constexpr TokenId kNoToken = static_cast<TokenId>(-1);

/// Lowercase + split on non-alphanumeric. No stemming, no stopword removal;
/// callers that want stopword filtering opt in via is_stopword().
std::vector<std::string> tokenize(const std::string& text);

bool is_stopword(const std::string& token);

/// Dense surface <-> id bijection with per-term document frequencies.
class Vocabulary {
  public:
    TokenId add(const std::string& surface);

    TokenId id_of(const std::string& surface) const;  // kNoToken when absent
    const std::string& surface_of(TokenId id) const;
    bool contains(const std::string& surface) const { return id_of(surface) != kNoToken; }
    std::size_t size() const { return surfaces_.size(); }

    uint32_t df(TokenId id) const { return df_[id]; }
    void bump_df(TokenId id) { ++df_[id]; }

  private:
    std::unordered_map<std::string, TokenId> ids_;
    std::vector<std::string> surfaces_;
    std::vector<uint32_t> df_;
};

struct Document {
    std::string doc_id;
    std::string text;
    std::vector<TokenId> tokens;
};

/// Immutable token-level view of a document collection.
class Corpus {
  public:
    /// Tokenizes, builds the vocabulary with document frequencies and
    /// collection term counts. Throws DataError on duplicate doc ids.
    static Corpus build(std::vector<std::pair<std::string, std::string>> id_text_pairs);

    const std::vector<Document>& documents() const { return documents_; }
    const Document& doc(std::size_t ordinal) const { return documents_[ordinal]; }
    std::size_t size() const { return documents_.size(); }

    const Vocabulary& vocabulary() const { return vocab_; }
    uint64_t total_tokens() const { return total_tokens_; }
    uint64_t collection_tf(TokenId id) const { return collection_tf_[id]; }

  private:
    std::vector<Document> documents_;
    Vocabulary vocab_;
    std::vector<uint64_t> collection_tf_;
    uint64_t total_tokens_ = 0;
};

/// JSONL corpus reader: one {"id": ..., "text": ...} object per line.
Corpus load_corpus_jsonl(const std::string& path);

struct Query {
    std::string query_id;
    std::string text;
};

struct QuerySet {
    std::vector<Query> queries;
};

/// query_id -> relevant doc ids (rel > 0 only).
using Qrels = std::unordered_map<std::string, std::unordered_set<std::string>>;

/// TSV reader: query_id<TAB>text per line.
QuerySet load_queries_tsv(const std::string& path);
void save_queries_tsv(const QuerySet& queries, const std::string& path);

/// TREC qrels: `qid 0 docid rel`.
Qrels load_qrels(const std::string& path);
void save_qrels(const std::vector<std::pair<std::string, std::string>>& qid_docid, const std::string& path);

}  // namespace qrw
