#include "qrw/index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <unordered_set>

#include <json.hpp>

#include "qrw/error.hpp"

namespace qrw {

void InvertedIndex::index_postings() {
    postings_.assign(vocab_.size(), PostingList{});
    for (std::size_t t = 0; t < postings_.size(); ++t)
        postings_[t].term = static_cast<TokenId>(t);

    std::vector<uint64_t> collection_tf(vocab_.size(), 0);
    total_tokens_ = 0;
    ordinal_by_id_.clear();
    for (uint32_t ordinal = 0; ordinal < doc_tokens_.size(); ++ordinal) {
        ordinal_by_id_.emplace(doc_ids_[ordinal], ordinal);
        std::map<TokenId, uint32_t> tf;
        for (TokenId id : doc_tokens_[ordinal]) {
            tf[id] += 1;
            collection_tf[id] += 1;
            ++total_tokens_;
        }
        // std::map iteration gives ascending term ids; ordinals ascend across
        // the outer loop, so postings come out sorted.
        for (const auto& [term, freq] : tf) {
            postings_[term].entries.emplace_back(ordinal, freq);
            vocab_.bump_df(term);
        }
    }

    avgdl_ = doc_tokens_.empty()
                 ? 0.0
                 : static_cast<double>(total_tokens_) / static_cast<double>(doc_tokens_.size());
    collection_prob_.assign(vocab_.size(), 0.0);
    if (total_tokens_ > 0)
        for (std::size_t t = 0; t < collection_tf.size(); ++t)
            collection_prob_[t] =
                static_cast<double>(collection_tf[t]) / static_cast<double>(total_tokens_);
}

InvertedIndex InvertedIndex::build(const Corpus& corpus, Bm25Params params) {
    InvertedIndex index;
    index.params_ = params;

    const auto& docs = corpus.documents();
    index.doc_ids_.reserve(docs.size());
    index.doc_tokens_.reserve(docs.size());
    for (const auto& doc : docs) {
        index.doc_ids_.push_back(doc.doc_id);
        std::vector<TokenId> local;
        local.reserve(doc.tokens.size());
        for (TokenId id : doc.tokens)
            local.push_back(index.vocab_.add(corpus.vocabulary().surface_of(id)));
        index.doc_tokens_.push_back(std::move(local));
    }
    index.index_postings();
    return index;
}

std::optional<std::size_t> InvertedIndex::ordinal_of(const std::string& doc_id) const {
    auto it = ordinal_by_id_.find(doc_id);
    if (it == ordinal_by_id_.end()) return std::nullopt;
    return it->second;
}

std::vector<TokenId> InvertedIndex::distinct_terms(std::size_t ordinal) const {
    std::vector<TokenId> out;
    std::unordered_set<TokenId> seen;
    for (TokenId id : doc_tokens_[ordinal])
        if (seen.insert(id).second) out.push_back(id);
    return out;
}

uint32_t InvertedIndex::df(TokenId term) const {
    return term < vocab_.size() ? vocab_.df(term) : 0;
}

uint32_t InvertedIndex::tf(TokenId term, std::size_t ordinal) const {
    if (term >= postings_.size()) return 0;
    const auto& entries = postings_[term].entries;
    auto it = std::lower_bound(entries.begin(), entries.end(), ordinal,
                               [](const auto& e, std::size_t d) { return e.first < d; });
    if (it != entries.end() && it->first == ordinal) return it->second;
    return 0;
}

double InvertedIndex::idf(TokenId term) const {
    double n = static_cast<double>(n_docs());
    double d = static_cast<double>(df(term));
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double InvertedIndex::bm25_score(const std::vector<std::string>& query_tokens,
                                 std::size_t ordinal) const {
    double score = 0.0;
    double len_norm = avgdl_ > 0.0 ? static_cast<double>(doc_len(ordinal)) / avgdl_ : 0.0;
    for (const auto& token : query_tokens) {
        TokenId term = vocab_.id_of(token);
        if (term == kNoToken) continue;
        double f = tf(term, ordinal);
        if (f == 0.0) continue;
        double denom = f + params_.k1 * (1.0 - params_.b + params_.b * len_norm);
        score += idf(term) * f * (params_.k1 + 1.0) / denom;
    }
    return score;
}

std::vector<double> InvertedIndex::score_all(const std::vector<std::string>& query_tokens) const {
    std::vector<double> scores(n_docs(), 0.0);
    for (const auto& token : query_tokens) {
        TokenId term = vocab_.id_of(token);
        if (term == kNoToken) continue;
        double w_idf = idf(term);
        for (const auto& [ordinal, f] : postings_[term].entries) {
            double len_norm = avgdl_ > 0.0 ? static_cast<double>(doc_len(ordinal)) / avgdl_ : 0.0;
            double denom = f + params_.k1 * (1.0 - params_.b + params_.b * len_norm);
            scores[ordinal] += w_idf * f * (params_.k1 + 1.0) / denom;
        }
    }
    return scores;
}

RankedList InvertedIndex::search(const std::vector<std::string>& query_tokens,
                                 std::size_t k) const {
    RankedList out;
    if (k == 0 || n_docs() == 0) return out;
    auto scores = score_all(query_tokens);

    std::vector<uint32_t> matched;
    for (uint32_t d = 0; d < scores.size(); ++d)
        if (scores[d] > 0.0) matched.push_back(d);

    std::sort(matched.begin(), matched.end(), [&](uint32_t a, uint32_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return doc_ids_[a] < doc_ids_[b];
    });
    if (matched.size() > k) matched.resize(k);

    out.hits.reserve(matched.size());
    for (uint32_t d : matched) out.hits.push_back({doc_ids_[d], scores[d]});
    return out;
}

double InvertedIndex::dirichlet_prob(TokenId term, std::size_t ordinal, double u) const {
    double len = static_cast<double>(doc_len(ordinal));
    if (u == 0.0 && len == 0.0)
        throw NumericError("dirichlet_prob: u = 0 on an empty document");
    double f = term == kNoToken ? 0.0 : static_cast<double>(tf(term, ordinal));
    double pc = (term == kNoToken || term >= collection_prob_.size()) ? 0.0
                                                                      : collection_prob_[term];
    return (f + u * pc) / (len + u);
}

void InvertedIndex::save(const std::string& path) const {
    nlohmann::json j;
    j["version"] = 1;
    j["k1"] = params_.k1;
    j["b"] = params_.b;
    j["doc_ids"] = doc_ids_;
    std::vector<std::string> surfaces(vocab_.size());
    for (std::size_t t = 0; t < vocab_.size(); ++t) surfaces[t] = vocab_.surface_of(t);
    j["vocab"] = surfaces;
    j["doc_tokens"] = doc_tokens_;

    std::ofstream out(path);
    if (!out) throw DataError("cannot write index file: " + path);
    out << j.dump() << '\n';
}

InvertedIndex InvertedIndex::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open index file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": parse error: " + e.what());
    }
    if (!j.contains("version") || j["version"].get<int>() != 1)
        throw DataError(path + ": unsupported index version");

    InvertedIndex index;
    index.params_.k1 = j["k1"].get<double>();
    index.params_.b = j["b"].get<double>();
    index.doc_ids_ = j["doc_ids"].get<std::vector<std::string>>();
    for (const auto& s : j["vocab"]) index.vocab_.add(s.get<std::string>());
    index.doc_tokens_ = j["doc_tokens"].get<std::vector<std::vector<TokenId>>>();
    if (index.doc_tokens_.size() != index.doc_ids_.size())
        throw DataError(path + ": doc_tokens/doc_ids size mismatch");
    for (const auto& tokens : index.doc_tokens_)
        for (TokenId id : tokens)
            if (id >= index.vocab_.size()) throw DataError(path + ": token id out of range");
    index.index_postings();
    return index;
}

}  // namespace qrw
