#include "qrw/prf.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "qrw/error.hpp"

namespace qrw {

ExpansionMethod parse_expansion_method(const std::string& name) {
    if (name == "tfidf") return ExpansionMethod::tfidf;
    if (name == "rm") return ExpansionMethod::rm;
    if (name == "emb_feedback") return ExpansionMethod::emb_feedback;
    if (name == "emb_vocab") return ExpansionMethod::emb_vocab;
    throw ConfigError("unknown expansion method: " + name);
}

namespace {

std::vector<std::string> append_terms(const std::vector<std::string>& q0_tokens,
                                      const std::vector<std::string>& additions) {
    std::vector<std::string> out = q0_tokens;
    std::unordered_set<std::string> seen(q0_tokens.begin(), q0_tokens.end());
    for (const auto& term : additions)
        if (seen.insert(term).second) out.push_back(term);
    return out;
}

std::vector<std::size_t> feedback_ordinals(const RankedList& feedback, const InvertedIndex& index,
                                           std::size_t k) {
    std::vector<std::size_t> ordinals;
    for (const auto& hit : feedback.hits) {
        if (ordinals.size() >= k) break;
        auto ordinal = index.ordinal_of(hit.doc_id);
        if (ordinal) ordinals.push_back(*ordinal);
    }
    return ordinals;
}

}  // namespace

std::vector<std::string> prf_tfidf(const std::vector<std::string>& q0_tokens,
                                   const RankedList& feedback, const InvertedIndex& index,
                                   const ExpansionConfig& config) {
    auto ordinals = feedback_ordinals(feedback, index, config.feedback_docs);
    std::vector<std::string> additions;
    for (std::size_t ordinal : ordinals) {
        std::vector<std::pair<std::string, double>> scored;
        for (TokenId term : index.distinct_terms(ordinal)) {
            const std::string& surface = index.vocabulary().surface_of(term);
            if (is_stopword(surface)) continue;
            double score = static_cast<double>(index.tf(term, ordinal)) * index.idf(term);
            scored.emplace_back(surface, score);
        }
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        if (scored.size() > config.terms_per_source) scored.resize(config.terms_per_source);
        for (auto& [surface, score] : scored) additions.push_back(std::move(surface));
    }
    return append_terms(q0_tokens, additions);
}

RelevanceModelResult relevance_model(const std::vector<std::string>& q0_tokens,
                                     const RankedList& feedback, const InvertedIndex& index,
                                     const ExpansionConfig& config) {
    RelevanceModelResult result;
    auto ordinals = feedback_ordinals(feedback, index, config.feedback_docs);

    // Candidate vocabulary: q0 terms plus every term of the feedback docs.
    // Including q0 keeps the lambda=0 limit exactly P'(t|q0).
    std::vector<std::string> candidates;
    std::unordered_set<std::string> candidate_set;
    std::unordered_map<std::string, double> prior;  // P'(t|q0)
    for (const auto& tok : q0_tokens) {
        if (candidate_set.insert(tok).second) candidates.push_back(tok);
        prior[tok] += 1.0 / static_cast<double>(q0_tokens.size());
    }
    for (std::size_t ordinal : ordinals) {
        for (TokenId term : index.distinct_terms(ordinal)) {
            const std::string& surface = index.vocabulary().surface_of(term);
            if (candidate_set.insert(surface).second) candidates.push_back(surface);
        }
    }
    if (candidates.empty()) throw NumericError("relevance_model: empty candidate vocabulary");

    // P(q0|d) = prod_w P(w|d), in log space; corpus-OOV query terms are
    // skipped, mirroring the search engine's behavior.
    std::vector<double> query_likelihood(ordinals.size(), 0.0);
    for (std::size_t i = 0; i < ordinals.size(); ++i) {
        double log_p = 0.0;
        for (const auto& tok : q0_tokens) {
            TokenId term = index.vocabulary().id_of(tok);
            if (term == kNoToken) continue;
            double p = index.dirichlet_prob(term, ordinals[i], config.dirichlet_u);
            log_p += std::log(p);
        }
        query_likelihood[i] = std::exp(log_p);
    }

    double doc_prior = ordinals.empty() ? 0.0 : 1.0 / static_cast<double>(ordinals.size());
    std::vector<std::pair<std::string, double>> posterior;
    posterior.reserve(candidates.size());
    double total = 0.0;
    for (const auto& surface : candidates) {
        double fb = 0.0;
        TokenId term = index.vocabulary().id_of(surface);
        if (term != kNoToken) {
            for (std::size_t i = 0; i < ordinals.size(); ++i)
                fb += doc_prior * index.dirichlet_prob(term, ordinals[i], config.dirichlet_u) *
                      query_likelihood[i];
        }
        auto it = prior.find(surface);
        double p_prior = it == prior.end() ? 0.0 : it->second;
        double mass = (1.0 - config.rm_lambda) * p_prior + config.rm_lambda * fb;
        posterior.emplace_back(surface, mass);
        total += mass;
    }
    if (total <= 0.0) throw NumericError("relevance_model: degenerate all-zero term mass");
    for (auto& [surface, mass] : posterior) mass /= total;

    std::sort(posterior.begin(), posterior.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    std::vector<std::string> additions;
    for (std::size_t i = 0; i < posterior.size() && i < config.terms_per_source; ++i)
        additions.push_back(posterior[i].first);
    result.expanded_query = append_terms(q0_tokens, additions);
    result.distribution = std::move(posterior);
    return result;
}

std::vector<std::string> embedding_expand(const std::vector<std::string>& q0_tokens,
                                          const RankedList& feedback, const InvertedIndex& index,
                                          const EmbeddingTable& table,
                                          const ExpansionConfig& config) {
    if (table.size() == 0) throw DataError("embedding_expand: empty embedding table");

    std::vector<std::string> candidates;
    if (config.method == ExpansionMethod::emb_vocab) {
        candidates = table.words();
    } else {
        std::unordered_set<std::string> seen;
        for (std::size_t ordinal : feedback_ordinals(feedback, index, config.feedback_docs)) {
            for (TokenId term : index.distinct_terms(ordinal)) {
                const std::string& surface = index.vocabulary().surface_of(term);
                if (seen.insert(surface).second) candidates.push_back(surface);
            }
        }
    }

    auto centroid = bow_encode(q0_tokens, table);
    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(candidates.size());
    for (const auto& surface : candidates)
        scored.emplace_back(surface, cosine(centroid, table.lookup(surface)));
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (scored.size() > config.terms_per_source) scored.resize(config.terms_per_source);

    std::vector<std::string> additions;
    additions.reserve(scored.size());
    for (auto& [surface, score] : scored) additions.push_back(std::move(surface));
    return append_terms(q0_tokens, additions);
}

std::vector<std::string> expand_query(const std::vector<std::string>& q0_tokens,
                                      const RankedList& feedback, const InvertedIndex& index,
                                      const EmbeddingTable* table, const ExpansionConfig& config) {
    switch (config.method) {
        case ExpansionMethod::tfidf: return prf_tfidf(q0_tokens, feedback, index, config);
        case ExpansionMethod::rm:
            return relevance_model(q0_tokens, feedback, index, config).expanded_query;
        case ExpansionMethod::emb_feedback:
        case ExpansionMethod::emb_vocab:
            if (table == nullptr) throw ConfigError("embedding expansion requires an embedding table");
            return embedding_expand(q0_tokens, feedback, index, *table, config);
    }
    throw ConfigError("unknown expansion method");
}

}  // namespace qrw
