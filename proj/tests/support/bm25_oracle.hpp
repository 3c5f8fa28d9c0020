#pragma once

// Test-only brute-force BM25 oracle. Recomputes every statistic from raw
// token lists, independent of the inverted-index implementation; shares
// only the scoring formula, which is the contract under test.

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace qrw_test {

struct OracleDoc {
    std::string doc_id;
    std::vector<std::string> tokens;
};

inline std::vector<std::pair<std::string, double>> brute_force_bm25(
    const std::vector<OracleDoc>& docs, const std::vector<std::string>& query, double k1,
    double b, std::size_t k) {
    double total_tokens = 0.0;
    for (const auto& doc : docs) total_tokens += static_cast<double>(doc.tokens.size());
    double avgdl = docs.empty() ? 0.0 : total_tokens / static_cast<double>(docs.size());

    std::unordered_map<std::string, std::size_t> df;
    for (const auto& doc : docs) {
        std::unordered_set<std::string> seen(doc.tokens.begin(), doc.tokens.end());
        for (const auto& term : seen) df[term] += 1;
    }

    std::vector<std::pair<std::string, double>> scored;
    for (const auto& doc : docs) {
        double score = 0.0;
        for (const auto& term : query) {
            auto df_it = df.find(term);
            if (df_it == df.end()) continue;
            double tf = static_cast<double>(
                std::count(doc.tokens.begin(), doc.tokens.end(), term));
            if (tf == 0.0) continue;
            double idf = std::log(1.0 + (static_cast<double>(docs.size()) -
                                         static_cast<double>(df_it->second) + 0.5) /
                                            (static_cast<double>(df_it->second) + 0.5));
            double len_norm =
                avgdl > 0.0 ? static_cast<double>(doc.tokens.size()) / avgdl : 0.0;
            score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len_norm));
        }
        if (score > 0.0) scored.emplace_back(doc.doc_id, score);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b_) {
        if (a.second != b_.second) return a.second > b_.second;
        return a.first < b_.first;
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

}  // namespace qrw_test
