#include "qrw/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "qrw/error.hpp"

namespace qrw {

double recall_at_k(const RankedList& ranked, const RelevantSet& relevant, std::size_t k) {
    if (relevant.empty()) throw DataError("recall_at_k: no judgments for query " + ranked.query_id);
    std::size_t found = 0;
    std::size_t limit = std::min(k, ranked.hits.size());
    for (std::size_t i = 0; i < limit; ++i)
        if (relevant.count(ranked.hits[i].doc_id)) ++found;
    return static_cast<double>(found) / static_cast<double>(relevant.size());
}

double precision_at_k(const RankedList& ranked, const RelevantSet& relevant, std::size_t k) {
    if (k == 0) return 0.0;
    std::size_t found = 0;
    std::size_t limit = std::min(k, ranked.hits.size());
    for (std::size_t i = 0; i < limit; ++i)
        if (relevant.count(ranked.hits[i].doc_id)) ++found;
    return static_cast<double>(found) / static_cast<double>(k);
}

double average_precision(const RankedList& ranked, const RelevantSet& relevant) {
    if (relevant.empty())
        throw DataError("average_precision: no judgments for query " + ranked.query_id);
    double sum = 0.0;
    std::size_t found = 0;
    for (std::size_t i = 0; i < ranked.hits.size(); ++i) {
        if (relevant.count(ranked.hits[i].doc_id)) {
            ++found;
            sum += static_cast<double>(found) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(relevant.size());
}

double reciprocal_rank(const RankedList& ranked, const RelevantSet& relevant, std::size_t cap) {
    if (relevant.empty())
        throw DataError("reciprocal_rank: no judgments for query " + ranked.query_id);
    std::size_t limit = std::min(cap, ranked.hits.size());
    for (std::size_t i = 0; i < limit; ++i)
        if (relevant.count(ranked.hits[i].doc_id)) return 1.0 / static_cast<double>(i + 1);
    return 0.0;
}

Metric parse_metric(const std::string& name) {
    if (name == "r" || name == "recall") return Metric::recall;
    if (name == "p" || name == "precision") return Metric::precision;
    if (name == "map" || name == "ap") return Metric::map;
    if (name == "mrr") return Metric::mrr;
    throw ConfigError("unknown metric: " + name);
}

MetricReport evaluate_run(const std::vector<RankedList>& run, const Qrels& qrels, Metric metric,
                          std::size_t k) {
    MetricReport report;
    double total = 0.0;
    for (const auto& list : run) {
        auto it = qrels.find(list.query_id);
        if (it == qrels.end() || it->second.empty()) {
            ++report.skipped;
            continue;
        }
        double value = 0.0;
        switch (metric) {
            case Metric::recall: value = recall_at_k(list, it->second, k); break;
            case Metric::precision: value = precision_at_k(list, it->second, k); break;
            case Metric::map: value = average_precision(list, it->second); break;
            case Metric::mrr: value = reciprocal_rank(list, it->second, k); break;
        }
        report.per_query[list.query_id] = value;
        total += value;
        ++report.evaluated;
    }
    report.mean = report.evaluated == 0 ? 0.0 : total / static_cast<double>(report.evaluated);
    return report;
}

namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, std::size_t> ngram_counts(const std::vector<std::string>& tokens, std::size_t k) {
    std::map<Ngram, std::size_t> counts;
    if (tokens.size() < k) return counts;
    for (std::size_t i = 0; i + k <= tokens.size(); ++i) {
        Ngram g(tokens.begin() + i, tokens.begin() + i + k);
        counts[g] += 1;
    }
    return counts;
}

std::vector<double> token_count_vector(const std::vector<std::string>& tokens,
                                       const std::map<std::string, std::size_t>& vocab) {
    std::vector<double> v(vocab.size(), 0.0);
    for (const auto& t : tokens) v[vocab.at(t)] += 1.0;
    return v;
}

double cosine_raw(const std::vector<double>& u, const std::vector<double>& v) {
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

}  // namespace

double sentence_bleu(const std::vector<std::string>& candidate,
                     const std::vector<std::string>& reference) {
    constexpr std::size_t max_order = 4;
    double log_prec = 0.0;
    for (std::size_t k = 1; k <= max_order; ++k) {
        auto cand = ngram_counts(candidate, k);
        auto ref = ngram_counts(reference, k);
        std::size_t matched = 0, total = 0;
        for (const auto& [gram, count] : cand) {
            total += count;
            auto it = ref.find(gram);
            if (it != ref.end()) matched += std::min(count, it->second);
        }
        // Add-one smoothing keeps short sentences from zeroing out.
        double p = (static_cast<double>(matched) + 1.0) / (static_cast<double>(total) + 1.0);
        log_prec += std::log(p);
    }
    double geo_mean = std::exp(log_prec / static_cast<double>(max_order));
    double c = static_cast<double>(candidate.size());
    double r = static_cast<double>(reference.size());
    double brevity = 1.0;
    if (c < r) brevity = c == 0.0 ? 0.0 : std::exp(1.0 - r / c);
    return brevity * geo_mean;
}

double pinc(const std::vector<std::string>& q, const std::vector<std::string>& q_prime) {
    std::size_t max_k = std::min<std::size_t>(4, q_prime.size());
    if (max_k == 0) return 0.0;
    double sum = 0.0;
    for (std::size_t k = 1; k <= max_k; ++k) {
        auto grams_q = ngram_counts(q, k);
        auto grams_qp = ngram_counts(q_prime, k);
        std::size_t shared = 0;
        for (const auto& [gram, count] : grams_qp)
            if (grams_q.count(gram)) ++shared;
        sum += 1.0 - static_cast<double>(shared) / static_cast<double>(grams_qp.size());
    }
    return sum / static_cast<double>(max_k);
}

DiversityReport diversity_report(const ReformulationSet& sets) {
    DiversityReport report;
    double cos_sum = 0.0, bleu_sum = 0.0, pinc_sum = 0.0, std_sum = 0.0;
    std::size_t pairwise_sets = 0, std_sets = 0;

    for (const auto& set : sets.sets) {
        if (set.empty()) continue;

        double mean_len = 0.0;
        for (const auto& q : set) mean_len += static_cast<double>(q.size());
        mean_len /= static_cast<double>(set.size());
        double var = 0.0;
        for (const auto& q : set) {
            double d = static_cast<double>(q.size()) - mean_len;
            var += d * d;
        }
        std_sum += std::sqrt(var / static_cast<double>(set.size()));
        ++std_sets;

        if (set.size() < 2) continue;

        std::map<std::string, std::size_t> vocab;
        for (const auto& q : set)
            for (const auto& t : q)
                vocab.emplace(t, vocab.size());

        double set_cos = 0.0, set_bleu = 0.0, set_pinc = 0.0;
        std::size_t pairs = 0;
        for (std::size_t a = 0; a < set.size(); ++a) {
            auto va = token_count_vector(set[a], vocab);
            for (std::size_t b = 0; b < set.size(); ++b) {
                if (a == b) continue;
                auto vb = token_count_vector(set[b], vocab);
                set_cos += cosine_raw(va, vb);
                set_bleu += sentence_bleu(set[a], set[b]);
                set_pinc += pinc(set[a], set[b]);
                ++pairs;
            }
        }
        cos_sum += set_cos / static_cast<double>(pairs);
        bleu_sum += set_bleu / static_cast<double>(pairs);
        pinc_sum += set_pinc / static_cast<double>(pairs);
        ++pairwise_sets;
    }

    if (pairwise_sets > 0) {
        report.p_cos = cos_sum / static_cast<double>(pairwise_sets);
        report.p_bleu = bleu_sum / static_cast<double>(pairwise_sets);
        report.pinc = pinc_sum / static_cast<double>(pairwise_sets);
    }
    if (std_sets > 0) report.length_std = std_sum / static_cast<double>(std_sets);
    report.pairwise_sets = pairwise_sets;
    return report;
}

}  // namespace qrw
