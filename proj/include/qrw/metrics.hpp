#pragma once

#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include "qrw/index.hpp"
#include "qrw/text.hpp"

namespace qrw {

using RelevantSet = std::unordered_set<std::string>;

/// |top-K hits ∩ relevant| / |relevant|. Throws DataError on an empty
/// relevant set; callers skip unjudged queries.
double recall_at_k(const RankedList& ranked, const RelevantSet& relevant, std::size_t k);

/// |top-K hits ∩ relevant| / K. Lists shorter than K count the missing
/// slots as misses.
double precision_at_k(const RankedList& ranked, const RelevantSet& relevant, std::size_t k);

/// Sum over ranks k of P@k * rel(k), divided by |relevant|.
double average_precision(const RankedList& ranked, const RelevantSet& relevant);

/// 1/rank of the first relevant hit if rank <= cap, else 0.
double reciprocal_rank(const RankedList& ranked, const RelevantSet& relevant, std::size_t cap);

struct MetricReport {
    std::map<std::string, double> per_query;  // query_id -> value
    double mean = 0.0;
    std::size_t evaluated = 0;
    std::size_t skipped = 0;  // queries without judgments
};

enum class Metric { recall, precision, map, mrr };

Metric parse_metric(const std::string& name);  // "r", "p", "map", "mrr"

/// Macro-averaged metric over a run. K is the cutoff for recall/precision
/// and the cap for MRR; ignored for MAP.
MetricReport evaluate_run(const std::vector<RankedList>& run, const Qrels& qrels, Metric metric,
                          std::size_t k);

/// One reformulation set per original query: token lists of each variant.
struct ReformulationSet {
    std::vector<std::vector<std::vector<std::string>>> sets;
};

struct DiversityReport {
    double p_cos = 0.0;      // mean pairwise cosine of token-count vectors
    double p_bleu = 0.0;     // mean pairwise sentence BLEU (add-one smoothed)
    double pinc = 0.0;       // mean pairwise PINC, k-grams up to 4
    double length_std = 0.0; // mean per-set std of reformulation lengths
    std::size_t pairwise_sets = 0;  // sets with >= 2 members
};

/// Sentence-level BLEU of candidate vs reference with add-one smoothing on
/// k-gram precisions up to 4-grams and the standard brevity penalty.
double sentence_bleu(const std::vector<std::string>& candidate,
                     const std::vector<std::string>& reference);

/// PINC(q, q'): mean over k in 1..min(4, |q'|) of the fraction of q'
/// k-grams absent from q.
double pinc(const std::vector<std::string>& q, const std::vector<std::string>& q_prime);

/// Pairwise terms average over ordered pairs q != q' within each set;
/// singleton sets are skipped for pairwise metrics but counted in
/// length_std.
DiversityReport diversity_report(const ReformulationSet& sets);

}  // namespace qrw
