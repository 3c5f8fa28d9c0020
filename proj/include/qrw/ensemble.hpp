#pragma once

#include <iosfwd>
#include <string>
#include <unordered_set>
#include <vector>

#include "qrw/embeddings.hpp"
#include "qrw/index.hpp"
#include "qrw/nn.hpp"
#include "qrw/tensor.hpp"

namespace qrw {

enum class PartitionScheme { random_disjoint, bagging, full };

PartitionScheme parse_partition_scheme(const std::string& name);

struct PartitionPlan {
    PartitionScheme scheme = PartitionScheme::random_disjoint;
    std::size_t n_agents = 10;
    uint64_t seed = 0;
};

/// Example-index lists per sub-agent. random_disjoint: disjoint parts with
/// sizes differing by at most one whose union is the dataset; bagging:
/// dataset-size draws with replacement per agent; full: identical copies.
std::vector<std::vector<std::size_t>> partition(std::size_t dataset_size,
                                                const PartitionPlan& plan);

/// One sub-agent's answer for one query; ranks are positions + 1.
struct AgentOutput {
    std::string agent_id;
    std::vector<std::string> reformulation;
    RankedList results;
};

/// s_j^A: sum of reciprocal ranks of doc_id over every output list that
/// contains it; lists without it contribute 0.
double accumulated_rank(const std::vector<AgentOutput>& outputs, const std::string& doc_id);

/// Number of output lists containing doc_id (the vote-count ablation).
double vote_count(const std::vector<AgentOutput>& outputs, const std::string& doc_id);

enum class AggregatorMode {
    product,         // s = s^A * s^R (reference)
    relevance_only,  // s = s^R
    rank_only,       // s = s^A
    vote_count,      // s = votes * s^R
    reduced_z,       // product, but z = [f(q0); f_BOW(a)]
};

AggregatorMode parse_aggregator_mode(const std::string& name);

struct AggregatorConfig {
    std::size_t dim = 16;          // D; must equal the embedding dimension
    std::size_t conv_width = 3;
    std::size_t bow_truncate = 128;  // result text window for f_BOW
    AggregatorMode mode = AggregatorMode::product;
    std::size_t epochs = 100;
    std::size_t batch_size = 16;
    uint64_t seed = 0;
    AdamConfig adam;
};

/// Learned answer scorer: s^R = sigmoid(W2 ReLU(W1 z + b1) + b2) with
/// z = [f(q0); f_BOW(a); f(q0) - f_BOW(a); f(q0) . f_BOW(a)] and f the
/// width-3 convolution + average pooling query encoder.
class Aggregator {
  public:
    Aggregator(AggregatorConfig config, const EmbeddingTable* table, uint64_t seed);
    Aggregator(AggregatorConfig config, const EmbeddingTable* table, ParamSet params);

    const AggregatorConfig& config() const { return config_; }
    const ParamSet& params() const { return params_; }
    ParamSet& params() { return params_; }
    const EmbeddingTable& table() const { return *table_; }

    Vec encode_query(const std::vector<std::string>& q0_tokens) const;  // f_CNN
    Vec encode_result(const InvertedIndex& index, const std::string& doc_id) const;  // f_BOW

    double relevance_score(const Vec& f_query, const Vec& f_answer) const;

    std::size_t z_dim() const;

  private:
    AggregatorConfig config_;
    const EmbeddingTable* table_;
    ParamSet params_;
};

/// Per-query training example: the deduplicated result pool with labels.
struct AggregatorExample {
    std::vector<std::string> q0;
    std::vector<std::string> doc_ids;
    std::vector<char> relevant;
};

struct AggregatorLossResult {
    double loss = 0.0;
    double kink_distance = 0.0;  // min |ReLU pre-activation| seen
};

/// Cross-entropy over s^R: -sum_rel log s^R - sum_nonrel log(1 - s^R).
AggregatorLossResult aggregator_loss(const Aggregator& aggregator, const InvertedIndex& index,
                                     const std::vector<AggregatorExample>& examples,
                                     GradMap* grads);

/// Adam on the aggregator loss; sub-agents stay frozen (their outputs are
/// precomputed). Throws DataError when no positive example exists.
ParamSet train_aggregator(const std::vector<AggregatorExample>& examples,
                          const AggregatorConfig& config, const EmbeddingTable& table,
                          const InvertedIndex& index);

/// Merge unique results across outputs, score s = s^A * s^R (per mode),
/// return the top-k with ties broken by ascending doc_id.
RankedList aggregate(const Aggregator& aggregator, const InvertedIndex& index,
                     const std::vector<std::string>& q0_tokens,
                     const std::vector<AgentOutput>& outputs, std::size_t k);

/// Oracle variant: s^R = 1 for relevant results and ~0 otherwise; mirrors
/// the perfect-aggregator upper bound.
RankedList aggregate_oracle(const InvertedIndex& index,
                            const std::vector<AgentOutput>& outputs,
                            const std::unordered_set<std::string>& relevant, std::size_t k);

/// The identity sub-agent: answers with the unmodified query.
AgentOutput identity_agent_output(const InvertedIndex& index,
                                  const std::vector<std::string>& q0_tokens, std::size_t k);

/// Tuple cache rows: one (query, agent) pair per line.
struct TupleRecord {
    std::string query_id;
    std::string agent_id;
    std::vector<std::string> reformulation;
    std::vector<std::string> doc_ids;
    std::vector<int> relevance;
};

void save_tuples_jsonl(const std::vector<TupleRecord>& tuples, const std::string& path);
std::vector<TupleRecord> load_tuples_jsonl(const std::string& path);

}  // namespace qrw
