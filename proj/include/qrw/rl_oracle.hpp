#pragma once

#include <vector>

#include "qrw/train.hpp"

namespace qrw {

struct SubsetResult {
    std::size_t subset_id = 0;
    std::size_t size = 0;
    double best_reward = 0.0;  // R_i*
    std::size_t steps = 0;
};

struct RlOracleResult {
    std::vector<SubsetResult> subsets;
    double upper_bound = 0.0;  // R* = mean of R_i*
};

struct RlOracleConfig {
    std::size_t subset_size = 100;
    TrainConfig train;  // train.patience acts as the overfit stop rule
};

/// Conservative upper bound: split the evaluation set into consecutive
/// subsets, overfit a fresh policy on each (training and evaluating on the
/// same subset until the reward stops improving), and average the best
/// subset rewards.
RlOracleResult estimate_upper_bound(const InvertedIndex& index, const EmbeddingTable& table,
                                    const PolicyConfig& policy_config, const QuerySet& eval_set,
                                    const Qrels& qrels, const RlOracleConfig& config);

}  // namespace qrw
