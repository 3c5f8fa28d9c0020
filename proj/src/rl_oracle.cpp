#include "qrw/rl_oracle.hpp"

#include "qrw/error.hpp"

namespace qrw {

RlOracleResult estimate_upper_bound(const InvertedIndex& index, const EmbeddingTable& table,
                                    const PolicyConfig& policy_config, const QuerySet& eval_set,
                                    const Qrels& qrels, const RlOracleConfig& config) {
    if (config.subset_size < 1) throw ConfigError("rl_oracle: subset_size must be >= 1");

    std::vector<Query> judged;
    for (const auto& query : eval_set.queries) {
        auto it = qrels.find(query.query_id);
        if (it != qrels.end() && !it->second.empty()) judged.push_back(query);
    }
    if (judged.empty()) throw DataError("rl_oracle: no judged queries in the evaluation set");

    RlOracleResult result;
    double total = 0.0;
    std::size_t subset_id = 0;
    for (std::size_t start = 0; start < judged.size(); start += config.subset_size, ++subset_id) {
        std::size_t end = std::min(judged.size(), start + config.subset_size);
        QuerySet subset;
        subset.queries.assign(judged.begin() + start, judged.begin() + end);

        TrainConfig train_config = config.train;
        train_config.seed = Rng(config.train.seed, "rl-oracle").split(subset_id).next_u64();

        // Fresh, independently seeded policy per subset; train and evaluate
        // on the same queries so the model is free to overfit.
        Policy policy(policy_config, &table, train_config.seed);
        TrainResult trained = train(index, policy, subset, subset, qrels, train_config, nullptr);

        SubsetResult sub;
        sub.subset_id = subset_id;
        sub.size = subset.queries.size();
        sub.best_reward = trained.best_dev_reward;
        sub.steps = trained.steps_run;
        total += sub.best_reward;
        result.subsets.push_back(sub);
    }
    result.upper_bound = total / static_cast<double>(result.subsets.size());
    return result;
}

}  // namespace qrw
