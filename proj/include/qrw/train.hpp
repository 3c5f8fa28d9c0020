#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qrw/index.hpp"
#include "qrw/metrics.hpp"
#include "qrw/policy.hpp"
#include "qrw/text.hpp"

namespace qrw {

enum class Phase { train, eval };

struct TrainConfig {
    std::size_t reward_k = 40;        // reward is R@reward_k
    double epsilon = 0.5;             // threshold selection at eval time
    double entropy_coef = 1e-3;       // lambda
    double value_coef = 0.1;          // alpha
    std::size_t candidate_terms = 300;  // M: first M words per feedback doc
    std::size_t feedback_docs = 7;      // K: feedback depth for candidates
    std::size_t rounds = 2;             // searches per episode (>= 2)
    uint64_t seed = 0;
    std::size_t max_steps = 2000;
    std::size_t batch_size = 8;
    bool seq_mode = false;
    std::size_t beam_width = 4;
    std::size_t max_seq_terms = 50;
    std::size_t eval_every = 50;
    std::size_t patience = 20;          // dev evaluations without improvement
    std::size_t run_depth = 1000;       // list depth for persisted runs
    AdamConfig adam;
};

/// One selection stage: the candidate pool shown to the policy and the
/// indices it picked (an ordered sequence in seq mode).
struct StageRecord {
    std::vector<CandidateTerm> candidates;
    std::vector<std::size_t> selected;
    bool ended_with_stop = false;  // seq mode only
};

struct Episode {
    std::string query_id;
    std::vector<std::string> q0;
    RankedList feedback;  // D_0
    std::vector<StageRecord> stages;
    std::vector<std::string> reformulated;  // final q'
    RankedList result;                      // D'
    double reward = 0.0;                    // R
    double baseline = 0.0;                  // Rbar at rollout time
};

/// Candidate pool for one selection stage: q0 terms plus, in eval phase,
/// the first M tokens of each of the top-K documents; in train phase the
/// first M tokens of one document sampled uniformly from the top-K.
std::vector<CandidateTerm> assemble_candidates(const std::vector<std::string>& q0_tokens,
                                               const RankedList& results,
                                               const InvertedIndex& index,
                                               const TrainConfig& config, Phase phase,
                                               std::size_t context_window, Rng* rng);

struct LossBreakdown {
    double total = 0.0;
    double ca = 0.0;  // REINFORCE surrogate
    double cb = 0.0;  // value regression
    double ch = 0.0;  // entropy term, as printed
    double baseline = 0.0;
};

/// Loss of one episode under the current parameters; accumulates exact
/// analytic gradients for every trainable tensor (including "oov") when
/// grads is non-null. The baseline is treated as constant inside ca.
LossBreakdown episode_loss(const Policy& policy, const Episode& episode, const TrainConfig& config,
                           GradMap* grads);

struct LossStats {
    double total = 0.0, ca = 0.0, cb = 0.0, ch = 0.0;
    double mean_reward = 0.0, mean_baseline = 0.0;
};

/// Batch-mean gradients of episode_loss followed by one Adam step.
/// Throws NumericError (with the offending component) on non-finite loss.
LossStats reinforce_update(const std::vector<Episode>& episodes, Policy& policy, AdamState& state,
                           const TrainConfig& config);

/// Full environment interaction for one query. In train phase selections
/// are sampled (rng required); in eval phase selection is thresholded (or
/// beam-decoded in seq mode) and deterministic.
Episode run_episode(const InvertedIndex& index, const Policy& policy, const Query& query,
                    const Qrels& qrels, const TrainConfig& config, Phase phase, Rng* rng);

struct EvalResult {
    double mean_reward = 0.0;
    std::size_t evaluated = 0;
    std::vector<RankedList> run;                          // depth run_depth
    std::vector<std::vector<std::string>> reformulations;  // final q' per query
};

EvalResult evaluate_policy(const InvertedIndex& index, const Policy& policy,
                           const QuerySet& queries, const Qrels& qrels,
                           const TrainConfig& config);

struct TrainResult {
    ParamSet best_params;
    double best_dev_reward = 0.0;
    std::vector<double> reward_history;                        // per step, batch mean
    std::vector<std::pair<std::size_t, double>> dev_history;   // (step, dev mean reward)
    std::size_t steps_run = 0;
};

/// REINFORCE training loop. Writes a TSV log (step, reward, baseline, ca,
/// cb, ch) when log is non-null. Early-stops after `patience` dev
/// evaluations without improvement; best_params snapshot the best dev
/// checkpoint (final parameters when no dev set is given).
TrainResult train(const InvertedIndex& index, Policy& policy, const QuerySet& train_queries,
                  const QuerySet& dev_queries, const Qrels& qrels, const TrainConfig& config,
                  std::ostream* log = nullptr);

}  // namespace qrw
