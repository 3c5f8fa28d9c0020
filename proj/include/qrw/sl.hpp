#pragma once

#include <string>
#include <vector>

#include "qrw/policy.hpp"
#include "qrw/train.hpp"

namespace qrw {

struct TermLabel {
    CandidateTerm candidate;
    double base_reward = 0.0;      // R
    double expanded_reward = 0.0;  // R'
    int label = 0;                 // 1 iff (R' - R) / R > tau (R' > 0 when R == 0)
};

struct SlConfig {
    double tau = 0.005;
    std::size_t epochs = 200;
    std::size_t batch_size = 32;
    double epsilon = 0.5;  // selection threshold for a trained classifier
    uint64_t seed = 0;
    AdamConfig adam;
};

/// Labels each distinct candidate surface by the reward change when it
/// alone is appended to q0. Candidates assembled in eval phase.
std::vector<TermLabel> label_candidates(const InvertedIndex& index, const Query& query,
                                        const Qrels& qrels, const TrainConfig& env_config,
                                        std::size_t context_window, double tau);

/// Audit format: qid, term, R, R', label.
void save_labels_tsv(const std::string& qid, const std::vector<TermLabel>& labels,
                     std::ostream& out);

struct LabeledExample {
    std::vector<std::string> q0;
    CandidateTerm candidate;
    int label = 0;
};

/// Binary classifier with the same scoring head as the selection policy,
/// trained with cross-entropy. Throws DataError on single-class data.
/// Returns the trained policy parameters.
ParamSet train_classifier(const std::vector<LabeledExample>& examples, const PolicyConfig& config,
                          const EmbeddingTable& table, const SlConfig& sl);

/// Cross-entropy loss and gradients for one example; shares the Eq. 1
/// machinery and supports the same gradient checks.
double classifier_loss(const Policy& policy, const LabeledExample& example, GradMap* grads);

/// q' = q0 followed by all label-1 terms, deduplicated.
std::vector<std::string> sl_oracle(const std::vector<std::string>& q0_tokens,
                                   const std::vector<TermLabel>& labels);

}  // namespace qrw
