#include "qrw/sl.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_set>

#include "qrw/error.hpp"
#include "qrw/metrics.hpp"

namespace qrw {

std::vector<TermLabel> label_candidates(const InvertedIndex& index, const Query& query,
                                        const Qrels& qrels, const TrainConfig& env_config,
                                        std::size_t context_window, double tau) {
    auto it = qrels.find(query.query_id);
    if (it == qrels.end() || it->second.empty())
        throw DataError("label_candidates: no judgments for query " + query.query_id);
    const auto& relevant = it->second;

    auto q0 = tokenize(query.text);
    RankedList feedback = index.search(q0, env_config.feedback_docs);
    auto candidates = assemble_candidates(q0, feedback, index, env_config, Phase::eval,
                                          context_window, nullptr);

    RankedList base = index.search(q0, env_config.reward_k);
    double base_reward = recall_at_k(base, relevant, env_config.reward_k);

    std::vector<TermLabel> labels;
    std::unordered_set<std::string> seen;
    for (const auto& cand : candidates) {
        if (!seen.insert(cand.surface).second) continue;  // label distinct surfaces once
        std::vector<std::string> expanded = q0;
        if (std::find(q0.begin(), q0.end(), cand.surface) == q0.end())
            expanded.push_back(cand.surface);
        RankedList result = index.search(expanded, env_config.reward_k);
        double expanded_reward = recall_at_k(result, relevant, env_config.reward_k);

        TermLabel label;
        label.candidate = cand;
        label.base_reward = base_reward;
        label.expanded_reward = expanded_reward;
        if (base_reward > 0.0)
            label.label = (expanded_reward - base_reward) / base_reward > tau ? 1 : 0;
        else
            label.label = expanded_reward > 0.0 ? 1 : 0;
        labels.push_back(std::move(label));
    }
    return labels;
}

void save_labels_tsv(const std::string& qid, const std::vector<TermLabel>& labels,
                     std::ostream& out) {
    for (const auto& label : labels) {
        out << qid << '\t' << label.candidate.surface << '\t' << label.base_reward << '\t'
            << label.expanded_reward << '\t' << label.label << '\n';
    }
}

double classifier_loss(const Policy& policy, const LabeledExample& example, GradMap* grads) {
    // Cross-entropy on the shared Eq. 1 head: -log p for positives,
    // -log (1 - p) for negatives.
    Vec phi_a = policy.query_repr(example.q0);
    Vec phi_b = policy.term_repr(example.candidate);
    double p = policy.term_probability(phi_a, phi_b);
    double loss = example.label == 1 ? -std::log(p) : -std::log(1.0 - p);

    if (grads) {
        // d loss / d logit = p - y for the sigmoid cross-entropy.
        double du = p - static_cast<double>(example.label);
        const ParamSet& params = policy.params();
        const Tensor& W = params.at("W");
        const Tensor& U = params.at("U");
        double b = params.at("b")[0];
        std::size_t d = policy.config().dim;

        Vec t(d);
        for (std::size_t i = 0; i < d; ++i) {
            double z = b;
            for (std::size_t j = 0; j < d; ++j)
                z += W.at(i, j) * phi_a[j] + W.at(i, d + j) * phi_b[j];
            t[i] = std::tanh(z);
        }
        Vec dphi_a(d, 0.0), dphi_b(d, 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            (*grads)["U"][i] += du * t[i];
            double dz = du * U[i] * (1.0 - t[i] * t[i]);
            (*grads)["b"][0] += dz;
            for (std::size_t j = 0; j < d; ++j) {
                (*grads)["W"].at(i, j) += dz * phi_a[j];
                (*grads)["W"].at(i, d + j) += dz * phi_b[j];
                dphi_a[j] += W.at(i, j) * dz;
                dphi_b[j] += W.at(i, d + j) * dz;
            }
        }
        auto bow_grad = [&](const std::vector<std::string>& tokens, const Vec& dvec) {
            if (tokens.empty()) return;
            double inv = 1.0 / static_cast<double>(tokens.size());
            for (const auto& tok : tokens) {
                if (!policy.is_oov(tok)) continue;
                for (std::size_t j = 0; j < dvec.size(); ++j)
                    (*grads)["oov"][j] += dvec[j] * inv;
            }
        };
        bow_grad(example.q0, dphi_a);
        if (example.candidate.context.empty())
            bow_grad({example.candidate.surface}, dphi_b);
        else
            bow_grad(example.candidate.context, dphi_b);
    }
    return loss;
}

ParamSet train_classifier(const std::vector<LabeledExample>& examples, const PolicyConfig& config,
                          const EmbeddingTable& table, const SlConfig& sl) {
    bool has_positive = false, has_negative = false;
    for (const auto& ex : examples) (ex.label == 1 ? has_positive : has_negative) = true;
    if (!has_positive || !has_negative)
        throw DataError("train_classifier: need at least one positive and one negative example");

    Policy policy(config, &table, sl.seed);
    AdamState state = AdamState::init(policy.params());
    Rng root(sl.seed, "train-sl");

    for (std::size_t epoch = 0; epoch < sl.epochs; ++epoch) {
        Rng epoch_rng = root.split(epoch);
        std::vector<std::size_t> order(examples.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[epoch_rng.below(i)]);

        for (std::size_t start = 0; start < order.size(); start += sl.batch_size) {
            std::size_t end = std::min(order.size(), start + sl.batch_size);
            GradMap grads(policy.params());
            double batch_loss = 0.0;
            for (std::size_t i = start; i < end; ++i)
                batch_loss += classifier_loss(policy, examples[order[i]], &grads);
            if (!std::isfinite(batch_loss))
                throw NumericError("train_classifier: non-finite loss");
            grads.scale(1.0 / static_cast<double>(end - start));
            adam_step(policy.params(), grads, state, sl.adam);
        }
    }
    return policy.params();
}

std::vector<std::string> sl_oracle(const std::vector<std::string>& q0_tokens,
                                   const std::vector<TermLabel>& labels) {
    std::vector<std::string> out = q0_tokens;
    std::unordered_set<std::string> seen(q0_tokens.begin(), q0_tokens.end());
    for (const auto& label : labels) {
        if (label.label != 1) continue;
        if (seen.insert(label.candidate.surface).second) out.push_back(label.candidate.surface);
    }
    return out;
}

}  // namespace qrw
