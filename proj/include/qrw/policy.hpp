#pragma once

#include <string>
#include <vector>

#include "qrw/embeddings.hpp"
#include "qrw/nn.hpp"
#include "qrw/rng.hpp"
#include "qrw/tensor.hpp"

namespace qrw {

/// One occurrence of a candidate term with its context window. Occurrences
/// are scored individually; deduplication happens only when the
/// reformulated query is assembled.
struct CandidateTerm {
    std::string surface;
    std::vector<std::string> context;  // t_{i-k} .. t_{i+k}, clipped at source bounds
    int source_doc = -1;               // ordinal within the index; -1 = original query
    std::size_t occurrence = 0;        // token position within the source
};

struct PolicyConfig {
    std::size_t dim = 16;             // embedding dimension d
    std::size_t context_window = 2;   // k
    double epsilon = 0.5;             // selection threshold at test time
    bool append_to_original = true;   // q' = q0 ++ dedup(T); false: q' = dedup(T)
    bool full_bernoulli_entropy = false;
    std::size_t beam_width = 4;
    std::size_t max_seq_terms = 50;
};

/// Term-selection policy with value baseline and sequential generator.
///
/// Selection head:  P(t_i|q0) = sigmoid(U' tanh(W [phi_a; phi_b(i)] + b))
/// Value head:      Rbar     = sigmoid(S' tanh(V [phi_a; e_mean] + bv))
/// Generator:       P(t_i at step k) ~ exp(phi_b(i)' h_k),
///                  h_k = tanh(Wa phi_a + Wb phi_b(t_{k-1}) + Wh h_{k-1})
///
/// phi_a / phi_b are bag-of-words means of the (frozen) embedding table;
/// out-of-vocabulary words map to the policy-owned trainable "oov" tensor.
class Policy {
  public:
    Policy(PolicyConfig config, const EmbeddingTable* table, uint64_t seed);
    Policy(PolicyConfig config, const EmbeddingTable* table, ParamSet params);

    const PolicyConfig& config() const { return config_; }
    const ParamSet& params() const { return params_; }
    ParamSet& params() { return params_; }
    const EmbeddingTable& table() const { return *table_; }

    /// Embedding lookup routed through the trainable OOV tensor.
    const double* embed(const std::string& word) const;
    bool is_oov(const std::string& word) const { return table_->is_oov(word); }

    Vec mean_embedding(const std::vector<std::string>& tokens) const;
    Vec query_repr(const std::vector<std::string>& q0_tokens) const;   // phi_a
    Vec term_repr(const CandidateTerm& candidate) const;               // phi_b

    double term_probability(const Vec& phi_a, const Vec& phi_b) const;
    double value_estimate(const Vec& phi_a, const Vec& e_mean) const;

    std::vector<double> score_candidates(const std::vector<std::string>& q0_tokens,
                                         const std::vector<CandidateTerm>& candidates) const;

    /// Baseline over a candidate pool: e_mean = mean of phi_b. Throws on an
    /// empty pool.
    double baseline(const std::vector<std::string>& q0_tokens,
                    const std::vector<CandidateTerm>& candidates) const;

    // -- selection --

    static std::vector<std::size_t> select_threshold(const std::vector<double>& probs,
                                                     double epsilon);
    static std::vector<std::size_t> select_sample(const std::vector<double>& probs, Rng& rng);

    // -- sequential generation; kStop marks the end token --

    static constexpr std::size_t kStop = static_cast<std::size_t>(-1);

    /// Beam search over the candidate pool plus the stop token; returns up
    /// to beam_width finished sequences, best first. beam_width == 1 is
    /// greedy decoding.
    std::vector<std::vector<std::size_t>> seq_beam(const std::vector<std::string>& q0_tokens,
                                                   const std::vector<CandidateTerm>& candidates,
                                                   std::size_t beam_width,
                                                   std::size_t max_terms) const;

    /// Ancestral sampling from the per-step softmax (training time).
    std::vector<std::size_t> seq_sample(const std::vector<std::string>& q0_tokens,
                                        const std::vector<CandidateTerm>& candidates, Rng& rng,
                                        std::size_t max_terms) const;

  private:
    PolicyConfig config_;
    const EmbeddingTable* table_;
    ParamSet params_;

    struct SeqState;
    std::vector<double> seq_step_logits(const std::vector<Vec>& cand_reprs, const Vec& h) const;
};

/// q' assembly: with append_to_original, q0 tokens followed by selected
/// surfaces deduplicated against q0 and each other; otherwise just the
/// deduplicated selection, falling back to q0 when empty.
std::vector<std::string> assemble_reformulation(const std::vector<std::string>& base_tokens,
                                                const std::vector<CandidateTerm>& candidates,
                                                const std::vector<std::size_t>& selected,
                                                bool append_to_original);

}  // namespace qrw
