#include "qrw/policy.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "qrw/error.hpp"

namespace qrw {

namespace {

ParamSet init_params(const PolicyConfig& config, const EmbeddingTable& table, uint64_t seed) {
    std::size_t d = config.dim;
    Rng rng(seed, "policy-init");
    double scale = 1.0 / std::sqrt(static_cast<double>(d));
    ParamSet p;
    Rng rw = rng.split("W"), ru = rng.split("U"), rv = rng.split("V"), rs = rng.split("S");
    Rng ra = rng.split("Wa"), rb = rng.split("Wb"), rh = rng.split("Wh"), rt = rng.split("stop");
    p.emplace("W", Tensor::uniform({d, 2 * d}, rw, scale));
    p.emplace("U", Tensor::uniform({d}, ru, scale));
    p.emplace("b", Tensor::zeros({1}));
    p.emplace("V", Tensor::uniform({d, 2 * d}, rv, scale));
    p.emplace("S", Tensor::uniform({d}, rs, scale));
    p.emplace("bv", Tensor::zeros({1}));
    p.emplace("Wa", Tensor::uniform({d, d}, ra, scale));
    p.emplace("Wb", Tensor::uniform({d, d}, rb, scale));
    p.emplace("Wh", Tensor::uniform({d, d}, rh, scale));
    p.emplace("stop", Tensor::uniform({d}, rt, scale));
    p.emplace("oov", Tensor::from({d}, table.oov_vector()));
    return p;
}

}  // namespace

Policy::Policy(PolicyConfig config, const EmbeddingTable* table, uint64_t seed)
    : config_(config), table_(table), params_(init_params(config, *table, seed)) {
    if (table_->dim() != config_.dim)
        throw ConfigError("policy dim does not match embedding table dimension");
}

Policy::Policy(PolicyConfig config, const EmbeddingTable* table, ParamSet params)
    : config_(config), table_(table), params_(std::move(params)) {
    if (table_->dim() != config_.dim)
        throw ConfigError("policy dim does not match embedding table dimension");
}

const double* Policy::embed(const std::string& word) const {
    if (table_->is_oov(word)) return params_.at("oov").data().data();
    return table_->lookup(word).data();
}

Vec Policy::mean_embedding(const std::vector<std::string>& tokens) const {
    Vec acc(config_.dim, 0.0);
    if (tokens.empty()) return acc;
    for (const auto& tok : tokens) {
        const double* v = embed(tok);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
    }
    double inv = 1.0 / static_cast<double>(tokens.size());
    for (auto& x : acc) x *= inv;
    return acc;
}

Vec Policy::query_repr(const std::vector<std::string>& q0_tokens) const {
    return mean_embedding(q0_tokens);
}

Vec Policy::term_repr(const CandidateTerm& candidate) const {
    if (candidate.context.empty()) return mean_embedding({candidate.surface});
    return mean_embedding(candidate.context);
}

double Policy::term_probability(const Vec& phi_a, const Vec& phi_b) const {
    std::size_t d = config_.dim;
    const Tensor& W = params_.at("W");
    const Tensor& U = params_.at("U");
    double b = params_.at("b")[0];
    double u = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        double z = b;
        for (std::size_t j = 0; j < d; ++j)
            z += W.at(i, j) * phi_a[j] + W.at(i, d + j) * phi_b[j];
        u += U[i] * std::tanh(z);
    }
    return sigmoid(u);
}

double Policy::value_estimate(const Vec& phi_a, const Vec& e_mean) const {
    std::size_t d = config_.dim;
    const Tensor& V = params_.at("V");
    const Tensor& S = params_.at("S");
    double bv = params_.at("bv")[0];
    double u = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        double z = bv;
        for (std::size_t j = 0; j < d; ++j)
            z += V.at(i, j) * phi_a[j] + V.at(i, d + j) * e_mean[j];
        u += S[i] * std::tanh(z);
    }
    return sigmoid(u);
}

std::vector<double> Policy::score_candidates(const std::vector<std::string>& q0_tokens,
                                             const std::vector<CandidateTerm>& candidates) const {
    Vec phi_a = query_repr(q0_tokens);
    std::vector<double> probs;
    probs.reserve(candidates.size());
    for (const auto& cand : candidates)
        probs.push_back(term_probability(phi_a, term_repr(cand)));
    return probs;
}

double Policy::baseline(const std::vector<std::string>& q0_tokens,
                        const std::vector<CandidateTerm>& candidates) const {
    if (candidates.empty()) throw NumericError("baseline: empty candidate pool");
    Vec e_mean(config_.dim, 0.0);
    for (const auto& cand : candidates) {
        Vec r = term_repr(cand);
        for (std::size_t i = 0; i < e_mean.size(); ++i) e_mean[i] += r[i];
    }
    double inv = 1.0 / static_cast<double>(candidates.size());
    for (auto& x : e_mean) x *= inv;
    return value_estimate(query_repr(q0_tokens), e_mean);
}

std::vector<std::size_t> Policy::select_threshold(const std::vector<double>& probs,
                                                  double epsilon) {
    std::vector<std::size_t> selected;
    for (std::size_t i = 0; i < probs.size(); ++i)
        if (probs[i] > epsilon) selected.push_back(i);
    return selected;
}

std::vector<std::size_t> Policy::select_sample(const std::vector<double>& probs, Rng& rng) {
    std::vector<std::size_t> selected;
    for (std::size_t i = 0; i < probs.size(); ++i)
        if (rng.bernoulli(probs[i])) selected.push_back(i);
    return selected;
}

std::vector<double> Policy::seq_step_logits(const std::vector<Vec>& cand_reprs,
                                            const Vec& h) const {
    const Tensor& stop = params_.at("stop");
    std::vector<double> logits(cand_reprs.size() + 1, 0.0);
    for (std::size_t i = 0; i < cand_reprs.size(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < h.size(); ++j) dot += cand_reprs[i][j] * h[j];
        logits[i] = dot;
    }
    double dot = 0.0;
    for (std::size_t j = 0; j < h.size(); ++j) dot += stop[j] * h[j];
    logits[cand_reprs.size()] = dot;
    return logits;
}

namespace {

std::vector<double> softmax(const std::vector<double>& logits) {
    double max_logit = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - max_logit);
        total += p[i];
    }
    for (auto& v : p) v /= total;
    return p;
}

}  // namespace

std::vector<std::vector<std::size_t>> Policy::seq_beam(
    const std::vector<std::string>& q0_tokens, const std::vector<CandidateTerm>& candidates,
    std::size_t beam_width, std::size_t max_terms) const {
    if (beam_width == 0) beam_width = 1;
    Vec phi_a = query_repr(q0_tokens);
    std::vector<Vec> reprs;
    reprs.reserve(candidates.size());
    for (const auto& cand : candidates) reprs.push_back(term_repr(cand));
    const std::size_t stop_index = candidates.size();

    const Tensor& Wa = params_.at("Wa");
    const Tensor& Wb = params_.at("Wb");
    const Tensor& Wh = params_.at("Wh");
    Vec zero(config_.dim, 0.0);

    struct Beam {
        std::vector<std::size_t> seq;
        double log_prob = 0.0;
        Vec h;
        bool done = false;
    };
    std::vector<Beam> beams{{{}, 0.0, Vec(config_.dim, 0.0), false}};
    // h_1 is computed from the zero start input; h_0 = 0.
    std::vector<Beam> finished;

    for (std::size_t step = 0; step < max_terms + 1; ++step) {
        std::vector<Beam> expanded;
        for (const auto& beam : beams) {
            if (beam.done) continue;
            const Vec& prev_repr =
                beam.seq.empty() ? zero
                                 : (beam.seq.back() == stop_index ? zero : reprs[beam.seq.back()]);
            Vec h = rnn_cell_forward(Wa, Wb, Wh, phi_a, prev_repr, beam.h);
            auto probs = softmax(seq_step_logits(reprs, h));
            for (std::size_t i = 0; i < probs.size(); ++i) {
                Beam next = beam;
                next.seq.push_back(i);
                next.log_prob += std::log(std::max(probs[i], 1e-300));
                next.h = h;
                next.done = (i == stop_index);
                expanded.push_back(std::move(next));
            }
        }
        if (expanded.empty()) break;
        std::stable_sort(expanded.begin(), expanded.end(),
                         [](const Beam& a, const Beam& b) { return a.log_prob > b.log_prob; });
        beams.clear();
        for (auto& beam : expanded) {
            if (beam.done) {
                if (finished.size() < beam_width) finished.push_back(std::move(beam));
            } else if (beams.size() < beam_width) {
                beams.push_back(std::move(beam));
            }
            if (finished.size() >= beam_width) break;
        }
        if (finished.size() >= beam_width || beams.empty()) break;
    }
    // Truncated beams count as finished when max length is hit.
    for (auto& beam : beams)
        if (finished.size() < beam_width) finished.push_back(std::move(beam));
    std::stable_sort(finished.begin(), finished.end(),
                     [](const Beam& a, const Beam& b) { return a.log_prob > b.log_prob; });

    std::vector<std::vector<std::size_t>> out;
    for (auto& beam : finished) {
        auto seq = std::move(beam.seq);
        if (!seq.empty() && seq.back() == stop_index) seq.pop_back();
        if (seq.size() > max_terms) seq.resize(max_terms);
        for (auto& ix : seq)
            if (ix == stop_index) ix = kStop;  // unreachable mid-sequence, defensive
        out.push_back(std::move(seq));
        if (out.size() >= beam_width) break;
    }
    return out;
}

std::vector<std::size_t> Policy::seq_sample(const std::vector<std::string>& q0_tokens,
                                            const std::vector<CandidateTerm>& candidates,
                                            Rng& rng, std::size_t max_terms) const {
    Vec phi_a = query_repr(q0_tokens);
    std::vector<Vec> reprs;
    reprs.reserve(candidates.size());
    for (const auto& cand : candidates) reprs.push_back(term_repr(cand));
    const std::size_t stop_index = candidates.size();

    const Tensor& Wa = params_.at("Wa");
    const Tensor& Wb = params_.at("Wb");
    const Tensor& Wh = params_.at("Wh");

    std::vector<std::size_t> seq;
    Vec h(config_.dim, 0.0);
    Vec prev(config_.dim, 0.0);
    for (std::size_t step = 0; step < max_terms; ++step) {
        h = rnn_cell_forward(Wa, Wb, Wh, phi_a, prev, h);
        auto probs = softmax(seq_step_logits(reprs, h));
        double r = rng.next_double();
        double acc = 0.0;
        std::size_t pick = probs.size() - 1;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            if (r < acc) {
                pick = i;
                break;
            }
        }
        if (pick == stop_index) break;
        seq.push_back(pick);
        prev = reprs[pick];
    }
    return seq;
}

std::vector<std::string> assemble_reformulation(const std::vector<std::string>& base_tokens,
                                                const std::vector<CandidateTerm>& candidates,
                                                const std::vector<std::size_t>& selected,
                                                bool append_to_original) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    if (append_to_original) {
        out = base_tokens;
        seen.insert(base_tokens.begin(), base_tokens.end());
    }
    for (std::size_t ix : selected) {
        const auto& surface = candidates[ix].surface;
        if (seen.insert(surface).second) out.push_back(surface);
    }
    if (out.empty()) return base_tokens;
    return out;
}

}  // namespace qrw
