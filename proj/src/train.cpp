#include "qrw/train.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "qrw/error.hpp"

namespace qrw {

namespace {

std::vector<std::string> window(const std::vector<std::string>& tokens, std::size_t center,
                                std::size_t k) {
    std::size_t lo = center >= k ? center - k : 0;
    std::size_t hi = std::min(tokens.size(), center + k + 1);
    return std::vector<std::string>(tokens.begin() + lo, tokens.begin() + hi);
}

void add_doc_candidates(std::vector<CandidateTerm>& out, const InvertedIndex& index,
                        std::size_t ordinal, std::size_t max_terms, std::size_t context_window) {
    const auto& ids = index.doc_tokens(ordinal);
    std::vector<std::string> surfaces;
    surfaces.reserve(ids.size());
    for (TokenId id : ids) surfaces.push_back(index.vocabulary().surface_of(id));
    std::size_t limit = std::min(max_terms, surfaces.size());
    for (std::size_t i = 0; i < limit; ++i) {
        CandidateTerm cand;
        cand.surface = surfaces[i];
        cand.context = window(surfaces, i, context_window);
        cand.source_doc = static_cast<int>(ordinal);
        cand.occurrence = i;
        out.push_back(std::move(cand));
    }
}

}  // namespace

std::vector<CandidateTerm> assemble_candidates(const std::vector<std::string>& q0_tokens,
                                               const RankedList& results,
                                               const InvertedIndex& index,
                                               const TrainConfig& config, Phase phase,
                                               std::size_t context_window, Rng* rng) {
    std::vector<CandidateTerm> out;
    for (std::size_t i = 0; i < q0_tokens.size(); ++i) {
        CandidateTerm cand;
        cand.surface = q0_tokens[i];
        cand.context = window(q0_tokens, i, context_window);
        cand.source_doc = -1;
        cand.occurrence = i;
        out.push_back(std::move(cand));
    }

    std::vector<std::size_t> ordinals;
    for (const auto& hit : results.hits) {
        if (ordinals.size() >= config.feedback_docs) break;
        if (auto ordinal = index.ordinal_of(hit.doc_id)) ordinals.push_back(*ordinal);
    }
    if (ordinals.empty()) return out;

    if (phase == Phase::train) {
        if (rng == nullptr) throw NumericError("assemble_candidates: train phase needs an rng");
        std::size_t pick = static_cast<std::size_t>(rng->below(ordinals.size()));
        add_doc_candidates(out, index, ordinals[pick], config.candidate_terms, context_window);
    } else {
        for (std::size_t ordinal : ordinals)
            add_doc_candidates(out, index, ordinal, config.candidate_terms, context_window);
    }
    return out;
}

namespace {

// Forward caches for the Eq. 1 scoring head.
struct HeadCache {
    Vec phi_b;
    Vec t;  // tanh output
    double p = 0.0;
};

HeadCache head_forward(const Tensor& W, const Tensor& U, double b, const Vec& phi_a, Vec phi_b) {
    std::size_t d = phi_a.size();
    HeadCache cache;
    cache.t.resize(d);
    double u = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        double z = b;
        for (std::size_t j = 0; j < d; ++j)
            z += W.at(i, j) * phi_a[j] + W.at(i, d + j) * phi_b[j];
        cache.t[i] = std::tanh(z);
        u += U[i] * cache.t[i];
    }
    cache.p = sigmoid(u);
    cache.phi_b = std::move(phi_b);
    return cache;
}

// Backprop du through the head; accumulates dW, dU, db and the input
// gradients dphi_a / dphi_b.
void head_backward(const Tensor& W, const Tensor& U, const HeadCache& cache, const Vec& phi_a,
                   double du, Tensor& dW, Tensor& dU, Tensor& db, Vec& dphi_a, Vec& dphi_b) {
    std::size_t d = phi_a.size();
    for (std::size_t i = 0; i < d; ++i) {
        dU[i] += du * cache.t[i];
        double dz = du * U[i] * (1.0 - cache.t[i] * cache.t[i]);
        db[0] += dz;
        for (std::size_t j = 0; j < d; ++j) {
            dW.at(i, j) += dz * phi_a[j];
            dW.at(i, d + j) += dz * cache.phi_b[j];
            dphi_a[j] += W.at(i, j) * dz;
            dphi_b[j] += W.at(i, d + j) * dz;
        }
    }
}

// Distributes a bag-of-words mean gradient onto the trainable OOV tensor.
void bow_backward(const Policy& policy, const std::vector<std::string>& tokens, const Vec& dvec,
                  Tensor& doov) {
    if (tokens.empty()) return;
    double inv = 1.0 / static_cast<double>(tokens.size());
    for (const auto& tok : tokens) {
        if (!policy.is_oov(tok)) continue;
        for (std::size_t j = 0; j < dvec.size(); ++j) doov[j] += dvec[j] * inv;
    }
}

const std::vector<std::string>& repr_tokens(const CandidateTerm& cand,
                                            std::vector<std::string>& scratch) {
    if (!cand.context.empty()) return cand.context;
    scratch.assign(1, cand.surface);
    return scratch;
}

std::vector<double> softmax_stable(const std::vector<double>& logits) {
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

LossBreakdown episode_loss(const Policy& policy, const Episode& episode,
                           const TrainConfig& config, GradMap* grads) {
    const ParamSet& params = policy.params();
    std::size_t d = policy.config().dim;
    const Tensor& W = params.at("W");
    const Tensor& U = params.at("U");
    const double b = params.at("b")[0];
    const Tensor& V = params.at("V");
    const Tensor& S = params.at("S");
    const double bv = params.at("bv")[0];

    LossBreakdown out;
    Vec phi_a = policy.query_repr(episode.q0);
    Vec dphi_a(d, 0.0);

    if (episode.stages.empty() || episode.stages.front().candidates.empty())
        throw NumericError("episode_loss: episode has no candidates");

    // ---- value head over the first-stage pool (Eq. 3) ----
    const auto& base_candidates = episode.stages.front().candidates;
    std::vector<Vec> base_reprs(base_candidates.size());
    Vec e_mean(d, 0.0);
    for (std::size_t i = 0; i < base_candidates.size(); ++i) {
        base_reprs[i] = policy.term_repr(base_candidates[i]);
        for (std::size_t j = 0; j < d; ++j) e_mean[j] += base_reprs[i][j];
    }
    double inv_n = 1.0 / static_cast<double>(base_candidates.size());
    for (auto& x : e_mean) x *= inv_n;

    HeadCache value_cache = head_forward(V, S, bv, phi_a, e_mean);
    double rbar = value_cache.p;
    out.baseline = rbar;

    double advantage = episode.reward - rbar;  // constant inside ca
    out.cb = config.value_coef * advantage * advantage;

    if (grads) {
        double du_v = -2.0 * config.value_coef * advantage * rbar * (1.0 - rbar);
        Vec de_mean(d, 0.0);
        head_backward(V, S, value_cache, phi_a, du_v, (*grads)["V"], (*grads)["S"], (*grads)["bv"],
                      dphi_a, de_mean);
        std::vector<std::string> scratch;
        for (std::size_t i = 0; i < base_candidates.size(); ++i) {
            Vec dr(d);
            for (std::size_t j = 0; j < d; ++j) dr[j] = de_mean[j] * inv_n;
            bow_backward(policy, repr_tokens(base_candidates[i], scratch), dr, (*grads)["oov"]);
        }
    }

    // ---- selection stages ----
    const double lambda = config.entropy_coef;
    std::vector<std::string> scratch;

    if (!config.seq_mode) {
        for (const auto& stage : episode.stages) {
            std::vector<char> chosen(stage.candidates.size(), 0);
            for (std::size_t ix : stage.selected) chosen[ix] = 1;

            for (std::size_t i = 0; i < stage.candidates.size(); ++i) {
                HeadCache cache =
                    head_forward(W, U, b, phi_a, policy.term_repr(stage.candidates[i]));
                double p = cache.p;
                double log_p = std::log(p);
                double du = 0.0;
                if (chosen[i]) {
                    out.ca += advantage * -log_p;
                    du += advantage * (p - 1.0);
                }
                if (lambda != 0.0) {
                    if (policy.config().full_bernoulli_entropy) {
                        double log_q = std::log(1.0 - p);
                        out.ch += -lambda * (p * log_p + (1.0 - p) * log_q);
                        du += -lambda * p * (1.0 - p) * (log_p - log_q);
                    } else {
                        out.ch += -lambda * p * log_p;
                        du += -lambda * p * (1.0 - p) * (log_p + 1.0);
                    }
                }
                if (grads && du != 0.0) {
                    Vec dphi_b(d, 0.0);
                    head_backward(W, U, cache, phi_a, du, (*grads)["W"], (*grads)["U"],
                                  (*grads)["b"], dphi_a, dphi_b);
                    bow_backward(policy, repr_tokens(stage.candidates[i], scratch), dphi_b,
                                 (*grads)["oov"]);
                }
            }
        }
    } else {
        const Tensor& Wa = params.at("Wa");
        const Tensor& Wb = params.at("Wb");
        const Tensor& Wh = params.at("Wh");
        const Tensor& stop = params.at("stop");

        for (const auto& stage : episode.stages) {
            std::vector<Vec> reprs(stage.candidates.size());
            for (std::size_t i = 0; i < reprs.size(); ++i)
                reprs[i] = policy.term_repr(stage.candidates[i]);
            const std::size_t stop_index = reprs.size();

            // Realized action sequence, with the stop decision when taken.
            std::vector<std::size_t> actions = stage.selected;
            if (stage.ended_with_stop) actions.push_back(stop_index);
            if (actions.empty()) continue;

            // Forward pass with caches.
            std::vector<Vec> hs;        // h_1..h_m
            std::vector<Vec> xs;        // inputs x_1..x_m
            std::vector<std::vector<double>> dists;
            Vec h(d, 0.0), x(d, 0.0);
            for (std::size_t k = 0; k < actions.size(); ++k) {
                h = rnn_cell_forward(Wa, Wb, Wh, phi_a, x, h);
                hs.push_back(h);
                xs.push_back(x);
                std::vector<double> logits(reprs.size() + 1);
                for (std::size_t i = 0; i < reprs.size(); ++i) {
                    double dot = 0.0;
                    for (std::size_t j = 0; j < d; ++j) dot += reprs[i][j] * h[j];
                    logits[i] = dot;
                }
                double dot = 0.0;
                for (std::size_t j = 0; j < d; ++j) dot += stop[j] * h[j];
                logits[stop_index] = dot;
                auto dist = softmax_stable(logits);

                std::size_t action = actions[k];
                out.ca += advantage * -std::log(std::max(dist[action], 1e-300));
                if (lambda != 0.0) {
                    double plogp = 0.0;
                    for (double pv : dist) plogp += pv * std::log(std::max(pv, 1e-300));
                    out.ch += -lambda * plogp;
                }
                dists.push_back(std::move(dist));
                x = action == stop_index ? Vec(d, 0.0) : reprs[action];
            }

            if (grads) {
                std::vector<Vec> drepr(reprs.size(), Vec(d, 0.0));
                Vec dstop(d, 0.0);
                Vec dh_carry(d, 0.0);
                for (std::size_t k = actions.size(); k-- > 0;) {
                    const auto& dist = dists[k];
                    double plogp = 0.0;
                    if (lambda != 0.0)
                        for (double pv : dist) plogp += pv * std::log(std::max(pv, 1e-300));

                    Vec dh = dh_carry;
                    for (std::size_t i = 0; i < dist.size(); ++i) {
                        double dl = advantage * (dist[i] - (i == actions[k] ? 1.0 : 0.0));
                        if (lambda != 0.0)
                            dl += -lambda * dist[i] * (std::log(std::max(dist[i], 1e-300)) - plogp);
                        if (i == stop_index) {
                            for (std::size_t j = 0; j < d; ++j) {
                                dh[j] += dl * stop[j];
                                dstop[j] += dl * hs[k][j];
                            }
                        } else {
                            for (std::size_t j = 0; j < d; ++j) {
                                dh[j] += dl * reprs[i][j];
                                drepr[i][j] += dl * hs[k][j];
                            }
                        }
                    }
                    Vec zero_h(d, 0.0);
                    const Vec& h_prev = k == 0 ? zero_h : hs[k - 1];
                    auto cell = rnn_cell_backward(Wa, Wb, Wh, phi_a, xs[k], h_prev, hs[k], dh,
                                                  (*grads)["Wa"], (*grads)["Wb"], (*grads)["Wh"]);
                    for (std::size_t j = 0; j < d; ++j) dphi_a[j] += cell.da[j];
                    dh_carry = cell.dh_prev;
                    if (k > 0) {
                        std::size_t prev_action = actions[k - 1];
                        if (prev_action != stop_index)
                            for (std::size_t j = 0; j < d; ++j)
                                drepr[prev_action][j] += cell.dx[j];
                    }
                }
                for (std::size_t i = 0; i < reprs.size(); ++i)
                    bow_backward(policy, repr_tokens(stage.candidates[i], scratch), drepr[i],
                                 (*grads)["oov"]);
                for (std::size_t j = 0; j < d; ++j) (*grads)["stop"][j] += dstop[j];
            }
        }
    }

    if (grads) bow_backward(policy, episode.q0, dphi_a, (*grads)["oov"]);
    out.total = out.ca + out.cb + out.ch;
    return out;
}

LossStats reinforce_update(const std::vector<Episode>& episodes, Policy& policy, AdamState& state,
                           const TrainConfig& config) {
    if (episodes.empty()) throw NumericError("reinforce_update: empty batch");
    GradMap grads(policy.params());
    LossStats stats;
    for (const auto& episode : episodes) {
        LossBreakdown loss = episode_loss(policy, episode, config, &grads);
        stats.total += loss.total;
        stats.ca += loss.ca;
        stats.cb += loss.cb;
        stats.ch += loss.ch;
        stats.mean_reward += episode.reward;
        stats.mean_baseline += loss.baseline;
    }
    double inv = 1.0 / static_cast<double>(episodes.size());
    stats.total *= inv;
    stats.ca *= inv;
    stats.cb *= inv;
    stats.ch *= inv;
    stats.mean_reward *= inv;
    stats.mean_baseline *= inv;
    if (!std::isfinite(stats.total))
        throw NumericError("reinforce_update: non-finite loss (ca=" + std::to_string(stats.ca) +
                           " cb=" + std::to_string(stats.cb) + " ch=" + std::to_string(stats.ch) +
                           ")");
    grads.scale(inv);
    adam_step(policy.params(), grads, state, config.adam);
    return stats;
}

Episode run_episode(const InvertedIndex& index, const Policy& policy, const Query& query,
                    const Qrels& qrels, const TrainConfig& config, Phase phase, Rng* rng) {
    Episode episode;
    episode.query_id = query.query_id;
    episode.q0 = tokenize(query.text);

    std::size_t reformulation_stages = config.rounds >= 2 ? config.rounds - 1 : 1;
    std::vector<std::string> current = episode.q0;

    for (std::size_t stage = 0; stage < reformulation_stages; ++stage) {
        RankedList results = index.search(current, config.feedback_docs);
        if (stage == 0) episode.feedback = results;

        StageRecord record;
        record.candidates = assemble_candidates(episode.q0, results, index, config, phase,
                                                policy.config().context_window, rng);
        if (phase == Phase::train) {
            if (config.seq_mode) {
                Rng stage_rng = rng->split(stage);
                record.selected = policy.seq_sample(episode.q0, record.candidates, stage_rng,
                                                    config.max_seq_terms);
                record.ended_with_stop = record.selected.size() < config.max_seq_terms;
            } else {
                auto probs = policy.score_candidates(episode.q0, record.candidates);
                record.selected = Policy::select_sample(probs, *rng);
            }
        } else {
            if (config.seq_mode) {
                auto beams = policy.seq_beam(episode.q0, record.candidates, config.beam_width,
                                             config.max_seq_terms);
                record.selected = beams.empty() ? std::vector<std::size_t>{} : beams.front();
                record.ended_with_stop = true;
            } else {
                auto probs = policy.score_candidates(episode.q0, record.candidates);
                record.selected = Policy::select_threshold(probs, config.epsilon);
            }
        }
        current = assemble_reformulation(current, record.candidates, record.selected,
                                         policy.config().append_to_original);
        episode.stages.push_back(std::move(record));
    }

    episode.reformulated = current;
    episode.result = index.search(current, std::max(config.reward_k, config.run_depth));
    episode.result.query_id = query.query_id;

    auto it = qrels.find(query.query_id);
    if (it != qrels.end() && !it->second.empty()) {
        RankedList top = episode.result;
        episode.reward = recall_at_k(top, it->second, config.reward_k);
    }
    episode.baseline = episode.stages.front().candidates.empty()
                           ? 0.5
                           : policy.baseline(episode.q0, episode.stages.front().candidates);
    return episode;
}

EvalResult evaluate_policy(const InvertedIndex& index, const Policy& policy,
                           const QuerySet& queries, const Qrels& qrels,
                           const TrainConfig& config) {
    EvalResult result;
    double total = 0.0;
    for (const auto& query : queries.queries) {
        Episode episode = run_episode(index, policy, query, qrels, config, Phase::eval, nullptr);
        result.run.push_back(episode.result);
        result.reformulations.push_back(episode.reformulated);
        auto it = qrels.find(query.query_id);
        if (it != qrels.end() && !it->second.empty()) {
            total += episode.reward;
            ++result.evaluated;
        }
    }
    result.mean_reward = result.evaluated == 0 ? 0.0 : total / static_cast<double>(result.evaluated);
    return result;
}

TrainResult train(const InvertedIndex& index, Policy& policy, const QuerySet& train_queries,
                  const QuerySet& dev_queries, const Qrels& qrels, const TrainConfig& config,
                  std::ostream* log) {
    std::vector<Query> pool;
    for (const auto& query : train_queries.queries) {
        auto it = qrels.find(query.query_id);
        if (it != qrels.end() && !it->second.empty()) pool.push_back(query);
    }
    if (pool.empty()) throw DataError("train: no training queries with judgments");

    TrainResult result;
    AdamState state = AdamState::init(policy.params());
    Rng root(config.seed, "train-rl");

    result.best_params = policy.params();
    result.best_dev_reward = -1.0;
    std::size_t evals_since_best = 0;
    bool stopped = false;

    if (log) *log << "step\treward\tbaseline\tca\tcb\tch\n";

    if (!dev_queries.queries.empty()) {
        EvalResult dev = evaluate_policy(index, policy, dev_queries, qrels, config);
        result.dev_history.emplace_back(0, dev.mean_reward);
        result.best_dev_reward = dev.mean_reward;
    }

    for (std::size_t step = 1; step <= config.max_steps && !stopped; ++step) {
        Rng step_rng = root.split(step);
        std::vector<Episode> batch;
        batch.reserve(config.batch_size);
        for (std::size_t slot = 0; slot < config.batch_size; ++slot) {
            Rng episode_rng = step_rng.split(slot + 1);
            const Query& query = pool[episode_rng.below(pool.size())];
            batch.push_back(
                run_episode(index, policy, query, qrels, config, Phase::train, &episode_rng));
        }
        LossStats stats = reinforce_update(batch, policy, state, config);
        result.reward_history.push_back(stats.mean_reward);
        result.steps_run = step;
        if (log) {
            *log << step << '\t' << stats.mean_reward << '\t' << stats.mean_baseline << '\t'
                 << stats.ca << '\t' << stats.cb << '\t' << stats.ch << '\n';
        }

        if (!dev_queries.queries.empty() &&
            (step % config.eval_every == 0 || step == config.max_steps)) {
            EvalResult dev = evaluate_policy(index, policy, dev_queries, qrels, config);
            result.dev_history.emplace_back(step, dev.mean_reward);
            if (dev.mean_reward > result.best_dev_reward) {
                result.best_dev_reward = dev.mean_reward;
                result.best_params = policy.params();
                evals_since_best = 0;
            } else {
                ++evals_since_best;
                if (evals_since_best >= config.patience) stopped = true;
            }
        }
    }
    if (dev_queries.queries.empty()) {
        result.best_params = policy.params();
        result.best_dev_reward = 0.0;
    }
    return result;
}

}  // namespace qrw
