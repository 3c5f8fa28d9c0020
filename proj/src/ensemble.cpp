#include "qrw/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "qrw/error.hpp"

namespace qrw {

PartitionScheme parse_partition_scheme(const std::string& name) {
    if (name == "random_disjoint") return PartitionScheme::random_disjoint;
    if (name == "bagging") return PartitionScheme::bagging;
    if (name == "full") return PartitionScheme::full;
    throw ConfigError("unknown partition scheme: " + name);
}

std::vector<std::vector<std::size_t>> partition(std::size_t dataset_size,
                                                const PartitionPlan& plan) {
    if (plan.n_agents == 0) throw ConfigError("partition: need at least one agent");
    std::vector<std::vector<std::size_t>> parts(plan.n_agents);

    switch (plan.scheme) {
        case PartitionScheme::random_disjoint: {
            if (plan.n_agents > dataset_size)
                throw DataError("partition: more agents than examples for random_disjoint");
            std::vector<std::size_t> order(dataset_size);
            for (std::size_t i = 0; i < dataset_size; ++i) order[i] = i;
            Rng rng(plan.seed, "partition-shuffle");
            for (std::size_t i = dataset_size; i > 1; --i)
                std::swap(order[i - 1], order[rng.below(i)]);
            std::size_t base = dataset_size / plan.n_agents;
            std::size_t extra = dataset_size % plan.n_agents;
            std::size_t cursor = 0;
            for (std::size_t a = 0; a < plan.n_agents; ++a) {
                std::size_t len = base + (a < extra ? 1 : 0);
                parts[a].assign(order.begin() + cursor, order.begin() + cursor + len);
                cursor += len;
            }
            break;
        }
        case PartitionScheme::bagging: {
            Rng root(plan.seed, "partition-bagging");
            for (std::size_t a = 0; a < plan.n_agents; ++a) {
                Rng rng = root.split(a);
                parts[a].reserve(dataset_size);
                for (std::size_t i = 0; i < dataset_size; ++i)
                    parts[a].push_back(static_cast<std::size_t>(rng.below(dataset_size)));
            }
            break;
        }
        case PartitionScheme::full: {
            for (std::size_t a = 0; a < plan.n_agents; ++a) {
                parts[a].resize(dataset_size);
                for (std::size_t i = 0; i < dataset_size; ++i) parts[a][i] = i;
            }
            break;
        }
    }
    return parts;
}

double accumulated_rank(const std::vector<AgentOutput>& outputs, const std::string& doc_id) {
    double score = 0.0;
    for (const auto& output : outputs) {
        for (std::size_t i = 0; i < output.results.hits.size(); ++i) {
            if (output.results.hits[i].doc_id == doc_id) {
                score += 1.0 / static_cast<double>(i + 1);
                break;
            }
        }
    }
    return score;
}

double vote_count(const std::vector<AgentOutput>& outputs, const std::string& doc_id) {
    double votes = 0.0;
    for (const auto& output : outputs) {
        for (const auto& hit : output.results.hits) {
            if (hit.doc_id == doc_id) {
                votes += 1.0;
                break;
            }
        }
    }
    return votes;
}

AggregatorMode parse_aggregator_mode(const std::string& name) {
    if (name == "product") return AggregatorMode::product;
    if (name == "relevance_only") return AggregatorMode::relevance_only;
    if (name == "rank_only") return AggregatorMode::rank_only;
    if (name == "vote_count") return AggregatorMode::vote_count;
    if (name == "reduced_z") return AggregatorMode::reduced_z;
    throw ConfigError("unknown aggregator mode: " + name);
}

namespace {

ParamSet init_aggregator_params(const AggregatorConfig& config, uint64_t seed) {
    std::size_t d = config.dim;
    std::size_t zdim = config.mode == AggregatorMode::reduced_z ? 2 * d : 4 * d;
    double scale = 1.0 / std::sqrt(static_cast<double>(d));
    Rng rng(seed, "aggregator-init");
    Rng rc = rng.split("Wc"), r1 = rng.split("W1"), r2 = rng.split("W2");
    ParamSet p;
    p.emplace("Wc", Tensor::uniform({d, d * config.conv_width}, rc, scale));
    p.emplace("bc", Tensor::zeros({d}));
    p.emplace("W1", Tensor::uniform({d, zdim}, r1, scale));
    p.emplace("b1", Tensor::zeros({d}));
    p.emplace("W2", Tensor::uniform({d}, r2, scale));
    p.emplace("b2", Tensor::zeros({1}));
    return p;
}

}  // namespace

Aggregator::Aggregator(AggregatorConfig config, const EmbeddingTable* table, uint64_t seed)
    : config_(config), table_(table), params_(init_aggregator_params(config, seed)) {
    if (table_->dim() != config_.dim)
        throw ConfigError("aggregator dim must equal the embedding dimension");
}

Aggregator::Aggregator(AggregatorConfig config, const EmbeddingTable* table, ParamSet params)
    : config_(config), table_(table), params_(std::move(params)) {
    if (table_->dim() != config_.dim)
        throw ConfigError("aggregator dim must equal the embedding dimension");
}

std::size_t Aggregator::z_dim() const {
    return config_.mode == AggregatorMode::reduced_z ? 2 * config_.dim : 4 * config_.dim;
}

Vec Aggregator::encode_query(const std::vector<std::string>& q0_tokens) const {
    std::vector<Vec> cols;
    cols.reserve(q0_tokens.size());
    for (const auto& tok : q0_tokens) cols.push_back(table_->lookup(tok));
    Vec pooled = conv1d_avgpool_forward(params_.at("Wc"), params_.at("bc"), cols);
    return tanh_forward(pooled);
}

Vec Aggregator::encode_result(const InvertedIndex& index, const std::string& doc_id) const {
    auto ordinal = index.ordinal_of(doc_id);
    if (!ordinal) return Vec(config_.dim, 0.0);
    const auto& ids = index.doc_tokens(*ordinal);
    std::vector<std::string> tokens;
    std::size_t limit = std::min<std::size_t>(config_.bow_truncate, ids.size());
    tokens.reserve(limit);
    for (std::size_t i = 0; i < limit; ++i)
        tokens.push_back(index.vocabulary().surface_of(ids[i]));
    return bow_encode(tokens, *table_);
}

namespace {

Vec build_z(AggregatorMode mode, const Vec& fq, const Vec& fa) {
    std::size_t d = fq.size();
    if (mode == AggregatorMode::reduced_z) {
        Vec z(2 * d);
        for (std::size_t i = 0; i < d; ++i) {
            z[i] = fq[i];
            z[d + i] = fa[i];
        }
        return z;
    }
    Vec z(4 * d);
    for (std::size_t i = 0; i < d; ++i) {
        z[i] = fq[i];
        z[d + i] = fa[i];
        z[2 * d + i] = fq[i] - fa[i];
        z[3 * d + i] = fq[i] * fa[i];
    }
    return z;
}

}  // namespace

double Aggregator::relevance_score(const Vec& f_query, const Vec& f_answer) const {
    if (f_query.size() != config_.dim || f_answer.size() != config_.dim)
        throw NumericError("relevance_score: encoder dimension mismatch");
    Vec z = build_z(config_.mode, f_query, f_answer);
    Vec pre = linear_forward(params_.at("W1"), params_.at("b1"), z);
    Vec h = relu_forward(pre);
    double logit = params_.at("b2")[0];
    const Tensor& W2 = params_.at("W2");
    for (std::size_t i = 0; i < h.size(); ++i) logit += W2[i] * h[i];
    return sigmoid(logit);
}

AggregatorLossResult aggregator_loss(const Aggregator& aggregator, const InvertedIndex& index,
                                     const std::vector<AggregatorExample>& examples,
                                     GradMap* grads) {
    const AggregatorConfig& config = aggregator.config();
    const ParamSet& params = aggregator.params();
    const Tensor& Wc = params.at("Wc");
    const Tensor& bc = params.at("bc");
    const Tensor& W1 = params.at("W1");
    const Tensor& b1 = params.at("b1");
    const Tensor& W2 = params.at("W2");
    const double b2 = params.at("b2")[0];
    std::size_t d = config.dim;

    AggregatorLossResult out;
    out.kink_distance = std::numeric_limits<double>::infinity();

    for (const auto& example : examples) {
        // f_CNN(q0) with caches for backprop.
        std::vector<Vec> cols;
        cols.reserve(example.q0.size());
        for (const auto& tok : example.q0) cols.push_back(aggregator.table().lookup(tok));
        Vec pooled = conv1d_avgpool_forward(Wc, bc, cols);
        Vec fq = tanh_forward(pooled);
        Vec dfq(d, 0.0);

        for (std::size_t j = 0; j < example.doc_ids.size(); ++j) {
            Vec fa = aggregator.encode_result(index, example.doc_ids[j]);
            Vec z = build_z(config.mode, fq, fa);
            Vec pre = linear_forward(W1, b1, z);
            for (double v : pre) out.kink_distance = std::min(out.kink_distance, std::abs(v));
            Vec h = relu_forward(pre);
            double logit = b2;
            for (std::size_t i = 0; i < h.size(); ++i) logit += W2[i] * h[i];
            double s = sigmoid(logit);

            double y = example.relevant[j] ? 1.0 : 0.0;
            out.loss += y > 0.5 ? -std::log(std::max(s, 1e-300))
                                : -std::log(std::max(1.0 - s, 1e-300));

            if (grads) {
                double dlogit = s - y;
                (*grads)["b2"][0] += dlogit;
                Vec dh(d, 0.0);
                for (std::size_t i = 0; i < d; ++i) {
                    (*grads)["W2"][i] += dlogit * h[i];
                    dh[i] = dlogit * W2[i];
                }
                Vec dpre = relu_backward(pre, dh);
                Vec dz = linear_backward(W1, z, dpre, (*grads)["W1"], (*grads)["b1"]);
                if (config.mode == AggregatorMode::reduced_z) {
                    for (std::size_t i = 0; i < d; ++i) dfq[i] += dz[i];
                } else {
                    for (std::size_t i = 0; i < d; ++i)
                        dfq[i] += dz[i] + dz[2 * d + i] + dz[3 * d + i] * fa[i];
                }
                // f_BOW path ends at the frozen embedding table.
            }
        }

        if (grads) {
            Vec dpooled = tanh_backward(fq, dfq);
            conv1d_avgpool_backward(Wc, cols, dpooled, (*grads)["Wc"], (*grads)["bc"]);
        }
    }
    return out;
}

ParamSet train_aggregator(const std::vector<AggregatorExample>& examples,
                          const AggregatorConfig& config, const EmbeddingTable& table,
                          const InvertedIndex& index) {
    bool any_positive = false;
    for (const auto& example : examples)
        for (char r : example.relevant)
            if (r) any_positive = true;
    if (!any_positive) throw DataError("train_aggregator: no positive example in the dataset");

    Aggregator aggregator(config, &table, config.seed);
    AdamState state = AdamState::init(aggregator.params());
    Rng root(config.seed, "train-aggregator");

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        Rng epoch_rng = root.split(epoch);
        std::vector<std::size_t> order(examples.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[epoch_rng.below(i)]);

        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            std::size_t end = std::min(order.size(), start + config.batch_size);
            std::vector<AggregatorExample> batch;
            batch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) batch.push_back(examples[order[i]]);
            GradMap grads(aggregator.params());
            auto result = aggregator_loss(aggregator, index, batch, &grads);
            if (!std::isfinite(result.loss))
                throw NumericError("train_aggregator: non-finite loss");
            grads.scale(1.0 / static_cast<double>(end - start));
            adam_step(aggregator.params(), grads, state, config.adam);
        }
    }
    return aggregator.params();
}

namespace {

std::vector<std::string> unique_doc_ids(const std::vector<AgentOutput>& outputs) {
    std::vector<std::string> ids;
    std::unordered_set<std::string> seen;
    for (const auto& output : outputs)
        for (const auto& hit : output.results.hits)
            if (seen.insert(hit.doc_id).second) ids.push_back(hit.doc_id);
    return ids;
}

RankedList top_k_by_score(std::vector<std::pair<std::string, double>> scored, std::size_t k) {
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (scored.size() > k) scored.resize(k);
    RankedList out;
    out.hits.reserve(scored.size());
    for (auto& [doc_id, score] : scored) out.hits.push_back({std::move(doc_id), score});
    return out;
}

}  // namespace

RankedList aggregate(const Aggregator& aggregator, const InvertedIndex& index,
                     const std::vector<std::string>& q0_tokens,
                     const std::vector<AgentOutput>& outputs, std::size_t k) {
    if (outputs.empty()) throw DataError("aggregate: no agent outputs");
    auto ids = unique_doc_ids(outputs);
    Vec fq = aggregator.encode_query(q0_tokens);

    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(ids.size());
    for (const auto& doc_id : ids) {
        double score = 0.0;
        switch (aggregator.config().mode) {
            case AggregatorMode::rank_only:
                score = accumulated_rank(outputs, doc_id);
                break;
            case AggregatorMode::relevance_only:
                score = aggregator.relevance_score(fq, aggregator.encode_result(index, doc_id));
                break;
            case AggregatorMode::vote_count:
                score = vote_count(outputs, doc_id) *
                        aggregator.relevance_score(fq, aggregator.encode_result(index, doc_id));
                break;
            case AggregatorMode::product:
            case AggregatorMode::reduced_z:
                score = accumulated_rank(outputs, doc_id) *
                        aggregator.relevance_score(fq, aggregator.encode_result(index, doc_id));
                break;
        }
        scored.emplace_back(doc_id, score);
    }
    return top_k_by_score(std::move(scored), k);
}

RankedList aggregate_oracle(const InvertedIndex& index, const std::vector<AgentOutput>& outputs,
                            const std::unordered_set<std::string>& relevant, std::size_t k) {
    (void)index;
    if (outputs.empty()) throw DataError("aggregate_oracle: no agent outputs");
    auto ids = unique_doc_ids(outputs);
    // s^R -> 1 on relevant results and -> 0+ otherwise; the offset keeps
    // every relevant result above every non-relevant one.
    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(ids.size());
    for (const auto& doc_id : ids) {
        double rank_score = accumulated_rank(outputs, doc_id);
        double score = relevant.count(doc_id) ? 1e3 + rank_score : rank_score * 1e-3;
        scored.emplace_back(doc_id, score);
    }
    return top_k_by_score(std::move(scored), k);
}

AgentOutput identity_agent_output(const InvertedIndex& index,
                                  const std::vector<std::string>& q0_tokens, std::size_t k) {
    AgentOutput output;
    output.agent_id = "identity";
    output.reformulation = q0_tokens;
    output.results = index.search(q0_tokens, k);
    return output;
}

void save_tuples_jsonl(const std::vector<TupleRecord>& tuples, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write tuple cache: " + path);
    for (const auto& tuple : tuples) {
        nlohmann::json j;
        j["qid"] = tuple.query_id;
        j["agent"] = tuple.agent_id;
        j["reformulation"] = tuple.reformulation;
        j["docs"] = tuple.doc_ids;
        j["rel"] = tuple.relevance;
        out << j.dump() << '\n';
    }
}

std::vector<TupleRecord> load_tuples_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open tuple cache: " + path);
    std::vector<TupleRecord> tuples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path + ":" + std::to_string(line_no) + ": parse error: " + e.what());
        }
        TupleRecord tuple;
        tuple.query_id = j.at("qid").get<std::string>();
        tuple.agent_id = j.at("agent").get<std::string>();
        tuple.reformulation = j.at("reformulation").get<std::vector<std::string>>();
        tuple.doc_ids = j.at("docs").get<std::vector<std::string>>();
        tuple.relevance = j.at("rel").get<std::vector<int>>();
        if (tuple.relevance.size() != tuple.doc_ids.size())
            throw DataError(path + ":" + std::to_string(line_no) + ": docs/rel length mismatch");
        tuples.push_back(std::move(tuple));
    }
    return tuples;
}

}  // namespace qrw
