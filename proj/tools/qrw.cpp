// Query-reformulation workbench CLI. Subcommands cover dataset synthesis,
// indexing, retrieval, classical PRF expansion, RL/SL reformulator
// training, oracle estimation, the multi-agent pipeline and evaluation.
// Every subcommand accepts --config <json> (per-subcommand sections) and
// --seed; flags override config values.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "qrw/config.hpp"
#include "qrw/embeddings.hpp"
#include "qrw/ensemble.hpp"
#include "qrw/error.hpp"
#include "qrw/index.hpp"
#include "qrw/metrics.hpp"
#include "qrw/prf.hpp"
#include "qrw/rl_oracle.hpp"
#include "qrw/sl.hpp"
#include "qrw/synth.hpp"
#include "qrw/train.hpp"
#include "qrw/trec.hpp"

namespace {

using namespace qrw;

struct GlobalArgs {
    std::string config_path;
    bool seed_set = false;
    uint64_t seed = 0;
};

ConfigFile load_config(const GlobalArgs& args) {
    if (args.config_path.empty()) return ConfigFile{};
    return ConfigFile::load(args.config_path);
}

uint64_t pick_seed(const GlobalArgs& args, const ConfigFile& config, const std::string& section) {
    if (args.seed_set) return args.seed;
    return config.get_u64(section, "seed", 0);
}

// Keys shared by every training-style section.
const std::vector<std::string> kTrainKeys = {
    "seed",          "reward_k",     "epsilon",    "entropy_coef", "value_coef",
    "candidate_terms", "feedback_docs", "rounds",   "max_steps",    "batch_size",
    "seq_mode",      "beam_width",   "max_seq_terms", "eval_every", "patience",
    "run_depth",     "lr",           "clip_unit_norm", "context_window", "dim",
    "append_to_original", "full_bernoulli_entropy"};

TrainConfig train_config_from(const ConfigFile& config, const std::string& section) {
    TrainConfig cfg;
    cfg.reward_k = config.get_size(section, "reward_k", cfg.reward_k);
    cfg.epsilon = config.get_double(section, "epsilon", cfg.epsilon);
    cfg.entropy_coef = config.get_double(section, "entropy_coef", cfg.entropy_coef);
    cfg.value_coef = config.get_double(section, "value_coef", cfg.value_coef);
    cfg.candidate_terms = config.get_size(section, "candidate_terms", cfg.candidate_terms);
    cfg.feedback_docs = config.get_size(section, "feedback_docs", cfg.feedback_docs);
    cfg.rounds = config.get_size(section, "rounds", cfg.rounds);
    cfg.max_steps = config.get_size(section, "max_steps", cfg.max_steps);
    cfg.batch_size = config.get_size(section, "batch_size", cfg.batch_size);
    cfg.seq_mode = config.get_bool(section, "seq_mode", cfg.seq_mode);
    cfg.beam_width = config.get_size(section, "beam_width", cfg.beam_width);
    cfg.max_seq_terms = config.get_size(section, "max_seq_terms", cfg.max_seq_terms);
    cfg.eval_every = config.get_size(section, "eval_every", cfg.eval_every);
    cfg.patience = config.get_size(section, "patience", cfg.patience);
    cfg.run_depth = config.get_size(section, "run_depth", cfg.run_depth);
    cfg.adam.lr = config.get_double(section, "lr", cfg.adam.lr);
    cfg.adam.clip_unit_norm = config.get_bool(section, "clip_unit_norm", cfg.adam.clip_unit_norm);
    return cfg;
}

PolicyConfig policy_config_from(const ConfigFile& config, const std::string& section,
                                std::size_t dim) {
    PolicyConfig cfg;
    cfg.dim = config.get_size(section, "dim", dim);
    cfg.context_window = config.get_size(section, "context_window", cfg.context_window);
    cfg.append_to_original =
        config.get_bool(section, "append_to_original", cfg.append_to_original);
    cfg.full_bernoulli_entropy =
        config.get_bool(section, "full_bernoulli_entropy", cfg.full_bernoulli_entropy);
    return cfg;
}

QuerySet judged_only(const QuerySet& queries, const Qrels& qrels) {
    QuerySet out;
    for (const auto& query : queries.queries) {
        auto it = qrels.find(query.query_id);
        if (it != qrels.end() && !it->second.empty()) out.queries.push_back(query);
    }
    return out;
}

std::vector<RankedList> batch_search(const InvertedIndex& index, const QuerySet& queries,
                                     std::size_t k) {
    std::vector<RankedList> run;
    run.reserve(queries.queries.size());
    for (const auto& query : queries.queries) {
        RankedList list = index.search(tokenize(query.text), k);
        list.query_id = query.query_id;
        run.push_back(std::move(list));
    }
    return run;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"query reformulation workbench"};
    app.require_subcommand(1);

    GlobalArgs globals;
    app.add_option("--config", globals.config_path, "JSON config file")->expected(1);
    auto* seed_opt = app.add_option("--seed", globals.seed, "global random seed");

    // ---- synth ----
    auto* synth_cmd = app.add_subcommand("synth", "generate the synthetic mismatch dataset");
    std::string synth_out;
    SynthSpec spec;
    synth_cmd->add_option("--out", synth_out, "output directory")->required();
    synth_cmd->add_option("--n-docs", spec.n_docs, "number of documents");
    synth_cmd->add_option("--n-queries", spec.n_queries, "number of queries");
    synth_cmd->add_option("--vocab-size", spec.vocab_size, "vocabulary size");
    synth_cmd->add_option("--doc-len", spec.doc_len, "tokens per document");
    synth_cmd->add_option("--mismatch-rate", spec.mismatch_rate, "vocabulary mismatch rate");
    synth_cmd->add_option("--dim", spec.embedding_dim, "embedding dimension");

    // ---- index ----
    auto* index_cmd = app.add_subcommand("index", "build an inverted index from a JSONL corpus");
    std::string index_corpus, index_out;
    Bm25Params bm25;
    index_cmd->add_option("--corpus", index_corpus, "corpus JSONL")->required();
    index_cmd->add_option("--out", index_out, "index output path")->required();
    index_cmd->add_option("--k1", bm25.k1, "BM25 k1");
    index_cmd->add_option("--b", bm25.b, "BM25 b");

    // ---- search ----
    auto* search_cmd = app.add_subcommand("search", "run BM25 retrieval, write a TREC run");
    std::string search_index, search_queries, search_out, search_tag = "qrw";
    std::size_t search_k = 1000;
    search_cmd->add_option("--index", search_index, "index file")->required();
    search_cmd->add_option("--queries", search_queries, "queries TSV")->required();
    search_cmd->add_option("--out", search_out, "run output path")->required();
    search_cmd->add_option("--k", search_k, "list depth");
    search_cmd->add_option("--tag", search_tag, "run tag");

    // ---- expand ----
    auto* expand_cmd = app.add_subcommand("expand", "classical PRF query expansion");
    std::string expand_index, expand_queries, expand_out, expand_method = "tfidf";
    std::string expand_embeddings;
    ExpansionConfig expansion;
    expand_cmd->add_option("--index", expand_index, "index file")->required();
    expand_cmd->add_option("--queries", expand_queries, "queries TSV")->required();
    expand_cmd->add_option("--out", expand_out, "expanded queries TSV")->required();
    expand_cmd->add_option("--method", expand_method, "tfidf|rm|emb_feedback|emb_vocab");
    expand_cmd->add_option("--terms", expansion.terms_per_source, "N terms per source");
    expand_cmd->add_option("--feedback", expansion.feedback_docs, "K feedback docs");
    expand_cmd->add_option("--rm-lambda", expansion.rm_lambda, "RM interpolation");
    expand_cmd->add_option("--dirichlet-u", expansion.dirichlet_u, "Dirichlet pseudo-count");
    expand_cmd->add_option("--embeddings", expand_embeddings, "embedding table (emb_* methods)");

    // ---- train-rl ----
    auto* train_rl_cmd = app.add_subcommand("train-rl", "train the RL term-selection policy");
    std::string rl_index, rl_emb, rl_train_q, rl_dev_q, rl_qrels, rl_out, rl_log;
    train_rl_cmd->add_option("--index", rl_index)->required();
    train_rl_cmd->add_option("--embeddings", rl_emb)->required();
    train_rl_cmd->add_option("--train-queries", rl_train_q)->required();
    train_rl_cmd->add_option("--dev-queries", rl_dev_q);
    train_rl_cmd->add_option("--qrels", rl_qrels)->required();
    train_rl_cmd->add_option("--out", rl_out, "checkpoint path")->required();
    train_rl_cmd->add_option("--log", rl_log, "training log TSV");
    std::size_t rl_steps = 0;
    train_rl_cmd->add_option("--steps", rl_steps, "max training steps");
    bool rl_seq = false;
    train_rl_cmd->add_flag("--seq", rl_seq, "sequential generation mode");

    // ---- train-sl ----
    auto* train_sl_cmd = app.add_subcommand("train-sl", "label terms and train the SL classifier");
    std::string sl_index, sl_emb, sl_train_q, sl_qrels, sl_out, sl_labels_out;
    train_sl_cmd->add_option("--index", sl_index)->required();
    train_sl_cmd->add_option("--embeddings", sl_emb)->required();
    train_sl_cmd->add_option("--train-queries", sl_train_q)->required();
    train_sl_cmd->add_option("--qrels", sl_qrels)->required();
    train_sl_cmd->add_option("--out", sl_out, "classifier checkpoint")->required();
    train_sl_cmd->add_option("--labels-out", sl_labels_out, "labels TSV for audit");

    // ---- oracle-sl ----
    auto* oracle_sl_cmd = app.add_subcommand("oracle-sl", "SL-Oracle reformulations and rewards");
    std::string osl_index, osl_queries, osl_qrels, osl_out;
    oracle_sl_cmd->add_option("--index", osl_index)->required();
    oracle_sl_cmd->add_option("--queries", osl_queries)->required();
    oracle_sl_cmd->add_option("--qrels", osl_qrels)->required();
    oracle_sl_cmd->add_option("--out", osl_out, "report TSV")->required();

    // ---- oracle-rl ----
    auto* oracle_rl_cmd = app.add_subcommand("oracle-rl", "RL-Oracle upper-bound estimate");
    std::string orl_index, orl_emb, orl_queries, orl_qrels, orl_out;
    std::size_t orl_subset = 100;
    oracle_rl_cmd->add_option("--index", orl_index)->required();
    oracle_rl_cmd->add_option("--embeddings", orl_emb)->required();
    oracle_rl_cmd->add_option("--queries", orl_queries)->required();
    oracle_rl_cmd->add_option("--qrels", orl_qrels)->required();
    oracle_rl_cmd->add_option("--out", orl_out, "report TSV")->required();
    oracle_rl_cmd->add_option("--subset-size", orl_subset, "examples per subset");

    // ---- train-subagents ----
    auto* subagents_cmd = app.add_subcommand("train-subagents",
                                             "train partitioned sub-agents, cache tuples");
    std::string sub_index, sub_emb, sub_train_q, sub_eval_q, sub_qrels, sub_out_dir;
    std::string sub_scheme = "random_disjoint";
    std::size_t sub_agents = 10, sub_jobs = 1;
    subagents_cmd->add_option("--index", sub_index)->required();
    subagents_cmd->add_option("--embeddings", sub_emb)->required();
    subagents_cmd->add_option("--train-queries", sub_train_q)->required();
    subagents_cmd->add_option("--eval-queries", sub_eval_q, "extra tuple cache for these queries");
    subagents_cmd->add_option("--qrels", sub_qrels)->required();
    subagents_cmd->add_option("--out-dir", sub_out_dir)->required();
    subagents_cmd->add_option("--scheme", sub_scheme, "random_disjoint|bagging|full");
    subagents_cmd->add_option("--agents", sub_agents, "number of sub-agents");
    subagents_cmd->add_option("--jobs", sub_jobs, "parallel training jobs");

    // ---- train-aggregator ----
    auto* aggregator_cmd = app.add_subcommand("train-aggregator",
                                              "train the answer aggregator from cached tuples");
    std::string agg_index, agg_emb, agg_tuples, agg_queries, agg_out;
    std::string agg_eval_tuples, agg_eval_queries, agg_eval_out, agg_mode = "product";
    std::size_t agg_k = 40;
    aggregator_cmd->add_option("--index", agg_index)->required();
    aggregator_cmd->add_option("--embeddings", agg_emb)->required();
    aggregator_cmd->add_option("--tuples", agg_tuples, "training tuple cache")->required();
    aggregator_cmd->add_option("--queries", agg_queries, "training queries TSV")->required();
    aggregator_cmd->add_option("--out", agg_out, "aggregator checkpoint")->required();
    aggregator_cmd->add_option("--mode", agg_mode,
                               "product|relevance_only|rank_only|vote_count|reduced_z");
    aggregator_cmd->add_option("--eval-tuples", agg_eval_tuples, "tuple cache to aggregate");
    aggregator_cmd->add_option("--eval-queries", agg_eval_queries, "queries for --eval-tuples");
    aggregator_cmd->add_option("--eval-out", agg_eval_out, "aggregated run output");
    aggregator_cmd->add_option("--k", agg_k, "aggregated list depth");

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "score a TREC run against qrels");
    std::string eval_run, eval_qrels, eval_metric = "map", eval_out;
    std::size_t eval_k = 10;
    eval_cmd->add_option("--run", eval_run)->required();
    eval_cmd->add_option("--qrels", eval_qrels)->required();
    eval_cmd->add_option("--metric", eval_metric, "map|r|p|mrr");
    eval_cmd->add_option("--k", eval_k, "cutoff / cap");
    eval_cmd->add_option("--out", eval_out, "report TSV (default stdout)");

    // ---- diversity ----
    auto* diversity_cmd = app.add_subcommand("diversity", "reformulation diversity report");
    std::string div_reformulations, div_out;
    diversity_cmd->add_option("--reformulations", div_reformulations,
                              "TSV qid<TAB>reformulation, several rows per qid")
        ->required();
    diversity_cmd->add_option("--out", div_out, "report TSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return static_cast<int>(ExitCode::usage);
    }
    globals.seed_set = seed_opt->count() > 0;

    try {
        ConfigFile config = load_config(globals);

        if (synth_cmd->parsed()) {
            // CLI flags win over config values.
            SynthSpec effective = spec;
            if (synth_cmd->count("--n-docs") == 0)
                effective.n_docs = config.get_size("synth", "n_docs", spec.n_docs);
            if (synth_cmd->count("--n-queries") == 0)
                effective.n_queries = config.get_size("synth", "n_queries", spec.n_queries);
            if (synth_cmd->count("--vocab-size") == 0)
                effective.vocab_size = config.get_size("synth", "vocab_size", spec.vocab_size);
            if (synth_cmd->count("--doc-len") == 0)
                effective.doc_len = config.get_size("synth", "doc_len", spec.doc_len);
            if (synth_cmd->count("--mismatch-rate") == 0)
                effective.mismatch_rate =
                    config.get_double("synth", "mismatch_rate", spec.mismatch_rate);
            if (synth_cmd->count("--dim") == 0)
                effective.embedding_dim =
                    config.get_size("synth", "embedding_dim", spec.embedding_dim);
            config.validate_section("synth", {"seed", "n_docs", "n_queries", "vocab_size",
                                              "doc_len", "mismatch_rate", "embedding_dim"});
            effective.seed = pick_seed(globals, config, "synth");
            auto dataset = generate_synthetic(effective);
            write_synthetic(dataset, synth_out);
            std::cout << "synth: " << dataset.corpus.size() << " docs, "
                      << dataset.queries.queries.size() << " queries -> " << synth_out << "\n";
            return 0;
        }

        if (index_cmd->parsed()) {
            config.validate_section("index", {"k1", "b"});
            if (index_cmd->count("--k1") == 0) bm25.k1 = config.get_double("index", "k1", bm25.k1);
            if (index_cmd->count("--b") == 0) bm25.b = config.get_double("index", "b", bm25.b);
            Corpus corpus = load_corpus_jsonl(index_corpus);
            InvertedIndex index = InvertedIndex::build(corpus, bm25);
            index.save(index_out);
            std::cout << "index: " << index.n_docs() << " docs, " << index.vocabulary().size()
                      << " terms -> " << index_out << "\n";
            return 0;
        }

        if (search_cmd->parsed()) {
            config.validate_section("search", {"k", "tag"});
            if (search_cmd->count("--k") == 0) search_k = config.get_size("search", "k", search_k);
            if (search_cmd->count("--tag") == 0)
                search_tag = config.get_string("search", "tag", search_tag);
            InvertedIndex index = InvertedIndex::load(search_index);
            QuerySet queries = load_queries_tsv(search_queries);
            auto run = batch_search(index, queries, search_k);
            save_run(run, search_out, search_tag);
            std::cout << "search: " << run.size() << " queries -> " << search_out << "\n";
            return 0;
        }

        if (expand_cmd->parsed()) {
            config.validate_section(
                "expand", {"method", "terms", "feedback", "rm_lambda", "dirichlet_u"});
            if (expand_cmd->count("--method") == 0)
                expand_method = config.get_string("expand", "method", expand_method);
            if (expand_cmd->count("--terms") == 0)
                expansion.terms_per_source =
                    config.get_size("expand", "terms", expansion.terms_per_source);
            if (expand_cmd->count("--feedback") == 0)
                expansion.feedback_docs =
                    config.get_size("expand", "feedback", expansion.feedback_docs);
            if (expand_cmd->count("--rm-lambda") == 0)
                expansion.rm_lambda = config.get_double("expand", "rm_lambda", expansion.rm_lambda);
            if (expand_cmd->count("--dirichlet-u") == 0)
                expansion.dirichlet_u =
                    config.get_double("expand", "dirichlet_u", expansion.dirichlet_u);
            expansion.method = parse_expansion_method(expand_method);

            InvertedIndex index = InvertedIndex::load(expand_index);
            QuerySet queries = load_queries_tsv(expand_queries);
            EmbeddingTable table;
            bool needs_table = expansion.method == ExpansionMethod::emb_feedback ||
                               expansion.method == ExpansionMethod::emb_vocab;
            if (needs_table) {
                if (expand_embeddings.empty())
                    throw ConfigError("expand: --embeddings required for emb_* methods");
                table = EmbeddingTable::load(expand_embeddings);
            }
            std::ofstream out(expand_out);
            if (!out) throw DataError("cannot write expanded queries: " + expand_out);
            for (const auto& query : queries.queries) {
                auto q0 = tokenize(query.text);
                RankedList feedback = index.search(q0, expansion.feedback_docs);
                auto expanded =
                    expand_query(q0, feedback, index, needs_table ? &table : nullptr, expansion);
                out << query.query_id << '\t';
                for (std::size_t i = 0; i < expanded.size(); ++i) {
                    if (i) out << ' ';
                    out << expanded[i];
                }
                out << '\n';
            }
            std::cout << "expand: " << queries.queries.size() << " queries -> " << expand_out
                      << "\n";
            return 0;
        }

        if (train_rl_cmd->parsed()) {
            config.validate_section("train_rl", kTrainKeys);
            TrainConfig train_cfg = train_config_from(config, "train_rl");
            if (rl_steps > 0) train_cfg.max_steps = rl_steps;
            if (rl_seq) train_cfg.seq_mode = true;
            train_cfg.seed = pick_seed(globals, config, "train_rl");

            InvertedIndex index = InvertedIndex::load(rl_index);
            EmbeddingTable table = EmbeddingTable::load(rl_emb, train_cfg.seed);
            PolicyConfig policy_cfg = policy_config_from(config, "train_rl", table.dim());
            policy_cfg.epsilon = train_cfg.epsilon;
            policy_cfg.beam_width = train_cfg.beam_width;
            policy_cfg.max_seq_terms = train_cfg.max_seq_terms;
            QuerySet train_queries = load_queries_tsv(rl_train_q);
            QuerySet dev_queries;
            if (!rl_dev_q.empty()) dev_queries = load_queries_tsv(rl_dev_q);
            Qrels qrels = load_qrels(rl_qrels);

            Policy policy(policy_cfg, &table, train_cfg.seed);
            std::ofstream log;
            if (!rl_log.empty()) {
                log.open(rl_log);
                if (!log) throw DataError("cannot write training log: " + rl_log);
            }
            TrainResult result = train(index, policy, train_queries, dev_queries, qrels, train_cfg,
                                       rl_log.empty() ? nullptr : &log);
            save_checkpoint(result.best_params, rl_out);
            std::cout << "train-rl: " << result.steps_run << " steps, best dev reward "
                      << result.best_dev_reward << " -> " << rl_out << "\n";
            return 0;
        }

        if (train_sl_cmd->parsed()) {
            config.validate_section("train_sl",
                                    {"seed", "tau", "epochs", "batch_size", "epsilon", "lr",
                                     "reward_k", "candidate_terms", "feedback_docs",
                                     "context_window", "dim"});
            SlConfig sl_cfg;
            sl_cfg.tau = config.get_double("train_sl", "tau", sl_cfg.tau);
            sl_cfg.epochs = config.get_size("train_sl", "epochs", sl_cfg.epochs);
            sl_cfg.batch_size = config.get_size("train_sl", "batch_size", sl_cfg.batch_size);
            sl_cfg.epsilon = config.get_double("train_sl", "epsilon", sl_cfg.epsilon);
            sl_cfg.adam.lr = config.get_double("train_sl", "lr", sl_cfg.adam.lr);
            sl_cfg.seed = pick_seed(globals, config, "train_sl");
            TrainConfig env_cfg;
            env_cfg.reward_k = config.get_size("train_sl", "reward_k", env_cfg.reward_k);
            env_cfg.candidate_terms =
                config.get_size("train_sl", "candidate_terms", env_cfg.candidate_terms);
            env_cfg.feedback_docs =
                config.get_size("train_sl", "feedback_docs", env_cfg.feedback_docs);

            InvertedIndex index = InvertedIndex::load(sl_index);
            EmbeddingTable table = EmbeddingTable::load(sl_emb, sl_cfg.seed);
            PolicyConfig policy_cfg = policy_config_from(config, "train_sl", table.dim());
            QuerySet queries = judged_only(load_queries_tsv(sl_train_q), load_qrels(sl_qrels));
            Qrels qrels = load_qrels(sl_qrels);

            std::ofstream labels_out;
            if (!sl_labels_out.empty()) {
                labels_out.open(sl_labels_out);
                if (!labels_out) throw DataError("cannot write labels: " + sl_labels_out);
                labels_out << "qid\tterm\tR\tR'\tlabel\n";
            }
            std::vector<LabeledExample> examples;
            for (const auto& query : queries.queries) {
                auto labels = label_candidates(index, query, qrels, env_cfg,
                                               policy_cfg.context_window, sl_cfg.tau);
                if (labels_out.is_open()) save_labels_tsv(query.query_id, labels, labels_out);
                auto q0 = tokenize(query.text);
                for (auto& label : labels)
                    examples.push_back({q0, label.candidate, label.label});
            }
            ParamSet params = train_classifier(examples, policy_cfg, table, sl_cfg);
            save_checkpoint(params, sl_out);
            std::cout << "train-sl: " << examples.size() << " labeled examples -> " << sl_out
                      << "\n";
            return 0;
        }

        if (oracle_sl_cmd->parsed()) {
            config.validate_section("oracle_sl", {"seed", "tau", "reward_k", "candidate_terms",
                                                  "feedback_docs", "context_window"});
            double tau = config.get_double("oracle_sl", "tau", 0.005);
            TrainConfig env_cfg;
            env_cfg.reward_k = config.get_size("oracle_sl", "reward_k", env_cfg.reward_k);
            env_cfg.candidate_terms =
                config.get_size("oracle_sl", "candidate_terms", env_cfg.candidate_terms);
            env_cfg.feedback_docs =
                config.get_size("oracle_sl", "feedback_docs", env_cfg.feedback_docs);
            std::size_t context_window = config.get_size("oracle_sl", "context_window", 2);

            InvertedIndex index = InvertedIndex::load(osl_index);
            Qrels qrels = load_qrels(osl_qrels);
            QuerySet queries = judged_only(load_queries_tsv(osl_queries), qrels);

            std::ofstream out(osl_out);
            if (!out) throw DataError("cannot write report: " + osl_out);
            out << "qid\traw_reward\toracle_reward\treformulation\n";
            double raw_total = 0.0, oracle_total = 0.0;
            for (const auto& query : queries.queries) {
                auto labels =
                    label_candidates(index, query, qrels, env_cfg, context_window, tau);
                auto q0 = tokenize(query.text);
                auto reformulated = sl_oracle(q0, labels);
                RankedList result = index.search(reformulated, env_cfg.reward_k);
                const auto& relevant = qrels.at(query.query_id);
                double raw = labels.empty() ? 0.0 : labels.front().base_reward;
                double oracle = recall_at_k(result, relevant, env_cfg.reward_k);
                raw_total += raw;
                oracle_total += oracle;
                out << query.query_id << '\t' << raw << '\t' << oracle << '\t';
                for (std::size_t i = 0; i < reformulated.size(); ++i) {
                    if (i) out << ' ';
                    out << reformulated[i];
                }
                out << '\n';
            }
            std::size_t n = queries.queries.size();
            if (n > 0)
                out << "MEAN\t" << raw_total / static_cast<double>(n) << '\t'
                    << oracle_total / static_cast<double>(n) << "\t\n";
            std::cout << "oracle-sl: " << n << " queries -> " << osl_out << "\n";
            return 0;
        }

        if (oracle_rl_cmd->parsed()) {
            config.validate_section("oracle_rl", kTrainKeys);
            RlOracleConfig oracle_cfg;
            oracle_cfg.subset_size = orl_subset;
            oracle_cfg.train = train_config_from(config, "oracle_rl");
            oracle_cfg.train.seed = pick_seed(globals, config, "oracle_rl");

            InvertedIndex index = InvertedIndex::load(orl_index);
            EmbeddingTable table = EmbeddingTable::load(orl_emb, oracle_cfg.train.seed);
            PolicyConfig policy_cfg = policy_config_from(config, "oracle_rl", table.dim());
            Qrels qrels = load_qrels(orl_qrels);
            QuerySet queries = load_queries_tsv(orl_queries);

            RlOracleResult result =
                estimate_upper_bound(index, table, policy_cfg, queries, qrels, oracle_cfg);
            std::ofstream out(orl_out);
            if (!out) throw DataError("cannot write report: " + orl_out);
            out << "subset\tsize\tbest_reward\tsteps\n";
            for (const auto& sub : result.subsets)
                out << sub.subset_id << '\t' << sub.size << '\t' << sub.best_reward << '\t'
                    << sub.steps << '\n';
            out << "R*\t" << result.upper_bound << "\t\t\n";
            std::cout << "oracle-rl: R* = " << result.upper_bound << " over "
                      << result.subsets.size() << " subsets -> " << orl_out << "\n";
            return 0;
        }

        if (subagents_cmd->parsed()) {
            auto keys = kTrainKeys;
            keys.insert(keys.end(), {"scheme", "agents"});
            config.validate_section("train_subagents", keys);
            TrainConfig train_cfg = train_config_from(config, "train_subagents");
            train_cfg.seed = pick_seed(globals, config, "train_subagents");
            if (subagents_cmd->count("--scheme") == 0)
                sub_scheme = config.get_string("train_subagents", "scheme", sub_scheme);
            if (subagents_cmd->count("--agents") == 0)
                sub_agents = config.get_size("train_subagents", "agents", sub_agents);

            InvertedIndex index = InvertedIndex::load(sub_index);
            EmbeddingTable table = EmbeddingTable::load(sub_emb, train_cfg.seed);
            PolicyConfig policy_cfg = policy_config_from(config, "train_subagents", table.dim());
            policy_cfg.epsilon = train_cfg.epsilon;
            Qrels qrels = load_qrels(sub_qrels);
            QuerySet train_queries = judged_only(load_queries_tsv(sub_train_q), qrels);

            PartitionPlan plan;
            plan.scheme = parse_partition_scheme(sub_scheme);
            plan.n_agents = sub_agents;
            plan.seed = train_cfg.seed;
            auto parts = partition(train_queries.queries.size(), plan);

            std::filesystem::create_directories(sub_out_dir);
            std::vector<ParamSet> trained(parts.size());
            std::atomic<std::size_t> next{0};
            auto worker = [&]() {
                while (true) {
                    std::size_t agent = next.fetch_add(1);
                    if (agent >= parts.size()) break;
                    QuerySet subset;
                    for (std::size_t ix : parts[agent])
                        subset.queries.push_back(train_queries.queries[ix]);
                    TrainConfig agent_cfg = train_cfg;
                    agent_cfg.seed = Rng(train_cfg.seed, "subagent").split(agent).next_u64();
                    Policy policy(policy_cfg, &table, agent_cfg.seed);
                    TrainResult result =
                        train(index, policy, subset, QuerySet{}, qrels, agent_cfg, nullptr);
                    trained[agent] = std::move(result.best_params);
                }
            };
            std::vector<std::thread> threads;
            std::size_t jobs = std::max<std::size_t>(1, sub_jobs);
            for (std::size_t j = 0; j < jobs; ++j) threads.emplace_back(worker);
            for (auto& thread : threads) thread.join();

            for (std::size_t agent = 0; agent < trained.size(); ++agent) {
                auto path = std::filesystem::path(sub_out_dir) /
                            ("agent_" + std::to_string(agent) + ".json");
                save_checkpoint(trained[agent], path.string());
            }

            // Tuple caches: eval-phase outputs of every agent (plus the
            // identity agent) for the training queries and, optionally, a
            // held-out set.
            auto write_tuples = [&](const QuerySet& queries, const std::string& name) {
                std::vector<TupleRecord> tuples;
                for (const auto& query : queries.queries) {
                    auto q0 = tokenize(query.text);
                    auto relevant_it = qrels.find(query.query_id);
                    auto add_tuple = [&](const std::string& agent_id,
                                         const std::vector<std::string>& reformulation,
                                         const RankedList& results) {
                        TupleRecord tuple;
                        tuple.query_id = query.query_id;
                        tuple.agent_id = agent_id;
                        tuple.reformulation = reformulation;
                        for (const auto& hit : results.hits) {
                            tuple.doc_ids.push_back(hit.doc_id);
                            bool rel = relevant_it != qrels.end() &&
                                       relevant_it->second.count(hit.doc_id) > 0;
                            tuple.relevance.push_back(rel ? 1 : 0);
                        }
                        tuples.push_back(std::move(tuple));
                    };
                    add_tuple("identity", q0, index.search(q0, train_cfg.reward_k));
                    for (std::size_t agent = 0; agent < trained.size(); ++agent) {
                        Policy policy(policy_cfg, &table, ParamSet(trained[agent]));
                        Query q{query.query_id, query.text};
                        Episode episode = run_episode(index, policy, q, qrels, train_cfg,
                                                      Phase::eval, nullptr);
                        RankedList top = episode.result;
                        if (top.hits.size() > train_cfg.reward_k)
                            top.hits.resize(train_cfg.reward_k);
                        add_tuple("agent_" + std::to_string(agent), episode.reformulated, top);
                    }
                }
                save_tuples_jsonl(tuples,
                                  (std::filesystem::path(sub_out_dir) / name).string());
            };
            write_tuples(train_queries, "tuples_train.jsonl");
            if (!sub_eval_q.empty())
                write_tuples(load_queries_tsv(sub_eval_q), "tuples_eval.jsonl");

            std::cout << "train-subagents: " << trained.size() << " agents -> " << sub_out_dir
                      << "\n";
            return 0;
        }

        if (aggregator_cmd->parsed()) {
            config.validate_section("train_aggregator",
                                    {"seed", "mode", "epochs", "batch_size", "lr", "dim",
                                     "conv_width", "bow_truncate", "k"});
            AggregatorConfig agg_cfg;
            if (aggregator_cmd->count("--mode") == 0)
                agg_mode = config.get_string("train_aggregator", "mode", agg_mode);
            agg_cfg.mode = parse_aggregator_mode(agg_mode);
            agg_cfg.epochs = config.get_size("train_aggregator", "epochs", agg_cfg.epochs);
            agg_cfg.batch_size =
                config.get_size("train_aggregator", "batch_size", agg_cfg.batch_size);
            agg_cfg.adam.lr = config.get_double("train_aggregator", "lr", agg_cfg.adam.lr);
            agg_cfg.conv_width =
                config.get_size("train_aggregator", "conv_width", agg_cfg.conv_width);
            agg_cfg.bow_truncate =
                config.get_size("train_aggregator", "bow_truncate", agg_cfg.bow_truncate);
            agg_cfg.seed = pick_seed(globals, config, "train_aggregator");
            if (aggregator_cmd->count("--k") == 0)
                agg_k = config.get_size("train_aggregator", "k", agg_k);

            InvertedIndex index = InvertedIndex::load(agg_index);
            EmbeddingTable table = EmbeddingTable::load(agg_emb, agg_cfg.seed);
            agg_cfg.dim = config.get_size("train_aggregator", "dim", table.dim());

            auto tuples = load_tuples_jsonl(agg_tuples);
            QuerySet queries = load_queries_tsv(agg_queries);
            std::unordered_map<std::string, std::vector<std::string>> q0_by_id;
            for (const auto& query : queries.queries)
                q0_by_id.emplace(query.query_id, tokenize(query.text));

            // Group tuples into per-query examples with a deduplicated pool.
            std::vector<AggregatorExample> examples;
            std::unordered_map<std::string, std::size_t> example_by_qid;
            std::unordered_map<std::string, std::unordered_set<std::string>> seen_docs;
            for (const auto& tuple : tuples) {
                auto qit = q0_by_id.find(tuple.query_id);
                if (qit == q0_by_id.end())
                    throw DataError("tuple cache query " + tuple.query_id +
                                    " missing from --queries");
                auto [eit, inserted] = example_by_qid.emplace(tuple.query_id, examples.size());
                if (inserted) {
                    AggregatorExample example;
                    example.q0 = qit->second;
                    examples.push_back(std::move(example));
                }
                auto& example = examples[eit->second];
                auto& seen = seen_docs[tuple.query_id];
                for (std::size_t i = 0; i < tuple.doc_ids.size(); ++i) {
                    if (!seen.insert(tuple.doc_ids[i]).second) continue;
                    example.doc_ids.push_back(tuple.doc_ids[i]);
                    example.relevant.push_back(tuple.relevance[i] ? 1 : 0);
                }
            }
            ParamSet params = train_aggregator(examples, agg_cfg, table, index);
            save_checkpoint(params, agg_out);
            std::cout << "train-aggregator: " << examples.size() << " queries -> " << agg_out
                      << "\n";

            if (!agg_eval_tuples.empty()) {
                if (agg_eval_queries.empty() || agg_eval_out.empty())
                    throw ConfigError(
                        "train-aggregator: --eval-tuples needs --eval-queries and --eval-out");
                Aggregator aggregator(agg_cfg, &table, std::move(params));
                auto eval_tuples = load_tuples_jsonl(agg_eval_tuples);
                QuerySet eval_queries = load_queries_tsv(agg_eval_queries);
                std::unordered_map<std::string, std::vector<AgentOutput>> outputs_by_qid;
                for (const auto& tuple : eval_tuples) {
                    AgentOutput output;
                    output.agent_id = tuple.agent_id;
                    output.reformulation = tuple.reformulation;
                    output.results.query_id = tuple.query_id;
                    for (const auto& doc_id : tuple.doc_ids)
                        output.results.hits.push_back({doc_id, 0.0});
                    outputs_by_qid[tuple.query_id].push_back(std::move(output));
                }
                std::vector<RankedList> run;
                for (const auto& query : eval_queries.queries) {
                    auto oit = outputs_by_qid.find(query.query_id);
                    if (oit == outputs_by_qid.end()) continue;
                    RankedList list = aggregate(aggregator, index, tokenize(query.text),
                                                oit->second, agg_k);
                    list.query_id = query.query_id;
                    run.push_back(std::move(list));
                }
                save_run(run, agg_eval_out, "qrw-agg");
                std::cout << "aggregate: " << run.size() << " queries -> " << agg_eval_out
                          << "\n";
            }
            return 0;
        }

        if (eval_cmd->parsed()) {
            config.validate_section("eval", {"metric", "k"});
            if (eval_cmd->count("--metric") == 0)
                eval_metric = config.get_string("eval", "metric", eval_metric);
            if (eval_cmd->count("--k") == 0) eval_k = config.get_size("eval", "k", eval_k);
            auto run = load_run(eval_run);
            Qrels qrels = load_qrels(eval_qrels);
            MetricReport report = evaluate_run(run, qrels, parse_metric(eval_metric), eval_k);

            std::ostream* out = &std::cout;
            std::ofstream file;
            if (!eval_out.empty()) {
                file.open(eval_out);
                if (!file) throw DataError("cannot write report: " + eval_out);
                out = &file;
            }
            char buf[64];
            *out << "qid\t" << eval_metric << "\n";
            for (const auto& [qid, value] : report.per_query) {
                std::snprintf(buf, sizeof(buf), "%.6f", value);
                *out << qid << '\t' << buf << '\n';
            }
            std::snprintf(buf, sizeof(buf), "%.6f", report.mean);
            *out << "MEAN\t" << buf << '\n';
            return 0;
        }

        if (diversity_cmd->parsed()) {
            config.validate_section("diversity", {});
            std::ifstream in(div_reformulations);
            if (!in) throw DataError("cannot open reformulations: " + div_reformulations);
            std::vector<std::string> order;
            std::unordered_map<std::string, std::vector<std::vector<std::string>>> sets;
            std::string line;
            std::size_t line_no = 0;
            while (std::getline(in, line)) {
                ++line_no;
                if (line.empty()) continue;
                auto tab = line.find('\t');
                if (tab == std::string::npos)
                    throw DataError(div_reformulations + ":" + std::to_string(line_no) +
                                    ": expected qid<TAB>reformulation");
                std::string qid = line.substr(0, tab);
                if (sets.find(qid) == sets.end()) order.push_back(qid);
                sets[qid].push_back(tokenize(line.substr(tab + 1)));
            }
            ReformulationSet reformulations;
            for (const auto& qid : order) reformulations.sets.push_back(sets.at(qid));
            DiversityReport report = diversity_report(reformulations);

            std::ostream* out = &std::cout;
            std::ofstream file;
            if (!div_out.empty()) {
                file.open(div_out);
                if (!file) throw DataError("cannot write report: " + div_out);
                out = &file;
            }
            char buf[160];
            std::snprintf(buf, sizeof(buf), "pCos\t%.6f\npBLEU\t%.6f\nPINC\t%.6f\nLengthStd\t%.6f\n",
                          report.p_cos, report.p_bleu, report.pinc, report.length_std);
            *out << buf;
            return 0;
        }

        std::cerr << "no subcommand given\n";
        return static_cast<int>(ExitCode::usage);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::config);
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::data);
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::numeric);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::data);
    }
}
