#include "replyset/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "replyset/baselines.hpp"
#include "replyset/config.hpp"
#include "replyset/corpus.hpp"
#include "replyset/encoder.hpp"
#include "replyset/error.hpp"
#include "replyset/index.hpp"
#include "replyset/matrix.hpp"
#include "replyset/metrics.hpp"
#include "replyset/parallel.hpp"
#include "replyset/planner.hpp"

namespace replyset::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string("missing required option --") + flag);
}

std::ofstream open_output(const std::string& path) {
  require(path, "output");
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

std::string echo(const RunConfig& cfg, std::initializer_list<std::string> inputs) {
  const std::vector<std::string> paths(inputs);
  return config_echo_json(cfg, hash_inputs(paths));
}

void write_matrix_with_meta(const EmbeddingMatrix& m, const fs::path& path,
                            const std::string& header) {
  save_matrix(m, path);
  std::ofstream meta(path.string() + ".meta.json", std::ios::trunc);
  if (!meta) throw DataError("cannot write " + path.string() + ".meta.json");
  meta << json{{"header", json::parse(header)}, {"rows", m.rows()}, {"dim", m.dim()}}.dump()
       << '\n';
}

PlanMode parse_mode(const std::string& mode) {
  return mode == "online" ? PlanMode::online : PlanMode::offline;
}

// Everything retrieval-side commands share: the pool, its index, and vectors
// for the messages (and ground-truth replies) being processed.
struct Workspace {
  CandidatePool pool;
  RetrievalIndex index;
  std::optional<HashedTfidfEncoder> encoder;
};

Workspace open_workspace(const RunConfig& cfg) {
  require(cfg.pool, "pool");
  require(cfg.pool_matrix, "pool-matrix");
  Workspace ws;
  ws.pool = load_pool(cfg.pool);
  EmbeddingMatrix replies = load_matrix(cfg.pool_matrix);
  if (replies.rows() != ws.pool.size()) {
    throw DataError("pool matrix has " + std::to_string(replies.rows()) + " rows but the pool has " +
                    std::to_string(ws.pool.size()) + " replies");
  }
  std::vector<double> bias(ws.pool.lm_biases().begin(), ws.pool.lm_biases().end());
  ws.index = RetrievalIndex(std::move(replies), std::move(bias), cfg.planner.beta);
  if (!cfg.encoder.empty()) ws.encoder = load_encoder(cfg.encoder);
  return ws;
}

EmbeddingMatrix side_vectors(const Workspace& ws, const RunConfig& cfg,
                             std::span<const DialoguePair> pairs, TextSide side) {
  const std::string& path = side == TextSide::message ? cfg.message_matrix : cfg.reply_matrix;
  EmbeddingMatrix m;
  if (!path.empty()) {
    m = load_matrix(path);
  } else if (ws.encoder) {
    m = encode_messages(*ws.encoder, pairs, side, cfg.threads);
  } else {
    throw UsageError(side == TextSide::message
                         ? "need --encoder or --message-matrix to embed messages"
                         : "need --encoder or --reply-matrix to embed ground-truth replies");
  }
  if (m.rows() != pairs.size()) {
    throw DataError(path + ": " + std::to_string(m.rows()) + " rows for " +
                    std::to_string(pairs.size()) + " pairs");
  }
  if (m.dim() != ws.index.dim()) {
    throw DataError("vector dim " + std::to_string(m.dim()) + " does not match pool dim " +
                    std::to_string(ws.index.dim()));
  }
  return m;
}

// A strategy maps message i to a reply set.
using Strategy = std::function<ReplySet(std::size_t)>;

Strategy make_strategy(const std::string& name, const Workspace& ws, const RunConfig& cfg,
                       const EmbeddingMatrix& messages, const EmbeddingMatrix* replies,
                       const TopicAssignment* topics) {
  const auto& p = cfg.planner;
  if (name == "matching") {
    return [&, k = p.set_size](std::size_t i) {
      return matching_topk(ws.index, ws.pool, messages.row(i), k);
    };
  }
  if (name == "mmr") {
    return [&](std::size_t i) {
      return mmr_select(ws.index, ws.pool, messages.row(i), p.set_size, cfg.theta, p.n_candidates);
    };
  }
  if (name == "topic") {
    if (!topics) throw UsageError("topic strategy needs a topic assignment");
    return [&, topics](std::size_t i) {
      return topic_dedup_select(ws.index, ws.pool, messages.row(i), p.set_size, *topics,
                                p.n_candidates)
          .replies;
    };
  }
  if (name == "planner-online") {
    return [&](std::size_t i) {
      return plan_reply_set(messages.row(i), {}, ws.index, ws.pool, p, PlanMode::online).replies;
    };
  }
  if (name == "planner-offline") {
    if (!replies) throw UsageError("planner-offline needs ground-truth reply vectors");
    return [&, replies](std::size_t i) {
      return plan_reply_set(messages.row(i), replies->row(i), ws.index, ws.pool, p,
                            PlanMode::offline)
          .replies;
    };
  }
  throw UsageError("unknown strategy '" + name + "'");
}

// ---------------------------------------------------------------- commands

int cmd_ingest(const RunConfig& cfg, std::ostream& out) {
  require(cfg.corpus, "corpus");
  const auto pairs = load_dialogue_corpus(cfg.corpus, cfg.persona);
  const CandidatePool pool = build_candidate_pool(pairs);
  auto file = open_output(cfg.output);
  write_pool(file, pool, echo(cfg, {cfg.corpus}));
  out << "ingest: " << pairs.size() << " pairs -> " << pool.size() << " unique replies";
  if (!pool.flagged_replies().empty()) {
    out << " (" << pool.flagged_replies().size() << " without tokens)";
  }
  out << '\n';
  return kExitOk;
}

int cmd_encode(const RunConfig& cfg, std::ostream& out) {
  require(cfg.pool, "pool");
  require(cfg.corpus, "corpus");
  require(cfg.out_dir, "out-dir");
  const CandidatePool pool = load_pool(cfg.pool);
  const auto pairs = load_dialogue_corpus(cfg.corpus, cfg.persona);
  const HashedTfidfEncoder encoder = fit_encoder(pool, pairs, cfg.dim, cfg.planner.seed);

  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  const std::string header = echo(cfg, {cfg.pool, cfg.corpus, cfg.test_corpus});
  save_encoder(encoder, dir / "encoder.json", header);
  write_matrix_with_meta(encode_pool(encoder, pool, cfg.threads), dir / "pool.emb", header);
  write_matrix_with_meta(encode_messages(encoder, pairs, TextSide::message, cfg.threads),
                         dir / "corpus_messages.emb", header);
  write_matrix_with_meta(encode_messages(encoder, pairs, TextSide::reply, cfg.threads),
                         dir / "corpus_replies.emb", header);
  if (!cfg.test_corpus.empty()) {
    const auto tests = load_dialogue_corpus(cfg.test_corpus, cfg.persona);
    write_matrix_with_meta(encode_messages(encoder, tests, TextSide::message, cfg.threads),
                           dir / "test_messages.emb", header);
    write_matrix_with_meta(encode_messages(encoder, tests, TextSide::reply, cfg.threads),
                           dir / "test_replies.emb", header);
  }
  out << "encode: dim " << encoder.dim() << ", vocabulary " << encoder.idf_table().size()
      << ", pool " << pool.size() << " rows -> " << dir.string() << '\n';
  return kExitOk;
}

int cmd_bootstrap(const RunConfig& cfg, std::ostream& out) {
  require(cfg.corpus, "corpus");
  const Workspace ws = open_workspace(cfg);
  const auto pairs = load_dialogue_corpus(cfg.corpus, cfg.persona);
  const PlanMode mode = parse_mode(cfg.mode);
  const EmbeddingMatrix messages = side_vectors(ws, cfg, pairs, TextSide::message);
  const EmbeddingMatrix replies = mode == PlanMode::offline
                                      ? side_vectors(ws, cfg, pairs, TextSide::reply)
                                      : EmbeddingMatrix{};
  auto file = open_output(cfg.output);
  file << "{\"header\":"
       << echo(cfg, {cfg.corpus, cfg.pool, cfg.pool_matrix, cfg.encoder, cfg.message_matrix,
                     cfg.reply_matrix})
       << "}\n";
  std::size_t written = 0;
  bootstrap_dataset(pairs, messages, replies, ws.index, ws.pool, cfg.planner, mode, cfg.threads,
                    [&](const BootstrapRecord& r) {
                      file << bootstrap_record_json(r) << '\n';
                      ++written;
                    });
  out << "bootstrap: " << written << " records (" << cfg.mode << ", N=" << cfg.planner.n_candidates
      << " M=" << cfg.planner.n_simulations << " K=" << cfg.planner.set_size
      << " alpha=" << cfg.planner.alpha << " lambda=" << cfg.planner.lambda << ") -> "
      << cfg.output << '\n';
  return kExitOk;
}

int cmd_predict(const RunConfig& cfg, std::ostream& out) {
  require(cfg.test_corpus, "test-corpus");
  const Workspace ws = open_workspace(cfg);
  const auto tests = load_dialogue_corpus(cfg.test_corpus, cfg.persona);
  const EmbeddingMatrix messages = side_vectors(ws, cfg, tests, TextSide::message);
  std::optional<EmbeddingMatrix> replies;
  if (cfg.strategy == "planner-offline") replies = side_vectors(ws, cfg, tests, TextSide::reply);
  std::optional<TopicAssignment> topics;
  if (cfg.strategy == "topic") {
    topics = assign_topics(ws.index.matrix(), std::min(cfg.n_topics, ws.pool.size()),
                           cfg.planner.seed, cfg.threads);
  }
  const Strategy select = make_strategy(cfg.strategy, ws, cfg, messages,
                                        replies ? &*replies : nullptr, topics ? &*topics : nullptr);
  std::vector<ReplySet> sets(tests.size());
  parallel_for(tests.size(), cfg.threads, [&](std::size_t i) { sets[i] = select(i); });

  auto file = open_output(cfg.output);
  file << "{\"header\":"
       << echo(cfg, {cfg.test_corpus, cfg.pool, cfg.pool_matrix, cfg.encoder, cfg.message_matrix,
                     cfg.reply_matrix})
       << "}\n";
  for (std::size_t i = 0; i < tests.size(); ++i) {
    file << prediction_json({tests[i].message_id, sets[i].texts}) << '\n';
  }
  out << "predict: " << tests.size() << " messages, strategy " << cfg.strategy << " -> "
      << cfg.output << '\n';
  return kExitOk;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
  require(cfg.predictions, "predictions");
  require(cfg.test_corpus, "test-corpus");
  const auto predictions = load_predictions(cfg.predictions);
  const auto tests = load_dialogue_corpus(cfg.test_corpus, cfg.persona);
  const EvalReport report = evaluate(predictions, tests, cfg.threads);
  if (!cfg.output.empty()) {
    auto file = open_output(cfg.output);
    file << report_json(report, echo(cfg, {cfg.predictions, cfg.test_corpus})) << '\n';
  }
  print_report_table(out, report, fs::path(cfg.predictions).filename().string());
  return kExitOk;
}

double percentile(std::vector<double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

int cmd_bench(const RunConfig& cfg, std::ostream& out) {
  require(cfg.test_corpus, "test-corpus");
  using Clock = std::chrono::steady_clock;
  const Workspace ws = open_workspace(cfg);
  auto tests = load_dialogue_corpus(cfg.test_corpus, cfg.persona);
  if (cfg.bench_messages > 0 && tests.size() > cfg.bench_messages) tests.resize(cfg.bench_messages);
  if (tests.empty()) throw DataError("no messages to benchmark");
  const EmbeddingMatrix messages = side_vectors(ws, cfg, tests, TextSide::message);
  std::optional<EmbeddingMatrix> replies;
  if (!cfg.reply_matrix.empty() || ws.encoder) {
    replies = side_vectors(ws, cfg, tests, TextSide::reply);
  }

  const auto topic_start = Clock::now();
  const TopicAssignment topics = assign_topics(
      ws.index.matrix(), std::min(cfg.n_topics, ws.pool.size()), cfg.planner.seed, cfg.threads);
  const double topic_seconds = std::chrono::duration<double>(Clock::now() - topic_start).count();

  std::vector<std::string> names = {"matching", "mmr", "topic", "planner-online"};
  if (replies) names.push_back("planner-offline");

  char line[160];
  std::snprintf(line, sizeof line, "%-16s %8s %6s %10s %10s %10s %12s\n", "strategy", "messages",
                "batch", "mean_ms", "p50_ms", "p99_ms", "messages/s");
  out << line;
  json rows = json::array();
  for (const auto& name : names) {
    const Strategy select = make_strategy(name, ws, cfg, messages, replies ? &*replies : nullptr,
                                          &topics);
    std::vector<double> latency(tests.size());
    const auto start = Clock::now();
    for (std::size_t begin = 0; begin < tests.size(); begin += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, tests.size() - begin);
      parallel_for(count, cfg.threads, [&](std::size_t j) {
        const auto t0 = Clock::now();
        const ReplySet set = select(begin + j);
        latency[begin + j] = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        if (set.reply_ids.empty()) throw DataError("empty reply set");
      });
    }
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    double mean = 0.0;
    for (const double v : latency) mean += v;
    mean /= static_cast<double>(latency.size());
    const double rate = static_cast<double>(tests.size()) / seconds;
    const double p50 = percentile(latency, 0.50);
    const double p99 = percentile(latency, 0.99);
    std::snprintf(line, sizeof line, "%-16s %8zu %6zu %10.3f %10.3f %10.3f %12.1f\n", name.c_str(),
                  tests.size(), cfg.batch_size, mean, p50, p99, rate);
    out << line;
    rows.push_back({{"strategy", name},
                    {"messages", tests.size()},
                    {"batch_size", cfg.batch_size},
                    {"mean_ms", mean},
                    {"p50_ms", p50},
                    {"p99_ms", p99},
                    {"messages_per_s", rate}});
  }
  std::snprintf(line, sizeof line, "(topic assignment precomputed in %.2f s, %zu threads)\n",
                topic_seconds, cfg.threads);
  out << line;
  if (!cfg.output.empty()) {
    auto file = open_output(cfg.output);
    file << json{{"config", json::parse(echo(cfg, {cfg.test_corpus, cfg.pool, cfg.pool_matrix}))},
                 {"results", rows}}
                .dump(2)
         << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------- parsing

std::optional<std::string> find_config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

void add_planner_flags(CLI::App* cmd, RunConfig& cfg) {
  auto& p = cfg.planner;
  cmd->add_option("--n", p.n_candidates, "Shortlist size N")->capture_default_str();
  cmd->add_option("--m", p.n_simulations, "Number of simulated replies M")->capture_default_str();
  cmd->add_option("--k", p.set_size, "Reply set size K")->capture_default_str();
  cmd->add_option("--alpha", p.alpha, "Query augmentation weight on the message")
      ->capture_default_str();
  cmd->add_option("--lambda", p.lambda, "Redundancy penalty")->capture_default_str();
  cmd->add_option("--beta", p.beta, "LM-bias weight in shortlist scores")->capture_default_str();
}

void add_workspace_flags(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--pool", cfg.pool, "Pool file from `ingest`")->capture_default_str();
  cmd->add_option("--pool-matrix", cfg.pool_matrix, "Reply vectors (EMB1) aligned with the pool")
      ->capture_default_str();
  cmd->add_option("--encoder", cfg.encoder, "Encoder file from `encode`")->capture_default_str();
  cmd->add_option("--message-matrix", cfg.message_matrix, "Precomputed message vectors")
      ->capture_default_str();
  cmd->add_option("--reply-matrix", cfg.reply_matrix, "Precomputed ground-truth reply vectors")
      ->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto fail = [&](const char* kind, const std::string& message, int code) {
    err << json{{"error", kind}, {"message", message}}.dump() << '\n';
    return code;
  };

  RunConfig cfg;
  try {
    if (const auto path = find_config_path(args)) cfg = load_config(*path);
  } catch (const UsageError& e) {
    return fail("usage", e.what(), kExitUsage);
  }

  CLI::App app{"Reply-set bootstrapping, baselines and evaluation", "replyset"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  std::string config_path;
  app.add_option("--config", config_path, "Config file of `key = value` lines (flags override)");
  app.add_option("--threads", cfg.threads, "Worker threads (never changes output bytes)")
      ->capture_default_str();
  app.add_option("--seed", cfg.planner.seed, "Seed for encoder hashing and k-means")
      ->capture_default_str();
  app.add_flag("--persona", cfg.persona, "Prepend persona sentences to the message");
  app.fallthrough();

  auto* ingest = app.add_subcommand("ingest", "Build the deduplicated candidate pool");
  ingest->add_option("--corpus", cfg.corpus, "Training corpus (JSON-lines)")->capture_default_str();
  ingest->add_option("--output,-o", cfg.output, "Pool file to write")->capture_default_str();

  auto* encode = app.add_subcommand("encode", "Fit the hashed TF-IDF encoder and embed texts");
  encode->add_option("--pool", cfg.pool, "Pool file from `ingest`")->capture_default_str();
  encode->add_option("--corpus", cfg.corpus, "Training corpus")->capture_default_str();
  encode->add_option("--test-corpus", cfg.test_corpus, "Also embed this corpus")
      ->capture_default_str();
  encode->add_option("--dim", cfg.dim, "Embedding dimension (power of two >= 64)")
      ->capture_default_str();
  encode->add_option("--out-dir", cfg.out_dir, "Directory for encoder.json and *.emb")
      ->capture_default_str();

  auto* bootstrap = app.add_subcommand("bootstrap", "Plan a reply set for every corpus pair");
  bootstrap->add_option("--corpus", cfg.corpus, "Corpus to bootstrap")->capture_default_str();
  add_workspace_flags(bootstrap, cfg);
  add_planner_flags(bootstrap, cfg);
  bootstrap->add_option("--mode", cfg.mode, "offline (query augmentation) or online")
      ->capture_default_str();
  bootstrap->add_option("--output,-o", cfg.output, "Bootstrap file to write")->capture_default_str();

  auto* predict = app.add_subcommand("predict", "Suggest reply sets for test messages");
  predict->add_option("--strategy", cfg.strategy,
                      "matching | mmr | topic | planner-online | planner-offline")
      ->capture_default_str();
  predict->add_option("--test-corpus", cfg.test_corpus, "Messages to answer")->capture_default_str();
  add_workspace_flags(predict, cfg);
  add_planner_flags(predict, cfg);
  predict->add_option("--theta", cfg.theta, "MMR relevance weight")->capture_default_str();
  predict->add_option("--n-topics", cfg.n_topics, "k-means topics for the topic baseline")
      ->capture_default_str();
  predict->add_option("--output,-o", cfg.output, "Predictions file to write")->capture_default_str();

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions with ROUGE/Self-ROUGE");
  evaluate_cmd->add_option("--predictions", cfg.predictions, "Predictions or bootstrap file")
      ->capture_default_str();
  evaluate_cmd->add_option("--test-corpus", cfg.test_corpus, "Corpus with ground-truth replies")
      ->capture_default_str();
  evaluate_cmd->add_option("--output,-o", cfg.output, "Report JSON to write")
      ->capture_default_str();

  auto* bench = app.add_subcommand("bench", "Per-message latency and throughput per strategy");
  bench->add_option("--test-corpus", cfg.test_corpus, "Messages to time")->capture_default_str();
  add_workspace_flags(bench, cfg);
  add_planner_flags(bench, cfg);
  bench->add_option("--theta", cfg.theta, "MMR relevance weight")->capture_default_str();
  bench->add_option("--n-topics", cfg.n_topics, "k-means topics")->capture_default_str();
  bench->add_option("--batch-size", cfg.batch_size, "Messages per batch")->capture_default_str();
  bench->add_option("--bench-messages", cfg.bench_messages, "Messages to time (0 = all)")
      ->capture_default_str();
  bench->add_option("--output,-o", cfg.output, "Optional JSON results file")
      ->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    return fail("usage", e.what(), kExitUsage);
  }

  try {
    cfg.validate();
    if (ingest->parsed()) return cmd_ingest(cfg, out);
    if (encode->parsed()) return cmd_encode(cfg, out);
    if (bootstrap->parsed()) return cmd_bootstrap(cfg, out);
    if (predict->parsed()) return cmd_predict(cfg, out);
    if (evaluate_cmd->parsed()) return cmd_evaluate(cfg, out);
    if (bench->parsed()) return cmd_bench(cfg, out);
  } catch (const UsageError& e) {
    return fail("usage", e.what(), kExitUsage);
  } catch (const DataError& e) {
    return fail("data", e.what(), kExitData);
  } catch (const std::exception& e) {
    return fail("data", e.what(), kExitData);
  }
  return fail("usage", "no subcommand", kExitUsage);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace replyset::cli
