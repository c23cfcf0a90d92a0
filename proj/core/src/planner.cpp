#include "replyset/planner.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "jsonl.hpp"
#include "replyset/encoder.hpp"
#include "replyset/error.hpp"
#include "replyset/parallel.hpp"

namespace replyset {

void PlannerConfig::validate() const {
  if (set_size == 0) throw UsageError("set size K must be >= 1");
  if (n_simulations == 0) throw UsageError("number of simulations M must be >= 1");
  if (set_size > n_candidates) {
    throw UsageError("set size K (" + std::to_string(set_size) +
                     ") cannot exceed the shortlist size N (" + std::to_string(n_candidates) + ")");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("alpha must lie in [0, 1]");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw UsageError("lambda must be finite and >= 0");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw UsageError("beta must be finite and >= 0");
}

double SimulatedUser::entropy() const {
  double h = 0.0;
  for (const double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

SimulatedUser simulate_user(std::span<const double> raw_scores, std::span<const ReplyId> ids) {
  if (raw_scores.empty()) throw DataError("simulate_user needs at least one score");
  if (raw_scores.size() != ids.size()) throw DataError("simulate_user: scores/ids length differ");
  double peak = raw_scores[0];
  for (const double s : raw_scores) {
    if (!std::isfinite(s)) throw DataError("simulate_user: non-finite score");
    peak = std::max(peak, s);
  }
  SimulatedUser user;
  user.reply_ids.assign(ids.begin(), ids.end());
  user.probs.resize(raw_scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < raw_scores.size(); ++i) {
    user.probs[i] = std::exp(raw_scores[i] - peak);
    total += user.probs[i];
  }
  for (double& p : user.probs) p /= total;
  return user;
}

double set_similarity(std::span<const TokenBag> set, std::span<const TokenId> reply) {
  double best = 0.0;
  for (const auto& member : set) best = std::max(best, bag_f1(member, reply));
  return best;
}

double set_similarity(std::span<const TokenList> set, const TokenList& reply) {
  double best = 0.0;
  for (const auto& member : set) best = std::max(best, term_f1(member, reply));
  return best;
}

double expected_similarity(std::span<const TokenBag> set, std::span<const TokenBag> simulated,
                           std::span<const double> probs) {
  if (simulated.size() != probs.size()) throw UsageError("simulated replies and probs differ");
  double total = 0.0;
  for (std::size_t m = 0; m < simulated.size(); ++m) {
    total += set_similarity(set, simulated[m]) * probs[m];
  }
  return total;
}

double expected_similarity(std::span<const TokenList> set, std::span<const TokenList> simulated,
                           std::span<const double> probs) {
  TokenInterner interner;
  std::vector<TokenBag> set_bags;
  std::vector<TokenBag> sim_bags;
  for (const auto& s : set) set_bags.push_back(interner.bag(s));
  for (const auto& s : simulated) sim_bags.push_back(interner.bag(s));
  return expected_similarity(set_bags, sim_bags, probs);
}

Selection greedy_select(const SelectionProblem& problem, std::size_t k, double lambda) {
  const std::size_t n_cand = problem.candidate_ids.size();
  const std::size_t n_sim = problem.simulated_bags.size();
  if (problem.candidate_bags.size() != n_cand) throw UsageError("candidate ids/bags differ");
  if (problem.probs.size() != n_sim) throw UsageError("simulated bags/probs differ");
  if (n_cand < k) {
    throw UsageError("shortlist has " + std::to_string(n_cand) + " candidates, fewer than K=" +
                     std::to_string(k));
  }

  // f1[n * n_sim + m] = F1(candidate n, simulated m)
  std::vector<double> f1(n_cand * n_sim);
  for (std::size_t n = 0; n < n_cand; ++n) {
    for (std::size_t m = 0; m < n_sim; ++m) {
      f1[n * n_sim + m] = bag_f1(problem.candidate_bags[n], problem.simulated_bags[m]);
    }
  }
  std::vector<double> covered(n_sim, 0.0);  // f(Y_G, y_m)
  std::vector<double> penalty(n_cand, 0.0);  // f(Y_G, y_n)
  std::vector<bool> taken(n_cand, false);

  Selection out;
  for (std::size_t step = 0; step < k; ++step) {
    std::optional<std::size_t> winner;
    double winning = 0.0;
    for (std::size_t n = 0; n < n_cand; ++n) {
      if (taken[n]) continue;
      const double* row = f1.data() + n * n_sim;
      double expected = 0.0;
      for (std::size_t m = 0; m < n_sim; ++m) {
        expected += std::max(covered[m], row[m]) * problem.probs[m];
      }
      const double objective = expected - lambda * penalty[n];
      if (!winner || objective > winning ||
          (objective == winning && problem.candidate_ids[n] < problem.candidate_ids[*winner])) {
        winner = n;
        winning = objective;
      }
    }
    const std::size_t w = *winner;
    taken[w] = true;
    out.positions.push_back(w);
    out.gains.push_back(winning);
    const double* row = f1.data() + w * n_sim;
    for (std::size_t m = 0; m < n_sim; ++m) covered[m] = std::max(covered[m], row[m]);
    if (step + 1 < k) {
      for (std::size_t n = 0; n < n_cand; ++n) {
        if (!taken[n]) {
          penalty[n] = std::max(penalty[n],
                                bag_f1(problem.candidate_bags[w], problem.candidate_bags[n]));
        }
      }
    }
  }
  return out;
}

ReplySet greedy_select(std::span<const ScoredHit> shortlist, const SimulatedUser& user,
                       const CandidatePool& pool, std::size_t k, double lambda) {
  SelectionProblem problem;
  problem.candidate_ids.reserve(shortlist.size());
  problem.candidate_bags.reserve(shortlist.size());
  for (const auto& hit : shortlist) {
    problem.candidate_ids.push_back(hit.reply_id);
    problem.candidate_bags.push_back(pool.bag(hit.reply_id));
  }
  problem.simulated_bags.reserve(user.size());
  for (const ReplyId id : user.reply_ids) problem.simulated_bags.push_back(pool.bag(id));
  problem.probs = user.probs;

  const Selection picked = greedy_select(problem, k, lambda);
  ReplySet set;
  for (std::size_t i = 0; i < picked.positions.size(); ++i) {
    const ReplyId id = problem.candidate_ids[picked.positions[i]];
    set.reply_ids.push_back(id);
    set.texts.push_back(pool.text(id));
    set.marginal_gains.push_back(picked.gains[i]);
  }
  return set;
}

PlanResult plan_reply_set(std::span<const float> message_vec, std::span<const float> reply_vec,
                          const RetrievalIndex& index, const CandidatePool& pool,
                          const PlannerConfig& cfg, PlanMode mode) {
  cfg.validate();
  if (index.size() != pool.size()) throw DataError("index and pool sizes differ");
  if (pool.size() < cfg.set_size) {
    throw DataError("pool has " + std::to_string(pool.size()) + " replies, fewer than K=" +
                    std::to_string(cfg.set_size));
  }
  std::vector<float> query;
  std::span<const float> q = message_vec;
  if (mode == PlanMode::offline) {
    query = augment_query(message_vec, reply_vec, cfg.alpha);
    q = query;
  }
  std::vector<double> raw(index.size());
  index.score_all(q, raw);
  const auto shortlist = select_top(index, raw, cfg.n_candidates, true);
  const auto simulated = select_top(index, raw, cfg.n_simulations, false);

  std::vector<double> sim_scores;
  std::vector<ReplyId> sim_ids;
  for (const auto& hit : simulated) {
    sim_scores.push_back(hit.raw_dot);
    sim_ids.push_back(hit.reply_id);
  }
  const SimulatedUser user = simulate_user(sim_scores, sim_ids);

  PlanResult result;
  result.replies = greedy_select(shortlist, user, pool, cfg.set_size, cfg.lambda);
  result.q_entropy = user.entropy();
  for (const ReplyId id : result.replies.reply_ids) {
    const auto it = std::find_if(shortlist.begin(), shortlist.end(),
                                 [&](const ScoredHit& h) { return h.reply_id == id; });
    result.ranks.push_back(static_cast<std::uint32_t>(it - shortlist.begin()) + 1);
  }
  return result;
}

void bootstrap_dataset(std::span<const DialoguePair> pairs, const EmbeddingMatrix& messages,
                       const EmbeddingMatrix& replies, const RetrievalIndex& index,
                       const CandidatePool& pool, const PlannerConfig& cfg, PlanMode mode,
                       std::size_t threads,
                       const std::function<void(const BootstrapRecord&)>& sink) {
  cfg.validate();
  if (messages.rows() != pairs.size()) {
    throw DataError("message matrix has " + std::to_string(messages.rows()) + " rows for " +
                    std::to_string(pairs.size()) + " pairs");
  }
  if (mode == PlanMode::offline && replies.rows() != pairs.size()) {
    throw DataError("reply matrix has " + std::to_string(replies.rows()) + " rows for " +
                    std::to_string(pairs.size()) + " pairs");
  }
  threads = std::max<std::size_t>(threads, 1);
  const std::size_t chunk = 64 * threads;
  std::vector<BootstrapRecord> batch;
  for (std::size_t begin = 0; begin < pairs.size(); begin += chunk) {
    const std::size_t count = std::min(chunk, pairs.size() - begin);
    batch.assign(count, BootstrapRecord{});
    parallel_for(count, threads, [&](std::size_t j) {
      const std::size_t i = begin + j;
      const auto& pair = pairs[i];
      try {
        const auto reply_vec =
            mode == PlanMode::offline ? replies.row(i) : std::span<const float>{};
        PlanResult plan = plan_reply_set(messages.row(i), reply_vec, index, pool, cfg, mode);
        BootstrapRecord& rec = batch[j];
        rec.message_id = pair.message_id;
        rec.message = pair.context;
        rec.replies = std::move(plan.replies);
        rec.ranks = std::move(plan.ranks);
        rec.q_entropy = plan.q_entropy;
      } catch (const std::exception& e) {
        throw DataError("message_id " + std::to_string(pair.message_id) + ": " + e.what());
      }
    });
    for (const auto& rec : batch) sink(rec);
  }
}

std::vector<BootstrapRecord> bootstrap_dataset(std::span<const DialoguePair> pairs,
                                               const EmbeddingMatrix& messages,
                                               const EmbeddingMatrix& replies,
                                               const RetrievalIndex& index,
                                               const CandidatePool& pool,
                                               const PlannerConfig& cfg, PlanMode mode,
                                               std::size_t threads) {
  std::vector<BootstrapRecord> out;
  out.reserve(pairs.size());
  bootstrap_dataset(pairs, messages, replies, index, pool, cfg, mode, threads,
                    [&](const BootstrapRecord& r) { out.push_back(r); });
  return out;
}

std::string bootstrap_record_json(const BootstrapRecord& record) {
  jsonl::json line = {{"message_id", record.message_id},
                      {"message", record.message},
                      {"reply_ids", record.replies.reply_ids},
                      {"replies", record.replies.texts},
                      {"gains", record.replies.marginal_gains},
                      {"ranks", record.ranks}};
  return line.dump();
}

}  // namespace replyset
