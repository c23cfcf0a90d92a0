#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "replyset/corpus.hpp"
#include "replyset/index.hpp"
#include "replyset/matrix.hpp"
#include "replyset/text.hpp"

namespace replyset {

struct PlannerConfig {
  std::size_t n_candidates = 100;   // shortlist size N
  std::size_t n_simulations = 100;  // simulated replies M
  std::size_t set_size = 3;         // K
  double alpha = 0.75;              // query augmentation weight on the message
  double lambda = 0.05;             // redundancy penalty
  double beta = 0.1;                // LM-bias weight for the shortlist
  std::uint64_t seed = 0;

  /// Throws UsageError when K > N, K == 0, M == 0, alpha is outside [0, 1],
  /// or lambda/beta is negative or not finite.
  void validate() const;

  friend bool operator==(const PlannerConfig&, const PlannerConfig&) = default;
};

/// Proxy for the human reply distribution: softmax over the top-M raw scores.
struct SimulatedUser {
  std::vector<ReplyId> reply_ids;
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }
  /// Shannon entropy in nats.
  double entropy() const;
};

/// Ordered reply set; order is the selection order.
struct ReplySet {
  std::vector<ReplyId> reply_ids;
  std::vector<std::string> texts;
  std::vector<double> marginal_gains;  // winning objective value at each step
};

struct BootstrapRecord {
  std::uint64_t message_id = 0;
  std::string message;
  ReplySet replies;
  std::vector<std::uint32_t> ranks;  // 1-based positions in the shortlist
  double q_entropy = 0.0;
};

enum class PlanMode { offline, online };

/// Throws DataError on an empty list or a non-finite score.
SimulatedUser simulate_user(std::span<const double> raw_scores, std::span<const ReplyId> ids);

/// max_k F1(Y_k, y); 0 for an empty set.
double set_similarity(std::span<const TokenList> set, const TokenList& reply);
double set_similarity(std::span<const TokenBag> set, std::span<const TokenId> reply);

/// sum_m f(Y, y_m) q_m over the simulated replies.
double expected_similarity(std::span<const TokenList> set, std::span<const TokenList> simulated,
                           std::span<const double> probs);
double expected_similarity(std::span<const TokenBag> set, std::span<const TokenBag> simulated,
                           std::span<const double> probs);

/// Inputs of one greedy set construction. Bags are sorted token ids.
struct SelectionProblem {
  std::vector<ReplyId> candidate_ids;
  std::vector<std::span<const TokenId>> candidate_bags;
  std::vector<std::span<const TokenId>> simulated_bags;
  std::vector<double> probs;
};

struct Selection {
  std::vector<std::size_t> positions;  // indices into candidate_ids, in pick order
  std::vector<double> gains;
};

/// Picks k candidates one at a time, each maximizing
///   sum_m f(Y_G + {n}, y_m) q_m - lambda * f(Y_G, y_n)
/// over the unselected candidates; ties go to the smaller reply id. Pairwise
/// candidate/simulation F1 values are computed once and the per-simulation
/// running maxima are carried between steps. Throws UsageError when there
/// are fewer than k candidates.
Selection greedy_select(const SelectionProblem& problem, std::size_t k, double lambda);

/// Pool-level wrapper: shortlist hits become candidates, the simulated user
/// supplies the expectation.
ReplySet greedy_select(std::span<const ScoredHit> shortlist, const SimulatedUser& user,
                       const CandidatePool& pool, std::size_t k, double lambda);

struct PlanResult {
  ReplySet replies;
  std::vector<std::uint32_t> ranks;
  double q_entropy = 0.0;
};

/// One run of the offline planning algorithm for a message. Offline mode
/// queries with alpha * message + (1 - alpha) * reply; online mode uses the
/// message vector alone and ignores `reply_vec`.
PlanResult plan_reply_set(std::span<const float> message_vec, std::span<const float> reply_vec,
                          const RetrievalIndex& index, const CandidatePool& pool,
                          const PlannerConfig& cfg, PlanMode mode);

/// Plans every pair, calling `sink` once per record in input order. Work is
/// spread over `threads` workers in chunks; output never depends on the
/// thread count. A failure is rethrown as DataError naming the message id.
void bootstrap_dataset(std::span<const DialoguePair> pairs, const EmbeddingMatrix& messages,
                       const EmbeddingMatrix& replies, const RetrievalIndex& index,
                       const CandidatePool& pool, const PlannerConfig& cfg, PlanMode mode,
                       std::size_t threads,
                       const std::function<void(const BootstrapRecord&)>& sink);

std::vector<BootstrapRecord> bootstrap_dataset(std::span<const DialoguePair> pairs,
                                               const EmbeddingMatrix& messages,
                                               const EmbeddingMatrix& replies,
                                               const RetrievalIndex& index,
                                               const CandidatePool& pool,
                                               const PlannerConfig& cfg, PlanMode mode,
                                               std::size_t threads = 1);

/// {"message_id", "message", "reply_ids", "replies", "gains", "ranks"}
std::string bootstrap_record_json(const BootstrapRecord& record);

}  // namespace replyset
