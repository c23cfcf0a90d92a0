#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "replyset/corpus.hpp"
#include "replyset/index.hpp"
#include "replyset/planner.hpp"

namespace replyset {

struct TopicAssignment {
  std::vector<std::uint32_t> topic_of;  // indexed by reply id
  std::size_t n_topics = 0;
};

/// Top-K by biased score; gains are the biased scores.
ReplySet matching_topk(const RetrievalIndex& index, const CandidatePool& pool,
                       std::span<const float> query, std::size_t k);

/// Maximal marginal relevance over the top-`shortlist` biased hits:
///   theta * score(x, y_n) - (1 - theta) * max_{s in Y} cos(y_n, y_s)
/// Ties go to the smaller reply id.
ReplySet mmr_select(const RetrievalIndex& index, const CandidatePool& pool,
                    std::span<const float> query, std::size_t k, double theta,
                    std::size_t shortlist = 100);

/// Seeded k-means (25 Lloyd iterations) over unit-normalized reply vectors.
/// Empty clusters are re-seeded from the point farthest from its centroid.
/// Throws UsageError when n_topics < 2 or exceeds the row count.
TopicAssignment assign_topics(const EmbeddingMatrix& replies, std::size_t n_topics,
                              std::uint64_t seed, std::size_t threads = 1);

struct TopicSelection {
  ReplySet replies;
  bool used_fallback = false;
};

/// Walks the biased ranking skipping replies whose topic is already taken;
/// if the shortlist runs out, tops up with the best skipped replies.
TopicSelection topic_dedup_select(const RetrievalIndex& index, const CandidatePool& pool,
                                  std::span<const float> query, std::size_t k,
                                  const TopicAssignment& topics, std::size_t shortlist = 100);

/// One line of a predictions file.
struct Prediction {
  std::uint64_t message_id = 0;
  std::vector<std::string> replies;
};

/// {"message_id": uint, "replies": [string...]}
std::string prediction_json(const Prediction& prediction);

/// Reads a predictions file. Lines carrying a "header" key are skipped, and
/// extra keys (bootstrap files) are ignored.
std::vector<Prediction> read_predictions(std::istream& in);
std::vector<Prediction> load_predictions(const std::filesystem::path& path);

}  // namespace replyset
