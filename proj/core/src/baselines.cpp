#include "replyset/baselines.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <random>

#include "jsonl.hpp"
#include "replyset/error.hpp"
#include "replyset/parallel.hpp"

namespace replyset {

namespace {

constexpr int kKMeansIterations = 25;

void require_pool(const RetrievalIndex& index, const CandidatePool& pool, std::size_t k) {
  if (k == 0) throw UsageError("K must be >= 1");
  if (index.size() != pool.size()) throw DataError("index and pool sizes differ");
  if (pool.size() < k) {
    throw DataError("pool has " + std::to_string(pool.size()) + " replies, fewer than K=" +
                    std::to_string(k));
  }
}

void push(ReplySet& set, const CandidatePool& pool, ReplyId id, double gain) {
  set.reply_ids.push_back(id);
  set.texts.push_back(pool.text(id));
  set.marginal_gains.push_back(gain);
}

double squared_distance(std::span<const float> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = static_cast<double>(a[i]) - b[i];
    d += diff * diff;
  }
  return d;
}

}  // namespace

ReplySet matching_topk(const RetrievalIndex& index, const CandidatePool& pool,
                       std::span<const float> query, std::size_t k) {
  require_pool(index, pool, k);
  ReplySet set;
  for (const auto& hit : top_n(index, query, k, true)) push(set, pool, hit.reply_id, hit.score);
  return set;
}

ReplySet mmr_select(const RetrievalIndex& index, const CandidatePool& pool,
                    std::span<const float> query, std::size_t k, double theta,
                    std::size_t shortlist) {
  require_pool(index, pool, k);
  if (!(theta >= 0.0 && theta <= 1.0)) throw UsageError("theta must lie in [0, 1]");
  const auto hits = top_n(index, query, std::max(shortlist, k), true);
  const auto& vectors = index.matrix();

  std::vector<double> norms(hits.size());
  for (std::size_t i = 0; i < hits.size(); ++i) norms[i] = l2_norm(vectors.row(hits[i].reply_id));
  auto cosine = [&](std::size_t a, std::size_t b) {
    if (norms[a] == 0.0 || norms[b] == 0.0) return 0.0;
    return dot(vectors.row(hits[a].reply_id), vectors.row(hits[b].reply_id)) / (norms[a] * norms[b]);
  };

  std::vector<std::optional<double>> redundancy(hits.size());  // max cosine to the selection
  std::vector<bool> taken(hits.size(), false);
  ReplySet set;
  for (std::size_t step = 0; step < k; ++step) {
    std::optional<std::size_t> winner;
    double winning = 0.0;
    for (std::size_t n = 0; n < hits.size(); ++n) {
      if (taken[n]) continue;
      const double score = theta * hits[n].score - (1.0 - theta) * redundancy[n].value_or(0.0);
      if (!winner || score > winning ||
          (score == winning && hits[n].reply_id < hits[*winner].reply_id)) {
        winner = n;
        winning = score;
      }
    }
    taken[*winner] = true;
    push(set, pool, hits[*winner].reply_id, winning);
    for (std::size_t n = 0; n < hits.size(); ++n) {
      if (taken[n]) continue;
      const double c = cosine(*winner, n);
      redundancy[n] = redundancy[n] ? std::max(*redundancy[n], c) : c;
    }
  }
  return set;
}

TopicAssignment assign_topics(const EmbeddingMatrix& replies, std::size_t n_topics,
                              std::uint64_t seed, std::size_t threads) {
  const std::size_t rows = replies.rows();
  const std::size_t dim = replies.dim();
  if (n_topics < 2) throw UsageError("n_topics must be >= 2");
  if (n_topics > rows) {
    throw UsageError("n_topics (" + std::to_string(n_topics) + ") exceeds the pool size (" +
                     std::to_string(rows) + ")");
  }
  TopicAssignment out;
  out.n_topics = n_topics;
  out.topic_of.resize(rows);
  if (n_topics == rows) {
    for (std::size_t i = 0; i < rows; ++i) out.topic_of[i] = static_cast<std::uint32_t>(i);
    return out;
  }

  EmbeddingMatrix unit(rows, dim);
  for (std::size_t i = 0; i < rows; ++i) {
    const double norm = l2_norm(replies.row(i));
    const auto src = replies.row(i);
    auto dst = unit.row(i);
    for (std::size_t d = 0; d < dim; ++d) {
      dst[d] = norm > 0.0 ? static_cast<float>(src[d] / norm) : 0.0f;
    }
  }

  // Seeded partial Fisher-Yates picks the initial centroids.
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(rows);
  for (std::size_t i = 0; i < rows; ++i) order[i] = i;
  for (std::size_t i = 0; i < n_topics; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (rows - i));
    std::swap(order[i], order[j]);
  }
  std::vector<double> centroids(n_topics * dim);
  for (std::size_t c = 0; c < n_topics; ++c) {
    const auto src = unit.row(order[c]);
    std::copy(src.begin(), src.end(), centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
  }

  std::vector<double> distance(rows);
  auto assign = [&] {
    parallel_for(rows, threads, [&](std::size_t i) {
      std::uint32_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < n_topics; ++c) {
        const double d = squared_distance(unit.row(i), {centroids.data() + c * dim, dim});
        if (d < best_d) {
          best_d = d;
          best = static_cast<std::uint32_t>(c);
        }
      }
      out.topic_of[i] = best;
      distance[i] = best_d;
    });
  };

  std::vector<std::size_t> members(n_topics);
  std::vector<bool> reseeded(rows);
  for (int iter = 0; iter < kKMeansIterations; ++iter) {
    assign();
    std::fill(centroids.begin(), centroids.end(), 0.0);
    std::fill(members.begin(), members.end(), 0);
    for (std::size_t i = 0; i < rows; ++i) {
      const std::size_t c = out.topic_of[i];
      ++members[c];
      const auto src = unit.row(i);
      for (std::size_t d = 0; d < dim; ++d) centroids[c * dim + d] += src[d];
    }
    std::fill(reseeded.begin(), reseeded.end(), false);
    for (std::size_t c = 0; c < n_topics; ++c) {
      double* centroid = centroids.data() + c * dim;
      if (members[c] > 0) {
        for (std::size_t d = 0; d < dim; ++d) centroid[d] /= static_cast<double>(members[c]);
        continue;
      }
      std::size_t far = rows;
      for (std::size_t i = 0; i < rows; ++i) {
        if (!reseeded[i] && (far == rows || distance[i] > distance[far])) far = i;
      }
      reseeded[far] = true;
      const auto src = unit.row(far);
      std::copy(src.begin(), src.end(), centroid);
    }
  }
  assign();
  return out;
}

TopicSelection topic_dedup_select(const RetrievalIndex& index, const CandidatePool& pool,
                                  std::span<const float> query, std::size_t k,
                                  const TopicAssignment& topics, std::size_t shortlist) {
  require_pool(index, pool, k);
  if (topics.topic_of.size() != pool.size()) throw DataError("topic assignment does not cover the pool");
  const auto hits = top_n(index, query, std::max(shortlist, k), true);
  TopicSelection out;
  std::vector<std::uint32_t> used;
  std::vector<const ScoredHit*> skipped;
  for (const auto& hit : hits) {
    if (out.replies.reply_ids.size() == k) break;
    const std::uint32_t topic = topics.topic_of[hit.reply_id];
    if (std::find(used.begin(), used.end(), topic) != used.end()) {
      skipped.push_back(&hit);
      continue;
    }
    used.push_back(topic);
    push(out.replies, pool, hit.reply_id, hit.score);
  }
  for (const ScoredHit* hit : skipped) {
    if (out.replies.reply_ids.size() == k) break;
    out.used_fallback = true;
    push(out.replies, pool, hit->reply_id, hit->score);
  }
  return out;
}

std::string prediction_json(const Prediction& prediction) {
  jsonl::json line = {{"message_id", prediction.message_id}, {"replies", prediction.replies}};
  return line.dump();
}

std::vector<Prediction> read_predictions(std::istream& in) {
  std::vector<Prediction> out;
  jsonl::for_each_object(in, [&](const jsonl::json& obj, std::size_t line) {
    Prediction p;
    p.message_id = jsonl::uint_field(obj, "message_id", line);
    const auto& replies = jsonl::field(obj, "replies", line);
    if (!replies.is_array()) {
      throw DataError("line " + std::to_string(line) + ": field 'replies' must be an array");
    }
    for (const auto& r : replies) {
      if (!r.is_string()) {
        throw DataError("line " + std::to_string(line) + ": 'replies' must contain strings");
      }
      p.replies.push_back(r.get<std::string>());
    }
    out.push_back(std::move(p));
  });
  return out;
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open predictions " + path.string());
  return read_predictions(in);
}

}  // namespace replyset
