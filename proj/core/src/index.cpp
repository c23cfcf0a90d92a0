#include "replyset/index.hpp"

#include <algorithm>
#include <numeric>

#include "replyset/error.hpp"
#include "replyset/parallel.hpp"

namespace replyset {

RetrievalIndex::RetrievalIndex(EmbeddingMatrix replies, std::vector<double> lm_bias, double beta)
    : replies_(std::move(replies)), lm_bias_(std::move(lm_bias)), beta_(beta) {
  if (replies_.rows() != lm_bias_.size()) {
    throw DataError("index has " + std::to_string(replies_.rows()) + " reply vectors but " +
                    std::to_string(lm_bias_.size()) + " LM biases");
  }
  if (!(beta_ >= 0.0)) throw UsageError("beta must be >= 0");
}

void RetrievalIndex::score_all(std::span<const float> query, std::span<double> out) const {
  if (query.size() != dim()) {
    throw UsageError("query dim " + std::to_string(query.size()) + " does not match index dim " +
                     std::to_string(dim()));
  }
  for (std::size_t r = 0; r < size(); ++r) out[r] = dot(query, replies_.row(r));
}

std::vector<ScoredHit> select_top(const RetrievalIndex& index, std::span<const double> raw,
                                  std::size_t n, bool use_bias) {
  if (n == 0) throw UsageError("top_n requires n >= 1");
  const std::size_t size = index.size();
  const auto bias = index.lm_bias();
  const double beta = index.beta();
  auto score = [&](std::size_t r) { return use_bias ? raw[r] + beta * bias[r] : raw[r]; };

  std::vector<ScoredHit> hits(size);
  for (std::size_t r = 0; r < size; ++r) {
    hits[r] = {static_cast<ReplyId>(r), score(r), raw[r]};
  }
  auto better = [](const ScoredHit& a, const ScoredHit& b) {
    return a.score != b.score ? a.score > b.score : a.reply_id < b.reply_id;
  };
  n = std::min(n, size);
  if (n < size) {
    std::nth_element(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(n), hits.end(),
                     better);
    hits.resize(n);
  }
  std::sort(hits.begin(), hits.end(), better);
  return hits;
}

std::vector<ScoredHit> top_n(const RetrievalIndex& index, std::span<const float> query,
                             std::size_t n, bool use_bias) {
  if (n == 0) throw UsageError("top_n requires n >= 1");
  std::vector<double> raw(index.size());
  index.score_all(query, raw);
  return select_top(index, raw, n, use_bias);
}

std::vector<std::vector<ScoredHit>> batch_top_n(const RetrievalIndex& index,
                                                const EmbeddingMatrix& queries, std::size_t n,
                                                bool use_bias, std::size_t threads) {
  if (queries.rows() > 0 && queries.dim() != index.dim()) {
    throw UsageError("query dim " + std::to_string(queries.dim()) + " does not match index dim " +
                     std::to_string(index.dim()));
  }
  std::vector<std::vector<ScoredHit>> out(queries.rows());
  parallel_for(queries.rows(), threads,
               [&](std::size_t q) { out[q] = top_n(index, queries.row(q), n, use_bias); });
  return out;
}

}  // namespace replyset
