#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "replyset/corpus.hpp"
#include "replyset/matrix.hpp"

namespace replyset {

struct ScoredHit {
  ReplyId reply_id = 0;
  double score = 0.0;    // raw_dot + beta * lm_bias
  double raw_dot = 0.0;  // query . reply
};

/// Exact brute-force retrieval over the pool's reply vectors, scored by
/// query . y_r + beta * LM(y_r) (biased) or the plain dot product (raw).
/// Ranking is by descending score with ties going to the smaller reply id.
class RetrievalIndex {
 public:
  RetrievalIndex() = default;
  /// Throws DataError when the matrix row count differs from lm_bias.size().
  RetrievalIndex(EmbeddingMatrix replies, std::vector<double> lm_bias, double beta);

  std::size_t size() const { return replies_.rows(); }
  std::size_t dim() const { return replies_.dim(); }
  double beta() const { return beta_; }
  const EmbeddingMatrix& matrix() const { return replies_; }
  std::span<const double> lm_bias() const { return lm_bias_; }

  /// Raw dot products of `query` against every reply, into `out` (size()).
  void score_all(std::span<const float> query, std::span<double> out) const;

 private:
  EmbeddingMatrix replies_;
  std::vector<double> lm_bias_;
  double beta_ = 0.0;
};

/// The n best hits in rank order (fewer when the pool is smaller).
/// Throws UsageError when n == 0 or the query dim differs from the index.
std::vector<ScoredHit> top_n(const RetrievalIndex& index, std::span<const float> query,
                             std::size_t n, bool use_bias);

/// Selects from precomputed raw dot products (one per reply).
std::vector<ScoredHit> select_top(const RetrievalIndex& index, std::span<const double> raw,
                                  std::size_t n, bool use_bias);

/// top_n for every row of `queries`, parallel over queries.
std::vector<std::vector<ScoredHit>> batch_top_n(const RetrievalIndex& index,
                                                const EmbeddingMatrix& queries, std::size_t n,
                                                bool use_bias, std::size_t threads = 1);

}  // namespace replyset
