#include <benchmark/benchmark.h>

#include <random>

#include "replyset/encoder.hpp"
#include "replyset/index.hpp"
#include "replyset/metrics.hpp"
#include "replyset/planner.hpp"

using namespace replyset;

namespace {

EmbeddingMatrix random_matrix(std::size_t rows, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal;
  std::vector<float> data(rows * dim);
  for (auto& v : data) v = normal(rng);
  EmbeddingMatrix m(rows, dim, std::move(data));
  for (std::size_t r = 0; r < rows; ++r) {
    const double norm = l2_norm(m.row(r));
    for (auto& v : m.row(r)) v = static_cast<float>(v / norm);
  }
  return m;
}

std::vector<std::string> random_texts(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < count; ++i) {
    std::string t = "r" + std::to_string(i);
    const std::size_t len = 3 + rng() % 10;
    for (std::size_t j = 0; j < len; ++j) t += " w" + std::to_string(rng() % 400);
    texts.push_back(t);
  }
  return texts;
}

void BM_TopN(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const RetrievalIndex index(random_matrix(rows, 256, 1), std::vector<double>(rows, -3.0), 0.1);
  const auto queries = random_matrix(16, 256, 2);
  std::size_t q = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(top_n(index, queries.row(q++ % 16), 100, true));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}
BENCHMARK(BM_TopN)->Arg(1 << 12)->Arg(48 << 10);

void BM_PlanReplySet(benchmark::State& state) {
  const std::size_t rows = 1 << 13;
  const auto texts = random_texts(rows, 3);
  const auto pool = CandidatePool::from_parts(texts, std::vector<double>(rows, -3.0));
  const RetrievalIndex index(random_matrix(rows, 256, 4), std::vector<double>(rows, -3.0), 0.1);
  const auto queries = random_matrix(16, 256, 5);
  PlannerConfig cfg;
  cfg.n_candidates = cfg.n_simulations = static_cast<std::size_t>(state.range(0));
  std::size_t q = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(plan_reply_set(queries.row(q++ % 16), {}, index, pool, cfg, PlanMode::online));
  }
}
BENCHMARK(BM_PlanReplySet)->Arg(25)->Arg(100);

void BM_WeightedRouge(benchmark::State& state) {
  const auto texts = random_texts(64, 6);
  std::vector<TokenList> tokens;
  for (const auto& t : texts) tokens.push_back(normalize_and_tokenize(t));
  std::size_t i = 0;
  for (auto _ : state) {
    const std::vector<TokenList> ref = {tokens[(i + 1) % 64]};
    benchmark::DoNotOptimize(weighted_rouge(tokens[i % 64], ref));
    ++i;
  }
}
BENCHMARK(BM_WeightedRouge);

}  // namespace
BENCHMARK_MAIN();
