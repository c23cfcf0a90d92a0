#pragma once

// Reference implementations used only by tests. Each one is written
// straight from the definition with ordinary containers and shares no code
// path with the library function it checks.

#include <cstddef>
#include <string>
#include <vector>

#include "replyset/corpus.hpp"
#include "replyset/index.hpp"

namespace replyset::oracle {

using Tokens = std::vector<std::string>;

/// Multiset F1 by std::map counting: 2o / (|a| + |b|).
double f1(const Tokens& a, const Tokens& b);

/// max over set members of f1; 0 for the empty set.
double set_f1(const std::vector<Tokens>& set, const Tokens& reply);

/// Full-objective evaluation of one greedy step for candidate `candidate`:
///   sum_m max_{y in selected + candidate} f1(y, sim_m) q_m - lambda * set_f1(selected, candidate)
double greedy_objective(const std::vector<Tokens>& selected, const Tokens& candidate,
                        const std::vector<Tokens>& simulated, const std::vector<double>& probs,
                        double lambda);

/// Sorts every (score, id) pair and keeps the first n.
std::vector<ScoredHit> full_sort_top_n(const std::vector<std::vector<float>>& replies,
                                       const std::vector<double>& lm_bias, double beta,
                                       const std::vector<float>& query, std::size_t n,
                                       bool use_bias);

/// Naive softmax without max subtraction (inputs are small in tests).
std::vector<double> softmax(const std::vector<double>& scores);

/// ROUGE-N F-measure against a single reference, from explicit n-gram
/// vectors compared element by element.
double rouge_n_single(const Tokens& pred, const Tokens& ref, int n);

}  // namespace replyset::oracle
