#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "replyset/baselines.hpp"
#include "replyset/corpus.hpp"
#include "replyset/text.hpp"

namespace replyset {

inline constexpr double kRouge1Weight = 1.0 / 6.0;
inline constexpr double kRouge2Weight = 1.0 / 3.0;
inline constexpr double kRouge3Weight = 1.0 / 2.0;

struct RougeScores {
  double r1 = 0.0;
  double r2 = 0.0;
  double r3 = 0.0;
  double ensemble = 0.0;  // r1/6 + r2/3 + r3/2
};

/// ROUGE-N F-measure against the best of `refs`. A pairing where either side
/// is shorter than n scores 0. Throws UsageError for n outside 1..3 or an
/// empty reference list.
double rouge_n(const TokenList& pred, std::span<const TokenList> refs, int n);

RougeScores weighted_rouge(const TokenList& pred, std::span<const TokenList> refs);

/// Best ensemble score of any suggestion against the single reference.
/// Throws UsageError on an empty set.
double max_rouge_over_set(std::span<const TokenList> reply_set, const TokenList& ref);

/// Mean leave-one-out ensemble score within a set; lower is more diverse.
/// Throws UsageError when the set has fewer than two replies.
double self_rouge(std::span<const TokenList> reply_set);

struct ExampleScore {
  std::uint64_t message_id = 0;
  double max_rouge = 0.0;
  double self_rouge = 0.0;
};

/// Unscaled ([0, 1]) per-example and mean scores.
struct EvalReport {
  std::vector<ExampleScore> per_example;
  double mean_rouge = 0.0;
  double mean_self_rouge = 0.0;
  std::size_t n = 0;
};

inline constexpr double kDisplayScale = 100.0;

/// Scores one prediction per test pair, matched by message id. Throws
/// DataError naming the id when a test message has no prediction, a
/// prediction is duplicated, or a prediction refers to an unknown message.
EvalReport evaluate(std::span<const Prediction> predictions, std::span<const DialoguePair> tests,
                    std::size_t threads = 1);

/// Report JSON with all scores multiplied by kDisplayScale. `extra_json`, when
/// non-empty, is a JSON object embedded under "config".
std::string report_json(const EvalReport& report, std::string_view config_json = {});
/// Fixed-width summary table.
void print_report_table(std::ostream& out, const EvalReport& report, std::string_view label);

}  // namespace replyset
