#include "replyset/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <unordered_map>

#include "jsonl.hpp"
#include "replyset/error.hpp"
#include "replyset/parallel.hpp"

namespace replyset {

namespace {

using NgramCounts = std::unordered_map<std::string, int>;

NgramCounts ngrams(const TokenList& tokens, int n) {
  NgramCounts counts;
  const auto len = static_cast<std::ptrdiff_t>(tokens.size());
  for (std::ptrdiff_t i = 0; i + n <= len; ++i) {
    std::string key = tokens[static_cast<std::size_t>(i)];
    for (int j = 1; j < n; ++j) {
      key.push_back('\x1f');
      key += tokens[static_cast<std::size_t>(i + j)];
    }
    ++counts[key];
  }
  return counts;
}

double f_measure(const NgramCounts& pred, std::size_t pred_total, const NgramCounts& ref,
                 std::size_t ref_total) {
  if (pred_total == 0 || ref_total == 0) return 0.0;
  std::size_t overlap = 0;
  for (const auto& [gram, count] : pred) {
    const auto it = ref.find(gram);
    if (it != ref.end()) overlap += static_cast<std::size_t>(std::min(count, it->second));
  }
  if (overlap == 0) return 0.0;
  const double p = static_cast<double>(overlap) / static_cast<double>(pred_total);
  const double r = static_cast<double>(overlap) / static_cast<double>(ref_total);
  return 2.0 * p * r / (p + r);
}

std::size_t gram_total(const TokenList& tokens, int n) {
  return tokens.size() >= static_cast<std::size_t>(n) ? tokens.size() - static_cast<std::size_t>(n) + 1
                                                      : 0;
}

}  // namespace

double rouge_n(const TokenList& pred, std::span<const TokenList> refs, int n) {
  if (n < 1 || n > 3) throw UsageError("rouge_n supports n in {1, 2, 3}");
  if (refs.empty()) throw UsageError("rouge_n needs at least one reference");
  const NgramCounts pred_grams = ngrams(pred, n);
  const std::size_t pred_total = gram_total(pred, n);
  double best = 0.0;
  for (const auto& ref : refs) {
    best = std::max(best, f_measure(pred_grams, pred_total, ngrams(ref, n), gram_total(ref, n)));
  }
  return best;
}

RougeScores weighted_rouge(const TokenList& pred, std::span<const TokenList> refs) {
  RougeScores s;
  s.r1 = rouge_n(pred, refs, 1);
  s.r2 = rouge_n(pred, refs, 2);
  s.r3 = rouge_n(pred, refs, 3);
  s.ensemble = kRouge1Weight * s.r1 + kRouge2Weight * s.r2 + kRouge3Weight * s.r3;
  return s;
}

double max_rouge_over_set(std::span<const TokenList> reply_set, const TokenList& ref) {
  if (reply_set.empty()) throw UsageError("max_rouge_over_set needs a non-empty reply set");
  const std::span<const TokenList> refs(&ref, 1);
  double best = 0.0;
  for (const auto& reply : reply_set) best = std::max(best, weighted_rouge(reply, refs).ensemble);
  return best;
}

double self_rouge(std::span<const TokenList> reply_set) {
  if (reply_set.size() < 2) throw UsageError("self_rouge needs at least two replies");
  double total = 0.0;
  std::vector<TokenList> others;
  for (std::size_t k = 0; k < reply_set.size(); ++k) {
    others.clear();
    for (std::size_t j = 0; j < reply_set.size(); ++j) {
      if (j != k) others.push_back(reply_set[j]);
    }
    total += weighted_rouge(reply_set[k], others).ensemble;
  }
  return total / static_cast<double>(reply_set.size());
}

EvalReport evaluate(std::span<const Prediction> predictions, std::span<const DialoguePair> tests,
                    std::size_t threads) {
  std::unordered_map<std::uint64_t, std::size_t> by_id;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (!by_id.emplace(predictions[i].message_id, i).second) {
      throw DataError("duplicate prediction for message_id " +
                      std::to_string(predictions[i].message_id));
    }
  }
  std::unordered_map<std::uint64_t, bool> test_ids;
  for (const auto& t : tests) {
    if (!by_id.contains(t.message_id)) {
      throw DataError("missing prediction for message_id " + std::to_string(t.message_id));
    }
    test_ids.emplace(t.message_id, true);
  }
  for (const auto& p : predictions) {
    if (!test_ids.contains(p.message_id)) {
      throw DataError("prediction for unknown message_id " + std::to_string(p.message_id));
    }
  }

  EvalReport report;
  report.n = tests.size();
  report.per_example.resize(tests.size());
  parallel_for(tests.size(), threads, [&](std::size_t i) {
    const auto& test = tests[i];
    const auto& pred = predictions[by_id.at(test.message_id)];
    if (pred.replies.size() < 2) {
      throw DataError("message_id " + std::to_string(test.message_id) +
                      ": a reply set needs at least two replies");
    }
    std::vector<TokenList> set;
    for (const auto& r : pred.replies) set.push_back(normalize_and_tokenize(r));
    report.per_example[i] = {test.message_id,
                             max_rouge_over_set(set, normalize_and_tokenize(test.reply)),
                             self_rouge(set)};
  });
  double rouge = 0.0;
  double self = 0.0;
  for (const auto& e : report.per_example) {
    rouge += e.max_rouge;
    self += e.self_rouge;
  }
  if (report.n > 0) {
    report.mean_rouge = rouge / static_cast<double>(report.n);
    report.mean_self_rouge = self / static_cast<double>(report.n);
  }
  return report;
}

std::string report_json(const EvalReport& report, std::string_view config_json) {
  jsonl::json per_example = jsonl::json::array();
  for (const auto& e : report.per_example) {
    per_example.push_back({{"message_id", e.message_id},
                           {"rouge", e.max_rouge * kDisplayScale},
                           {"self_rouge", e.self_rouge * kDisplayScale}});
  }
  jsonl::json doc = {{"n", report.n},
                     {"rouge", report.mean_rouge * kDisplayScale},
                     {"self_rouge", report.mean_self_rouge * kDisplayScale},
                     {"scale", kDisplayScale},
                     {"per_example", std::move(per_example)}};
  if (!config_json.empty()) doc["config"] = jsonl::json::parse(config_json);
  return doc.dump(2);
}

void print_report_table(std::ostream& out, const EvalReport& report, std::string_view label) {
  char line[128];
  std::snprintf(line, sizeof line, "%-24s %8s %10s %12s\n", "system", "n", "ROUGE", "Self-ROUGE");
  out << line;
  std::snprintf(line, sizeof line, "%-24.24s %8zu %10.2f %12.2f\n", std::string(label).c_str(),
                report.n, report.mean_rouge * kDisplayScale,
                report.mean_self_rouge * kDisplayScale);
  out << line;
}

}  // namespace replyset
