#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "replyset/text.hpp"

namespace replyset {

using ReplyId = std::uint32_t;

struct DialoguePair {
  std::uint64_t message_id = 0;
  std::string context;  // the message, after optional persona concatenation
  std::string reply;    // ground-truth reply
  std::optional<std::vector<std::string>> persona;
};

/// Reads a JSON-lines corpus: one object per line with string fields
/// `context` and `reply` and an optional `persona` array of strings. Blank
/// lines are skipped; message ids are the 0-based line index. With
/// `persona_mode`, a present persona is joined with spaces and prepended to
/// the context.
///
/// Throws DataError naming the 1-based line number on malformed JSON, a
/// missing or mistyped field, or a context/reply that is blank after
/// trimming.
std::vector<DialoguePair> load_dialogue_corpus(const std::filesystem::path& path,
                                               bool persona_mode);
std::vector<DialoguePair> parse_dialogue_corpus(std::istream& in, bool persona_mode);

/// Add-one-smoothed unigram statistics over the reply side of a train split.
struct UnigramCounts {
  std::unordered_map<std::string, std::uint64_t> counts;
  std::uint64_t total = 0;

  void add(const TokenList& tokens);
  /// (count(w) + 1) / (total + |vocabulary|)
  double probability(const std::string& token) const;
};

UnigramCounts count_reply_unigrams(std::span<const DialoguePair> pairs);

/// Mean per-token natural-log unigram probability of each reply. A reply
/// with no tokens receives the most negative bias among the others (or 0 in
/// a pool with no scorable reply) and its index is appended to `flagged`.
std::vector<double> compute_lm_bias(std::span<const TokenList> replies,
                                    const UnigramCounts& counts,
                                    std::vector<ReplyId>* flagged = nullptr);

/// The deduplicated reply universe. Immutable once built; reply_id is the
/// position in first-occurrence order.
class CandidatePool {
 public:
  CandidatePool() = default;

  /// Builds from already-normalized, distinct texts and their biases (the
  /// pool file round trip). Throws DataError on duplicates, length mismatch
  /// or a non-finite/positive bias.
  static CandidatePool from_parts(std::vector<std::string> texts, std::vector<double> lm_bias);

  std::size_t size() const { return texts_.size(); }
  bool empty() const { return texts_.empty(); }

  const std::string& text(ReplyId id) const { return texts_.at(id); }
  std::span<const std::string> texts() const { return texts_; }
  double lm_bias(ReplyId id) const { return lm_bias_.at(id); }
  std::span<const double> lm_biases() const { return lm_bias_; }
  const TokenList& tokens(ReplyId id) const { return tokens_.at(id); }
  /// Sorted token-id bag used by the planner's overlap scoring.
  std::span<const TokenId> bag(ReplyId id) const { return bags_.at(id); }
  /// Replies whose bias was substituted because they had no tokens.
  std::span<const ReplyId> flagged_replies() const { return flagged_; }

  std::optional<ReplyId> find(std::string_view text) const;

 private:
  friend CandidatePool build_candidate_pool(std::span<const DialoguePair> pairs);
  void index_tokens();

  std::vector<std::string> texts_;
  std::vector<double> lm_bias_;
  std::vector<TokenList> tokens_;
  std::vector<TokenBag> bags_;
  std::vector<ReplyId> flagged_;
  std::unordered_map<std::string, ReplyId> by_text_;
};

/// Every distinct normalized reply once, in first-occurrence order, with LM
/// bias computed from all train reply tokens. Throws DataError when `pairs`
/// is empty.
CandidatePool build_candidate_pool(std::span<const DialoguePair> pairs);

/// Pool file: JSON-lines {"reply_id", "text", "lm_bias"} ordered by id,
/// optionally preceded by one {"header": {...}} line.
void write_pool(std::ostream& out, const CandidatePool& pool, std::string_view header_json = {});
CandidatePool read_pool(std::istream& in);
CandidatePool load_pool(const std::filesystem::path& path);

}  // namespace replyset
