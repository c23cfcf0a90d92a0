#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace replyset {

/// Lowercased whitespace-delimited tokens of one string.
using TokenList = std::vector<std::string>;

/// Interned token id. For overlap scoring a reply is a sorted multiset
/// ("bag") of these.
using TokenId = std::uint32_t;
using TokenBag = std::vector<TokenId>;

/// Lowercases, trims, and splits on runs of Unicode whitespace. Punctuation
/// stays attached to whatever token it is written in. Lowercasing covers
/// ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic; other code points
/// pass through unchanged.
TokenList normalize_and_tokenize(std::string_view text);

/// The tokens of `text` joined by single spaces. Used as the reply dedup key.
std::string normalize_text(std::string_view text);

/// Multiset term overlap F1 between two token lists; 0 when either side is
/// empty or nothing overlaps.
double term_f1(const TokenList& a, const TokenList& b);

/// term_f1 over sorted token-id bags.
double bag_f1(std::span<const TokenId> a, std::span<const TokenId> b);

/// Size of the multiset intersection of two sorted bags.
std::size_t bag_overlap(std::span<const TokenId> a, std::span<const TokenId> b);

/// Assigns dense ids to token strings in first-seen order.
class TokenInterner {
 public:
  TokenId intern(const std::string& token);
  /// Sorted bag of interned ids for `tokens`.
  TokenBag bag(const TokenList& tokens);
  std::size_t size() const { return ids_.size(); }

 private:
  std::unordered_map<std::string, TokenId> ids_;
};

}  // namespace replyset
