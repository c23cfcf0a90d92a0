#include "replyset/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include "jsonl.hpp"
#include "replyset/error.hpp"

namespace replyset {

namespace {

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n\v\f") == std::string::npos;
}

}  // namespace

std::vector<DialoguePair> parse_dialogue_corpus(std::istream& in, bool persona_mode) {
  std::vector<DialoguePair> pairs;
  std::size_t next_id = 0;
  jsonl::for_each_object(in, [&](const jsonl::json& obj, std::size_t line) {
    DialoguePair pair;
    pair.message_id = next_id++;
    pair.context = jsonl::string_field(obj, "context", line);
    pair.reply = jsonl::string_field(obj, "reply", line);
    if (const auto it = obj.find("persona"); it != obj.end() && !it->is_null()) {
      if (!it->is_array()) {
        throw DataError("line " + std::to_string(line) + ": field 'persona' must be an array");
      }
      std::vector<std::string> persona;
      for (const auto& p : *it) {
        if (!p.is_string()) {
          throw DataError("line " + std::to_string(line) +
                          ": field 'persona' must contain only strings");
        }
        persona.push_back(p.get<std::string>());
      }
      pair.persona = std::move(persona);
    }
    if (blank(pair.context)) {
      throw DataError("line " + std::to_string(line) + ": field 'context' is empty");
    }
    if (blank(pair.reply)) {
      throw DataError("line " + std::to_string(line) + ": field 'reply' is empty");
    }
    if (persona_mode && pair.persona && !pair.persona->empty()) {
      std::string joined;
      for (const auto& p : *pair.persona) {
        if (!joined.empty()) joined.push_back(' ');
        joined += p;
      }
      pair.context = joined + " " + pair.context;
    }
    pairs.push_back(std::move(pair));
  });
  return pairs;
}

std::vector<DialoguePair> load_dialogue_corpus(const std::filesystem::path& path,
                                               bool persona_mode) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus " + path.string());
  return parse_dialogue_corpus(in, persona_mode);
}

void UnigramCounts::add(const TokenList& tokens) {
  for (const auto& t : tokens) ++counts[t];
  total += tokens.size();
}

double UnigramCounts::probability(const std::string& token) const {
  const auto it = counts.find(token);
  const double c = it == counts.end() ? 0.0 : static_cast<double>(it->second);
  return (c + 1.0) / (static_cast<double>(total) + static_cast<double>(counts.size()));
}

UnigramCounts count_reply_unigrams(std::span<const DialoguePair> pairs) {
  UnigramCounts counts;
  for (const auto& p : pairs) counts.add(normalize_and_tokenize(p.reply));
  return counts;
}

std::vector<double> compute_lm_bias(std::span<const TokenList> replies,
                                    const UnigramCounts& counts,
                                    std::vector<ReplyId>* flagged) {
  std::vector<double> bias(replies.size(), 0.0);
  std::vector<ReplyId> empty;
  double floor = 0.0;
  for (std::size_t i = 0; i < replies.size(); ++i) {
    const auto& tokens = replies[i];
    if (tokens.empty()) {
      empty.push_back(static_cast<ReplyId>(i));
      continue;
    }
    double sum = 0.0;
    for (const auto& t : tokens) sum += std::log(counts.probability(t));
    bias[i] = sum / static_cast<double>(tokens.size());
    floor = std::min(floor, bias[i]);
  }
  for (const ReplyId id : empty) bias[id] = floor;
  if (flagged) *flagged = std::move(empty);
  return bias;
}

void CandidatePool::index_tokens() {
  TokenInterner interner;
  tokens_.clear();
  bags_.clear();
  by_text_.clear();
  tokens_.reserve(texts_.size());
  bags_.reserve(texts_.size());
  for (std::size_t i = 0; i < texts_.size(); ++i) {
    tokens_.push_back(normalize_and_tokenize(texts_[i]));
    bags_.push_back(interner.bag(tokens_.back()));
    by_text_.emplace(texts_[i], static_cast<ReplyId>(i));
  }
}

std::optional<ReplyId> CandidatePool::find(std::string_view text) const {
  const auto it = by_text_.find(normalize_text(text));
  if (it == by_text_.end()) return std::nullopt;
  return it->second;
}

CandidatePool CandidatePool::from_parts(std::vector<std::string> texts,
                                        std::vector<double> lm_bias) {
  if (texts.size() != lm_bias.size()) {
    throw DataError("pool has " + std::to_string(texts.size()) + " replies but " +
                    std::to_string(lm_bias.size()) + " LM biases");
  }
  if (texts.size() > std::numeric_limits<ReplyId>::max()) throw DataError("pool too large");
  CandidatePool pool;
  pool.texts_ = std::move(texts);
  for (auto& t : pool.texts_) t = normalize_text(t);
  pool.lm_bias_ = std::move(lm_bias);
  for (std::size_t i = 0; i < pool.lm_bias_.size(); ++i) {
    if (!std::isfinite(pool.lm_bias_[i]) || pool.lm_bias_[i] > 0.0) {
      throw DataError("reply " + std::to_string(i) + ": LM bias must be finite and <= 0");
    }
  }
  pool.index_tokens();
  if (pool.by_text_.size() != pool.texts_.size()) {
    throw DataError("pool contains duplicate replies");
  }
  for (std::size_t i = 0; i < pool.texts_.size(); ++i) {
    if (pool.tokens_[i].empty()) pool.flagged_.push_back(static_cast<ReplyId>(i));
  }
  return pool;
}

CandidatePool build_candidate_pool(std::span<const DialoguePair> pairs) {
  if (pairs.empty()) throw DataError("cannot build a candidate pool from an empty corpus");
  CandidatePool pool;
  std::unordered_map<std::string, ReplyId> seen;
  for (const auto& p : pairs) {
    std::string key = normalize_text(p.reply);
    if (seen.try_emplace(key, static_cast<ReplyId>(pool.texts_.size())).second) {
      pool.texts_.push_back(std::move(key));
    }
  }
  pool.index_tokens();
  pool.lm_bias_ = compute_lm_bias(pool.tokens_, count_reply_unigrams(pairs), &pool.flagged_);
  return pool;
}

void write_pool(std::ostream& out, const CandidatePool& pool, std::string_view header_json) {
  jsonl::write_header(out, header_json);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    jsonl::json line = {{"reply_id", i},
                        {"text", pool.text(static_cast<ReplyId>(i))},
                        {"lm_bias", pool.lm_bias(static_cast<ReplyId>(i))}};
    out << line.dump() << '\n';
  }
}

CandidatePool read_pool(std::istream& in) {
  std::vector<std::string> texts;
  std::vector<double> bias;
  jsonl::for_each_object(in, [&](const jsonl::json& obj, std::size_t line) {
    const auto id = jsonl::uint_field(obj, "reply_id", line);
    if (id != texts.size()) {
      throw DataError("line " + std::to_string(line) + ": expected reply_id " +
                      std::to_string(texts.size()) + ", found " + std::to_string(id));
    }
    texts.push_back(jsonl::string_field(obj, "text", line));
    bias.push_back(jsonl::number_field(obj, "lm_bias", line));
  });
  if (texts.empty()) throw DataError("pool file contains no replies");
  return CandidatePool::from_parts(std::move(texts), std::move(bias));
}

CandidatePool load_pool(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open pool " + path.string());
  return read_pool(in);
}

}  // namespace replyset
