#include "replyset/encoder.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "jsonl.hpp"
#include "replyset/error.hpp"
#include "replyset/hash.hpp"
#include "replyset/parallel.hpp"

namespace replyset {

namespace {

constexpr std::uint64_t kSignSalt = 0x5bd1e9955bd1e995ULL;

double idf_value(std::uint64_t docs, std::uint64_t df) {
  return std::log((1.0 + static_cast<double>(docs)) / (1.0 + static_cast<double>(df))) + 1.0;
}

void check_dim(std::size_t dim) {
  if (dim < 64 || !std::has_single_bit(dim)) {
    throw UsageError("encoder dim must be a power of two >= 64, got " + std::to_string(dim));
  }
}

}  // namespace

HashedTfidfEncoder::HashedTfidfEncoder(std::size_t dim, std::uint64_t seed,
                                       std::uint64_t num_documents,
                                       std::map<std::string, double> idf)
    : dim_(dim), seed_(seed), num_documents_(num_documents), idf_(std::move(idf)) {
  check_dim(dim_);
}

bool HashedTfidfEncoder::in_vocabulary(std::string_view token) const {
  return idf_.find(std::string(token)) != idf_.end();
}

double HashedTfidfEncoder::idf(std::string_view token) const {
  const auto it = idf_.find(std::string(token));
  return it == idf_.end() ? idf_value(num_documents_, 0) : it->second;
}

HashedTfidfEncoder::Slot HashedTfidfEncoder::slot(std::string_view token) const {
  const std::uint64_t h = fnv1a64(token);
  const std::uint64_t where = mix64(h ^ seed_);
  const std::uint64_t sign = mix64(h ^ mix64(seed_ ^ kSignSalt));
  return {static_cast<std::size_t>(where & (dim_ - 1)), (sign >> 63) ? -1.0f : 1.0f};
}

void HashedTfidfEncoder::encode_into(std::string_view text, std::span<float> out) const {
  std::vector<double> acc(dim_, 0.0);
  for (const auto& token : normalize_and_tokenize(text)) {
    const auto it = idf_.find(token);
    if (it == idf_.end()) continue;
    const Slot s = slot(token);
    acc[s.index] += static_cast<double>(s.sign) * it->second;
  }
  double norm = 0.0;
  for (const double v : acc) norm += v * v;
  norm = std::sqrt(norm);
  for (std::size_t i = 0; i < dim_; ++i) {
    out[i] = norm > 0.0 ? static_cast<float>(acc[i] / norm) : 0.0f;
  }
}

std::vector<float> HashedTfidfEncoder::encode(std::string_view text) const {
  std::vector<float> out(dim_);
  encode_into(text, out);
  return out;
}

HashedTfidfEncoder fit_encoder(const CandidatePool& pool, std::span<const DialoguePair> pairs,
                               std::size_t dim, std::uint64_t seed) {
  check_dim(dim);
  if (pairs.empty() && pool.empty()) throw DataError("cannot fit an encoder on an empty corpus");
  std::map<std::string, std::uint64_t> df;
  auto add_document = [&](const TokenList& tokens) {
    std::unordered_set<std::string_view> unique(tokens.begin(), tokens.end());
    for (const auto& t : unique) ++df[std::string(t)];
  };
  for (const auto& p : pairs) add_document(normalize_and_tokenize(p.context));
  for (std::size_t i = 0; i < pool.size(); ++i) add_document(pool.tokens(static_cast<ReplyId>(i)));

  const std::uint64_t docs = pairs.size() + pool.size();
  std::map<std::string, double> idf;
  for (const auto& [token, count] : df) idf.emplace_hint(idf.end(), token, idf_value(docs, count));
  return HashedTfidfEncoder(dim, seed, docs, std::move(idf));
}

EmbeddingMatrix encode_pool(const HashedTfidfEncoder& encoder, const CandidatePool& pool,
                            std::size_t threads) {
  EmbeddingMatrix m(pool.size(), encoder.dim());
  parallel_for(pool.size(), threads, [&](std::size_t i) {
    encoder.encode_into(pool.text(static_cast<ReplyId>(i)), m.row(i));
  });
  return m;
}

EmbeddingMatrix encode_messages(const HashedTfidfEncoder& encoder,
                                std::span<const DialoguePair> pairs, TextSide side,
                                std::size_t threads) {
  EmbeddingMatrix m(pairs.size(), encoder.dim());
  parallel_for(pairs.size(), threads, [&](std::size_t i) {
    const auto& p = pairs[i];
    encoder.encode_into(side == TextSide::message ? p.context : p.reply, m.row(i));
  });
  return m;
}

std::vector<float> augment_query(std::span<const float> message, std::span<const float> reply,
                                 double alpha) {
  if (message.size() != reply.size()) {
    throw UsageError("augment_query: dims differ (" + std::to_string(message.size()) + " vs " +
                     std::to_string(reply.size()) + ")");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("alpha must lie in [0, 1]");
  std::vector<float> out(message.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(alpha * message[i] + (1.0 - alpha) * reply[i]);
  }
  return out;
}

void write_encoder(std::ostream& out, const HashedTfidfEncoder& encoder,
                   std::string_view header_json) {
  jsonl::json idf = jsonl::json::object();
  for (const auto& [token, value] : encoder.idf_table()) idf[token] = value;
  jsonl::json doc = {{"dim", encoder.dim()},
                     {"seed", encoder.seed()},
                     {"num_documents", encoder.num_documents()},
                     {"idf", std::move(idf)}};
  if (!header_json.empty()) doc["header"] = jsonl::json::parse(header_json);
  out << doc.dump() << '\n';
}

HashedTfidfEncoder read_encoder(std::istream& in) {
  jsonl::json doc;
  try {
    doc = jsonl::json::parse(in);
  } catch (const jsonl::json::exception& e) {
    throw DataError(std::string("malformed encoder file: ") + e.what());
  }
  try {
    std::map<std::string, double> idf;
    for (const auto& [token, value] : doc.at("idf").items()) idf.emplace(token, value.get<double>());
    return HashedTfidfEncoder(doc.at("dim").get<std::size_t>(), doc.at("seed").get<std::uint64_t>(),
                              doc.at("num_documents").get<std::uint64_t>(), std::move(idf));
  } catch (const jsonl::json::exception& e) {
    throw DataError(std::string("malformed encoder file: ") + e.what());
  }
}

void save_encoder(const HashedTfidfEncoder& encoder, const std::filesystem::path& path,
                  std::string_view header_json) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  write_encoder(out, encoder, header_json);
}

HashedTfidfEncoder load_encoder(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open encoder " + path.string());
  return read_encoder(in);
}

}  // namespace replyset
