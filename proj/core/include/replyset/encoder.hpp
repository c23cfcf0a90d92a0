#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "replyset/corpus.hpp"
#include "replyset/matrix.hpp"

namespace replyset {

/// Feature-hashed TF-IDF encoder standing in for a trained dual encoder.
/// Each in-vocabulary token adds sign(t) * tf * idf(t) to coordinate
/// slot(t); the result is L2-normalized. Tokens unseen at fit time are
/// ignored, so text with no known token encodes to the zero vector.
class HashedTfidfEncoder {
 public:
  struct Slot {
    std::size_t index;
    float sign;
  };

  HashedTfidfEncoder() = default;
  /// Throws UsageError unless dim is a power of two >= 64.
  HashedTfidfEncoder(std::size_t dim, std::uint64_t seed, std::uint64_t num_documents,
                     std::map<std::string, double> idf);

  std::size_t dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t num_documents() const { return num_documents_; }
  const std::map<std::string, double>& idf_table() const { return idf_; }

  bool in_vocabulary(std::string_view token) const;
  /// log((1 + D) / (1 + df)) + 1; tokens outside the table use df = 0.
  double idf(std::string_view token) const;
  Slot slot(std::string_view token) const;

  std::vector<float> encode(std::string_view text) const;
  void encode_into(std::string_view text, std::span<float> out) const;

  friend bool operator==(const HashedTfidfEncoder&, const HashedTfidfEncoder&) = default;

 private:
  std::size_t dim_ = 0;
  std::uint64_t seed_ = 0;
  std::uint64_t num_documents_ = 0;
  std::map<std::string, double> idf_;
};

/// Document frequencies over every corpus message and every pool reply.
/// Throws DataError when both are empty, UsageError on a bad dim.
HashedTfidfEncoder fit_encoder(const CandidatePool& pool, std::span<const DialoguePair> pairs,
                               std::size_t dim, std::uint64_t seed);

enum class TextSide { message, reply };

EmbeddingMatrix encode_pool(const HashedTfidfEncoder& encoder, const CandidatePool& pool,
                            std::size_t threads = 1);
EmbeddingMatrix encode_messages(const HashedTfidfEncoder& encoder,
                                std::span<const DialoguePair> pairs, TextSide side,
                                std::size_t threads = 1);

/// alpha * message + (1 - alpha) * reply, without renormalization.
/// Throws UsageError on mismatched dims or alpha outside [0, 1].
std::vector<float> augment_query(std::span<const float> message, std::span<const float> reply,
                                 double alpha);

// Encoder file: one JSON object {"dim", "seed", "num_documents", "idf": {...}}.
// An optional `header_json` object is stored under "header" and ignored on read.
void write_encoder(std::ostream& out, const HashedTfidfEncoder& encoder,
                   std::string_view header_json = {});
HashedTfidfEncoder read_encoder(std::istream& in);
void save_encoder(const HashedTfidfEncoder& encoder, const std::filesystem::path& path,
                  std::string_view header_json = {});
HashedTfidfEncoder load_encoder(const std::filesystem::path& path);

}  // namespace replyset
