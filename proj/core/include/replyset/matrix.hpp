#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace replyset {

/// Row-major float32 matrix; one row per reply id or message id.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dim);
  /// Throws DataError when data.size() != rows * dim or a value is not finite.
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data);

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  std::span<const float> data() const { return data_; }

  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<float> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

/// Dot product with float64 accumulation in a fixed order.
double dot(std::span<const float> a, std::span<const float> b);

/// Euclidean norm with float64 accumulation.
double l2_norm(std::span<const float> v);

// Binary layout, little-endian: "EMB1", rows:u32, dim:u32, rows*dim float32.
void write_matrix(std::ostream& out, const EmbeddingMatrix& m);
EmbeddingMatrix read_matrix(std::istream& in);
void save_matrix(const EmbeddingMatrix& m, const std::filesystem::path& path);
EmbeddingMatrix load_matrix(const std::filesystem::path& path);

}  // namespace replyset
