#include "replyset/matrix.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "replyset/error.hpp"

namespace replyset {

namespace {

constexpr std::array<char, 4> kMagic{'E', 'M', 'B', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                         static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(bytes, 4);
}

std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim)
    : rows_(rows), dim_(dim), data_(rows * dim, 0.0f) {}

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data)
    : rows_(rows), dim_(dim), data_(std::move(data)) {
  if (data_.size() != rows_ * dim_) {
    throw DataError("matrix payload has " + std::to_string(data_.size()) + " values, expected " +
                    std::to_string(rows_) + "x" + std::to_string(dim_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw DataError("non-finite matrix value at row " + std::to_string(i / dim_));
    }
  }
}

// Eight independent partial sums in a fixed lane order: vectorizes without
// -ffast-math and gives the same bits on every call.
double dot(std::span<const float> a, std::span<const float> b) {
  const std::size_t n = a.size();
  double acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t l = 0; l < 8; ++l) {
      acc[l] += static_cast<double>(a[i + l]) * static_cast<double>(b[i + l]);
    }
  }
  for (std::size_t l = 0; i < n; ++i, ++l) {
    acc[l] += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

double l2_norm(std::span<const float> v) { return std::sqrt(dot(v, v)); }

void write_matrix(std::ostream& out, const EmbeddingMatrix& m) {
  if (m.rows() > 0xFFFFFFFFu || m.dim() > 0xFFFFFFFFu) throw DataError("matrix too large");
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.dim()));
  for (const float v : m.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  if (!out) throw DataError("failed to write matrix");
}

EmbeddingMatrix read_matrix(std::istream& in) {
  unsigned char header[12];
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (in.gcount() < 4 || std::memcmp(header, kMagic.data(), 4) != 0) {
    throw DataError("bad magic");
  }
  if (in.gcount() != sizeof header) throw DataError("truncated header");
  const std::uint32_t rows = get_u32(header + 4);
  const std::uint32_t dim = get_u32(header + 8);
  if (rows == 0 || dim == 0) throw DataError("empty matrix");

  const std::size_t count = std::size_t(rows) * dim;
  std::vector<unsigned char> raw(count * 4);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw DataError("truncated payload: expected " + std::to_string(count) + " values");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError("size mismatch: trailing bytes after " + std::to_string(rows) + "x" +
                    std::to_string(dim) + " payload");
  }
  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = std::bit_cast<float>(get_u32(raw.data() + 4 * i));
  }
  return EmbeddingMatrix(rows, dim, std::move(data));
}

void save_matrix(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  write_matrix(out, m);
}

EmbeddingMatrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open matrix " + path.string());
  return read_matrix(in);
}

}  // namespace replyset
