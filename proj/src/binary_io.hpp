#pragma once

// Little-endian binary encoding shared by model and dataset files.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "svl/error.hpp"
#include "svl/linalg.hpp"

namespace svl::detail {

class ByteWriter {
 public:
  void raw(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    bytes_.insert(bytes_.end(), p, p + size);
  }
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  // Row-major block; dimensions are recorded elsewhere.
  void matrix(const Matrix& m) {
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j) f64(m(i, j));
  }
  void write_to(const std::filesystem::path& path) const;

 private:
  std::vector<unsigned char> bytes_;
};

class ByteReader {
 public:
  ByteReader(std::vector<unsigned char> bytes, std::string source)
      : bytes_(std::move(bytes)), source_(std::move(source)) {}

  static ByteReader from_file(const std::filesystem::path& path);

  std::uint64_t offset() const { return pos_; }
  std::uint64_t remaining() const { return bytes_.size() - pos_; }

  void raw(void* out, std::size_t size, const char* what) {
    need(size, what);
    std::memcpy(out, bytes_.data() + pos_, size);
    pos_ += size;
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }

  Matrix matrix(std::uint64_t rows, std::uint64_t cols, const char* what);

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError(source_ + ": " + what, pos_);
  }

 private:
  void need(std::uint64_t size, const char* what) const {
    if (remaining() < size) fail(std::string("truncated while reading ") + what);
  }

  std::vector<unsigned char> bytes_;
  std::string source_;
  std::uint64_t pos_ = 0;
};

}  // namespace svl::detail
