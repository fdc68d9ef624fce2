#include "binary_io.hpp"

#include <fstream>
#include <iterator>

namespace svl::detail {

void ByteWriter::write_to(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes_.data()),
            static_cast<std::streamsize>(bytes_.size()));
  if (!out) throw Error("write failed: " + path.string());
}

ByteReader ByteReader::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return ByteReader(std::move(bytes), path.string());
}

Matrix ByteReader::matrix(std::uint64_t rows, std::uint64_t cols, const char* what) {
  // Guard the allocation before trusting header dimensions.
  if (cols != 0 && rows > remaining() / 8 / cols)
    fail(std::string("truncated while reading ") + what);
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = f64(what);
  return m;
}

}  // namespace svl::detail
