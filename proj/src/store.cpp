#include "tlaser/store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>

namespace tlaser {

namespace fs = std::filesystem;

namespace {

constexpr std::uint8_t kMagic[4] = {'T', 'N', 'S', '1'};

void put_le(std::vector<std::uint8_t>& out, std::size_t off, std::uint64_t v, int width) {
  for (int b = 0; b < width; ++b) out[off + b] = static_cast<std::uint8_t>(v >> (8 * b));
}

std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t off) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(in[off + b]) << (8 * b);
  return v;
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t off) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(in[off + b]) << (8 * b);
  return v;
}

std::vector<std::uint8_t> encode(std::span<const double> values,
                                 const std::vector<std::uint64_t>& dims, DType dtype) {
  const std::size_t width = dtype == DType::Float64 ? 8 : 4;
  const std::size_t header = 6 + 8 * dims.size();
  std::vector<std::uint8_t> out(header + width * values.size());
  std::copy(std::begin(kMagic), std::end(kMagic), out.begin());
  out[4] = static_cast<std::uint8_t>(dtype);
  out[5] = static_cast<std::uint8_t>(dims.size());
  for (std::size_t i = 0; i < dims.size(); ++i) put_le(out, 6 + 8 * i, dims[i], 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t off = header + width * i;
    if (dtype == DType::Float64)
      put_le(out, off, std::bit_cast<std::uint64_t>(values[i]), 8);
    else
      put_le(out, off, std::bit_cast<std::uint32_t>(static_cast<float>(values[i])), 4);
  }
  return out;
}

}  // namespace

std::uint64_t TnsHeader::element_count() const {
  std::uint64_t n = 1;
  for (std::uint64_t d : dims) n *= d;
  return n;
}

std::vector<std::uint64_t> TnsValue::dims() const {
  if (is_matrix())
    return {static_cast<std::uint64_t>(matrix().rows()),
            static_cast<std::uint64_t>(matrix().cols())};
  const Tensor3d& t = tensor();
  return {static_cast<std::uint64_t>(t.rows()), static_cast<std::uint64_t>(t.cols()),
          static_cast<std::uint64_t>(t.depth())};
}

std::vector<std::uint8_t> encode_tns(const Tensor3d& t, DType dtype) {
  return encode(t.data(),
                {static_cast<std::uint64_t>(t.rows()), static_cast<std::uint64_t>(t.cols()),
                 static_cast<std::uint64_t>(t.depth())},
                dtype);
}

std::vector<std::uint8_t> encode_tns(const Matrix<double>& m, DType dtype) {
  const RowMajorMatrix<double> rm = m;
  return encode(std::span<const double>(rm.data(), static_cast<std::size_t>(rm.size())),
                {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())},
                dtype);
}

TnsHeader decode_tns_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw ParseError("file too short for TNS magic", bytes.size());
  for (std::size_t i = 0; i < 4; ++i)
    if (bytes[i] != kMagic[i]) throw ParseError("bad magic, expected \"TNS1\"", 0);
  if (bytes.size() < 6) throw ParseError("truncated header", bytes.size());
  TnsHeader h;
  if (bytes[4] > 1)
    throw ParseError("unknown dtype " + std::to_string(bytes[4]), 4);
  h.dtype = static_cast<DType>(bytes[4]);
  const std::uint8_t ndim = bytes[5];
  if (ndim != 2 && ndim != 3)
    throw ParseError("unsupported ndim " + std::to_string(ndim), 5);
  if (bytes.size() < 6 + 8u * ndim) throw ParseError("truncated dims", bytes.size());
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < ndim; ++i) {
    const std::size_t off = 6 + 8 * i;
    const std::uint64_t d = get_u64(bytes, off);
    if (d == 0) throw ParseError("zero-sized dimension", off);
    if (count > std::numeric_limits<std::uint64_t>::max() / d / 8)
      throw ParseError("dimensions overflow", off);
    count *= d;
    h.dims.push_back(d);
  }
  return h;
}

TnsValue decode_tns(std::span<const std::uint8_t> bytes) {
  const TnsHeader h = decode_tns_header(bytes);
  const std::size_t start = h.header_bytes();
  const std::uint64_t count = h.element_count();
  const std::size_t width = h.element_bytes();
  const std::uint64_t expected = start + count * width;
  if (bytes.size() < expected)
    throw ParseError("truncated payload: expected " + std::to_string(expected) +
                         " bytes, file has " + std::to_string(bytes.size()),
                     bytes.size());
  if (bytes.size() > expected) throw ParseError("trailing bytes after payload", expected);

  std::vector<double> values(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t off = start + i * width;
    const double v = width == 8
                         ? std::bit_cast<double>(get_u64(bytes, off))
                         : static_cast<double>(std::bit_cast<float>(get_u32(bytes, off)));
    if (!std::isfinite(v)) throw ParseError("non-finite value", off);
    values[i] = v;
  }

  TnsValue out;
  out.dtype = h.dtype;
  const auto d0 = static_cast<Index>(h.dims[0]);
  const auto d1 = static_cast<Index>(h.dims[1]);
  if (h.dims.size() == 2) {
    out.value = Matrix<double>(Eigen::Map<const RowMajorMatrix<double>>(values.data(), d0, d1));
  } else {
    out.value = Tensor3d::FromData(d0, d1, static_cast<Index>(h.dims[2]), std::move(values));
  }
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read error on '" + path.string() + "'");
  return bytes;
}

void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::random_device rd;
  const fs::path tmp = path.string() + ".tmp" + std::to_string(rd());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write error on '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() +
                  "': " + ec.message());
  }
}

void write_tns(const fs::path& path, const Tensor3d& t, DType dtype) {
  write_file_atomic(path, encode_tns(t, dtype));
}

void write_tns(const fs::path& path, const Matrix<double>& m, DType dtype) {
  write_file_atomic(path, encode_tns(m, dtype));
}

TnsValue read_tns(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_tns(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.message(), e.offset());
  }
}

TnsHeader read_tns_header(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> head(6 + 8 * 3);
  in.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  return decode_tns_header(head);
}

}  // namespace tlaser
