#include "spectral_ops/ftns.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

namespace spectral_ops {
namespace {

constexpr std::uint8_t kMagic[4] = {'F', 'T', 'N', 'S'};

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <class T>
std::vector<std::uint8_t> encode(const Tensor<T>& t, DType dtype) {
  std::vector<std::uint8_t> out;
  out.reserve(10 + 8 * t.rank() + sizeof(T) * t.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(kFtnsVersion);
  out.push_back(static_cast<std::uint8_t>(dtype));
  put_le(out, t.rank(), 4);
  for (auto e : t.shape()) put_le(out, e, 8);
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  for (T v : t.data()) put_le(out, std::bit_cast<Bits>(v), sizeof(T));
  return out;
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }

  std::uint64_t le(int n, const char* what) {
    if (bytes_.size() - pos_ < static_cast<std::size_t>(n)) {
      throw FormatError("truncated FTNS data at offset " + std::to_string(pos_) + " while reading " +
                        what);
    }
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

template <class T>
Tensor<T> decode_payload(Reader& r, Shape shape) {
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  Tensor<T> t(std::move(shape));
  if (r.remaining() / sizeof(T) < t.size()) {
    throw FormatError("truncated FTNS payload at offset " + std::to_string(r.offset()) + ": need " +
                      std::to_string(t.size() * sizeof(T)) + " bytes, have " +
                      std::to_string(r.remaining()));
  }
  for (auto& v : t.data()) v = std::bit_cast<T>(static_cast<Bits>(r.le(sizeof(T), "payload")));
  return t;
}

}  // namespace

DType dtype_of(const AnyTensor& t) {
  return std::holds_alternative<Tensor<float>>(t) ? DType::f32 : DType::f64;
}

std::vector<std::uint8_t> encode_ftns(const Tensor<float>& t) { return encode(t, DType::f32); }
std::vector<std::uint8_t> encode_ftns(const Tensor<double>& t) { return encode(t, DType::f64); }

AnyTensor decode_ftns(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  for (int i = 0; i < 4; ++i) {
    if (r.le(1, "magic") != kMagic[i]) {
      throw FormatError("bad FTNS magic at offset " + std::to_string(i));
    }
  }
  const auto version = r.le(1, "version");
  if (version != kFtnsVersion) {
    throw FormatError("unsupported FTNS version " + std::to_string(version) + " at offset 4");
  }
  const auto dtype = r.le(1, "dtype");
  if (dtype > 1) {
    throw FormatError("unknown FTNS dtype code " + std::to_string(dtype) + " at offset 5");
  }
  const auto rank = r.le(4, "rank");
  if (rank == 0) throw FormatError("FTNS rank must be at least 1 (offset 6)");
  if (rank > r.remaining() / 8) {
    throw FormatError("truncated FTNS header at offset 10: rank " + std::to_string(rank) +
                      " needs " + std::to_string(8 * rank) + " extent bytes");
  }
  Shape shape(rank);
  std::size_t numel = 1;
  for (auto& e : shape) {
    const auto at = r.offset();
    e = r.le(8, "extent");
    if (e == 0) throw FormatError("zero extent at offset " + std::to_string(at));
    if (numel > std::numeric_limits<std::size_t>::max() / e) {
      throw FormatError("extent product overflows at offset " + std::to_string(at));
    }
    numel *= e;
  }
  AnyTensor out = dtype == 0 ? AnyTensor(decode_payload<float>(r, std::move(shape)))
                             : AnyTensor(decode_payload<double>(r, std::move(shape)));
  if (r.remaining() != 0) {
    throw FormatError("trailing bytes after FTNS payload at offset " + std::to_string(r.offset()));
  }
  return out;
}

namespace {

void write_bytes(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error("failed writing " + path.string());
}

}  // namespace

void write_tensor(const Tensor<float>& t, const std::filesystem::path& path) {
  write_bytes(encode_ftns(t), path);
}

void write_tensor(const Tensor<double>& t, const std::filesystem::path& path) {
  write_bytes(encode_ftns(t), path);
}

void write_tensor(const AnyTensor& t, const std::filesystem::path& path) {
  std::visit([&](const auto& x) { write_tensor(x, path); }, t);
}

AnyTensor read_tensor(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string() + " for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_ftns(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace spectral_ops
