#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "spectral_ops/tensor.hpp"

namespace spectral_ops {

// FTNS layout, all integers little-endian:
//   "FTNS" | u8 version (1) | u8 dtype (0 = f32, 1 = f64) | u32 rank |
//   rank x u64 extents | row-major payload
inline constexpr std::uint8_t kFtnsVersion = 1;

using AnyTensor = std::variant<Tensor<float>, Tensor<double>>;

DType dtype_of(const AnyTensor& t);

std::vector<std::uint8_t> encode_ftns(const Tensor<float>& t);
std::vector<std::uint8_t> encode_ftns(const Tensor<double>& t);
AnyTensor decode_ftns(std::span<const std::uint8_t> bytes);

void write_tensor(const Tensor<float>& t, const std::filesystem::path& path);
void write_tensor(const Tensor<double>& t, const std::filesystem::path& path);
void write_tensor(const AnyTensor& t, const std::filesystem::path& path);
AnyTensor read_tensor(const std::filesystem::path& path);

/// Reads a file and converts it to `T`, whatever dtype it was stored as.
template <class T>
Tensor<T> read_tensor_as(const std::filesystem::path& path) {
  return std::visit([](const auto& t) { return cast<T>(t); }, read_tensor(path));
}

}  // namespace spectral_ops
