#pragma once

#include <cstdint>

#include "spectral_ops/tensor.hpp"

namespace spectral_ops {

/// Seeded generator with a fully specified output stream.
///
/// Raw words come from SplitMix64: the state advances by
/// 0x9E3779B97F4A7C15 per draw and is finalized with the usual
/// (30, 27, 31) xor-shift/multiply mix. A uniform in (0, 1] is
/// `((word >> 11) + 1) * 2^-53`. Normals use the basic Box-Muller pair
/// r = sqrt(-2 ln u1), z0 = r cos(2 pi u2), z1 = r sin(2 pi u2), emitted
/// z0 first; samples are produced in double and rounded for float tensors.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  double uniform();
  double normal();

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Tensor of i.i.d. standard-normal draws in row-major order.
template <class T>
Tensor<T> randn(Rng& rng, const Shape& shape) {
  Tensor<T> out(shape);
  for (auto& v : out.data()) v = static_cast<T>(rng.normal());
  return out;
}

}  // namespace spectral_ops
