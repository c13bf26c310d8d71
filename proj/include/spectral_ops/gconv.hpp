#pragma once

#include <cstddef>

#include "spectral_ops/rng.hpp"
#include "spectral_ops/tensor.hpp"

namespace spectral_ops {

/// Multi-scale global convolution.
///
/// A kernel for a length-L sequence is assembled from s = ceil(log2 L)
/// segments; segment i is the base kernel scaled by 2^-i and linearly
/// resized to width * 2^i positions. Concatenated, the first L positions
/// form the kernel.
///
/// Bidirectional kernels carry a base of 2 * width rows: rows [0, width)
/// build the forward kernel k_f, rows [width, 2 width) the backward kernel
/// k_b. The output is
///   y[t] = sum_{s=0}^{t} k_f[s] u[t - s] + sum_{s=0}^{L-1-t} k_b[s] u[t + s] + bias
/// evaluated as one linear convolution with the two-sided length 2L - 1
/// kernel [k_b[L-1], ..., k_b[1], k_f[0] + k_b[0], k_f[1], ..., k_f[L-1]].
struct GConvParams {
  std::size_t width = 0;
  std::size_t depth = 0;
  Tensor<double> base_kernel;  // [width, depth], or [2 * width, depth] when bidirectional
  bool bidirectional = false;
  Tensor<double> bias;         // [depth]

  void validate() const;
};

/// Seeded parameters: base kernel N(0, 1), zero bias.
GConvParams random_gconv_params(std::size_t width, std::size_t depth, bool bidirectional,
                                Rng& rng);

/// ceil(log2 L); 0 for L = 1.
std::size_t scale_count(std::size_t length);

/// Per-channel linear interpolation with half-pixel centres: output i samples
/// source coordinate (i + 0.5) * n / new_len - 0.5, clamped to [0, n - 1].
Tensor<double> bilinear_resize_1d(const Tensor<double>& segment, std::size_t new_len);

/// Kernel for a length-L sequence: [L, depth], or [2L, depth] for
/// bidirectional params (rows [0, L) forward, [L, 2L) backward). L = 1 uses a
/// single length-1 resize of the base. Throws ConfigError when the segments
/// cannot cover L positions.
Tensor<double> build_kernel(const GConvParams& params, std::size_t length);

/// The base-kernel rows used for one direction.
Tensor<double> direction_base(const GConvParams& params, bool backward);

/// Per-channel FFT convolution of signal [L, depth] with the built kernel,
/// padded so no wrap-around occurs, plus per-channel bias.
Tensor<double> gconv_forward(const Tensor<double>& signal, const GConvParams& params);

}  // namespace spectral_ops
