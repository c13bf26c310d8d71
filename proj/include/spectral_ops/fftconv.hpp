#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "spectral_ops/bench.hpp"
#include "spectral_ops/tensor.hpp"

namespace spectral_ops {

/// Output cropping of a 2-D cross-correlation of an n-extent image with an
/// m-extent kernel (per spatial axis).
///
///   full      n + m - 1, every overlap position
///   same      n, kernel anchored at floor((m - 1) / 2) so odd kernels are centred
///   valid     n - m + 1, kernel fully inside the image
///   circular  n, periodic image, anchor at the kernel origin
enum class ConvMode { full, same, valid, circular };

std::string_view to_string(ConvMode mode);
ConvMode parse_conv_mode(std::string_view name);

/// Depthwise operands: one kernel slice per image channel.
template <class T>
struct ConvOperands {
  Tensor<T> image;   // [C, H, W]
  Tensor<T> kernel;  // [C, Kh, Kw]
  std::optional<Tensor<T>> bias;  // [C]
};

/// Spatial output extents for `mode`; validates the operands.
template <class T>
std::pair<std::size_t, std::size_t> conv_output_extents(const ConvOperands<T>& ops, ConvMode mode);

/// Sliding-window evaluation, O(H W Kh Kw) per channel.
template <class T>
Tensor<T> direct_xcorr2d(const ConvOperands<T>& ops, ConvMode mode);

/// Called with the conjugated kernel spectrum [C, Ph, Pw/2+1] before it is
/// multiplied into the image spectrum.
template <class T>
using SpectrumHook = std::function<void(ComplexTensor<T>&)>;

/// Cross-correlation through the frequency domain.
///
/// Both operands are zero-padded at the bottom/right to a common size of at
/// least (H + Kh - 1, W + Kw - 1) (rounded up to a 2/3/5-smooth length; any
/// size past that bound gives the same linear result), transformed with
/// rfft2, and the kernel spectrum is conjugated by negating its imaginary
/// part. The inverse of the product holds every correlation lag; the result
/// is read out with a circular shift of the mode's anchor. Circular mode skips
/// the padding and pads the kernel to exactly (H, W).
template <class T>
Tensor<T> fft_xcorr2d(const ConvOperands<T>& ops, ConvMode mode);

template <class T>
Tensor<T> fft_xcorr2d(const ConvOperands<T>& ops, ConvMode mode, const SpectrumHook<T>& hook);

/// True (flipped-kernel) linear convolution, full extents, via the FFT.
template <class T>
Tensor<T> fft_conv2d_full(const ConvOperands<T>& ops);

/// Direct full linear convolution; oracle for fft_conv2d_full.
template <class T>
Tensor<T> direct_conv2d_full(const ConvOperands<T>& ops);

/// Periodic convolution with no padding: the kernel is zero-padded to the
/// image extents and spectra are multiplied without conjugation, so the last
/// Kh - 1 rows (Kw - 1 columns) of the linear result wrap onto the first.
template <class T>
Tensor<T> fft_circular_conv2d(const Tensor<T>& image, const Tensor<T>& kernel);

/// Wrap-around summation oracle for fft_circular_conv2d.
template <class T>
Tensor<T> direct_circular_conv2d(const Tensor<T>& image, const Tensor<T>& kernel);

/// Reverses both spatial axes of a [C, Kh, Kw] kernel.
template <class T>
Tensor<T> flip_spatial(const Tensor<T>& kernel);

/// Times direct vs FFT `same`-mode correlation of one n x n channel with an
/// m x m kernel for every (n, m) pair. Outputs of both methods are compared
/// before timing and a mismatch raises Error. Rows are ordered by (n, m),
/// then method.
std::vector<BenchRow> bench_conv(std::span<const std::size_t> image_sizes,
                                 std::span<const std::size_t> kernel_sizes, int repeats,
                                 DType dtype = DType::f32, std::uint64_t seed = 42);

}  // namespace spectral_ops
