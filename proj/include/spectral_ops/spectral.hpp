#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "spectral_ops/tensor.hpp"

namespace spectral_ops {

/// Plain complex product. std::complex's operator* also handles inf/nan
/// operands per C99 Annex G, which costs a library call per product.
template <class T>
inline std::complex<T> cmul(std::complex<T> a, std::complex<T> b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

// Transform convention throughout: forward X_k = sum_n x_n exp(-2 pi i n k / N)
// with no scaling, inverse carries the 1/N.

/// Precomputed transform of one length.
///
/// Lengths whose prime factors are all <= 61 run a recursive mixed-radix
/// decimation in time (radix 2, 3, 4 and 5 butterflies, a generic one for
/// larger odd primes). Anything else goes through Bluestein's chirp-z reformulation on a
/// power-of-two plan.
template <class T>
class FftPlan {
 public:
  using Complex = std::complex<T>;

  explicit FftPlan(std::size_t n);

  std::size_t size() const noexcept { return n_; }

  void forward(std::span<Complex> data) const;
  /// Inverse transform including the 1/N factor.
  void inverse(std::span<Complex> data) const;

 private:
  struct Bluestein;

  void work(Complex* out, const Complex* in, std::size_t fstride, const std::size_t* factors) const;
  bool leaf(Complex* out, const Complex* in, std::size_t fstride, std::size_t p) const;
  void butterfly2(Complex* f, std::size_t fstride, std::size_t m) const;
  void butterfly3(Complex* f, std::size_t fstride, std::size_t m) const;
  void butterfly4(Complex* f, std::size_t fstride, std::size_t m) const;
  void butterfly5(Complex* f, std::size_t fstride, std::size_t m) const;
  void butterfly_generic(Complex* f, std::size_t fstride, std::size_t m, std::size_t p) const;

  std::size_t n_;
  std::vector<std::size_t> factors_;  // (radix, remaining length) pairs
  std::vector<Complex> twiddles_;
  std::shared_ptr<const Bluestein> bluestein_;
};

/// Shared plan for length `n`; plans are cached per thread.
template <class T>
std::shared_ptr<const FftPlan<T>> fft_plan(std::size_t n);

/// Smallest 2^a 3^b 5^c that is >= n.
std::size_t next_fast_length(std::size_t n);

/// O(N^2) evaluation of the DFT sum, term by term, accumulated in long double.
template <class T>
ComplexTensor<T> dft_naive(const ComplexTensor<T>& x);

/// Transform along one axis of a tensor of any rank.
template <class T>
ComplexTensor<T> fft_axis(const ComplexTensor<T>& x, int axis, bool inverse = false);

/// Forward transform of a real sequence zero-padded (or truncated) to `n`;
/// returns the n/2 + 1 non-negative frequencies.
template <class T>
std::vector<std::complex<T>> rfft(std::span<const T> x, std::size_t n);

/// Inverse of rfft producing exactly `n` real samples. The imaginary parts
/// of the DC and (for even n) Nyquist bins are ignored.
template <class T>
std::vector<T> irfft(std::span<const std::complex<T>> spectrum, std::size_t n);

/// 2-D transform of a real tensor over its last two axes. The last axis of
/// the result holds W/2 + 1 frequencies; leading axes are batch axes.
template <class T>
ComplexTensor<T> rfft2(const Tensor<T>& x);

/// Inverse of rfft2. `out_extents` are the spatial (H, W) extents before the
/// forward transform; the spectrum's last two extents must be (H, W/2 + 1).
template <class T>
Tensor<T> irfft2(const ComplexTensor<T>& spectrum, std::pair<std::size_t, std::size_t> out_extents);

}  // namespace spectral_ops
