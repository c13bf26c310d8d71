#include "spectral_ops/spectral.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <unordered_map>

namespace spectral_ops {
namespace {

constexpr std::size_t kMaxDirectRadix = 61;

std::vector<std::size_t> factorize(std::size_t n) {
  const std::size_t total = n;
  std::vector<std::size_t> radices;
  std::size_t p = 4;
  do {
    while (n % p) {
      switch (p) {
        case 4: p = 2; break;
        case 2: p = 3; break;
        default: p += 2; break;
      }
      if (p * p > n) p = n;
    }
    n /= p;
    radices.push_back(p);
  } while (n > 1);

  // Small radices go outermost: the butterfly loops then run with long
  // inner lengths and the largest radix lands on the fused leaf.
  std::sort(radices.begin(), radices.end());
  std::vector<std::size_t> factors;
  std::size_t m = total;
  for (std::size_t r : radices) {
    m /= r;
    factors.push_back(r);
    factors.push_back(m);
  }
  return factors;
}

template <class T>
std::complex<T> unit_root(std::size_t k, std::size_t n) {
  // exp(-2 pi i k / n), evaluated in double before rounding to T.
  const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
  return {static_cast<T>(std::cos(angle)), static_cast<T>(std::sin(angle))};
}

}  // namespace

template <class T>
struct FftPlan<T>::Bluestein {
  std::shared_ptr<const FftPlan<T>> inner;
  std::vector<Complex> chirp;           // exp(-i pi k^2 / n)
  std::vector<Complex> filter_spectrum;  // transform of the conjugate chirp, wrapped
};

template <class T>
FftPlan<T>::FftPlan(std::size_t n) : n_(n) {
  if (n == 0) throw ShapeError("transform length must be at least 1");
  if (n == 1) return;
  auto factors = factorize(n);
  std::size_t largest = 0;
  for (std::size_t i = 0; i < factors.size(); i += 2) largest = std::max(largest, factors[i]);

  if (largest <= kMaxDirectRadix) {
    factors_ = std::move(factors);
    twiddles_.resize(n);
    for (std::size_t k = 0; k < n; ++k) twiddles_[k] = unit_root<T>(k, n);
    return;
  }

  auto b = std::make_shared<Bluestein>();
  const std::size_t m = std::bit_ceil(2 * n - 1);
  b->inner = fft_plan<T>(m);
  b->chirp.resize(n);
  const std::uint64_t two_n = 2 * static_cast<std::uint64_t>(n);
  for (std::size_t k = 0; k < n; ++k) {
    // k^2 mod 2n keeps the angle argument small.
    const std::uint64_t k2 = (static_cast<std::uint64_t>(k) * k) % two_n;
    const double angle = -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
    b->chirp[k] = {static_cast<T>(std::cos(angle)), static_cast<T>(std::sin(angle))};
  }
  b->filter_spectrum.assign(m, Complex{});
  b->filter_spectrum[0] = std::conj(b->chirp[0]);
  for (std::size_t k = 1; k < n; ++k) {
    b->filter_spectrum[k] = std::conj(b->chirp[k]);
    b->filter_spectrum[m - k] = std::conj(b->chirp[k]);
  }
  b->inner->forward(b->filter_spectrum);
  bluestein_ = std::move(b);
}

template <class T>
void FftPlan<T>::forward(std::span<Complex> data) const {
  if (data.size() != n_) {
    throw ShapeError("plan of length " + std::to_string(n_) + " applied to " +
                     std::to_string(data.size()) + " values");
  }
  if (n_ == 1) return;

  if (bluestein_) {
    const auto& b = *bluestein_;
    const std::size_t m = b.inner->size();
    std::vector<Complex> a(m);
    for (std::size_t k = 0; k < n_; ++k) a[k] = cmul(data[k], b.chirp[k]);
    b.inner->forward(a);
    for (std::size_t k = 0; k < m; ++k) a[k] = cmul(a[k], b.filter_spectrum[k]);
    b.inner->inverse(a);
    for (std::size_t k = 0; k < n_; ++k) data[k] = cmul(a[k], b.chirp[k]);
    return;
  }

  // The scratch copy is placed so that its address and the output's differ
  // by about half a page modulo 4 KiB; loads from one and stores to the other
  // otherwise alias in the store buffer for some lengths.
  thread_local std::vector<Complex> scratch;
  constexpr std::size_t kPage = 4096;
  const std::size_t slack = kPage / sizeof(Complex);
  if (scratch.size() < n_ + slack) scratch.resize(n_ + slack);
  const auto out_addr = reinterpret_cast<std::uintptr_t>(data.data());
  const auto base_addr = reinterpret_cast<std::uintptr_t>(scratch.data());
  const std::size_t want = (out_addr + kPage / 2) % kPage;
  const std::size_t shift = (want + kPage - base_addr % kPage) % kPage / sizeof(Complex);
  Complex* in = scratch.data() + shift;
  std::copy(data.begin(), data.end(), in);
  work(data.data(), in, 1, factors_.data());
}

template <class T>
void FftPlan<T>::inverse(std::span<Complex> data) const {
  for (auto& v : data) v = std::conj(v);
  forward(data);
  const T scale = T(1) / static_cast<T>(n_);
  for (auto& v : data) v = std::conj(v) * scale;
}

template <class T>
void FftPlan<T>::work(Complex* out, const Complex* in, std::size_t fstride,
                      const std::size_t* factors) const {
  const std::size_t p = *factors++;
  const std::size_t m = *factors++;
  Complex* const begin = out;
  Complex* const end = out + p * m;

  if (m == 1) {
    if (leaf(out, in, fstride, p)) return;
    do {
      *out = *in;
      in += fstride;
    } while (++out != end);
  } else {
    do {
      work(out, in, fstride * p, factors);
      in += fstride;
      out += m;
    } while (out != end);
  }

  switch (p) {
    case 2: butterfly2(begin, fstride, m); break;
    case 3: butterfly3(begin, fstride, m); break;
    case 4: butterfly4(begin, fstride, m); break;
    case 5: butterfly5(begin, fstride, m); break;
    default: butterfly_generic(begin, fstride, m, p); break;
  }
}

// Last level of the recursion: a p-point DFT straight from the strided input,
// no twiddles. The butterfly loops carry per-call setup that dominates when
// they run with m == 1.
template <class T>
bool FftPlan<T>::leaf(Complex* out, const Complex* in, std::size_t fstride, std::size_t p) const {
  switch (p) {
    case 2: {
      const Complex a = in[0], b = in[fstride];
      out[0] = a + b;
      out[1] = a - b;
      return true;
    }
    case 3: {
      const T sin60 = twiddles_[fstride].imag();
      const Complex a = in[0], s1 = in[fstride], s2 = in[2 * fstride];
      const Complex sum = s1 + s2;
      const Complex diff = (s1 - s2) * sin60;
      const Complex mid = a - sum * T(0.5);
      out[0] = a + sum;
      out[1] = {mid.real() - diff.imag(), mid.imag() + diff.real()};
      out[2] = {mid.real() + diff.imag(), mid.imag() - diff.real()};
      return true;
    }
    case 4: {
      const Complex a = in[0], b = in[fstride], c = in[2 * fstride], d = in[3 * fstride];
      const Complex t0 = a + c, t1 = a - c, t2 = b + d, t3 = b - d;
      out[0] = t0 + t2;
      out[2] = t0 - t2;
      out[1] = {t1.real() + t3.imag(), t1.imag() - t3.real()};
      out[3] = {t1.real() - t3.imag(), t1.imag() + t3.real()};
      return true;
    }
    case 5: {
      const Complex ya = twiddles_[fstride], yb = twiddles_[2 * fstride];
      const Complex s0 = in[0], s1 = in[fstride], s2 = in[2 * fstride], s3 = in[3 * fstride],
                    s4 = in[4 * fstride];
      const Complex s7 = s1 + s4, s10 = s1 - s4, s8 = s2 + s3, s9 = s2 - s3;
      out[0] = s0 + s7 + s8;
      const Complex s5{s0.real() + s7.real() * ya.real() + s8.real() * yb.real(),
                       s0.imag() + s7.imag() * ya.real() + s8.imag() * yb.real()};
      const Complex s6{s10.imag() * ya.imag() + s9.imag() * yb.imag(),
                       -s10.real() * ya.imag() - s9.real() * yb.imag()};
      out[1] = s5 - s6;
      out[4] = s5 + s6;
      const Complex s11{s0.real() + s7.real() * yb.real() + s8.real() * ya.real(),
                        s0.imag() + s7.imag() * yb.real() + s8.imag() * ya.real()};
      const Complex s12{-s10.imag() * yb.imag() + s9.imag() * ya.imag(),
                        s10.real() * yb.imag() - s9.real() * ya.imag()};
      out[2] = s11 + s12;
      out[3] = s11 - s12;
      return true;
    }
    default:
      return false;
  }
}

template <class T>
void FftPlan<T>::butterfly2(Complex* f, std::size_t fstride, std::size_t m) const {
  Complex* g = f + m;
  for (std::size_t k = 0; k < m; ++k) {
    const Complex t = cmul(g[k], twiddles_[k * fstride]);
    g[k] = f[k] - t;
    f[k] += t;
  }
}

template <class T>
void FftPlan<T>::butterfly4(Complex* f, std::size_t fstride, std::size_t m) const {
  for (std::size_t k = 0; k < m; ++k) {
    const Complex s0 = cmul(f[k + m], twiddles_[k * fstride]);
    const Complex s1 = cmul(f[k + 2 * m], twiddles_[2 * k * fstride]);
    const Complex s2 = cmul(f[k + 3 * m], twiddles_[3 * k * fstride]);
    const Complex s5 = f[k] - s1;
    const Complex s3 = s0 + s2;
    const Complex s4 = s0 - s2;
    const Complex f0 = f[k] + s1;
    f[k + 2 * m] = f0 - s3;
    f[k] = f0 + s3;
    f[k + m] = {s5.real() + s4.imag(), s5.imag() - s4.real()};
    f[k + 3 * m] = {s5.real() - s4.imag(), s5.imag() + s4.real()};
  }
}

template <class T>
void FftPlan<T>::butterfly3(Complex* f, std::size_t fstride, std::size_t m) const {
  const T sin60 = twiddles_[fstride * m].imag();  // -sin(2 pi / 3)
  for (std::size_t k = 0; k < m; ++k) {
    const Complex s1 = cmul(f[k + m], twiddles_[k * fstride]);
    const Complex s2 = cmul(f[k + 2 * m], twiddles_[2 * k * fstride]);
    const Complex sum = s1 + s2;
    const Complex diff = (s1 - s2) * sin60;
    const Complex mid = f[k] - sum * T(0.5);
    f[k] += sum;
    f[k + m] = {mid.real() - diff.imag(), mid.imag() + diff.real()};
    f[k + 2 * m] = {mid.real() + diff.imag(), mid.imag() - diff.real()};
  }
}

template <class T>
void FftPlan<T>::butterfly5(Complex* f, std::size_t fstride, std::size_t m) const {
  const Complex ya = twiddles_[fstride * m];
  const Complex yb = twiddles_[fstride * 2 * m];
  Complex* f0 = f;
  Complex* f1 = f + m;
  Complex* f2 = f + 2 * m;
  Complex* f3 = f + 3 * m;
  Complex* f4 = f + 4 * m;
  for (std::size_t u = 0; u < m; ++u) {
    const Complex s0 = f0[u];
    const Complex s1 = cmul(f1[u], twiddles_[u * fstride]);
    const Complex s2 = cmul(f2[u], twiddles_[2 * u * fstride]);
    const Complex s3 = cmul(f3[u], twiddles_[3 * u * fstride]);
    const Complex s4 = cmul(f4[u], twiddles_[4 * u * fstride]);
    const Complex s7 = s1 + s4, s10 = s1 - s4, s8 = s2 + s3, s9 = s2 - s3;
    f0[u] = s0 + s7 + s8;
    const Complex s5{s0.real() + s7.real() * ya.real() + s8.real() * yb.real(),
                     s0.imag() + s7.imag() * ya.real() + s8.imag() * yb.real()};
    const Complex s6{s10.imag() * ya.imag() + s9.imag() * yb.imag(),
                     -s10.real() * ya.imag() - s9.real() * yb.imag()};
    f1[u] = s5 - s6;
    f4[u] = s5 + s6;
    const Complex s11{s0.real() + s7.real() * yb.real() + s8.real() * ya.real(),
                      s0.imag() + s7.imag() * yb.real() + s8.imag() * ya.real()};
    const Complex s12{-s10.imag() * yb.imag() + s9.imag() * ya.imag(),
                      s10.real() * yb.imag() - s9.real() * ya.imag()};
    f2[u] = s11 + s12;
    f3[u] = s11 - s12;
  }
}

template <class T>
void FftPlan<T>::butterfly_generic(Complex* f, std::size_t fstride, std::size_t m,
                                   std::size_t p) const {
  Complex scratch[kMaxDirectRadix];
  for (std::size_t u = 0; u < m; ++u) {
    for (std::size_t q = 0, k = u; q < p; ++q, k += m) scratch[q] = f[k];
    for (std::size_t q1 = 0, k = u; q1 < p; ++q1, k += m) {
      std::size_t tw = 0;
      Complex acc = scratch[0];
      for (std::size_t q = 1; q < p; ++q) {
        tw += fstride * k;
        if (tw >= n_) tw -= n_;
        acc += cmul(scratch[q], twiddles_[tw]);
      }
      f[k] = acc;
    }
  }
}

template <class T>
std::shared_ptr<const FftPlan<T>> fft_plan(std::size_t n) {
  thread_local std::unordered_map<std::size_t, std::shared_ptr<const FftPlan<T>>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  auto plan = std::make_shared<const FftPlan<T>>(n);
  cache.emplace(n, plan);
  return plan;
}

std::size_t next_fast_length(std::size_t n) {
  if (n <= 1) return 1;
  std::size_t best = std::bit_ceil(n);
  for (std::size_t p5 = 1; p5 < best; p5 *= 5) {
    for (std::size_t p35 = p5; p35 < best; p35 *= 3) {
      std::size_t v = p35;
      while (v < n) v *= 2;
      best = std::min(best, v);
    }
  }
  return best;
}

template <class T>
ComplexTensor<T> dft_naive(const ComplexTensor<T>& x) {
  if (x.rank() != 1) throw ShapeError("dft_naive expects a rank-1 tensor, got " + to_string(x.shape()));
  const std::size_t n = x.size();
  ComplexTensor<T> out(x.shape());
  const long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  for (std::size_t k = 0; k < n; ++k) {
    long double re = 0, im = 0;
    for (std::size_t j = 0; j < n; ++j) {
      // Reduce n*k mod N first so the angle stays in [0, 2 pi).
      const long double angle = -two_pi * static_cast<long double>((j * k) % n) / n;
      const long double c = std::cos(angle), s = std::sin(angle);
      const long double xr = x[j].real(), xi = x[j].imag();
      re += xr * c - xi * s;
      im += xr * s + xi * c;
    }
    out[k] = {static_cast<T>(re), static_cast<T>(im)};
  }
  return out;
}

template <class T>
ComplexTensor<T> fft_axis(const ComplexTensor<T>& x, int axis, bool inverse) {
  const std::size_t a = x.resolve_axis(axis);
  const auto& shape = x.shape();
  const std::size_t n = shape[a];
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < a; ++i) outer *= shape[i];
  for (std::size_t i = a + 1; i < shape.size(); ++i) inner *= shape[i];

  ComplexTensor<T> out = x;
  const auto plan = fft_plan<T>(n);
  std::vector<std::complex<T>> line(n);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      std::complex<T>* base = out.data().data() + o * n * inner + i;
      for (std::size_t k = 0; k < n; ++k) line[k] = base[k * inner];
      inverse ? plan->inverse(line) : plan->forward(line);
      for (std::size_t k = 0; k < n; ++k) base[k * inner] = line[k];
    }
  }
  return out;
}

namespace {

// Real-to-half-spectrum transform of `rows` contiguous rows of length n,
// two rows per complex transform.
template <class T>
void real_rows_forward(const T* in, std::size_t rows, std::size_t n, std::complex<T>* out) {
  const std::size_t half = n / 2 + 1;
  const auto plan = fft_plan<T>(n);
  std::vector<std::complex<T>> z(n);
  for (std::size_t r = 0; r < rows; r += 2) {
    const T* a = in + r * n;
    const bool pair = r + 1 < rows;
    const T* b = pair ? a + n : nullptr;
    std::complex<T>* oa = out + r * half;
    std::complex<T>* ob = pair ? oa + half : nullptr;
    // Zero-padded inputs are mostly zero rows; their spectra are zero too.
    const auto is_zero = [n](const T* row) {
      return std::all_of(row, row + n, [](T v) { return v == T(0); });
    };
    if (is_zero(a) && (!pair || is_zero(b))) {
      std::fill_n(oa, pair ? 2 * half : half, std::complex<T>{});
      continue;
    }
    for (std::size_t k = 0; k < n; ++k) z[k] = {a[k], pair ? b[k] : T(0)};
    plan->forward(z);
    for (std::size_t k = 0; k < half; ++k) {
      const std::complex<T> zk = z[k];
      const std::complex<T> zc = std::conj(z[(n - k) % n]);
      oa[k] = (zk + zc) * T(0.5);
      if (pair) {
        const std::complex<T> d = (zk - zc) * T(0.5);
        ob[k] = {d.imag(), -d.real()};
      }
    }
  }
}

template <class T>
void real_rows_inverse(const std::complex<T>* in, std::size_t rows, std::size_t n, T* out) {
  const std::size_t half = n / 2 + 1;
  const auto plan = fft_plan<T>(n);
  std::vector<std::complex<T>> z(n);
  auto full = [&](const std::complex<T>* h, std::size_t k) {
    if (k == 0 || (n % 2 == 0 && k == n / 2)) return std::complex<T>(h[k].real(), 0);
    return k < half ? h[k] : std::conj(h[n - k]);
  };
  for (std::size_t r = 0; r < rows; r += 2) {
    const std::complex<T>* ha = in + r * half;
    const bool pair = r + 1 < rows;
    const std::complex<T>* hb = pair ? ha + half : nullptr;
    for (std::size_t k = 0; k < n; ++k) {
      const std::complex<T> fa = full(ha, k);
      if (pair) {
        const std::complex<T> fb = full(hb, k);
        z[k] = {fa.real() - fb.imag(), fa.imag() + fb.real()};
      } else {
        z[k] = fa;
      }
    }
    plan->inverse(z);
    for (std::size_t k = 0; k < n; ++k) {
      out[r * n + k] = z[k].real();
      if (pair) out[(r + 1) * n + k] = z[k].imag();
    }
  }
}

template <class T>
void columns_transform(std::complex<T>* data, std::size_t rows, std::size_t cols, bool inverse) {
  // Columns are gathered kBlock at a time so each row read touches whole
  // cache lines instead of one element per line.
  constexpr std::size_t kBlock = 16;
  const auto plan = fft_plan<T>(rows);
  std::vector<std::complex<T>> lines(kBlock * rows);
  for (std::size_t c0 = 0; c0 < cols; c0 += kBlock) {
    const std::size_t nb = std::min(kBlock, cols - c0);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::complex<T>* src = data + r * cols + c0;
      for (std::size_t j = 0; j < nb; ++j) lines[j * rows + r] = src[j];
    }
    for (std::size_t j = 0; j < nb; ++j) {
      const std::span<std::complex<T>> line(lines.data() + j * rows, rows);
      inverse ? plan->inverse(line) : plan->forward(line);
    }
    for (std::size_t r = 0; r < rows; ++r) {
      std::complex<T>* dst = data + r * cols + c0;
      for (std::size_t j = 0; j < nb; ++j) dst[j] = lines[j * rows + r];
    }
  }
}

}  // namespace

template <class T>
std::vector<std::complex<T>> rfft(std::span<const T> x, std::size_t n) {
  std::vector<T> padded(n, T(0));
  std::copy_n(x.begin(), std::min(n, x.size()), padded.begin());
  std::vector<std::complex<T>> out(n / 2 + 1);
  real_rows_forward(padded.data(), 1, n, out.data());
  return out;
}

template <class T>
std::vector<T> irfft(std::span<const std::complex<T>> spectrum, std::size_t n) {
  if (spectrum.size() != n / 2 + 1) {
    throw ShapeError("irfft: spectrum of length " + std::to_string(spectrum.size()) +
                     " cannot produce " + std::to_string(n) + " samples");
  }
  std::vector<T> out(n);
  real_rows_inverse(spectrum.data(), 1, n, out.data());
  return out;
}

template <class T>
ComplexTensor<T> rfft2(const Tensor<T>& x) {
  if (x.rank() < 2) throw ShapeError("rfft2 needs rank >= 2, got " + to_string(x.shape()));
  const std::size_t h = x.extent(-2), w = x.extent(-1), half = w / 2 + 1;
  const std::size_t batch = x.size() / (h * w);
  Shape shape = x.shape();
  shape.back() = half;
  ComplexTensor<T> out(shape);
  for (std::size_t b = 0; b < batch; ++b) {
    std::complex<T>* dst = out.data().data() + b * h * half;
    real_rows_forward(x.data().data() + b * h * w, h, w, dst);
    columns_transform(dst, h, half, false);
  }
  return out;
}

template <class T>
Tensor<T> irfft2(const ComplexTensor<T>& spectrum, std::pair<std::size_t, std::size_t> out_extents) {
  const auto [h, w] = out_extents;
  if (spectrum.rank() < 2 || h == 0 || w == 0 || spectrum.extent(-2) != h ||
      spectrum.extent(-1) != w / 2 + 1) {
    throw ShapeError("irfft2: spectrum " + to_string(spectrum.shape()) +
                     " is inconsistent with output extents (" + std::to_string(h) + ", " +
                     std::to_string(w) + ")");
  }
  const std::size_t half = w / 2 + 1;
  const std::size_t batch = spectrum.size() / (h * half);
  Shape shape = spectrum.shape();
  shape.back() = w;
  Tensor<T> out(shape);
  std::vector<std::complex<T>> work(h * half);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::complex<T>* src = spectrum.data().data() + b * h * half;
    std::copy_n(src, h * half, work.begin());
    columns_transform(work.data(), h, half, true);
    real_rows_inverse(work.data(), h, w, out.data().data() + b * h * w);
  }
  return out;
}

#define SPECTRAL_OPS_INSTANTIATE(T)                                                             \
  template class FftPlan<T>;                                                                    \
  template std::shared_ptr<const FftPlan<T>> fft_plan<T>(std::size_t);                          \
  template ComplexTensor<T> dft_naive<T>(const ComplexTensor<T>&);                              \
  template ComplexTensor<T> fft_axis<T>(const ComplexTensor<T>&, int, bool);                    \
  template std::vector<std::complex<T>> rfft<T>(std::span<const T>, std::size_t);               \
  template std::vector<T> irfft<T>(std::span<const std::complex<T>>, std::size_t);              \
  template ComplexTensor<T> rfft2<T>(const Tensor<T>&);                                         \
  template Tensor<T> irfft2<T>(const ComplexTensor<T>&, std::pair<std::size_t, std::size_t>);

SPECTRAL_OPS_INSTANTIATE(float)
SPECTRAL_OPS_INSTANTIATE(double)

#undef SPECTRAL_OPS_INSTANTIATE

}  // namespace spectral_ops
