#include "spectral_ops/fftconv.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spectral_ops/rng.hpp"
#include "spectral_ops/spectral.hpp"

namespace spectral_ops {

std::string_view to_string(ConvMode mode) {
  switch (mode) {
    case ConvMode::full: return "full";
    case ConvMode::same: return "same";
    case ConvMode::valid: return "valid";
    case ConvMode::circular: return "circular";
  }
  return "?";
}

ConvMode parse_conv_mode(std::string_view name) {
  for (auto m : {ConvMode::full, ConvMode::same, ConvMode::valid, ConvMode::circular}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown convolution mode '" + std::string(name) + "'");
}

namespace {

struct Geometry {
  std::size_t channels, h, w, kh, kw;
};

template <class T>
Geometry check_pair(const Tensor<T>& image, const Tensor<T>& kernel) {
  if (image.rank() != 3 || kernel.rank() != 3) {
    throw ShapeError("expected image [C, H, W] and kernel [C, Kh, Kw], got " +
                     to_string(image.shape()) + " and " + to_string(kernel.shape()));
  }
  if (image.extent(0) != kernel.extent(0)) {
    throw ShapeError("channel mismatch: image has " + std::to_string(image.extent(0)) +
                     ", kernel has " + std::to_string(kernel.extent(0)));
  }
  return {image.extent(0), image.extent(1), image.extent(2), kernel.extent(1), kernel.extent(2)};
}

template <class T>
Geometry check(const ConvOperands<T>& ops, ConvMode mode) {
  const Geometry g = check_pair(ops.image, ops.kernel);
  if (ops.bias && ops.bias->shape() != Shape{g.channels}) {
    throw ShapeError("bias must have shape [" + std::to_string(g.channels) + "], got " +
                     to_string(ops.bias->shape()));
  }
  if ((mode == ConvMode::valid || mode == ConvMode::circular) && (g.kh > g.h || g.kw > g.w)) {
    throw ShapeError("kernel " + std::to_string(g.kh) + "x" + std::to_string(g.kw) +
                     " larger than image " + std::to_string(g.h) + "x" + std::to_string(g.w) +
                     " in " + std::string(to_string(mode)) + " mode");
  }
  return g;
}

// Offset of output index 0 relative to image index 0, per axis.
std::size_t anchor(ConvMode mode, std::size_t k) {
  switch (mode) {
    case ConvMode::full: return k - 1;
    case ConvMode::same: return (k - 1) / 2;
    default: return 0;
  }
}

std::size_t out_extent(ConvMode mode, std::size_t n, std::size_t k) {
  switch (mode) {
    case ConvMode::full: return n + k - 1;
    case ConvMode::valid: return n - k + 1;
    default: return n;
  }
}

template <class T>
void add_bias(Tensor<T>& out, const std::optional<Tensor<T>>& bias) {
  if (!bias) return;
  const std::size_t plane = out.extent(1) * out.extent(2);
  for (std::size_t c = 0; c < out.extent(0); ++c) {
    T* p = out.data().data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) p[i] += (*bias)[c];
  }
}

// Zero-pads each [H, W] plane at the bottom/right to [ph, pw].
template <class T>
Tensor<T> pad_planes(const Tensor<T>& x, std::size_t ph, std::size_t pw) {
  const std::size_t c = x.extent(0), h = x.extent(1), w = x.extent(2);
  Tensor<T> out = Tensor<T>::filled({c, ph, pw}, T(0));
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h; ++y) {
      std::copy_n(&x.at(ch, y, 0), w, &out.at(ch, y, 0));
    }
  }
  return out;
}

// Inverse transform of image_spectrum * kernel_spectrum on a [C, ph, pw] grid.
template <class T>
Tensor<T> spectral_product(const Tensor<T>& image, const Tensor<T>& kernel, std::size_t ph,
                           std::size_t pw, bool conjugate_kernel, const SpectrumHook<T>* hook) {
  auto image_ft = rfft2(pad_planes(image, ph, pw));
  auto kernel_ft = rfft2(pad_planes(kernel, ph, pw));
  if (conjugate_kernel) {
    for (auto& v : kernel_ft.data()) v.imag(-v.imag());
  }
  if (hook && *hook) (*hook)(kernel_ft);
  for (std::size_t i = 0; i < image_ft.size(); ++i) image_ft[i] = cmul(image_ft[i], kernel_ft[i]);
  return irfft2(image_ft, {ph, pw});
}

}  // namespace

template <class T>
std::pair<std::size_t, std::size_t> conv_output_extents(const ConvOperands<T>& ops, ConvMode mode) {
  const Geometry g = check(ops, mode);
  return {out_extent(mode, g.h, g.kh), out_extent(mode, g.w, g.kw)};
}

template <class T>
Tensor<T> direct_xcorr2d(const ConvOperands<T>& ops, ConvMode mode) {
  const Geometry g = check(ops, mode);
  const std::size_t ho = out_extent(mode, g.h, g.kh), wo = out_extent(mode, g.w, g.kw);
  Tensor<T> out = Tensor<T>::filled({g.channels, ho, wo}, T(0));

  if (mode == ConvMode::circular) {
    for (std::size_t c = 0; c < g.channels; ++c) {
      for (std::size_t y = 0; y < ho; ++y) {
        for (std::size_t x = 0; x < wo; ++x) {
          T acc = 0;
          for (std::size_t i = 0; i < g.kh; ++i) {
            for (std::size_t j = 0; j < g.kw; ++j) {
              acc += ops.image.at(c, (y + i) % g.h, (x + j) % g.w) * ops.kernel.at(c, i, j);
            }
          }
          out.at(c, y, x) = acc;
        }
      }
    }
    add_bias(out, ops.bias);
    return out;
  }

  // out[y][x] += k[i][j] * image[y + i - ay][x + j - ax], one kernel tap at a time.
  const auto ay = static_cast<std::ptrdiff_t>(anchor(mode, g.kh));
  const auto ax = static_cast<std::ptrdiff_t>(anchor(mode, g.kw));
  const auto h = static_cast<std::ptrdiff_t>(g.h), w = static_cast<std::ptrdiff_t>(g.w);
  const auto wo_s = static_cast<std::ptrdiff_t>(wo);
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        const T kv = ops.kernel.at(c, i, j);
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(j) - ax;
        const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
        const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(wo_s, w - dx);
        if (x0 >= x1) continue;
        for (std::size_t y = 0; y < ho; ++y) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + i) - ay;
          if (sy < 0 || sy >= h) continue;
          T* dst = &out.at(c, y, 0);
          const T* src = &ops.image.at(c, static_cast<std::size_t>(sy), 0);
          for (std::ptrdiff_t x = x0; x < x1; ++x) dst[x] += kv * src[x + dx];
        }
      }
    }
  }
  add_bias(out, ops.bias);
  return out;
}

template <class T>
Tensor<T> fft_xcorr2d(const ConvOperands<T>& ops, ConvMode mode, const SpectrumHook<T>& hook) {
  const Geometry g = check(ops, mode);
  const bool circular = mode == ConvMode::circular;
  const std::size_t ph = circular ? g.h : next_fast_length(g.h + g.kh - 1);
  const std::size_t pw = circular ? g.w : next_fast_length(g.w + g.kw - 1);
  const Tensor<T> lags = spectral_product(ops.image, ops.kernel, ph, pw, true, &hook);

  // lags[s] = sum_i k[i] * image[i + s] with s taken mod the padded extent.
  const std::size_t ho = out_extent(mode, g.h, g.kh), wo = out_extent(mode, g.w, g.kw);
  const std::size_t ay = anchor(mode, g.kh), ax = anchor(mode, g.kw);
  Tensor<T> out({g.channels, ho, wo});
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t y = 0; y < ho; ++y) {
      const std::size_t sy = (y + ph - ay) % ph;
      for (std::size_t x = 0; x < wo; ++x) {
        out.at(c, y, x) = lags.at(c, sy, (x + pw - ax) % pw);
      }
    }
  }
  add_bias(out, ops.bias);
  return out;
}

template <class T>
Tensor<T> fft_xcorr2d(const ConvOperands<T>& ops, ConvMode mode) {
  return fft_xcorr2d(ops, mode, SpectrumHook<T>{});
}

template <class T>
Tensor<T> fft_conv2d_full(const ConvOperands<T>& ops) {
  const Geometry g = check(ops, ConvMode::full);
  const std::size_t ho = g.h + g.kh - 1, wo = g.w + g.kw - 1;
  const Tensor<T> prod =
      spectral_product(ops.image, ops.kernel, next_fast_length(ho), next_fast_length(wo), false,
                       static_cast<const SpectrumHook<T>*>(nullptr));
  Tensor<T> out({g.channels, ho, wo});
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t y = 0; y < ho; ++y) std::copy_n(&prod.at(c, y, 0), wo, &out.at(c, y, 0));
  }
  add_bias(out, ops.bias);
  return out;
}

template <class T>
Tensor<T> direct_conv2d_full(const ConvOperands<T>& ops) {
  const Geometry g = check(ops, ConvMode::full);
  const std::size_t ho = g.h + g.kh - 1, wo = g.w + g.kw - 1;
  Tensor<T> out = Tensor<T>::filled({g.channels, ho, wo}, T(0));
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t y = 0; y < g.h; ++y) {
      for (std::size_t x = 0; x < g.w; ++x) {
        const T v = ops.image.at(c, y, x);
        for (std::size_t i = 0; i < g.kh; ++i) {
          for (std::size_t j = 0; j < g.kw; ++j) out.at(c, y + i, x + j) += v * ops.kernel.at(c, i, j);
        }
      }
    }
  }
  add_bias(out, ops.bias);
  return out;
}

template <class T>
Tensor<T> fft_circular_conv2d(const Tensor<T>& image, const Tensor<T>& kernel) {
  const Geometry g = check_pair(image, kernel);
  if (g.kh > g.h || g.kw > g.w) {
    throw ShapeError("circular convolution kernel must fit inside the image");
  }
  return spectral_product(image, kernel, g.h, g.w, false,
                          static_cast<const SpectrumHook<T>*>(nullptr));
}

template <class T>
Tensor<T> direct_circular_conv2d(const Tensor<T>& image, const Tensor<T>& kernel) {
  const Geometry g = check_pair(image, kernel);
  if (g.kh > g.h || g.kw > g.w) {
    throw ShapeError("circular convolution kernel must fit inside the image");
  }
  Tensor<T> out = Tensor<T>::filled({g.channels, g.h, g.w}, T(0));
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t y = 0; y < g.h; ++y) {
      for (std::size_t x = 0; x < g.w; ++x) {
        T acc = 0;
        for (std::size_t i = 0; i < g.kh; ++i) {
          for (std::size_t j = 0; j < g.kw; ++j) {
            acc += image.at(c, (y + g.h - i) % g.h, (x + g.w - j) % g.w) * kernel.at(c, i, j);
          }
        }
        out.at(c, y, x) = acc;
      }
    }
  }
  return out;
}

template <class T>
Tensor<T> flip_spatial(const Tensor<T>& kernel) {
  if (kernel.rank() != 3) throw ShapeError("flip_spatial expects [C, Kh, Kw]");
  const std::size_t c = kernel.extent(0), kh = kernel.extent(1), kw = kernel.extent(2);
  Tensor<T> out(kernel.shape());
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < kh; ++i) {
      for (std::size_t j = 0; j < kw; ++j) out.at(ch, i, j) = kernel.at(ch, kh - 1 - i, kw - 1 - j);
    }
  }
  return out;
}

namespace {

template <class T>
void bench_conv_cell(std::size_t n, std::size_t m, int repeats, std::uint64_t seed,
                     std::vector<BenchRow>& rows) {
  Rng rng(seed ^ (n << 20) ^ m);
  ConvOperands<T> ops{randn<T>(rng, {1, n, n}), randn<T>(rng, {1, m, m}), std::nullopt};

  const Tensor<T> direct = direct_xcorr2d(ops, ConvMode::same);
  const Tensor<T> spectral = fft_xcorr2d(ops, ConvMode::same);
  double scale = 1.0;
  for (T v : direct.data()) scale = std::max(scale, static_cast<double>(std::abs(v)));
  const double tol = (std::is_same_v<T, float> ? 1e-3 : 1e-9) * scale;
  const double err = max_abs_diff(direct, spectral);
  if (!(err <= tol)) {
    throw Error("bench_conv guard: fft and direct outputs differ by " + std::to_string(err) +
                " at n=" + std::to_string(n) + " m=" + std::to_string(m));
  }

  const std::string params = "n=" + std::to_string(n) + " m=" + std::to_string(m);
  Tensor<T> last;
  auto t_direct = time_median([&] { last = direct_xcorr2d(ops, ConvMode::same); }, repeats);
  rows.push_back({"conv", params, "direct", t_direct.median_ms, repeats, static_cast<double>(last[0])});
  auto t_fft = time_median([&] { last = fft_xcorr2d(ops, ConvMode::same); }, repeats);
  rows.push_back({"conv", params, "fft", t_fft.median_ms, repeats, static_cast<double>(last[0])});
}

}  // namespace

std::vector<BenchRow> bench_conv(std::span<const std::size_t> image_sizes,
                                 std::span<const std::size_t> kernel_sizes, int repeats,
                                 DType dtype, std::uint64_t seed) {
  if (repeats < 1) throw ConfigError("repeats must be at least 1");
  std::vector<std::size_t> ns(image_sizes.begin(), image_sizes.end());
  std::vector<std::size_t> ms(kernel_sizes.begin(), kernel_sizes.end());
  for (auto v : ns) if (v == 0) throw ConfigError("image sizes must be positive");
  for (auto v : ms) if (v == 0) throw ConfigError("kernel sizes must be positive");
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  std::sort(ms.begin(), ms.end());
  ms.erase(std::unique(ms.begin(), ms.end()), ms.end());

  std::vector<BenchRow> rows;
  for (auto n : ns) {
    for (auto m : ms) {
      if (dtype == DType::f32) {
        bench_conv_cell<float>(n, m, repeats, seed, rows);
      } else {
        bench_conv_cell<double>(n, m, repeats, seed, rows);
      }
    }
  }
  return rows;
}

#define SPECTRAL_OPS_INSTANTIATE(T)                                                               \
  template std::pair<std::size_t, std::size_t> conv_output_extents<T>(const ConvOperands<T>&,     \
                                                                      ConvMode);                  \
  template Tensor<T> direct_xcorr2d<T>(const ConvOperands<T>&, ConvMode);                         \
  template Tensor<T> fft_xcorr2d<T>(const ConvOperands<T>&, ConvMode);                            \
  template Tensor<T> fft_xcorr2d<T>(const ConvOperands<T>&, ConvMode, const SpectrumHook<T>&);    \
  template Tensor<T> fft_conv2d_full<T>(const ConvOperands<T>&);                                  \
  template Tensor<T> direct_conv2d_full<T>(const ConvOperands<T>&);                               \
  template Tensor<T> fft_circular_conv2d<T>(const Tensor<T>&, const Tensor<T>&);                  \
  template Tensor<T> direct_circular_conv2d<T>(const Tensor<T>&, const Tensor<T>&);               \
  template Tensor<T> flip_spatial<T>(const Tensor<T>&);

SPECTRAL_OPS_INSTANTIATE(float)
SPECTRAL_OPS_INSTANTIATE(double)

#undef SPECTRAL_OPS_INSTANTIATE

}  // namespace spectral_ops
