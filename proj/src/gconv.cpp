#include "spectral_ops/gconv.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "spectral_ops/spectral.hpp"

namespace spectral_ops {

void GConvParams::validate() const {
  if (width == 0 || depth == 0) throw ConfigError("GConv width and depth must be at least 1");
  const std::size_t rows = bidirectional ? 2 * width : width;
  if (base_kernel.shape() != Shape{rows, depth}) {
    throw ShapeError("GConv base kernel has shape " + to_string(base_kernel.shape()) +
                     ", expected " + to_string(Shape{rows, depth}));
  }
  if (bias.shape() != Shape{depth}) {
    throw ShapeError("GConv bias has shape " + to_string(bias.shape()) + ", expected [" +
                     std::to_string(depth) + "]");
  }
}

GConvParams random_gconv_params(std::size_t width, std::size_t depth, bool bidirectional,
                                Rng& rng) {
  if (width == 0 || depth == 0) throw ConfigError("GConv width and depth must be at least 1");
  GConvParams p;
  p.width = width;
  p.depth = depth;
  p.bidirectional = bidirectional;
  p.base_kernel = randn<double>(rng, {bidirectional ? 2 * width : width, depth});
  p.bias = Tensor<double>::filled({depth}, 0.0);
  p.validate();
  return p;
}

std::size_t scale_count(std::size_t length) {
  if (length == 0) throw ConfigError("sequence length must be at least 1");
  return static_cast<std::size_t>(std::bit_width(length - 1));
}

Tensor<double> bilinear_resize_1d(const Tensor<double>& segment, std::size_t new_len) {
  if (segment.rank() != 2) {
    throw ShapeError("bilinear_resize_1d expects [n, depth], got " + to_string(segment.shape()));
  }
  if (new_len == 0) throw ShapeError("bilinear_resize_1d: new length must be at least 1");
  const std::size_t n = segment.extent(0), depth = segment.extent(1);
  Tensor<double> out({new_len, depth});
  const double ratio = static_cast<double>(n) / static_cast<double>(new_len);
  const double hi = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < new_len; ++i) {
    const double src = std::clamp((static_cast<double>(i) + 0.5) * ratio - 0.5, 0.0, hi);
    const auto lo = static_cast<std::size_t>(std::floor(src));
    const std::size_t up = std::min(lo + 1, n - 1);
    const double frac = src - static_cast<double>(lo);
    for (std::size_t c = 0; c < depth; ++c) {
      const double a = segment.at(lo, c), b = segment.at(up, c);
      out.at(i, c) = frac == 0.0 ? a : a + frac * (b - a);
    }
  }
  return out;
}

Tensor<double> direction_base(const GConvParams& params, bool backward) {
  params.validate();
  if (backward && !params.bidirectional) {
    throw ConfigError("unidirectional GConv has no backward kernel");
  }
  const std::size_t rows = params.width * params.depth;
  const auto first = params.base_kernel.data().begin() + (backward ? rows : 0);
  return Tensor<double>({params.width, params.depth}, std::vector<double>(first, first + rows));
}

namespace {

Tensor<double> multiscale(const Tensor<double>& base, std::size_t width, std::size_t length) {
  const std::size_t depth = base.extent(1);
  if (length == 1) return bilinear_resize_1d(base, 1);

  const std::size_t scales = scale_count(length);
  const std::size_t total = width * ((std::size_t{1} << scales) - 1);
  if (total < length) {
    throw ConfigError("GConv segments cover only " + std::to_string(total) + " of " +
                      std::to_string(length) + " positions; use a base width of at least " +
                      std::to_string((length + (std::size_t{1} << scales) - 2) /
                                     ((std::size_t{1} << scales) - 1)));
  }
  Tensor<double> out({length, depth});
  std::size_t filled = 0;
  for (std::size_t i = 0; i < scales && filled < length; ++i) {
    Tensor<double> scaled = base;
    const double decay = std::ldexp(1.0, -static_cast<int>(i));
    for (auto& v : scaled.data()) v *= decay;
    const Tensor<double> seg = bilinear_resize_1d(scaled, width << i);
    const std::size_t take = std::min(seg.extent(0), length - filled);
    std::copy_n(seg.data().data(), take * depth, &out.at(filled, 0));
    filled += take;
  }
  return out;
}

}  // namespace

Tensor<double> build_kernel(const GConvParams& params, std::size_t length) {
  params.validate();
  if (length == 0) throw ConfigError("sequence length must be at least 1");
  if (length < params.width) {
    throw ConfigError("sequence length " + std::to_string(length) + " shorter than base width " +
                      std::to_string(params.width));
  }
  const Tensor<double> forward = multiscale(direction_base(params, false), params.width, length);
  if (!params.bidirectional) return forward;

  const Tensor<double> backward = multiscale(direction_base(params, true), params.width, length);
  std::vector<double> both(forward.vec());
  both.insert(both.end(), backward.vec().begin(), backward.vec().end());
  return Tensor<double>({2 * length, params.depth}, std::move(both));
}

Tensor<double> gconv_forward(const Tensor<double>& signal, const GConvParams& params) {
  params.validate();
  if (signal.rank() != 2 || signal.extent(1) != params.depth) {
    throw ShapeError("gconv_forward: signal " + to_string(signal.shape()) + " needs shape [L, " +
                     std::to_string(params.depth) + "]");
  }
  const std::size_t l = signal.extent(0), depth = params.depth;
  const Tensor<double> kernel = build_kernel(params, l);

  // Kernel taps laid out by lag, lag 0 at index `origin`. The linear
  // convolution's entries [origin, origin + L) are the outputs.
  const std::size_t origin = params.bidirectional ? l - 1 : 0;
  const std::size_t taps = params.bidirectional ? 2 * l - 1 : l;
  const std::size_t n = next_fast_length(l + taps - 1);

  Tensor<double> out({l, depth});
  std::vector<double> k(taps), u(l);
  for (std::size_t c = 0; c < depth; ++c) {
    std::fill(k.begin(), k.end(), 0.0);
    for (std::size_t s = 0; s < l; ++s) k[origin + s] += kernel.at(s, c);
    if (params.bidirectional) {
      for (std::size_t s = 0; s < l; ++s) k[origin - s] += kernel.at(l + s, c);
    }
    for (std::size_t t = 0; t < l; ++t) u[t] = signal.at(t, c);

    auto kf = rfft<double>(k, n);
    const auto uf = rfft<double>(u, n);
    for (std::size_t i = 0; i < kf.size(); ++i) kf[i] = cmul(kf[i], uf[i]);
    const auto y = irfft<double>(kf, n);
    for (std::size_t t = 0; t < l; ++t) out.at(t, c) = y[origin + t] + params.bias[c];
  }
  return out;
}

}  // namespace spectral_ops
