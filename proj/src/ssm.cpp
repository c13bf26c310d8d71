#include "spectral_ops/ssm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spectral_ops/spectral.hpp"

namespace spectral_ops {

std::string_view to_string(SignConvention sign) {
  return sign == SignConvention::negated ? "negated" : "as_written";
}

SignConvention parse_sign_convention(std::string_view name) {
  if (name == "negated") return SignConvention::negated;
  if (name == "as_written") return SignConvention::as_written;
  throw ConfigError("unknown sign convention '" + std::string(name) + "'");
}

SsmParams hippo_legs(std::size_t n, SignConvention sign) {
  if (n == 0) throw ConfigError("state dimension must be at least 1");
  SsmParams p;
  p.state_dim = n;
  p.sign = sign;
  p.a = Tensor<double>::filled({n, n}, 0.0);
  p.b = Tensor<double>({n});
  const double s = sign == SignConvention::negated ? -1.0 : 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ri = std::sqrt(2.0 * static_cast<double>(i) + 1.0);
    for (std::size_t k = 0; k < i; ++k) {
      p.a.at(i, k) = s * ri * std::sqrt(2.0 * static_cast<double>(k) + 1.0);
    }
    p.a.at(i, i) = s * static_cast<double>(i + 1);
    p.b[i] = ri;
  }
  return p;
}

Tensor<double> random_output_map(std::size_t n, Rng& rng) {
  Tensor<double> c = randn<double>(rng, {n});
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& v : c.data()) v *= scale;
  return c;
}

namespace {

Tensor<double> matmul(const Tensor<double>& x, const Tensor<double>& y) {
  const std::size_t n = x.extent(0);
  Tensor<double> out = Tensor<double>::filled({n, n}, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const double v = x.at(i, k);
      for (std::size_t j = 0; j < n; ++j) out.at(i, j) += v * y.at(k, j);
    }
  }
  return out;
}

std::vector<double> matvec(const Tensor<double>& m, const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += m.at(i, k) * v[k];
    out[i] = acc;
  }
  return out;
}

double norm_inf(const Tensor<double>& m) {
  double best = 0.0;
  for (std::size_t i = 0; i < m.extent(0); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < m.extent(1); ++j) row += std::abs(m.at(i, j));
    best = std::max(best, row);
  }
  return best;
}

}  // namespace

Tensor<double> matrix_exp(const Tensor<double>& m) {
  if (m.rank() != 2 || m.extent(0) != m.extent(1)) {
    throw ShapeError("matrix_exp expects a square matrix, got " + to_string(m.shape()));
  }
  const std::size_t n = m.extent(0);

  // Scale so the series argument has norm <= 1/2; 20 terms then leave a
  // remainder below 2^-20 / 20!, far under double epsilon.
  int squarings = 0;
  const double norm = norm_inf(m);
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  Tensor<double> scaled = m;
  const double factor = std::ldexp(1.0, -squarings);
  for (auto& v : scaled.data()) v *= factor;

  Tensor<double> result = Tensor<double>::filled({n, n}, 0.0);
  for (std::size_t i = 0; i < n; ++i) result.at(i, i) = 1.0;
  // Horner form: I + X (I + X/2 (I + X/3 (...)))
  constexpr int kTerms = 20;
  for (int k = kTerms; k >= 1; --k) {
    Tensor<double> next = matmul(scaled, result);
    for (auto& v : next.data()) v /= k;
    for (std::size_t i = 0; i < n; ++i) next.at(i, i) += 1.0;
    result = std::move(next);
  }
  for (int s = 0; s < squarings; ++s) result = matmul(result, result);
  return result;
}

Tensor<double> ssm_kernel(const SsmParams& params, std::size_t length) {
  if (length == 0) throw ConfigError("kernel length must be at least 1");
  if (!params.c) throw ConfigError("ssm_kernel: output map C is unset");
  const std::size_t n = params.state_dim;
  if (params.a.shape() != Shape{n, n} || params.b.shape() != Shape{n} ||
      params.c->shape() != Shape{n}) {
    throw ShapeError("ssm_kernel: A, B, C inconsistent with state dimension " + std::to_string(n));
  }
  const Tensor<double> step = matrix_exp(params.a);
  std::vector<double> state(params.b.data().begin(), params.b.data().end());
  Tensor<double> k({length});
  for (std::size_t t = 0; t < length; ++t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += (*params.c)[i] * state[i];
    k[t] = acc;
    if (t + 1 < length) state = matvec(step, state);
  }
  return k;
}

Tensor<double> causal_fft_conv(const Tensor<double>& kernel, const Tensor<double>& u) {
  if (kernel.rank() != 1 || u.rank() != 1 || kernel.size() != u.size()) {
    throw ShapeError("causal_fft_conv: kernel " + to_string(kernel.shape()) + " and input " +
                     to_string(u.shape()) + " must be rank-1 of equal length");
  }
  const std::size_t l = u.size();
  const std::size_t n = next_fast_length(2 * l - 1);
  auto kf = rfft<double>(kernel.data(), n);
  const auto uf = rfft<double>(u.data(), n);
  for (std::size_t i = 0; i < kf.size(); ++i) kf[i] = cmul(kf[i], uf[i]);
  auto y = irfft<double>(kf, n);
  y.resize(l);
  return Tensor<double>({l}, std::move(y));
}

}  // namespace spectral_ops
