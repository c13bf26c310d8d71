#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

#include "spectral_ops/rng.hpp"
#include "spectral_ops/tensor.hpp"

namespace spectral_ops {

/// `as_written` keeps the all-positive HiPPO-LegS matrix exactly as the
/// formula states; `negated` uses -A, whose kernels decay.
enum class SignConvention { as_written, negated };

std::string_view to_string(SignConvention sign);
SignConvention parse_sign_convention(std::string_view name);

/// Continuous state-space system x' = A x + B u, y = C x (no feedthrough).
struct SsmParams {
  std::size_t state_dim = 0;
  Tensor<double> a;                 // [N, N]
  Tensor<double> b;                 // [N]
  std::optional<Tensor<double>> c;  // [N], unset until chosen
  SignConvention sign = SignConvention::negated;
};

/// HiPPO-LegS matrices, 0-indexed:
///   A[n][k] = sqrt(2n+1) sqrt(2k+1) for n > k, n + 1 for n == k, 0 for n < k
///   B[n]    = sqrt(2n+1)
/// `negated` flips the sign of A only.
SsmParams hippo_legs(std::size_t n, SignConvention sign = SignConvention::negated);

/// C drawn from N(0, 1) / sqrt(N).
Tensor<double> random_output_map(std::size_t n, Rng& rng);

/// e^M by scaling and squaring around a truncated Taylor series.
Tensor<double> matrix_exp(const Tensor<double>& m);

/// K[t] = C (e^A)^t B for t = 0..L-1, stepping with a single e^A.
Tensor<double> ssm_kernel(const SsmParams& params, std::size_t length);

/// y[t] = sum_{s <= t} K[s] u[t - s]. Both sequences are zero-padded to at
/// least 2L - 1 so the spectral product has no wrap-around, then truncated
/// to L.
Tensor<double> causal_fft_conv(const Tensor<double>& kernel, const Tensor<double>& u);

}  // namespace spectral_ops
