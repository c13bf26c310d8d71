#include "spectral_ops/verify.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numbers>
#include <ostream>

#include "spectral_ops/fit.hpp"
#include "spectral_ops/ftns.hpp"
#include "spectral_ops/gconv.hpp"
#include "spectral_ops/rng.hpp"
#include "spectral_ops/spectral.hpp"
#include "spectral_ops/ssm.hpp"

namespace spectral_ops {

bool SuiteReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

double SuiteReport::max_error() const {
  double m = 0.0;
  for (const auto& c : checks) m = std::max(m, c.max_error);
  return m;
}

namespace {

CheckResult check(std::string name, double err, double tol) {
  return {std::move(name), err, tol, std::isfinite(err) && err <= tol};
}

// Naive DFT of every line of a rank-2 tensor along `axis`.
ComplexTensor<double> naive_axis(const ComplexTensor<double>& x, int axis) {
  const std::size_t rows = x.extent(0), cols = x.extent(1);
  ComplexTensor<double> out(x.shape());
  const bool along_rows = x.resolve_axis(axis) == 1;
  const std::size_t lines = along_rows ? rows : cols, len = along_rows ? cols : rows;
  for (std::size_t l = 0; l < lines; ++l) {
    ComplexTensor<double> line({len});
    for (std::size_t k = 0; k < len; ++k) line[k] = along_rows ? x.at(l, k) : x.at(k, l);
    const auto f = dft_naive(line);
    for (std::size_t k = 0; k < len; ++k) (along_rows ? out.at(l, k) : out.at(k, l)) = f[k];
  }
  return out;
}

SuiteReport tensor_suite(const VerifyOptions& opt) {
  SuiteReport r{"tensor", {}};
  Rng rng(opt.seed);
  double mismatches = 0;
  const std::vector<Shape> shapes = {{7}, {3, 2}, {3, 2, 1}, {2, 3, 4, 5}};
  for (const auto& s : shapes) {
    const auto d = randn<double>(rng, s);
    const auto f = randn<float>(rng, s);
    const auto d2 = std::get<Tensor<double>>(decode_ftns(encode_ftns(d)));
    const auto f2 = std::get<Tensor<float>>(decode_ftns(encode_ftns(f)));
    if (d2.shape() != d.shape() || std::memcmp(d2.data().data(), d.data().data(), 8 * d.size())) {
      ++mismatches;
    }
    if (f2.shape() != f.shape() || std::memcmp(f2.data().data(), f.data().data(), 4 * f.size())) {
      ++mismatches;
    }
  }
  r.checks.push_back(check("ftns_roundtrip_bit_exact", mismatches, 0.0));

  Rng a(opt.seed), b(opt.seed);
  double diff = 0;
  for (int i = 0; i < 1000; ++i) diff += a.next_u64() != b.next_u64();
  r.checks.push_back(check("rng_equal_seed_streams", diff, 0.0));
  return r;
}

SuiteReport spectral_suite(const VerifyOptions& opt) {
  SuiteReport r{"spectral", {}};
  Rng rng(opt.seed + 1);
  double vs_naive = 0, inverse = 0, parseval = 0;
  for (std::size_t n = 1; n <= 64; ++n) {
    ComplexTensor<double> x({n});
    for (auto& v : x.data()) v = {rng.normal(), rng.normal()};
    const auto fast = fft_axis(x, 0);
    vs_naive = std::max(vs_naive, max_abs_diff(fast, dft_naive(x)));
    inverse = std::max(inverse, max_abs_diff(fft_axis(fast, 0, true), x));
    double ex = 0, ef = 0;
    for (std::size_t i = 0; i < n; ++i) {
      ex += std::norm(x[i]);
      ef += std::norm(fast[i]);
    }
    parseval = std::max(parseval, std::abs(ex - ef / static_cast<double>(n)) / ex);
  }
  r.checks.push_back(check("fft_axis_vs_dft_naive_len_1_64", vs_naive, 1e-10));
  r.checks.push_back(check("inverse_roundtrip", inverse, 1e-12));
  r.checks.push_back(check("parseval_relative", parseval, 1e-10));

  const auto real = randn<double>(rng, {4, 6});
  const auto spec = rfft2(real);
  r.checks.push_back(check("irfft2_rfft2_roundtrip", max_abs_diff(irfft2(spec, {4, 6}), real), 1e-12));
  const auto full = fft_axis(fft_axis(to_complex(real), -1), -2);
  double half = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t k = 0; k < 4; ++k) half = std::max(half, std::abs(full.at(i, k) - spec.at(i, k)));
  }
  r.checks.push_back(check("rfft2_matches_full_fft", half, 1e-12));
  return r;
}

SuiteReport fftconv_suite(const VerifyOptions& opt) {
  SuiteReport r{"fftconv", {}};
  const XcorrFn impl = opt.fft_xcorr ? opt.fft_xcorr : XcorrFn([](const auto& o, ConvMode m) {
    return fft_xcorr2d(o, m);
  });
  Rng rng(opt.seed + 2);
  double grid = 0;
  for (std::size_t c : {1, 3}) {
    for (std::size_t n = 4; n <= 32; ++n) {
      for (std::size_t m : {1, 3, 5, 7, 9}) {
        ConvOperands<double> ops{randn<double>(rng, {c, n, n}), randn<double>(rng, {c, m, m}),
                                 randn<double>(rng, {c})};
        for (auto mode : {ConvMode::full, ConvMode::same, ConvMode::valid, ConvMode::circular}) {
          if ((mode == ConvMode::valid || mode == ConvMode::circular) && m > n) continue;
          grid = std::max(grid, max_abs_diff(impl(ops, mode), direct_xcorr2d(ops, mode)));
        }
      }
    }
  }
  r.checks.push_back(check("xcorr_fft_vs_direct_grid", grid, 1e-10));

  const auto img = randn<double>(rng, {1, 6, 6});
  const auto ker = randn<double>(rng, {1, 6, 6});
  r.checks.push_back(check("circular_conv_vs_wraparound_sum",
                           max_abs_diff(fft_circular_conv2d(img, ker), direct_circular_conv2d(img, ker)),
                           1e-10));

  ConvOperands<double> ops{randn<double>(rng, {2, 11, 9}), randn<double>(rng, {2, 4, 3}), std::nullopt};
  ConvOperands<double> flipped{ops.image, flip_spatial(ops.kernel), std::nullopt};
  r.checks.push_back(check("correlation_equals_flipped_convolution",
                           max_abs_diff(impl(ops, ConvMode::full), fft_conv2d_full(flipped)), 1e-10));
  r.checks.push_back(check("fft_conv_vs_direct_conv",
                           max_abs_diff(fft_conv2d_full(ops), direct_conv2d_full(ops)), 1e-10));
  return r;
}

SuiteReport fit_suite(const VerifyOptions& opt) {
  SuiteReport r{"fit", {}};
  Rng rng(opt.seed + 3);
  const auto x = randn<double>(rng, {16, 8});
  const auto mixed = fourier_mixing(x);
  const auto oracle = real_part(naive_axis(naive_axis(to_complex(x), 1), 0));
  r.checks.push_back(check("fourier_mixing_vs_naive_dft", max_abs_diff(mixed, oracle), 1e-10));
  const auto other_order = real_part(fft_axis(fft_axis(to_complex(x), 0), 1));
  r.checks.push_back(check("fourier_mixing_axis_order", max_abs_diff(mixed, other_order), 1e-10));

  const double params = static_cast<double>(count_params(vit_base_config(Mixer::attention)));
  r.checks.push_back(check("vit_base_params_vs_86M", std::abs(params - 86e6) / 86e6, 0.02));
  const FitConfig four = vit_base_config(Mixer::fourier), attn = vit_base_config(Mixer::attention);
  const double d = static_cast<double>(four.embed_dim);
  const double delta = static_cast<double>(count_params(attn) - count_params(four));
  r.checks.push_back(check("mixer_param_difference", std::abs(delta - 12 * (4 * d * d + 4 * d)), 0.0));

  const std::vector<double> uniform(10, 0.25);
  r.checks.push_back(check("cross_entropy_uniform_ln10",
                           std::abs(cross_entropy(uniform, 3) - std::log(10.0)), 1e-12));

  const auto seq = randn<double>(rng, {9, 8});
  AttentionWeights<double> w;
  for (auto* l : {&w.query, &w.key, &w.value, &w.output}) {
    *l = Linear<double>{randn<double>(rng, {8, 8}), randn<double>(rng, {8})};
  }
  const auto probs = attention_probabilities(seq, w, 2);
  double row_err = 0;
  for (std::size_t row = 0; row < 2 * 9; ++row) {
    double sum = 0;
    for (std::size_t j = 0; j < 9; ++j) {
      const double p = probs[row * 9 + j];
      if (p < 0) row_err = std::max(row_err, -p);
      sum += p;
    }
    row_err = std::max(row_err, std::abs(sum - 1.0));
  }
  r.checks.push_back(check("attention_rows_convex", row_err, 1e-12));
  return r;
}

SuiteReport ssm_suite(const VerifyOptions& opt) {
  SuiteReport r{"ssm", {}};
  const auto p2 = hippo_legs(2, SignConvention::as_written);
  const double s3 = std::sqrt(3.0);
  const double hippo_err = std::max({std::abs(p2.a.at(0, 0) - 1), std::abs(p2.a.at(0, 1)),
                                     std::abs(p2.a.at(1, 0) - s3), std::abs(p2.a.at(1, 1) - 2),
                                     std::abs(p2.b[0] - 1), std::abs(p2.b[1] - s3)});
  r.checks.push_back(check("hippo_legs_n2_exact", hippo_err, 0.0));

  Rng rng(opt.seed + 4);
  auto p4 = hippo_legs(4, SignConvention::negated);
  p4.c = random_output_map(4, rng);
  const auto k = ssm_kernel(p4, 32);
  double kernel_err = 0;
  for (std::size_t t = 0; t < 32; ++t) {
    Tensor<double> ta = p4.a;
    for (auto& v : ta.data()) v *= static_cast<double>(t);
    const auto e = matrix_exp(ta);
    double acc = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) acc += (*p4.c)[i] * e.at(i, j) * p4.b[j];
    }
    kernel_err = std::max(kernel_err, std::abs(acc - k[t]));
  }
  r.checks.push_back(check("ssm_kernel_vs_per_step_exponential", kernel_err, 1e-8));

  const auto kk = randn<double>(rng, {33});
  const auto u = randn<double>(rng, {33});
  const auto y = causal_fft_conv(kk, u);
  double conv_err = 0;
  for (std::size_t t = 0; t < 33; ++t) {
    double acc = 0;
    for (std::size_t s = 0; s <= t; ++s) acc += kk[s] * u[t - s];
    conv_err = std::max(conv_err, std::abs(acc - y[t]));
  }
  r.checks.push_back(check("causal_fft_conv_vs_direct_sum", conv_err, 1e-10));
  return r;
}

SuiteReport gconv_suite(const VerifyOptions& opt) {
  SuiteReport r{"gconv", {}};
  Rng rng(opt.seed + 5);

  double decay_violation = 0;
  for (std::size_t width : {2, 4, 5}) {
    const auto p = random_gconv_params(width, 3, false, rng);
    double base_max = 0;
    for (double v : p.base_kernel.data()) base_max = std::max(base_max, std::abs(v));
    const std::size_t length = width * 63;  // six full segments
    const auto kernel = build_kernel(p, length);
    std::size_t start = 0;
    for (std::size_t i = 0; i < scale_count(length) && start < length; ++i) {
      const std::size_t len = std::min(width << i, length - start);
      double seg_max = 0;
      for (std::size_t t = start; t < start + len; ++t) {
        for (std::size_t c = 0; c < 3; ++c) seg_max = std::max(seg_max, std::abs(kernel.at(t, c)));
      }
      decay_violation = std::max(decay_violation, seg_max - std::ldexp(base_max, -static_cast<int>(i)));
      start += len;
    }
  }
  r.checks.push_back(check("segment_decay_bound", std::max(0.0, decay_violation), 0.0));

  double fwd_err = 0;
  for (bool bidir : {false, true}) {
    for (std::size_t l : {8, 16, 33, 64}) {
      for (std::size_t width : {2, 4}) {
        for (std::size_t depth : {1, 3}) {
          auto p = random_gconv_params(width, depth, bidir, rng);
          p.bias = randn<double>(rng, {depth});
          const auto u = randn<double>(rng, {l, depth});
          const auto y = gconv_forward(u, p);
          const auto kern = build_kernel(p, l);
          for (std::size_t c = 0; c < depth; ++c) {
            for (std::size_t t = 0; t < l; ++t) {
              double acc = p.bias[c];
              for (std::size_t s = 0; s <= t; ++s) acc += kern.at(s, c) * u.at(t - s, c);
              if (bidir) {
                for (std::size_t s = 0; t + s < l; ++s) acc += kern.at(l + s, c) * u.at(t + s, c);
              }
              fwd_err = std::max(fwd_err, std::abs(acc - y.at(t, c)));
            }
          }
        }
      }
    }
  }
  r.checks.push_back(check("gconv_forward_vs_direct_sum", fwd_err, 1e-10));

  const auto resized = bilinear_resize_1d(Tensor<double>({2, 1}, {0.0, 1.0}), 4);
  const double expect[4] = {0.0, 0.25, 0.75, 1.0};
  double resize_err = 0;
  for (int i = 0; i < 4; ++i) resize_err = std::max(resize_err, std::abs(resized[i] - expect[i]));
  r.checks.push_back(check("bilinear_resize_0_1_to_4", resize_err, 0.0));
  return r;
}

using SuiteFn = SuiteReport (*)(const VerifyOptions&);

const std::vector<std::pair<std::string, SuiteFn>>& registry() {
  static const std::vector<std::pair<std::string, SuiteFn>> suites = {
      {"tensor", tensor_suite}, {"spectral", spectral_suite}, {"fftconv", fftconv_suite},
      {"fit", fit_suite},       {"ssm", ssm_suite},           {"gconv", gconv_suite},
  };
  return suites;
}

}  // namespace

const std::vector<std::string>& verify_suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, fn] : registry()) n.push_back(name);
    return n;
  }();
  return names;
}

std::vector<SuiteReport> run_verify(const std::optional<std::string>& filter,
                                    const VerifyOptions& options) {
  if (filter) {
    const auto& names = verify_suite_names();
    if (std::find(names.begin(), names.end(), *filter) == names.end()) {
      throw ConfigError("unknown suite '" + *filter + "'");
    }
  }
  std::vector<SuiteReport> out;
  for (const auto& [name, fn] : registry()) {
    if (!filter || *filter == name) out.push_back(fn(options));
  }
  return out;
}

void print_reports(std::ostream& os, const std::vector<SuiteReport>& reports) {
  char line[256];
  for (const auto& rep : reports) {
    for (const auto& c : rep.checks) {
      std::snprintf(line, sizeof line, "  [%s] %-40s max_error=%.3e tol=%.1e\n",
                    c.passed ? "PASS" : "FAIL", c.name.c_str(), c.max_error, c.tolerance);
      os << line;
    }
    std::snprintf(line, sizeof line, "%s %s max_error=%.3e\n", rep.passed() ? "PASS" : "FAIL",
                  rep.suite.c_str(), rep.max_error());
    os << line;
  }
}

}  // namespace spectral_ops
