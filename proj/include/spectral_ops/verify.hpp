#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spectral_ops/fftconv.hpp"

namespace spectral_ops {

struct CheckResult {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckResult> checks;

  bool passed() const;
  double max_error() const;
};

using XcorrFn = std::function<Tensor<double>(const ConvOperands<double>&, ConvMode)>;

struct VerifyOptions {
  std::uint64_t seed = 20240611;
  /// Implementation checked by the fftconv suite; defaults to fft_xcorr2d.
  XcorrFn fft_xcorr;
};

/// Suite names in execution order.
const std::vector<std::string>& verify_suite_names();

/// Runs every suite, or only `filter`. Throws ConfigError for an unknown name.
std::vector<SuiteReport> run_verify(const std::optional<std::string>& filter,
                                    const VerifyOptions& options = {});

/// One line per check plus a per-suite summary line.
void print_reports(std::ostream& os, const std::vector<SuiteReport>& reports);

}  // namespace spectral_ops
