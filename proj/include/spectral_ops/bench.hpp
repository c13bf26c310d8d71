#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "spectral_ops/errors.hpp"

namespace spectral_ops {

/// One timed case of a benchmark sweep.
struct BenchRow {
  std::string suite;
  std::string params;  // space-separated key=value pairs
  std::string method;
  double median_ms = 0.0;
  int repeats = 1;
  double checksum = 0.0;  // first output element of the last timed run
};

inline constexpr int kDefaultRepeats = 5;

struct Timing {
  double median_ms;
  std::vector<double> samples_ms;
};

/// Runs `fn` once untimed, then `repeats` timed runs on the monotonic clock.
template <class F>
Timing time_median(F&& fn, int repeats) {
  if (repeats < 1) throw ConfigError("repeats must be at least 1");
  using clock = std::chrono::steady_clock;
  fn();
  Timing t{0.0, {}};
  t.samples_ms.reserve(static_cast<std::size_t>(repeats));
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = clock::now();
    fn();
    const auto t1 = clock::now();
    t.samples_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  auto sorted = t.samples_ms;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  t.median_ms = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return t;
}

inline constexpr const char* kBenchCsvHeader = "suite,params,method,median_ms,repeats,checksum";

void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows);

/// Looks up a median from a sweep; throws Error when the case is absent.
double find_median_ms(const std::vector<BenchRow>& rows, const std::string& params,
                      const std::string& method);

}  // namespace spectral_ops
