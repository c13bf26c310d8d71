#include "spectral_ops/bench.hpp"

#include <cstdio>
#include <ostream>

namespace spectral_ops {

void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << kBenchCsvHeader << '\n';
  char num[64];
  for (const auto& r : rows) {
    os << r.suite << ',' << r.params << ',' << r.method << ',';
    std::snprintf(num, sizeof num, "%.6f", r.median_ms);
    os << num << ',' << r.repeats << ',';
    std::snprintf(num, sizeof num, "%.9g", r.checksum);
    os << num << '\n';
  }
}

double find_median_ms(const std::vector<BenchRow>& rows, const std::string& params,
                      const std::string& method) {
  for (const auto& r : rows) {
    if (r.params == params && r.method == method) return r.median_ms;
  }
  throw Error("no benchmark row for params '" + params + "' method '" + method + "'");
}

}  // namespace spectral_ops
