#pragma once

#include <complex>
#include <cstdio>
#include <cstdlib>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "spectral_ops/rng.hpp"
#include "spectral_ops/tensor.hpp"

namespace testing {

namespace so = spectral_ops;

inline so::Tensor<double> random_tensor(std::uint64_t seed, const so::Shape& shape) {
  so::Rng rng(seed);
  return so::randn<double>(rng, shape);
}

inline so::ComplexTensor<double> random_complex(std::uint64_t seed, const so::Shape& shape) {
  so::Rng rng(seed);
  so::ComplexTensor<double> out(shape);
  for (auto& v : out.data()) {
    const double re = rng.normal();
    v = {re, rng.normal()};
  }
  return out;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("spectral_ops_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

struct CommandResult {
  int status = -1;
  std::string out;
};

/// Runs `cmd` through the shell, capturing stdout. stderr is discarded.
inline CommandResult run_command(const std::string& cmd) {
  CommandResult r;
  FILE* pipe = ::popen((cmd + " 2>/dev/null").c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int raw = ::pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

/// Path of the command-line tool: the build-time definition, else the
/// SPECTRAL_OPS_CLI_PATH environment variable.
inline std::string cli_path() {
#ifdef SPECTRAL_OPS_CLI_PATH
  return SPECTRAL_OPS_CLI_PATH;
#endif
  const char* p = std::getenv("SPECTRAL_OPS_CLI_PATH");
  return p ? p : "";
}

}  // namespace testing
