// spectral_ops command-line tool: verification suites, benchmark sweeps and
// demo forward passes.
//
// Exit status: 0 success, 1 runtime or I/O failure, 2 usage error.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "spectral_ops/fftconv.hpp"
#include "spectral_ops/fit.hpp"
#include "spectral_ops/ftns.hpp"
#include "spectral_ops/verify.hpp"

namespace so = spectral_ops;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t demo_seed() {
  const char* env = std::getenv("SPECTRAL_OPS_SEED");
  if (!env || !*env) return 42;
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(env, &pos);
    if (pos == std::string(env).size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError(std::string("SPECTRAL_OPS_SEED is not an unsigned integer: ") + env);
}

so::DType parse_dtype(const std::string& s) {
  if (s == "f32") return so::DType::f32;
  if (s == "f64") return so::DType::f64;
  throw UsageError("unknown dtype '" + s + "' (expected f32 or f64)");
}

int emit_csv(const std::vector<so::BenchRow>& rows, const std::string& out) {
  if (out.empty() || out == "-") {
    so::write_bench_csv(std::cout, rows);
    return kExitOk;
  }
  std::ofstream f(out, std::ios::trunc);
  if (!f) {
    std::cerr << "error: cannot open " << out << " for writing\n";
    return kExitFailure;
  }
  so::write_bench_csv(f, rows);
  f.flush();
  if (!f) {
    std::cerr << "error: failed writing " << out << '\n';
    return kExitFailure;
  }
  std::cerr << "wrote " << rows.size() << " rows to " << out << '\n';
  return kExitOk;
}

int cmd_verify(const std::string& suite) {
  std::optional<std::string> filter;
  if (!suite.empty()) filter = suite;
  const auto& names = so::verify_suite_names();
  if (filter && std::find(names.begin(), names.end(), *filter) == names.end()) {
    std::string known;
    for (const auto& n : names) known += (known.empty() ? "" : ", ") + n;
    throw UsageError("unknown suite '" + *filter + "' (known: " + known + ")");
  }
  const auto reports = so::run_verify(filter);
  so::print_reports(std::cout, reports);
  bool ok = true;
  for (const auto& r : reports) ok = ok && r.passed();
  std::cout << (ok ? "all suites passed" : "verification FAILED") << '\n';
  return ok ? kExitOk : kExitFailure;
}

int cmd_demo(const std::string& model_dir, const std::string& input) {
  const auto [config, model] = so::load_model(model_dir);
  const auto image = so::read_tensor_as<double>(input);
  if (image.shape() != so::Shape{config.in_chans, config.img_h, config.img_w}) {
    throw so::ConfigError("input " + so::to_string(image.shape()) + " does not match model image [" +
                          std::to_string(config.in_chans) + ", " + std::to_string(config.img_h) +
                          ", " + std::to_string(config.img_w) + "]");
  }
  const auto logits = so::fit_forward(image, model, config);
  std::size_t best = 0;
  std::string line = "logits:";
  char buf[64];
  for (std::size_t i = 0; i < logits.size(); ++i) {
    std::snprintf(buf, sizeof buf, " %.6f", logits[i]);
    line += buf;
    if (logits[i] > logits[best]) best = i;
  }
  std::cout << "mixer: " << so::to_string(config.mixer) << '\n'
            << line << '\n'
            << "argmax: " << best << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FFT-based convolution, token mixing, SSM and global convolution kernels"};
  app.require_subcommand(1);

  std::string suite;
  auto* verify = app.add_subcommand("verify", "Run oracle-equivalence and invariant suites");
  verify->add_option("--suite", suite, "Run only this suite");

  auto* bench = app.add_subcommand("bench", "Benchmark sweeps written as CSV");
  bench->require_subcommand(1);
  std::vector<std::size_t> image_sizes, kernel_sizes, seq_lens;
  std::size_t dim = 0;
  int repeats = so::kDefaultRepeats;
  std::string out, dtype = "f32";
  auto* conv = bench->add_subcommand("conv", "Direct vs FFT cross-correlation");
  conv->add_option("--image-sizes", image_sizes, "Comma-separated image extents")
      ->required()
      ->delimiter(',');
  conv->add_option("--kernel-sizes", kernel_sizes, "Comma-separated kernel extents")
      ->required()
      ->delimiter(',');
  auto* mixing = bench->add_subcommand("mixing", "Fourier vs attention token mixing");
  mixing->add_option("--seq-lens", seq_lens, "Comma-separated sequence lengths")
      ->required()
      ->delimiter(',');
  mixing->add_option("--dim", dim, "Embedding width")->required();
  for (auto* sub : {conv, mixing}) {
    sub->add_option("--repeats", repeats, "Timed repeats per case (after one warm-up)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", out, "Output CSV path (default: stdout)");
    sub->add_option("--dtype", dtype, "f32 or f64")->check(CLI::IsMember({"f32", "f64"}));
  }

  std::string model_dir, input;
  auto* demo = app.add_subcommand("demo", "Run a saved model on one FTNS image");
  demo->add_option("--model", model_dir, "Model directory")->required();
  demo->add_option("--input", input, "FTNS image [C, H, W]")->required();

  so::FitConfig init_cfg;
  std::string mixer = "fourier", init_out;
  std::size_t img_size = 32, patch_size = 4;
  auto* init = app.add_subcommand("init-model", "Write a seeded model directory (SPECTRAL_OPS_SEED)");
  init->add_option("--out", init_out, "Model directory")->required();
  init->add_option("--mixer", mixer, "fourier or attention")
      ->check(CLI::IsMember({"fourier", "attention"}));
  init->add_option("--img-size", img_size, "Square image extent")->check(CLI::PositiveNumber);
  init->add_option("--patch-size", patch_size, "Square patch extent")->check(CLI::PositiveNumber);
  init->add_option("--in-chans", init_cfg.in_chans)->check(CLI::PositiveNumber);
  init->add_option("--embed-dim", init_cfg.embed_dim)->check(CLI::PositiveNumber);
  init->add_option("--dim-feedforward", init_cfg.dim_feedforward)->check(CLI::PositiveNumber);
  init->add_option("--depth", init_cfg.depth);
  init->add_option("--num-classes", init_cfg.num_classes)->check(CLI::PositiveNumber);
  init->add_option("--num-heads", init_cfg.num_heads)->check(CLI::PositiveNumber);

  std::vector<std::size_t> input_shape;
  std::string input_out, fill = "zeros";
  auto* make_input = app.add_subcommand("make-input", "Write an FTNS image (zeros or seeded randn)");
  make_input->add_option("--out", input_out, "Output FTNS path")->required();
  make_input->add_option("--shape", input_shape, "Comma-separated extents, e.g. 3,32,32")
      ->required()
      ->delimiter(',');
  make_input->add_option("--fill", fill, "zeros or randn")->check(CLI::IsMember({"zeros", "randn"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*verify) return cmd_verify(suite);
    if (*conv) {
      return emit_csv(so::bench_conv(image_sizes, kernel_sizes, repeats, parse_dtype(dtype), demo_seed()),
                      out);
    }
    if (*mixing) {
      return emit_csv(so::bench_mixing(seq_lens, dim, repeats, parse_dtype(dtype), demo_seed()), out);
    }
    if (*demo) return cmd_demo(model_dir, input);
    if (*init) {
      init_cfg.img_h = init_cfg.img_w = img_size;
      init_cfg.patch_h = init_cfg.patch_w = patch_size;
      init_cfg.mixer = so::parse_mixer(mixer);
      so::Rng rng(demo_seed());
      so::save_model(so::init_fit_model(init_cfg, rng), init_cfg, init_out);
      std::cout << "wrote " << so::to_string(init_cfg.mixer) << " model ("
                << so::count_params(init_cfg) << " parameters) to " << init_out << '\n';
      return kExitOk;
    }
    if (*make_input) {
      so::Tensor<double> t(input_shape);
      if (fill == "randn") {
        so::Rng rng(demo_seed());
        t = so::randn<double>(rng, input_shape);
      }
      so::write_tensor(t, input_out);
      return kExitOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
