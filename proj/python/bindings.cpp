#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <complex>
#include <optional>
#include <string>

#include "spectral_ops/fftconv.hpp"
#include "spectral_ops/fit.hpp"
#include "spectral_ops/ftns.hpp"
#include "spectral_ops/gconv.hpp"
#include "spectral_ops/spectral.hpp"
#include "spectral_ops/ssm.hpp"
#include "spectral_ops/verify.hpp"

namespace py = pybind11;
namespace so = spectral_ops;

namespace {

template <class T>
using Array = py::array_t<T, py::array::c_style | py::array::forcecast>;

template <class T>
so::Tensor<T> to_tensor(const Array<T>& a) {
  so::Shape shape(a.shape(), a.shape() + a.ndim());
  return so::Tensor<T>(std::move(shape), std::vector<T>(a.data(), a.data() + a.size()));
}

template <class T>
Array<T> to_array(const so::Tensor<T>& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array<T> out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

so::ConvOperands<double> operands(const Array<double>& image, const Array<double>& kernel,
                                  const std::optional<Array<double>>& bias) {
  so::ConvOperands<double> ops{to_tensor(image), to_tensor(kernel), std::nullopt};
  if (bias) ops.bias = to_tensor(*bias);
  return ops;
}

so::GConvParams gconv_params(const Array<double>& base_kernel, const Array<double>& bias,
                             bool bidirectional) {
  so::GConvParams p;
  p.base_kernel = to_tensor(base_kernel);
  if (p.base_kernel.rank() != 2) throw so::ShapeError("base_kernel must be [width, depth]");
  p.bidirectional = bidirectional;
  p.width = bidirectional ? p.base_kernel.extent(0) / 2 : p.base_kernel.extent(0);
  p.depth = p.base_kernel.extent(1);
  p.bias = to_tensor(bias);
  p.validate();
  return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spectral convolution and mixing kernels";

  // Leaked on purpose: these must outlive interpreter shutdown.
  static auto& error = *new py::exception<so::Error>(m, "Error", PyExc_RuntimeError);
  static auto& shape_error = *new py::exception<so::ShapeError>(m, "ShapeError", error.ptr());
  static auto& format_error = *new py::exception<so::FormatError>(m, "FormatError", error.ptr());
  static auto& config_error = *new py::exception<so::ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const so::ShapeError& e) {
      PyErr_SetString(shape_error.ptr(), e.what());
    } catch (const so::FormatError& e) {
      PyErr_SetString(format_error.ptr(), e.what());
    } catch (const so::ConfigError& e) {
      PyErr_SetString(config_error.ptr(), e.what());
    } catch (const so::Error& e) {
      PyErr_SetString(error.ptr(), e.what());
    }
  });

  // spectral
  m.def("next_fast_length", &so::next_fast_length, py::arg("n"));
  m.def(
      "fft",
      [](const Array<std::complex<double>>& x, int axis, bool inverse) {
        return to_array(so::fft_axis(to_tensor(x), axis, inverse));
      },
      py::arg("x"), py::arg("axis") = -1, py::arg("inverse") = false,
      "Unnormalized forward / 1/N inverse complex FFT along one axis.");
  m.def(
      "dft_naive", [](const Array<std::complex<double>>& x) { return to_array(so::dft_naive(to_tensor(x))); },
      py::arg("x"));
  m.def(
      "rfft2", [](const Array<double>& x) { return to_array(so::rfft2(to_tensor(x))); }, py::arg("x"));
  m.def(
      "irfft2",
      [](const Array<std::complex<double>>& s, std::size_t h, std::size_t w) {
        return to_array(so::irfft2(to_tensor(s), {h, w}));
      },
      py::arg("spectrum"), py::arg("h"), py::arg("w"));

  // fftconv
  m.def(
      "direct_xcorr2d",
      [](const Array<double>& image, const Array<double>& kernel, const std::string& mode,
         const std::optional<Array<double>>& bias) {
        return to_array(so::direct_xcorr2d(operands(image, kernel, bias), so::parse_conv_mode(mode)));
      },
      py::arg("image"), py::arg("kernel"), py::arg("mode") = "same", py::arg("bias") = py::none());
  m.def(
      "fft_xcorr2d",
      [](const Array<double>& image, const Array<double>& kernel, const std::string& mode,
         const std::optional<Array<double>>& bias) {
        return to_array(so::fft_xcorr2d(operands(image, kernel, bias), so::parse_conv_mode(mode)));
      },
      py::arg("image"), py::arg("kernel"), py::arg("mode") = "same", py::arg("bias") = py::none(),
      "Depthwise cross-correlation of image [C, H, W] with kernel [C, Kh, Kw].");
  m.def(
      "fft_circular_conv2d",
      [](const Array<double>& image, const Array<double>& kernel) {
        return to_array(so::fft_circular_conv2d(to_tensor(image), to_tensor(kernel)));
      },
      py::arg("image"), py::arg("kernel"));

  // fit
  m.def(
      "fourier_mixing", [](const Array<double>& x) { return to_array(so::fourier_mixing(to_tensor(x))); },
      py::arg("x"));
  m.def(
      "layer_norm",
      [](const Array<double>& x, const Array<double>& gamma, const Array<double>& beta, double eps) {
        return to_array(so::layer_norm(to_tensor(x), to_tensor(gamma), to_tensor(beta), eps));
      },
      py::arg("x"), py::arg("gamma"), py::arg("beta"), py::arg("eps") = so::kBlockNormEps);
  m.def(
      "cross_entropy",
      [](const std::vector<double>& logits, std::size_t label) { return so::cross_entropy(logits, label); },
      py::arg("logits"), py::arg("label"));
  m.def(
      "vit_base_params",
      [](const std::string& mixer) { return so::count_params(so::vit_base_config(so::parse_mixer(mixer))); },
      py::arg("mixer") = "attention");

  // ssm
  m.def(
      "hippo_legs",
      [](std::size_t n, const std::string& sign) {
        const auto p = so::hippo_legs(n, so::parse_sign_convention(sign));
        return py::make_tuple(to_array(p.a), to_array(p.b));
      },
      py::arg("n"), py::arg("sign") = "negated", "Returns (A, B).");
  m.def(
      "matrix_exp", [](const Array<double>& a) { return to_array(so::matrix_exp(to_tensor(a))); },
      py::arg("m"));
  m.def(
      "ssm_kernel",
      [](const Array<double>& a, const Array<double>& b, const Array<double>& c, std::size_t length) {
        so::SsmParams p;
        p.a = to_tensor(a);
        p.b = to_tensor(b);
        p.c = to_tensor(c);
        p.state_dim = p.b.size();
        return to_array(so::ssm_kernel(p, length));
      },
      py::arg("a"), py::arg("b"), py::arg("c"), py::arg("length"));
  m.def(
      "causal_fft_conv",
      [](const Array<double>& k, const Array<double>& u) {
        return to_array(so::causal_fft_conv(to_tensor(k), to_tensor(u)));
      },
      py::arg("kernel"), py::arg("u"));

  // gconv
  m.def("scale_count", &so::scale_count, py::arg("length"));
  m.def(
      "bilinear_resize_1d",
      [](const Array<double>& seg, std::size_t n) { return to_array(so::bilinear_resize_1d(to_tensor(seg), n)); },
      py::arg("segment"), py::arg("new_len"));
  m.def(
      "gconv_kernel",
      [](const Array<double>& base, const Array<double>& bias, bool bidirectional, std::size_t length) {
        return to_array(so::build_kernel(gconv_params(base, bias, bidirectional), length));
      },
      py::arg("base_kernel"), py::arg("bias"), py::arg("bidirectional"), py::arg("length"));
  m.def(
      "gconv_forward",
      [](const Array<double>& signal, const Array<double>& base, const Array<double>& bias, bool bidirectional) {
        return to_array(so::gconv_forward(to_tensor(signal), gconv_params(base, bias, bidirectional)));
      },
      py::arg("signal"), py::arg("base_kernel"), py::arg("bias"), py::arg("bidirectional") = false);

  // ftns
  m.def(
      "write_tensor",
      [](const py::array& a, const std::filesystem::path& path) {
        if (a.dtype().is(py::dtype::of<float>())) {
          so::write_tensor(to_tensor(Array<float>(a)), path);
        } else {
          so::write_tensor(to_tensor(Array<double>(a)), path);
        }
      },
      py::arg("array"), py::arg("path"), "float32 arrays keep their dtype; everything else is stored as f64.");
  m.def(
      "read_tensor",
      [](const std::filesystem::path& path) -> py::array {
        const auto t = so::read_tensor(path);
        if (const auto* f = std::get_if<so::Tensor<float>>(&t)) return to_array(*f);
        return to_array(std::get<so::Tensor<double>>(t));
      },
      py::arg("path"));

  // verify
  m.def(
      "run_verify",
      [](const std::optional<std::string>& suite) {
        py::list out;
        for (const auto& r : so::run_verify(suite)) {
          py::list checks;
          for (const auto& c : r.checks) {
            checks.append(py::dict(py::arg("name") = c.name, py::arg("max_error") = c.max_error,
                                   py::arg("tolerance") = c.tolerance, py::arg("passed") = c.passed));
          }
          out.append(py::dict(py::arg("suite") = r.suite, py::arg("passed") = r.passed(),
                              py::arg("checks") = checks));
        }
        return out;
      },
      py::arg("suite") = py::none());
}
