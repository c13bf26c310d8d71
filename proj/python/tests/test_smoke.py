import math

import numpy as np
import pytest

import spectral_ops as so


def test_fft_matches_numpy():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((3, 30)) + 1j * rng.standard_normal((3, 30))
    np.testing.assert_allclose(so.fft(x), np.fft.fft(x, axis=-1), atol=1e-10)
    np.testing.assert_allclose(so.fft(x, axis=0, inverse=True), np.fft.ifft(x, axis=0), atol=1e-12)
    np.testing.assert_allclose(so.rfft2(x.real), np.fft.rfft2(x.real), atol=1e-10)
    assert so.next_fast_length(97) == 100


def test_xcorr_fft_equals_direct():
    rng = np.random.default_rng(1)
    img = rng.standard_normal((2, 20, 17))
    k = rng.standard_normal((2, 5, 3))
    for mode in ("full", "same", "valid", "circular"):
        np.testing.assert_allclose(so.fft_xcorr2d(img, k, mode), so.direct_xcorr2d(img, k, mode), atol=1e-10)
    valid = so.fft_xcorr2d(img, k, "valid")
    assert valid.shape == (2, 16, 15)
    # Cross-correlation, not convolution: first valid output is the plain inner product.
    assert valid[0, 0, 0] == pytest.approx(np.sum(img[0, :5, :3] * k[0]))


def test_shape_errors_map_to_python():
    with pytest.raises(so.ShapeError):
        so.fft_xcorr2d(np.zeros((1, 4, 4)), np.zeros((2, 3, 3)))
    with pytest.raises(so.ConfigError):
        so.fft_xcorr2d(np.zeros((1, 4, 4)), np.zeros((1, 3, 3)), "diagonal")
    assert issubclass(so.ShapeError, so.Error)


def test_fourier_mixing_is_real_part_of_fft2():
    x = np.random.default_rng(2).standard_normal((16, 8))
    np.testing.assert_allclose(so.fourier_mixing(x), np.fft.fft2(x).real, atol=1e-10)


def test_cross_entropy_and_params():
    assert so.cross_entropy([0.0] * 10, 3) == pytest.approx(math.log(10), abs=1e-12)
    assert abs(so.vit_base_params() - 86e6) / 86e6 < 0.02
    d = 768
    assert so.vit_base_params("attention") - so.vit_base_params("fourier") == 12 * (4 * d * d + 4 * d)


def test_ssm():
    a, b = so.hippo_legs(2, "as_written")
    np.testing.assert_array_equal(a, [[1.0, 0.0], [math.sqrt(3), 2.0]])
    np.testing.assert_array_equal(b, [1.0, math.sqrt(3)])
    a, b = so.hippo_legs(4)
    c = np.random.default_rng(3).standard_normal(4)
    k = so.ssm_kernel(a, b, c, 16)
    assert k[0] == pytest.approx(c @ b)
    u = np.random.default_rng(4).standard_normal(16)
    np.testing.assert_allclose(so.causal_fft_conv(k, u), np.convolve(k, u)[:16], atol=1e-10)


def test_gconv():
    assert so.scale_count(1000) == 10
    np.testing.assert_array_equal(so.bilinear_resize_1d(np.array([[0.0], [1.0]]), 4)[:, 0], [0, 0.25, 0.75, 1])
    rng = np.random.default_rng(5)
    base, bias, u = rng.standard_normal((4, 2)), rng.standard_normal(2), rng.standard_normal((32, 2))
    k = so.gconv_kernel(base, bias, False, 32)
    y = so.gconv_forward(u, base, bias)
    for ch in range(2):
        np.testing.assert_allclose(y[:, ch], np.convolve(k[:, ch], u[:, ch])[:32] + bias[ch], atol=1e-10)


def test_ftns_roundtrip(tmp_path):
    x = np.random.default_rng(6).standard_normal((2, 3, 4))
    so.write_tensor(x, tmp_path / "x.ftns")
    y = so.read_tensor(tmp_path / "x.ftns")
    assert y.dtype == np.float64
    np.testing.assert_array_equal(x, y)
    so.write_tensor(x.astype(np.float32), tmp_path / "f.ftns")
    assert so.read_tensor(tmp_path / "f.ftns").dtype == np.float32
    (tmp_path / "bad.ftns").write_bytes(b"NOPE")
    with pytest.raises(so.FormatError, match="offset"):
        so.read_tensor(tmp_path / "bad.ftns")


def test_verify_suites_pass():
    reports = so.run_verify()
    assert [r["suite"] for r in reports] == ["tensor", "spectral", "fftconv", "fit", "ssm", "gconv"]
    assert all(r["passed"] for r in reports)
