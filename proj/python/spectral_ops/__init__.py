"""FFT convolution, Fourier token mixing, S4 kernels and multi-scale global convolution."""

from ._core import (
    ConfigError,
    Error,
    FormatError,
    ShapeError,
    bilinear_resize_1d,
    causal_fft_conv,
    cross_entropy,
    dft_naive,
    direct_xcorr2d,
    fft,
    fft_circular_conv2d,
    fft_xcorr2d,
    fourier_mixing,
    gconv_forward,
    gconv_kernel,
    hippo_legs,
    irfft2,
    layer_norm,
    matrix_exp,
    next_fast_length,
    read_tensor,
    rfft2,
    run_verify,
    scale_count,
    ssm_kernel,
    vit_base_params,
    write_tensor,
)

__all__ = [
    "ConfigError",
    "Error",
    "FormatError",
    "ShapeError",
    "bilinear_resize_1d",
    "causal_fft_conv",
    "cross_entropy",
    "dft_naive",
    "direct_xcorr2d",
    "fft",
    "fft_circular_conv2d",
    "fft_xcorr2d",
    "fourier_mixing",
    "gconv_forward",
    "gconv_kernel",
    "hippo_legs",
    "irfft2",
    "layer_norm",
    "matrix_exp",
    "next_fast_length",
    "read_tensor",
    "rfft2",
    "run_verify",
    "scale_count",
    "ssm_kernel",
    "vit_base_params",
    "write_tensor",
]
