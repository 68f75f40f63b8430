"""Native full-reference metrics over the luma plane: PSNR and SSIM."""

from __future__ import annotations

import numpy as np
from scipy.ndimage import correlate1d

from ..errors import DataError
from ..pairset import Image

PEAK = 255.0

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_C1 = (SSIM_K1 * PEAK) ** 2
SSIM_C2 = (SSIM_K2 * PEAK) ** 2


def _check_same_size(x: Image, y: Image) -> None:
    if (x.height, x.width) != (y.height, y.width):
        raise DataError(
            f"dimension mismatch: {x.width}x{x.height} vs {y.width}x{y.height}"
        )


def psnr(x: Image, y: Image) -> float:
    """10*log10(255^2 / MSE) over luma; +inf for identical images."""
    _check_same_size(x, y)
    diff = x.luma - y.luma
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(PEAK * PEAK / mse))


def gaussian_window(n: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    """1-D Gaussian tap vector of odd length n, normalized to sum 1."""
    half = n // 2
    t = np.arange(-half, half + 1, dtype=np.float64)
    w = np.exp(-(t * t) / (2.0 * sigma * sigma))
    return w / w.sum()


def _filter_valid(img: np.ndarray, window: np.ndarray) -> np.ndarray:
    """Separable windowed mean, keeping only fully-covered (valid) positions."""
    half = len(window) // 2
    out = correlate1d(img, window, axis=0, mode="constant")
    out = correlate1d(out, window, axis=1, mode="constant")
    return out[half:-half, half:-half]


def ssim(x: Image, y: Image) -> float:
    """Mean SSIM with an 11x11 Gaussian window (sigma 1.5), L=255."""
    _check_same_size(x, y)
    if x.height < SSIM_WINDOW or x.width < SSIM_WINDOW:
        raise DataError(
            f"image {x.width}x{x.height} smaller than the "
            f"{SSIM_WINDOW}x{SSIM_WINDOW} SSIM window"
        )
    a = x.luma
    b = y.luma
    w = gaussian_window()
    mu_a = _filter_valid(a, w)
    mu_b = _filter_valid(b, w)
    var_a = _filter_valid(a * a, w) - mu_a * mu_a
    var_b = _filter_valid(b * b, w) - mu_b * mu_b
    cov = _filter_valid(a * b, w) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + SSIM_C1) * (2.0 * cov + SSIM_C2)
    den = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return float(np.mean(num / den))
