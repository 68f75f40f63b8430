"""Natural-scene-statistics blind quality score (NIQE-style).

Pipeline: locally normalized luminance (MSCN) with a 7x7 Gaussian weighting
window (sigma 7/6, +1 divisor stabilizer), asymmetric generalized Gaussian
(AGGD) moment-matching fits of the MSCN map and its four orientation products,
18 features per scale at two scales (the second a 2x2 box-average downsample),
and a Mahalanobis-style distance between the test feature statistics and a
pristine model:

    score = sqrt((nu1 - nu2)^T ((Sigma1 + Sigma2) / 2)^-1 (nu1 - nu2))
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from ..errors import DataError, NumericError
from ..pairset import Image

MSCN_WINDOW_HALF = 3  # 7 taps
MSCN_SIGMA = 7.0 / 6.0
MSCN_STABILIZER = 1.0

GAMMA_LO = 0.2
GAMMA_HI = 10.0
GAMMA_BISECT_TOL = 1e-6

FEATURES_PER_SCALE = 18
N_FEATURES = 2 * FEATURES_PER_SCALE

DEFAULT_PATCH_SIZE = 96
DEFAULT_SHARPNESS_FRACTION = 0.75

# Orientation shifts (rows, cols) for the pairwise products: horizontal,
# vertical, main diagonal, anti-diagonal. Shifts are circular within a patch.
_PRODUCT_SHIFTS = ((0, 1), (1, 0), (1, 1), (1, -1))

MODEL_MAGIC = "niqe-model v1"


def _aggd_ratio(gamma: float) -> float:
    # r(g) = Gamma(2/g)^2 / (Gamma(1/g) * Gamma(3/g)), strictly increasing
    # on [0.2, 10]; computed in log space to dodge overflow at small g.
    return math.exp(
        2.0 * math.lgamma(2.0 / gamma)
        - math.lgamma(1.0 / gamma)
        - math.lgamma(3.0 / gamma)
    )


def _invert_aggd_ratio(target: float) -> float:
    lo, hi = GAMMA_LO, GAMMA_HI
    if target <= _aggd_ratio(lo):
        return lo
    if target >= _aggd_ratio(hi):
        return hi
    while hi - lo > GAMMA_BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if _aggd_ratio(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def fit_aggd(samples) -> tuple[float, float, float, float]:
    """Moment-matching AGGD fit: returns (shape, left scale, right scale, mean).

    The shape parameter is found by bisecting the moment ratio on [0.2, 10].
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < 16:
        raise DataError(f"need at least 16 samples to fit an AGGD, got {x.size}")
    if np.all(x == x[0]):
        raise DataError("degenerate (constant) input: AGGD fit undefined")

    sq = x * x
    left = sq[x < 0]
    right = sq[x > 0]
    left_std = math.sqrt(float(np.mean(left))) if left.size else 0.0
    right_std = math.sqrt(float(np.mean(right))) if right.size else 0.0

    mean_sq = float(np.mean(sq))
    r_hat = float(np.mean(np.abs(x))) ** 2 / mean_sq
    if right_std > 0.0:
        gamma_hat = left_std / right_std
        r_hat_norm = (
            r_hat
            * (gamma_hat**3 + 1.0)
            * (gamma_hat + 1.0)
            / (gamma_hat**2 + 1.0) ** 2
        )
    else:
        # one-sided sample: the asymmetry correction tends to 1
        r_hat_norm = r_hat

    alpha = _invert_aggd_ratio(r_hat_norm)
    scale = math.sqrt(math.gamma(1.0 / alpha) / math.gamma(3.0 / alpha))
    beta_left = left_std * scale
    beta_right = right_std * scale
    eta = (beta_right - beta_left) * (
        math.gamma(2.0 / alpha) / math.gamma(1.0 / alpha)
    )
    return alpha, beta_left, beta_right, eta


def _gaussian_window7() -> np.ndarray:
    t = np.arange(-MSCN_WINDOW_HALF, MSCN_WINDOW_HALF + 1, dtype=np.float64)
    w = np.exp(-(t * t) / (2.0 * MSCN_SIGMA * MSCN_SIGMA))
    return w / w.sum()


def compute_mscn(luma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (mscn, sigma) maps for a float luma plane (replicated borders)."""
    luma = np.asarray(luma, dtype=np.float64)
    w = _gaussian_window7()
    mu = correlate1d(luma, w, axis=0, mode="nearest")
    mu = correlate1d(mu, w, axis=1, mode="nearest")
    second = correlate1d(luma * luma, w, axis=0, mode="nearest")
    second = correlate1d(second, w, axis=1, mode="nearest")
    sigma = np.sqrt(np.abs(second - mu * mu))
    mscn = (luma - mu) / (sigma + MSCN_STABILIZER)
    return mscn, sigma


def _downsample2(luma: np.ndarray) -> np.ndarray:
    """2x downsample by 2x2 box average (dimensions must be even)."""
    h, w = luma.shape
    return luma.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))


def patch_features(mscn_patch: np.ndarray) -> np.ndarray:
    """18 AGGD features of one MSCN patch: the map itself plus 4 products."""
    feats = np.empty(FEATURES_PER_SCALE, dtype=np.float64)
    alpha, beta_l, beta_r, _ = fit_aggd(mscn_patch)
    feats[0] = alpha
    feats[1] = 0.5 * (beta_l + beta_r)
    pos = 2
    for shift in _PRODUCT_SHIFTS:
        product = mscn_patch * np.roll(mscn_patch, shift, axis=(0, 1))
        alpha, beta_l, beta_r, eta = fit_aggd(product)
        feats[pos : pos + 4] = (alpha, eta, beta_l, beta_r)
        pos += 4
    return feats


def _extract_features(
    luma: np.ndarray, patch_size: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-patch 36-vectors and per-patch sharpness for one luma plane.

    The image is cropped to a whole number of patches; the second scale pairs
    each patch with its half-resolution counterpart.
    """
    if patch_size % 2 != 0:
        raise DataError(f"patch size must be even, got {patch_size}")
    h, w = luma.shape
    if h < 2 * patch_size or w < 2 * patch_size:
        raise DataError(
            f"image {w}x{h} too small: each dimension must be at least "
            f"2*patch_size = {2 * patch_size}"
        )
    rows = h // patch_size
    cols = w // patch_size
    cropped = luma[: rows * patch_size, : cols * patch_size]

    mscn1, sigma1 = compute_mscn(cropped)
    mscn2, _ = compute_mscn(_downsample2(cropped))
    half = patch_size // 2

    feats = np.empty((rows * cols, N_FEATURES), dtype=np.float64)
    sharpness = np.empty(rows * cols, dtype=np.float64)
    k = 0
    for i in range(rows):
        for j in range(cols):
            r0, c0 = i * patch_size, j * patch_size
            p1 = mscn1[r0 : r0 + patch_size, c0 : c0 + patch_size]
            p2 = mscn2[i * half : (i + 1) * half, j * half : (j + 1) * half]
            feats[k, :FEATURES_PER_SCALE] = patch_features(p1)
            feats[k, FEATURES_PER_SCALE:] = patch_features(p2)
            sharpness[k] = np.mean(
                sigma1[r0 : r0 + patch_size, c0 : c0 + patch_size]
            )
            k += 1
    return feats, sharpness


@dataclass(frozen=True)
class NiqePristineModel:
    """Pristine NSS statistics: 36-vector mean and 36x36 covariance."""

    mean_vec: np.ndarray
    cov_mat: np.ndarray
    patch_size: int = DEFAULT_PATCH_SIZE
    sharpness_fraction: float = DEFAULT_SHARPNESS_FRACTION

    def save(self, path: str | os.PathLike) -> None:
        lines = [
            MODEL_MAGIC,
            f"{self.patch_size} {repr(float(self.sharpness_fraction))}",
        ]
        lines.append(" ".join(repr(float(v)) for v in self.mean_vec))
        for row in self.cov_mat:
            lines.append(" ".join(repr(float(v)) for v in row))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path: str | os.PathLike) -> "NiqePristineModel":
        try:
            with open(path, encoding="utf-8") as fh:
                lines = fh.read().splitlines()
        except OSError as exc:
            raise DataError(f"cannot read pristine model {path}: {exc}")
        if not lines or lines[0] != MODEL_MAGIC:
            raise DataError(f"{path}: not a {MODEL_MAGIC!r} file")
        try:
            size_tok, frac_tok = lines[1].split()
            patch_size = int(size_tok)
            frac = float(frac_tok)
            values = [float(t) for line in lines[2:] for t in line.split()]
        except (IndexError, ValueError) as exc:
            raise DataError(f"{path}: malformed pristine model: {exc}")
        if len(values) != N_FEATURES + N_FEATURES * N_FEATURES:
            raise DataError(
                f"{path}: expected {N_FEATURES} mean values and "
                f"{N_FEATURES}x{N_FEATURES} covariance entries"
            )
        mean_vec = np.array(values[:N_FEATURES])
        cov = np.array(values[N_FEATURES:]).reshape(N_FEATURES, N_FEATURES)
        if not np.allclose(cov, cov.T, rtol=1e-9, atol=0.0):
            raise DataError(f"{path}: covariance matrix is not symmetric")
        return cls(
            mean_vec=mean_vec,
            cov_mat=cov,
            patch_size=patch_size,
            sharpness_fraction=frac,
        )


def fit_pristine_model(
    corpus: list[Image],
    patch_size: int = DEFAULT_PATCH_SIZE,
    sharpness_fraction: float = DEFAULT_SHARPNESS_FRACTION,
) -> NiqePristineModel:
    """Fit pristine statistics from a corpus, keeping only sharp patches.

    A patch is kept when its mean local sigma reaches sharpness_fraction
    times the sharpest patch of its own image.
    """
    if not corpus:
        raise DataError("pristine corpus is empty")
    selected = []
    for img in corpus:
        feats, sharpness = _extract_features(img.luma, patch_size)
        threshold = sharpness_fraction * float(sharpness.max())
        selected.append(feats[sharpness >= threshold])
    feats = np.vstack(selected)
    if feats.shape[0] < N_FEATURES + 1:
        raise DataError(
            f"only {feats.shape[0]} patches selected; need at least "
            f"{N_FEATURES + 1} for a full-rank covariance. Use a larger "
            "corpus or a lower sharpness fraction."
        )
    mean_vec = feats.mean(axis=0)
    cov_mat = np.cov(feats, rowvar=False)
    return NiqePristineModel(
        mean_vec=mean_vec,
        cov_mat=cov_mat,
        patch_size=patch_size,
        sharpness_fraction=sharpness_fraction,
    )


def _distance(model_mean, model_cov, test_mean, test_cov) -> float:
    pooled = 0.5 * (model_cov + test_cov)
    diff = model_mean - test_mean
    quad = None
    try:
        quad = float(diff @ np.linalg.solve(pooled, diff))
    except np.linalg.LinAlgError:
        quad = None
    if quad is None or not math.isfinite(quad):
        # regularize a near-singular pooled covariance
        ridge = 1e-8 * float(np.trace(pooled)) / pooled.shape[0]
        pooled = pooled + ridge * np.eye(pooled.shape[0])
        try:
            quad = float(diff @ np.linalg.solve(pooled, diff))
        except np.linalg.LinAlgError:
            raise NumericError("singular pooled covariance after regularization")
        if not math.isfinite(quad):
            raise NumericError("singular pooled covariance after regularization")
    return math.sqrt(max(quad, 0.0))


def niqe(img: Image, model: NiqePristineModel) -> float:
    """Blind quality score of an image against a pristine model (lower better)."""
    feats, _ = _extract_features(img.luma, model.patch_size)
    test_mean = feats.mean(axis=0)
    test_cov = np.cov(feats, rowvar=False)
    return _distance(model.mean_vec, model.cov_mat, test_mean, test_cov)
