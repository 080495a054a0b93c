"""Quality (imperceptibility) and robustness (detectability) metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DimensionMismatch, EmptyPositives, LengthMismatch, TooSmall
from .media import AudioClip, ImageBuffer, VideoClip
from .visual import luma_plane

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
DYNAMIC_RANGE = 255.0


@dataclass(frozen=True)
class QualityScores:
    psnr_db: float | None = None
    ssim: float | None = None
    snr_db: float | None = None


@dataclass(frozen=True)
class RobustnessScores:
    bit_accuracy: float
    tpr: float
    fpr: float
    n_positive: int
    n_negative: int


def _check_images(a: ImageBuffer, b: ImageBuffer) -> None:
    if a.pixels.shape != b.pixels.shape:
        raise DimensionMismatch(f"{a.pixels.shape} vs {b.pixels.shape}")


def psnr(a: ImageBuffer, b: ImageBuffer) -> float:
    _check_images(a, b)
    diff = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(DYNAMIC_RANGE**2 / mse)


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2
    g = np.exp(-(x**2) / (2 * sigma * sigma))
    return g / g.sum()


def _filter_valid(plane: np.ndarray, g: np.ndarray) -> np.ndarray:
    rows = sliding_window_view(plane, len(g), axis=0) @ g
    return sliding_window_view(rows, len(g), axis=1) @ g


def ssim_planes(x: np.ndarray, y: np.ndarray) -> float:
    """Mean SSIM of two float planes, Gaussian 11x11 window, valid region."""
    if min(x.shape) < SSIM_WINDOW:
        raise TooSmall(f"SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {x.shape}")
    g = gaussian_window()
    c1 = (SSIM_K1 * DYNAMIC_RANGE) ** 2
    c2 = (SSIM_K2 * DYNAMIC_RANGE) ** 2
    mu_x = _filter_valid(x, g)
    mu_y = _filter_valid(y, g)
    var_x = _filter_valid(x * x, g) - mu_x**2
    var_y = _filter_valid(y * y, g) - mu_y**2
    cov = _filter_valid(x * y, g) - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def ssim(a: ImageBuffer, b: ImageBuffer) -> float:
    _check_images(a, b)
    if min(a.height, a.width) < SSIM_WINDOW:
        raise TooSmall(f"SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {a.width}x{a.height}")
    if a == b:
        return 1.0
    return ssim_planes(luma_plane(a.pixels), luma_plane(b.pixels))


def video_quality(a: VideoClip, b: VideoClip) -> QualityScores:
    if len(a.frames) != len(b.frames):
        raise DimensionMismatch(f"{len(a.frames)} vs {len(b.frames)} frames")
    psnrs = [psnr(fa, fb) for fa, fb in zip(a.frames, b.frames)]
    ssims = [ssim(fa, fb) for fa, fb in zip(a.frames, b.frames)]
    finite = [v for v in psnrs if math.isfinite(v)]
    mean_psnr = sum(finite) / len(finite) if finite else math.inf
    return QualityScores(psnr_db=mean_psnr, ssim=sum(ssims) / len(ssims))


def image_quality(a: ImageBuffer, b: ImageBuffer) -> QualityScores:
    return QualityScores(psnr_db=psnr(a, b), ssim=ssim(a, b))


def snr_db(reference: AudioClip, test: AudioClip) -> float:
    if reference.samples.shape != test.samples.shape:
        raise LengthMismatch(f"{reference.samples.shape} vs {test.samples.shape}")
    noise = float(np.sum((reference.samples - test.samples) ** 2))
    if noise == 0:
        return math.inf
    signal = float(np.sum(reference.samples**2))
    if signal == 0:
        return -math.inf
    return 10.0 * math.log10(signal / noise)


def bit_accuracy(truth, got) -> float:
    truth = list(truth)
    got = list(got)
    if len(truth) != len(got):
        raise LengthMismatch(f"{len(truth)} vs {len(got)} bits")
    if not truth:
        raise LengthMismatch("empty bit vectors")
    return sum(int(a) == int(b) for a, b in zip(truth, got)) / len(truth)


def tpr_fpr(positives, negatives) -> tuple[float, float]:
    positives = list(positives)
    negatives = list(negatives)
    if not positives:
        raise EmptyPositives("TPR needs at least one positive")
    tpr = sum(bool(v) for v in positives) / len(positives)
    fpr = sum(bool(v) for v in negatives) / len(negatives) if negatives else 0.0
    return tpr, fpr
