import math

import numpy as np
import pytest

from unimark.errors import DimensionMismatch, EmptyPositives, LengthMismatch, TooSmall
from unimark.media import AudioClip, ImageBuffer, VideoClip
from unimark.metrics import bit_accuracy, psnr, snr_db, ssim, tpr_fpr, video_quality
from unimark.visual import dct8_forward

from conftest import noise_image
from oracles import naive_dct8, naive_psnr, naive_snr, naive_ssim


def test_psnr_examples():
    a = ImageBuffer(np.zeros((8, 8, 1), np.uint8))
    assert psnr(a, a) == math.inf
    assert psnr(a, ImageBuffer(np.full((8, 8, 1), 255, np.uint8))) == 0.0
    b = a.pixels.copy()
    b[3, 4, 0] = 16
    assert psnr(a, ImageBuffer(b)) == pytest.approx(10 * math.log10(65025 / 4), abs=1e-12)
    assert round(psnr(a, ImageBuffer(b)), 2) == 42.11


def test_psnr_symmetric_and_mismatch(rng):
    a, b = noise_image(rng, 9, 9), noise_image(rng, 9, 9)
    assert psnr(a, b) == psnr(b, a)
    with pytest.raises(DimensionMismatch):
        psnr(a, noise_image(rng, 9, 8))


def test_ssim_constant_closed_form():
    a = ImageBuffer(np.full((64, 64, 1), 128, np.uint8))
    b = ImageBuffer(np.full((64, 64, 1), 129, np.uint8))
    c1 = (0.01 * 255) ** 2
    expected = (2 * 128 * 129 + c1) / (128**2 + 129**2 + c1)
    assert ssim(a, b) == pytest.approx(expected, abs=1e-12)


def test_ssim_basic_properties(rng):
    a, b = noise_image(rng, 20, 24), noise_image(rng, 20, 24)
    assert ssim(a, a) == 1.0
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)
    assert -1.0 <= ssim(a, b) <= 1.0
    with pytest.raises(TooSmall):
        ssim(noise_image(rng, 10, 30), noise_image(rng, 10, 30))


@pytest.mark.parametrize("seed", range(32))
def test_metric_oracles(seed):
    r = np.random.default_rng(seed)
    h, w, c = int(r.integers(11, 15)), int(r.integers(11, 15)), int(r.choice([1, 3]))
    a = r.integers(0, 256, (h, w, c), dtype=np.uint8)
    b = np.clip(a.astype(int) + r.integers(-20, 21, a.shape), 0, 255).astype(np.uint8)
    A, B = ImageBuffer(a), ImageBuffer(b)
    assert abs(psnr(A, B) - naive_psnr(a, b)) <= 1e-9
    assert abs(ssim(A, B) - naive_ssim(a, b)) <= 1e-9
    x = r.uniform(-0.5, 0.5, (1, 200))
    y = np.clip(x + r.normal(0, 0.05, x.shape), -1, 1)
    assert abs(snr_db(AudioClip(x, 8000), AudioClip(y, 8000)) - naive_snr(x, y)) <= 1e-9
    blk = r.uniform(-128, 128, (8, 8))
    assert np.max(np.abs(dct8_forward(blk) - naive_dct8(blk))) <= 1e-9


def test_snr_examples():
    t = np.arange(100_000) / 16000
    x = AudioClip(0.5 * np.sin(2 * np.pi * 440 * t), 16000)
    assert snr_db(x, x) == math.inf
    assert snr_db(x, AudioClip(2 * x.samples, 16000)) == pytest.approx(0.0, abs=1e-12)
    # unit-power relation at reduced scale: signal RMS 0.5/sqrt(2), noise RMS a tenth of that
    rng = np.random.default_rng(3)
    noise = rng.standard_normal(x.samples.shape)
    noise *= 0.1 * np.sqrt(np.mean(x.samples**2)) / np.sqrt(np.mean(noise**2))
    assert snr_db(x, AudioClip(x.samples + noise, 16000)) == pytest.approx(20.0, abs=0.2)
    with pytest.raises(LengthMismatch):
        snr_db(x, AudioClip(x.samples[:, :-1], 16000))


def test_video_quality(rng):
    f = [noise_image(rng, 16, 16) for _ in range(3)]
    g = [f[0], noise_image(rng, 16, 16), noise_image(rng, 16, 16)]
    q = video_quality(VideoClip(f, 8), VideoClip(f, 8))
    assert q.psnr_db == math.inf and q.ssim == 1.0
    q = video_quality(VideoClip(f, 8), VideoClip(g, 8))
    assert q.psnr_db == pytest.approx((psnr(f[1], g[1]) + psnr(f[2], g[2])) / 2)
    assert q.ssim == pytest.approx(sum(ssim(a, b) for a, b in zip(f, g)) / 3)
    one = video_quality(VideoClip(f[:1], 1), VideoClip(g[1:2], 1))
    assert one.psnr_db == psnr(f[0], g[1]) and one.ssim == ssim(f[0], g[1])
    with pytest.raises(DimensionMismatch):
        video_quality(VideoClip(f, 8), VideoClip(f[:2], 8))


def test_bit_accuracy_and_rates():
    assert bit_accuracy([1, 0, 1, 0], [1, 0, 1, 0]) == 1.0
    assert bit_accuracy([1, 0, 1, 0], [0, 1, 0, 1]) == 0.0
    assert bit_accuracy([1, 0, 1, 0], [1, 0, 0, 0]) == 0.75
    with pytest.raises(LengthMismatch):
        bit_accuracy([1], [1, 0])
    assert tpr_fpr([True, True, False, True], [False, False]) == (0.75, 0.0)
    assert tpr_fpr([True], [True]) == (1.0, 1.0)
    assert tpr_fpr([True, True], []) == (1.0, 0.0)
    with pytest.raises(EmptyPositives):
        tpr_fpr([], [True])
