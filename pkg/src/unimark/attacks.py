"""Deterministic distortion suite applied between embed and extract.

Every attack is a pure function of ``(media, AttackSpec)``. Stochastic
attacks draw from ``derive_stream(spec.seed, ...)``, never from the
watermark key.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import correlate1d

from .core import Modality
from .errors import BadParams, UnknownAttack
from .keys import derive_seed, derive_stream
from .media import AudioClip, ImageBuffer, MediaObject, TextDocument, VideoClip, modality_of
from .visual import BLOCK, dct8_forward, dct8_inverse, to_luma

# JPEG Annex K luminance table
JPEG_LUMA_TABLE = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.int64,
)


@dataclass(frozen=True)
class AttackSpec:
    name: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def label(self) -> str:
        if not self.params:
            return self.name
        args = ",".join(f"{k}={_fmt(v)}" for k, v in sorted(self.params.items()))
        return f"{self.name}({args})"

    def to_dict(self) -> dict:
        return {"name": self.name, "params": dict(sorted(self.params.items())), "seed": self.seed}

    @classmethod
    def from_dict(cls, data) -> "AttackSpec":
        if isinstance(data, str):
            return cls(data)
        if not isinstance(data, dict) or "name" not in data:
            raise BadParams(f"attack entry needs a name: {data!r}")
        extra = set(data) - {"name", "params", "seed"}
        if extra:
            raise BadParams(f"unknown attack entry keys: {sorted(extra)}")
        return cls(str(data["name"]), dict(data.get("params") or {}), int(data.get("seed", 0)))


def _fmt(v) -> str:
    return f"{v:g}" if isinstance(v, float) else str(v)


IDENTITY = AttackSpec("none")


@dataclass(frozen=True)
class Param:
    kind: type
    lo: float
    hi: float
    lo_open: bool = False
    hi_open: bool = False

    def check(self, attack: str, name: str, value):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise BadParams(f"{attack}.{name} must be a number, got {value!r}")
        if self.kind is int:
            if isinstance(value, float) and not value.is_integer():
                raise BadParams(f"{attack}.{name} must be an integer, got {value!r}")
            value = int(value)
        else:
            value = float(value)
        low_ok = value > self.lo if self.lo_open else value >= self.lo
        high_ok = value < self.hi if self.hi_open else value <= self.hi
        if not (low_ok and high_ok):
            lb = "(" if self.lo_open else "["
            rb = ")" if self.hi_open else "]"
            raise BadParams(f"{attack}.{name}={value} outside {lb}{self.lo}, {self.hi}{rb}")
        return value


IMAGE_PARAMS = {
    "jpeg_sim": {"quality": Param(int, 1, 100)},
    "gauss_blur": {"sigma": Param(float, 0, 20, lo_open=True)},
    "gauss_noise": {"sigma": Param(float, 0, 128)},
    "center_crop": {"ratio": Param(float, 0, 1, lo_open=True)},
    "resize_cycle": {"scale": Param(float, 0, 1, lo_open=True, hi_open=True)},
    "brightness": {"delta": Param(int, -64, 64)},
    "contrast": {"factor": Param(float, 0.5, 2.0)},
}
VIDEO_PARAMS = {
    "frame_drop": {"p": Param(float, 0, 0.9)},
    "frame_average": {"k": Param(int, 3, 999)},
}
AUDIO_PARAMS = {
    "noise_snr": {"snr_db": Param(float, -20, 120)},
    "time_stretch": {"rate": Param(float, 0.8, 1.25)},
    "lowpass": {"cutoff_hz": Param(float, 0, 1e6, lo_open=True)},
    "requantize": {"bits": Param(int, 4, 12)},
    "gain": {"a": Param(float, 0.1, 1.0)},
}
TEXT_PARAMS = {
    "sentence_drop": {"p": Param(float, 0, 1, hi_open=True)},
    "case_fold": {},
    "whitespace_norm": {},
}

_BY_MODALITY = {
    Modality.IMAGE: IMAGE_PARAMS,
    Modality.VIDEO: {**IMAGE_PARAMS, **VIDEO_PARAMS},
    Modality.AUDIO: AUDIO_PARAMS,
    Modality.TEXT: TEXT_PARAMS,
}


def registered_attacks(modality: Modality | str) -> list[str]:
    return ["none", *_BY_MODALITY[Modality(modality)]]


def validate_attack(spec: AttackSpec, modality: Modality | str) -> dict:
    """Check name and params for a modality; returns normalized params."""
    if spec.name == "none":
        if spec.params:
            raise BadParams("the identity attack takes no params")
        return {}
    table = _BY_MODALITY[Modality(modality)]
    if spec.name not in table:
        raise UnknownAttack(f"{spec.name!r} is not a registered {Modality(modality).value} attack")
    schema = table[spec.name]
    missing = set(schema) - set(spec.params)
    extra = set(spec.params) - set(schema)
    if missing or extra:
        raise BadParams(
            f"{spec.name}: missing params {sorted(missing)}, unexpected {sorted(extra)}"
        )
    return {k: schema[k].check(spec.name, k, v) for k, v in spec.params.items()}


def _to_u8(arr: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(arr), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------- image core

def jpeg_quant_table(quality: int) -> np.ndarray:
    scale = 5000 // quality if quality < 50 else 200 - 2 * quality
    return np.clip((JPEG_LUMA_TABLE * scale + 50) // 100, 1, 255)


def _jpeg_sim(img: ImageBuffer, quality: int) -> ImageBuffer:
    y, _ = to_luma(img)
    h, w = y.shape
    ph, pw = -h % BLOCK, -w % BLOCK
    padded = np.pad(y, ((0, ph), (0, pw)), mode="edge") - 128.0
    H, W = padded.shape
    blocks = padded.reshape(H // BLOCK, BLOCK, W // BLOCK, BLOCK).swapaxes(1, 2)
    table = jpeg_quant_table(quality).astype(np.float64)
    coeffs = dct8_forward(blocks)
    recon = dct8_inverse(np.rint(coeffs / table) * table)
    y2 = recon.swapaxes(1, 2).reshape(H, W)[:h, :w] + 128.0
    # chroma is untouched: shift every channel by the luma change
    return ImageBuffer(_to_u8(img.pixels + (y2 - y)[:, :, None]))


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = int(math.ceil(3 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x**2) / (2 * sigma * sigma))
    return k / k.sum()


def _gauss_blur(img: ImageBuffer, sigma: float) -> ImageBuffer:
    k = gaussian_kernel(sigma)
    px = img.pixels.astype(np.float64)
    px = correlate1d(px, k, axis=0, mode="nearest")
    px = correlate1d(px, k, axis=1, mode="nearest")
    return ImageBuffer(_to_u8(px))


def _gauss_noise(img: ImageBuffer, sigma: float, seed: int) -> ImageBuffer:
    if sigma == 0:
        return ImageBuffer(img.pixels.copy())
    noise = derive_stream(seed, "gauss_noise").normal(img.pixels.size)
    return ImageBuffer(_to_u8(img.pixels + sigma * noise.reshape(img.pixels.shape)))


def _center_crop(img: ImageBuffer, ratio: float) -> ImageBuffer:
    cw = max(1, int(math.floor(ratio * img.width)))
    ch = max(1, int(math.floor(ratio * img.height)))
    top = (img.height - ch) // 2
    left = (img.width - cw) // 2
    return ImageBuffer(img.pixels[top : top + ch, left : left + cw].copy())


def bilinear_resize(px: np.ndarray, height: int, width: int) -> np.ndarray:
    """Half-pixel-centred bilinear resampling of an (h, w, c) float array."""
    h, w = px.shape[:2]

    def axis(n_out, n_in):
        pos = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        pos = np.clip(pos, 0, n_in - 1)
        lo = np.floor(pos).astype(int)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, pos - lo

    y0, y1, fy = axis(height, h)
    x0, x1, fx = axis(width, w)
    top = px[y0] * (1 - fy)[:, None, None] + px[y1] * fy[:, None, None]
    return top[:, x0] * (1 - fx)[None, :, None] + top[:, x1] * fx[None, :, None]


def _resize_cycle(img: ImageBuffer, scale: float) -> ImageBuffer:
    sh = max(1, int(math.floor(scale * img.height)))
    sw = max(1, int(math.floor(scale * img.width)))
    small = _to_u8(bilinear_resize(img.pixels.astype(np.float64), sh, sw))
    back = bilinear_resize(small.astype(np.float64), img.height, img.width)
    return ImageBuffer(_to_u8(back))


def _apply_image(img: ImageBuffer, name: str, p: dict, seed: int) -> ImageBuffer:
    if name == "jpeg_sim":
        return _jpeg_sim(img, p["quality"])
    if name == "gauss_blur":
        return _gauss_blur(img, p["sigma"])
    if name == "gauss_noise":
        return _gauss_noise(img, p["sigma"], seed)
    if name == "center_crop":
        return _center_crop(img, p["ratio"])
    if name == "resize_cycle":
        return _resize_cycle(img, p["scale"])
    if name == "brightness":
        return ImageBuffer(np.clip(img.pixels.astype(np.int64) + p["delta"], 0, 255).astype(np.uint8))
    if name == "contrast":
        return ImageBuffer(_to_u8((img.pixels - 128.0) * p["factor"] + 128.0))
    raise UnknownAttack(name)


def apply_image_attack(img: ImageBuffer, spec: AttackSpec) -> ImageBuffer:
    p = validate_attack(spec, Modality.IMAGE)
    if spec.name == "none":
        return img
    return _apply_image(img, spec.name, p, spec.seed)


# --------------------------------------------------------------------- video

def _frame_drop(clip: VideoClip, p: float, seed: int) -> VideoClip:
    if p == 0:
        return clip
    u = derive_stream(seed, "frame_drop").uniform(len(clip.frames))
    keep = [f for f, ui in zip(clip.frames, u) if ui >= p]
    return VideoClip(keep or [clip.frames[0]], clip.fps)


def _frame_average(clip: VideoClip, k: int) -> VideoClip:
    if k % 2 == 0:
        raise BadParams(f"frame_average.k must be odd, got {k}")
    stack = clip.stack().astype(np.float64)
    n = len(stack)
    half = k // 2
    csum = np.concatenate([np.zeros((1,) + stack.shape[1:]), np.cumsum(stack, axis=0)])
    lo = np.maximum(np.arange(n) - half, 0)
    hi = np.minimum(np.arange(n) + half, n - 1) + 1
    means = (csum[hi] - csum[lo]) / (hi - lo)[:, None, None, None]
    return VideoClip.from_stack(np.clip(np.floor(means + 0.5), 0, 255).astype(np.uint8), clip.fps)


def apply_video_attack(clip: VideoClip, spec: AttackSpec) -> VideoClip:
    p = validate_attack(spec, Modality.VIDEO)
    if spec.name == "none":
        return clip
    if spec.name == "frame_drop":
        return _frame_drop(clip, p["p"], spec.seed)
    if spec.name == "frame_average":
        return _frame_average(clip, p["k"])
    frames = [
        _apply_image(f, spec.name, p, derive_seed(spec.seed, "frame", i))
        for i, f in enumerate(clip.frames)
    ]
    return VideoClip(frames, clip.fps)


# --------------------------------------------------------------------- audio

LOWPASS_TAPS = 127


def lowpass_kernel(cutoff_hz: float, sample_rate: int) -> np.ndarray:
    fc = cutoff_hz / sample_rate
    n = np.arange(LOWPASS_TAPS) - (LOWPASS_TAPS - 1) / 2
    h = 2 * fc * np.sinc(2 * fc * n) * np.hamming(LOWPASS_TAPS)
    return h / h.sum()


def _noise_snr(audio: AudioClip, snr_db: float, seed: int) -> AudioClip:
    power = float(np.mean(audio.samples**2)) if audio.samples.size else 0.0
    if power == 0:
        return audio
    sigma = math.sqrt(power / 10 ** (snr_db / 10))
    noise = derive_stream(seed, "noise_snr").normal(audio.samples.size).reshape(audio.samples.shape)
    return AudioClip(np.clip(audio.samples + sigma * noise, -1, 1), audio.sample_rate)


def _time_stretch(audio: AudioClip, rate: float) -> AudioClip:
    if rate == 1:
        return audio
    n = audio.num_samples
    n_out = int(math.floor(n / rate))
    pos = np.arange(n_out) * rate
    src = np.arange(n)
    out = np.stack([np.interp(pos, src, ch) for ch in audio.samples])
    return AudioClip(out, audio.sample_rate)


def _lowpass(audio: AudioClip, cutoff_hz: float) -> AudioClip:
    if cutoff_hz >= audio.sample_rate / 2:
        raise BadParams(f"lowpass.cutoff_hz={cutoff_hz} must be below Nyquist")
    h = lowpass_kernel(cutoff_hz, audio.sample_rate)
    delay = (LOWPASS_TAPS - 1) // 2
    n = audio.num_samples
    out = np.stack([np.convolve(ch, h, mode="full")[delay : delay + n] for ch in audio.samples])
    return AudioClip(np.clip(out, -1, 1), audio.sample_rate)


def _requantize(audio: AudioClip, bits: int) -> AudioClip:
    step = 2.0 / (2**bits - 1)
    out = np.rint((audio.samples + 1.0) / step) * step - 1.0
    return AudioClip(np.clip(out, -1, 1), audio.sample_rate)


def apply_audio_attack(audio: AudioClip, spec: AttackSpec) -> AudioClip:
    p = validate_attack(spec, Modality.AUDIO)
    name = spec.name
    if name == "none":
        return audio
    if name == "noise_snr":
        return _noise_snr(audio, p["snr_db"], spec.seed)
    if name == "time_stretch":
        return _time_stretch(audio, p["rate"])
    if name == "lowpass":
        return _lowpass(audio, p["cutoff_hz"])
    if name == "requantize":
        return _requantize(audio, p["bits"])
    if p["a"] == 1:
        return audio
    return AudioClip(np.clip(audio.samples * p["a"], -1, 1), audio.sample_rate)


# ---------------------------------------------------------------------- text

def _sentence_drop(doc: TextDocument, p: float, seed: int) -> TextDocument:
    from .text import split_sentences

    if p == 0:
        return doc
    text = doc.content
    spans = split_sentences(text)
    if not spans:
        return doc
    u = derive_stream(seed, "sentence_drop").uniform(len(spans))
    keep = [i for i in range(len(spans)) if u[i] >= p] or [0]
    # a kept sentence keeps the whitespace that follows it
    pieces = [text[: spans[0][0]]]
    for i in keep:
        end = spans[i + 1][0] if i + 1 < len(spans) else len(text)
        pieces.append(text[spans[i][0] : end])
    return TextDocument("".join(pieces))


def apply_text_attack(doc: TextDocument, spec: AttackSpec) -> TextDocument:
    p = validate_attack(spec, Modality.TEXT)
    if spec.name == "none":
        return doc
    if spec.name == "sentence_drop":
        return _sentence_drop(doc, p["p"], spec.seed)
    if spec.name == "case_fold":
        return TextDocument(doc.content.lower())
    return TextDocument(re.sub(r"\s+", " ", doc.content))


def apply_attack(media: MediaObject, spec: AttackSpec) -> MediaObject:
    modality = modality_of(media)
    if modality is Modality.IMAGE:
        return apply_image_attack(media, spec)
    if modality is Modality.VIDEO:
        return apply_video_attack(media, spec)
    if modality is Modality.AUDIO:
        return apply_audio_attack(media, spec)
    return apply_text_attack(media, spec)
