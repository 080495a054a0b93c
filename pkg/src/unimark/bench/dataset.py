"""Deterministic synthetic corpora standing in for external benchmark sets.

Item ``i`` of a dataset depends only on ``derive_stream(seed, "dataset", i)``
and the spec, so any item can be regenerated in isolation.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from ..core import Modality
from ..errors import BadSpec
from ..keys import KeyStream, derive_stream
from ..media import AudioClip, ImageBuffer, MediaObject, TextDocument, VideoClip, save_media

IMAGE_KINDS = ("gradient", "checker", "value_noise", "mixed")
GRAIN_AMPLITUDE = 10.0


@dataclass(frozen=True)
class DatasetSpec:
    modality: Modality
    count: int = 20
    seed: int = 42
    kind: str = "mixed"
    size: int = 256
    frames: int = 16
    fps: float = 8.0
    motion: float = 2.0
    duration: float = 15.0
    sample_rate: int = 16000
    sentences: int = 24

    def __post_init__(self):
        try:
            object.__setattr__(self, "modality", Modality(self.modality))
        except ValueError:
            raise BadSpec(f"unknown modality {self.modality!r}") from None
        checks = [
            (self.count >= 1, "count must be >= 1"),
            (self.kind in IMAGE_KINDS, f"kind must be one of {IMAGE_KINDS}"),
            (16 <= self.size <= 4096, "size must be 16..4096"),
            (1 <= self.frames <= 1000, "frames must be 1..1000"),
            (self.fps > 0, "fps must be positive"),
            (0 <= self.motion <= 64, "motion must be 0..64 px/frame"),
            (0 < self.duration <= 600, "duration must be in (0, 600] s"),
            (8000 <= self.sample_rate <= 192000, "sample_rate must be 8000..192000"),
            (1 <= self.sentences <= 10000, "sentences must be 1..10000"),
            (0 <= self.seed < 1 << 64, "seed must be a 64-bit unsigned integer"),
        ]
        for ok, msg in checks:
            if not ok:
                raise BadSpec(msg)

    @classmethod
    def from_dict(cls, data: dict, modality=None, seed=None) -> "DatasetSpec":
        if not isinstance(data, dict):
            raise BadSpec("dataset spec must be a mapping")
        data = dict(data)
        if modality is not None:
            data.setdefault("modality", modality)
        if seed is not None:
            data.setdefault("seed", seed)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise BadSpec(f"unknown dataset keys: {sorted(unknown)}")
        if "modality" not in data:
            raise BadSpec("dataset spec needs a modality")
        if data.get("modality") == "video" and "size" not in data:
            data["size"] = 128
        try:
            return cls(**data)
        except TypeError as exc:
            raise BadSpec(str(exc)) from None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["modality"] = self.modality.value
        return d


# ------------------------------------------------------------------- images

def value_noise(st: KeyStream, height: int, width: int, cell: int) -> np.ndarray:
    """Smooth lattice noise in [0, 1]."""
    gh, gw = height // cell + 2, width // cell + 2
    grid = st.uniform(gh * gw).reshape(gh, gw)

    def axis(n):
        t = np.arange(n) / cell
        i = t.astype(int)
        f = t - i
        return i, f * f * (3 - 2 * f)

    iy, fy = axis(height)
    ix, fx = axis(width)
    top = grid[iy][:, ix] * (1 - fx) + grid[iy][:, ix + 1] * fx
    bot = grid[iy + 1][:, ix] * (1 - fx) + grid[iy + 1][:, ix + 1] * fx
    return top * (1 - fy)[:, None] + bot * fy[:, None]


def _colors(st: KeyStream, n: int) -> np.ndarray:
    return 50.0 + 150.0 * st.uniform(3 * n).reshape(n, 3)


def _gradient(st, h, w):
    angle = 2 * np.pi * st.uniform(1)[0]
    c0, c1 = _colors(st, 2)
    y, x = np.mgrid[0:h, 0:w]
    t = (np.cos(angle) * x + np.sin(angle) * y) / max(h, w)
    t = (t - t.min()) / max(t.max() - t.min(), 1e-9)
    return c0 + (c1 - c0) * t[:, :, None]


def _checker(st, h, w):
    cell = 16 + int(st.integers(1, 33)[0])
    oy, ox = st.integers(2, cell)
    c0, c1 = _colors(st, 2)
    y, x = np.mgrid[0:h, 0:w]
    mask = (((y + oy) // cell + (x + ox) // cell) % 2).astype(bool)
    return np.where(mask[:, :, None], c1, c0)


def _value_noise_rgb(st, h, w):
    octaves = [(64, 0.55), (32, 0.3), (16, 0.15)]
    layers = []
    for _ in range(3):
        layers.append(sum(a * value_noise(st, h, w, c) for c, a in octaves))
    return 40.0 + 160.0 * np.stack(layers, axis=-1)


def synth_image_array(st: KeyStream, height: int, width: int, kind: str) -> np.ndarray:
    if kind == "gradient":
        base = _gradient(st, height, width)
    elif kind == "checker":
        base = _checker(st, height, width)
    elif kind == "value_noise":
        base = _value_noise_rgb(st, height, width)
    else:
        base = (
            0.45 * _gradient(st, height, width)
            + 0.35 * _value_noise_rgb(st, height, width)
            + 0.20 * _checker(st, height, width)
        )
    grain = GRAIN_AMPLITUDE * (value_noise(st, height, width, 4) - 0.5)
    return np.clip(np.rint(base + grain[:, :, None]), 0, 255).astype(np.uint8)


def synth_image(spec: DatasetSpec, index: int) -> ImageBuffer:
    st = derive_stream(spec.seed, "dataset", index)
    return ImageBuffer(synth_image_array(st, spec.size, spec.size, spec.kind))


def synth_video(spec: DatasetSpec, index: int) -> VideoClip:
    st = derive_stream(spec.seed, "dataset", index)
    travel = int(np.ceil(spec.motion * (spec.frames - 1)))
    canvas = synth_image_array(st, spec.size, spec.size + travel, spec.kind)
    frames = []
    for f in range(spec.frames):
        x0 = int(round(spec.motion * f))
        frames.append(ImageBuffer(canvas[:, x0 : x0 + spec.size].copy()))
    return VideoClip(frames, spec.fps)


# -------------------------------------------------------------------- audio

def synth_audio(spec: DatasetSpec, index: int) -> AudioClip:
    st = derive_stream(spec.seed, "dataset", index)
    sr = spec.sample_rate
    n = int(round(spec.duration * sr))
    t = np.arange(n) / sr
    x = np.zeros(n)
    partials = 3 + int(st.integers(1, 4)[0])
    for _ in range(partials):
        f, amp, rate, ph1, ph2 = st.uniform(5)
        freq = 110.0 + f * min(1890.0, 0.4 * sr - 110.0)
        envelope = 0.6 + 0.4 * np.sin(2 * np.pi * (0.1 + 1.9 * rate) * t + 6.28 * ph1)
        x += (0.2 + 0.8 * amp) * envelope * np.sin(2 * np.pi * freq * t + 6.28 * ph2)
    x /= np.sqrt(np.mean(x**2))
    noise_db = -30.0 + 10.0 * st.uniform(1)[0]
    x += 10 ** (noise_db / 20) * st.normal(n)
    x *= 0.2 / np.sqrt(np.mean(x**2))
    return AudioClip(np.clip(x, -1, 1), sr)


# --------------------------------------------------------------------- text

SUBJECTS = (
    "The committee", "A small team", "Our neighbor", "The city council", "Every student",
    "The old library", "A local baker", "The research group", "My cousin", "The museum staff",
    "A young engineer", "The school choir", "Two farmers", "The night guard", "Her brother",
    "The new manager", "A group of hikers", "The harbor office", "Our teacher", "The reporter",
)
VERBS = (
    "reviewed", "described", "built", "visited", "discussed", "improved", "measured",
    "painted", "collected", "planned", "repaired", "opened", "studied", "carried", "explained",
    "prepared", "checked", "cleaned", "found", "shared",
)
OBJECTS = (
    "the annual report", "a new bridge", "the garden", "several maps", "the evening schedule",
    "the main road", "a wooden boat", "the summer program", "the water supply", "an old clock",
    "the first draft", "a simple plan", "the train station", "the market stalls", "a large table",
    "the small park", "the budget", "a long letter", "the paper records", "the new website",
)
TAILS = (
    "before the winter", "after a long meeting", "in the morning", "with great care",
    "near the station", "for the first time", "during the festival", "without much help",
    "at the end of the week", "on a rainy day", "in the north district", "after lunch",
    "with the help of friends", "before the deadline", "under a clear sky", "for the visitors",
)
ENDINGS = (".", ".", ".", ".", ".", "!", "?")


def synth_sentence(st: KeyStream) -> str:
    s, v, o, t, e = (int(i) for i in st.integers(5, 1 << 30))
    ending = ENDINGS[e % len(ENDINGS)]
    return f"{SUBJECTS[s % len(SUBJECTS)]} {VERBS[v % len(VERBS)]} {OBJECTS[o % len(OBJECTS)]} {TAILS[t % len(TAILS)]}{ending}"


def synth_paragraphs(st: KeyStream, n_sentences: int) -> str:
    paragraphs, current = [], []
    target = 4 + int(st.integers(1, 3)[0])
    for _ in range(n_sentences):
        current.append(synth_sentence(st))
        if len(current) == target:
            paragraphs.append(" ".join(current))
            current = []
            target = 4 + int(st.integers(1, 3)[0])
    if current:
        paragraphs.append(" ".join(current))
    return "\n\n".join(paragraphs) + "\n"


def synth_text(spec: DatasetSpec, index: int) -> TextDocument:
    st = derive_stream(spec.seed, "dataset", index)
    return TextDocument(synth_paragraphs(st, spec.sentences))


_GENERATORS = {
    Modality.IMAGE: synth_image,
    Modality.VIDEO: synth_video,
    Modality.AUDIO: synth_audio,
    Modality.TEXT: synth_text,
}


def generate_item(spec: DatasetSpec, index: int) -> MediaObject:
    return _GENERATORS[spec.modality](spec, index)


def generate_dataset(spec: DatasetSpec) -> list[MediaObject]:
    return [generate_item(spec, i) for i in range(spec.count)]


_SUFFIX = {Modality.IMAGE: ".png", Modality.VIDEO: "", Modality.AUDIO: ".wav", Modality.TEXT: ".txt"}


def write_dataset(spec: DatasetSpec, out_dir) -> Path:
    """Write every item plus ``dataset.json`` listing them; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = []
    for i, item in enumerate(generate_dataset(spec)):
        name = f"item_{i:04d}{_SUFFIX[spec.modality]}"
        save_media(item, out / name)
        names.append(name)
    manifest = out / "dataset.json"
    manifest.write_text(json.dumps({"spec": spec.to_dict(), "items": names}, indent=2) + "\n")
    return manifest
