"""Media containers and their file formats.

Images are PNG (8-bit gray/RGB, non-interlaced) or binary PPM/PGM with
maxval 255. Video is a directory of PNG frames plus ``manifest.json``.
Audio is 16-bit PCM WAV. All round trips are bit-exact.
"""

from __future__ import annotations

import io
import json
import struct
import wave
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from .core import Modality
from .errors import (
    DecodeError,
    InconsistentFrames,
    IoError,
    NotSingleFrame,
    UnsupportedFormat,
)

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


@dataclass(eq=False)
class ImageBuffer:
    """8-bit image, ``pixels`` shaped (height, width, channels)."""

    pixels: np.ndarray
    modality = Modality.IMAGE

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim == 2:
            px = px[:, :, None]
        if px.ndim != 3 or px.shape[2] not in (1, 3):
            raise ValueError(f"expected (h, w, 1|3) pixels, got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if px.dtype != np.uint8:
            if np.any(px < 0) or np.any(px > 255):
                raise ValueError("samples must lie in [0, 255]")
            px = px.astype(np.uint8)
        self.pixels = np.ascontiguousarray(px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @property
    def samples(self) -> bytes:
        return self.pixels.tobytes()

    def __eq__(self, other):
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and np.array_equal(
            self.pixels, other.pixels
        )


@dataclass(eq=False)
class VideoClip:
    frames: list[ImageBuffer]
    fps: Fraction = Fraction(1)
    modality = Modality.VIDEO

    def __post_init__(self):
        self.frames = list(self.frames)
        if not self.frames:
            raise ValueError("a clip needs at least one frame")
        shape = self.frames[0].pixels.shape
        for i, frame in enumerate(self.frames):
            if frame.pixels.shape != shape:
                raise InconsistentFrames(
                    f"frame {i} has shape {frame.pixels.shape}, expected {shape}"
                )
        fps = Fraction(self.fps).limit_denominator(1_000_000)
        if fps <= 0:
            raise ValueError("fps must be positive")
        self.fps = fps

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height

    @property
    def channels(self) -> int:
        return self.frames[0].channels

    def __len__(self) -> int:
        return len(self.frames)

    def stack(self) -> np.ndarray:
        """All frames as one (n, h, w, c) uint8 array."""
        return np.stack([f.pixels for f in self.frames])

    @classmethod
    def from_stack(cls, arr: np.ndarray, fps=Fraction(1)) -> "VideoClip":
        return cls([ImageBuffer(a) for a in arr], fps)

    def __eq__(self, other):
        if not isinstance(other, VideoClip):
            return NotImplemented
        return (
            self.fps == other.fps
            and len(self.frames) == len(other.frames)
            and all(a == b for a, b in zip(self.frames, other.frames))
        )


@dataclass(eq=False)
class AudioClip:
    """Planar float samples shaped (channels, n) in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int = 16000
    modality = Modality.AUDIO

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.float64)
        if s.ndim == 1:
            s = s[None, :]
        if s.ndim != 2 or s.shape[0] not in (1, 2):
            raise ValueError(f"expected (1|2, n) samples, got shape {s.shape}")
        if s.size and (np.max(s) > 1.0 or np.min(s) < -1.0 or not np.all(np.isfinite(s))):
            raise ValueError("audio samples must lie in [-1, 1]")
        if int(self.sample_rate) < 8000:
            raise ValueError("sample_rate must be >= 8000 Hz")
        self.samples = s
        self.sample_rate = int(self.sample_rate)

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def num_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return self.num_samples / self.sample_rate

    def __eq__(self, other):
        if not isinstance(other, AudioClip):
            return NotImplemented
        return (
            self.sample_rate == other.sample_rate
            and self.samples.shape == other.samples.shape
            and np.array_equal(self.samples, other.samples)
        )


@dataclass(frozen=True)
class TextDocument:
    content: str
    modality = Modality.TEXT

    def __post_init__(self):
        if not isinstance(self.content, str):
            raise ValueError("content must be str")
        try:
            self.content.encode("utf-8")
        except UnicodeEncodeError as exc:
            raise ValueError(f"content is not valid UTF-8: {exc}") from None


MediaObject = Union[ImageBuffer, VideoClip, AudioClip, TextDocument]


def modality_of(media: MediaObject) -> Modality:
    try:
        return media.modality
    except AttributeError:
        raise TypeError(f"not a media object: {type(media).__name__}") from None


# --------------------------------------------------------------------- images

def _read_bytes(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except FileNotFoundError as exc:
        raise DecodeError(f"no such file: {path}") from exc
    except OSError as exc:
        raise IoError(str(exc)) from exc


def _write_bytes(path, data: bytes) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _parse_pnm(data: bytes) -> ImageBuffer:
    magic = data[:2]
    channels = {b"P5": 1, b"P6": 3}[magic]
    fields = []
    pos = 2
    n = len(data)
    while len(fields) < 3:
        if pos >= n:
            raise DecodeError("truncated PNM header")
        c = data[pos : pos + 1]
        if c == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        elif c.isdigit():
            start = pos
            while pos < n and data[pos : pos + 1].isdigit():
                pos += 1
            fields.append(int(data[start:pos]))
        else:
            raise DecodeError(f"unexpected byte {c!r} in PNM header")
    if pos >= n or not data[pos : pos + 1].isspace():
        raise DecodeError("truncated PNM header")
    pos += 1
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise DecodeError("PNM dimensions must be positive")
    if maxval != 255:
        raise UnsupportedFormat(f"PNM maxval {maxval} unsupported (need 255)")
    size = width * height * channels
    body = data[pos : pos + size]
    if len(body) != size:
        raise DecodeError(f"PNM body has {len(body)} bytes, expected {size}")
    px = np.frombuffer(body, dtype=np.uint8).reshape(height, width, channels)
    return ImageBuffer(px.copy())


def _check_png_header(data: bytes) -> None:
    if len(data) < 33 or data[12:16] != b"IHDR":
        raise DecodeError("PNG missing IHDR")
    width, height, depth, color, _, _, interlace = struct.unpack(">IIBBBBB", data[16:29])
    if depth != 8:
        raise UnsupportedFormat(f"PNG bit depth {depth} unsupported (need 8)")
    if color not in (0, 2):
        raise UnsupportedFormat(f"PNG color type {color} unsupported (need gray or RGB)")
    if interlace != 0:
        raise UnsupportedFormat("interlaced PNG unsupported")
    if width < 1 or height < 1:
        raise DecodeError("PNG dimensions must be positive")


def _parse_png(data: bytes) -> ImageBuffer:
    _check_png_header(data)
    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            if im.mode not in ("L", "RGB"):
                raise UnsupportedFormat(f"PNG mode {im.mode} unsupported")
            px = np.asarray(im, dtype=np.uint8)
    except (UnsupportedFormat, DecodeError):
        raise
    except Exception as exc:
        raise DecodeError(f"malformed PNG: {exc}") from exc
    return ImageBuffer(px.copy())


def decode_image(data: bytes) -> ImageBuffer:
    """Decode PNG or P5/P6 bytes; anything else is rejected."""
    if data.startswith(PNG_SIGNATURE):
        return _parse_png(data)
    if data[:2] in (b"P5", b"P6"):
        return _parse_pnm(data)
    if len(data) < 2:
        raise DecodeError("file too short to identify")
    raise UnsupportedFormat("not a PNG or binary PPM/PGM file")


def encode_image(img: ImageBuffer, fmt: str = "png") -> bytes:
    fmt = fmt.lower()
    if fmt in ("ppm", "pgm", "pnm"):
        magic = b"P5" if img.channels == 1 else b"P6"
        header = magic + b"\n%d %d\n255\n" % (img.width, img.height)
        return header + img.pixels.tobytes()
    if fmt == "png":
        mode = "L" if img.channels == 1 else "RGB"
        arr = img.pixels[:, :, 0] if img.channels == 1 else img.pixels
        buf = io.BytesIO()
        Image.fromarray(arr, mode=mode).save(buf, format="PNG")
        return buf.getvalue()
    raise UnsupportedFormat(f"unknown image format {fmt!r}")


def load_image(path) -> ImageBuffer:
    return decode_image(_read_bytes(path))


def save_image(img: ImageBuffer, path, fmt: str | None = None) -> None:
    if fmt is None:
        fmt = "png" if str(path).lower().endswith(".png") else "ppm"
    _write_bytes(path, encode_image(img, fmt))


# ---------------------------------------------------------------------- video

MANIFEST_NAME = "manifest.json"


def _fps_to_json(fps: Fraction):
    return int(fps) if fps.denominator == 1 else float(fps)


def load_video(manifest_path) -> VideoClip:
    path = Path(manifest_path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    try:
        manifest = json.loads(_read_bytes(path).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DecodeError(f"malformed manifest: {exc}") from exc
    if not isinstance(manifest, dict) or set(manifest) < {"fps", "frames"}:
        raise DecodeError("manifest needs 'fps' and 'frames'")
    frames = manifest["frames"]
    fps = manifest["fps"]
    if not isinstance(frames, list) or not frames:
        raise DecodeError("manifest 'frames' must be a non-empty list")
    if isinstance(fps, bool) or not isinstance(fps, (int, float)) or fps <= 0:
        raise DecodeError("manifest 'fps' must be a positive number")
    images = [load_image(path.parent / str(name)) for name in frames]
    return VideoClip(images, Fraction(fps).limit_denominator(1_000_000))


def save_video(clip: VideoClip, dir_path) -> Path:
    out = Path(dir_path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {out}: {exc}") from exc
    width = max(4, len(str(len(clip.frames) - 1)))
    names = []
    for i, frame in enumerate(clip.frames):
        name = f"frame_{i:0{width}d}.png"
        save_image(frame, out / name, "png")
        names.append(name)
    manifest = {"fps": _fps_to_json(clip.fps), "frames": names}
    _write_bytes(out / MANIFEST_NAME, (json.dumps(manifest, indent=2) + "\n").encode())
    return out / MANIFEST_NAME


# ---------------------------------------------------------------------- audio

def decode_wav(data: bytes) -> AudioClip:
    try:
        with wave.open(io.BytesIO(data), "rb") as wf:
            channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except wave.Error as exc:
        if "unknown format" in str(exc):
            raise UnsupportedFormat(f"non-PCM WAV: {exc}") from exc
        raise DecodeError(f"malformed WAV: {exc}") from exc
    except (EOFError, struct.error, ValueError) as exc:
        raise DecodeError(f"malformed WAV: {exc}") from exc
    if width != 2:
        raise UnsupportedFormat(f"{8 * width}-bit WAV unsupported (need PCM16)")
    if channels not in (1, 2):
        raise UnsupportedFormat(f"{channels}-channel WAV unsupported")
    if rate < 8000:
        raise UnsupportedFormat(f"sample rate {rate} below 8000 Hz")
    ints = np.frombuffer(raw[: len(raw) - len(raw) % (2 * channels)], dtype="<i2")
    planar = ints.reshape(-1, channels).T.astype(np.float64) / 32768.0
    return AudioClip(planar, rate)


def encode_wav(clip: AudioClip) -> bytes:
    ints = np.clip(np.round(clip.samples * 32768.0), -32768, 32767).astype("<i2")
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(clip.channels)
        wf.setsampwidth(2)
        wf.setframerate(clip.sample_rate)
        wf.writeframes(ints.T.tobytes())
    return buf.getvalue()


def load_wav(path) -> AudioClip:
    return decode_wav(_read_bytes(path))


def save_wav(clip: AudioClip, path) -> None:
    _write_bytes(path, encode_wav(clip))


# ----------------------------------------------------------------------- text

def load_text(path) -> TextDocument:
    try:
        return TextDocument(_read_bytes(path).decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise DecodeError(f"not UTF-8 text: {exc}") from exc


def save_text(doc: TextDocument, path) -> None:
    _write_bytes(path, doc.content.encode("utf-8"))


# ----------------------------------------------------------- image <-> video

def image_as_clip(img: ImageBuffer) -> VideoClip:
    return VideoClip([img], Fraction(1))


def clip_as_image(clip: VideoClip) -> ImageBuffer:
    if len(clip.frames) != 1:
        raise NotSingleFrame(f"clip has {len(clip.frames)} frames")
    return clip.frames[0]


def load_media(path, modality: Modality | str) -> MediaObject:
    modality = Modality(modality)
    if modality is Modality.IMAGE:
        return load_image(path)
    if modality is Modality.VIDEO:
        return load_video(path)
    if modality is Modality.AUDIO:
        return load_wav(path)
    return load_text(path)


def save_media(media: MediaObject, path) -> None:
    modality = modality_of(media)
    if modality is Modality.IMAGE:
        save_image(media, path)
    elif modality is Modality.VIDEO:
        save_video(media, path)
    elif modality is Modality.AUDIO:
        save_wav(media, path)
    else:
        save_text(media, path)


__all__ = [
    "AudioClip",
    "ImageBuffer",
    "MediaObject",
    "TextDocument",
    "VideoClip",
    "clip_as_image",
    "decode_image",
    "decode_wav",
    "encode_image",
    "encode_wav",
    "image_as_clip",
    "load_image",
    "load_media",
    "load_text",
    "load_video",
    "load_wav",
    "modality_of",
    "save_image",
    "save_media",
    "save_text",
    "save_video",
    "save_wav",
]

