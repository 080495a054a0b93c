"""Shared vocabulary: modalities, operation modes, keys, payloads, results."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .keys import MASK64, fnv1a64, derive_stream


class Modality(str, enum.Enum):
    IMAGE = "image"
    VIDEO = "video"
    AUDIO = "audio"
    TEXT = "text"


class OperationMode(str, enum.Enum):
    WATERMARK = "watermark"
    VISIBLE_MARK = "visible_mark"


@dataclass(frozen=True)
class SecretKey:
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & MASK64)

    @classmethod
    def from_string(cls, text: str) -> "SecretKey":
        return cls(fnv1a64(text))


def as_key(key) -> SecretKey:
    if isinstance(key, SecretKey):
        return key
    if isinstance(key, str):
        return SecretKey.from_string(key)
    return SecretKey(int(key))


MAX_PAYLOAD_BITS = 256


@dataclass(frozen=True)
class MessagePayload:
    """Fixed-length bit vector, MSB-first when built from hex."""

    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if not 1 <= len(bits) <= MAX_PAYLOAD_BITS:
            raise ValueError(f"payload length must be 1..{MAX_PAYLOAD_BITS}, got {len(bits)}")
        if any(b not in (0, 1) for b in bits):
            raise ValueError("payload bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    def __len__(self) -> int:
        return len(self.bits)

    @property
    def length(self) -> int:
        return len(self.bits)

    @classmethod
    def from_hex(cls, text: str, nbits: int | None = None) -> "MessagePayload":
        text = text.strip().lower()
        if text.startswith("0x"):
            text = text[2:]
        if not text or any(c not in "0123456789abcdef" for c in text):
            raise ValueError(f"not a hex string: {text!r}")
        bits = []
        for c in text:
            v = int(c, 16)
            bits.extend((v >> s) & 1 for s in (3, 2, 1, 0))
        if nbits is not None:
            if nbits > len(bits):
                raise ValueError(f"hex string too short for {nbits} bits")
            bits = bits[:nbits]
        return cls(tuple(bits))

    def to_hex(self) -> str:
        return bits_to_hex(self.bits)

    def as_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.int8)

    @classmethod
    def random(cls, nbits: int, key, tag: str = "payload", index: int = 0) -> "MessagePayload":
        raw = derive_stream(key, tag, index).u64(nbits)
        return cls(tuple(int(x >> np.uint64(63)) for x in raw))


def bits_to_hex(bits) -> str:
    """Hex rendering, MSB-first, zero-padded at the tail to a whole nibble."""
    bits = list(bits)
    bits += [0] * (-len(bits) % 4)
    out = []
    for i in range(0, len(bits), 4):
        v = bits[i] << 3 | bits[i + 1] << 2 | bits[i + 2] << 1 | bits[i + 3]
        out.append("0123456789abcdef"[v])
    return "".join(out)


@dataclass(frozen=True)
class ExtractionResult:
    detected: bool
    confidence: float
    bits: tuple[int, ...] | None = None
    segments: tuple[tuple[int, int], ...] | None = None
    bit_count: int = field(default=0)

    def __post_init__(self):
        object.__setattr__(self, "confidence", max(0.0, float(self.confidence)))
        if self.bits is not None:
            object.__setattr__(self, "bits", tuple(int(b) for b in self.bits))
            object.__setattr__(self, "bit_count", len(self.bits))
        if self.segments is not None:
            object.__setattr__(
                self, "segments", tuple((int(a), int(b)) for a, b in self.segments)
            )

    @property
    def hex(self) -> str | None:
        return None if self.bits is None else bits_to_hex(self.bits)
