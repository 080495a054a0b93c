"""Engine configuration: built-in defaults overlaid by a YAML file.

Validation is strict. Unknown keys and out-of-range values raise instead of
being ignored, so a typo can never silently change benchmark results.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigParseError, OutOfRangeValue, UnknownConfigKey

CORNERS = ("top_left", "top_right", "bottom_left", "bottom_right")


def _require(cond: bool, name: str, value, rule: str) -> None:
    if not cond:
        raise OutOfRangeValue(f"{name}={value!r} out of range: {rule}")


@dataclass
class EngineSection:
    default_message_bits: int = 64

    def validate(self, prefix: str) -> None:
        v = self.default_message_bits
        _require(1 <= v <= 256, f"{prefix}.default_message_bits", v, "1..256")


@dataclass
class VisualWatermarkConfig:
    algorithm: str = "dct-ss"
    strength: float = 2.0
    block: int = 8
    detect_threshold: float = 3.0

    def validate(self, prefix: str) -> None:
        _require(self.algorithm == "dct-ss", f"{prefix}.algorithm", self.algorithm, "dct-ss")
        _require(0 < self.strength <= 64, f"{prefix}.strength", self.strength, "(0, 64]")
        _require(self.block == 8, f"{prefix}.block", self.block, "8")
        _require(self.detect_threshold > 0, f"{prefix}.detect_threshold", self.detect_threshold, "> 0")


@dataclass
class VisualMarkConfig:
    corner: str = "bottom_right"
    scale: float = 0.08

    def validate(self, prefix: str) -> None:
        _require(self.corner in CORNERS, f"{prefix}.corner", self.corner, "|".join(CORNERS))
        _require(0 < self.scale <= 0.5, f"{prefix}.scale", self.scale, "(0, 0.5]")


@dataclass
class ImageSection:
    watermark: VisualWatermarkConfig = field(default_factory=VisualWatermarkConfig)
    visible_mark: VisualMarkConfig = field(default_factory=VisualMarkConfig)


@dataclass
class VideoSection:
    aggregate: str = "mean"

    def validate(self, prefix: str) -> None:
        _require(self.aggregate == "mean", f"{prefix}.aggregate", self.aggregate, "mean")


@dataclass
class AudioWatermarkConfig:
    algorithm: str = "window-ss"
    window: int = 4096
    gain: float = 0.05
    sync_bits: int = 16
    payload_bits: int = 32
    window_threshold: float = 0.5
    detect_threshold: float = 3.0
    rms_floor: float = 0.01

    def validate(self, prefix: str) -> None:
        _require(self.algorithm == "window-ss", f"{prefix}.algorithm", self.algorithm, "window-ss")
        _require(256 <= self.window <= 1 << 16, f"{prefix}.window", self.window, "256..65536")
        _require(0 < self.gain < 0.5, f"{prefix}.gain", self.gain, "(0, 0.5)")
        _require(1 <= self.sync_bits <= 16, f"{prefix}.sync_bits", self.sync_bits, "1..16")
        _require(1 <= self.payload_bits <= 256, f"{prefix}.payload_bits", self.payload_bits, "1..256")
        _require(0 < self.window_threshold < 2, f"{prefix}.window_threshold", self.window_threshold, "(0, 2)")
        _require(self.detect_threshold > 0, f"{prefix}.detect_threshold", self.detect_threshold, "> 0")
        _require(0 < self.rms_floor <= 1, f"{prefix}.rms_floor", self.rms_floor, "(0, 1]")


@dataclass
class AudioMarkConfig:
    tone_ms: int = 125

    def validate(self, prefix: str) -> None:
        _require(20 <= self.tone_ms <= 1000, f"{prefix}.tone_ms", self.tone_ms, "20..1000")


@dataclass
class AudioSection:
    watermark: AudioWatermarkConfig = field(default_factory=AudioWatermarkConfig)
    visible_mark: AudioMarkConfig = field(default_factory=AudioMarkConfig)


@dataclass
class TextWatermarkConfig:
    algorithm: str = "lexical"
    payload_bits: int = 16
    min_sentences: int = 4
    detect_threshold: float = 0.7

    def validate(self, prefix: str) -> None:
        _require(self.algorithm == "lexical", f"{prefix}.algorithm", self.algorithm, "lexical")
        _require(1 <= self.payload_bits <= 256, f"{prefix}.payload_bits", self.payload_bits, "1..256")
        _require(self.min_sentences >= 1, f"{prefix}.min_sentences", self.min_sentences, ">= 1")
        _require(0 < self.detect_threshold <= 1, f"{prefix}.detect_threshold", self.detect_threshold, "(0, 1]")


@dataclass
class TextMarkConfig:
    label: str = "[AI-GENERATED]"

    def validate(self, prefix: str) -> None:
        ok = bool(self.label.strip()) and "\n" not in self.label
        _require(ok, f"{prefix}.label", self.label, "non-empty single line")


@dataclass
class TextSection:
    watermark: TextWatermarkConfig = field(default_factory=TextWatermarkConfig)
    visible_mark: TextMarkConfig = field(default_factory=TextMarkConfig)


@dataclass
class BenchSection:
    seed: int = 42
    trials: int = 20
    output_dir: str = "bench_out"

    def validate(self, prefix: str) -> None:
        _require(0 <= self.seed < 1 << 64, f"{prefix}.seed", self.seed, "0..2^64-1")
        _require(1 <= self.trials <= 10_000, f"{prefix}.trials", self.trials, "1..10000")


@dataclass
class EngineConfig:
    engine: EngineSection = field(default_factory=EngineSection)
    image: ImageSection = field(default_factory=ImageSection)
    video: VideoSection = field(default_factory=VideoSection)
    audio: AudioSection = field(default_factory=AudioSection)
    text: TextSection = field(default_factory=TextSection)
    bench: BenchSection = field(default_factory=BenchSection)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=False)


def _coerce(name: str, current, value):
    if isinstance(current, bool) or isinstance(value, bool):
        raise OutOfRangeValue(f"{name}: booleans are not accepted")
    if isinstance(current, int):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int):
            raise OutOfRangeValue(f"{name}: expected integer, got {value!r}")
        return value
    if isinstance(current, float):
        if not isinstance(value, (int, float)):
            raise OutOfRangeValue(f"{name}: expected number, got {value!r}")
        return float(value)
    if isinstance(current, str):
        if not isinstance(value, str):
            raise OutOfRangeValue(f"{name}: expected string, got {value!r}")
        return value
    raise TypeError(f"unsupported config field type for {name}")


def _overlay(section, values: dict, prefix: str) -> None:
    if not isinstance(values, dict):
        raise ConfigParseError(f"{prefix or 'config'} must be a mapping")
    known = {f.name: f for f in dataclasses.fields(section)}
    for key, value in values.items():
        name = f"{prefix}.{key}" if prefix else str(key)
        if key not in known:
            raise UnknownConfigKey(f"unknown config key {name!r}")
        current = getattr(section, key)
        if dataclasses.is_dataclass(current):
            if value is None:
                continue
            _overlay(current, value, name)
        else:
            setattr(section, key, _coerce(name, current, value))


def _validate(section, prefix: str = "") -> None:
    for f in dataclasses.fields(section):
        child = getattr(section, f.name)
        if dataclasses.is_dataclass(child):
            _validate(child, f"{prefix}.{f.name}" if prefix else f.name)
    check = getattr(section, "validate", None)
    if check is not None:
        check(prefix)


def config_from_dict(values: dict | None) -> EngineConfig:
    cfg = EngineConfig()
    if values:
        _overlay(cfg, values, "")
    _validate(cfg)
    return cfg


def load_config(path=None) -> EngineConfig:
    """Built-in defaults, overlaid by ``path`` when given."""
    if path is None:
        return config_from_dict(None)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise ConfigParseError(f"config file not found: {path}") from exc
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigParseError(f"cannot read config {path}: {exc}") from exc
    try:
        values = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigParseError(f"invalid YAML in {path}: {exc}") from exc
    if values is not None and not isinstance(values, dict):
        raise ConfigParseError(f"{path}: top level must be a mapping")
    return config_from_dict(values)


DEFAULT_CONFIG_PATH = Path(__file__).parent / "config" / "default_config.yaml"
