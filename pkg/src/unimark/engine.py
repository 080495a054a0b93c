"""The unified engine: one ``embed``/``extract`` pair for every modality and
operation mode.

Each ``(modality, mode)`` pair routes to a named backend slot in an
:class:`AdapterRegistry`. Backends are constructed on first use, exactly
once, even when many threads ask at the same time. Image and video hidden
watermarking share the ``visual`` backend; an image is handled as a
one-frame clip.
"""

from __future__ import annotations

import threading
from typing import Callable, Protocol

from . import audio, text, visual
from .config import EngineConfig, load_config
from .core import ExtractionResult, MessagePayload, Modality, OperationMode, SecretKey, as_key
from .errors import PayloadRequired, UnsupportedCombination
from .media import (
    AudioClip,
    ImageBuffer,
    MediaObject,
    TextDocument,
    VideoClip,
    clip_as_image,
    image_as_clip,
    modality_of,
)


class Adapter(Protocol):
    def embed(self, media, payload: MessagePayload | None, key: SecretKey): ...

    def extract(self, media, key: SecretKey, payload_bits: int | None = None) -> ExtractionResult: ...


def _as_clip(media) -> tuple[VideoClip, bool]:
    if isinstance(media, ImageBuffer):
        return image_as_clip(media), True
    if isinstance(media, VideoClip):
        return media, False
    raise TypeError(f"visual backend cannot handle {type(media).__name__}")


class VisualWatermarkAdapter:
    def __init__(self, cfg: EngineConfig):
        wm = cfg.image.watermark
        self.default_bits = cfg.engine.default_message_bits
        self.strength = wm.strength
        self.threshold = wm.detect_threshold

    def params(self, nbits: int) -> visual.VisualWmParams:
        return visual.VisualWmParams(self.strength, nbits, self.threshold)

    def embed(self, media, payload, key):
        clip, was_image = _as_clip(media)
        out = visual.embed_hidden(clip, payload, key, self.params(len(payload)))
        return clip_as_image(out) if was_image else out

    def extract(self, media, key, payload_bits=None):
        clip, _ = _as_clip(media)
        return visual.extract_hidden(clip, key, self.params(payload_bits or self.default_bits))


class VisualMarkAdapter:
    def __init__(self, cfg: EngineConfig):
        vm = cfg.image.visible_mark
        self.params = visual.VisualMarkParams(vm.corner, vm.scale)

    def embed(self, media, payload, key):
        clip, was_image = _as_clip(media)
        out = visual.embed_visible(clip, self.params)
        return clip_as_image(out) if was_image else out

    def extract(self, media, key, payload_bits=None):
        clip, _ = _as_clip(media)
        return visual.detect_visible(clip, self.params)


class AudioWatermarkAdapter:
    def __init__(self, cfg: EngineConfig):
        wm = cfg.audio.watermark
        self.params = audio.AudioWmParams(
            wm.window, wm.gain, wm.sync_bits, wm.payload_bits,
            wm.window_threshold, wm.detect_threshold, wm.rms_floor,
        )

    def embed(self, media: AudioClip, payload, key):
        return audio.embed_hidden(media, payload, key, self.params)

    def extract(self, media: AudioClip, key, payload_bits=None):
        p = self.params if payload_bits is None else self.params.with_payload_bits(payload_bits)
        return audio.extract_hidden(media, key, p)


class AudioMarkAdapter:
    def __init__(self, cfg: EngineConfig):
        self.params = audio.AudioMarkParams(cfg.audio.visible_mark.tone_ms)

    def embed(self, media: AudioClip, payload, key):
        return audio.embed_visible(media, self.params)

    def extract(self, media: AudioClip, key, payload_bits=None):
        return audio.detect_visible(media, self.params)


class TextWatermarkAdapter:
    def __init__(self, cfg: EngineConfig):
        wm = cfg.text.watermark
        text.load_lexicon()
        self.default_bits = wm.payload_bits
        self.min_sentences = wm.min_sentences
        self.threshold = wm.detect_threshold

    def params(self, nbits: int) -> text.TextWmParams:
        return text.TextWmParams(nbits, self.min_sentences, self.threshold)

    def embed(self, media: TextDocument, payload, key):
        return text.embed_hidden(media, payload, key, self.params(len(payload)))

    def extract(self, media: TextDocument, key, payload_bits=None):
        return text.extract_hidden(media, key, self.params(payload_bits or self.default_bits))


class TextMarkAdapter:
    def __init__(self, cfg: EngineConfig):
        self.params = text.TextMarkParams(cfg.text.visible_mark.label)

    def embed(self, media: TextDocument, payload, key):
        return text.embed_visible(media, self.params)

    def extract(self, media: TextDocument, key, payload_bits=None):
        return text.detect_visible(media, self.params)


W, V = OperationMode.WATERMARK, OperationMode.VISIBLE_MARK

ROUTES: dict[tuple[Modality, OperationMode], str] = {
    (Modality.IMAGE, W): "visual",
    (Modality.VIDEO, W): "visual",
    (Modality.IMAGE, V): "visual_mark",
    (Modality.VIDEO, V): "visual_mark",
    (Modality.AUDIO, W): "audio",
    (Modality.AUDIO, V): "audio_mark",
    (Modality.TEXT, W): "text",
    (Modality.TEXT, V): "text_mark",
}

FACTORIES: dict[str, Callable[[EngineConfig], Adapter]] = {
    "visual": VisualWatermarkAdapter,
    "visual_mark": VisualMarkAdapter,
    "audio": AudioWatermarkAdapter,
    "audio_mark": AudioMarkAdapter,
    "text": TextWatermarkAdapter,
    "text_mark": TextMarkAdapter,
}


class _Slot:
    __slots__ = ("factory", "adapter", "lock", "init_count")

    def __init__(self, factory):
        self.factory = factory
        self.adapter = None
        self.lock = threading.Lock()
        self.init_count = 0


class AdapterRegistry:
    """Backend slots keyed by name; each is built at most once."""

    def __init__(self, cfg: EngineConfig, routes=None, factories=None):
        self.cfg = cfg
        self.routes = dict(ROUTES if routes is None else routes)
        self._slots = {name: _Slot(f) for name, f in (factories or FACTORIES).items()}

    def register(self, name: str, factory, pairs) -> None:
        """Add a backend and route ``pairs`` of (modality, mode) to it."""
        self._slots[name] = _Slot(factory)
        for modality, mode in pairs:
            self.routes[(Modality(modality), OperationMode(mode))] = name

    def backend_name(self, modality, mode) -> str:
        try:
            return self.routes[(Modality(modality), OperationMode(mode))]
        except KeyError:
            raise UnsupportedCombination(f"no backend for {modality}/{mode}") from None

    def get_or_init(self, modality, mode) -> Adapter:
        slot = self._slots[self.backend_name(modality, mode)]
        adapter = slot.adapter
        if adapter is not None:
            return adapter
        with slot.lock:
            if slot.adapter is None:
                slot.adapter = slot.factory(self.cfg)
                slot.init_count += 1
            return slot.adapter

    def init_count(self, name: str) -> int:
        return self._slots[name].init_count

    def init_counts(self) -> dict[str, int]:
        return {name: slot.init_count for name, slot in self._slots.items()}

    def is_ready(self, name: str) -> bool:
        return self._slots[name].adapter is not None


def get_or_init_adapter(registry: AdapterRegistry, modality, mode) -> Adapter:
    return registry.get_or_init(modality, mode)


def _payload(value) -> MessagePayload | None:
    if value is None or isinstance(value, MessagePayload):
        return value
    if isinstance(value, str):
        return MessagePayload.from_hex(value)
    return MessagePayload(tuple(value))


class WatermarkEngine:
    """Facade over all backends. Safe to share between threads."""

    def __init__(self, config: EngineConfig | str | None = None):
        if config is None or not isinstance(config, EngineConfig):
            config = load_config(config)
        self.config = config
        self.registry = AdapterRegistry(config)

    def embed(self, media: MediaObject, mode=OperationMode.WATERMARK, payload=None, key=0) -> MediaObject:
        mode = OperationMode(mode)
        modality = modality_of(media)
        payload = _payload(payload)
        if mode is OperationMode.WATERMARK and payload is None:
            raise PayloadRequired("hidden watermarking needs a payload")
        adapter = self.registry.get_or_init(modality, mode)
        return adapter.embed(media, payload if mode is OperationMode.WATERMARK else None, as_key(key))

    def extract(self, media: MediaObject, mode=OperationMode.WATERMARK, key=0, payload_bits=None) -> ExtractionResult:
        mode = OperationMode(mode)
        adapter = self.registry.get_or_init(modality_of(media), mode)
        return adapter.extract(media, as_key(key), payload_bits)

    def payload_bits(self, modality) -> int:
        """Payload length extraction assumes for a modality by default."""
        modality = Modality(modality)
        if modality is Modality.AUDIO:
            return self.config.audio.watermark.payload_bits
        if modality is Modality.TEXT:
            return self.config.text.watermark.payload_bits
        return self.config.engine.default_message_bits

    def init_count(self, name: str) -> int:
        return self.registry.init_count(name)


_ENGINES: dict[str, WatermarkEngine] = {}
_ENGINES_LOCK = threading.Lock()


def engine_for(cfg: EngineConfig | None = None) -> WatermarkEngine:
    cfg = cfg or load_config()
    digest = cfg.digest()
    with _ENGINES_LOCK:
        if digest not in _ENGINES:
            _ENGINES[digest] = WatermarkEngine(cfg)
        return _ENGINES[digest]


def embed(media, mode, payload=None, key=0, cfg: EngineConfig | None = None):
    return engine_for(cfg).embed(media, mode, payload, key)


def extract(media, mode, key=0, cfg: EngineConfig | None = None, payload_bits=None):
    return engine_for(cfg).extract(media, mode, key, payload_bits)
