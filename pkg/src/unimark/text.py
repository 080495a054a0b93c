"""Text backend: keyed lexical insertion after the fact, plus a label line.

The hidden mark needs no access to the model that wrote the text. For each
payload position the key selects two marker words from a bundled lexicon;
the word matching the bit is inserted at sentence tails, before the
terminal punctuation. Detection is a whole-word scan for the keyed words.
"""

from __future__ import annotations

import hashlib
import math
import re
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from .core import ExtractionResult, MessagePayload
from .errors import CollisionError, LexiconIntegrityError, TextTooShort
from .keys import derive_stream
from .media import TextDocument

LEXICON_PATH = Path(__file__).parent / "data" / "marker_lexicon.txt"
LEXICON_SHA256 = "636eb90efe04164b6128912a6a94365eab21ff3c923502e0429e85406e9039ff"
MAX_REDRAWS = 16
TARGET_COPIES = 3  # smallest count that survives any n//4 sentence deletions for n >= 2L

_TERMINATOR = re.compile(r"[.!?]+(?=\s|\Z)")
_TAIL = re.compile(r"[.!?]+\Z")
_WORD = re.compile(r"[^\W\d_]+")


@lru_cache(maxsize=1)
def load_lexicon() -> tuple[str, ...]:
    data = LEXICON_PATH.read_bytes()
    digest = hashlib.sha256(data).hexdigest()
    if digest != LEXICON_SHA256:
        raise LexiconIntegrityError(f"marker lexicon hash {digest} does not match the pinned value")
    words = tuple(data.decode("utf-8").split())
    if len(set(words)) != len(words):
        raise LexiconIntegrityError("marker lexicon contains duplicates")
    return words


@dataclass(frozen=True)
class TextWmParams:
    payload_bits: int = 16
    min_sentences: int = 4
    detect_threshold: float = 0.7

    def __post_init__(self):
        if self.payload_bits < 1:
            raise ValueError("payload_bits must be >= 1")
        if not 0 < self.detect_threshold <= 1:
            raise ValueError("detect_threshold must be in (0, 1]")


def split_sentences(text: str) -> list[tuple[int, int]]:
    """Half-open sentence spans; only whitespace lies between them."""
    spans = []
    i, n = 0, len(text)
    while i < n:
        while i < n and text[i].isspace():
            i += 1
        if i >= n:
            break
        m = _TERMINATOR.search(text, i)
        if m:
            end = m.end()
        else:
            end = i + len(text[i:].rstrip())
        spans.append((i, end))
        i = end
    return spans


def sentences(text: str) -> list[str]:
    return [text[a:b] for a, b in split_sentences(text)]


def marker_table(key, nbits: int) -> list[tuple[str, str]]:
    """Two distinct candidate words per payload position, keyed."""
    lexicon = load_lexicon()
    if 2 * nbits > len(lexicon):
        raise ValueError(f"lexicon of {len(lexicon)} words cannot serve {nbits} positions")
    used: set[str] = set()
    table = []
    for row in range(nbits):
        stream = derive_stream(key, "text-marker", row)
        picks: list[str] = []
        draws = 0
        while len(picks) < 2:
            if draws >= 2 + MAX_REDRAWS:
                raise CollisionError(f"could not draw distinct markers for position {row}")
            word = lexicon[int(stream.integers(1, len(lexicon))[0])]
            draws += 1
            if word not in used:
                picks.append(word)
                used.add(word)
        table.append((picks[0], picks[1]))
    return table


def words_per_sentence(n_sentences: int, nbits: int) -> int:
    return max(1, math.ceil(TARGET_COPIES * nbits / n_sentences))


def _insert(sentence: str, words: list[str]) -> str:
    tail = _TAIL.search(sentence)
    if tail:
        cut = tail.start()
        return sentence[:cut] + "".join(", " + w for w in words) + sentence[cut:]
    return sentence + "".join(" " + w for w in words)


def embed_hidden(doc: TextDocument, payload: MessagePayload, key, p: TextWmParams) -> TextDocument:
    text = doc.content
    spans = split_sentences(text)
    n = len(spans)
    if n < p.min_sentences:
        raise TextTooShort(f"{n} sentences, need at least {p.min_sentences}")
    nbits = len(payload)
    table = marker_table(key, nbits)
    present = set(_WORD.findall(text))
    clash = sorted(present.intersection(w for pair in table for w in pair))
    if clash:
        raise CollisionError(f"marker words already in text: {', '.join(clash)}")

    per = words_per_sentence(n, nbits)
    bits = payload.bits
    out = [text[: spans[0][0]]]
    for i, (a, b) in enumerate(spans):
        slots = [(i * per + t) % nbits for t in range(per)]
        out.append(_insert(text[a:b], [table[s][bits[s]] for s in slots]))
        nxt = spans[i + 1][0] if i + 1 < n else len(text)
        out.append(text[b:nxt])
    return TextDocument("".join(out))


def extract_hidden(doc: TextDocument, key, p: TextWmParams) -> ExtractionResult:
    nbits = p.payload_bits
    table = marker_table(key, nbits)
    counts = Counter(_WORD.findall(doc.content))
    bits, resolved = [], 0
    for w0, w1 in table:
        c0, c1 = counts[w0], counts[w1]
        bits.append(1 if c1 > c0 else 0)
        resolved += c0 != c1
    confidence = resolved / nbits
    return ExtractionResult(confidence >= p.detect_threshold, confidence, bits=tuple(bits))


@dataclass(frozen=True)
class TextMarkParams:
    label: str = "[AI-GENERATED]"


def _has_label(text: str, label: str) -> bool:
    return text.split("\n", 1)[0] == label


def embed_visible(doc: TextDocument, p: TextMarkParams) -> TextDocument:
    if _has_label(doc.content, p.label):
        return doc
    return TextDocument(p.label + "\n" + doc.content)


def detect_visible(doc: TextDocument, p: TextMarkParams) -> ExtractionResult:
    found = _has_label(doc.content, p.label)
    return ExtractionResult(found, 1.0 if found else 0.0)
