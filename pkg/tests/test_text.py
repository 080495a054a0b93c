import re

import numpy as np
import pytest

import unimark.text as text_mod
from unimark.attacks import AttackSpec, apply_text_attack
from unimark.bench.dataset import OBJECTS, SUBJECTS, TAILS, VERBS, DatasetSpec, synth_paragraphs, synth_text
from unimark.core import MessagePayload
from unimark.errors import CollisionError, LexiconIntegrityError, TextTooShort
from unimark.keys import derive_stream
from unimark.media import TextDocument
from unimark.text import (
    TextMarkParams,
    TextWmParams,
    detect_visible,
    embed_hidden,
    embed_visible,
    extract_hidden,
    load_lexicon,
    marker_table,
    sentences,
    split_sentences,
    words_per_sentence,
)

from conftest import doc

P16 = TextWmParams()


def test_lexicon_properties():
    words = load_lexicon()
    assert len(words) >= 512 and len(set(words)) == len(words)
    assert all(re.fullmatch(r"[a-z]{5,12}", w) for w in words)


def test_lexicon_hash_enforced(tmp_path, monkeypatch):
    bad = tmp_path / "lex.txt"
    bad.write_text("tampered\n")
    monkeypatch.setattr(text_mod, "LEXICON_PATH", bad)
    load_lexicon.cache_clear()
    try:
        with pytest.raises(LexiconIntegrityError):
            load_lexicon()
    finally:
        monkeypatch.undo()
        load_lexicon.cache_clear()


def test_template_vocabulary_avoids_lexicon():
    lex = set(load_lexicon())
    vocab = set()
    for phrase in SUBJECTS + VERBS + OBJECTS + TAILS:
        vocab.update(re.findall(r"[A-Za-z]+", phrase))
    assert not vocab & lex


def test_split_examples():
    assert sentences("A cat. A dog!") == ["A cat.", "A dog!"]
    assert sentences("No terminator") == ["No terminator"]
    assert sentences("  ") == []
    assert sentences("Pi is 3.14 roughly. Next?") == ["Pi is 3.14 roughly.", "Next?"]


def test_split_reconstructs_input():
    st = derive_stream(1, "t", 0)
    text = synth_paragraphs(st, 50)
    spans = split_sentences(text)
    assert len(spans) == 50
    rebuilt = text[: spans[0][0]]
    for i, (a, b) in enumerate(spans):
        rebuilt += text[a:b]
        gap = text[b : spans[i + 1][0]] if i + 1 < len(spans) else text[b:]
        assert gap.strip() == ""
        rebuilt += gap
    assert rebuilt == text


def test_marker_table_distinct_and_keyed():
    t = marker_table(5, 16)
    flat = [w for pair in t for w in pair]
    assert len(set(flat)) == 32
    assert t == marker_table(5, 16)
    assert t != marker_table(6, 16)


def test_structural_one_word_per_sentence():
    d = doc(12)
    p = TextWmParams(payload_bits=4)
    m = MessagePayload.from_hex("a", 4)  # 1010
    out = embed_hidden(d, m, 3, p)
    table = marker_table(3, 4)
    before, after = sentences(d.content), sentences(out.content)
    assert len(after) == 12
    for i, (a, b) in enumerate(zip(before, after)):
        word = table[i % 4][m.bits[i % 4]]
        assert b == a[:-1] + ", " + word + "."


def test_density_rule():
    assert words_per_sentence(24, 16) == 2
    assert words_per_sentence(48, 16) == 1
    assert words_per_sentence(4, 4) == 3


def test_too_short():
    with pytest.raises(TextTooShort):
        embed_hidden(doc(3), MessagePayload.random(16, 1), 1, P16)


def test_collision():
    word = marker_table(9, 16)[0][0]
    d = TextDocument(f"We saw it {word} today. " + doc(6).content)
    with pytest.raises(CollisionError):
        embed_hidden(d, MessagePayload.random(16, 1), 9, P16)


def test_deterministic_and_round_trip():
    for i in range(10):
        d = synth_text(DatasetSpec("text", count=1, seed=i), 0)
        m = MessagePayload.random(16, 40 + i)
        a = embed_hidden(d, m, 70 + i, P16)
        assert a == embed_hidden(d, m, 70 + i, P16)
        res = extract_hidden(a, 70 + i, P16)
        assert res.bits == m.bits and res.confidence == 1.0 and res.detected


def test_insertion_is_purely_additive():
    d = synth_text(DatasetSpec("text", count=1, seed=3), 0)
    out = embed_hidden(d, MessagePayload.random(16, 2), 11, P16)
    words = {w for pair in marker_table(11, 16) for w in pair}
    stripped = re.sub(r", (%s)\b" % "|".join(sorted(words)), "", out.content)
    assert stripped == d.content


def test_no_terminator_appends():
    d = TextDocument("one two. three four. five six. seven eight")
    out = embed_hidden(d, MessagePayload.random(2, 1), 1, TextWmParams(payload_bits=2))
    last = sentences(out.content)[-1]
    assert last.startswith("seven eight ") and "," not in last


def _worst_deletion(n, nbits, budget):
    """Sentence set whose removal unresolves the most positions (exact, small L)."""
    per = words_per_sentence(n, nbits)
    masks = [0] * nbits
    for i in range(n):
        for t in range(per):
            masks[(i * per + t) % nbits] |= 1 << i
    union = [0] * (1 << nbits)
    best, best_sent = 0, 0
    for k in range(1, 1 << nbits):
        low = k & -k
        union[k] = union[k ^ low] | masks[low.bit_length() - 1]
        if bin(union[k]).count("1") <= budget and bin(k).count("1") > best:
            best, best_sent = bin(k).count("1"), union[k]
    return [i for i in range(n) if best_sent >> i & 1], best


@pytest.mark.parametrize("nbits", [4, 8])
def test_deletion_tolerance_exhaustive(nbits):
    for n in range(2 * nbits, 8 * nbits):
        _, killed = _worst_deletion(n, nbits, n // 4)
        assert (nbits - killed) / nbits >= 0.7, n


@pytest.mark.parametrize("n", [32, 40, 44])
def test_adversarial_deletion_end_to_end(n):
    d = synth_text(DatasetSpec("text", count=1, seed=n, sentences=n), 0)
    m = MessagePayload.random(16, n)
    marked = embed_hidden(d, m, 5, P16)
    drop, _ = _worst_deletion(n, 16, n // 4)
    kept = [s for i, s in enumerate(sentences(marked.content)) if i not in set(drop)]
    res = extract_hidden(TextDocument(" ".join(kept)), 5, P16)
    assert res.detected


def test_random_sentence_drop():
    for i in range(10):
        d = synth_text(DatasetSpec("text", count=1, seed=100 + i), 0)
        m = MessagePayload.random(16, i)
        marked = embed_hidden(d, m, 17, P16)
        res = extract_hidden(apply_text_attack(marked, AttackSpec("sentence_drop", {"p": 0.25}, i)), 17, P16)
        assert res.detected


def test_foreign_text_not_detected():
    st = derive_stream(8, "foreign", 0)
    text = TextDocument(synth_paragraphs(st, 100))
    assert len(text.content.split()) >= 1000
    hits = sum(extract_hidden(text, k, P16).detected for k in range(100))
    assert hits <= 5


def test_wrong_key_not_detected():
    d = synth_text(DatasetSpec("text", count=1, seed=4), 0)
    marked = embed_hidden(d, MessagePayload.random(16, 1), 1, P16)
    rng = np.random.default_rng(0)
    hits = sum(extract_hidden(marked, int(rng.integers(0, 2**63)), P16).detected for _ in range(100))
    assert hits <= 5


def test_visible_label():
    p = TextMarkParams()
    assert embed_visible(TextDocument("hello"), p).content == "[AI-GENERATED]\nhello"
    once = embed_visible(TextDocument("hello"), p)
    assert embed_visible(once, p) == once
    assert detect_visible(once, p).detected
    assert not detect_visible(TextDocument("hello"), p).detected
    assert not detect_visible(TextDocument("x [AI-GENERATED]\nhello"), p).detected
