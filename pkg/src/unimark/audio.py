"""Audio backend.

Hidden mark: windowed time-domain spread spectrum. Window ``w`` of the
marked region carries symbol ``q = w mod P`` (``P = S + L``): the first
``S`` symbols spell a public sync pattern, the rest the payload. Each symbol
adds a keyed +/-1 chip sequence scaled to a fraction of the window RMS.

Detection whitens the received signal with an LPC prediction-error filter
(the same filter is applied to the chips), correlates every window against
every symbol, aligns the symbol phase on the sync positions and reports
which windows carry the mark.

Visible mark: an 8-tone signature prepended to the clip.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import solve_toeplitz
from scipy.fft import irfft, next_fast_len, rfft
from scipy.signal import lfilter

from .core import ExtractionResult, MessagePayload
from .errors import CapacityExceeded
from .keys import stream_block, u64_to_chips
from .media import AudioClip

SYNC_PATTERN = 0xB7C3
LPC_ORDER = 32
LPC_FLOOR = 1e-3  # white-noise correction on R[0]
GAP_FILL = 2  # presence gaps of up to this many windows are bridged
MIN_RUN = 3  # shorter presence runs are discarded

TONE_FREQS = (600, 900, 1200, 1500, 1800, 2100, 2400, 2700)
TONE_AMPLITUDE = 0.3
TONE_RAMP_S = 0.005
TONE_MARGIN_DB = 6.0


@dataclass(frozen=True)
class AudioWmParams:
    window: int = 4096
    gain: float = 0.05
    sync_bits: int = 16
    payload_bits: int = 32
    window_threshold: float = 0.5
    detect_threshold: float = 3.0
    rms_floor: float = 0.01

    def __post_init__(self):
        if self.window < 256:
            raise ValueError("window must be >= 256 samples")
        if not 0 < self.gain < 0.5:
            raise ValueError("gain must be in (0, 0.5)")
        if not 1 <= self.sync_bits <= 16:
            raise ValueError("sync_bits must be 1..16")
        if self.period < 2:
            raise ValueError("period must be >= 2 windows")

    @property
    def period(self) -> int:
        return self.sync_bits + self.payload_bits

    def with_payload_bits(self, n: int) -> "AudioWmParams":
        return AudioWmParams(
            self.window, self.gain, self.sync_bits, n,
            self.window_threshold, self.detect_threshold, self.rms_floor,
        )


def sync_bits(count: int) -> np.ndarray:
    return np.array([(SYNC_PATTERN >> (15 - i)) & 1 for i in range(count)], dtype=np.int8)


@lru_cache(maxsize=32)
def _chips(seed: int, period: int, window: int) -> np.ndarray:
    raw = stream_block(seed, "audio-chip", np.arange(period), window)
    chips = u64_to_chips(raw).astype(np.float64)
    chips.setflags(write=False)
    return chips


def chip_matrix(key, period: int, window: int) -> np.ndarray:
    """(period, window) chips; row q from derive_stream(key, "audio-chip", q)."""
    return _chips(int(getattr(key, "seed", key)), period, window)


def symbol_bits(payload: MessagePayload, p: AudioWmParams) -> np.ndarray:
    return np.concatenate([sync_bits(p.sync_bits), payload.as_array()])


def embed_hidden(
    audio: AudioClip,
    payload: MessagePayload,
    key,
    p: AudioWmParams,
    start: int = 0,
    end: int | None = None,
) -> AudioClip:
    """Mark the window grid that starts at ``start`` and fits inside ``[start, end)``."""
    p = p.with_payload_bits(len(payload))
    W, P = p.window, p.period
    end = audio.num_samples if end is None else min(int(end), audio.num_samples)
    start = max(0, int(start))
    nwin = max(0, end - start) // W
    if nwin < P:
        raise CapacityExceeded(
            f"region of {max(0, end - start)} samples holds {nwin} windows; "
            f"one pattern period needs {P} windows ({P * W} samples)"
        )
    signs = 2.0 * symbol_bits(payload, p) - 1.0
    q = np.arange(nwin) % P
    chips = chip_matrix(key, P, W)[q]  # (nwin, W)

    out = audio.samples.copy()
    seg = out[:, start : start + nwin * W].reshape(audio.channels, nwin, W)
    rms = np.sqrt(np.mean(seg**2, axis=2))
    amp = p.gain * np.maximum(rms, p.rms_floor) * signs[q][None, :]
    seg = np.clip(seg + amp[:, :, None] * chips[None], -1.0, 1.0)
    out[:, start : start + nwin * W] = seg.reshape(audio.channels, nwin * W)
    return AudioClip(out, audio.sample_rate)


def whitening_filter(x: np.ndarray, order: int = LPC_ORDER) -> np.ndarray:
    """LPC prediction-error filter coefficients ``[1, -a1, ..., -ap]``."""
    n = len(x)
    if n <= order or not np.any(x):
        return np.array([1.0])
    nfft = 1 << int(np.ceil(np.log2(2 * n)))
    spec = np.fft.rfft(x, nfft)
    r = np.fft.irfft(spec * np.conj(spec), nfft)[: order + 1] / n
    r[0] *= 1.0 + LPC_FLOOR
    try:
        a = solve_toeplitz(r[:order], r[1 : order + 1])
    except np.linalg.LinAlgError:
        return np.array([1.0])
    return np.concatenate([[1.0], -a])


def _whiten(audio: AudioClip, key, p: AudioWmParams):
    x = audio.samples
    h = whitening_filter(x.mean(axis=0))
    white = lfilter(h, [1.0], x, axis=1)
    chips = lfilter(h, [1.0], chip_matrix(key, p.period, p.window), axis=1)
    return white, chips


def _scores_at(audio: AudioClip, white, chips, p: AudioWmParams, offset: int) -> np.ndarray:
    W = p.window
    nwin = (audio.num_samples - offset) // W
    span = slice(offset, offset + nwin * W)
    w = white[:, span].reshape(audio.channels, nwin, W)
    rms = np.sqrt(np.mean(audio.samples[:, span].reshape(audio.channels, nwin, W) ** 2, axis=2))
    norm = p.gain * np.maximum(rms, p.rms_floor)  # (C, nwin)
    energy = np.sum(chips**2, axis=1)  # (P,)
    rho = (w @ chips.T) / (norm[:, :, None] * energy[None, None, :])
    return rho.mean(axis=0)


def window_scores(audio: AudioClip, key, p: AudioWmParams, offset: int = 0) -> np.ndarray:
    """Normalized correlation of every full window with every symbol, (nwin, P).

    Windows start at ``offset``; signal and chips are both LPC-whitened first.
    """
    white, chips = _whiten(audio, key, p)
    return _scores_at(audio, white, chips, p, offset)


def _align(rho: np.ndarray, S: int):
    """Best sync phase for a score matrix: (score, phase, q, aligned)."""
    nwin, P = rho.shape
    widx = np.arange(nwin)
    phase_q = (widx[None, :] - np.arange(P)[:, None]) % P  # (phase, nwin)
    picked = rho[widx[None, :], phase_q]
    phase_score = np.where(phase_q < S, np.abs(picked), 0.0).sum(axis=1)
    phase = int(np.argmax(phase_score))
    return float(phase_score[phase]), phase, phase_q[phase], picked[phase]


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    edges = np.diff(np.concatenate([[0], mask.astype(np.int8), [0]]))
    return list(zip(np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)))


def smooth_presence(mask: np.ndarray) -> np.ndarray:
    """Bridge short gaps between present windows, then drop short runs."""
    out = mask.copy()
    runs = _runs(out)
    for (_, e0), (s1, _) in zip(runs, runs[1:]):
        if s1 - e0 <= GAP_FILL:
            out[e0:s1] = True
    for s, e in _runs(out):
        if e - s < MIN_RUN:
            out[s:e] = False
    return out


def sync_offset(audio: AudioClip, white: np.ndarray, chips: np.ndarray, p: AudioWmParams) -> int:
    """Sample offset in ``[0, W)`` of the window grid the mark was written on.

    Matched filter: the sign-weighted sync chips laid end to end form one
    template; its correlation with the RMS-normalized whitened signal is
    folded modulo the pattern period so every repetition adds coherently.
    """
    W, P, S = p.window, p.period, p.sync_bits
    n = audio.num_samples
    tlen = S * W
    if n < tlen:
        return 0
    signs = 2.0 * sync_bits(S) - 1.0
    template = (signs[:, None] * chips[:S]).reshape(-1)
    csum = np.concatenate([np.zeros((audio.channels, 1)), np.cumsum(audio.samples**2, axis=1)], axis=1)
    lo = np.clip(np.arange(n) - W // 2, 0, n - W)
    rms = np.sqrt((csum[:, lo + W] - csum[:, lo]) / W)
    x = np.mean(white / np.maximum(rms, p.rms_floor), axis=0)
    nfft = next_fast_len(n + tlen)
    corr = irfft(rfft(x, nfft) * np.conj(rfft(template, nfft)), nfft)[: n - tlen + 1]
    period = P * W
    folded = np.zeros(-(-len(corr) // period) * period)
    folded[: len(corr)] = corr
    folded = folded.reshape(-1, period).sum(axis=0)
    return int(np.argmax(np.abs(folded))) % W


def extract_hidden(audio: AudioClip, key, p: AudioWmParams) -> ExtractionResult:
    """Blind detection: sample-accurate grid search, then sync-phase alignment."""
    W, P, S, L = p.window, p.period, p.sync_bits, p.payload_bits
    if audio.num_samples // W == 0:
        return ExtractionResult(False, 0.0, bits=(0,) * L, segments=())
    white, chips = _whiten(audio, key, p)
    offset = sync_offset(audio, white, chips, p)
    rho = _scores_at(audio, white, chips, p, offset)
    _, _, q, aligned = _align(rho, S)
    nwin = len(aligned)
    widx = np.arange(nwin)

    present = smooth_presence(np.abs(aligned) >= p.window_threshold)
    segments = tuple((offset + int(s) * W, offset + int(e) * W) for s, e in _runs(present))

    off = np.ones_like(rho, dtype=bool)
    off[widx, q] = False
    sigma = max(float(np.sqrt(np.mean(rho[off] ** 2))) if off.any() else 0.0, 1e-12)

    is_sync = q < S
    sync_sign = 2.0 * sync_bits(S)[np.minimum(q, S - 1)] - 1.0
    n_sync = int(is_sync.sum())
    z = float(np.sum(aligned[is_sync] * sync_sign[is_sync]) / (sigma * np.sqrt(n_sync))) if n_sync else 0.0
    present_sync = int(np.sum(present & is_sync))

    bits = []
    for k in range(L):
        here = q == S + k
        use = here & present if np.any(here & present) else here
        bits.append(int(np.sum(aligned[use]) > 0))

    detected = z >= p.detect_threshold and present_sync >= (S + 1) // 2
    return ExtractionResult(detected, max(z, 0.0), bits=tuple(bits), segments=segments)


# -------------------------------------------------------------- visible mark

@dataclass(frozen=True)
class AudioMarkParams:
    tone_ms: int = 125


def _tone_bounds(sample_rate: int, tone_ms: int) -> np.ndarray:
    step = tone_ms * sample_rate / 1000.0
    return np.rint(np.arange(len(TONE_FREQS) + 1) * step).astype(int)


def tone_signature(sample_rate: int, tone_ms: int = 125) -> np.ndarray:
    bounds = _tone_bounds(sample_rate, tone_ms)
    ramp = max(1, int(round(TONE_RAMP_S * sample_rate)))
    pieces = []
    for f, a, b in zip(TONE_FREQS, bounds[:-1], bounds[1:]):
        n = b - a
        t = np.arange(n) / sample_rate
        env = np.ones(n)
        r = min(ramp, n // 2)
        rise = 0.5 - 0.5 * np.cos(np.pi * np.arange(r) / r)
        env[:r] = rise
        env[n - r :] = rise[::-1]
        pieces.append(TONE_AMPLITUDE * env * np.sin(2 * np.pi * f * t))
    return np.concatenate(pieces)


def embed_visible(audio: AudioClip, p: AudioMarkParams) -> AudioClip:
    sig = tone_signature(audio.sample_rate, p.tone_ms)
    prefix = np.repeat(sig[None, :], audio.channels, axis=0)
    return AudioClip(np.concatenate([prefix, audio.samples], axis=1), audio.sample_rate)


def goertzel_power(frames: np.ndarray, freq: float, sample_rate: int) -> np.ndarray:
    """Goertzel energy of each row of ``frames`` at ``freq``."""
    coeff = 2.0 * np.cos(2.0 * np.pi * freq / sample_rate)
    s = lfilter([1.0], [1.0, -coeff, 1.0], frames, axis=1)
    s1, s2 = s[:, -1], s[:, -2]
    return s1 * s1 + s2 * s2 - coeff * s1 * s2


def detect_visible(audio: AudioClip, p: AudioMarkParams) -> ExtractionResult:
    sr = audio.sample_rate
    hop = int(round(p.tone_ms * sr / 1000.0))
    mono = audio.samples.mean(axis=0)
    nframes = len(mono) // hop
    ntones = len(TONE_FREQS)
    if nframes < ntones:
        return ExtractionResult(False, 0.0, segments=())
    frames = mono[: nframes * hop].reshape(nframes, hop)
    power = np.stack([goertzel_power(frames, f, sr) for f in TONE_FREQS], axis=1)
    best = np.argmax(power, axis=1)
    ordered = np.sort(power, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        margin_db = 10.0 * np.log10(ordered[:, -1] / ordered[:, -2])
    margin_db = np.nan_to_num(margin_db, nan=0.0, posinf=np.inf)
    ok = margin_db >= TONE_MARGIN_DB
    for m in range(nframes - ntones + 1):
        if all(ok[m + j] and best[m + j] == j for j in range(ntones)):
            start = m * hop
            conf = float(np.min(margin_db[m : m + ntones]))
            end = start + int(_tone_bounds(sr, p.tone_ms)[-1])
            return ExtractionResult(True, min(conf, 1e6), segments=((start, end),))
    return ExtractionResult(False, 0.0, segments=())
