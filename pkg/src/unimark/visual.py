"""Shared image/video backend.

Hidden mark: additive spread spectrum in eight mid-frequency coefficients of
every full 8x8 luma block. Block ``i`` (raster order) carries payload bit
``i mod L``; the same pattern is written to every frame, so frame averaging
and frame dropping leave the per-block evidence unchanged. Images travel
through here as one-frame clips.

Visible mark: an opaque 6x6-cell fiducial badge in one corner of every frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ExtractionResult, MessagePayload
from .errors import CapacityExceeded, MediaTooSmall
from .keys import stream_block, u64_to_chips
from .media import ImageBuffer, VideoClip

BLOCK = 8
COEFF_SET = ((1, 2), (2, 1), (2, 2), (1, 3), (3, 1), (2, 3), (3, 2), (3, 3))
_ROWS = np.array([r for r, _ in COEFF_SET])
_COLS = np.array([c for _, c in COEFF_SET])

BADGE_PATTERN = 0xA15C
BADGE_CELLS = 6
BADGE_DARK = 16
BADGE_LIGHT = 235
BADGE_MIN_SIDE = 24
BADGE_INSET = 2
VISIBLE_THRESHOLD = 0.8


def _dct_matrix(n: int = BLOCK) -> np.ndarray:
    k = np.arange(n)[:, None]
    x = np.arange(n)[None, :]
    m = np.cos(np.pi * (2 * x + 1) * k / (2 * n)) * np.sqrt(2.0 / n)
    m[0, :] = np.sqrt(1.0 / n)
    return m


DCT8 = _dct_matrix()


def dct8_forward(block: np.ndarray) -> np.ndarray:
    """Orthonormal 2-D DCT-II; works on (..., 8, 8) stacks."""
    return DCT8 @ np.asarray(block, dtype=np.float64) @ DCT8.T


def dct8_inverse(coeffs: np.ndarray) -> np.ndarray:
    return DCT8.T @ np.asarray(coeffs, dtype=np.float64) @ DCT8


# BT.601 full range
def to_luma(img: ImageBuffer) -> tuple[np.ndarray, np.ndarray | None]:
    """Split into a float luma plane and (Cb, Cr) residue; gray has no residue."""
    px = img.pixels.astype(np.float64)
    if img.channels == 1:
        return px[:, :, 0], None
    r, g, b = px[:, :, 0], px[:, :, 1], px[:, :, 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b
    cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b
    return y, np.stack([cb, cr], axis=-1)


def from_luma(y: np.ndarray, chroma: np.ndarray | None) -> ImageBuffer:
    if chroma is None:
        return ImageBuffer(np.clip(np.rint(y), 0, 255).astype(np.uint8))
    cb = chroma[:, :, 0] - 128.0
    cr = chroma[:, :, 1] - 128.0
    rgb = np.stack(
        [y + 1.402 * cr, y - 0.344136 * cb - 0.714136 * cr, y + 1.772 * cb], axis=-1
    )
    return ImageBuffer(np.clip(np.rint(rgb), 0, 255).astype(np.uint8))


def luma_plane(pixels: np.ndarray) -> np.ndarray:
    """Luma of a (..., h, w, c) uint8 stack, float64."""
    px = pixels.astype(np.float64)
    if px.shape[-1] == 1:
        return px[..., 0]
    return 0.299 * px[..., 0] + 0.587 * px[..., 1] + 0.114 * px[..., 2]


def block_grid(height: int, width: int) -> tuple[int, int]:
    return height // BLOCK, width // BLOCK


def capacity(height: int, width: int) -> int:
    """Number of full 8x8 blocks; partial edge blocks carry nothing."""
    rows, cols = block_grid(height, width)
    return rows * cols


def to_blocks(plane: np.ndarray) -> np.ndarray:
    """(..., h, w) -> (..., nblocks, 8, 8) over full blocks, raster order."""
    h, w = plane.shape[-2:]
    rows, cols = block_grid(h, w)
    lead = plane.shape[:-2]
    cut = plane[..., : rows * BLOCK, : cols * BLOCK]
    b = cut.reshape(*lead, rows, BLOCK, cols, BLOCK)
    b = np.moveaxis(b, -3, -2)
    return b.reshape(*lead, rows * cols, BLOCK, BLOCK)


def from_blocks(blocks: np.ndarray, height: int, width: int) -> np.ndarray:
    """Inverse of :func:`to_blocks`; uncovered edge region is zero."""
    rows, cols = block_grid(height, width)
    out = np.zeros((height, width), dtype=np.float64)
    b = blocks.reshape(rows, cols, BLOCK, BLOCK).swapaxes(1, 2)
    out[: rows * BLOCK, : cols * BLOCK] = b.reshape(rows * BLOCK, cols * BLOCK)
    return out


def chip_matrix(key, nblocks: int) -> np.ndarray:
    """(nblocks, 8) +/-1 chips, row i from derive_stream(key, "chip", i)."""
    return u64_to_chips(stream_block(key, "chip", np.arange(nblocks), len(COEFF_SET))).astype(
        np.float64
    )


@dataclass(frozen=True)
class VisualWmParams:
    strength: float = 2.0
    payload_bits: int = 64
    detect_threshold: float = 3.0

    def __post_init__(self):
        if self.strength <= 0 or self.detect_threshold <= 0:
            raise ValueError("strength and detect_threshold must be positive")


def watermark_delta(height: int, width: int, payload: MessagePayload, key, strength: float):
    """Spatial luma offset plane that carries the payload."""
    n = capacity(height, width)
    nbits = len(payload)
    if n < nbits:
        raise CapacityExceeded(
            f"{width}x{height} frame has {n} full 8x8 blocks, payload needs {nbits}"
        )
    signs = 2.0 * payload.as_array()[np.arange(n) % nbits] - 1.0
    coeffs = np.zeros((n, BLOCK, BLOCK))
    coeffs[:, _ROWS, _COLS] = strength * signs[:, None] * chip_matrix(key, n)
    return from_blocks(dct8_inverse(coeffs), height, width)


def embed_hidden(clip: VideoClip, payload: MessagePayload, key, p: VisualWmParams) -> VideoClip:
    delta = watermark_delta(clip.height, clip.width, payload, key, p.strength)
    # Adding the same offset to R, G and B shifts Y by exactly that offset and
    # leaves Cb/Cr alone, i.e. from_luma(Y + delta, chroma) before rounding.
    stack = clip.stack().astype(np.float64) + delta[None, :, :, None]
    out = np.clip(np.rint(stack), 0, 255).astype(np.uint8)
    return VideoClip.from_stack(out, clip.fps)


def block_correlations(clip: VideoClip, key) -> np.ndarray:
    """Per-block chip correlation, averaged across frames."""
    luma = luma_plane(clip.stack())
    coeffs = dct8_forward(to_blocks(luma))[..., _ROWS, _COLS]
    chips = chip_matrix(key, coeffs.shape[-2])
    return (coeffs * chips).sum(axis=-1).mean(axis=0)


def extract_hidden(clip: VideoClip, key, p: VisualWmParams) -> ExtractionResult:
    nbits = p.payload_bits
    n = capacity(clip.height, clip.width)
    if n < nbits:
        raise CapacityExceeded(f"{n} full blocks cannot hold {nbits} payload bits")
    corr = block_correlations(clip, key)
    owner = np.arange(n) % nbits
    totals = np.bincount(owner, weights=corr, minlength=nbits)
    counts = np.bincount(owner, minlength=nbits).astype(np.float64)
    bits = (totals > 0).astype(int)

    dof = n - nbits
    if dof >= nbits:
        resid = corr - (totals / counts)[owner]
        sigma = np.sqrt(np.sum(resid**2) / dof)
    else:
        sigma = np.sqrt(np.mean(corr**2))
    sigma = max(sigma, 1e-9)
    confidence = float(np.mean(np.abs(totals) / (sigma * np.sqrt(counts))))
    return ExtractionResult(
        detected=confidence >= p.detect_threshold,
        confidence=confidence,
        bits=tuple(bits.tolist()),
    )


# -------------------------------------------------------------- visible mark

@dataclass(frozen=True)
class VisualMarkParams:
    corner: str = "bottom_right"
    scale: float = 0.08


def badge_cells() -> np.ndarray:
    cells = np.ones((BADGE_CELLS, BADGE_CELLS), dtype=bool)
    interior = [(BADGE_PATTERN >> (15 - k)) & 1 for k in range(16)]
    cells[1:5, 1:5] = np.array(interior, dtype=bool).reshape(4, 4)
    return cells


def badge_side(height: int, width: int, scale: float) -> int:
    return max(BADGE_MIN_SIDE, int(round(scale * min(height, width))))


def badge_template(side: int) -> np.ndarray:
    """Luma values of the rendered badge, (side, side) uint8."""
    idx = np.arange(side) * BADGE_CELLS // side
    cells = badge_cells()[idx[:, None], idx[None, :]]
    return np.where(cells, BADGE_DARK, BADGE_LIGHT).astype(np.uint8)


def badge_rect(height: int, width: int, p: VisualMarkParams) -> tuple[int, int, int]:
    """(top, left, side) of the badge for a frame size."""
    side = badge_side(height, width, p.scale)
    inset_y = min(BADGE_INSET, height - side)
    inset_x = min(BADGE_INSET, width - side)
    top = inset_y if p.corner.startswith("top") else height - side - inset_y
    left = inset_x if p.corner.endswith("left") else width - side - inset_x
    return top, left, side


def embed_visible(clip: VideoClip, p: VisualMarkParams) -> VideoClip:
    if min(clip.height, clip.width) < BADGE_MIN_SIDE:
        raise MediaTooSmall(
            f"{clip.width}x{clip.height} is below the {BADGE_MIN_SIDE}px badge minimum"
        )
    top, left, side = badge_rect(clip.height, clip.width, p)
    stack = clip.stack().copy()
    stack[:, top : top + side, left : left + side, :] = badge_template(side)[None, :, :, None]
    return VideoClip.from_stack(stack, clip.fps)


def _ncc(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    denom = np.sqrt(np.sum(a * a) * np.sum(b * b))
    if denom == 0:
        return 0.0
    return float(np.sum(a * b) / denom)


def detect_visible(clip: VideoClip, p: VisualMarkParams) -> ExtractionResult:
    if min(clip.height, clip.width) < BADGE_MIN_SIDE:
        return ExtractionResult(detected=False, confidence=0.0)
    top, left, side = badge_rect(clip.height, clip.width, p)
    template = badge_template(side).astype(np.float64)
    luma = luma_plane(clip.stack()[:, top : top + side, left : left + side, :])
    score = float(np.mean([_ncc(frame, template) for frame in luma]))
    return ExtractionResult(detected=score >= VISIBLE_THRESHOLD, confidence=max(score, 0.0))
