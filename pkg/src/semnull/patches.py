"""Texture-aware patch selection for fixed-size network inputs.

An image is cut into non-overlapping NxN tiles, each tile is scored by the
Shannon entropy of its DFT magnitude spectrum, and the highest- and
lowest-entropy tiles are kept, shuffled, and packed into an MxM output.
Keeping both tails preserves texture-rich and texture-poor regions while the
shuffle destroys global layout, which biases downstream models toward local
statistics instead of scene content.

The shuffle uses a SplitMix64 stream driving a Fisher-Yates pass, so outputs
are byte-reproducible for a given seed on any platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .validation import as_image

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SelectionConfig:
    """Patch-selection parameters.

    ``target_size`` must be a multiple of ``patch_size``; the number of tiles
    placed in the output is ``(target_size / patch_size) ** 2``.
    """

    patch_size: int = 32
    target_size: int = 224
    seed: int = 0

    def __post_init__(self):
        if self.patch_size < 2:
            raise ValueError(f"patch_size must be >= 2, got {self.patch_size}")
        if self.target_size < self.patch_size:
            raise ValueError("target_size must be >= patch_size")
        if self.target_size % self.patch_size != 0:
            raise ValueError(
                f"target_size {self.target_size} is not a multiple of "
                f"patch_size {self.patch_size}"
            )
        if not 0 <= int(self.seed) <= _MASK64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class PatchScore:
    grid_row: int
    grid_col: int
    entropy: float


def tile(img, patch_size: int):
    """Cut an image into non-overlapping patches in row-major grid order.

    Returns ``(patches, positions)`` where ``patches`` has shape
    ``(k, N, N, 3)`` and ``positions`` holds the matching ``(row, col)`` grid
    indices.  Trailing pixels that do not fill a whole patch are dropped.
    """
    a = as_image(img)
    n = int(patch_size)
    if n < 2:
        raise ValueError(f"patch_size must be >= 2, got {patch_size}")
    h, w = a.shape[:2]
    if h < n or w < n:
        raise ValueError(f"image {w}x{h} is smaller than patch size {n}")
    rows, cols = h // n, w // n
    trimmed = a[: rows * n, : cols * n]
    patches = (
        trimmed.reshape(rows, n, cols, n, 3)
        .transpose(0, 2, 1, 3, 4)
        .reshape(rows * cols, n, n, 3)
    )
    positions = np.stack(
        np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij"), axis=-1
    ).reshape(-1, 2)
    return patches, positions


def _batch_entropies(patches: np.ndarray) -> np.ndarray:
    """Mean-over-channels spectral entropy for a (k, N, N, 3) float batch."""
    spectrum = np.abs(np.fft.fft2(patches, axes=(1, 2)))
    totals = spectrum.sum(axis=(1, 2))  # (k, 3)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = spectrum / totals[:, None, None, :]
        plogp = np.where(p > 0.0, p * np.log(np.where(p > 0.0, p, 1.0)), 0.0)
    per_channel = np.where(totals > 0.0, -plogp.sum(axis=(1, 2)), 0.0)
    return per_channel.mean(axis=1)


def spectral_entropy(patch) -> float:
    """Shannon entropy (nats) of a patch's normalized DFT magnitude spectrum.

    Per channel the full complex spectrum of the NxN samples is taken, DC bin
    included; magnitudes are L1-normalized into a distribution and its entropy
    computed with ``0 * log 0 == 0``.  An all-zero channel scores 0.  The
    result is the mean over the three channels and lies in ``[0, ln(N*N)]``.
    """
    a = np.asarray(patch, dtype=np.float64)
    if a.ndim != 3 or a.shape[2] != 3 or a.shape[0] != a.shape[1]:
        raise ValueError(f"patch must be NxNx3, got shape {a.shape}")
    if a.shape[0] < 2:
        raise ValueError("patch size must be >= 2")
    return float(_batch_entropies(a[None])[0])


def patch_scores(img, patch_size: int) -> list[PatchScore]:
    """Spectral entropy of every patch of ``img``, row-major grid order."""
    patches, positions = tile(img, patch_size)
    ents = _batch_entropies(patches.astype(np.float64))
    return [
        PatchScore(int(r), int(c), float(e))
        for (r, c), e in zip(positions, ents)
    ]


def _splitmix64(state: int):
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, (z ^ (z >> 31))


def _next_below(state: int, bound: int):
    # Rejection sampling keeps the draw exactly uniform over [0, bound).
    limit = (1 << 64) - ((1 << 64) % bound)
    while True:
        state, z = _splitmix64(state)
        if z < limit:
            return state, z % bound


def shuffled_indices(count: int, seed: int) -> list[int]:
    """Fisher-Yates permutation of ``range(count)`` from a SplitMix64 stream."""
    out = list(range(count))
    state = int(seed) & _MASK64
    for i in range(count - 1, 0, -1):
        state, j = _next_below(state, i + 1)
        out[i], out[j] = out[j], out[i]
    return out


def select_indices(entropies, budget: int) -> list[int]:
    """Pick the ``budget`` patch indices kept by the entropy rule.

    Patches are ordered by (entropy descending, index ascending); the first
    ``ceil(budget/2)`` and the last ``floor(budget/2)`` of that ordering are
    kept, highs first.  The two groups are disjoint whenever at least
    ``budget`` entropies are given.
    """
    ents = np.asarray(entropies, dtype=np.float64)
    if ents.ndim != 1:
        raise ValueError("entropies must be one-dimensional")
    k = ents.shape[0]
    if k < budget:
        raise ValueError(f"only {k} patches available, need {budget}")
    order = sorted(range(k), key=lambda i: (-ents[i], i))
    take_high = (budget + 1) // 2
    take_low = budget // 2
    return order[:take_high] + (order[k - take_low :] if take_low else [])


def _upscale_to_patch_budget(img: np.ndarray, patch_size: int, budget: int) -> np.ndarray:
    """Bilinear-upscale so the shorter side is the smallest multiple of the
    patch size that makes the tiling yield at least ``budget`` patches."""
    h, w = img.shape[:2]
    n = patch_size
    if (h // n) * (w // n) >= budget:
        return img
    shorter = min(h, w)
    k = max(1, math.ceil(shorter / n))
    while True:
        if h <= w:
            nh, nw = k * n, round(w * (k * n) / h)
        else:
            nh, nw = round(h * (k * n) / w), k * n
        if (nh // n) * (nw // n) >= budget:
            resized = Image.fromarray(img).resize((nw, nh), Image.BILINEAR)
            return np.asarray(resized)
        k += 1


def selection_scores(img, cfg: SelectionConfig) -> list[PatchScore]:
    """Per-patch entropies of the tiling that selection actually sees.

    Applies the same upscale policy as :func:`select_and_reassemble`, so the
    scores line up with the mosaic built from the same config.
    """
    a = as_image(img)
    side = cfg.target_size // cfg.patch_size
    a = _upscale_to_patch_budget(a, cfg.patch_size, side * side)
    return patch_scores(a, cfg.patch_size)


def select_and_reassemble(img, cfg: SelectionConfig) -> np.ndarray:
    """Build the shuffled MxM mosaic of entropy-extreme patches.

    With ``T = (M / N) ** 2`` slots, the ``ceil(T/2)`` highest- and
    ``floor(T/2)`` lowest-entropy patches are taken (ties broken by row-major
    grid index), shuffled with the seeded permutation, and placed row-major.
    Images whose tiling yields fewer than T patches are first bilinearly
    upscaled per :func:`_upscale_to_patch_budget`.
    """
    a = as_image(img)
    n, m = cfg.patch_size, cfg.target_size
    side = m // n
    budget = side * side
    a = _upscale_to_patch_budget(a, n, budget)
    patches, _ = tile(a, n)
    ents = _batch_entropies(patches.astype(np.float64))
    chosen = select_indices(ents, budget)
    perm = shuffled_indices(budget, cfg.seed)
    out = np.empty((m, m, 3), dtype=np.uint8)
    for slot, src in enumerate(perm):
        r, c = divmod(slot, side)
        out[r * n : (r + 1) * n, c * n : (c + 1) * n] = patches[chosen[src]]
    return out
