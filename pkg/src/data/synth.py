"""Procedural camouflaged / salient object samples.

Each sample is a value-noise background with one blob target (a union of
ellipses that all contain a shared centre). In ``cod`` mode the target
borrows the background's texture statistics; in ``sod`` mode it takes a
contrasting colour.
"""

from typing import List, Tuple

import numpy as np

from src.config.config_models import SynthConfig
from src.tensor.prng import Prng

MIN_ELLIPSES = 3
MAX_ELLIPSES = 7
TEXTURE_CONTRAST = 0.35
SCALE_SEARCH_STEPS = 48


def _fade(t: np.ndarray) -> np.ndarray:
    return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)


def value_noise(size: int, cell: float, rng: Prng) -> np.ndarray:
    """Lattice value noise in [0, 1] with quintic-faded bilinear interpolation."""
    cell = max(float(cell), 1.0)
    lattice = int(np.ceil(size / cell)) + 2
    grid = rng.uniform(size=(lattice, lattice))
    coords = np.arange(size, dtype=np.float64) / cell
    idx = np.floor(coords).astype(np.int64)
    frac = _fade(coords - idx)

    v00 = grid[idx[:, None], idx[None, :]]
    v01 = grid[idx[:, None], idx[None, :] + 1]
    v10 = grid[idx[:, None] + 1, idx[None, :]]
    v11 = grid[idx[:, None] + 1, idx[None, :] + 1]
    top = v00 + frac[None, :] * (v01 - v00)
    bottom = v10 + frac[None, :] * (v11 - v10)
    return top + frac[:, None] * (bottom - top)


def fbm(size: int, octaves: int, rng: Prng, persistence: float = 0.5) -> np.ndarray:
    """Sum of ``octaves`` value-noise layers, coarsest first, normalised to [0, 1]."""
    result = np.zeros((size, size), dtype=np.float64)
    amplitude = 1.0
    total = 0.0
    cell = size / 2.0
    for _ in range(max(octaves, 1)):
        result += amplitude * value_noise(size, cell, rng)
        total += amplitude
        amplitude *= persistence
        cell /= 2.0
    return result / total


def _texture(size: int, base_color: np.ndarray, octaves: int, rng: Prng) -> np.ndarray:
    channels = [
        base_color[c] + TEXTURE_CONTRAST * (fbm(size, octaves, rng) - 0.5) for c in range(3)
    ]
    return np.clip(np.stack(channels), 0.0, 1.0)


def _blob_shape(rng: Prng) -> List[Tuple[float, float, float, float, float]]:
    """Ellipses in unit scale as (dy, dx, ry, rx, angle); each contains the origin."""
    count = int(rng.integers(MIN_ELLIPSES, MAX_ELLIPSES + 1))
    ellipses = []
    for _ in range(count):
        ry, rx = (float(v) for v in rng.uniform(size=2, low=0.3, high=1.0))
        # Offset stays inside the ellipse so the union is star-shaped about the origin.
        reach = 0.8 * min(ry, rx) * float(rng.random())
        theta = float(rng.uniform(low=0.0, high=2.0 * np.pi))
        angle = float(rng.uniform(low=0.0, high=np.pi))
        ellipses.append((reach * np.sin(theta), reach * np.cos(theta), ry, rx, angle))
    return ellipses


def _rasterise(ellipses, centre: Tuple[float, float], scale: float, size: int) -> np.ndarray:
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64) + 0.5
    mask = np.zeros((size, size), dtype=bool)
    if scale <= 0.0:
        return mask
    for dy, dx, ry, rx, angle in ellipses:
        y = (ys - centre[0]) / scale - dy
        x = (xs - centre[1]) / scale - dx
        cos_a, sin_a = np.cos(angle), np.sin(angle)
        u = cos_a * x + sin_a * y
        v = -sin_a * x + cos_a * y
        mask |= (u / rx) ** 2 + (v / ry) ** 2 <= 1.0
    return mask


def _fit_blob(ellipses, centre, size: int, target_area: float) -> np.ndarray:
    """Smallest scale whose rasterised area reaches ``target_area`` (bisection).

    Area is nondecreasing in scale because the union is star-shaped about
    ``centre``.
    """
    lo, hi = 0.0, 32.0 * size
    best = _rasterise(ellipses, centre, hi, size)
    for _ in range(SCALE_SEARCH_STEPS):
        mid = 0.5 * (lo + hi)
        mask = _rasterise(ellipses, centre, mid, size)
        if mask.sum() >= target_area:
            hi, best = mid, mask
        else:
            lo = mid
    return best


def generate_sample(cfg: SynthConfig, index: int) -> Tuple[np.ndarray, np.ndarray]:
    """Build sample ``index`` of the synthetic set described by ``cfg``.

    The draw sequence depends only on ``(cfg.seed, index)``, so ``cod`` and
    ``sod`` samples at the same seed share geometry and background and
    differ only in how the target is coloured.

    Returns:
        (image float64 [3, S, S] in [0, 1], mask float64 [S, S] in {0, 1})
    """
    size = cfg.size
    rng = Prng.from_key(cfg.seed, index)
    lo_frac, hi_frac = cfg.object_scale_range

    bg_color = rng.uniform(size=3, low=0.2, high=0.8)
    background = _texture(size, bg_color, cfg.texture_octaves, rng)
    camo_texture = _texture(size, bg_color, cfg.texture_octaves, rng)
    contrast_color = 1.0 - bg_color
    contrast_color = np.where(np.abs(contrast_color - bg_color) < 0.3, (bg_color + 0.5) % 1.0, contrast_color)
    shading = 0.5 * TEXTURE_CONTRAST * (fbm(size, 2, rng) - 0.5)
    contrast_texture = np.clip(contrast_color[:, None, None] + shading[None], 0.0, 1.0)

    ellipses = _blob_shape(rng)
    centre = tuple(float(v) for v in rng.uniform(size=2, low=0.3 * size, high=0.7 * size))
    margin = 0.25 * (hi_frac - lo_frac)
    fraction = float(rng.uniform(low=lo_frac + margin, high=hi_frac - margin))
    region = _fit_blob(ellipses, centre, size, fraction * size * size)

    similarity = float(cfg.camo_similarity)
    fill = similarity * camo_texture + (1.0 - similarity) * contrast_texture
    image = np.where(region[None], fill, background)
    return np.clip(image, 0.0, 1.0), region.astype(np.float64)
