"""Appearance model: 8-bin gray histograms compared with the Bhattacharyya
distance, turned into per-part likelihood factors."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .geometry import ArticulatedModel, ObjectState, place_polygon, polygon_bbox, polygon_mask

log = logging.getLogger(__name__)

BIN_COUNT = 8
_UNIFORM = np.full(BIN_COUNT, 1.0 / BIN_COUNT)


@dataclass(frozen=True)
class LikelihoodParams:
    """``lam`` scales the squared distance in the likelihood exponent."""

    lam: float = 50.0

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")


@dataclass(frozen=True)
class Histogram8:
    """Normalized 8-bin intensity histogram over [0, 255].

    ``empty`` marks a region containing no pixel; the bins are then uniform so
    every downstream distance stays defined.
    """

    bins: np.ndarray
    empty: bool = False


def region_histogram(image: np.ndarray, corners: np.ndarray) -> Histogram8:
    """Histogram of the pixels whose centres fall inside the quadrilateral.

    Bin i collects intensities [32 i, 32 i + 31].  Pixel membership follows
    the same boundary rule as rendering (``polygon_mask``).
    """
    height, width = image.shape
    x0, y0, nx, ny = polygon_bbox(corners, width, height)
    if nx > 0 and ny > 0:
        mask = polygon_mask(corners, x0, y0, nx, ny)
        values = image[y0 : y0 + ny, x0 : x0 + nx][mask]
        if values.size:
            counts = np.bincount(values >> 5, minlength=BIN_COUNT)
            return Histogram8(counts / values.size)
    return Histogram8(_UNIFORM.copy(), empty=True)


def bhattacharyya(p: Histogram8, q: Histogram8) -> float:
    """Distance in [0, 1] between two normalized histograms.

    sqrt(1 - sum_i sqrt(p_i q_i)), with the argument clamped at zero so
    rounding can never produce a NaN.
    """
    coeff = float(np.sqrt(p.bins * q.bins).sum())
    return math.sqrt(max(0.0, 1.0 - coeff))


def part_weight_factor(distance: float, params: LikelihoodParams) -> float:
    """Likelihood factor exp(-lam * d^2) for one part."""
    return math.exp(-params.lam * distance * distance)


def init_references(
    image: np.ndarray, model: ArticulatedModel, initial: ObjectState
) -> list[Histogram8]:
    """Reference histogram per part, taken from the first frame at the known
    initial pose and kept fixed afterwards.  Parts landing outside the canvas
    get a uniform reference and a warning."""
    refs: list[Histogram8] = []
    for k in range(1, model.part_count + 1):
        hist = region_histogram(image, place_polygon(model, k, initial[k - 1]))
        if hist.empty:
            log.warning("part %d covers no pixel at the initial pose; using a uniform reference", k)
        refs.append(hist)
    return refs
