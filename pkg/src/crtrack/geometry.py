"""Rectangular part geometry, ground-truth motion and frame rendering.

A part state is a row (x, y, theta): rectangle centre in pixels and
orientation in radians, theta wrapped to (-pi, pi].  An object state is an
(P, 3) float array with part k in row k - 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dbn import DbnSpec, compute_partition

# ObjectState: np.ndarray of shape (P, 3), columns (x, y, theta).
ObjectState = np.ndarray

TWO_PI = 2.0 * math.pi


def wrap_angle(theta):
    """Wrap to (-pi, pi].  Values already in range are returned unchanged
    (bit for bit), so adding a zero perturbation is an exact identity."""
    t = np.asarray(theta, dtype=float)
    wrapped = np.pi - np.mod(np.pi - t, TWO_PI)
    out = np.where((t > -np.pi) & (t <= np.pi), t, wrapped)
    if np.isscalar(theta) or out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class MotionParams:
    """Per-step Gaussian sigmas: translation in pixels, rotation in radians."""

    sigma_xy: float
    sigma_theta: float

    def __post_init__(self):
        if self.sigma_xy < 0 or self.sigma_theta < 0:
            raise ValueError("motion sigmas must be >= 0")


@dataclass(frozen=True)
class ArticulatedModel:
    """Link structure plus the rectangle dimensions of every part."""

    spec: DbnSpec
    lengths: tuple[float, ...]
    widths: tuple[float, ...]

    def __post_init__(self):
        p = self.spec.part_count
        if len(self.lengths) != p or len(self.widths) != p:
            raise ValueError("need one length and width per part")
        if any(v <= 0 for v in self.lengths + self.widths):
            raise ValueError("part dimensions must be positive")

    @classmethod
    def uniform(cls, spec: DbnSpec, length: float, width: float) -> "ArticulatedModel":
        p = spec.part_count
        return cls(spec, (float(length),) * p, (float(width),) * p)

    @property
    def part_count(self) -> int:
        return self.spec.part_count


# Unit corner offsets, counterclockwise from the base-left corner.  The base
# is the edge through which a part attaches to its parent (local -x side),
# the tip is the opposite edge (local +x side).
_CORNERS = np.array([(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)])


def place_polygon(model: ArticulatedModel, k: int, state) -> np.ndarray:
    """Corners (4, 2) of part k at the given (x, y, theta) row.

    Order is fixed: counterclockwise starting at the base-left corner, i.e.
    local (-L/2, -W/2), (L/2, -W/2), (L/2, W/2), (-L/2, W/2) rotated by theta
    and translated to the centre.
    """
    x, y, theta = float(state[0]), float(state[1]), float(state[2])
    length, width = model.lengths[k - 1], model.widths[k - 1]
    c, s = math.cos(theta), math.sin(theta)
    local = _CORNERS * (length, width)
    return np.column_stack(
        (x + local[:, 0] * c - local[:, 1] * s, y + local[:, 0] * s + local[:, 1] * c)
    )


def object_corners(model: ArticulatedModel, state: ObjectState) -> np.ndarray:
    """Corners of every part, shape (P, 4, 2)."""
    state = np.asarray(state, dtype=float)
    lengths = np.asarray(model.lengths)
    widths = np.asarray(model.widths)
    local = _CORNERS[None, :, :] * np.stack((lengths, widths), axis=1)[:, None, :]
    c = np.cos(state[:, 2])[:, None]
    s = np.sin(state[:, 2])[:, None]
    gx = state[:, 0][:, None] + local[:, :, 0] * c - local[:, :, 1] * s
    gy = state[:, 1][:, None] + local[:, :, 0] * s + local[:, :, 1] * c
    return np.stack((gx, gy), axis=2)


def tip_point(model: ArticulatedModel, k: int, state) -> tuple[float, float]:
    """Midpoint of part k's tip edge, where children attach."""
    x, y, theta = float(state[0]), float(state[1]), float(state[2])
    half = model.lengths[k - 1] / 2.0
    return (x + half * math.cos(theta), y + half * math.sin(theta))


def _attach_centre(model: ArticulatedModel, k: int, theta: float, tip: tuple[float, float]) -> tuple[float, float]:
    # Centre such that the base midpoint of part k lands on the parent tip.
    half = model.lengths[k - 1] / 2.0
    return (tip[0] + half * math.cos(theta), tip[1] + half * math.sin(theta))


def default_pose(model: ArticulatedModel, centre: tuple[float, float]) -> ObjectState:
    """Joint-consistent rest pose: roots at ``centre`` facing +x, children of
    each part fanned evenly over the open interval (-pi, pi) relative to the
    parent (a single child continues straight; nothing folds back over its
    parent).  Built with the same attachment arithmetic as
    ``ground_truth_step`` so stepping it with zero noise is an exact no-op.
    """
    spec = model.spec
    state = np.zeros((spec.part_count, 3))
    for step in compute_partition(spec).steps:
        for k in step:
            parent = spec.parent_of(k)
            if parent is None:
                state[k - 1] = (centre[0], centre[1], 0.0)
                continue
            siblings = spec.children_of(parent)
            rank = siblings.index(k)
            rel = -np.pi + TWO_PI * (rank + 1) / (len(siblings) + 1)
            theta = wrap_angle(state[parent - 1, 2] + rel)
            tip = tip_point(model, parent, state[parent - 1])
            cx, cy = _attach_centre(model, k, theta, tip)
            state[k - 1] = (cx, cy, theta)
    return state


def ground_truth_step(
    model: ArticulatedModel,
    state: ObjectState,
    params: MotionParams,
    rng: np.random.Generator,
    root_bounds: tuple[float, float, float, float] | None = None,
) -> ObjectState:
    """One motion step that keeps joints attached.

    Roots take Gaussian steps in x, y and theta; every other part gets a
    Gaussian perturbation of its joint angle and is re-placed so its base
    midpoint stays on its parent's tip midpoint.  ``root_bounds``
    (xmin, xmax, ymin, ymax) clamps root centres after the step.

    The input must itself satisfy the joint rule (as poses built by
    ``default_pose`` and previous steps do); with all-zero sigmas the output
    then equals the input exactly.
    """
    spec = model.spec
    out = np.array(state, dtype=float, copy=True)
    # total rotation applied to each part this step, carried down the tree so
    # children follow their parent rigidly before their own joint noise
    applied = np.zeros(spec.part_count)
    for step in compute_partition(spec).steps:
        for k in step:
            parent = spec.parent_of(k)
            if parent is None:
                dx = rng.normal(0.0, params.sigma_xy)
                dy = rng.normal(0.0, params.sigma_xy)
                dt = rng.normal(0.0, params.sigma_theta)
                x = out[k - 1, 0] + dx
                y = out[k - 1, 1] + dy
                if root_bounds is not None:
                    x = min(max(x, root_bounds[0]), root_bounds[1])
                    y = min(max(y, root_bounds[2]), root_bounds[3])
                out[k - 1] = (x, y, wrap_angle(out[k - 1, 2] + dt))
                applied[k - 1] = dt
            else:
                dt = rng.normal(0.0, params.sigma_theta)
                inc = applied[parent - 1] + dt
                theta = wrap_angle(out[k - 1, 2] + inc)
                tip = tip_point(model, parent, out[parent - 1])
                cx, cy = _attach_centre(model, k, theta, tip)
                out[k - 1] = (cx, cy, theta)
                applied[k - 1] = inc
    return out


def polygon_mask(corners: np.ndarray, x0: int, y0: int, nx: int, ny: int) -> np.ndarray:
    """Scanline fill of a simple polygon over the pixel grid block starting at
    (x0, y0), shape (ny, nx).

    A pixel belongs to the polygon iff its centre (ix + 0.5, iy + 0.5) lies
    inside under the even-odd crossing rule with half-open edge spans
    (y1 <= yc < y2) and a strict x comparison.  Centres strictly inside are
    always in; centres exactly on the boundary resolve consistently, so
    translating a polygon by whole pixels translates its fill.
    """
    mask = np.zeros((ny, nx), dtype=bool)
    if nx <= 0 or ny <= 0:
        return mask
    yc = y0 + np.arange(ny) + 0.5
    xc = x0 + np.arange(nx) + 0.5
    n = len(corners)
    for e in range(n):
        x1, y1 = corners[e]
        x2, y2 = corners[(e + 1) % n]
        if y1 == y2:
            continue
        rows = ((y1 <= yc) & (yc < y2)) | ((y2 <= yc) & (yc < y1))
        if not rows.any():
            continue
        t = (yc[rows] - y1) / (y2 - y1)
        xint = x1 + t * (x2 - x1)
        mask[rows] ^= xc[None, :] < xint[:, None]
    return mask


def polygon_bbox(corners: np.ndarray, width: int, height: int) -> tuple[int, int, int, int]:
    """Pixel block (x0, y0, nx, ny) covering the polygon, clipped to canvas."""
    x0 = max(0, int(math.floor(corners[:, 0].min() - 0.5)))
    y0 = max(0, int(math.floor(corners[:, 1].min() - 0.5)))
    x1 = min(width - 1, int(math.ceil(corners[:, 0].max() + 0.5)))
    y1 = min(height - 1, int(math.ceil(corners[:, 1].max() + 0.5)))
    return x0, y0, max(0, x1 - x0 + 1), max(0, y1 - y0 + 1)


def part_intensity(k: int, part_count: int) -> int:
    """Deterministic distinct gray level per part.

    Part 1 is brightest; later parts cycle through the six 32-wide intensity
    bands between the background band and part 1's band, with a per-part
    offset keeping levels distinct for part counts up to 85.  Consecutive
    parts therefore never share an 8-bin histogram interval with each other,
    with part 1 or with the intensity-0 background, which keeps neighbouring
    parts distinguishable to histogram likelihoods.
    """
    if k == 1 or part_count == 1:
        return 255
    band = 1 + (k - 2) % 6
    return 32 * band + 4 + (k - 2) % 28


def render_frame(model: ArticulatedModel, state: ObjectState, width: int, height: int) -> np.ndarray:
    """Grayscale frame (height, width) uint8: background 0, each part filled
    with its own intensity, higher part ids painted on top."""
    img = np.zeros((height, width), dtype=np.uint8)
    p = model.part_count
    for k in range(1, p + 1):
        corners = place_polygon(model, k, state[k - 1])
        x0, y0, nx, ny = polygon_bbox(corners, width, height)
        if nx == 0 or ny == 0:
            continue
        mask = polygon_mask(corners, x0, y0, nx, ny)
        img[y0 : y0 + ny, x0 : x0 + nx][mask] = part_intensity(k, p)
    return img


def estimation_error(model: ArticulatedModel, estimate: ObjectState, truth: ObjectState) -> float:
    """Sum over parts and their four corners of Euclidean corner distances."""
    diff = object_corners(model, estimate) - object_corners(model, truth)
    return float(np.sqrt((diff * diff).sum(axis=2)).sum())
