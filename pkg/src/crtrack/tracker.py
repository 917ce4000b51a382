"""Staged particle filtering over an articulated-object partition.

Each frame is processed step by step: the parts of one partition step are
propagated and corrected, then the whole set is resampled, so a frame costs
exactly as many resamples as the partition has steps.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from .dbn import DbnSpec, Partition, compute_partition
from .geometry import (
    ArticulatedModel,
    ObjectState,
    estimation_error,
    place_polygon,
    wrap_angle,
)
from .likelihood import (
    Histogram8,
    LikelihoodParams,
    bhattacharyya,
    init_references,
    part_weight_factor,
    region_histogram,
)
from .resampling import (
    ParticleSet,
    combinatorial_resample,
    initial_particle_set,
    multinomial_resample,
    residual_resample,
    stratified_resample,
    systematic_resample,
    weighted_resample,
)

log = logging.getLogger(__name__)


class AlreadyProcessed(RuntimeError):
    pass


class NotFullyProcessed(RuntimeError):
    pass


RESAMPLER_NAMES = (
    "multinomial",
    "stratified",
    "systematic",
    "residual",
    "weighted",
    "combinatorial",
)

# rng stream tags; every stream is keyed (seed, frame, tag, ...) so that the
# processing order of parts inside a stage cannot change any draw
_PROPAGATE_STREAM = 1
_RESAMPLE_STREAM = 2


@dataclass(frozen=True)
class TrackerConfig:
    particle_count: int
    resampler: str = "systematic"
    sigma_xy: float = 1.0
    sigma_theta: float = 0.025
    lam: float = 50.0
    weighted_exponent: float = 20.0
    partition_mode: str = "parallel"
    seed: int = 0

    def __post_init__(self):
        if self.particle_count < 1:
            raise ValueError("particle_count must be >= 1")
        if self.sigma_xy < 0 or self.sigma_theta < 0:
            raise ValueError("proposal sigmas must be >= 0")
        if self.resampler not in RESAMPLER_NAMES:
            raise ValueError(f"unknown resampler {self.resampler!r}")
        if self.partition_mode not in ("singleton", "parallel"):
            raise ValueError(f"unknown partition mode {self.partition_mode!r}")
        if self.resampler == "combinatorial" and self.partition_mode != "parallel":
            raise ValueError("combinatorial resampling needs the parallel partition")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")


def partition_for(spec: DbnSpec, mode: str) -> Partition:
    """Parallel mode groups whole tree levels per step; singleton mode
    processes one part per step, parents first, so K equals P."""
    parallel = compute_partition(spec)
    if mode == "parallel":
        return parallel
    return Partition(tuple((k,) for step in parallel.steps for k in step))


def propagate_rng(seed: int, frame_index: int, k: int) -> np.random.Generator:
    return np.random.default_rng([seed, frame_index, _PROPAGATE_STREAM, k])


def resample_rng(seed: int, frame_index: int, stage: int) -> np.random.Generator:
    return np.random.default_rng([seed, frame_index, _RESAMPLE_STREAM, stage])


def propagate_part(
    pset: ParticleSet, k: int, cfg: TrackerConfig, rng: np.random.Generator
) -> ParticleSet:
    """Move part k of every particle by its Gaussian proposal (in place)."""
    if k in pset.processed:
        raise AlreadyProcessed(f"part {k} was already propagated this frame")
    n = pset.n
    col = pset.states[:, k - 1]
    col[:, 0] += rng.normal(0.0, cfg.sigma_xy, n)
    col[:, 1] += rng.normal(0.0, cfg.sigma_xy, n)
    col[:, 2] = wrap_angle(col[:, 2] + rng.normal(0.0, cfg.sigma_theta, n))
    pset.processed = pset.processed | {k}
    return pset


def correct_part(
    pset: ParticleSet,
    k: int,
    frame: np.ndarray,
    refs: list[Histogram8],
    model: ArticulatedModel,
    cfg: TrackerConfig,
) -> ParticleSet:
    """Score part k of every particle against its reference histogram.

    Stores exp(-lam d^2) as the part's weight factor and renormalizes the
    total weights.  Totals are rebuilt as (weights at the first correction
    since the last resample) x (accrued factors, multiplied in ascending part
    order), which equals multiply-and-renormalize but cannot depend on the
    order parts are corrected in.  If every product underflows to zero the
    weights fall back to uniform with a warning instead of aborting the run.
    """
    if k not in pset.processed:
        raise AlreadyProcessed(f"part {k} must be propagated before correction")
    if k in pset.fresh:
        raise AlreadyProcessed(f"part {k} was already corrected at this stage")
    if pset.stage_base is None:
        pset.stage_base = pset.weights.copy()
    params = LikelihoodParams(cfg.lam)
    ref = refs[k - 1]
    factors = np.empty(pset.n)
    for i in range(pset.n):
        hist = region_histogram(frame, place_polygon(model, k, pset.states[i, k - 1]))
        factors[i] = part_weight_factor(bhattacharyya(hist, ref), params)
    pset.part_weights[:, k - 1] = factors
    pset.fresh = tuple(sorted((*pset.fresh, k)))
    w = pset.stage_base.copy()
    for kk in pset.fresh:
        w = w * pset.part_weights[:, kk - 1]
    total = w.sum()
    if not np.isfinite(total) or total <= 0.0:
        log.warning("all particle weights degenerated at part %d; resetting to uniform", k)
        pset.weights = np.full(pset.n, 1.0 / pset.n)
    else:
        pset.weights = w / total
    return pset


def _make_resampler(cfg: TrackerConfig, spec: DbnSpec):
    name = cfg.resampler
    if name == "multinomial":
        return lambda ps, stage, rng: multinomial_resample(ps, rng)
    if name == "stratified":
        return lambda ps, stage, rng: stratified_resample(ps, rng)
    if name == "systematic":
        return lambda ps, stage, rng: systematic_resample(ps, rng)
    if name == "residual":
        return lambda ps, stage, rng: residual_resample(ps, rng)
    if name == "weighted":
        exponent = cfg.weighted_exponent

        def score(w: np.ndarray) -> np.ndarray:
            return np.exp(exponent * w)

        return lambda ps, stage, rng: weighted_resample(ps, score, rng)
    if name == "combinatorial":
        return lambda ps, stage, rng: combinatorial_resample(ps, spec, stage, rng)
    raise ValueError(f"unknown resampler {name!r}")


@dataclass
class StepStats:
    resample_invocations: int
    resample_seconds: float


def ps_step(
    pset: ParticleSet,
    frame: np.ndarray,
    partition: Partition,
    model: ArticulatedModel,
    refs: list[Histogram8],
    cfg: TrackerConfig,
    frame_index: int,
) -> tuple[ParticleSet, StepStats]:
    """Advance the particle set by one frame: per partition step, propagate
    and correct its parts (ascending id) and resample once."""
    resampler = _make_resampler(cfg, model.spec)
    pset.processed = frozenset()
    pset.fresh = ()
    pset.stage_base = None
    spent = 0.0
    for stage, parts in enumerate(partition.steps, start=1):
        for k in sorted(parts):
            pset = propagate_part(pset, k, cfg, propagate_rng(cfg.seed, frame_index, k))
            pset = correct_part(pset, k, frame, refs, model, cfg)
        rng = resample_rng(cfg.seed, frame_index, stage)
        start = time.perf_counter()
        pset = resampler(pset, stage, rng)
        spent += time.perf_counter() - start
    return pset, StepStats(partition.num_steps, spent)


def estimate(pset: ParticleSet) -> ObjectState:
    """Weighted mean pose: plain means for x and y, circular mean for theta.

    Computed as offsets from particle 0 so a set of identical particles
    estimates their common state bit for bit.
    """
    if pset.processed != frozenset(range(1, pset.part_count + 1)):
        missing = sorted(set(range(1, pset.part_count + 1)) - pset.processed)
        raise NotFullyProcessed(f"parts not processed this frame: {missing}")
    w = pset.weights
    total = w.sum()
    ref = pset.states[0]
    delta = pset.states - ref[None, :, :]
    x = ref[:, 0] + (w @ delta[:, :, 0]) / total
    y = ref[:, 1] + (w @ delta[:, :, 1]) / total
    sin_sum = w @ np.sin(delta[:, :, 2])
    cos_sum = w @ np.cos(delta[:, :, 2])
    theta = wrap_angle(ref[:, 2] + np.arctan2(sin_sum, cos_sum))
    return np.column_stack((x, y, np.atleast_1d(theta)))


@dataclass
class TrackResult:
    estimates: np.ndarray  # (T, P, 3)
    errors: np.ndarray | None  # (T,) when ground truth was supplied
    resample_invocations: int
    resample_seconds: float
    total_seconds: float

    @property
    def mean_error(self) -> float | None:
        if self.errors is None:
            return None
        return float(np.mean(self.errors))


def track_sequence(
    frames,
    initial: ObjectState,
    model: ArticulatedModel,
    cfg: TrackerConfig,
    truth: np.ndarray | None = None,
) -> TrackResult:
    """Track a whole sequence from a known pose in the first frame.

    ``frames`` is a sequence of grayscale arrays; references are built from
    frames[0] at ``initial`` and every later frame is handled by ps_step.
    When ``truth`` (T, P, 3) is given, the per-frame corner error is recorded.
    """
    if len(frames) < 1:
        raise ValueError("need at least one frame")
    start = time.perf_counter()
    partition = partition_for(model.spec, cfg.partition_mode)
    refs = init_references(frames[0], model, initial)
    pset = initial_particle_set(cfg.particle_count, initial)
    estimates = [np.array(initial, dtype=float, copy=True)]
    invocations = 0
    resample_seconds = 0.0
    for t in range(1, len(frames)):
        pset, stats = ps_step(pset, frames[t], partition, model, refs, cfg, t)
        estimates.append(estimate(pset))
        invocations += stats.resample_invocations
        resample_seconds += stats.resample_seconds
    stacked = np.stack(estimates)
    errors = None
    if truth is not None:
        truth = np.asarray(truth, dtype=float)
        if truth.shape != stacked.shape:
            raise ValueError(f"ground truth shape {truth.shape} != estimates {stacked.shape}")
        errors = np.array(
            [estimation_error(model, stacked[t], truth[t]) for t in range(len(frames))]
        )
    return TrackResult(
        estimates=stacked,
        errors=errors,
        resample_invocations=invocations,
        resample_seconds=resample_seconds,
        total_seconds=time.perf_counter() - start,
    )
