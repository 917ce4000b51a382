"""Benchmark harness: synthetic sequence generation, benchmark matrices over
resamplers and particle counts, CSV reporting and SVG convergence plots."""

from __future__ import annotations

import csv
import dataclasses
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dbn import DbnSpec
from .geometry import (
    ArticulatedModel,
    MotionParams,
    ObjectState,
    default_pose,
    ground_truth_step,
    render_frame,
)
from .pgm import read_pgm, write_pgm
from .tracker import RESAMPLER_NAMES, TrackerConfig, track_sequence

TRUTH_FILE = "truth.csv"
OBJECT_FILE = "object.json"


class ConfigError(ValueError):
    pass


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class SequenceSpec:
    """Synthetic star-shaped object and the sequence to film it with.

    The object has one central part and ``arm_count`` serial arms of
    ``arm_length`` parts each, P = 1 + arm_count * arm_length in total.
    """

    arm_count: int
    arm_length: int
    frame_count: int = 300
    width: int = 800
    height: int = 640
    sigma_xy: float = 1.0
    sigma_theta: float = 0.025
    seed: int = 0
    part_length: float = 30.0
    part_width: float = 12.0
    name: str = "object"

    def __post_init__(self):
        if self.arm_count < 0:
            raise ConfigError("arm_count must be >= 0")
        if self.arm_count > 0 and self.arm_length < 1:
            raise ConfigError("arm_length must be >= 1")
        if self.frame_count < 1 or self.width < 1 or self.height < 1:
            raise ConfigError("frame_count and canvas dimensions must be >= 1")

    @property
    def part_count(self) -> int:
        return 1 + self.arm_count * max(self.arm_length, 0)


def build_model(spec: SequenceSpec) -> ArticulatedModel:
    structure = DbnSpec.star(spec.arm_count, spec.arm_length) if spec.arm_count else DbnSpec.chain(1)
    return ArticulatedModel.uniform(structure, spec.part_length, spec.part_width)


def initial_pose(spec: SequenceSpec, model: ArticulatedModel) -> ObjectState:
    return default_pose(model, (spec.width / 2.0, spec.height / 2.0))


def simulate_sequence(spec: SequenceSpec) -> tuple[ArticulatedModel, list[np.ndarray], np.ndarray]:
    """In-memory frames and ground truth, deterministic in ``spec.seed``."""
    model = build_model(spec)
    pose = initial_pose(spec, model)
    params = MotionParams(spec.sigma_xy, spec.sigma_theta)
    rng = np.random.default_rng(spec.seed)
    margin = max(model.lengths[0], model.widths[0])
    bounds = (margin, spec.width - margin, margin, spec.height - margin)
    states = [pose]
    for _ in range(spec.frame_count - 1):
        states.append(ground_truth_step(model, states[-1], params, rng, root_bounds=bounds))
    truth = np.stack(states)
    frames = [render_frame(model, s, spec.width, spec.height) for s in states]
    return model, frames, truth


def generate_sequence(spec: SequenceSpec, out_dir) -> Path:
    """Write frame_0001.pgm.. plus truth.csv (row: frame index then x, y,
    theta per part, 6 decimals) and object.json recording the generation
    parameters.  File
    problems surface as OSError."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _, frames, truth = simulate_sequence(spec)
    for t, frame in enumerate(frames, start=1):
        write_pgm(out / f"frame_{t:04d}.pgm", frame)
    with open(out / TRUTH_FILE, "w", newline="") as fh:
        for t in range(len(frames)):
            row = ",".join(f"{v:.6f}" for v in truth[t].ravel())
            fh.write(f"{t + 1},{row}\n")
    with open(out / OBJECT_FILE, "w") as fh:
        json.dump(dataclasses.asdict(spec), fh, indent=2)
        fh.write("\n")
    return out


def load_truth(path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        for record in csv.reader(fh):
            if not record:
                continue
            values = [float(v) for v in record[1:]]
            rows.append(np.array(values).reshape(-1, 3))
    if not rows:
        raise ConfigError(f"{path}: no ground-truth rows")
    return np.stack(rows)


def load_frames(frames_dir) -> list[np.ndarray]:
    paths = sorted(Path(frames_dir).glob("*.pgm"))
    if not paths:
        raise ConfigError(f"no .pgm frames under {frames_dir}")
    return [read_pgm(p) for p in paths]


def load_object_spec(frames_dir) -> SequenceSpec:
    path = Path(frames_dir) / OBJECT_FILE
    if not path.exists():
        raise ConfigError(f"{path} not found; pass an object description via --config")
    return SequenceSpec(**json.loads(path.read_text()))


@dataclass(frozen=True)
class BenchmarkRow:
    object_name: str
    resampler: str
    particles: int
    run: int
    seed: int
    mean_error_px: float
    resample_seconds: float
    total_seconds: float
    resample_invocations: int


CSV_HEADER = (
    "object",
    "resampler",
    "particles",
    "run",
    "seed",
    "mean_error_px",
    "resample_seconds",
    "total_seconds",
    "resample_invocations",
)


@dataclass
class BenchmarkReport:
    rows: list[BenchmarkRow]

    def series(self) -> dict[tuple[str, str], list[tuple[int, float, float]]]:
        """Per (object, resampler): sorted (N, mean, std) aggregated over runs."""
        pools: dict[tuple[str, str], dict[int, list[float]]] = {}
        for row in self.rows:
            key = (row.object_name, row.resampler)
            pools.setdefault(key, {}).setdefault(row.particles, []).append(row.mean_error_px)
        out: dict[tuple[str, str], list[tuple[int, float, float]]] = {}
        for key, by_n in pools.items():
            out[key] = [
                (n, float(np.mean(errs)), float(np.std(errs)))
                for n, errs in sorted(by_n.items())
            ]
        return out


def _cell_seed(master_seed: int, *indices: int) -> int:
    return int(np.random.SeedSequence([master_seed, *indices]).generate_state(1)[0])


def _worker_count(config: dict) -> int:
    env = os.environ.get("CRTRACK_WORKERS")
    if env is not None:
        try:
            workers = int(env)
        except ValueError as exc:
            raise ConfigError(f"CRTRACK_WORKERS must be an integer, got {env!r}") from exc
    else:
        workers = int(config.get("workers", 1))
    if workers < 1:
        raise ConfigError("worker count must be >= 1")
    return workers


def run_benchmark(config: dict) -> BenchmarkReport:
    """Run every (object, resampler, N, run) cell of a declarative config.

    Config keys: ``objects`` (list of SequenceSpec fields), ``resamplers``,
    ``particles``, ``runs``, ``seed`` (master), optional ``workers`` and
    ``tracker`` overrides (sigma_xy, sigma_theta, lam, weighted_exponent,
    partition_mode).  Every cell gets an independent seed derived from the
    master seed and the cell indices, so the error table is a pure function
    of the config; cells run concurrently up to the worker count.
    """
    try:
        objects = [SequenceSpec(**obj) for obj in config["objects"]]
        resamplers = list(config["resamplers"])
        particles = [int(n) for n in config["particles"]]
        runs = int(config["runs"])
        master_seed = int(config.get("seed", 0))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad benchmark config: {exc}") from exc
    if not objects or not resamplers or not particles or runs < 1:
        raise ConfigError("objects, resamplers, particles and runs must be non-empty")
    for name in resamplers:
        if name not in RESAMPLER_NAMES:
            raise ConfigError(f"unknown resampler {name!r} (choices: {', '.join(RESAMPLER_NAMES)})")
    overrides = dict(config.get("tracker", {}))
    mode_override = overrides.pop("partition_mode", None)
    workers = _worker_count(config)

    simulated = [simulate_sequence(obj) for obj in objects]

    def run_cell(cell: tuple[int, int, int, int]) -> BenchmarkRow:
        obj_idx, res_idx, n_idx, run = cell
        spec = objects[obj_idx]
        model, frames, truth = simulated[obj_idx]
        name = resamplers[res_idx]
        seed = _cell_seed(master_seed, obj_idx, res_idx, n_idx, run)
        mode = mode_override or ("parallel" if name == "combinatorial" else "singleton")
        cfg = TrackerConfig(
            particle_count=particles[n_idx],
            resampler=name,
            sigma_xy=float(overrides.get("sigma_xy", spec.sigma_xy)),
            sigma_theta=float(overrides.get("sigma_theta", spec.sigma_theta)),
            lam=float(overrides.get("lam", 50.0)),
            weighted_exponent=float(overrides.get("weighted_exponent", 20.0)),
            partition_mode=mode,
            seed=seed,
        )
        result = track_sequence(frames, truth[0], model, cfg, truth=truth)
        return BenchmarkRow(
            object_name=spec.name,
            resampler=name,
            particles=particles[n_idx],
            run=run,
            seed=seed,
            mean_error_px=result.mean_error,
            resample_seconds=result.resample_seconds,
            total_seconds=result.total_seconds,
            resample_invocations=result.resample_invocations,
        )

    cells = [
        (oi, ri, ni, run)
        for oi in range(len(objects))
        for ri in range(len(resamplers))
        for ni in range(len(particles))
        for run in range(runs)
    ]
    if workers == 1:
        rows = [run_cell(c) for c in cells]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_cell, cells))
    return BenchmarkReport(rows)


def write_results_csv(report: BenchmarkReport, path) -> None:
    """One header row then one row per cell; floats written with repr
    precision so parsing the file reproduces the report exactly."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for row in report.rows:
            writer.writerow(
                [
                    row.object_name,
                    row.resampler,
                    row.particles,
                    row.run,
                    row.seed,
                    repr(row.mean_error_px),
                    repr(row.resample_seconds),
                    repr(row.total_seconds),
                    row.resample_invocations,
                ]
            )


def read_results_csv(path) -> BenchmarkReport:
    rows: list[BenchmarkRow] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != CSV_HEADER:
            raise ConfigError(f"{path}: unexpected header {header!r}")
        for record in reader:
            if not record:
                continue
            rows.append(
                BenchmarkRow(
                    object_name=record[0],
                    resampler=record[1],
                    particles=int(record[2]),
                    run=int(record[3]),
                    seed=int(record[4]),
                    mean_error_px=float(record[5]),
                    resample_seconds=float(record[6]),
                    total_seconds=float(record[7]),
                    resample_invocations=int(record[8]),
                )
            )
    return BenchmarkReport(rows)


_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#17becf")


def emit_convergence_plot(report: BenchmarkReport, path) -> None:
    """Mean error against particle count, one polyline per resampler,
    written as self-contained SVG 1.1 (no external renderer)."""
    series = report.series()
    multi_object = len({obj for obj, _ in series}) > 1
    lines = []
    for (obj, resampler), points in sorted(series.items()):
        if len(points) >= 2:
            label = f"{obj}/{resampler}" if multi_object else resampler
            lines.append((label, points))
    if not lines:
        raise InsufficientData("need at least two particle counts for one resampler")

    width, height = 640, 440
    left, right, top, bottom = 70, 170, 20, 50
    xs = sorted({n for _, pts in lines for n, _, _ in pts})
    ymax = max(err for _, pts in lines for _, err, _ in pts)
    ymax = ymax if ymax > 0 else 1.0
    x0, x1 = min(xs), max(xs)
    span = (x1 - x0) if x1 > x0 else 1

    def px(n: float) -> float:
        return left + (n - x0) / span * (width - left - right)

    def py(err: float) -> float:
        return top + (1.0 - err / ymax) * (height - top - bottom)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{left}" y1="{height - bottom}" x2="{width - right}" '
        f'y2="{height - bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{height - bottom}" stroke="black"/>',
    ]
    for n in xs:
        parts.append(
            f'<text x="{px(n):.1f}" y="{height - bottom + 18}" font-size="11" '
            f'text-anchor="middle">{n}</text>'
        )
    for i in range(5):
        err = ymax * i / 4
        parts.append(
            f'<text x="{left - 6}" y="{py(err):.1f}" font-size="11" '
            f'text-anchor="end" dominant-baseline="middle">{err:.3g}</text>'
        )
    parts.append(
        f'<text x="{(left + width - right) / 2:.1f}" y="{height - 12}" font-size="12" '
        f'text-anchor="middle">particles</text>'
    )
    parts.append(
        f'<text x="16" y="{(top + height - bottom) / 2:.1f}" font-size="12" '
        f'text-anchor="middle" transform="rotate(-90 16 {(top + height - bottom) / 2:.1f})">'
        "mean error (px)</text>"
    )
    for i, (label, points) in enumerate(lines):
        color = _PALETTE[i % len(_PALETTE)]
        coords = " ".join(f"{px(n):.2f},{py(err):.2f}" for n, err, _ in points)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
        ly = top + 16 + 18 * i
        parts.append(
            f'<line x1="{width - right + 8}" y1="{ly}" x2="{width - right + 28}" '
            f'y2="{ly}" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{width - right + 34}" y="{ly + 4}" font-size="11">{label}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
