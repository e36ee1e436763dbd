"""Grid evaluation of the diamond metrics over one or two parameter axes."""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .model import (
    DEGENERATE_ABS,
    DiamondParams,
    PumpConfig,
    build_diamond_matrix,
    s_matrices,
    symmetric_ratio,
    transfer_amplitudes,
)

WORKERS_ENV = "DIAMONDNET_WORKERS"

EDGES = ("g", "h", "f", "k")
# angular-frequency valued parameters (rad/s)
FREQUENCY_PARAMETERS = frozenset(
    {"probe_frequency", "detuning", "gamma", "Gamma1", "Gamma2"}
    | {f"{e}_mag" for e in EDGES}
)
PARAMETERS = FREQUENCY_PARAMETERS | frozenset(
    {"theta", "Q1", "Q2", "a2bar_mag", "a4bar_mag", "a2bar_phase", "a4bar_phase"}
    | {f"{e}_phase" for e in EDGES}
)
METRICS = ("R", "forward_gain", "backward_gain")


@dataclass(frozen=True)
class SweepAxis:
    parameter: str
    start: float
    stop: float
    points: int = 1
    scale: str = "linear"

    def __post_init__(self):
        if self.parameter not in PARAMETERS:
            raise ValueError(f"unknown sweep parameter {self.parameter!r}")
        if int(self.points) != self.points or self.points < 1:
            raise ValueError("points must be a positive integer")
        if self.scale not in ("linear", "log"):
            raise ValueError("scale must be 'linear' or 'log'")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ValueError("axis endpoints must be finite")
        if self.points > 1 and not self.start < self.stop:
            raise ValueError("start must be below stop")
        if self.scale == "log" and (self.start <= 0 or self.stop <= 0):
            raise ValueError("log axes need positive endpoints")

    def values(self) -> np.ndarray:
        if self.points == 1:
            return np.array([float(self.start)])
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class FixedProbe:
    """Evaluate at ``w = omega + detuning``."""

    detuning: float = 0.0


@dataclass(frozen=True)
class TrackMax:
    """Report the maximum of ``metric`` over ``omega + center +/- span``."""

    span: float
    points: int = 201
    center: float = 0.0
    metric: str = "R"

    def __post_init__(self):
        if self.span <= 0 or self.points < 2:
            raise ValueError("tracking window needs positive span and >= 2 points")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")

    def detunings(self) -> np.ndarray:
        return np.linspace(self.center - self.span, self.center + self.span, self.points)


@dataclass(frozen=True)
class Record:
    coords: tuple
    R: float
    forward_gain: float
    backward_gain: float
    s31_sq: float
    s13_sq: float
    detuning: float
    flags: tuple = ()


@dataclass
class SweepResult:
    axes: tuple
    records: list = field(default_factory=list)

    def shape(self) -> tuple:
        return tuple(ax.points for ax in self.axes)

    def grid(self, name: str) -> np.ndarray:
        """Field ``name`` of every record, reshaped onto the axis grid."""
        return np.array([getattr(r, name) for r in self.records]).reshape(self.shape())

    def best(self, name: str = "R") -> Record:
        """First record attaining the maximum of ``name`` (NaNs ignored)."""
        vals = np.array([getattr(r, name) for r in self.records], dtype=float)
        if np.all(np.isnan(vals)):
            raise ValueError(f"no finite {name} values in sweep")
        return self.records[int(np.nanargmax(vals))]


def apply_parameter(params: DiamondParams, pumps: PumpConfig, name: str, value: float):
    """Return ``(params, pumps)`` with one named parameter overwritten.

    Probe-frequency parameters are not handled here; see :func:`evaluate_point`.
    """
    value = float(value)
    if name == "theta":
        return params.with_theta(value), pumps
    if name == "gamma":
        return replace(params, gamma=value), pumps
    if name == "Q1":
        return params.with_quality(Q1=value), pumps
    if name == "Q2":
        return params.with_quality(Q2=value), pumps
    if name in ("Gamma1", "Gamma2"):
        return replace(params, **{name: value}), pumps
    if name.endswith("_mag") or name.endswith("_phase"):
        base, part = name.rsplit("_", 1)
        if base in EDGES:
            c = getattr(params, base)
            c = value * np.exp(1j * np.angle(c)) if part == "mag" else abs(c) * np.exp(1j * value)
            return replace(params, **{base: complex(c)}), pumps
        if base in ("a2bar", "a4bar"):
            c = getattr(pumps, base)
            c = value * np.exp(1j * np.angle(c)) if part == "mag" else abs(c) * np.exp(1j * value)
            return params, replace(pumps, **{base: complex(c)})
    raise ValueError(f"cannot apply parameter {name!r}")


def evaluate_point(params: DiamondParams, pumps: PumpConfig | None, policy,
                   convention: str = "paper", probe: str = "mirrored",
                   coords: tuple = ()) -> Record:
    """Metrics for one parameter set under a fixed or tracking probe policy."""
    pumps = pumps or PumpConfig()
    if isinstance(policy, TrackMax):
        detunings = policy.detunings()
    else:
        detunings = np.array([policy.detuning])
    m = build_diamond_matrix(params)
    s, singular = s_matrices(m, params.linewidths, params.omega + detunings,
                             convention, probe, check=False)
    fwd, bwd = transfer_amplitudes(s, pumps)
    fwd_gain = np.abs(fwd) ** 2
    bwd_gain = np.abs(bwd) ** 2
    degenerate = (np.abs(fwd) < DEGENERATE_ABS) | (np.abs(bwd) < DEGENERATE_ABS)
    r = symmetric_ratio(fwd, bwd)
    bad = singular | degenerate
    r = np.where(bad, np.nan, r)

    if isinstance(policy, TrackMax):
        metric = {"R": r, "forward_gain": np.where(singular, np.nan, fwd_gain),
                  "backward_gain": np.where(singular, np.nan, bwd_gain)}[policy.metric]
        i = 0 if np.all(np.isnan(metric)) else int(np.nanargmax(metric))
    else:
        i = 0

    flags = []
    if singular[i]:
        flags.append("singular")
    elif degenerate[i]:
        flags.append("degenerate")
    nan = float("nan")
    return Record(
        coords=tuple(float(c) for c in coords),
        R=float(r[i]),
        forward_gain=nan if singular[i] else float(fwd_gain[i]),
        backward_gain=nan if singular[i] else float(bwd_gain[i]),
        s31_sq=nan if singular[i] else float(np.abs(s[i, 2, 0]) ** 2),
        s13_sq=nan if singular[i] else float(np.abs(s[i, 0, 2]) ** 2),
        detuning=float(detunings[i]),
        flags=tuple(flags),
    )


def _grid_points(axes) -> list:
    return list(itertools.product(*(ax.values() for ax in axes)))


def _point_task(args) -> Record:
    base, pumps, names, coords, policy, convention, probe = args
    params, pmp = base, pumps or PumpConfig()
    for name, value in zip(names, coords):
        if name in ("detuning", "probe_frequency"):
            continue
        params, pmp = apply_parameter(params, pmp, name, value)
    for name, value in zip(names, coords):
        if name == "detuning":
            policy = _shift_policy(policy, value)
        elif name == "probe_frequency":
            policy = _shift_policy(policy, value - params.omega)
    return evaluate_point(params, pmp, policy, convention, probe, coords)


def _shift_policy(policy, detuning: float):
    if isinstance(policy, TrackMax):
        return replace(policy, center=detuning)
    return FixedProbe(detuning)


def _check_axes(axes) -> tuple:
    axes = tuple(ax for ax in axes if ax is not None)
    if not 1 <= len(axes) <= 2:
        raise ValueError("a sweep takes one or two axes")
    names = [ax.parameter for ax in axes]
    if len(set(names)) != len(names):
        raise ValueError("sweep axes must be distinct parameters")
    if {"detuning", "probe_frequency"} <= set(names):
        raise ValueError("detuning and probe_frequency cannot both be swept")
    return axes


def _tasks(base, pumps, axes, w_policy, convention, probe):
    names = tuple(ax.parameter for ax in axes)
    return [(base, pumps, names, coords, w_policy, convention, probe)
            for coords in _grid_points(axes)]


def run_sweep(base: DiamondParams, pumps: PumpConfig | None, axes, w_policy=None,
              convention: str = "paper", probe: str = "mirrored") -> SweepResult:
    """Evaluate every grid point in lexicographic order (first axis outermost)."""
    axes = _check_axes(axes)
    policy = w_policy or FixedProbe()
    records = [_point_task(t) for t in _tasks(base, pumps, axes, policy, convention, probe)]
    return SweepResult(axes=axes, records=records)


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        n = int(env)
        if n < 1:
            raise ValueError(f"{WORKERS_ENV} must be a positive integer")
        return n
    return os.cpu_count() or 1


def run_sweep_parallel(base: DiamondParams, pumps: PumpConfig | None, axes, w_policy=None,
                       convention: str = "paper", probe: str = "mirrored",
                       workers: int | None = None) -> SweepResult:
    """Same output as :func:`run_sweep`, with grid points spread over processes."""
    axes = _check_axes(axes)
    policy = w_policy or FixedProbe()
    workers = workers or default_workers()
    tasks = _tasks(base, pumps, axes, policy, convention, probe)
    if workers == 1 or len(tasks) < 2:
        return SweepResult(axes=axes, records=[_point_task(t) for t in tasks])
    chunk = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        records = list(pool.map(_point_task, tasks, chunksize=chunk))
    return SweepResult(axes=axes, records=records)


def refine_peak(params: DiamondParams, pumps: PumpConfig | None, lo: float, hi: float,
                metric: str = "R", convention: str = "paper", probe: str = "mirrored",
                xatol: float = 1e-3) -> Record:
    """Locate a metric maximum between two detunings with bounded Brent search."""
    from scipy.optimize import minimize_scalar

    def negative(d):
        rec = evaluate_point(params, pumps, FixedProbe(d), convention, probe)
        v = getattr(rec, metric)
        return math.inf if math.isnan(v) else -v

    res = minimize_scalar(negative, bounds=(lo, hi), method="bounded",
                          options={"xatol": xatol})
    best = evaluate_point(params, pumps, FixedProbe(float(res.x)), convention, probe)
    # Brent can stop on a grid endpoint's shoulder; keep whichever is larger
    for d in (lo, hi):
        rec = evaluate_point(params, pumps, FixedProbe(d), convention, probe)
        if getattr(rec, metric) > getattr(best, metric):
            best = rec
    return best
