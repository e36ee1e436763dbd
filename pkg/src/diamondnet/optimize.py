"""Grid-seeded Nelder-Mead maximization of the non-reciprocity objectives."""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import DiamondParams, PumpConfig, to_db
from .sweep import FixedProbe, PARAMETERS, TrackMax, apply_parameter, evaluate_point

OBJECTIVES = ("intrinsic_R", "window_max_R", "extrinsic_R", "isolation")

# Nelder-Mead coefficients
REFLECT, EXPAND, CONTRACT, SHRINK = 1.0, 2.0, 0.5, 0.5
INITIAL_STEP = 0.05  # fraction of the box width


@dataclass(frozen=True)
class FreeParameter:
    name: str
    lower: float
    upper: float
    log: bool = False

    def __post_init__(self):
        if self.name not in PARAMETERS or self.name in ("detuning", "probe_frequency"):
            raise ValueError(f"cannot optimize over {self.name!r}")
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ValueError("bounds must be finite")
        if not self.lower < self.upper:
            raise ValueError(f"{self.name}: lower bound must be below upper bound")
        if self.log and self.lower <= 0:
            raise ValueError(f"{self.name}: log-scaled bounds must be positive")

    def to_unit(self, value: float) -> float:
        return math.log10(value) if self.log else value

    def from_unit(self, u: float) -> float:
        return 10.0 ** u if self.log else u

    @property
    def unit_bounds(self) -> tuple:
        return self.to_unit(self.lower), self.to_unit(self.upper)


@dataclass(frozen=True)
class OptimizationProblem:
    """Maximize ``objective`` over the ``free`` parameters.

    ``intrinsic_R`` ignores the pumps; ``extrinsic_R`` and ``isolation`` use
    them; ``window_max_R`` takes the largest R over ``window``.
    """

    objective: str
    free: tuple
    base: DiamondParams
    pumps: PumpConfig = field(default_factory=PumpConfig)
    detuning: float = 0.0
    window: TrackMax | None = None
    convention: str = "paper"
    probe: str = "mirrored"

    def __post_init__(self):
        object.__setattr__(self, "free", tuple(self.free))
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        if not self.free:
            raise ValueError("need at least one free parameter")
        names = [p.name for p in self.free]
        if len(set(names)) != len(names):
            raise ValueError("free parameters must be distinct")
        if self.objective == "window_max_R" and self.window is None:
            raise ValueError("window_max_R needs a window")

    def point_dict(self, x) -> dict:
        return {p.name: float(v) for p, v in zip(self.free, x)}

    def evaluate(self, x) -> float:
        """Objective at a point in natural units; degenerate points give -inf."""
        params, pumps = self.base, self.pumps
        for p, v in zip(self.free, x):
            params, pumps = apply_parameter(params, pumps, p.name, v)
        if self.objective == "intrinsic_R":
            pumps = PumpConfig()
        if self.objective == "window_max_R":
            policy = TrackMax(self.window.span, self.window.points,
                              self.window.center + self.detuning, "R")
        else:
            policy = FixedProbe(self.detuning)
        rec = evaluate_point(params, pumps, policy, self.convention, self.probe)
        if self.objective == "isolation":
            value = to_db(rec.forward_gain) - to_db(rec.backward_gain)
        else:
            value = rec.R
        return -math.inf if not math.isfinite(value) else float(value)


@dataclass
class OptimizationResult:
    point: np.ndarray
    value: float
    evaluations: int = 0
    history: list = field(default_factory=list)


def _grid(problem: OptimizationProblem, points_per_axis: int) -> list:
    axes = []
    for p in problem.free:
        lo, hi = p.unit_bounds
        u = np.array([(lo + hi) / 2]) if points_per_axis == 1 else np.linspace(lo, hi, points_per_axis)
        axes.append([p.from_unit(v) for v in u])
    return [np.array(c) for c in itertools.product(*axes)]


def _evaluate(args):
    problem, x = args
    return problem.evaluate(x)


def grid_seed(problem: OptimizationProblem, points_per_axis: int = 21,
              workers: int = 1) -> OptimizationResult:
    """Best point of a regular grid (log-spaced for log parameters).

    Ties keep the first point in lexicographic grid order. A single-point
    grid sits at the box center.
    """
    if points_per_axis < 1:
        raise ValueError("points_per_axis must be positive")
    if len(problem.free) > 3:
        raise ValueError("full grids are limited to three free parameters")
    pts = _grid(problem, points_per_axis)
    if workers > 1 and len(pts) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(_evaluate, [(problem, x) for x in pts],
                                   chunksize=max(1, len(pts) // (4 * workers))))
    else:
        values = [problem.evaluate(x) for x in pts]
    best = 0
    for i, v in enumerate(values):
        if v > values[best]:
            best = i
    return OptimizationResult(point=pts[best], value=values[best], evaluations=len(pts),
                              history=[values[best]])


def refine(problem: OptimizationProblem, seed, max_evals: int = 2000,
           rtol: float = 1e-6) -> OptimizationResult:
    """Box-constrained Nelder-Mead ascent from ``seed``.

    Works in unit coordinates (log10 for log parameters), projects trial points
    onto the box, and stops when every vertex lies within ``rtol`` box widths
    of the best one or after ``max_evals`` evaluations.
    """
    free = problem.free
    dim = len(free)
    lo = np.array([p.unit_bounds[0] for p in free])
    hi = np.array([p.unit_bounds[1] for p in free])
    width = hi - lo
    seed = np.asarray(seed, dtype=float)
    u0 = np.array([p.to_unit(v) for p, v in zip(free, seed)])
    if np.any(u0 < lo - 1e-12 * width) or np.any(u0 > hi + 1e-12 * width):
        raise ValueError("seed lies outside the box")
    u0 = np.clip(u0, lo, hi)

    evals = 0

    def cost(u, x=None):
        nonlocal evals
        evals += 1
        if x is None:
            x = np.array([p.from_unit(v) for p, v in zip(free, u)])
        return -problem.evaluate(x)

    simplex = [u0]
    costs = [cost(u0, seed)]
    natural = {0: seed}
    for i in range(dim):
        step = INITIAL_STEP * width[i]
        for _ in range(10):
            u = u0.copy()
            u[i] = u[i] + step if u[i] + step <= hi[i] else u[i] - step
            c = cost(u)
            if not math.isinf(c):
                break
            # keep degenerate points out of the simplex
            step = -step if step > 0 else -0.5 * step
        simplex.append(u)
        costs.append(c)
    history = [-min(costs)]

    while evals < max_evals:
        order = np.argsort(costs, kind="stable")
        simplex = [simplex[i] for i in order]
        costs = [costs[i] for i in order]
        history.append(-costs[0])
        spread = max(np.max(np.abs(v - simplex[0]) / width) for v in simplex[1:])
        if spread < rtol:
            break

        centroid = np.mean(simplex[:-1], axis=0)
        worst = simplex[-1]
        ur = np.clip(centroid + REFLECT * (centroid - worst), lo, hi)
        cr = cost(ur)
        if costs[0] <= cr < costs[-2]:
            simplex[-1], costs[-1] = ur, cr
            continue
        if cr < costs[0]:
            ue = np.clip(centroid + EXPAND * (centroid - worst), lo, hi)
            ce = cost(ue)
            if ce < cr:
                simplex[-1], costs[-1] = ue, ce
            else:
                simplex[-1], costs[-1] = ur, cr
            continue
        if cr < costs[-1]:
            uc = np.clip(centroid + CONTRACT * (ur - centroid), lo, hi)
            cc = cost(uc)
            if cc <= cr:
                simplex[-1], costs[-1] = uc, cc
                continue
        else:
            uc = np.clip(centroid + CONTRACT * (worst - centroid), lo, hi)
            cc = cost(uc)
            if cc < costs[-1]:
                simplex[-1], costs[-1] = uc, cc
                continue
        for i in range(1, dim + 1):
            us = simplex[0] + SHRINK * (simplex[i] - simplex[0])
            cs = cost(us)
            if not math.isinf(cs):
                simplex[i], costs[i] = us, cs
            if evals >= max_evals:
                break

    best = int(np.argmin(costs))
    if simplex[best] is u0:
        point = natural[0].copy()
    else:
        point = np.array([p.from_unit(v) for p, v in zip(free, simplex[best])])
    value = -costs[best]
    if not history or history[-1] != value:
        history.append(value)
    return OptimizationResult(point=point, value=value, evaluations=evals, history=history)


def maximize(problem: OptimizationProblem, points_per_axis: int = 21, workers: int = 1,
             max_evals: int = 2000) -> OptimizationResult:
    seed = grid_seed(problem, points_per_axis, workers)
    result = refine(problem, seed.point, max_evals=max_evals)
    result.evaluations += seed.evaluations
    result.history = seed.history + result.history
    return result
