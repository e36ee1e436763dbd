"""Result serialization and figure reproduction.

Sweep output is a CSV with a fixed header: grid coordinates (Hz for frequency
parameters, radians for phases, plain numbers otherwise), an optional
``probe_detuning_hz`` column for tracking probes, then ``R_linear``, ``R_dB``,
``fwd_gain_dB``, ``bwd_gain_dB`` and ``flags``. dB columns are 10*log10 of the
power-ratio quantities. Floats are written with 17 significant digits.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os

import numpy as np

from .config import RunConfig, _hz_name, _internal_name, config_from_dict
from .model import TWO_PI, to_db
from .optimize import OptimizationProblem, grid_seed, refine
from .presets import figure_config_dict, figure_preset
from .sweep import (
    FREQUENCY_PARAMETERS,
    FixedProbe,
    SweepResult,
    TrackMax,
    apply_parameter,
    evaluate_point,
    refine_peak,
    run_sweep_parallel,
)

FIELDS = ("R", "forward_gain", "backward_gain")
DB_COLUMNS = ("R_dB", "fwd_gain_dB", "bwd_gain_dB")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def to_output_units(name: str, value: float) -> float:
    return value / TWO_PI if name in FREQUENCY_PARAMETERS else value


def column_names(result: SweepResult, tracking: bool) -> list:
    cols = [_hz_name(ax.parameter) for ax in result.axes]
    if tracking:
        cols.append("probe_detuning_hz")
    return cols + ["R_linear", *DB_COLUMNS, "flags"]


def sweep_csv(result: SweepResult, tracking: bool = False) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(column_names(result, tracking))
    names = [ax.parameter for ax in result.axes]
    for rec in result.records:
        row = [fmt(to_output_units(n, c)) for n, c in zip(names, rec.coords)]
        if tracking:
            row.append(fmt(rec.detuning / TWO_PI))
        row += [fmt(rec.R), fmt(to_db(rec.R)), fmt(to_db(rec.forward_gain)),
                fmt(to_db(rec.backward_gain)), ";".join(rec.flags)]
        writer.writerow(row)
    return buf.getvalue()


def _clean(x: float):
    """JSON-safe float: non-finite values become strings."""
    x = float(x)
    return x if math.isfinite(x) else str(x)


def _location(result: SweepResult, rec) -> dict:
    loc = {_hz_name(ax.parameter): to_output_units(ax.parameter, c)
           for ax, c in zip(result.axes, rec.coords)}
    loc["probe_detuning_hz"] = rec.detuning / TWO_PI
    return {k: _clean(v) for k, v in loc.items()}


def _extremum(result: SweepResult, name: str, pick) -> dict | None:
    vals = np.array([getattr(r, name) for r in result.records], dtype=float)
    if np.all(np.isnan(vals)):
        return None
    rec = result.records[int(pick(vals))]
    v = getattr(rec, name)
    return {"value_linear": _clean(v), "value_dB": _clean(to_db(v)),
            "value_dB_amplitude": _clean(to_db(v, "amplitude")),
            "location": _location(result, rec)}


def sweep_summary(result: SweepResult) -> dict:
    """Argmax and argmin of every metric, in linear and dB form."""
    out = {}
    for name in FIELDS:
        out[name] = {"max": _extremum(result, name, np.nanargmax),
                     "min": _extremum(result, name, np.nanargmin)}
    out["flagged_points"] = sum(1 for r in result.records if r.flags)
    out["points"] = len(result.records)
    return out


def run_config_sweep(config: RunConfig, workers: int | None = None) -> SweepResult:
    if config.sweep is None:
        raise ValueError("config has no sweep section")
    return run_sweep_parallel(
        config.diamond_params(), config.pump_config(),
        [a.to_axis() for a in config.sweep.axes], config.sweep.probe.to_policy(),
        config.convention, config.probe, workers=workers,
    )


def run_config_optimize(config: RunConfig, workers: int | None = None):
    problem = config.problem()
    seed = grid_seed(problem, config.optimize.grid_points, workers or 1)
    result = refine(problem, seed.point, max_evals=config.optimize.max_evals)
    result.evaluations += seed.evaluations
    result.history = seed.history + result.history
    return problem, seed, result


def optimization_summary(problem: OptimizationProblem, seed, result) -> dict:
    def point(x):
        return {_hz_name(p.name): to_output_units(p.name, v) for p, v in zip(problem.free, x)}

    value = result.value
    return {
        "objective": problem.objective,
        "seed": {"point": point(seed.point), "value": _clean(seed.value)},
        "optimum": {"point": point(result.point), "value_linear": _clean(value),
                    "value_dB": _clean(to_db(value)) if problem.objective != "isolation" else _clean(value)},
        "evaluations": result.evaluations,
        "history": [_clean(v) for v in result.history],
    }


def write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def write_json(path: str, data: dict) -> None:
    write_text(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


# --- figure checks ---------------------------------------------------------

def _natural_coords(result: SweepResult) -> np.ndarray:
    """Record coordinates in output units, shape (points, axes)."""
    names = [ax.parameter for ax in result.axes]
    return np.array([[to_output_units(n, c) for n, c in zip(names, r.coords)]
                     for r in result.records])


def _values(result: SweepResult, name: str) -> np.ndarray:
    return np.array([getattr(r, name) for r in result.records], dtype=float)


def _scaled(x, scale: str | None):
    return x if scale in (None, "linear") else to_db(x, scale)


def _point_record(config: RunConfig, point: dict):
    params, pumps = config.diamond_params(), config.pump_config()
    detuning = 0.0
    for key, value in point.items():
        name = _internal_name(key)
        factor = TWO_PI if name in FREQUENCY_PARAMETERS else 1.0
        if name == "detuning":
            detuning = value * factor
        else:
            params, pumps = apply_parameter(params, pumps, name, value * factor)
    return evaluate_point(params, pumps, FixedProbe(detuning), config.convention, config.probe)


def evaluate_check(check: dict, result: SweepResult, config: RunConfig, extra: dict) -> dict:
    """Measure one preset check; returns the check with ``measured`` and ``passed``."""
    kind = check["kind"]
    out = dict(check)
    coords = _natural_coords(result)
    scale = check.get("scale")

    if kind == "argmax_abs_near":
        vals, x = _values(result, check["field"]), coords[:, check["axis"]]
        step = abs(x[1] - x[0])
        pos = x[int(np.nanargmax(np.where(x > 0, vals, np.nan)))]
        neg = x[int(np.nanargmax(np.where(x < 0, vals, np.nan)))]
        tol = check["tolerance_steps"] * step * (1 + 1e-9)
        out["measured"] = [float(neg), float(pos)]
        out["passed"] = abs(pos - check["target"]) <= tol and abs(neg + check["target"]) <= tol
    elif kind == "mirror_symmetric":
        vals = _values(result, check["field"])
        dev = float(np.nanmax(np.abs(vals - vals[::-1])))
        out["measured"] = dev
        out["passed"] = dev <= check["tolerance"]
    elif kind in ("peak_within", "peak_near", "peak_at_least"):
        peak = float(np.nanmax(_values(result, check["field"])))
        refined = extra.get("refined_peak", {}).get(check["field"])
        if refined is not None:
            peak = max(peak, refined)
        m = float(_scaled(peak, scale))
        out["measured"] = m
        if kind == "peak_within":
            out["passed"] = check["lower"] <= m <= check["upper"]
        elif kind == "peak_near":
            out["passed"] = abs(m - check["target"]) <= check["tolerance"]
        else:
            out["passed"] = m >= check["limit"]
    elif kind == "point_value":
        rec = _point_record(config, check["point"])
        v = getattr(rec, check["field"])
        out["measured"] = v
        out["passed"] = abs(v - check["target"]) <= check["rel_tolerance"] * abs(check["target"])
    elif kind == "argmax_near":
        i = int(np.nanargmax(_values(result, check["field"])))
        x = float(coords[i, check["axis"]])
        out["measured"] = x
        out["passed"] = abs(x - check["target"]) <= check["tolerance"]
    elif kind == "argmax_near_cell":
        i = int(np.nanargmax(_values(result, check["field"])))
        ok, measured = True, []
        for j, ax in enumerate(result.axes):
            vals = np.unique(coords[:, j])
            x, target = coords[i, j], check["target"][j]
            if ax.scale == "log":
                cell = math.log(vals[1] / vals[0])
                dist = abs(math.log(x / target))
            else:
                cell, dist = vals[1] - vals[0], abs(x - target)
            measured.append(float(x))
            ok &= dist <= check["tolerance_cells"] * cell * (1 + 1e-9)
        out["measured"] = measured
        out["passed"] = bool(ok)
    elif kind == "max_below":
        m = float(np.nanmax(_values(result, check["field"])))
        out["measured"] = m
        out["passed"] = m < check["limit"]
    elif kind in ("value_at_peak", "isolation_at_peak"):
        fwd, bwd = _values(result, "forward_gain"), _values(result, "backward_gain")
        i = int(np.nanargmax(_values(result, check.get("peak_of", "forward_gain"))))
        if kind == "value_at_peak":
            m = float(_scaled(_values(result, check["field"])[i], scale))
        else:
            m = float(to_db(fwd[i], scale) - to_db(bwd[i], scale))
        out["measured"] = m
        out["passed"] = abs(m - check["target"]) <= check["tolerance"]
    elif kind == "halfwidth":
        vals = to_db(_values(result, check["field"]), scale or "power")
        x = coords[:, 0]
        i = int(np.nanargmax(vals))
        floor = vals[i] - check["drop_db"]
        lo = i
        while lo > 0 and vals[lo - 1] >= floor:
            lo -= 1
        hi = i
        while hi < len(vals) - 1 and vals[hi + 1] >= floor:
            hi += 1
        half = float((x[hi] - x[lo]) / 2)
        out["measured"] = half
        out["window_hz"] = [float(x[lo]), float(x[hi])]
        out["clipped_by_span"] = lo == 0 or hi == len(vals) - 1
        out["passed"] = abs(half - check["target"]) <= check["rel_tolerance"] * check["target"]
    elif kind == "min_over_side":
        vals, x = _values(result, check["field"]), coords[:, 0]
        side = x > 0 if check["side"] == "blue" else x < 0
        m = float(_scaled(np.nanmin(vals[side]), scale))
        out["measured"] = m
        out["passed"] = m >= check["limit"]
    elif kind == "optimum_near":
        point = extra["optimum"]
        out["measured"] = [float(v) for v in point]
        out["passed"] = all(abs(v - t) <= check["rel_tolerance"] * abs(t)
                            for v, t in zip(point, check["target"]))
    else:
        raise ValueError(f"unknown check kind {kind!r}")
    out["passed"] = bool(out["passed"])
    return out


def reproduce(figure_id: str, workers: int | None = None) -> dict:
    """Run a figure preset; returns ``{"config", "result", "csv", "summary"}``."""
    preset = figure_preset(figure_id)
    config = config_from_dict(figure_config_dict(figure_id))
    result = run_config_sweep(config, workers)
    tracking = config.sweep.probe.mode == "track"
    summary = {"figure": str(figure_id), "title": preset["title"],
               "convention": config.convention, "probe": config.probe,
               "peaks": sweep_summary(result)}
    extra: dict = {}

    if preset.get("refine_peak"):
        metric = preset["refine_peak"]
        best = result.best(metric)
        x = np.array([r.detuning for r in result.records])
        step = abs(x[1] - x[0])
        rec = refine_peak(config.diamond_params(), config.pump_config(),
                          best.detuning - step, best.detuning + step, metric,
                          config.convention, config.probe)
        value = max(getattr(rec, metric), getattr(best, metric))
        extra["refined_peak"] = {metric: value}
        summary["refined_peak"] = {"metric": metric, "value_linear": _clean(value),
                                   "value_dB": _clean(to_db(value)),
                                   "value_dB_amplitude": _clean(to_db(value, "amplitude")),
                                   "detuning_hz": rec.detuning / TWO_PI}

    if config.optimize is not None:
        problem, seed, opt = run_config_optimize(config, workers)
        summary["optimization"] = optimization_summary(problem, seed, opt)
        extra["optimum"] = [to_output_units(p.name, v) for p, v in zip(problem.free, opt.point)]

    checks = [evaluate_check(c, result, config, extra) for c in preset["checks"]]
    summary["checks"] = checks
    summary["passed"] = all(c["passed"] for c in checks)
    return {"config": config, "result": result, "csv": sweep_csv(result, tracking),
            "summary": summary}


def write_outputs(out_dir: str, stem: str, csv_text: str, summary: dict) -> tuple:
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    json_path = os.path.join(out_dir, f"{stem}_summary.json")
    write_text(csv_path, csv_text)
    write_json(json_path, summary)
    return csv_path, json_path
