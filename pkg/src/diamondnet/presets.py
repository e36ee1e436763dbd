"""Figure presets: configuration fragments plus the checks tied to each figure.

Everything here is data. Parameter overrides are merged onto the unoptimized
device values in :data:`diamondnet.config.DEFAULT_PARAMS`; axis and probe
entries use the config schema (Hz for frequencies).
"""
from __future__ import annotations

import copy
import math

from .config import DEFAULT_PARAMS, config_from_dict
from .errors import UnknownFigure

PI = math.pi

OPTIMIZED_INTRINSIC = {"Q1": 51.286, "Q2": 1e4, "gamma_hz": 1e7}
OPTIMAL_PUMPS = {"a2bar": 2.844, "a4bar": 0.4121}
AMPLIFIER_PUMPS = {"a2bar": 0.0, "a4bar": 100.0}

FIGURES = {
    "2": {
        "title": "R(omega) versus round-trip phase",
        "params": {},
        "sweep": {"axes": [{"parameter": "theta", "start": -2 * PI, "stop": 2 * PI, "points": 801}]},
        "checks": [
            {"name": "maxima_at_pi", "kind": "argmax_abs_near", "field": "R", "axis": 0,
             "target": PI, "tolerance_steps": 1},
            {"name": "even_in_theta", "kind": "mirror_symmetric", "field": "R", "tolerance": 1e-9},
        ],
    },
    "3": {
        "title": "Unoptimized R(w) around omega",
        "params": {},
        "sweep": {"axes": [{"parameter": "detuning_hz", "start": -5e6, "stop": 5e6, "points": 2001}]},
        "checks": [
            {"name": "peak_order_of_magnitude", "kind": "peak_within", "field": "R",
             "scale": "power", "lower": 1e-5, "upper": 2e-4},
        ],
    },
    "3a": {
        "title": "Unoptimized R(omega) versus parametric rate",
        "params": {},
        "sweep": {"axes": [{"parameter": "gamma_hz", "start": 1e4, "stop": 1e8, "points": 401,
                            "scale": "log"}]},
        "checks": [],
    },
    "4": {
        "title": "R(omega) over (Q1, gamma) with Q2 = 1e4",
        "params": {"Q2": 1e4},
        "sweep": {"axes": [{"parameter": "Q1", "start": 10.0, "stop": 1e4, "points": 61, "scale": "log"},
                           {"parameter": "gamma_hz", "start": 1e5, "stop": 1e8, "points": 61,
                            "scale": "log"}]},
        "checks": [
            {"name": "R_at_reported_optimum", "kind": "point_value", "field": "R",
             "point": {"Q1": 51.286, "gamma_hz": 1e7}, "target": 3.652, "rel_tolerance": 0.05},
            {"name": "grid_optimum_near_reported", "kind": "argmax_near_cell", "field": "R",
             "target": [51.286, 1e7], "tolerance_cells": 1},
        ],
    },
    "5": {
        "title": "Optimized R(w) around omega",
        "params": OPTIMIZED_INTRINSIC,
        "sweep": {"axes": [{"parameter": "detuning_hz", "start": -3e5, "stop": 3e5, "points": 601}]},
        "checks": [
            {"name": "R_at_omega", "kind": "point_value", "field": "R", "point": {"detuning_hz": 0.0},
             "target": 3.652, "rel_tolerance": 0.05},
            {"name": "peak_value", "kind": "peak_near", "field": "R", "scale": "amplitude",
             "target": 12.39, "tolerance": 0.5},
            {"name": "peak_detuning", "kind": "argmax_near", "field": "R", "axis": 0,
             "target": 53e3, "tolerance": 10e3},
        ],
    },
    "6": {
        "plot": ["forward_gain", "backward_gain"],
        "title": "Optimized intrinsic forward/backward gains",
        "params": OPTIMIZED_INTRINSIC,
        "sweep": {"axes": [{"parameter": "detuning_hz", "start": -3e5, "stop": 3e5, "points": 601}]},
        "checks": [
            {"name": "forward_below_unity", "kind": "max_below", "field": "forward_gain", "limit": 1.0},
            {"name": "backward_below_unity", "kind": "max_below", "field": "backward_gain", "limit": 1.0},
        ],
    },
    "7": {
        "title": "Extrinsic R(omega) over real pump amplitudes",
        "params": OPTIMIZED_INTRINSIC,
        "sweep": {"axes": [{"parameter": "a2bar_mag", "start": 0.0, "stop": 10.0, "points": 101},
                           {"parameter": "a4bar_mag", "start": 0.0, "stop": 10.0, "points": 101}]},
        "optimize": {"objective": "extrinsic_R",
                     "free": [{"parameter": "a2bar_mag", "lower": 0.0, "upper": 10.0},
                              {"parameter": "a4bar_mag", "lower": 0.0, "upper": 10.0}],
                     "grid_points": 41},
        "checks": [
            {"name": "optimal_pumps", "kind": "optimum_near", "target": [2.844, 0.4121],
             "rel_tolerance": 0.05},
        ],
    },
    "8": {
        "title": "Optimized extrinsic R(w)",
        "params": OPTIMIZED_INTRINSIC,
        "pumps": OPTIMAL_PUMPS,
        "sweep": {"axes": [{"parameter": "detuning_hz", "start": -3e5, "stop": 3e5, "points": 1201}]},
        "refine_peak": "R",
        "checks": [
            {"name": "peak_exceeds_130dB", "kind": "peak_at_least", "field": "R", "scale": "amplitude",
             "limit": 130.0},
        ],
    },
    "9": {
        "plot": ["forward_gain", "backward_gain"],
        "title": "Optimized extrinsic forward/backward gains",
        "params": OPTIMIZED_INTRINSIC,
        "pumps": OPTIMAL_PUMPS,
        "sweep": {"axes": [{"parameter": "detuning_hz", "start": -3e5, "stop": 3e5, "points": 601}]},
        "checks": [],
    },
    "10": {
        "plot": ["forward_gain", "backward_gain"],
        "title": "Directional amplifier gains, a4bar = 100",
        "params": OPTIMIZED_INTRINSIC,
        "pumps": AMPLIFIER_PUMPS,
        "sweep": {"axes": [{"parameter": "detuning_hz", "start": -1e6, "stop": 1e6, "points": 2001}]},
        "checks": [
            {"name": "forward_peak", "kind": "peak_near", "field": "forward_gain", "scale": "amplitude",
             "target": 20.0, "tolerance": 2.0},
            {"name": "backward_at_forward_peak", "kind": "value_at_peak", "field": "backward_gain",
             "peak_of": "forward_gain", "scale": "amplitude", "target": -20.0, "tolerance": 2.0},
            {"name": "isolation_at_forward_peak", "kind": "isolation_at_peak", "scale": "amplitude",
             "target": 40.0, "tolerance": 3.0},
            {"name": "forward_3dB_halfwidth", "kind": "halfwidth", "field": "forward_gain",
             "drop_db": 3.0, "target": 1e6, "rel_tolerance": 0.3},
        ],
    },
    "11": {
        "title": "Wide-band extrinsic R(w), a4bar = 100",
        "params": OPTIMIZED_INTRINSIC,
        "pumps": AMPLIFIER_PUMPS,
        "sweep": {"axes": [{"parameter": "detuning_hz", "start": -1e6, "stop": 1e6, "points": 2001}]},
        "checks": [
            {"name": "blue_side_floor", "kind": "min_over_side", "field": "R", "side": "blue",
             "scale": "amplitude", "limit": 30.0},
            {"name": "red_side_floor", "kind": "min_over_side", "field": "R", "side": "red",
             "scale": "amplitude", "limit": 32.6},
        ],
    },
}


def figure_ids() -> list:
    return list(FIGURES)


def figure_preset(figure_id: str) -> dict:
    try:
        return copy.deepcopy(FIGURES[str(figure_id)])
    except KeyError:
        raise UnknownFigure(f"unknown figure {figure_id!r}; known: {', '.join(FIGURES)}") from None


def figure_config_dict(figure_id: str) -> dict:
    """Config-schema dictionary for a figure preset."""
    preset = figure_preset(figure_id)
    params = copy.deepcopy(DEFAULT_PARAMS)
    params.update(preset.get("params", {}))
    raw = {"params": params, "convention": "paper", "probe": "mirrored",
           "sweep": preset["sweep"]}
    if "pumps" in preset:
        raw["pumps"] = preset["pumps"]
    if "optimize" in preset:
        raw["optimize"] = preset["optimize"]
    return raw


def figure_config(figure_id: str):
    return config_from_dict(figure_config_dict(figure_id))
