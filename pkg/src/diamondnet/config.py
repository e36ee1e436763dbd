"""JSON run configuration: parsing, validation, defaults, serialization.

Frequencies and rates are given in Hz (cycles per second) and converted to
rad/s when building model objects. Phases are in radians.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field

from .errors import InvalidParams, ParseError, ValidationError
from .model import CONVENTIONS, PROBES, TWO_PI, DiamondParams, PumpConfig
from .optimize import OBJECTIVES, FreeParameter, OptimizationProblem
from .sweep import FREQUENCY_PARAMETERS, METRICS, PARAMETERS, FixedProbe, SweepAxis, TrackMax

QUARTER_PI = math.pi / 4

# hopping, parametric and linewidth values used for the unoptimized device
DEFAULT_PARAMS = {
    "omega_hz": 1e9,
    "Omega_hz": 2e9,
    "g": {"mag_hz": 1e6, "phase": QUARTER_PI},
    "h": {"mag_hz": 1e6, "phase": QUARTER_PI},
    "f": {"mag_hz": 1e7, "phase": QUARTER_PI},
    "k": {"mag_hz": 1e6, "phase": QUARTER_PI},
    "gamma_hz": 3e5,
    "Q1": 2000.0,
    "Q2": 1000.0,
}


def _hz_name(name: str) -> str:
    return f"{name}_hz" if name in FREQUENCY_PARAMETERS else name


def _internal_name(name: str) -> str:
    return name[:-3] if name.endswith("_hz") and name[:-3] in FREQUENCY_PARAMETERS else name


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{where}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{where}: must be finite")
    return value


def _complex(value, where: str) -> complex:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(_number(value[0], where), _number(value[1], where))
    if isinstance(value, dict) and set(value) <= {"re", "im"}:
        return complex(_number(value.get("re", 0.0), where), _number(value.get("im", 0.0), where))
    return complex(_number(value, where), 0.0)


def _keys(section: dict, allowed: set, where: str) -> None:
    if not isinstance(section, dict):
        raise ValidationError(f"{where}: expected an object")
    extra = set(section) - allowed
    if extra:
        raise ValidationError(f"{where}: unknown field(s) {sorted(extra)}")


@dataclass
class EdgeSpec:
    mag_hz: float
    phase: float = 0.0


@dataclass
class ParamsSpec:
    omega_hz: float
    Omega_hz: float
    g: EdgeSpec
    h: EdgeSpec
    f: EdgeSpec
    k: EdgeSpec
    gamma_hz: float
    Q1: float | None = None
    Gamma1_hz: float | None = None
    Q2: float | None = None
    Gamma2_hz: float | None = None

    def to_params(self) -> DiamondParams:
        omega = TWO_PI * self.omega_hz
        Omega = TWO_PI * self.Omega_hz
        edges = {n: TWO_PI * e.mag_hz * complex(math.cos(e.phase), math.sin(e.phase))
                 for n, e in (("g", self.g), ("h", self.h), ("f", self.f), ("k", self.k))}
        G1 = omega / self.Q1 if self.Q1 is not None else TWO_PI * self.Gamma1_hz
        G2 = Omega / self.Q2 if self.Q2 is not None else TWO_PI * self.Gamma2_hz
        try:
            return DiamondParams(omega=omega, Omega=Omega, gamma=TWO_PI * self.gamma_hz,
                                 Gamma1=G1, Gamma2=G2, **edges)
        except InvalidParams as exc:
            raise ValidationError(f"params: {exc}") from exc


@dataclass
class AxisSpec:
    parameter: str  # config name, e.g. "detuning_hz", "theta", "Q1"
    start: float
    stop: float
    points: int = 1
    scale: str = "linear"

    def to_axis(self) -> SweepAxis:
        name = _internal_name(self.parameter)
        factor = TWO_PI if name in FREQUENCY_PARAMETERS else 1.0
        return SweepAxis(name, self.start * factor, self.stop * factor, self.points, self.scale)


@dataclass
class ProbeSpec:
    mode: str = "fixed"  # fixed | track
    detuning_hz: float = 0.0
    span_hz: float | None = None
    points: int = 201
    metric: str = "R"

    def to_policy(self):
        if self.mode == "fixed":
            return FixedProbe(TWO_PI * self.detuning_hz)
        return TrackMax(TWO_PI * self.span_hz, self.points, TWO_PI * self.detuning_hz, self.metric)


@dataclass
class SweepSpec:
    axes: list
    probe: ProbeSpec = field(default_factory=ProbeSpec)


@dataclass
class FreeSpec:
    parameter: str
    lower: float
    upper: float
    log: bool = False

    def to_free(self) -> FreeParameter:
        name = _internal_name(self.parameter)
        factor = TWO_PI if name in FREQUENCY_PARAMETERS else 1.0
        return FreeParameter(name, self.lower * factor, self.upper * factor, self.log)


@dataclass
class OptimizeSpec:
    objective: str
    free: list
    grid_points: int = 21
    probe: ProbeSpec = field(default_factory=ProbeSpec)
    max_evals: int = 2000


@dataclass
class RunConfig:
    params: ParamsSpec
    pumps: tuple = (0j, 0j)
    convention: str = "paper"
    probe: str = "mirrored"
    sweep: SweepSpec | None = None
    optimize: OptimizeSpec | None = None
    output_dir: str | None = None
    workers: int | None = None
    defaults: list = field(default_factory=list, compare=False)

    def diamond_params(self) -> DiamondParams:
        return self.params.to_params()

    def pump_config(self) -> PumpConfig:
        return PumpConfig(*self.pumps)

    def problem(self) -> OptimizationProblem:
        if self.optimize is None:
            raise ValidationError("config has no optimize section")
        opt = self.optimize
        policy = opt.probe.to_policy()
        window = policy if isinstance(policy, TrackMax) else None
        return OptimizationProblem(
            objective=opt.objective, free=tuple(f.to_free() for f in opt.free),
            base=self.diamond_params(), pumps=self.pump_config(),
            detuning=0.0 if window else policy.detuning,
            window=None if window is None else TrackMax(window.span, window.points, 0.0, "R"),
            convention=self.convention, probe=self.probe,
        )


def _parse_edge(raw, where: str) -> EdgeSpec:
    _keys(raw, {"mag_hz", "phase"}, where)
    if "mag_hz" not in raw:
        raise ValidationError(f"{where}: missing mag_hz")
    mag = _number(raw["mag_hz"], f"{where}.mag_hz")
    if mag < 0:
        raise ValidationError(f"{where}.mag_hz must be non-negative")
    return EdgeSpec(mag, _number(raw.get("phase", 0.0), f"{where}.phase"))


def _parse_params(raw, defaults: list) -> ParamsSpec:
    allowed = set(DEFAULT_PARAMS) | {"Gamma1_hz", "Gamma2_hz"}
    _keys(raw, allowed, "params")
    values = {}
    for name in ("omega_hz", "Omega_hz", "gamma_hz"):
        if name in raw:
            values[name] = _number(raw[name], f"params.{name}")
        else:
            values[name] = DEFAULT_PARAMS[name]
            defaults.append(f"params.{name}")
    for name in ("g", "h", "f", "k"):
        if name in raw:
            values[name] = _parse_edge(raw[name], f"params.{name}")
        else:
            values[name] = EdgeSpec(**DEFAULT_PARAMS[name])
            defaults.append(f"params.{name}")
    if values["omega_hz"] <= 0 or values["Omega_hz"] <= 0:
        raise ValidationError("params: frequencies must be positive")
    if values["gamma_hz"] < 0:
        raise ValidationError("params.gamma_hz must be non-negative")
    for q, gam in (("Q1", "Gamma1_hz"), ("Q2", "Gamma2_hz")):
        if q in raw and gam in raw:
            raise ValidationError(f"params: give exactly one of {q} and {gam}")
        if q in raw:
            values[q] = _number(raw[q], f"params.{q}")
            if values[q] <= 0:
                raise ValidationError(f"params.{q} must be positive")
        elif gam in raw:
            values[gam] = _number(raw[gam], f"params.{gam}")
            if values[gam] <= 0:
                raise ValidationError(f"params.{gam} must be positive")
        else:
            values[q] = DEFAULT_PARAMS[q]
            defaults.append(f"params.{q}")
    spec = ParamsSpec(**values)
    spec.to_params()
    return spec


def _parse_probe(raw, where: str) -> ProbeSpec:
    _keys(raw, {"mode", "detuning_hz", "span_hz", "points", "metric"}, where)
    mode = raw.get("mode", "fixed")
    if mode not in ("fixed", "track"):
        raise ValidationError(f"{where}.mode must be 'fixed' or 'track'")
    spec = ProbeSpec(mode=mode, detuning_hz=_number(raw.get("detuning_hz", 0.0), where))
    if mode == "track":
        if "span_hz" not in raw:
            raise ValidationError(f"{where}: tracking needs span_hz")
        spec.span_hz = _number(raw["span_hz"], f"{where}.span_hz")
        spec.points = int(_number(raw.get("points", 201), f"{where}.points"))
        spec.metric = raw.get("metric", "R")
        if spec.metric not in METRICS:
            raise ValidationError(f"{where}.metric must be one of {METRICS}")
    try:
        spec.to_policy()
    except ValueError as exc:
        raise ValidationError(f"{where}: {exc}") from exc
    return spec


def _parse_axis(raw, where: str) -> AxisSpec:
    _keys(raw, {"parameter", "start", "stop", "points", "scale"}, where)
    name = raw.get("parameter")
    if not isinstance(name, str) or _internal_name(name) not in PARAMETERS:
        raise ValidationError(f"{where}.parameter: unknown parameter {name!r}")
    if _internal_name(name) in FREQUENCY_PARAMETERS and not name.endswith("_hz"):
        raise ValidationError(f"{where}.parameter: frequency parameters are given in Hz ({name}_hz)")
    start = _number(raw.get("start"), f"{where}.start")
    spec = AxisSpec(name, start, _number(raw.get("stop", start), f"{where}.stop"),
                    int(_number(raw.get("points", 1), f"{where}.points")),
                    raw.get("scale", "linear"))
    try:
        spec.to_axis()
    except ValueError as exc:
        raise ValidationError(f"{where}: {exc}") from exc
    return spec


def _parse_free(raw, where: str) -> FreeSpec:
    _keys(raw, {"parameter", "lower", "upper", "log"}, where)
    name = raw.get("parameter")
    if not isinstance(name, str):
        raise ValidationError(f"{where}.parameter missing")
    spec = FreeSpec(name, _number(raw.get("lower"), f"{where}.lower"),
                    _number(raw.get("upper"), f"{where}.upper"), bool(raw.get("log", False)))
    try:
        spec.to_free()
    except ValueError as exc:
        raise ValidationError(f"{where}: {exc}") from exc
    return spec


def config_from_dict(raw: dict) -> RunConfig:
    _keys(raw, {"params", "pumps", "convention", "probe", "sweep", "optimize",
                "output_dir", "workers"}, "config")
    defaults: list = []
    params = _parse_params(raw.get("params", {}), defaults)

    pumps = raw.get("pumps", {})
    _keys(pumps, {"a2bar", "a4bar"}, "pumps")
    pump_values = (_complex(pumps.get("a2bar", 0.0), "pumps.a2bar"),
                   _complex(pumps.get("a4bar", 0.0), "pumps.a4bar"))

    convention = raw.get("convention", "paper")
    if convention not in CONVENTIONS:
        raise ValidationError(f"convention must be one of {CONVENTIONS}")
    probe = raw.get("probe", "mirrored")
    if probe not in PROBES:
        raise ValidationError(f"probe must be one of {PROBES}")
    for name, present in (("convention", "convention" in raw), ("probe", "probe" in raw)):
        if not present:
            defaults.append(name)

    sweep = None
    if raw.get("sweep") is not None:
        s = raw["sweep"]
        _keys(s, {"axes", "probe"}, "sweep")
        axes = s.get("axes")
        if not isinstance(axes, list) or not 1 <= len(axes) <= 2:
            raise ValidationError("sweep.axes must list one or two axes")
        sweep = SweepSpec([_parse_axis(a, f"sweep.axes[{i}]") for i, a in enumerate(axes)],
                          _parse_probe(s.get("probe", {}), "sweep.probe"))

    optimize = None
    if raw.get("optimize") is not None:
        o = raw["optimize"]
        _keys(o, {"objective", "free", "grid_points", "probe", "max_evals"}, "optimize")
        if o.get("objective") not in OBJECTIVES:
            raise ValidationError(f"optimize.objective must be one of {OBJECTIVES}")
        free = o.get("free")
        if not isinstance(free, list) or not free:
            raise ValidationError("optimize.free must list at least one parameter")
        optimize = OptimizeSpec(
            objective=o["objective"],
            free=[_parse_free(f, f"optimize.free[{i}]") for i, f in enumerate(free)],
            grid_points=int(_number(o.get("grid_points", 21), "optimize.grid_points")),
            probe=_parse_probe(o.get("probe", {}), "optimize.probe"),
            max_evals=int(_number(o.get("max_evals", 2000), "optimize.max_evals")),
        )
        if optimize.objective == "window_max_R" and optimize.probe.mode != "track":
            raise ValidationError("window_max_R needs optimize.probe.mode = 'track'")

    output_dir = raw.get("output_dir")
    if output_dir is not None:
        if not isinstance(output_dir, str):
            raise ValidationError("output_dir must be a string")
        parent = os.path.abspath(output_dir)
        while not os.path.exists(parent):
            parent = os.path.dirname(parent)
        if not os.path.isdir(parent) or not os.access(parent, os.W_OK):
            raise ValidationError(f"output_dir {output_dir!r} is not writable")

    workers = raw.get("workers")
    if workers is not None and (isinstance(workers, bool) or not isinstance(workers, int) or workers < 1):
        raise ValidationError("workers must be a positive integer")

    return RunConfig(params=params, pumps=pump_values, convention=convention, probe=probe,
                     sweep=sweep, optimize=optimize, output_dir=output_dir, workers=workers,
                     defaults=defaults)


def parse_config(text: str) -> RunConfig:
    if not text.strip():
        raise ParseError("empty configuration")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ParseError("top level must be a JSON object")
    return config_from_dict(raw)


def config_to_dict(config: RunConfig) -> dict:
    params = {k: v for k, v in asdict(config.params).items() if v is not None}
    out = {
        "params": params,
        "pumps": {"a2bar": [config.pumps[0].real, config.pumps[0].imag],
                  "a4bar": [config.pumps[1].real, config.pumps[1].imag]},
        "convention": config.convention,
        "probe": config.probe,
    }
    if config.sweep is not None:
        out["sweep"] = {"axes": [asdict(a) for a in config.sweep.axes],
                        "probe": _probe_dict(config.sweep.probe)}
    if config.optimize is not None:
        o = config.optimize
        out["optimize"] = {"objective": o.objective, "free": [asdict(f) for f in o.free],
                           "grid_points": o.grid_points, "probe": _probe_dict(o.probe),
                           "max_evals": o.max_evals}
    if config.output_dir is not None:
        out["output_dir"] = config.output_dir
    if config.workers is not None:
        out["workers"] = config.workers
    return out


def _probe_dict(p: ProbeSpec) -> dict:
    d = {"mode": p.mode, "detuning_hz": p.detuning_hz}
    if p.mode == "track":
        d.update(span_hz=p.span_hz, points=p.points, metric=p.metric)
    return d


def serialize_config(config: RunConfig) -> str:
    return json.dumps(config_to_dict(config), indent=2, sort_keys=True)
