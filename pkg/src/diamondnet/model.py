"""Diamond coupled-mode network: parameters, system matrix, scattering, metrics.

Basis ordering is the doubled space ``(a_1..a_N, a_1^dag..a_N^dag)``. Rates and
frequencies are angular (rad/s) throughout.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import linalg
from .errors import DegenerateTransmission, InvalidGraph, InvalidParams

TWO_PI = 2.0 * math.pi

CONVENTIONS = ("paper", "standard")
# "mirrored": creation block probed at -w, which is how the reported figures
# were evaluated; "uniform": i*w*I on both blocks, the literal printed formula.
PROBES = ("mirrored", "uniform")

# |S13|, |S31| (or pump-dressed equivalents) below this are treated as zero
DEGENERATE_ABS = 1e-30


def _finite(*values) -> bool:
    return all(cmath.isfinite(complex(v)) for v in values)


@dataclass(frozen=True)
class ModeSpec:
    resonance: float
    linewidth: float

    def __post_init__(self):
        if not _finite(self.resonance, self.linewidth):
            raise InvalidGraph("mode resonance and linewidth must be finite")
        if self.resonance <= 0:
            raise InvalidGraph(f"resonance must be positive, got {self.resonance}")
        if self.linewidth <= 0:
            raise InvalidGraph(f"linewidth must be positive, got {self.linewidth}")


@dataclass(frozen=True)
class CouplingGraph:
    """Modes plus beamsplitter (hopping) and two-mode-squeezing (parametric) edges.

    A hopping edge ``(m, n, c)`` stands for ``c a_m a_n^dag + c* a_n a_m^dag``;
    a parametric edge ``(m, n, r)`` for ``r (a_m a_n + a_m^dag a_n^dag)``.
    """

    modes: tuple
    hopping_edges: tuple = ()
    parametric_edges: tuple = ()

    def __post_init__(self):
        modes = tuple(self.modes)
        hop = tuple((int(m), int(n), complex(c)) for m, n, c in self.hopping_edges)
        par = tuple((int(m), int(n), float(r)) for m, n, r in self.parametric_edges)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "hopping_edges", hop)
        object.__setattr__(self, "parametric_edges", par)

        if len(modes) < 1:
            raise InvalidGraph("graph needs at least one mode")
        if not all(isinstance(m, ModeSpec) for m in modes):
            raise InvalidGraph("modes must be ModeSpec instances")
        for kind, edges in (("hopping", hop), ("parametric", par)):
            seen = set()
            for m, n, rate in edges:
                if not (0 <= m < len(modes) and 0 <= n < len(modes)):
                    raise InvalidGraph(f"{kind} edge ({m}, {n}) references a missing mode")
                if m == n:
                    raise InvalidGraph(f"{kind} edge ({m}, {n}) is a self-loop")
                if not _finite(rate):
                    raise InvalidGraph(f"{kind} edge ({m}, {n}) has a non-finite rate")
                key = frozenset((m, n))
                if key in seen:
                    raise InvalidGraph(f"duplicate {kind} edge between modes {m} and {n}")
                seen.add(key)

    @property
    def linewidths(self) -> tuple:
        return tuple(m.linewidth for m in self.modes)


@dataclass(frozen=True)
class DiamondParams:
    """Four-mode diamond: ports 1,3 at ``omega``, ports 2,4 at ``Omega``.

    ``g, h, f, k`` are the hopping rates on edges 1-2, 2-3, 3-4, 4-1 and
    ``gamma`` the parametric rate on both diagonals. Linewidths obey
    Gamma3 = Gamma1 and Gamma4 = Gamma2.
    """

    omega: float
    Omega: float
    g: complex
    h: complex
    f: complex
    k: complex
    gamma: float
    Gamma1: float
    Gamma2: float

    def __post_init__(self):
        for name in ("g", "h", "f", "k"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        for name in ("omega", "Omega", "gamma", "Gamma1", "Gamma2"):
            value = getattr(self, name)
            if isinstance(value, complex):
                if value.imag != 0:
                    raise InvalidParams(f"{name} must be real")
                value = value.real
            object.__setattr__(self, name, float(value))
        if not _finite(self.omega, self.Omega, self.g, self.h, self.f, self.k,
                       self.gamma, self.Gamma1, self.Gamma2):
            raise InvalidParams("all parameters must be finite")
        if self.omega <= 0 or self.Omega <= 0:
            raise InvalidParams("omega and Omega must be positive")
        if self.omega == self.Omega:
            raise InvalidParams("omega and Omega must differ for resonant pump drives")
        if self.Gamma1 <= 0 or self.Gamma2 <= 0:
            raise InvalidParams("linewidths Gamma1, Gamma2 must be positive")
        if self.gamma < 0:
            raise InvalidParams("parametric rate gamma must be non-negative")

    @classmethod
    def from_quality(cls, *, omega, Omega, g, h, f, k, gamma, Q1, Q2) -> "DiamondParams":
        if Q1 <= 0 or Q2 <= 0:
            raise InvalidParams("quality factors must be positive")
        return cls(omega=omega, Omega=Omega, g=g, h=h, f=f, k=k, gamma=gamma,
                   Gamma1=omega / Q1, Gamma2=Omega / Q2)

    @property
    def Q1(self) -> float:
        return self.omega / self.Gamma1

    @property
    def Q2(self) -> float:
        return self.Omega / self.Gamma2

    @property
    def linewidths(self) -> tuple:
        return (self.Gamma1, self.Gamma2, self.Gamma1, self.Gamma2)

    @property
    def theta(self) -> float:
        """Round-trip phase, the sum of the four hopping phases."""
        return sum(cmath.phase(c) for c in (self.g, self.h, self.f, self.k))

    def with_theta(self, theta: float) -> "DiamondParams":
        """Same magnitudes, each hopping phase set to ``theta / 4``."""
        u = cmath.exp(1j * theta / 4)
        return replace(self, g=abs(self.g) * u, h=abs(self.h) * u,
                       f=abs(self.f) * u, k=abs(self.k) * u)

    def with_quality(self, Q1: float | None = None, Q2: float | None = None) -> "DiamondParams":
        changes = {}
        if Q1 is not None:
            changes["Gamma1"] = self.omega / Q1
        if Q2 is not None:
            changes["Gamma2"] = self.Omega / Q2
        return replace(self, **changes)

    def replace(self, **changes) -> "DiamondParams":
        return replace(self, **changes)

    def to_graph(self) -> CouplingGraph:
        modes = (ModeSpec(self.omega, self.Gamma1), ModeSpec(self.Omega, self.Gamma2),
                 ModeSpec(self.omega, self.Gamma1), ModeSpec(self.Omega, self.Gamma2))
        hopping = ((0, 1, self.g), (1, 2, self.h), (2, 3, self.f), (3, 0, self.k))
        parametric = ((0, 2, self.gamma), (1, 3, self.gamma))
        return CouplingGraph(modes, hopping, parametric)


@dataclass(frozen=True)
class PumpConfig:
    """Auxiliary drives at ports 2 and 4, normalized to the port-1 input."""

    a2bar: complex = 0j
    a4bar: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "a2bar", complex(self.a2bar))
        object.__setattr__(self, "a4bar", complex(self.a4bar))
        if not _finite(self.a2bar, self.a4bar):
            raise InvalidParams("pump amplitudes must be finite")


@dataclass(frozen=True)
class ScatteringResult:
    w: float
    s: np.ndarray = field(repr=False)
    convention: str = "paper"
    probe: str = "mirrored"
    parametric: bool = True


def build_diamond_matrix(p: DiamondParams) -> np.ndarray:
    """8x8 system matrix of the diamond, written out entry by entry."""
    w1, w2 = p.omega, p.Omega
    G1, G2 = p.Gamma1, p.Gamma2
    g, h, f, k = p.g, p.h, p.f, p.k
    gc, hc, fc, kc = g.conjugate(), h.conjugate(), f.conjugate(), k.conjugate()
    y = p.gamma
    i = 1j
    m = np.array([
        [-i*w1 - G1/2, -i*gc, 0, -i*k, 0, 0, -i*y, 0],
        [-i*g, -i*w2 - G2/2, -i*hc, 0, 0, 0, 0, -i*y],
        [0, -i*h, -i*w1 - G1/2, -i*fc, -i*y, 0, 0, 0],
        [-i*kc, 0, -i*f, -i*w2 - G2/2, 0, -i*y, 0, 0],
        [0, 0, i*y, 0, i*w1 - G1/2, i*g, 0, i*kc],
        [0, 0, 0, i*y, i*gc, i*w2 - G2/2, i*h, 0],
        [i*y, 0, 0, 0, 0, i*hc, i*w1 - G1/2, i*f],
        [0, i*y, 0, 0, i*k, 0, i*fc, i*w2 - G2/2],
    ], dtype=complex)
    return m


def build_graph_matrix(graph: CouplingGraph) -> np.ndarray:
    """2N x 2N Langevin matrix of an arbitrary coupling graph."""
    if not isinstance(graph, CouplingGraph):
        raise InvalidGraph("expected a CouplingGraph")
    n = len(graph.modes)
    m = np.zeros((2 * n, 2 * n), dtype=complex)
    for j, mode in enumerate(graph.modes):
        m[j, j] = -1j * mode.resonance - mode.linewidth / 2
        m[j + n, j + n] = 1j * mode.resonance - mode.linewidth / 2
    for a, b, c in graph.hopping_edges:
        m[b, a] += -1j * c
        m[a, b] += -1j * c.conjugate()
        m[b + n, a + n] += 1j * c.conjugate()
        m[a + n, b + n] += 1j * c
    for a, b, r in graph.parametric_edges:
        m[a, b + n] += -1j * r
        m[b, a + n] += -1j * r
        m[a + n, b] += 1j * r
        m[b + n, a] += 1j * r
    return m


def _check_flags(convention: str, probe: str) -> None:
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}, got {convention!r}")
    if probe not in PROBES:
        raise ValueError(f"probe must be one of {PROBES}, got {probe!r}")


def probe_frequencies(n: int, w, probe: str = "mirrored") -> np.ndarray:
    """Per-component probe frequencies, shape ``w.shape + (n,)``."""
    w = np.asarray(w, dtype=float)
    half = n // 2
    sign = np.ones(n)
    if probe == "mirrored":
        sign[half:] = -1.0
    elif probe != "uniform":
        raise ValueError(f"probe must be one of {PROBES}, got {probe!r}")
    return w[..., None] * sign


def effective_matrix(m, w: float, probe: str = "mirrored") -> np.ndarray:
    """Matrix ``K`` with ``i*w*I + K`` equal to the probe-shifted system matrix.

    Integrating ``K`` in time under an ``exp(-i w t)`` drive reproduces the
    frequency-domain solution for either probe mode.
    """
    m = np.array(m, dtype=complex)
    n = m.shape[-1]
    shift = probe_frequencies(n, w, probe) - w
    return m + np.diag(1j * shift)


def s_matrices(m, linewidths: Sequence[float], w, convention: str = "paper",
               probe: str = "mirrored", *, check: bool = True):
    """Vectorized scattering matrices over a stack of probe frequencies.

    Returns ``(s, singular)`` where ``s`` has shape ``w.shape + (n, n)``.
    """
    _check_flags(convention, probe)
    m = linalg.as_matrix(m)
    n = m.shape[-1]
    if m.shape[-2] != n or n % 2:
        raise ValueError(f"system matrix must be square with even size, got {m.shape}")
    lw = np.asarray(linewidths, dtype=float)
    if lw.shape != (n // 2,):
        raise ValueError(f"expected {n // 2} linewidths, got {lw.shape}")
    if np.any(lw < 0):
        raise ValueError("linewidths must be non-negative")
    root = np.sqrt(np.concatenate([lw, lw]))
    w = np.asarray(w, dtype=float)
    a = m + 1j * probe_frequencies(n, w, probe)[..., None] * np.eye(n)
    lu, perm, singular = linalg.lu_factor(a, check=check)
    x = linalg.lu_solve(lu, perm, np.diag(root).astype(complex))
    sign = -1.0 if convention == "paper" else 1.0
    s = np.eye(n) + sign * root[:, None] * x
    return s, singular


def is_parametric(m) -> bool:
    m = np.asarray(m)
    half = m.shape[-1] // 2
    return bool(np.any(m[:half, half:] != 0) or np.any(m[half:, :half] != 0))


def scattering(m, linewidths: Sequence[float], w: float, convention: str = "paper",
               probe: str = "mirrored") -> ScatteringResult:
    """Scattering matrix at probe frequency ``w``.

    ``paper`` convention: ``S = I - sqrt(G) (iwI + M)^-1 sqrt(G)``;
    ``standard``: the same with a plus sign. Off-diagonal magnitudes agree.
    """
    s, _ = s_matrices(m, linewidths, float(w), convention, probe)
    return ScatteringResult(w=float(w), s=s, convention=convention, probe=probe,
                            parametric=is_parametric(m))


def diamond_scattering(p: DiamondParams, w: float, convention: str = "paper",
                       probe: str = "mirrored") -> ScatteringResult:
    return scattering(build_diamond_matrix(p), p.linewidths, w, convention, probe)


def _smat(s) -> np.ndarray:
    return s.s if isinstance(s, ScatteringResult) else np.asarray(s)


def transfer_amplitudes(s, pumps: PumpConfig | None = None):
    """Pump-dressed forward (3<-1) and backward (1<-3) transfer amplitudes.

    Works on a single S or on a stack ``(..., n, n)``.
    """
    s = _smat(s)
    a2, a4 = (0j, 0j) if pumps is None else (pumps.a2bar, pumps.a4bar)
    forward = s[..., 2, 0] + s[..., 2, 1] * a2 + s[..., 2, 3] * a4
    backward = s[..., 0, 2] + s[..., 0, 1] * a2 + s[..., 0, 3] * a4
    return forward, backward


def symmetric_ratio(forward, backward):
    """0.5 * (|F/B|^2 + |B/F|^2); vectorized, inf/nan where undefined."""
    pf = np.abs(forward) ** 2
    pb = np.abs(backward) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        r = pf / pb
        return 0.5 * (r + 1.0 / r)


def intrinsic_nonreciprocity(s) -> float:
    """Symmetrized transmission ratio between ports 1 and 3 (always >= 1)."""
    mat = _smat(s)
    s31, s13 = mat[2, 0], mat[0, 2]
    if abs(s31) < DEGENERATE_ABS or abs(s13) < DEGENERATE_ABS:
        raise DegenerateTransmission(f"|S31|={abs(s31):.3e}, |S13|={abs(s13):.3e}")
    return float(symmetric_ratio(s31, s13))


def extrinsic_W(s, pumps: PumpConfig) -> complex:
    forward, backward = transfer_amplitudes(s, pumps)
    if abs(backward) < DEGENERATE_ABS:
        raise DegenerateTransmission(f"pump-dressed S13 vanishes ({abs(backward):.3e})")
    return complex(forward / backward)


def extrinsic_nonreciprocity(s, pumps: PumpConfig) -> float:
    w = extrinsic_W(s, pumps)
    if abs(w) < DEGENERATE_ABS:
        raise DegenerateTransmission("pump-dressed S31 vanishes")
    return float(symmetric_ratio(w, 1.0))


def directional_gains(s, pumps: PumpConfig | None = None) -> tuple[float, float]:
    """Forward (1->3) and backward (3->1) power gains, both linear."""
    forward, backward = transfer_amplitudes(s, pumps)
    return float(abs(forward) ** 2), float(abs(backward) ** 2)


def contractivity_check(s: ScatteringResult) -> float | None:
    """Largest singular value of the port block of S, or ``None`` if skipped.

    Only meaningful for passive networks (no parametric coupling) in the
    standard sign convention; parametric results are skipped.
    """
    if s.convention != "standard":
        raise ValueError("contractivity check requires the standard sign convention")
    if s.parametric:
        return None
    half = s.s.shape[-1] // 2
    return float(np.linalg.norm(s.s[:half, :half], 2))


def to_db(x, scale: str = "power"):
    """Decibels of a power-ratio quantity.

    ``power`` gives 10*log10(x); ``amplitude`` gives 20*log10(x), the scale the
    published dB figures for this device turn out to use.
    """
    factor = {"power": 10.0, "amplitude": 20.0}[scale]
    with np.errstate(divide="ignore", invalid="ignore"):
        out = factor * np.log10(x)
    return float(out) if np.ndim(out) == 0 else out
