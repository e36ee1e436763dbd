"""Time-domain oracle: RK4 integration of the driven Langevin amplitudes.

The classical amplitudes obey ``da/dt = M a - sqrt(G) a_in(t)``. Drives are
monochromatic, ``A exp(-i w t)`` on a port mode plus the conjugate on its
creation-block partner, so one RK4 step is an affine map of the state. We
carry the drive phasors ``exp(-i nu t)`` as extra state components, which
makes the step exactly linear, and reach late times by binary powers of that
step. The iterate is the fixed-step RK4 trajectory; only the bookkeeping is
shortened.
"""
from __future__ import annotations

import math
from collections import namedtuple

import numpy as np

from .errors import UnstableIntegration

Drive = namedtuple("Drive", ["port", "amplitude", "frequency"])

STEP_BOUND = 0.1
BLOWUP = 1e12
MIN_SETTLE = 20.0  # settling time in units of 1 / min(linewidth)


def row_sum_bound(m) -> float:
    return float(np.max(np.sum(np.abs(m), axis=1)))


def rk4_step(m, a, forcing, t: float, dt: float) -> np.ndarray:
    """One classical RK4 step of ``da/dt = m a + forcing(t)``."""
    k1 = m @ a + forcing(t)
    k2 = m @ (a + 0.5 * dt * k1) + forcing(t + 0.5 * dt)
    k3 = m @ (a + 0.5 * dt * k2) + forcing(t + 0.5 * dt)
    k4 = m @ (a + dt * k3) + forcing(t + dt)
    return a + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rk4_increment(m, a, f0, fh, f1, dt):
    k1 = m @ a + f0
    k2 = m @ (a + 0.5 * dt * k1) + fh
    k3 = m @ (a + 0.5 * dt * k2) + fh
    k4 = m @ (a + dt * k3) + f1
    return dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _drive_terms(n: int, inputs) -> list:
    """Group drives into ``(u, nu)`` pairs with ``a_in(t) = sum u exp(-i nu t)``."""
    half = n // 2
    terms: dict = {}
    for port, amplitude, freq in inputs:
        if not 0 <= port < half:
            raise ValueError(f"drive port {port} outside 0..{half - 1}")
        amplitude = complex(amplitude)
        for nu, idx, amp in ((float(freq), port, amplitude),
                             (-float(freq), port + half, amplitude.conjugate())):
            u = terms.setdefault(nu, np.zeros(n, dtype=complex))
            u[idx] += amp
    return sorted(terms.items())


def _check_inputs(m, linewidths):
    m = np.asarray(m, dtype=complex)
    n = m.shape[0]
    if m.shape != (n, n) or n % 2:
        raise ValueError(f"system matrix must be square with even size, got {m.shape}")
    lw = np.asarray(linewidths, dtype=float)
    if lw.shape != (n // 2,):
        raise ValueError(f"expected {n // 2} linewidths")
    return m, np.sqrt(np.concatenate([lw, lw]))


def step_delta(m, linewidths, inputs, dt: float):
    """Augmented one-step map ``x -> x + D x`` with ``x = (a, phasors)``."""
    m, root = _check_inputs(m, linewidths)
    n = m.shape[0]
    terms = _drive_terms(n, inputs)
    size = n + len(terms)
    d = np.zeros((size, size), dtype=complex)
    zero = np.zeros((n, n), dtype=complex)
    d[:n, :n] = _rk4_increment(m, np.eye(n, dtype=complex), zero, zero, zero, dt)
    za = np.zeros(n, dtype=complex)
    for j, (nu, u) in enumerate(terms):
        f = -root * u
        d[:n, n + j] = _rk4_increment(m, za, f, f * np.exp(-0.5j * nu * dt),
                                      f * np.exp(-1j * nu * dt), dt)
        d[n + j, n + j] = np.expm1(-1j * nu * dt)
    return d, [nu for nu, _ in terms]


def _delta_power(d: np.ndarray, steps: int) -> np.ndarray:
    """``(I + d)**steps - I`` computed on the small increments."""
    result = np.zeros_like(d)
    base = d.copy()
    # overflow in a diverging run is detected afterwards by _check_blowup
    with np.errstate(over="ignore", invalid="ignore"):
        while steps:
            if steps & 1:
                result = result + base + result @ base
            base = 2.0 * base + base @ base
            steps >>= 1
    return result


def _check_step(m, dt: float) -> None:
    if dt <= 0:
        raise ValueError("dt must be positive")
    if dt * row_sum_bound(m) >= STEP_BOUND:
        raise ValueError(
            f"dt={dt:.3e} too large: dt * max row sum = {dt * row_sum_bound(m):.3f} "
            f"(must stay below {STEP_BOUND})"
        )


def _check_blowup(x) -> None:
    if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > BLOWUP:
        raise UnstableIntegration("state magnitude exceeded 1e12; the operating point is unstable")


def integrate(m, linewidths, inputs=(), t_end: float = 0.0, dt: float = 1e-12,
              initial=None, method: str = "jump") -> np.ndarray:
    """State vector after integrating from ``t = 0`` to ``t_end``.

    ``t_end`` is rounded to a whole number of steps. ``method="step"`` runs the
    plain RK4 loop (use for short runs); ``"jump"`` composes the same steps in
    O(log N) matrix products.
    """
    m, root = _check_inputs(m, linewidths)
    _check_step(m, dt)
    n = m.shape[0]
    steps = int(round(t_end / dt))
    a0 = np.zeros(n, dtype=complex) if initial is None else np.array(initial, dtype=complex)
    if a0.shape != (n,):
        raise ValueError(f"initial state must have length {n}")

    if method == "step":
        terms = _drive_terms(n, inputs)

        def forcing(t):
            out = np.zeros(n, dtype=complex)
            for nu, u in terms:
                out -= root * u * np.exp(-1j * nu * t)
            return out

        a = a0
        for j in range(steps):
            a = rk4_step(m, a, forcing, j * dt, dt)
            if j % 1024 == 0:
                _check_blowup(a)
        _check_blowup(a)
        return a
    if method != "jump":
        raise ValueError("method must be 'jump' or 'step'")

    d, nus = step_delta(m, linewidths, inputs, dt)
    x0 = np.concatenate([a0, np.ones(len(nus), dtype=complex)])
    x = x0 + _delta_power(d, steps) @ x0
    _check_blowup(x[:n])
    return x[:n]


def _common_frequency(inputs) -> float:
    freqs = {abs(float(f)) for _, _, f in inputs}
    if len(freqs) != 1:
        raise ValueError("demodulation needs every drive at one common frequency")
    w = freqs.pop()
    if w <= 0:
        raise ValueError("drive frequency must be positive")
    return w


def steady_state(m, linewidths, inputs, t_end: float | None = None,
                 steps_per_period: int = 4096) -> np.ndarray:
    """Complex amplitude of the ``exp(-i w t)`` component of the settled state.

    The step is one ``steps_per_period``-th of the drive period, the run lasts
    a whole number of periods, and the state times ``exp(+i w t)`` is averaged
    over the final period, which cancels the conjugate-drive component.
    """
    m, _ = _check_inputs(m, linewidths)
    w = _common_frequency(inputs)
    period = 2 * math.pi / w
    dt = period / steps_per_period
    _check_step(m, dt)
    settle = MIN_SETTLE / min(linewidths)
    if t_end is None:
        t_end = 3 * settle
    elif t_end < settle:
        raise ValueError(f"t_end={t_end:.3e} s is shorter than 20 / min(linewidth) = {settle:.3e} s")
    steps = math.ceil(t_end / period) * steps_per_period

    n = m.shape[0]
    d, nus = step_delta(m, linewidths, inputs, dt)
    x0 = np.concatenate([np.zeros(n, dtype=complex), np.ones(len(nus), dtype=complex)])
    x = x0 + _delta_power(d, steps) @ x0
    _check_blowup(x[:n])
    acc = np.zeros(n, dtype=complex)
    for j in range(steps_per_period):
        acc += x[:n] * np.exp(1j * w * (steps + j) * dt)
        x = x + d @ x
    _check_blowup(x[:n])
    return acc / steps_per_period


def steady_state_output(state, inputs, linewidths) -> np.ndarray:
    """Port outputs ``a_in + sqrt(G) a`` as ``exp(-i w t)`` amplitudes."""
    state = np.asarray(state, dtype=complex)
    n = state.shape[0]
    lw = np.asarray(linewidths, dtype=float)
    root = np.sqrt(np.concatenate([lw, lw]))
    a_in = np.zeros(n, dtype=complex)
    for port, amplitude, _ in inputs:
        a_in[port] += complex(amplitude)
    return a_in + root * state


def probe_response(m, linewidths, port: int, w: float, amplitude: complex = 1.0,
                   **kwargs) -> np.ndarray:
    """Steady output vector for a single drive; compare with column ``port`` of S."""
    inputs = [Drive(port, amplitude, w)]
    state = steady_state(m, linewidths, inputs, **kwargs)
    return steady_state_output(state, inputs, linewidths)
