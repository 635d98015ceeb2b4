"""Control-pulse parameterization: B-spline envelopes modulating carrier waves.

The rotating-frame drive on subsystem q is

    d_q(t) = sum_s S_s(t) sum_f alpha[q, s, f] * exp(i t W[q, f])

with piecewise-quadratic B-spline basis functions S_s on a uniform grid and
complex coefficients alpha.  The real optimization vector stores each
coefficient as a (re, im) pair in subsystem-major order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SplineGrid",
    "CarrierSpec",
    "ControlLayout",
    "ControlField",
    "quad_bspline",
    "eval_basis",
    "active_splines",
    "eval_control",
    "control_partials",
    "lab_frame_pulse",
]


@dataclass(frozen=True)
class SplineGrid:
    """Uniform grid of quadratic B-splines covering [0, duration].

    Knot spacing is duration/(n_splines - 2); centers sit at
    (s - 0.5) * spacing for s = 0..n_splines-1, so the first and last
    basis functions straddle the interval ends and the sum of all basis
    functions is exactly 1 on [0, duration].
    """

    duration: float
    n_splines: int

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.n_splines < 3:
            raise ValueError("at least 3 splines are required")

    @property
    def knot_spacing(self) -> float:
        return self.duration / (self.n_splines - 2)

    def center(self, s: int) -> float:
        return (s - 0.5) * self.knot_spacing


def quad_bspline(x: float) -> float:
    """Quadratic B-spline on [0, 3]: C^1, peak 3/4 at x = 1.5."""
    if x < 0.0 or x >= 3.0:
        return 0.0
    if x < 1.0:
        return 0.5 * x * x
    if x < 2.0:
        return 0.5 * (-2.0 * x * x + 6.0 * x - 3.0)
    return 0.5 * (3.0 - x) ** 2


def eval_basis(grid: SplineGrid, s: int, t: float) -> float:
    """Value of basis function s at time t."""
    if not 0 <= s < grid.n_splines:
        raise IndexError(f"spline index {s} out of range")
    dt = grid.knot_spacing
    return quad_bspline((t - grid.center(s)) / dt + 1.5)


def active_splines(grid: SplineGrid, t: float) -> np.ndarray:
    """Indices of the (at most 3) basis functions whose support contains t."""
    dt = grid.knot_spacing
    # support of spline s is ((s-2)*dt, (s+1)*dt): s in (t/dt - 1, t/dt + 2)
    first = int(np.floor(t / dt))
    cand = np.arange(first, first + 3)
    return cand[(cand >= 0) & (cand < grid.n_splines)]


@dataclass(frozen=True)
class CarrierSpec:
    """Carrier angular frequencies (rad/ns), one tuple per subsystem.

    The layout is rectangular: every subsystem carries the same number of
    frequencies.
    """

    frequencies: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        counts = {len(f) for f in self.frequencies}
        if len(counts) != 1:
            raise ValueError("every subsystem needs the same number of carriers")
        if 0 in counts:
            raise ValueError("at least one carrier frequency per subsystem")

    @property
    def n_subsystems(self) -> int:
        return len(self.frequencies)

    @property
    def n_carriers(self) -> int:
        return len(self.frequencies[0])


@dataclass(frozen=True)
class ControlLayout:
    """Fixed bijection between the real parameter vector and alpha[q, s, f].

    Ordering: subsystem-major, then spline, then carrier, then (re, im).
    """

    n_subsystems: int
    n_splines: int
    n_carriers: int

    @property
    def size(self) -> int:
        return 2 * self.n_subsystems * self.n_splines * self.n_carriers

    def index(self, q: int, s: int, f: int, part: int) -> int:
        """Flat index of Re (part=0) or Im (part=1) of alpha[q, s, f]."""
        return 2 * ((q * self.n_splines + s) * self.n_carriers + f) + part

    def coeffs(self, values: np.ndarray, q: int) -> np.ndarray:
        """Complex (n_splines, n_carriers) coefficient block for subsystem q."""
        values = np.asarray(values, dtype=float)
        if values.shape != (self.size,):
            raise ValueError(f"parameter vector has length {values.shape}, "
                             f"layout expects {self.size}")
        block = values.reshape(self.n_subsystems, self.n_splines, self.n_carriers, 2)
        return block[q, :, :, 0] + 1j * block[q, :, :, 1]


def _layout_for(carriers: CarrierSpec, grid: SplineGrid) -> ControlLayout:
    return ControlLayout(carriers.n_subsystems, grid.n_splines, carriers.n_carriers)


def eval_control(alpha: np.ndarray, carriers: CarrierSpec, grid: SplineGrid,
                 q: int, t: float) -> complex:
    """Rotating-frame drive d_q(t); linear in alpha."""
    layout = _layout_for(carriers, grid)
    coeffs = layout.coeffs(alpha, q)
    phases = np.exp(1j * t * np.asarray(carriers.frequencies[q]))
    total = 0.0 + 0.0j
    for s in active_splines(grid, t):
        total += eval_basis(grid, s, t) * (coeffs[s] @ phases)
    return total


def control_partials(carriers: CarrierSpec, grid: SplineGrid,
                     q: int, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Nonzero partial derivatives of d_q(t) with respect to the parameters.

    Returns flat indices into the real parameter vector and the matching
    complex values: d(d_q)/d(re alpha) = S_s(t) e^{i t W}, and i times that
    for the imaginary part.  Independent of alpha (the map is linear).
    """
    layout = _layout_for(carriers, grid)
    freqs = np.asarray(carriers.frequencies[q])
    idx: list[int] = []
    vals: list[complex] = []
    for s in active_splines(grid, t):
        b = eval_basis(grid, s, t)
        if b == 0.0:
            continue
        for f in range(layout.n_carriers):
            base = b * np.exp(1j * t * freqs[f])
            idx.append(layout.index(q, s, f, 0))
            vals.append(base)
            idx.append(layout.index(q, s, f, 1))
            vals.append(1j * base)
    return np.asarray(idx, dtype=int), np.asarray(vals, dtype=complex)


def lab_frame_pulse(alpha: np.ndarray, carriers: CarrierSpec, grid: SplineGrid,
                    q: int, t: float, omega_rot: float) -> float:
    """Physical pulse f_q(t) = 2 Re{d_q(t) exp(i t w_rot)}."""
    return 2.0 * np.real(eval_control(alpha, carriers, grid, q, t)
                         * np.exp(1j * t * omega_rot))


@dataclass(frozen=True)
class ControlField:
    """A parameter vector bound to its spline grid and carrier frequencies."""

    alpha: np.ndarray
    carriers: CarrierSpec
    grid: SplineGrid

    def __post_init__(self):
        expected = _layout_for(self.carriers, self.grid).size
        if np.asarray(self.alpha).shape != (expected,):
            raise ValueError(f"alpha must have length {expected}")

    @property
    def layout(self) -> ControlLayout:
        return _layout_for(self.carriers, self.grid)

    def drive(self, q: int, t: float) -> complex:
        return eval_control(self.alpha, self.carriers, self.grid, q, t)

    def drives(self, t: float) -> np.ndarray:
        return np.array([self.drive(q, t) for q in range(self.carriers.n_subsystems)])

    def partials(self, q: int, t: float) -> tuple[np.ndarray, np.ndarray]:
        return control_partials(self.carriers, self.grid, q, t)
