"""Time integration of the vectorized master equation.

The implicit midpoint rule advances q(t) on a uniform grid,

    (I - dt/2 M(t_mid)) z = q_j,      q_{j+1} = q_j + dt M(t_mid) z,

with each stage system solved by full (non-restarted) GMRES.  The scheme is
second order and, for skew-Hermitian M, preserves the 2-norm of q, which
keeps long trajectories free of artificial dissipation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .controls import ControlField
from .model import LindbladOperators, SystemSpec

__all__ = [
    "TimeGrid",
    "SolverConfig",
    "Trajectory",
    "GmresError",
    "StepFailure",
    "gmres_solve",
    "imr_step",
    "forward_solve",
]


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time discretization of [0, duration] into n_steps steps."""

    duration: float
    n_steps: int

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")

    @property
    def dt(self) -> float:
        return self.duration / self.n_steps

    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.duration, self.n_steps + 1)

    def midpoint(self, j: int) -> float:
        return (j + 0.5) * self.dt


@dataclass(frozen=True)
class SolverConfig:
    """Linear-solver settings for the stage systems."""

    gmres_tol: float = 1e-12
    gmres_max_iter: int = 200
    store_stages: bool = True

    def __post_init__(self):
        if self.gmres_tol <= 0:
            raise ValueError("gmres_tol must be positive")


@dataclass
class Trajectory:
    """States q^0..q^{N_T} of a forward solve, plus optional stage vectors."""

    states: np.ndarray            # (n_steps + 1, dim) complex
    grid: TimeGrid
    stages: np.ndarray | None = None   # (n_steps, dim) when stored


class GmresError(RuntimeError):
    """GMRES exhausted its iteration budget."""

    def __init__(self, residual: float, iterations: int):
        super().__init__(f"GMRES did not converge: relative residual {residual:.3e} "
                         f"after {iterations} iterations")
        self.residual = residual
        self.iterations = iterations


class StepFailure(RuntimeError):
    """A stage solve failed during time stepping."""

    def __init__(self, step: int, cause: GmresError):
        super().__init__(f"stage solve failed at step {step}: {cause}")
        self.step = step
        self.cause = cause


def gmres_solve(a, b: np.ndarray, tol: float = 1e-12, max_iter: int = 200,
                x0: np.ndarray | None = None) -> np.ndarray:
    """Full GMRES with modified Gram-Schmidt and Givens rotations.

    `a` may be anything supporting `a @ v`, or a callable v -> A v.  Returns x
    with ||Ax - b|| <= tol * ||b||; raises :class:`GmresError` when the
    iteration cap is hit first.
    """
    matvec: Callable[[np.ndarray], np.ndarray]
    matvec = a if callable(a) else (lambda v: a @ v)
    b = np.asarray(b, dtype=complex)
    n = b.shape[0]
    norm_b = np.linalg.norm(b)
    if norm_b == 0.0:
        return np.zeros(n, dtype=complex)

    x0 = np.zeros(n, dtype=complex) if x0 is None else np.asarray(x0, dtype=complex)
    r0 = b - matvec(x0)
    beta = np.linalg.norm(r0)
    if beta <= tol * norm_b:
        return x0.copy()

    max_iter = min(max_iter, n)
    basis = np.empty((max_iter + 1, n), dtype=complex)
    basis[0] = r0 / beta
    hess = np.zeros((max_iter + 1, max_iter), dtype=complex)
    cs = np.zeros(max_iter, dtype=complex)
    sn = np.zeros(max_iter, dtype=complex)
    g = np.zeros(max_iter + 1, dtype=complex)
    g[0] = beta

    k_used = 0
    residual = beta / norm_b
    for k in range(max_iter):
        w = matvec(basis[k])
        for i in range(k + 1):               # modified Gram-Schmidt
            hess[i, k] = np.vdot(basis[i], w)
            w = w - hess[i, k] * basis[i]
        hess[k + 1, k] = np.linalg.norm(w)

        for i in range(k):                   # apply accumulated rotations
            hi = np.conj(cs[i]) * hess[i, k] + np.conj(sn[i]) * hess[i + 1, k]
            hess[i + 1, k] = -sn[i] * hess[i, k] + cs[i] * hess[i + 1, k]
            hess[i, k] = hi
        denom = np.hypot(abs(hess[k, k]), abs(hess[k + 1, k]))
        if denom == 0.0:
            cs[k], sn[k] = 1.0, 0.0
        else:
            cs[k] = abs(hess[k, k]) / denom if hess[k, k] != 0 else 0.0
            if hess[k, k] != 0:
                phase = hess[k, k] / abs(hess[k, k])
                cs[k] = abs(hess[k, k]) / denom
                sn[k] = phase * np.conj(hess[k + 1, k]) / denom
            else:
                cs[k] = 0.0
                sn[k] = np.conj(hess[k + 1, k]) / abs(hess[k + 1, k])
        hess[k, k] = np.conj(cs[k]) * hess[k, k] + np.conj(sn[k]) * hess[k + 1, k]
        hess[k + 1, k] = 0.0
        g[k + 1] = -sn[k] * g[k]
        g[k] = np.conj(cs[k]) * g[k]

        k_used = k + 1
        residual = abs(g[k + 1]) / norm_b
        if residual <= tol:
            break
        if hess[k + 1, k] == 0.0 and abs(hess[k, k]) == 0.0:
            break  # breakdown: subspace exhausted
        if k + 1 < max_iter:
            basis[k + 1] = w / np.linalg.norm(w) if np.linalg.norm(w) > 0 else w

    if residual > tol:
        raise GmresError(residual, k_used)

    y = np.zeros(k_used, dtype=complex)
    for i in range(k_used - 1, -1, -1):
        y[i] = (g[i] - hess[i, i + 1:k_used] @ y[i + 1:k_used]) / hess[i, i]
    return x0 + y @ basis[:k_used]


def imr_step(q: np.ndarray, m_mid, dt: float,
             cfg: SolverConfig) -> tuple[np.ndarray, np.ndarray]:
    """One implicit-midpoint step with generator evaluated at the midpoint.

    Returns (q_next, stage).
    """
    half = 0.5 * dt
    matvec = lambda v: v - half * (m_mid @ v)
    z = gmres_solve(matvec, q, tol=cfg.gmres_tol, max_iter=cfg.gmres_max_iter, x0=q)
    return q + dt * (m_mid @ z), z


def forward_solve(system: LindbladOperators | SystemSpec, field: ControlField,
                  grid: TimeGrid, q0: np.ndarray, cfg: SolverConfig | None = None,
                  midpoint_ops: Sequence | None = None) -> Trajectory:
    """Integrate dq/dt = M(t) q from q0 over the grid.

    `midpoint_ops`, when given, supplies the pre-assembled generators at the
    step midpoints (one per step); otherwise they are assembled on the fly
    from the control field.
    """
    ops = system if isinstance(system, LindbladOperators) else LindbladOperators(system)
    cfg = cfg or SolverConfig()
    q0 = np.asarray(q0, dtype=complex)
    if q0.shape != (ops.dim_vec,):
        raise ValueError(f"initial state has shape {q0.shape}, expected ({ops.dim_vec},)")

    states = np.empty((grid.n_steps + 1, ops.dim_vec), dtype=complex)
    states[0] = q0
    stages = np.empty((grid.n_steps, ops.dim_vec), dtype=complex) if cfg.store_stages else None

    q = q0
    for j in range(grid.n_steps):
        if midpoint_ops is not None:
            m_mid = midpoint_ops[j]
        else:
            t_mid = grid.midpoint(j)
            m_mid = ops.m_of_t(field.drives(t_mid), t_mid)
        try:
            q, z = imr_step(q, m_mid, grid.dt, cfg)
        except GmresError as err:
            raise StepFailure(j, err) from err
        states[j + 1] = q
        if stages is not None:
            stages[j] = z
    return Trajectory(states=states, grid=grid, stages=stages)
