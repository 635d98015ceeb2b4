"""Operators of a driven composite system and its vectorized Lindblad generator.

The composite device is a tensor product of Q subsystems (qubits, qudits,
cavities).  This module builds the Kronecker-lifted ladder operators, the
static Hamiltonian (detuning, self-Kerr, cross-Kerr, exchange coupling), the
decay/dephasing dissipator, and assembles the full generator M(t) acting on
vec(rho).

Conventions
-----------
* All frequencies are angular, in rad/ns; all times in ns.
* Subsystem 0 is the leftmost Kronecker factor.
* vec() stacks columns, so vec(A rho B) = (B^T kron A) vec(rho).  Collapse
  operators are restricted to real matrices (lowering and number operators),
  for which conj(L) kron L reduces to the familiar L kron L form.
* Nonpositive t_decay / t_dephase disables that channel.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.sparse as sp

__all__ = [
    "SubsystemSpec",
    "CouplingSpec",
    "SystemSpec",
    "LindbladOperators",
    "vec",
    "unvec",
    "trace_of_vec",
    "build_lowering",
    "build_number",
    "build_system_hamiltonian",
    "collapse_operators",
    "assemble_superoperator",
    "number_operator",
]

# Rotation frequencies closer than this are treated as equal, so the
# corresponding exchange term is time independent.
_ROT_EQUAL_TOL = 1e-14


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-major stacking of a matrix into a vector."""
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def unvec(q: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`vec` for an n x n matrix."""
    return np.asarray(q).reshape((n, n), order="F")


def trace_of_vec(q: np.ndarray, n: int) -> complex:
    """Trace of unvec(q) without forming the matrix."""
    return complex(np.sum(q[:: n + 1]))


@dataclass(frozen=True)
class SubsystemSpec:
    """One qubit/qudit/cavity of the composite device.

    Frequencies are angular (rad/ns); decoherence times in ns with
    nonpositive values meaning "channel disabled".
    """

    n_levels: int
    omega: float = 0.0
    xi_self: float = 0.0
    omega_rot: float = 0.0
    t_decay: float = 0.0
    t_dephase: float = 0.0

    def __post_init__(self):
        if self.n_levels < 1:
            raise ValueError(f"n_levels must be >= 1, got {self.n_levels}")


@dataclass(frozen=True)
class CouplingSpec:
    """Pairwise coupling: exchange (Jaynes-Cummings) and/or cross-Kerr."""

    pair: tuple[int, int]
    g_jc: float = 0.0
    xi_cross: float = 0.0

    def __post_init__(self):
        p, q = self.pair
        if not (0 <= p < q):
            raise ValueError(f"coupling pair must be ordered 0 <= p < q, got {self.pair}")


@dataclass(frozen=True)
class SystemSpec:
    """The full composite system: ordered subsystems plus their couplings."""

    subsystems: tuple[SubsystemSpec, ...]
    couplings: tuple[CouplingSpec, ...] = ()

    def __post_init__(self):
        if not self.subsystems:
            raise ValueError("at least one subsystem is required")
        seen = set()
        for c in self.couplings:
            if c.pair[1] >= len(self.subsystems):
                raise ValueError(f"coupling pair {c.pair} out of range for "
                                 f"{len(self.subsystems)} subsystems")
            if c.pair in seen:
                raise ValueError(f"duplicate coupling pair {c.pair}")
            seen.add(c.pair)

    @property
    def n_subsystems(self) -> int:
        return len(self.subsystems)

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(s.n_levels for s in self.subsystems)

    @property
    def dim(self) -> int:
        """Hilbert-space dimension N."""
        return int(np.prod(self.levels))

    @property
    def dim_vec(self) -> int:
        """Dimension N^2 of the vectorized state."""
        return self.dim ** 2


def _local_lowering(n: int) -> sp.csr_matrix:
    """Lowering operator on a single n-level subsystem: (k, k+1) entry sqrt(k+1)."""
    if n == 1:
        return sp.csr_matrix((1, 1), dtype=complex)
    data = np.sqrt(np.arange(1.0, n))
    return sp.diags(data, 1, shape=(n, n), dtype=complex).tocsr()


def _lift(spec: SystemSpec, q: int, local: sp.spmatrix) -> sp.csr_matrix:
    """Kronecker-embed a local operator at slot q: I x ... x local x ... x I."""
    factors = [sp.identity(n, dtype=complex, format="csr") for n in spec.levels]
    factors[q] = local.tocsr()
    return reduce(lambda a, b: sp.kron(a, b, format="csr"), factors)


def build_lowering(spec: SystemSpec, q: int) -> sp.csr_matrix:
    """Lowering operator a_q on the composite Hilbert space."""
    if not 0 <= q < spec.n_subsystems:
        raise IndexError(f"subsystem index {q} out of range")
    return _lift(spec, q, _local_lowering(spec.levels[q]))


def build_number(spec: SystemSpec, q: int) -> sp.csr_matrix:
    """Occupation operator a_q^dag a_q on the composite Hilbert space."""
    a = build_lowering(spec, q)
    return (a.conj().T @ a).tocsr()


def build_system_hamiltonian(spec: SystemSpec) -> sp.csr_matrix:
    """Static rotating-frame Hamiltonian.

    Sum over subsystems of detuning and self-Kerr terms, minus cross-Kerr
    couplings.  The exchange coupling g(a_p^dag a_q + a_p a_q^dag) is included
    only when all rotation frequencies coincide; otherwise it acquires
    time-dependent phase factors and is handled during assembly of M(t).
    """
    n = spec.dim
    h = sp.csr_matrix((n, n), dtype=complex)
    for q, sub in enumerate(spec.subsystems):
        num = build_number(spec, q)
        delta = sub.omega - sub.omega_rot
        if delta != 0.0:
            h = h + delta * num
        if sub.xi_self != 0.0:
            # a^dag a^dag a a = n(n-1) on the diagonal; vanishes on two levels
            h = h - 0.5 * sub.xi_self * (num @ num - num)
    rots = [s.omega_rot for s in spec.subsystems]
    all_equal = all(abs(r - rots[0]) <= _ROT_EQUAL_TOL for r in rots)
    for c in spec.couplings:
        j, k = c.pair
        if c.xi_cross != 0.0:
            h = h - c.xi_cross * (build_number(spec, j) @ build_number(spec, k))
        if c.g_jc != 0.0 and all_equal:
            a_j = build_lowering(spec, j)
            a_k = build_lowering(spec, k)
            ex = a_k.conj().T @ a_j
            h = h + c.g_jc * (ex + ex.conj().T)
    return h.tocsr()


def collapse_operators(spec: SystemSpec) -> list[sp.csr_matrix]:
    """Enabled collapse operators: a_q/sqrt(T1) and a_q^dag a_q/sqrt(T2)."""
    ops = []
    for q, sub in enumerate(spec.subsystems):
        if sub.t_decay > 0.0:
            ops.append((build_lowering(spec, q) / np.sqrt(sub.t_decay)).tocsr())
        if sub.t_dephase > 0.0:
            ops.append((build_number(spec, q) / np.sqrt(sub.t_dephase)).tocsr())
    return ops


def _hamiltonian_superop(h: sp.spmatrix, n: int) -> sp.csr_matrix:
    """-i (I kron H - H^T kron I): the commutator part of the generator."""
    eye = sp.identity(n, dtype=complex, format="csr")
    return (-1j * (sp.kron(eye, h, format="csr") - sp.kron(h.T, eye, format="csr"))).tocsr()


def _dissipator_superop(ls: list[sp.csr_matrix], n: int) -> sp.csr_matrix:
    """Vectorized dissipator for real collapse operators."""
    eye = sp.identity(n, dtype=complex, format="csr")
    d = sp.csr_matrix((n * n, n * n), dtype=complex)
    for L in ls:
        ldl = (L.conj().T @ L).tocsr()
        d = d + sp.kron(L.conj(), L, format="csr") \
            - 0.5 * (sp.kron(eye, ldl, format="csr") + sp.kron(ldl.T, eye, format="csr"))
    return d.tocsr()


class LindbladOperators:
    """Cached operator factory for one composite system.

    Splits the generator into a time-independent part (static Hamiltonian
    plus dissipator) and the pieces that are scaled by the per-subsystem
    drives d_q(t) or by exchange phase factors, so repeated assembly of
    M(t) along a trajectory is a sparse linear combination.
    """

    def __init__(self, spec: SystemSpec):
        self.spec = spec
        self.dim = spec.dim
        self.dim_vec = spec.dim_vec
        self.lowering = [build_lowering(spec, q) for q in range(spec.n_subsystems)]
        self.h_static = build_system_hamiltonian(spec)
        self._collapse = collapse_operators(spec)
        n = self.dim
        self.m_static = (_hamiltonian_superop(self.h_static, n)
                         + _dissipator_superop(self._collapse, n)).tocsr()
        # drive blocks: M(t) picks up d_q * S(a_q) + conj(d_q) * S(a_q^dag)
        self.drive_superops = [
            (_hamiltonian_superop(a, n), _hamiltonian_superop(a.conj().T, n))
            for a in self.lowering
        ]
        # exchange couplings with distinct rotation frequencies stay time dependent
        self._jc_dynamic = []
        rots = [s.omega_rot for s in spec.subsystems]
        for c in spec.couplings:
            j, k = c.pair
            delta = rots[k] - rots[j]
            if c.g_jc != 0.0 and abs(delta) > _ROT_EQUAL_TOL:
                ex = (self.lowering[k].conj().T @ self.lowering[j]).tocsr()
                self._jc_dynamic.append(
                    (delta, c.g_jc, ex, _hamiltonian_superop(ex, n),
                     _hamiltonian_superop(ex.conj().T, n)))

    @property
    def has_collapse(self) -> bool:
        return bool(self._collapse)

    def hamiltonian(self, drives: np.ndarray, t: float) -> sp.csr_matrix:
        """Full Hamiltonian H(t) for given rotating-frame drive amplitudes."""
        drives = np.asarray(drives)
        if drives.shape != (self.spec.n_subsystems,):
            raise ValueError(f"expected {self.spec.n_subsystems} drive amplitudes, "
                             f"got shape {drives.shape}")
        h = self.h_static.copy()
        for q, d in enumerate(drives):
            if d != 0.0:
                a = self.lowering[q]
                h = h + d * a + np.conj(d) * a.conj().T
        for delta, g, ex, _, _ in self._jc_dynamic:
            # a_k^dag a_j rotates as exp(+i (w_k^rot - w_j^rot) t)
            phase = np.exp(1j * delta * t)
            h = h + g * (phase * ex + np.conj(phase) * ex.conj().T)
        return h.tocsr()

    def m_of_t(self, drives: np.ndarray, t: float) -> sp.csr_matrix:
        """Generator M(t) of the vectorized master equation dq/dt = M(t) q."""
        drives = np.asarray(drives)
        if drives.shape != (self.spec.n_subsystems,):
            raise ValueError(f"expected {self.spec.n_subsystems} drive amplitudes, "
                             f"got shape {drives.shape}")
        m = self.m_static
        for q, d in enumerate(drives):
            if d != 0.0:
                s_a, s_adag = self.drive_superops[q]
                m = m + d * s_a + np.conj(d) * s_adag
        for delta, g, _, s_ex, s_exdag in self._jc_dynamic:
            phase = g * np.exp(1j * delta * t)
            m = m + phase * s_ex + np.conj(phase) * s_exdag
        return m.tocsr()


def assemble_superoperator(spec: SystemSpec, drives: np.ndarray, t: float) -> sp.csr_matrix:
    """One-shot assembly of M(t); use :class:`LindbladOperators` for repeated calls."""
    return LindbladOperators(spec).m_of_t(drives, t)


def number_operator(spec: SystemSpec | int, m: int) -> sp.csr_matrix:
    """Diagonal distance-to-level-m operator with entries |l - m|."""
    n = spec if isinstance(spec, int) else spec.dim
    if not 0 <= m < n:
        raise IndexError(f"target level {m} out of range for dimension {n}")
    return sp.diags(np.abs(np.arange(n) - m).astype(complex)).tocsr()
