"""Piecewise-linear finite elements on the network, used as an independent reference.

Vertex degrees of freedom are shared by all incident edges, so continuity holds
by construction and the Kirchhoff law is the natural boundary condition of the
weak form.  Matrices are dense.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import EigSolverFailure, SingularStep
from .graph import MetricGraph

_GAUSS = np.array([-1.0, 1.0]) / np.sqrt(3.0)

CoefficientFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class Discretization:
    g: MetricGraph
    N: int
    dofs: np.ndarray  # (m, N+1) global index of every edge node
    K: np.ndarray
    M: np.ndarray

    @property
    def h(self) -> float:
        return 1.0 / self.N

    @property
    def size(self) -> int:
        return self.K.shape[0]

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.N + 1)

    def to_edges(self, u: np.ndarray) -> np.ndarray:
        """Nodal vector -> per-edge samples, shape ``(m, N+1)``."""
        return np.asarray(u)[self.dofs]

    def from_edges(self, values: np.ndarray) -> np.ndarray:
        """Per-edge samples -> nodal vector; vertex values are averaged over incident edges."""
        values = np.asarray(values, float)
        u = np.zeros(self.size)
        cnt = np.zeros(self.size)
        np.add.at(u, self.dofs, values)
        np.add.at(cnt, self.dofs, 1.0)
        return u / cnt

    def interpolate(self, fn: Callable[[int, np.ndarray], np.ndarray]) -> np.ndarray:
        """Nodal interpolant of ``fn(edge_index, x)``."""
        return self.from_edges(np.array([fn(j, self.x) for j in range(self.g.m)]))

    def form(self, u: np.ndarray, v: np.ndarray | None = None) -> float:
        v = u if v is None else v
        return float(u @ self.K @ v)

    def mass(self, u: np.ndarray) -> float:
        return float(np.sum(self.M @ u))

    def dump(self, path) -> None:
        """Write K and M in coordinate (MatrixMarket-like) text form."""
        with open(path, "w") as fh:
            for name, A in (("K", self.K), ("M", self.M)):
                rows, cols = np.nonzero(A)
                fh.write(f"%% {name} {A.shape[0]} {A.shape[1]} {rows.size}\n")
                for r, c in zip(rows, cols):
                    fh.write(f"{r + 1} {c + 1} {A[r, c]:.17g}\n")


def dof_map(g: MetricGraph, N: int) -> np.ndarray:
    dofs = np.empty((g.m, N + 1), dtype=int)
    interior = np.arange(N - 1)
    for j, e in enumerate(g.edges):
        dofs[j, 0] = e.tail
        dofs[j, N] = e.head
        dofs[j, 1:N] = g.n + j * (N - 1) + interior
    return dofs


def assemble(g: MetricGraph, h: float,
             coefficients: Sequence[CoefficientFn | None] | None = None) -> Discretization:
    """Stiffness and mass matrices for P1 elements of width ``h = 1/N``.

    ``coefficients`` optionally gives a variable diffusivity ``c_j(x)`` per
    edge (``None`` entries keep the constant ``c_j``); those element
    integrals use two-point Gauss quadrature.
    """
    N = int(round(1.0 / h))
    if N < 2 or abs(N * h - 1.0) > 1e-9:
        raise ValueError(f"h must be 1/N with N >= 2, got {h}")
    dofs = dof_map(g, N)
    size = g.m * (N - 1) + g.n
    K = np.zeros((size, size))
    M = np.zeros((size, size))
    hh = 1.0 / N
    left = np.arange(N) * hh

    for j in range(g.m):
        fn = None if coefficients is None else coefficients[j]
        if fn is None:
            ce = np.full(N, g.c[j])
        else:
            mid = left + hh / 2
            ce = 0.5 * sum(np.asarray(fn(mid + q * hh / 2), float) for q in _GAUSS)
        k = g.mu[j] * ce / hh
        mloc = g.mu[j] * hh / 6
        a, b = dofs[j, :-1], dofs[j, 1:]
        np.add.at(K, (a, a), k)
        np.add.at(K, (b, b), k)
        np.add.at(K, (a, b), -k)
        np.add.at(K, (b, a), -k)
        np.add.at(M, (a, a), 2 * mloc)
        np.add.at(M, (b, b), 2 * mloc)
        np.add.at(M, (a, b), mloc)
        np.add.at(M, (b, a), mloc)
    return Discretization(g, N, dofs, K, M)


@dataclass(frozen=True)
class OracleEig:
    lam: float
    cluster: int  # how many computed eigenvalues fall within the gap threshold


def oracle_eigs(d: Discretization, count: int, gap_rtol: float = 1e-6) -> list[OracleEig]:
    """Smallest ``count`` eigenvalues of ``K x = lam M x``, ascending, with cluster sizes.

    Cluster sizes are advisory multiplicities: consecutive values closer than
    ``gap_rtol * (1 + lam)`` share a cluster.
    """
    if count > d.size // 2:
        raise ValueError(f"count={count} exceeds half the system size {d.size}")
    try:
        lam = sla.eigh(d.K, d.M, eigvals_only=True, subset_by_index=[0, count])
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigSolverFailure(str(exc)) from exc
    # one extra value so the last cluster is not cut short
    sizes = np.ones(lam.size, dtype=int)
    start = 0
    for k in range(1, lam.size + 1):
        if k == lam.size or lam[k] - lam[k - 1] > gap_rtol * (1 + abs(lam[k])):
            sizes[start:k] = k - start
            start = k
    return [OracleEig(float(l), int(s)) for l, s in zip(lam[:count], sizes[:count])]


def oracle_values(d: Discretization, count: int) -> np.ndarray:
    return np.array([e.lam for e in oracle_eigs(d, count)])


def richardson(coarse: np.ndarray, fine: np.ndarray, order: float = 2.0) -> np.ndarray:
    """Extrapolate values computed at h and h/2 assuming error ~ h^order."""
    r = 2.0 ** order
    return (r * np.asarray(fine) - np.asarray(coarse)) / (r - 1)


def observed_order(e_coarse, e_fine, ratio: float = 2.0) -> np.ndarray:
    return np.log(np.abs(np.asarray(e_coarse)) / np.abs(np.asarray(e_fine))) / np.log(ratio)


def crank_nicolson(d: Discretization, u0: np.ndarray, dt: float, T: float,
                   stride: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoidal integration of ``M u' = -K u``.

    Returns ``(times, states)`` where ``states[k]`` is the nodal vector at
    ``times[k]``; every ``stride``-th step is kept plus the final one.
    """
    if not dt > 0 or T < 0:
        raise ValueError("need dt > 0 and T >= 0")
    steps = int(round(T / dt))
    lhs = d.M + 0.5 * dt * d.K
    rhs = d.M - 0.5 * dt * d.K
    try:
        factor = sla.cho_factor(lhs)
    except np.linalg.LinAlgError as exc:
        raise SingularStep(str(exc)) from exc
    u = np.asarray(u0, float).copy()
    times, states = [0.0], [u.copy()]
    for k in range(1, steps + 1):
        u = sla.cho_solve(factor, rhs @ u)
        if k % stride == 0 or k == steps:
            times.append(k * dt)
            states.append(u.copy())
    return np.array(times), np.array(states)
