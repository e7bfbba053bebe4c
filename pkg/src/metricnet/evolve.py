"""Heat and wave propagation by eigenfunction expansion, plus semigroup diagnostics.

States are sampled on a shared uniform grid of ``[0, 1]`` on every edge and all
X2 integrals use composite Simpson weights on that grid.  Sup-norms are grid
maxima, i.e. lower bounds of the true supremum.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import BasisTooSmall, DegenerateSeries
from .graph import MetricGraph
from .spectral import SpectrumReport, spectrum

DEFAULT_GRID = 501
DEFAULT_LAMBDA_MAX = 400.0
DEFAULT_DEFECT_BOUND = 1e-3


def simpson_weights(npts: int) -> np.ndarray:
    if npts < 3 or npts % 2 == 0:
        raise ValueError(f"Simpson's rule needs an odd number of points >= 3, got {npts}")
    w = np.ones(npts)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / (3.0 * (npts - 1))


@dataclass(frozen=True, eq=False)
class EdgeState:
    """Samples ``values[j, i] = u_j(x_i)``; ``deriv`` holds exact x-derivatives when known."""

    g: MetricGraph
    values: np.ndarray
    deriv: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values, float)
        if v.ndim != 2 or v.shape[0] != self.g.m:
            raise ValueError(f"values must have shape (m={self.g.m}, npts), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("state has non-finite samples")
        simpson_weights(v.shape[1])
        object.__setattr__(self, "values", v)

    @property
    def npts(self) -> int:
        return self.values.shape[1]

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.npts)

    def _wrap(self, values, deriv) -> "EdgeState":
        return EdgeState(self.g, values, deriv)

    def __add__(self, other: "EdgeState") -> "EdgeState":
        d = None if self.deriv is None or other.deriv is None else self.deriv + other.deriv
        return self._wrap(self.values + other.values, d)

    def __sub__(self, other: "EdgeState") -> "EdgeState":
        d = None if self.deriv is None or other.deriv is None else self.deriv - other.deriv
        return self._wrap(self.values - other.values, d)

    def __mul__(self, s: float) -> "EdgeState":
        return self._wrap(s * self.values, None if self.deriv is None else s * self.deriv)

    __rmul__ = __mul__


def state_from_function(g: MetricGraph, fn: Callable[[int, np.ndarray], np.ndarray],
                        npts: int = DEFAULT_GRID) -> EdgeState:
    x = np.linspace(0.0, 1.0, npts)
    return EdgeState(g, np.array([np.broadcast_to(fn(j, x), x.shape) for j in range(g.m)], float))


def constant_state(g: MetricGraph, value: float = 1.0, npts: int = DEFAULT_GRID) -> EdgeState:
    return EdgeState(g, np.full((g.m, npts), float(value)), np.zeros((g.m, npts)))


def bump_state(g: MetricGraph, edge: int = 0, npts: int = DEFAULT_GRID,
               width: float = 1.0, height: float = 1.0) -> EdgeState:
    """Smooth nonnegative bump centred on one edge, zero at both of its ends."""
    def fn(j, x):
        if j != edge:
            return np.zeros_like(x)
        z = (x - 0.5) / width
        return np.where(np.abs(z) < 0.5, height * np.cos(np.pi * z) ** 2, 0.0)
    return state_from_function(g, fn, npts)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def inner(f: EdgeState, h: EdgeState) -> float:
    w = simpson_weights(f.npts)
    return float(np.sum(f.g.mu[:, None] * f.values * h.values * w[None, :]))


def x2_norm(f: EdgeState) -> float:
    return math.sqrt(max(inner(f, f), 0.0))


def xp_norm(f: EdgeState, p: float) -> float:
    """``X_p`` norm; diagnostic only, evolution always happens in X2."""
    if math.isinf(p):
        return sup_norm(f)
    w = simpson_weights(f.npts)
    return float(np.sum(f.g.mu[:, None] * np.abs(f.values) ** p * w[None, :]) ** (1.0 / p))


def sup_norm(f: EdgeState) -> float:
    return float(np.max(np.abs(f.values)))


def mass(f: EdgeState) -> float:
    """Weighted mass ``sum_j mu_j int_0^1 f_j dx``."""
    w = simpson_weights(f.npts)
    return float(np.sum(f.g.mu[:, None] * f.values * w[None, :]))


def equilibrium_projection(g: MetricGraph, f: EdgeState) -> EdgeState:
    """Projection onto constants: the weighted mean of ``f``."""
    return constant_state(g, mass(f) / float(np.sum(g.mu)), f.npts)


def energy(g: MetricGraph, u: EdgeState, v: EdgeState) -> float:
    """Wave energy ``a(u, u) + |v|^2`` with ``a(u,u) = sum_j mu_j c_j int |u_j'|^2``.

    Uses ``u.deriv`` when available, second-order finite differences otherwise.
    """
    if u.deriv is not None:
        du = u.deriv
    else:
        du = np.gradient(u.values, 1.0 / (u.npts - 1), axis=1, edge_order=2)
    w = simpson_weights(u.npts)
    pot = float(np.sum((g.mu * g.c)[:, None] * du ** 2 * w[None, :]))
    return pot + inner(v, v)


# ---------------------------------------------------------------------------
# eigenbasis
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EigenBasis:
    """Sampled eigenfunctions, orthonormal in the discrete X2 inner product.

    The analytic eigenfunctions are orthonormal in X2; sampling them leaves a
    quadrature-sized Gram defect (``gram_defect``), which is removed by a
    Cholesky re-orthonormalization that keeps the constant mode first.
    Conservation laws of the expansion then hold to rounding error.
    """

    g: MetricGraph
    lams: np.ndarray
    values: np.ndarray  # (K, m, npts)
    derivs: np.ndarray  # (K, m, npts)
    lambda_max: float
    gram_defect: float

    @property
    def npts(self) -> int:
        return self.values.shape[2]

    @property
    def size(self) -> int:
        return self.lams.size

    @classmethod
    def from_report(cls, g: MetricGraph, report: SpectrumReport,
                    npts: int = DEFAULT_GRID) -> "EigenBasis":
        x = np.linspace(0.0, 1.0, npts)
        funcs = report.eigenfunctions()
        lams = np.array([f.lam for f in funcs])
        vals = np.array([f(x) for f in funcs])
        ders = np.array([f.derivative(x) for f in funcs])
        w = simpson_weights(npts)
        flat = (vals * np.sqrt(g.mu)[None, :, None] * np.sqrt(w)[None, None, :]).reshape(len(funcs), -1)
        G = flat @ flat.T
        defect = float(np.max(np.abs(G - np.eye(len(funcs)))))
        if defect > 1e-2:
            raise BasisTooSmall(f"grid of {npts} points cannot resolve modes up to "
                                f"lambda={report.lambda_max:g} (Gram defect {defect:.2e})")
        Linv = np.linalg.inv(np.linalg.cholesky(G))
        vals = np.einsum("kl,l...->k...", Linv, vals)
        ders = np.einsum("kl,l...->k...", Linv, ders)
        return cls(g, lams, vals, ders, float(report.lambda_max), defect)

    def gram(self) -> np.ndarray:
        w = simpson_weights(self.npts)
        flat = (self.values * np.sqrt(self.g.mu)[None, :, None]
                * np.sqrt(w)[None, None, :]).reshape(self.size, -1)
        return flat @ flat.T

    def project(self, f: EdgeState) -> np.ndarray:
        if f.npts != self.npts:
            raise ValueError(f"state has {f.npts} grid points, basis has {self.npts}")
        w = simpson_weights(self.npts)
        return np.einsum("kjx,jx->k", self.values, self.g.mu[:, None] * f.values * w[None, :])

    def synthesize(self, coeffs: np.ndarray) -> EdgeState:
        coeffs = np.asarray(coeffs, float)
        return EdgeState(self.g, np.tensordot(coeffs, self.values, 1),
                         np.tensordot(coeffs, self.derivs, 1))

    def completeness_defect(self, f: EdgeState) -> float:
        nf = x2_norm(f)
        if nf == 0:
            return 0.0
        return x2_norm(f - self.synthesize(self.project(f))) / nf

    def mode(self, k: int) -> EdgeState:
        e = np.zeros(self.size)
        e[k] = 1.0
        return self.synthesize(e)

    def random_state(self, rng: np.random.Generator, n_modes: int = 12,
                     nonnegative: bool = False, margin: float = 1e-3) -> EdgeState:
        """Random combination of the ``n_modes`` lowest modes (exactly in the basis span).

        With ``nonnegative=True`` the state is shifted so its grid minimum equals
        ``margin`` times its oscillation, which keeps the true minimum positive
        for smooth low modes.
        """
        n_modes = min(n_modes, self.size)
        c = np.zeros(self.size)
        c[:n_modes] = rng.standard_normal(n_modes) / (1.0 + np.sqrt(self.lams[:n_modes]))
        f = self.synthesize(c)
        if nonnegative:
            lo, hi = f.values.min(), f.values.max()
            shift = -lo + margin * (hi - lo)
            c[0] += shift * math.sqrt(float(np.sum(self.g.mu)))
            f = self.synthesize(c)
        return f


def build_basis(g: MetricGraph, lambda_max: float = DEFAULT_LAMBDA_MAX,
                npts: int = DEFAULT_GRID, method: str = "auto") -> EigenBasis:
    return EigenBasis.from_report(g, spectrum(g, lambda_max, method), npts)


# ---------------------------------------------------------------------------
# propagators
# ---------------------------------------------------------------------------

def _checked_coeffs(basis: EigenBasis, f: EdgeState, bound: float, damping: float) -> np.ndarray:
    c = basis.project(f)
    defect = basis.completeness_defect(f)
    # modes above lambda_max are damped by at least exp(-lambda_max t)
    if defect * damping > bound:
        raise BasisTooSmall(f"completeness defect {defect:.3e} (damped {defect * damping:.3e}) "
                            f"exceeds {bound:g}; raise lambda_max")
    return c


def heat_evolve(basis: EigenBasis, f: EdgeState, t: float,
                defect_bound: float = DEFAULT_DEFECT_BOUND) -> EdgeState:
    """``u(t) = sum_k exp(-lam_k t) (f, phi_k) phi_k``.

    The completeness check is applied to the part of ``f`` outside the basis
    after damping by ``exp(-lambda_max t)``, which bounds its true contribution.
    """
    if t < 0:
        raise ValueError("heat evolution needs t >= 0")
    return heat_series(basis, f, [t], defect_bound)[0][1]


def heat_series(basis: EigenBasis, f: EdgeState, times: Iterable[float],
                defect_bound: float = DEFAULT_DEFECT_BOUND) -> list[tuple[float, EdgeState]]:
    times = [float(t) for t in times]
    if any(t < 0 for t in times):
        raise ValueError("heat evolution needs t >= 0")
    damp = math.exp(-basis.lambda_max * min(times)) if times else 1.0
    _checked_coeffs(basis, f, defect_bound, damp)
    # the mean is carried exactly; only the mean-free part goes through the modes
    P = equilibrium_projection(basis.g, f)
    c = basis.project(f - P)
    c[basis.lams == 0] = 0.0
    return [(t, basis.synthesize(np.exp(-basis.lams * t) * c) + P) for t in times]


def wave_evolve(basis: EigenBasis, f: EdgeState, g0: EdgeState, t: float,
                defect_bound: float = DEFAULT_DEFECT_BOUND) -> tuple[EdgeState, EdgeState]:
    """Cosine/sine propagator: returns ``(u(t), u'(t))`` for any real ``t``."""
    cf = _checked_coeffs(basis, f, defect_bound, 1.0)
    cg = _checked_coeffs(basis, g0, defect_bound, 1.0)
    om = np.sqrt(basis.lams)
    cos = np.cos(om * t)
    sin = np.sin(om * t)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(om > 0, sin / np.where(om > 0, om, 1.0), t)
    u = cos * cf + s * cg
    v = -om * sin * cf + cos * cg
    return basis.synthesize(u), basis.synthesize(v)


# ---------------------------------------------------------------------------
# semigroup checks
# ---------------------------------------------------------------------------

@dataclass
class PositivityReport:
    positivity_checked: bool
    min_value: float
    initial_sup: float
    max_sup: float
    violations: list[tuple[float, str, float]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_positivity(series: Sequence[tuple[float, EdgeState]], tol: float = 1e-10) -> PositivityReport:
    """Positivity (for nonnegative initial data) and sup-norm contraction along a series."""
    _, u0 = series[0]
    nonneg = bool(u0.values.min() >= -tol)
    sup0 = sup_norm(u0)
    rep = PositivityReport(nonneg, float(u0.values.min()), sup0, sup0)
    for t, u in series:
        lo, sup = float(u.values.min()), sup_norm(u)
        rep.min_value = min(rep.min_value, lo)
        rep.max_sup = max(rep.max_sup, sup)
        if nonneg and lo < -tol:
            rep.violations.append((t, "negative", lo))
        if sup > sup0 + tol * max(1.0, sup0):
            rep.violations.append((t, "sup-growth", sup - sup0))
    return rep


def ultracontractivity_ratio(basis: EigenBasis, f: EdgeState, t: float,
                             defect_bound: float = DEFAULT_DEFECT_BOUND) -> float:
    """``t^(1/4) |T(t) f|_inf / |f|_2``; bounded on ``(0, 1]`` for an ultracontractive semigroup."""
    if not 0 < t <= 1:
        raise ValueError("t must lie in (0, 1]")
    u = heat_evolve(basis, f, t, defect_bound)
    return t ** 0.25 * sup_norm(u) / x2_norm(f)


def decay_rate_fit(series: Sequence[tuple[float, EdgeState]], projected: EdgeState,
                   tail: float = 0.5) -> float:
    """Least-squares slope of ``log |u(t) - Pf|`` against ``t``.

    Only the last ``tail`` fraction of the usable snapshots enters the fit, so
    fast transients do not bias the slope.  The slope is negative; for generic
    data it approaches the largest nonzero generator eigenvalue.
    """
    ts, logs = [], []
    for t, u in series:
        r = x2_norm(u - projected)
        if r > 1e-12:
            ts.append(t)
            logs.append(math.log(r))
    if len(ts) < 10:
        raise DegenerateSeries(f"only {len(ts)} snapshots above 1e-12; need at least 10")
    k = max(int(math.ceil(len(ts) * (1 - tail))), 0)
    k = min(k, len(ts) - 10)
    slope, _ = np.polyfit(ts[k:], logs[k:], 1)
    return float(slope)


def snapshots_csv(series: Sequence[tuple[float, EdgeState]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "edge", "x", "value"])
    for t, u in series:
        x = u.x
        for j, e in enumerate(u.g.edges):
            for xi, val in zip(x, u.values[j]):
                w.writerow([f"{t:.15g}", e.id, f"{xi:.15g}", f"{val:.15g}"])
    return buf.getvalue()
