"""Spectrum of the network Laplacian with continuity and Kirchhoff conditions.

Eigenvalues are reported as nonnegative numbers ``lam``; the generator's
eigenvalue is ``-lam``.  On edge ``j`` an eigenfunction reads

    f_j(x) = a_j cos(omega_j x) + b_j sin(omega_j x),   omega_j = sqrt(lam / c_j),

and ``f_j(x) = a_j + b_j x`` for ``lam = 0``.

Three routes produce eigenpairs:

* the secular equation ``det L_C(lam) = 0`` off the singular set
  ``{c_j l^2 pi^2}`` (class ``SigmaL``),
* a direct linear system on vertex values ``d`` and sine coefficients ``b``
  at singular points ``c_i k^2 pi^2`` (class ``SigmaC``),
* for unit speeds, closed forms through the transition matrix.

All matrices below are scaled by ``1/sqrt(lam)`` relative to the raw Kirchhoff
balance, so edge ``j`` enters with weight ``mu_j sqrt(c_j)``.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import KernelMismatch, NotUnitSpeed, ScanResolutionTooCoarse, SingularLambda
from .graph import MetricGraph, adjacency, bipartition, incidence

PI = math.pi


@dataclass(frozen=True)
class ScanOptions:
    """Numerical tolerances of the spectral routines.

    window: half-width, in ``sqrt(lam / c_j)`` units, of the excluded
        neighbourhood of each singular point.
    tol: absolute bisection tolerance on ``lam``.
    kernel_rtol: singular values below ``kernel_rtol * s_max`` count as zero.
    merge_rtol: roots closer than ``merge_rtol * (1 + lam)`` are one eigenvalue.
    jobs: worker threads for the interval scan; output does not depend on it.
    """

    window: float = 1e-6
    tol: float = 1e-12
    kernel_rtol: float = 1e-8
    merge_rtol: float = 1e-9
    jobs: int = 1


DEFAULT_OPTIONS = ScanOptions()


class EigenClass(str, enum.Enum):
    ZERO = "Zero"
    SIGMA_L = "SigmaL"
    SIGMA_C = "SigmaC"


# ---------------------------------------------------------------------------
# eigenfunctions
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EigenFunction:
    lam: float
    a: np.ndarray
    b: np.ndarray
    omega: np.ndarray
    d: np.ndarray | None = None

    @property
    def coeffs(self) -> np.ndarray:
        return np.concatenate([self.a, self.b])

    def __call__(self, x) -> np.ndarray:
        """Values on every edge, shape ``(m, len(x))``."""
        x = np.atleast_1d(np.asarray(x, float))
        if self.lam == 0:
            return self.a[:, None] + self.b[:, None] * x[None, :]
        wx = self.omega[:, None] * x[None, :]
        return self.a[:, None] * np.cos(wx) + self.b[:, None] * np.sin(wx)

    def derivative(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, float))
        if self.lam == 0:
            return np.broadcast_to(self.b[:, None], (self.a.size, x.size)).copy()
        w = self.omega[:, None]
        wx = w * x[None, :]
        return w * (self.b[:, None] * np.cos(wx) - self.a[:, None] * np.sin(wx))

    def second_derivative(self, x) -> np.ndarray:
        if self.lam == 0:
            return np.zeros((self.a.size, np.atleast_1d(x).size))
        return -(self.omega ** 2)[:, None] * self(x)


def _omega(g: MetricGraph, lam: float) -> np.ndarray:
    return np.sqrt(lam / g.c)


def _edge_gram(omega: np.ndarray, lam: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact integrals over [0,1] of cos^2, cos*sin, sin^2 (or 1, x, x^2 at lam=0)."""
    if lam == 0:
        one = np.ones_like(omega)
        return one, one / 2, one / 3
    s2 = np.sin(2 * omega) / (4 * omega)
    return 0.5 + s2, np.sin(omega) ** 2 / (2 * omega), 0.5 - s2


def x2_metric(g: MetricGraph, lam: float) -> np.ndarray:
    """Matrix ``B`` with ``(f, h)_{X2} = coeffs(f) @ B @ coeffs(h)`` for one eigenvalue."""
    icc, ics, iss = _edge_gram(_omega(g, lam), lam)
    mu = g.mu
    return np.block([[np.diag(mu * icc), np.diag(mu * ics)],
                     [np.diag(mu * ics), np.diag(mu * iss)]])


def x2_inner(g: MetricGraph, f: EigenFunction, h: EigenFunction) -> float:
    if f.lam != h.lam:
        raise ValueError("closed-form inner product needs a common eigenvalue")
    return float(f.coeffs @ x2_metric(g, f.lam) @ h.coeffs)


def _orthonormalize(g: MetricGraph, lam: float, vecs: np.ndarray,
                    drop_tol: float = 1e-9) -> np.ndarray:
    """Gram-Schmidt in the X2 metric on columns ``(a, b, d)``; drops dependent columns."""
    B = x2_metric(g, lam)
    k = 2 * g.m

    def ip(u, v):
        return u[:k] @ B @ v[:k]

    out: list[np.ndarray] = []
    for col in vecs.T:
        v = col.astype(float).copy()
        scale = math.sqrt(max(ip(v, v), 0.0))
        if scale == 0:
            continue
        for _ in range(2):
            for q in out:
                v -= ip(q, v) * q
        nv = math.sqrt(max(ip(v, v), 0.0))
        if nv <= drop_tol * scale:
            continue
        v /= nv
        lead = np.flatnonzero(np.abs(v[:k]) > 1e-12)
        if lead.size and v[lead[0]] < 0:
            v = -v
        out.append(v)
    return np.array(out).T if out else np.zeros((vecs.shape[0], 0))


def _functions_from_columns(g: MetricGraph, lam: float, cols: np.ndarray) -> list[EigenFunction]:
    m = g.m
    omega = _omega(g, lam)
    return [EigenFunction(lam, c[:m].copy(), c[m:2 * m].copy(), omega, c[2 * m:].copy())
            for c in cols.T]


# ---------------------------------------------------------------------------
# generalized matrices
# ---------------------------------------------------------------------------

def _singular_distance(g: MetricGraph, lam: float) -> np.ndarray:
    w = _omega(g, lam)
    return np.abs(w - PI * np.round(w / PI))


def check_admissible(g: MetricGraph, lam: float, window: float = DEFAULT_OPTIONS.window) -> None:
    if not lam > 0:
        raise SingularLambda(f"lambda={lam} must be positive")
    dist = _singular_distance(g, lam)
    j = int(np.argmin(dist))
    if dist[j] < window:
        raise SingularLambda(
            f"lambda={lam!r} is within {window:g} of c_j l^2 pi^2 for edge {g.edges[j].id!r}")


def _kirchhoff_weight(g: MetricGraph) -> np.ndarray:
    return g.mu * np.sqrt(g.c)


def generalized_adjacency(g: MetricGraph, lam: float,
                          window: float = DEFAULT_OPTIONS.window) -> np.ndarray:
    """Entrywise: ``(i, k)`` gets ``mu_j sqrt(c_j) / sin(sqrt(lam/c_j))`` for the edge joining them."""
    check_admissible(g, lam, window)
    w = _kirchhoff_weight(g) / np.sin(_omega(g, lam))
    A = np.zeros((g.n, g.n))
    np.add.at(A, (g.tails, g.heads), w)
    np.add.at(A, (g.heads, g.tails), w)
    return A


def generalized_degree(g: MetricGraph, lam: float,
                       window: float = DEFAULT_OPTIONS.window) -> np.ndarray:
    """Diagonal of summed ``mu_j sqrt(c_j) cot(sqrt(lam/c_j))`` over incident edges."""
    check_admissible(g, lam, window)
    w = _kirchhoff_weight(g) / np.tan(_omega(g, lam))
    diag = np.bincount(g.tails, w, g.n) + np.bincount(g.heads, w, g.n)
    return np.diag(diag)


def generalized_adjacency_incidence(g: MetricGraph, lam: float) -> np.ndarray:
    """Same matrix as :func:`generalized_adjacency`, as a product of incidence matrices."""
    check_admissible(g, lam)
    inc = incidence(g)
    w = _omega(g, lam)
    CS = np.diag(1 / np.sqrt(g.c) / np.sin(w))
    return inc.phi_w_plus @ CS @ inc.phi_minus.T + inc.phi_w_minus @ CS @ inc.phi_plus.T


def generalized_degree_incidence(g: MetricGraph, lam: float) -> np.ndarray:
    check_admissible(g, lam)
    inc = incidence(g)
    w = _omega(g, lam)
    CC = np.diag(1 / np.sqrt(g.c) / np.tan(w))
    return inc.phi_w_plus @ CC @ inc.phi_plus.T + inc.phi_w_minus @ CC @ inc.phi_minus.T


def generalized_laplacian(g: MetricGraph, lam: float,
                          window: float = DEFAULT_OPTIONS.window) -> np.ndarray:
    return generalized_degree(g, lam, window) - generalized_adjacency(g, lam, window)


def secular_determinant(g: MetricGraph, lam: float,
                        window: float = DEFAULT_OPTIONS.window) -> float:
    return float(np.linalg.det(generalized_laplacian(g, lam, window)))


def _laplacian_unchecked(g: MetricGraph, lam: float) -> np.ndarray:
    w = _omega(g, lam)
    k = _kirchhoff_weight(g)
    off = k / np.sin(w)
    diag = k / np.tan(w)
    L = np.diag(np.bincount(g.tails, diag, g.n) + np.bincount(g.heads, diag, g.n))
    np.add.at(L, (g.tails, g.heads), -off)
    np.add.at(L, (g.heads, g.tails), -off)
    return L


def weighted_graph_laplacian(g: MetricGraph) -> np.ndarray:
    """``Phi_w Phi^T``: governs the kernel at ``lam = 0``."""
    inc = incidence(g)
    return (inc.phi_w_plus - inc.phi_w_minus) @ inc.phi.T


# ---------------------------------------------------------------------------
# secular scan
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SecularRoot:
    lam: float
    dim: int
    kernel: np.ndarray  # n x dim


def singular_points(g: MetricGraph, lam_max: float) -> np.ndarray:
    """Sorted distinct ``c_j l^2 pi^2 <= lam_max`` with ``l >= 1``."""
    pts = []
    for c in np.unique(g.c):
        lmax = int(math.floor(math.sqrt(lam_max / c) / PI)) + 1
        pts.extend(c * (l * PI) ** 2 for l in range(1, lmax + 1))
    pts = np.array(sorted(p for p in pts if p <= lam_max * (1 + 1e-12)))
    if pts.size == 0:
        return pts
    keep = np.concatenate([[True], np.diff(pts) > 1e-12 * pts[1:]])
    return pts[keep]


def _window_edge(g: MetricGraph, lam: float, window: float, side: int) -> float:
    """Nearest admissible lambda to a singular point on the given side (+1 right, -1 left)."""
    out = lam
    for c in g.c:
        s = math.sqrt(lam / c)
        l = round(s / PI)
        if abs(s - l * PI) < window:
            edge = c * max(l * PI + side * window, 0.0) ** 2
            out = max(out, edge) if side > 0 else min(out, edge)
    return out


def _scan_interval(g: MetricGraph, lo: float, hi: float, opts: ScanOptions) -> list[float]:
    if not lo < hi:
        return []

    def branches(lam):
        return np.linalg.eigvalsh(_laplacian_unchecked(g, lam))

    ev_lo, ev_hi = branches(lo), branches(hi)
    # every eigenvalue branch of L_C is strictly decreasing between singular points,
    # so branch k has a root here iff it changes from positive to nonpositive
    roots = []
    for k in range(g.n):
        if not (ev_lo[k] > 0 >= ev_hi[k]):
            continue
        a, b = lo, hi
        if ev_hi[k] == 0:
            roots.append(hi)
            continue
        while b - a > opts.tol:
            mid = 0.5 * (a + b)
            if mid <= a or mid >= b:
                break
            if branches(mid)[k] > 0:
                a = mid
            else:
                b = mid
        roots.append(0.5 * (a + b))
    return roots


def _kernel(M: np.ndarray, rtol: float) -> tuple[np.ndarray, np.ndarray]:
    _, s, vt = np.linalg.svd(M)
    return s, vt


def scan_sigma_L(g: MetricGraph, lam_max: float,
                 options: ScanOptions | None = None) -> list[SecularRoot]:
    """All roots of ``det L_C(lam) = 0`` in ``(0, lam_max]`` off the singular set.

    Each root carries ``dim ker L_C(lam)`` and an orthonormal kernel basis.
    """
    opts = options or DEFAULT_OPTIONS
    if not lam_max > 0:
        raise ValueError("lam_max must be positive")
    sing = singular_points(g, lam_max)
    bounds = [0.0, *sing.tolist()]
    intervals = []
    for k, a in enumerate(bounds):
        b = bounds[k + 1] if k + 1 < len(bounds) else lam_max
        lo = _window_edge(g, a, opts.window, +1) if a > 0 else float(np.max(g.c)) * opts.window ** 2
        hi = _window_edge(g, b, opts.window, -1)
        if k + 1 >= len(bounds) and b == a:
            continue
        intervals.append((lo, min(hi, lam_max)))

    if opts.jobs > 1:
        with ThreadPoolExecutor(opts.jobs) as pool:
            chunks = list(pool.map(lambda iv: _scan_interval(g, *iv, opts), intervals))
    else:
        chunks = [_scan_interval(g, lo, hi, opts) for lo, hi in intervals]
    raw = sorted(r for chunk in chunks for r in chunk)

    clusters: list[list[float]] = []
    for r in raw:
        if clusters and r - clusters[-1][-1] <= opts.merge_rtol * (1 + r):
            clusters[-1].append(r)
        else:
            clusters.append([r])

    out = []
    for cl in clusters:
        lam = float(np.mean(cl))
        L = _laplacian_unchecked(g, lam)
        s, vt = _kernel(L, opts.kernel_rtol)
        dim = int(np.sum(s < opts.kernel_rtol * s[0]))
        if dim != len(cl):
            raise ScanResolutionTooCoarse(
                f"near lambda={lam:.12g}: {len(cl)} branch crossings but kernel "
                f"dimension {dim}; tighten tol or merge_rtol")
        out.append(SecularRoot(lam, dim, vt[-dim:].T.copy()))
    return out


# ---------------------------------------------------------------------------
# eigenpairs
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EigenPair:
    lam: float
    multiplicity: int
    kind: EigenClass
    eigenfunctions: list[EigenFunction] = field(default_factory=list)


def eigenfunction_from_kernel(g: MetricGraph, lam: float, d,
                              rtol: float = DEFAULT_OPTIONS.kernel_rtol) -> EigenFunction:
    """Edge coefficients of the eigenfunction with vertex values ``d``."""
    d = np.asarray(d, float)
    L = weighted_graph_laplacian(g) if lam == 0 else generalized_laplacian(g, lam)
    resid = np.linalg.norm(L @ d)
    if resid > rtol * max(np.linalg.norm(L, 2), 1.0) * np.linalg.norm(d):
        raise KernelMismatch(f"|L_C(lam) d| = {resid:.3e} at lambda={lam:.12g}")
    a = d[g.tails]
    if lam == 0:
        return EigenFunction(0.0, a, d[g.heads] - a, np.zeros(g.m), d)
    w = _omega(g, lam)
    b = (d[g.heads] - np.cos(w) * a) / np.sin(w)
    return EigenFunction(lam, a, b, w, d)


def _pair_from_functions(g, lam, kind, funcs) -> EigenPair | None:
    cols = np.array([np.concatenate([f.a, f.b, f.d]) for f in funcs]).T
    cols = _orthonormalize(g, lam, cols)
    if cols.shape[1] == 0:
        return None
    return EigenPair(lam, cols.shape[1], kind, _functions_from_columns(g, lam, cols))


def _zero_pair(g: MetricGraph) -> EigenPair:
    s = 1 / math.sqrt(g.mu.sum())
    f = EigenFunction(0.0, np.full(g.m, s), np.zeros(g.m), np.zeros(g.m), np.full(g.n, s))
    return EigenPair(0.0, 1, EigenClass.ZERO, [f])


def sigma_C_system(g: MetricGraph, lam: float,
                   window: float = DEFAULT_OPTIONS.window) -> np.ndarray:
    """Rows on unknowns ``(d, b)`` for the continuity and Kirchhoff conditions.

    Edges with ``sqrt(lam/c_j)`` a multiple of pi contribute the sign link
    ``d_head = (-1)^q d_tail`` and leave ``b_j`` free; other edges tie ``b_j``
    to the two vertex values.
    """
    n, m = g.n, g.m
    w = _omega(g, lam)
    q = np.round(w / PI)
    exact = np.abs(w - q * PI) < window
    s = np.where(exact, 0.0, np.sin(w))
    co = np.where(exact, (-1.0) ** q, np.cos(w))
    W = _kirchhoff_weight(g)
    rows = np.zeros((m + n, n + m))
    cols = np.arange(m)
    rows[cols, n + cols] = s
    rows[cols, g.heads] -= 1.0
    rows[cols, g.tails] += co
    kir = rows[m:]
    np.add.at(kir, (g.tails, n + cols), W)
    np.add.at(kir, (g.heads, n + cols), -W * co)
    np.add.at(kir, (g.heads, g.tails), W * s)
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    return rows


def sigma_C_check(g: MetricGraph, i: int, k: int,
                  options: ScanOptions | None = None) -> EigenPair | None:
    """Eigenspace at ``lam = c_i k^2 pi^2``, or ``None`` if only the trivial solution exists."""
    opts = options or DEFAULT_OPTIONS
    if k == 0:
        raise ValueError("k must be nonzero")
    lam = float(g.c[i] * (k * PI) ** 2)
    rows = sigma_C_system(g, lam, opts.window)
    _, s, vt = np.linalg.svd(rows)
    dim = int(np.sum(s < opts.kernel_rtol * s[0]))
    if dim == 0:
        return None
    null = vt[-dim:]
    n, m = g.n, g.m
    d, b = null[:, :n], null[:, n:]
    cols = np.hstack([d[:, g.tails], b, d]).T
    cols = _orthonormalize(g, lam, cols)
    return EigenPair(lam, cols.shape[1], EigenClass.SIGMA_C, _functions_from_columns(g, lam, cols))


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

METHOD_SCAN = "secular-scan"
METHOD_CLOSED = "unit-speed-closed-form"


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    lambda_max: float
    pairs: list[EigenPair]
    method: str

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues repeated by multiplicity, ascending."""
        return np.array([p.lam for p in self.pairs for _ in range(p.multiplicity)])

    def eigenfunctions(self) -> list[EigenFunction]:
        return [f for p in self.pairs for f in p.eigenfunctions]

    def second(self) -> EigenPair:
        return self.pairs[1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda", "multiplicity", "class", "method"])
        for p in self.pairs:
            w.writerow([f"{p.lam:.15g}", p.multiplicity, p.kind.value, self.method])
        return buf.getvalue()

    def to_dict(self) -> dict:
        def fmt(a):
            return [float(f"{x:.15g}") for x in a]
        return {
            "lambda_max": self.lambda_max,
            "method": self.method,
            "eigenvalues": [
                {"lambda": float(f"{p.lam:.15g}"), "multiplicity": p.multiplicity,
                 "class": p.kind.value,
                 "eigenfunctions": [{"a": fmt(f.a), "b": fmt(f.b), "omega": fmt(f.omega),
                                     "d": fmt(f.d) if f.d is not None else None}
                                    for f in p.eigenfunctions]}
                for p in self.pairs
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"


def _cluster(values: np.ndarray, tol: float) -> list[np.ndarray]:
    order = np.argsort(values)
    groups: list[list[int]] = []
    for idx in order:
        if groups and values[idx] - values[groups[-1][-1]] <= tol:
            groups[-1].append(idx)
        else:
            groups.append([idx])
    return [np.array(gr) for gr in groups]


def sigma_k_multiplicity(g: MetricGraph, k: int) -> int:
    """Closed-form multiplicity of ``k^2 pi^2`` on a unit-speed network."""
    if bipartition(g) is not None or k % 2 == 0:
        return g.m - g.n + 2
    return g.m - g.n


def unit_speed_spectrum(g: MetricGraph, lam_max: float,
                        options: ScanOptions | None = None) -> SpectrumReport:
    """Closed-form spectrum for ``c_j = 1`` from the transition-matrix eigenvalues."""
    opts = options or DEFAULT_OPTIONS
    if not g.is_unit_speed:
        raise NotUnitSpeed("closed-form spectrum needs c_j = 1 on every edge")
    pairs = [_zero_pair(g)]

    A = adjacency(g, g.mu)
    s = 1 / np.sqrt(A.sum(axis=1))
    alpha, Y = np.linalg.eigh(s[:, None] * A * s[None, :])
    X = s[:, None] * Y  # kernel vectors of alpha*D - A
    for grp in _cluster(alpha, 1e-9):
        al = float(np.clip(alpha[grp].mean(), -1, 1))
        if abs(al - 1) < 1e-9 or abs(al + 1) < 1e-9:
            continue
        theta = math.acos(al)
        lams = []
        l = 0
        while (2 * l * PI + theta) ** 2 <= lam_max:
            lams.append((2 * l * PI + theta) ** 2)
            l += 1
        l = 1
        while (2 * l * PI - theta) ** 2 <= lam_max:
            lams.append((2 * l * PI - theta) ** 2)
            l += 1
        for lam in lams:
            funcs = [eigenfunction_from_kernel(g, lam, X[:, c], opts.kernel_rtol) for c in grp]
            pair = _pair_from_functions(g, lam, EigenClass.SIGMA_L, funcs)
            if pair is None or pair.multiplicity != grp.size:
                raise KernelMismatch(f"eigenspace at lambda={lam:.12g} lost dimensions")
            pairs.append(pair)

    k = 1
    while (k * PI) ** 2 <= lam_max:
        expected = sigma_k_multiplicity(g, k)
        pair = sigma_C_check(g, 0, k, opts)
        got = 0 if pair is None else pair.multiplicity
        if got != expected:
            raise KernelMismatch(
                f"k={k}: solution space has dimension {got}, closed form gives {expected}")
        if pair is not None:
            pairs.append(pair)
        k += 1

    pairs.sort(key=lambda p: p.lam)
    return SpectrumReport(lam_max, pairs, METHOD_CLOSED)


def _merge_coincident(g: MetricGraph, pairs: list[EigenPair], rtol: float) -> list[EigenPair]:
    pairs = sorted(pairs, key=lambda p: p.lam)
    merged: list[EigenPair] = []
    for p in pairs:
        if merged and p.lam - merged[-1].lam <= rtol * (1 + p.lam):
            q = merged[-1]
            lam = q.lam
            funcs = [EigenFunction(lam, f.a, f.b, _omega(g, lam), f.d)
                     for f in q.eigenfunctions + p.eigenfunctions]
            new = _pair_from_functions(g, lam, q.kind, funcs)
            merged[-1] = new
        else:
            merged.append(p)
    return merged


def spectrum(g: MetricGraph, lam_max: float, method: str = "auto",
             options: ScanOptions | None = None) -> SpectrumReport:
    """Eigenvalues in ``[0, lam_max]`` with multiplicities and eigenfunctions.

    ``method`` is ``"auto"`` (closed form when every ``c_j = 1``),
    ``"closed-form"`` or ``"scan"``.
    """
    opts = options or DEFAULT_OPTIONS
    if method == "closed-form" or (method == "auto" and g.is_unit_speed):
        return unit_speed_spectrum(g, lam_max, opts)
    if method not in ("auto", "scan"):
        raise ValueError(f"unknown method {method!r}")

    pairs = [_zero_pair(g)]
    for root in scan_sigma_L(g, lam_max, opts):
        funcs = [eigenfunction_from_kernel(g, root.lam, root.kernel[:, c], opts.kernel_rtol)
                 for c in range(root.dim)]
        pairs.append(_pair_from_functions(g, root.lam, EigenClass.SIGMA_L, funcs))

    seen: list[float] = []
    for i in np.unique(g.c, return_index=True)[1]:
        k = 1
        while g.c[i] * (k * PI) ** 2 <= lam_max:
            lam = g.c[i] * (k * PI) ** 2
            if not any(abs(lam - s) <= 1e-12 * lam for s in seen):
                seen.append(lam)
                pair = sigma_C_check(g, int(i), k, opts)
                if pair is not None:
                    pairs.append(pair)
            k += 1

    return SpectrumReport(lam_max, _merge_coincident(g, pairs, opts.merge_rtol), METHOD_SCAN)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

def domain_defects(g: MetricGraph, f: EigenFunction) -> tuple[float, float]:
    """Continuity and Kirchhoff defects of ``f`` (both zero for ``f`` in the operator domain)."""
    inc = incidence(g)
    f0, f1 = f(0.0)[:, 0], f(1.0)[:, 0]
    d = f.d
    if d is None:
        d = np.zeros(g.n)
        np.add.at(d, g.tails, f0)
        np.add.at(d, g.heads, f1)
        d /= np.bincount(np.concatenate([g.tails, g.heads]), minlength=g.n)
    cont = max(np.max(np.abs(inc.phi_plus.T @ d - f0)), np.max(np.abs(inc.phi_minus.T @ d - f1)))
    df0, df1 = f.derivative(0.0)[:, 0], f.derivative(1.0)[:, 0]
    kir = np.max(np.abs(inc.phi_w_plus @ df0 - inc.phi_w_minus @ df1))
    return float(cont), float(kir)


def eigen_residual(g: MetricGraph, f: EigenFunction, npts: int = 1000) -> float:
    """Grid maximum of ``|c_j f_j'' + lam f_j|``."""
    x = np.linspace(0.0, 1.0, npts)
    return float(np.max(np.abs(g.c[:, None] * f.second_derivative(x) + f.lam * f(x))))
