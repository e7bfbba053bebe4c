"""Long-time behaviour of the heat flow on regular unit-speed networks.

Exponents are signed: ``lambda2`` is the (negative) largest nonzero eigenvalue
of the generator, so ``|u(t) - Pf| ~ exp(lambda2 t)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotRegular, NotUnitSpeed
from .graph import MetricGraph, graph_params


def _exponent(nu: float, gamma: int) -> float:
    return -math.acos(float(np.clip(1.0 - nu / gamma, -1.0, 1.0))) ** 2


def _require_regular_unit_speed(g: MetricGraph) -> int:
    if not g.is_unit_speed:
        raise NotUnitSpeed("the algebraic-connectivity formula needs c_j = 1")
    if not np.all(g.mu == g.mu[0]):
        raise NotRegular("the algebraic-connectivity formula needs equal edge weights mu_j")
    p = graph_params(g)
    if p.gamma is None:
        raise NotRegular(f"graph is not regular (degrees {sorted(set(p.degree))})")
    return p.gamma


def lambda2_regular(g: MetricGraph) -> float:
    """``-(arccos(1 - nu2/gamma))^2`` for a regular unit-speed network."""
    gamma = _require_regular_unit_speed(g)
    return _exponent(graph_params(g).nu2, gamma)


def nu2_bound_edge_connectivity(g: MetricGraph) -> float:
    return 2.0 * graph_params(g).eta * (1.0 - math.cos(math.pi / g.n))


def nu2_bound_diameter(g: MetricGraph) -> float:
    return 4.0 / (g.n * graph_params(g).diam)


@dataclass
class StabilityReport:
    gamma: int | None
    nu2: float
    lambda2: float | None
    eta_bound: float
    diam_bound: float
    eta_exponent: float | None = None
    diam_exponent: float | None = None
    epsilon: float | None = None
    fitted_slope: float | None = None
    flags: dict[str, bool] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(self.flags.values())

    def rows(self) -> list[tuple[str, object]]:
        out: list[tuple[str, object]] = [
            ("gamma", self.gamma), ("nu2", self.nu2), ("lambda2", self.lambda2),
            ("eta_bound", self.eta_bound), ("diam_bound", self.diam_bound),
            ("eta_exponent", self.eta_exponent), ("diam_exponent", self.diam_exponent),
            ("epsilon", self.epsilon), ("fitted_slope", self.fitted_slope),
        ]
        out += [(f"check:{k}", v) for k, v in self.flags.items()]
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["quantity", "value"])
        for k, v in self.rows():
            w.writerow([k, _fmt(v)])
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"{k:<30} {_fmt(v)}" for k, v in self.rows() if v is not None]
        lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if v is None:
        return "n/a"
    if isinstance(v, bool):
        return "ok" if v else "FAILED"
    if isinstance(v, float):
        return f"{v:.15g}"
    return str(v)


def convergence_bound(g: MetricGraph, eps: float = 1e-3, strict: bool = True,
                      rtol: float = 1e-12) -> StabilityReport:
    """Exact decay exponent next to the exponents guaranteed by the two ``nu2`` lower bounds.

    With ``strict=False`` a non-regular or non-unit-speed graph yields a
    partial report (bounds on ``nu2`` only) instead of raising.
    """
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    p = graph_params(g)
    rep = StabilityReport(p.gamma, p.nu2, None, nu2_bound_edge_connectivity(g),
                          nu2_bound_diameter(g), epsilon=eps)
    slack = rtol * max(1.0, p.nu2)
    rep.flags["eta_bound<=nu2"] = rep.eta_bound <= p.nu2 + slack
    rep.flags["diam_bound<=nu2"] = rep.diam_bound <= p.nu2 + slack
    try:
        gamma = _require_regular_unit_speed(g)
    except (NotRegular, NotUnitSpeed) as exc:
        if strict:
            raise
        rep.notes.append(f"lambda2 formula not applicable: {exc}")
        return rep
    rep.lambda2 = _exponent(p.nu2, gamma)
    rep.eta_exponent = _exponent(rep.eta_bound, gamma)
    rep.diam_exponent = _exponent(rep.diam_bound, gamma)
    tol = rtol * max(1.0, abs(rep.lambda2))
    rep.flags["lambda2<=eta_exponent"] = rep.lambda2 <= rep.eta_exponent + tol
    rep.flags["lambda2<=diam_exponent"] = rep.lambda2 <= rep.diam_exponent + tol
    return rep
