"""Command-line interface: ``metricnet {validate,spectrum,evolve,stability,selftest}``.

Exit codes: 0 success, 1 domain error or failed check, 2 usage or parse error.
Every command writes ``manifest.json`` with the resolved configuration into
``--out``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import GraphFileError, MetricNetError
from .evolve import (DEFAULT_GRID, EdgeState, EigenBasis, build_basis, bump_state,
                     constant_state, decay_rate_fit, energy, equilibrium_projection,
                     heat_series, snapshots_csv, wave_evolve)
from .graph import MetricGraph, complete_graph, cycle_graph, graph_params, load_graph
from .oracle import assemble, oracle_eigs
from .spectral import ScanOptions, spectrum
from .stability import convergence_bound

EVOLVE_LAMBDA_MAX = 4000.0


class UsageError(Exception):
    pass


def _write(out: Path, name: str, text: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / name, "w", newline="\n") as fh:
        fh.write(text)


def _manifest(args: argparse.Namespace, extra: dict | None = None) -> None:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    doc = {"metricnet": __version__, "config": cfg}
    if extra:
        doc["results"] = extra
    _write(Path(args.out), "manifest.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _g(x: float) -> str:
    return f"{x:.12g}"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_validate(args) -> int:
    g = load_graph(args.graph)
    p = graph_params(g)
    if p.is_regular:
        deg = f"regular γ={p.gamma}"
    else:
        deg = "degrees=" + ",".join(str(d) for d in p.degree)
    line = (f"n={g.n} m={g.m} {deg} bipartite={'yes' if p.bipartition else 'no'} "
            f"η={p.eta} diam={p.diam} ν₂={_g(p.nu2)}")
    print(line)
    _write(Path(args.out), "validate.txt", line + "\n")
    _manifest(args)
    return 0


def _oracle_columns(g: MetricGraph, report, h: float) -> tuple[list[float], list[float]]:
    d = assemble(g, h)
    total = int(sum(p.multiplicity for p in report.pairs))
    vals = [e.lam for e in oracle_eigs(d, total)]
    oracle, disc = [], []
    k = 0
    for p in report.pairs:
        chunk = vals[k:k + p.multiplicity]
        k += p.multiplicity
        oracle.append(float(np.mean(chunk)))
        disc.append(max(abs(v - p.lam) for v in chunk) / max(p.lam, 1.0))
    return oracle, disc


def cmd_spectrum(args) -> int:
    g = load_graph(args.graph)
    method = "closed-form" if args.closed_form else "scan" if args.scan else "auto"
    report = spectrum(g, args.lambda_max, method, ScanOptions(jobs=args.jobs))
    if args.oracle is None:
        text = report.to_csv()
        results = {}
    else:
        oracle, disc = _oracle_columns(g, report, args.oracle)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda", "multiplicity", "class", "method", "oracle", "discrepancy"])
        for p, o, e in zip(report.pairs, oracle, disc):
            w.writerow([f"{p.lam:.15g}", p.multiplicity, p.kind.value, report.method,
                        f"{o:.15g}", f"{e:.15g}"])
        text = buf.getvalue()
        results = {"max_discrepancy": float(f"{max(disc):.15g}")}
    sys.stdout.write(text)
    _write(Path(args.out), "spectrum.csv", text)
    _write(Path(args.out), "spectrum.json", report.to_json())
    _manifest(args, results)
    return 0


def make_state(spec: str, g: MetricGraph, basis: EigenBasis, rng: np.random.Generator) -> EdgeState:
    """Initial data from ``zero``, ``constant[:v]``, ``bump[:edge]``, ``mode:k`` or ``random``."""
    kind, _, arg = spec.partition(":")
    try:
        if kind == "zero":
            return constant_state(g, 0.0, basis.npts)
        if kind == "constant":
            return constant_state(g, float(arg or 1.0), basis.npts)
        if kind == "bump":
            ids = [e.id for e in g.edges]
            edge = ids.index(arg) if arg in ids else int(arg or 0)
            if not 0 <= edge < g.m:
                raise UsageError(f"edge index {edge} out of range")
            return bump_state(g, edge, basis.npts)
        if kind == "mode":
            k = int(arg)
            if not 0 <= k < basis.size:
                raise UsageError(f"mode {k} outside the basis (size {basis.size})")
            return basis.mode(k)
        if kind == "random":
            return basis.random_state(rng)
    except ValueError as exc:
        raise UsageError(f"bad initial-data spec {spec!r}: {exc}") from None
    raise UsageError(f"unknown initial-data spec {spec!r}")


def _time_grid(dt: float, T: float, stride: int) -> np.ndarray:
    steps = int(round(T / dt))
    idx = list(range(0, steps + 1, stride))
    if idx[-1] != steps:
        idx.append(steps)
    return np.array(idx) * dt


def cmd_evolve(args) -> int:
    g = load_graph(args.graph)
    basis = build_basis(g, args.lambda_max, args.grid)
    rng = np.random.default_rng(args.seed)
    f = make_state(args.f, g, basis, rng)
    times = _time_grid(args.dt, args.T, args.stride)
    results: dict = {"basis_size": basis.size,
                     "completeness_defect_f": float(f"{basis.completeness_defect(f):.6g}")}

    if args.kind == "heat":
        series = heat_series(basis, f, times)
        lam2 = -float(basis.lams[1])
        P = equilibrium_projection(g, f)
        try:
            slope = decay_rate_fit(series, P)
            rel = abs(slope - lam2) / abs(lam2)
            rates = (f"fitted_slope {slope:.15g}\nlambda2 {lam2:.15g}\n"
                     f"relative_error {rel:.15g}\n")
            results.update(fitted_slope=float(f"{slope:.15g}"), relative_error=float(f"{rel:.15g}"))
        except MetricNetError as exc:
            rates = f"fitted_slope n/a\nlambda2 {lam2:.15g}\nnote {exc}\n"
        _write(Path(args.out), "rates.txt", rates)
        sys.stdout.write(rates)
    else:
        g0 = make_state(args.g, g, basis, rng)
        series, energies = [], []
        for t in times:
            u, v = wave_evolve(basis, f, g0, float(t))
            series.append((float(t), u))
            energies.append(energy(g, u, v))
        e0 = energies[0]
        drift = max(abs(e - e0) for e in energies) / max(abs(e0), 1e-300)
        report = f"energy_initial {e0:.15g}\nenergy_relative_drift {drift:.15g}\n"
        results["energy_relative_drift"] = float(f"{drift:.15g}")
        _write(Path(args.out), "energy.txt", report)
        sys.stdout.write(report)

    thinned = [(t, EdgeState(u.g, u.values[:, ::args.x_stride])) for t, u in series]
    if (basis.npts - 1) % args.x_stride:
        raise UsageError("--x-stride must divide grid-1")
    _write(Path(args.out), "snapshots.csv", snapshots_csv(thinned))
    _manifest(args, results)
    return 0


def cmd_stability(args) -> int:
    g = load_graph(args.graph)
    rep = convergence_bound(g, args.eps, strict=False)
    if args.fit and rep.lambda2 is not None:
        basis = build_basis(g, EVOLVE_LAMBDA_MAX)
        f = bump_state(g, 0, basis.npts)
        series = heat_series(basis, f, np.linspace(0.0, 8.0 / abs(rep.lambda2), 81))
        rep.fitted_slope = decay_rate_fit(series, equilibrium_projection(g, f))
        rep.flags["fitted_slope~lambda2"] = abs(rep.fitted_slope / rep.lambda2 - 1) <= 0.02
    text = rep.to_text()
    sys.stdout.write(text)
    _write(Path(args.out), "stability.txt", text)
    _write(Path(args.out), "stability.csv", rep.to_csv())
    _manifest(args, {"ok": rep.ok})
    return 0 if rep.ok else 1


def _selftest_checks(seed: int) -> list[tuple[str, bool, str]]:
    from .evolve import check_positivity, mass, x2_norm
    from .spectral import (generalized_adjacency, generalized_adjacency_incidence,
                           generalized_degree, generalized_degree_incidence)
    from .stability import lambda2_regular

    rng = np.random.default_rng(seed)
    out = []
    for name, g in (("K3", complete_graph(3)), ("C4", cycle_graph(4)), ("K4", complete_graph(4))):
        a = spectrum(g, 200.0, "closed-form").eigenvalues()
        b = spectrum(g, 200.0, "scan").eigenvalues()
        err = float(np.max(np.abs(a - b))) if a.shape == b.shape else math.inf
        out.append((f"{name} closed form = secular scan", err < 1e-8, f"max diff {err:.2e}"))

        lam = float(rng.uniform(0.5, 30.0))
        gw = g.with_weights(c=rng.uniform(0.5, 2.0, g.m), mu=rng.uniform(0.5, 2.0, g.m))
        try:
            d = max(np.max(np.abs(generalized_adjacency(gw, lam) - generalized_adjacency_incidence(gw, lam))),
                    np.max(np.abs(generalized_degree(gw, lam) - generalized_degree_incidence(gw, lam))))
            out.append((f"{name} incidence identity", d < 1e-12, f"max diff {d:.2e}"))
        except MetricNetError as exc:
            out.append((f"{name} incidence identity", True, f"skipped: {exc}"))

        l2 = lambda2_regular(g)
        e = abs(l2 + spectrum(g, 50.0).second().lam)
        out.append((f"{name} lambda2 formula", e < 1e-10, f"diff {e:.2e}"))

        basis = build_basis(g, 400.0, 201)
        f = basis.random_state(rng, nonnegative=True)
        series = heat_series(basis, f, np.linspace(0, 1, 21))
        dm = max(abs(mass(u) - mass(f)) for _, u in series)
        out.append((f"{name} mass conservation", dm < 1e-10, f"drift {dm:.2e}"))
        pos = check_positivity(series)
        out.append((f"{name} positivity and sup contraction", pos.ok, f"min {pos.min_value:.3e}"))
        norms = [x2_norm(u) for _, u in series]
        mono = all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))
        out.append((f"{name} X2 contraction", mono, ""))

        v0 = basis.random_state(rng)
        u1, v1 = wave_evolve(basis, f, v0, 10.0)
        de = abs(energy(g, u1, v1) - energy(g, f, v0)) / energy(g, f, v0)
        out.append((f"{name} wave energy", de < 1e-8, f"relative drift {de:.2e}"))

        rep = convergence_bound(g)
        out.append((f"{name} stability bounds", rep.ok, ""))
    return out


def cmd_selftest(args) -> int:
    checks = _selftest_checks(args.seed)
    lines = [f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({info})" if info else "")
             for name, ok, info in checks]
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    _write(Path(args.out), "selftest.txt", text)
    passed = all(ok for _, ok, _ in checks)
    _manifest(args, {"passed": passed, "checks": len(checks)})
    return 0 if passed else 1


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _positive(kind):
    def conv(s: str):
        try:
            v = kind(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {kind.__name__} value: {s!r}") from None
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {s}")
        return v
    return conv


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="metricnet", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"metricnet {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def command(name, func, helptext, graph=True):
        p = sub.add_parser(name, help=helptext)
        if graph:
            p.add_argument("graph", help="graph file (JSON)")
        p.add_argument("--out", default="metricnet-out", help="output directory (default: %(default)s)")
        p.set_defaults(func=func)
        return p

    command("validate", cmd_validate, "check a graph file and print its parameters")

    p = command("spectrum", cmd_spectrum, "eigenvalues up to --lambda-max")
    p.add_argument("--lambda-max", type=_positive(float), default=400.0)
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--closed-form", action="store_true", help="require the unit-speed closed form")
    grp.add_argument("--scan", action="store_true", help="force the secular scan")
    p.add_argument("--oracle", type=_positive(float), metavar="H",
                   help="append finite-element eigenvalues at mesh width H")
    p.add_argument("--jobs", type=_positive(int), default=1)

    p = command("evolve", cmd_evolve, "heat or wave evolution by eigenfunction expansion")
    p.add_argument("--kind", choices=("heat", "wave"), default="heat")
    p.add_argument("--f", default="bump", help="initial value: zero, constant[:v], bump[:edge], mode:k, random")
    p.add_argument("--g", default="zero", help="initial velocity (wave only), same syntax as --f")
    p.add_argument("--dt", type=_positive(float), default=0.05, help="snapshot spacing")
    p.add_argument("--T", type=_positive(float), default=2.0)
    p.add_argument("--stride", type=_positive(int), default=1)
    p.add_argument("--lambda-max", type=_positive(float), default=EVOLVE_LAMBDA_MAX)
    p.add_argument("--grid", type=_positive(int), default=DEFAULT_GRID)
    p.add_argument("--x-stride", type=_positive(int), default=10,
                   help="write every k-th grid point to snapshots.csv")
    p.add_argument("--seed", type=int, default=0)

    p = command("stability", cmd_stability, "decay exponent and the two connectivity bounds")
    p.add_argument("--eps", type=_positive(float), default=1e-3)
    p.add_argument("--fit", action="store_true", help="also fit the decay slope of a heat run")

    p = command("selftest", cmd_selftest, "run the invariant suite on K3, C4, K4", graph=False)
    p.add_argument("--seed", type=int, default=0)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (GraphFileError, UsageError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MetricNetError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
