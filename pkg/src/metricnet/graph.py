"""Metric graph model: validation, incidence matrices and combinatorial parameters.

Every edge ``e_j`` is parameterized on ``[0, 1]`` with ``e_j(0)`` its tail and
``e_j(1)`` its head.  Each edge carries a constant diffusivity ``c_j > 0`` and a
node-weight coefficient ``mu_j > 0`` entering the Kirchhoff law.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import networkx as nx
import numpy as np

from .errors import (
    DegreeBelowTwo,
    Disconnected,
    GraphFileError,
    LoopEdge,
    NonpositiveWeight,
    ParallelEdge,
)

_TOP_FIELDS = {"vertices", "edges"}
_EDGE_FIELDS = {"id", "from", "to", "c", "mu"}


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Edge:
    id: str
    tail: int
    head: int
    c: float = 1.0
    mu: float = 1.0


@dataclass(frozen=True)
class MetricGraph:
    """Validated finite connected simple network; build it through :func:`validate`."""

    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def c(self) -> np.ndarray:
        return _frozen(np.array([e.c for e in self.edges], dtype=float))

    @cached_property
    def mu(self) -> np.ndarray:
        return _frozen(np.array([e.mu for e in self.edges], dtype=float))

    @cached_property
    def tails(self) -> np.ndarray:
        return _frozen(np.array([e.tail for e in self.edges], dtype=int))

    @cached_property
    def heads(self) -> np.ndarray:
        return _frozen(np.array([e.head for e in self.edges], dtype=int))

    @property
    def is_unit_speed(self) -> bool:
        return bool(np.all(self.c == 1.0))

    def incident_edges(self, i: int) -> list[int]:
        """Gamma(v_i): indices of edges with an endpoint at vertex ``i``."""
        return [j for j, e in enumerate(self.edges) if i in (e.tail, e.head)]

    def to_networkx(self) -> nx.Graph:
        G = nx.Graph()
        G.add_nodes_from(range(self.n))
        G.add_edges_from((e.tail, e.head) for e in self.edges)
        return G

    def to_dict(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "edges": [
                {"id": e.id, "from": self.vertices[e.tail], "to": self.vertices[e.head],
                 "c": e.c, "mu": e.mu}
                for e in self.edges
            ],
        }

    def flipped(self, j: int) -> "MetricGraph":
        """Same network with edge ``j`` reparameterized in the opposite direction."""
        edges = list(self.edges)
        e = edges[j]
        edges[j] = Edge(e.id, e.head, e.tail, e.c, e.mu)
        return MetricGraph(self.vertices, tuple(edges))

    def with_weights(self, c=None, mu=None) -> "MetricGraph":
        c = self.c if c is None else np.broadcast_to(np.asarray(c, float), (self.m,))
        mu = self.mu if mu is None else np.broadcast_to(np.asarray(mu, float), (self.m,))
        raw = self.to_dict()
        for rec, cj, mj in zip(raw["edges"], c, mu):
            rec["c"], rec["mu"] = float(cj), float(mj)
        return validate(raw)


def validate(raw: Mapping) -> MetricGraph:
    """Check a raw ``{"vertices": [...], "edges": [...]}`` description.

    Edge records use the keys of the graph file format (``id``, ``from``,
    ``to``, optional ``c`` and ``mu``).  Raises one of the
    :class:`~metricnet.errors.GraphValidationError` subclasses naming the
    offending element, or :class:`GraphFileError` for structural problems.
    """
    try:
        names = [str(v) for v in raw["vertices"]]
        records = list(raw["edges"])
    except (KeyError, TypeError) as exc:
        raise GraphFileError(f"graph needs 'vertices' and 'edges' lists ({exc})") from None
    if len(set(names)) != len(names):
        raise GraphFileError("duplicate vertex ids")
    index = {v: i for i, v in enumerate(names)}

    edges: list[Edge] = []
    seen_ids: set[str] = set()
    seen_pairs: dict[frozenset, str] = {}
    for k, rec in enumerate(records):
        eid = str(rec.get("id", f"e{k + 1}"))
        if eid in seen_ids:
            raise GraphFileError(f"duplicate edge id {eid!r}")
        seen_ids.add(eid)
        try:
            tail, head = index[str(rec["from"])], index[str(rec["to"])]
        except KeyError as exc:
            raise GraphFileError(f"edge {eid!r} references unknown vertex {exc}") from None
        try:
            c = float(rec.get("c", 1.0))
            mu = float(rec.get("mu", 1.0))
        except (TypeError, ValueError):
            raise GraphFileError(f"edge {eid!r} has a non-numeric weight") from None
        if not (c > 0 and np.isfinite(c)):
            raise NonpositiveWeight(f"edge {eid!r} has c={c}", eid)
        if not (mu > 0 and np.isfinite(mu)):
            raise NonpositiveWeight(f"edge {eid!r} has mu={mu}", eid)
        if tail == head:
            raise LoopEdge(f"edge {eid!r} is a loop at vertex {names[tail]!r}", eid)
        key = frozenset((tail, head))
        if key in seen_pairs:
            raise ParallelEdge(f"edge {eid!r} is parallel to edge {seen_pairs[key]!r}", eid)
        seen_pairs[key] = eid
        edges.append(Edge(eid, tail, head, c, mu))

    deg = np.zeros(len(names), dtype=int)
    for e in edges:
        deg[e.tail] += 1
        deg[e.head] += 1
    for i, d in enumerate(deg):
        if d < 2:
            raise DegreeBelowTwo(f"vertex {names[i]!r} has degree {d}", names[i])

    g = MetricGraph(tuple(names), tuple(edges))
    if not nx.is_connected(g.to_networkx()):
        comps = sorted(nx.connected_components(g.to_networkx()), key=min)
        stray = names[min(comps[1])]
        raise Disconnected(f"graph has {len(comps)} components; vertex {stray!r} "
                           f"is not reachable from {names[0]!r}", stray)
    return g


def from_edge_list(pairs: Iterable[tuple[int, int]], c=1.0, mu=1.0,
                   n: int | None = None) -> MetricGraph:
    """Build and validate a graph on vertices ``v1..vn`` from 0-based index pairs."""
    pairs = [(int(a), int(b)) for a, b in pairs]
    if n is None:
        n = 1 + max(max(p) for p in pairs)
    m = len(pairs)
    cs = np.broadcast_to(np.asarray(c, float), (m,))
    mus = np.broadcast_to(np.asarray(mu, float), (m,))
    raw = {
        "vertices": [f"v{i + 1}" for i in range(n)],
        "edges": [
            {"id": f"e{j + 1}", "from": f"v{a + 1}", "to": f"v{b + 1}",
             "c": float(cs[j]), "mu": float(mus[j])}
            for j, (a, b) in enumerate(pairs)
        ],
    }
    return validate(raw)


def cycle_graph(n: int, c=1.0, mu=1.0) -> MetricGraph:
    return from_edge_list([(i, (i + 1) % n) for i in range(n)], c=c, mu=mu)


def complete_graph(n: int, c=1.0, mu=1.0) -> MetricGraph:
    return from_edge_list([(i, k) for i in range(n) for k in range(i + 1, n)], c=c, mu=mu)


# ---------------------------------------------------------------------------
# graph file
# ---------------------------------------------------------------------------

def _line_of(text: str, token: str) -> int | None:
    m = re.search(re.escape(json.dumps(token)), text)
    return None if m is None else text.count("\n", 0, m.start()) + 1


def parse_graph_text(text: str) -> MetricGraph:
    """Parse a JSON graph document, rejecting unknown fields."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFileError(exc.msg, exc.lineno) from None
    if not isinstance(raw, dict):
        raise GraphFileError("top level must be an object", 1)
    for key in raw:
        if key not in _TOP_FIELDS:
            raise GraphFileError(f"unknown field {key!r}", _line_of(text, key))
    for key in _TOP_FIELDS:
        if key not in raw:
            raise GraphFileError(f"missing field {key!r}")
    if not isinstance(raw["vertices"], list) or not isinstance(raw["edges"], list):
        raise GraphFileError("'vertices' and 'edges' must be lists")
    for rec in raw["edges"]:
        if not isinstance(rec, dict):
            raise GraphFileError("edge records must be objects")
        for key in rec:
            if key not in _EDGE_FIELDS:
                raise GraphFileError(f"unknown edge field {key!r}", _line_of(text, key))
        for key in ("from", "to"):
            if key not in rec:
                raise GraphFileError(f"edge record missing {key!r}")
    return validate(raw)


def load_graph(path: str | Path) -> MetricGraph:
    return parse_graph_text(Path(path).read_text())


def dump_graph(g: MetricGraph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(g.to_dict(), indent=2) + "\n")


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IncidenceSet:
    phi_plus: np.ndarray
    phi_minus: np.ndarray
    phi: np.ndarray
    phi_w_plus: np.ndarray
    phi_w_minus: np.ndarray


def incidence(g: MetricGraph) -> IncidenceSet:
    """Tail/head incidence matrices and their ``mu_j c_j`` weighted versions."""
    cols = np.arange(g.m)
    pp = np.zeros((g.n, g.m), dtype=int)
    pm = np.zeros((g.n, g.m), dtype=int)
    pp[g.tails, cols] = 1
    pm[g.heads, cols] = 1
    w = g.mu * g.c
    return IncidenceSet(
        phi_plus=_frozen(pp),
        phi_minus=_frozen(pm),
        phi=_frozen(pp - pm),
        phi_w_plus=_frozen(pp * w),
        phi_w_minus=_frozen(pm * w),
    )


def adjacency(g: MetricGraph, weights: np.ndarray | None = None) -> np.ndarray:
    """0-1 adjacency matrix, or edge-weighted when ``weights`` is given."""
    w = np.ones(g.m) if weights is None else np.asarray(weights, float)
    A = np.zeros((g.n, g.n))
    A[g.tails, g.heads] = w
    A[g.heads, g.tails] = w
    return A


def degrees(g: MetricGraph) -> np.ndarray:
    return np.bincount(np.concatenate([g.tails, g.heads]), minlength=g.n)


def laplacian(g: MetricGraph) -> np.ndarray:
    """Combinatorial Laplacian D - A of the underlying simple graph."""
    return np.diag(degrees(g).astype(float)) - adjacency(g)


def transition_matrix(g: MetricGraph, weighted: bool = False) -> np.ndarray:
    """Random-walk matrix D^{-1} A.

    With ``weighted=True`` the walk steps along edge ``j`` with weight
    ``mu_j``; this is the matrix that governs unit-speed spectra when the
    Kirchhoff coefficients are not all equal.
    """
    A = adjacency(g, g.mu if weighted else None)
    return A / A.sum(axis=1, keepdims=True)


def transition_spectrum(g: MetricGraph, weighted: bool = False) -> np.ndarray:
    """Ascending eigenvalues of the transition matrix.

    D^{-1}A is similar to the symmetric D^{-1/2} A D^{-1/2}, so the
    spectrum is real and computed with a symmetric solver.
    """
    A = adjacency(g, g.mu if weighted else None)
    s = 1.0 / np.sqrt(A.sum(axis=1))
    return np.linalg.eigvalsh(s[:, None] * A * s[None, :])


def bipartition(g: MetricGraph) -> tuple[list[str], list[str]] | None:
    """Two-colouring of the vertices, or ``None`` if there is an odd cycle."""
    G = g.to_networkx()
    if not nx.is_bipartite(G):
        return None
    colour = nx.bipartite.color(G)
    first = [g.vertices[i] for i in range(g.n) if colour[i] == colour[0]]
    second = [g.vertices[i] for i in range(g.n) if colour[i] != colour[0]]
    return first, second


def edge_connectivity(g: MetricGraph) -> int:
    # networkx: minimum over max-flow cuts from a fixed vertex
    return int(nx.edge_connectivity(g.to_networkx()))


def diameter(g: MetricGraph) -> int:
    """Largest shortest-path distance, counted in edges."""
    return int(nx.diameter(g.to_networkx()))


@dataclass(frozen=True)
class GraphParams:
    degree: tuple[int, ...]
    gamma: int | None
    bipartition: tuple[list[str], list[str]] | None
    eta: int
    diam: int
    nu: np.ndarray

    @property
    def nu2(self) -> float:
        return float(self.nu[1])

    @property
    def is_regular(self) -> bool:
        return self.gamma is not None


def graph_params(g: MetricGraph) -> GraphParams:
    deg = degrees(g)
    nu = np.linalg.eigvalsh(laplacian(g))
    if abs(nu[0]) < 1e-10:
        nu[0] = 0.0  # constants span the kernel exactly
    return GraphParams(
        degree=tuple(int(d) for d in deg),
        gamma=int(deg[0]) if np.all(deg == deg[0]) else None,
        bipartition=bipartition(g),
        eta=edge_connectivity(g),
        diam=diameter(g),
        nu=_frozen(nu),
    )


def enumerate_graphs(max_n: int, min_n: int = 3) -> list[MetricGraph]:
    """All connected simple graphs with minimum degree >= 2 and ``min_n <= n <= max_n``.

    One representative per isomorphism class, taken from the graph atlas
    (which covers up to seven vertices).
    """
    if max_n > 7:
        raise ValueError("the graph atlas only covers n <= 7")
    out = []
    for G in nx.graph_atlas_g():
        n = G.number_of_nodes()
        if n < min_n or n > max_n or G.number_of_edges() == 0:
            continue
        if min(d for _, d in G.degree()) < 2 or not nx.is_connected(G):
            continue
        out.append(from_edge_list(sorted(G.edges()), n=n))
    return out


def regular_graphs(graphs: Sequence[MetricGraph]) -> list[MetricGraph]:
    return [g for g in graphs if np.all(degrees(g) == degrees(g)[0])]
