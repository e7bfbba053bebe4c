import itertools
from collections import deque

import numpy as np
import pytest

from metricnet.graph import complete_graph, cycle_graph, enumerate_graphs


@pytest.fixture(scope="session")
def small_graphs():
    return enumerate_graphs(6)


@pytest.fixture
def k3():
    return complete_graph(3)


@pytest.fixture
def c4():
    return cycle_graph(4)


@pytest.fixture
def k4():
    return complete_graph(4)


# Independent brute-force references, deliberately naive.

def bfs_diameter(n, edges):
    adj = {i: set() for i in range(n)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    best = 0
    for s in range(n):
        dist = {s: 0}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        best = max(best, max(dist.values()))
    return best


def _connected(n, edges):
    seen, stack = {0}, [0]
    while stack:
        u = stack.pop()
        for a, b in edges:
            for x, y in ((a, b), (b, a)):
                if x == u and y not in seen:
                    seen.add(y)
                    stack.append(y)
    return len(seen) == n


def brute_edge_connectivity(n, edges):
    edges = list(edges)
    for k in range(1, len(edges) + 1):
        for cut in itertools.combinations(range(len(edges)), k):
            rest = [e for i, e in enumerate(edges) if i not in cut]
            if not _connected(n, rest):
                return k
    return len(edges)


def edge_pairs(g):
    return [(e.tail, e.head) for e in g.edges]


def rank_by_elimination(A, tol=1e-9):
    A = np.array(A, float)
    r = 0
    rows, cols = A.shape
    for c in range(cols):
        piv = max(range(r, rows), key=lambda i: abs(A[i, c]), default=None)
        if piv is None or abs(A[piv, c]) < tol:
            continue
        A[[r, piv]] = A[[piv, r]]
        A[r + 1:] -= np.outer(A[r + 1:, c] / A[r, c], A[r])
        r += 1
        if r == rows:
            break
    return r


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
