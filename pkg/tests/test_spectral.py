import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metricnet.errors import KernelMismatch, NotUnitSpeed, SingularLambda
from metricnet.graph import (complete_graph, cycle_graph, enumerate_graphs, from_edge_list,
                             incidence, laplacian)
from metricnet.oracle import assemble, oracle_values
from metricnet.spectral import (EigenClass, ScanOptions, domain_defects, eigen_residual,
                                eigenfunction_from_kernel, generalized_adjacency,
                                generalized_adjacency_incidence, generalized_degree,
                                generalized_degree_incidence, generalized_laplacian,
                                scan_sigma_L, secular_determinant, sigma_C_check,
                                sigma_k_multiplicity, singular_points, spectrum,
                                unit_speed_spectrum, weighted_graph_laplacian, x2_inner)

PI = math.pi
GRAPHS5 = enumerate_graphs(5)


def admissible_lambda(rng, g, lo=0.3, hi=60.0):
    while True:
        lam = rng.uniform(lo, hi)
        w = np.sqrt(lam / g.c)
        if np.min(np.abs(w - PI * np.round(w / PI))) > 1e-3:
            return lam


class TestGeneralizedMatrices:
    def test_entries_by_hand(self):
        g = cycle_graph(3, c=[1.0, 4.0, 2.0], mu=[1.0, 0.5, 3.0])
        lam = 2.0
        A = generalized_adjacency(g, lam)
        # edge e2 joins v2 and v3 with c=4, mu=0.5
        assert A[1, 2] == pytest.approx(0.5 * 2.0 / math.sin(math.sqrt(lam / 4.0)), rel=1e-14)
        D = generalized_degree(g, lam)
        expect = 1.0 / math.tan(math.sqrt(lam)) + 3.0 * math.sqrt(2) / math.tan(1.0)
        assert D[0, 0] == pytest.approx(expect, rel=1e-14)

    def test_k3_values(self, k3):
        A = generalized_adjacency(k3, PI ** 2 / 4)
        assert np.allclose(A, np.ones((3, 3)) - np.eye(3), atol=1e-15)
        assert np.allclose(np.diag(generalized_degree(k3, PI ** 2 / 4)), 0.0, atol=1e-15)
        assert np.allclose(np.diag(generalized_degree(k3, PI ** 2 / 9)), 2 / math.sqrt(3), rtol=1e-14)

    @given(st.sampled_from(GRAPHS5), st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_incidence_products(self, g, seed):
        rng = np.random.default_rng(seed)
        g = g.with_weights(c=rng.uniform(.2, 5, g.m), mu=rng.uniform(.2, 5, g.m))
        lam = admissible_lambda(rng, g)
        scale = max(1.0, np.max(np.abs(generalized_adjacency(g, lam))))
        assert np.max(np.abs(generalized_adjacency(g, lam) - generalized_adjacency_incidence(g, lam))) < 1e-12 * scale
        assert np.max(np.abs(generalized_degree(g, lam) - generalized_degree_incidence(g, lam))) < 1e-12 * scale

    def test_singular_rejected(self, k3):
        with pytest.raises(SingularLambda):
            generalized_laplacian(k3, PI ** 2)
        with pytest.raises(SingularLambda):
            secular_determinant(k3, 0.0)

    def test_small_lambda_limit(self):
        # lam * L_C(lam) -> weighted combinatorial Laplacian as lam -> 0, up to sqrt(c) scaling
        g = cycle_graph(4, c=[1, 2, 3, 4], mu=[1, 2, 1, 2])
        lam = 1e-8
        L = generalized_laplacian(g, lam) * math.sqrt(lam)
        inc = incidence(g)
        expect = inc.phi @ np.diag(g.mu * g.c) @ inc.phi.T
        assert np.allclose(L, expect, atol=1e-6)
        assert np.allclose(weighted_graph_laplacian(g), expect)

    def test_unit_speed_relation(self, k4):
        # for c = 1: L_C(lam) = (D cos w - A) / sin w
        lam = 7.3
        w = math.sqrt(lam)
        A = np.ones((4, 4)) - np.eye(4)
        expect = (3 * math.cos(w) * np.eye(4) - A) / math.sin(w)
        assert np.allclose(generalized_laplacian(k4, lam), expect, atol=1e-13)


class TestClosedForm:
    def test_k3(self, k3):
        r = unit_speed_spectrum(k3, 20)
        lam23 = math.acos(-0.5) ** 2
        assert [p.multiplicity for p in r.pairs] == [1, 2, 2]
        assert r.pairs[1].lam == pytest.approx(4 * PI ** 2 / 9, rel=1e-14)
        assert r.pairs[1].lam == pytest.approx(lam23, rel=1e-14)
        assert r.pairs[2].lam == pytest.approx((2 * PI - 2 * PI / 3) ** 2, rel=1e-14)

    def test_c4(self, c4):
        r = unit_speed_spectrum(c4, 40)
        assert np.allclose([p.lam for p in r.pairs], [0, PI ** 2 / 4, PI ** 2, 9 * PI ** 2 / 4, 4 * PI ** 2])
        assert [p.multiplicity for p in r.pairs] == [1, 2, 2, 2, 2]

    def test_k4(self, k4):
        r = unit_speed_spectrum(k4, 40)
        theta = math.acos(-1 / 3)
        assert np.allclose([p.lam for p in r.pairs],
                           [0, theta ** 2, PI ** 2, (2 * PI - theta) ** 2, 4 * PI ** 2])
        assert [p.multiplicity for p in r.pairs] == [1, 3, 2, 3, 4]

    @pytest.mark.parametrize("n", [3, 4, 5, 6, 7])
    def test_cycle_against_circle(self, n):
        # C_n with unit edges is a circle of length n: eigenvalues (2 pi k / n)^2, double for k > 0
        lams = unit_speed_spectrum(cycle_graph(n), 150).eigenvalues()
        k = np.arange(1, 60)
        expect = np.sort(np.concatenate([[0.0], np.repeat((2 * PI * k / n) ** 2, 2)]))
        expect = expect[expect <= 150]
        assert np.allclose(lams, expect, rtol=1e-12, atol=1e-12)

    def test_not_unit_speed(self):
        with pytest.raises(NotUnitSpeed):
            unit_speed_spectrum(cycle_graph(4, c=[1, 1, 4, 4]), 10)

    def test_sigma_k_rule(self, k3, c4, k4):
        assert [sigma_k_multiplicity(k3, k) for k in (1, 2)] == [0, 2]
        assert [sigma_k_multiplicity(c4, k) for k in (1, 2, 3)] == [2, 2, 2]
        assert [sigma_k_multiplicity(k4, k) for k in (1, 2)] == [2, 4]

    def test_sigma_C_check_k3_odd_absent(self, k3):
        assert sigma_C_check(k3, 0, 1) is None
        assert sigma_C_check(k3, 0, 2).multiplicity == 2


class TestScan:
    @pytest.mark.parametrize("g", [complete_graph(3), cycle_graph(4), complete_graph(4), cycle_graph(5),
                                   from_edge_list([(0, 1), (1, 2), (2, 0), (2, 3), (3, 0)])])
    def test_matches_closed_form(self, g):
        a = spectrum(g, 250, "closed-form")
        b = spectrum(g, 250, "scan")
        assert [p.multiplicity for p in a.pairs] == [p.multiplicity for p in b.pairs]
        assert np.allclose(a.eigenvalues(), b.eigenvalues(), rtol=1e-11, atol=1e-12)

    def test_jobs_do_not_change_output(self):
        g = cycle_graph(5, c=[1, 2, 1, 3, 1.5])
        assert spectrum(g, 200, "scan").to_csv() == spectrum(g, 200, "scan", ScanOptions(jobs=4)).to_csv()

    def test_singular_points(self):
        g = cycle_graph(4, c=[1, 1, 4, 4])
        assert np.allclose(singular_points(g, 40), [PI ** 2, 4 * PI ** 2])

    def test_roots_are_kernels(self):
        g = cycle_graph(4, c=[1, 1, 4, 4], mu=[1, 2, 1, 2])
        for root in scan_sigma_L(g, 120):
            L = generalized_laplacian(g, root.lam)
            s = np.linalg.svd(L, compute_uv=False)
            assert s[-1] < 1e-8 * s[0]
            assert np.sum(s < 1e-8 * s[0]) == root.dim

    def test_two_speed_against_oracle(self):
        g = cycle_graph(4, c=[1, 1, 4, 4])
        lams = spectrum(g, 40, "scan").eigenvalues()
        fem = oracle_values(assemble(g, 1 / 100), lams.size)
        assert np.allclose(lams, fem, rtol=2e-3, atol=1e-9)


class TestOrientation:
    @given(st.sampled_from(GRAPHS5), st.integers(0, 2**32 - 1))
    @settings(max_examples=15, deadline=None)
    def test_flip_invariance(self, g, seed):
        rng = np.random.default_rng(seed)
        g = g.with_weights(c=rng.choice([1.0, 2.0, 0.5], g.m), mu=rng.uniform(.5, 2, g.m))
        h = g
        for j in np.flatnonzero(rng.random(g.m) < 0.5):
            h = h.flipped(int(j))
        a = spectrum(g, 80, "scan")
        b = spectrum(h, 80, "scan")
        assert [p.multiplicity for p in a.pairs] == [p.multiplicity for p in b.pairs]
        assert np.allclose(a.eigenvalues(), b.eigenvalues(), rtol=1e-10, atol=1e-12)


class TestEigenfunctions:
    @pytest.mark.parametrize("g", [complete_graph(3), cycle_graph(4), complete_graph(4),
                                   cycle_graph(4, c=[1, 1, 4, 4], mu=[1, 3, 1, 2]),
                                   from_edge_list([(0, 1), (1, 2), (2, 0), (2, 3), (3, 0)], c=[1, 2, 1, 2, 1])])
    def test_domain_and_orthonormality(self, g):
        r = spectrum(g, 120)
        funcs = r.eigenfunctions()
        for f in funcs:
            cont, kir = domain_defects(g, f)
            assert cont < 1e-10 and kir < 1e-8 * (1 + f.lam)
            assert eigen_residual(g, f) < 1e-9 * (1 + f.lam)
        for p in r.pairs:
            G = np.array([[x2_inner(g, f, h) for h in p.eigenfunctions] for f in p.eigenfunctions])
            assert np.allclose(G, np.eye(p.multiplicity), atol=1e-12)
        # all pairs, by Gauss-Legendre quadrature
        x, w = np.polynomial.legendre.leggauss(80)
        x, w = (x + 1) / 2, w / 2
        V = np.array([f(x) for f in funcs]) * np.sqrt(g.mu)[None, :, None] * np.sqrt(w)
        V = V.reshape(len(funcs), -1)
        assert np.allclose(V @ V.T, np.eye(len(funcs)), atol=1e-10)

    def test_classes(self, c4):
        kinds = [p.kind for p in spectrum(c4, 12).pairs]
        assert kinds == [EigenClass.ZERO, EigenClass.SIGMA_L, EigenClass.SIGMA_C]

    def test_kernel_mismatch(self, k3):
        with pytest.raises(KernelMismatch):
            eigenfunction_from_kernel(k3, 4.0, np.array([1.0, 0.0, 0.0]))

    def test_zero_mode_constant(self):
        g = cycle_graph(4, mu=[1, 2, 3, 4])
        f = spectrum(g, 5).pairs[0].eigenfunctions[0]
        assert np.allclose(f(np.linspace(0, 1, 5)), 1 / math.sqrt(10))


class TestReport:
    def test_csv(self, k3):
        text = spectrum(k3, 20).to_csv()
        rows = list(csv.reader(io.StringIO(text)))
        assert rows[0] == ["lambda", "multiplicity", "class", "method"]
        assert [r[1] for r in rows[1:]] == ["1", "2", "2"]
        assert float(rows[2][0]) == pytest.approx(4.38649, abs=1e-5)
        assert float(rows[3][0]) == pytest.approx(17.54596, abs=1e-5)
        assert "\r" not in text

    def test_json_roundtrip_values(self, c4):
        import json
        d = json.loads(spectrum(c4, 12).to_json())
        assert d["method"] == "unit-speed-closed-form"
        assert [e["multiplicity"] for e in d["eigenvalues"]] == [1, 2, 2]

    def test_second(self, k4):
        assert spectrum(k4, 10).second().lam == pytest.approx(math.acos(-1 / 3) ** 2)

    def test_laplacian_spectrum_unchanged(self, k3):
        assert np.allclose(np.linalg.eigvalsh(laplacian(k3)), [0, 3, 3])
