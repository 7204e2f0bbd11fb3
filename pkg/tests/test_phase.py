import numpy as np
import pytest
from numpy.testing import assert_allclose

from stargraph import phase
from stargraph.phase import (
    PhasePoint,
    UnverifiedStarOrderError,
    anticlique_graphon,
    anticlique_tau,
    boundary_samples,
    clique_graphon,
    clique_tau,
    crossing_point,
    er_curve,
    feasible,
    n2_ratio,
    step4_F,
    step4_f,
    step4_z,
    upper_boundary,
    verify_step4,
)

from conftest import random_graphon


class TestCurves:
    def test_er_endpoints(self):
        for k in (2, 5):
            assert er_curve(0.0, k) == 0.0
            assert er_curve(1.0, k) == 1.0
        assert er_curve(0.5, 2) == 0.25

    def test_er_matches_constant_graphon(self):
        from stargraph.graphon import constant_graphon
        g = constant_graphon(0.37)
        for k in (2, 3, 6):
            assert g.star_density(k) == pytest.approx(er_curve(0.37, k), abs=1e-14)

    def test_clique_graphon(self):
        g = clique_graphon(0.25)
        assert_allclose(g.c, [0.5, 0.5], atol=1e-15)
        assert g.edge_density() == pytest.approx(0.25, abs=1e-14)
        for k in (2, 3, 8):
            assert g.star_density(k) == pytest.approx(clique_tau(0.25, k), abs=1e-13)
        assert clique_graphon(0.81).star_density(3) == pytest.approx(0.81**2, abs=1e-13)

    def test_anticlique_graphon(self):
        g = anticlique_graphon(0.75)
        assert g.c[0] == pytest.approx(0.5, abs=1e-15)
        assert g.edge_density() == pytest.approx(0.75, abs=1e-14)
        for k in (2, 3, 8):
            assert g.star_density(k) == pytest.approx(anticlique_tau(0.75, k), abs=1e-13)

    def test_anticlique_small_eps_slope(self):
        eps = 1e-3
        assert anticlique_tau(eps, 2) == pytest.approx(eps / 2, abs=2e-6)

    def test_domain(self):
        for bad in (0.0, 1.0, -0.2, 1.3):
            with pytest.raises(ValueError):
                clique_graphon(bad)
            with pytest.raises(ValueError):
                anticlique_graphon(bad)


class TestCrossing:
    def test_known_points(self):
        assert crossing_point(2) == pytest.approx(0.5, abs=1e-9)
        assert crossing_point(3) == pytest.approx(0.75, abs=1e-9)

    def test_k10_regression(self):
        val = crossing_point(10)
        assert 0.75 < val < 1.0
        assert val > crossing_point(3)
        assert val == pytest.approx(0.9751247110383456, abs=1e-11)

    def test_strictly_increasing(self):
        vals = [crossing_point(k) for k in range(2, 31)]
        assert np.all(np.diff(vals) > 0)

    def test_unverified_k(self):
        with pytest.raises(UnverifiedStarOrderError):
            crossing_point(31)
        assert 0.99 < crossing_point(40, allow_unverified=True) < 1.0


class TestUpperBoundary:
    def test_value_at_half_k2(self):
        assert upper_boundary(0.5, 2) == pytest.approx(2 ** -1.5, abs=1e-12)

    def test_anticlique_branch(self):
        expect = anticlique_tau(0.25, 2)
        assert upper_boundary(0.25, 2) == pytest.approx(expect, abs=0)

    def test_clique_branch(self):
        assert upper_boundary(0.9, 3) == pytest.approx(0.81, abs=1e-13)

    def test_continuity_at_crossing(self):
        for k in (2, 3, 7, 30):
            eps0 = crossing_point(k)
            assert abs(anticlique_tau(eps0, k) - clique_tau(eps0, k)) < 1e-10

    def test_vectorized(self):
        eps = np.linspace(0.0, 1.0, 11)
        vals = upper_boundary(eps, 2)
        assert vals.shape == eps.shape


class TestStep4:
    def test_origin_values(self):
        for k in range(2, 31):
            assert step4_f(1.0, 1.0, k) == 0.0
            assert step4_F(1.0, 1.0, k) == 0.0

    def test_k2_degenerate_closed_form(self):
        # hand expansion: every x term cancels and f = 3 (z - 1)
        for x in (0.1, 0.5, 0.9):
            for z in (1.0, 1.5, 3.0):
                assert step4_f(x, z, 2) == pytest.approx(3 * (z - 1), abs=1e-12)
        assert step4_z(0.3, 2) == pytest.approx(1.0, abs=1e-14)

    def test_linear_in_z(self, rng):
        for k in (3, 7, 12):
            for _ in range(20):
                x = rng.uniform(0.01, 0.99)
                z1, z2, z3 = 1.0, 2.0, 3.0
                f1, f2, f3 = (step4_f(x, z, k) for z in (z1, z2, z3))
                assert f3 - f2 == pytest.approx(f2 - f1, rel=1e-10, abs=1e-10)

    def test_z_solves_f(self, rng):
        for k in (3, 10, 25):
            x = rng.uniform(0.01, 0.99, 50)
            z = step4_z(x, k)
            assert np.max(np.abs(step4_f(x, z, k))) < 1e-10

    def test_verify_pass_examples(self):
        for k in (3, 20):
            report = verify_step4(k, grid=10_000)
            assert report.passed
            assert report.max_F < 0

    def test_simple_zero_near_one(self):
        # F vanishes linearly at x=1 with slope k(k-1)/2
        for k in (3, 10, 20):
            val = step4_F(1 - 1e-4, step4_z(1 - 1e-4, k), k)
            assert abs(val) == pytest.approx(k * (k - 1) / 2 * 1e-4, rel=1e-2)

    def test_grid_floor(self):
        with pytest.raises(ValueError):
            verify_step4(3, grid=100)

    def test_all_k_pass(self):
        for k in range(2, 31):
            report = verify_step4(k, grid=10_000)
            assert report.passed, f"k={k}"
            assert report.inconsistencies == 0


class TestN2Ratio:
    def test_clique_limit(self):
        for k in (2, 6):
            assert n2_ratio(1.0, k) == 1.0

    def test_interior_minimum_k2(self):
        from scipy.optimize import minimize_scalar
        res = minimize_scalar(lambda z: n2_ratio(z, 2), bounds=(1.0, 50.0),
                              method="bounded")
        assert 1.0 < res.x < 50.0
        assert n2_ratio(res.x, 2) < 1.0

    def test_unimodal_scan(self):
        z = np.linspace(1.0, 40.0, 4000)
        vals = n2_ratio(z, 3)
        d = np.diff(vals)
        switch = np.nonzero(np.diff(np.sign(d)) != 0)[0]
        assert switch.size == 1

    def test_divergence(self):
        assert n2_ratio(1e6, 2) > 1e2

    def test_domain(self):
        with pytest.raises(ValueError):
            n2_ratio(0.5, 2)


class TestFeasible:
    def test_lower_boundary(self):
        assert feasible(PhasePoint(0.5, 0.25, 2))

    def test_above_upper(self):
        assert not feasible(PhasePoint(0.5, 0.36, 2))

    def test_known_interior_point(self):
        assert feasible(PhasePoint(0.3, 0.16844286, 2))

    def test_random_graphons_feasible(self, rng):
        for _ in range(1000):
            g = random_graphon(rng)
            eps = g.edge_density()
            for k in (2, 3, 5):
                assert feasible(PhasePoint(eps, g.star_density(k), k)), \
                    (eps, g.star_density(k), k)


class TestBoundarySamples:
    def test_rows(self):
        rows = boundary_samples(2, samples=11)
        assert len(rows) == 11
        assert rows[0][3] == "anticlique"
        assert rows[-1][3] == "clique"
        for eps, lo, hi, _ in rows:
            assert lo <= hi + 1e-12
