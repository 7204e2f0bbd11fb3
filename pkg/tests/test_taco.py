import numpy as np
import pytest

from stargraph import phase
from stargraph.graphon import StepGraphon
from stargraph.taco import (
    TacoPoint,
    boundary_bruteforce,
    cs_inequality,
    dual_inequality,
    involution,
    jacobian_poly,
    monotone_01_patterns,
)

from conftest import random_graphon


class TestInequalities:
    def test_er_equality(self):
        for p in (0.2, 0.5, 0.8):
            pt = TacoPoint(p, p * p, p**3)
            assert cs_inequality(pt) == pytest.approx(0.0, abs=1e-15)
            assert dual_inequality(involution(pt)) == pytest.approx(0.0, abs=1e-14)

    def test_unrealizable_point(self):
        assert cs_inequality(TacoPoint(0.5, 0.3, 0.1)) < 0

    def test_fuzz(self, rng):
        for _ in range(2000):
            g = random_graphon(rng)
            pt = TacoPoint.of(g)
            assert cs_inequality(pt) >= -1e-12
            assert dual_inequality(pt) >= -1e-12

    def test_dual_is_involution_image(self, rng):
        for _ in range(200):
            g = random_graphon(rng, K=3)
            pt = TacoPoint.of(g)
            assert dual_inequality(pt) == pytest.approx(
                cs_inequality(involution(pt)), abs=1e-14)


class TestInvolution:
    def test_involution_squared(self, rng):
        pt = TacoPoint(0.37, 0.2, 0.12)
        back = involution(involution(pt))
        assert back.t1 == pytest.approx(pt.t1, abs=1e-15)
        assert back.t2 == pytest.approx(pt.t2, abs=1e-15)
        assert back.t3 == pytest.approx(pt.t3, abs=1e-14)

    def test_matches_complement(self, rng):
        for _ in range(100):
            g = random_graphon(rng)
            q = involution(TacoPoint.of(g))
            comp = TacoPoint.of(g.complement())
            assert abs(q.t1 - comp.t1) < 1e-14
            assert abs(q.t2 - comp.t2) < 1e-14
            assert abs(q.t3 - comp.t3) < 1e-14

    def test_fixed_point_needs_half(self):
        pt = TacoPoint(0.5, 0.3, 0.2)
        assert involution(pt).t1 == pytest.approx(0.5, abs=0)
        pt2 = TacoPoint(0.4, 0.3, 0.2)
        assert involution(pt2).t1 != pytest.approx(0.4, abs=1e-3)


class TestJacobian:
    def test_degenerate_edge(self):
        assert jacobian_poly(1.0, 0.3, 0.3) == 0.0

    def test_sample_positive(self):
        assert jacobian_poly(0.5, 0.25, 0.25) > 0

    def test_grid_positive(self):
        n = 40
        a = np.linspace(1e-3, 1 - 1e-3, n)[:, None, None]
        x2 = np.linspace(1e-3, 1 - 1e-3, n)[None, :, None]
        x3 = np.linspace(1e-3, 1 - 1e-3, n)[None, None, :]
        vals = jacobian_poly(a, x2, x3)
        inside = np.broadcast_to((x2 + x3) < 1.0, vals.shape)
        assert np.min(vals[inside]) > 0.0


class TestPatterns:
    def test_count_and_monotonicity(self):
        pats = monotone_01_patterns()
        assert len(pats) == 8
        for p in pats:
            assert np.all(p == p.T)
            assert np.all(np.diff(p, axis=0) <= 0)
            assert np.all(np.diff(p, axis=1) <= 0)

    def test_extremes_present(self):
        pats = [p.tobytes() for p in monotone_01_patterns()]
        assert np.zeros((3, 3)).tobytes() in pats
        assert np.ones((3, 3)).tobytes() in pats


class TestBruteForce:
    @pytest.fixture(scope="class")
    def cloud(self):
        return boundary_bruteforce(100)

    def test_er_points_present(self, cloud):
        # one-block degenerations land exactly on the ER curve
        pts = cloud.points
        on_er = np.abs(pts[:, 1] - pts[:, 0] ** 2) < 1e-12
        ts = np.sort(pts[on_er][:, 0])
        assert ts.size > 50
        assert ts[0] == 0.0 and ts[-1] == 1.0

    def test_envelope_respects_inequalities(self, cloud):
        env = cloud.envelope
        cs = env[:, 0] * env[:, 1] - env[:, 2] ** 2
        dual = (1 - env[:, 0]) * (1 - 3 * env[:, 0] + 3 * env[:, 2] - env[:, 1]) \
            - (1 - 2 * env[:, 0] + env[:, 2]) ** 2
        assert cs.min() >= -1e-12
        assert dual.min() >= -1e-12

    def test_projection_matches_two_star_boundary(self, cloud):
        eps_c, sig = cloud.envelope_sigma2_profile(101)
        for e, s in zip(eps_c, sig):
            if 0.0 < e < 1.0:
                assert abs(s - (phase.upper_boundary(e, 2) - e * e)) < 0.01

    def test_resolution_stability(self, cloud):
        fine = boundary_bruteforce(200)

        def coarse_bins(cl, nb=25):
            pts = cl.points
            i1 = np.clip((pts[:, 0] * nb).astype(int), 0, nb - 1)
            i3 = np.clip((pts[:, 2] * nb).astype(int), 0, nb - 1)
            best = np.full(nb * nb, -np.inf)
            np.maximum.at(best, i1 * nb + i3, pts[:, 1])
            return best

        a, b = coarse_bins(cloud), coarse_bins(fine)
        mask = np.isfinite(a) & np.isfinite(b)
        assert np.max(np.abs(a[mask] - b[mask])) < 2 / 100

    def test_envelope_dominates_4podal_samples(self, cloud, rng):
        # random 0-1 doubly monotone 4-block graphons stay below the envelope
        bins = cloud.bins
        env_map = {}
        for t1, t3, t2 in cloud.envelope:
            env_map[(int(t1 * bins), int(t3 * bins))] = t2
        checked = 0
        for _ in range(300):
            cuts = np.sort(rng.uniform(0.05, 0.95, 3))
            c = np.diff(np.concatenate([[0.0], cuts, [1.0]]))
            thresholds = np.sort(rng.integers(0, 5, size=4))[::-1]
            g = np.zeros((4, 4))
            for i in range(4):
                g[i, : min(int(thresholds[i]), 4)] = 1.0
            g = np.minimum(g, g.T)
            if not np.all(g == g.T):
                continue
            gr = StepGraphon(c, g)
            t1, t2, t3 = gr.edge_density(), gr.star_density(2), gr.star_density(3)
            key = (min(int(t1 * bins), bins - 1), min(int(t3 * bins), bins - 1))
            if key in env_map:
                checked += 1
                assert t2 <= env_map[key] + 2.0 / cloud.resolution + 0.02
        assert checked > 100
