"""
Tests for touching pairs, support families and totally geodesic null
hypersurfaces (src/maxprin.py).
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.constants import COINCIDENCE_TOL
from src.errors import LatticeMismatch, UnknownHypersurface
from src.graphop import GraphGrid, build_profile
from src.maxprin import (
    HYPERSURFACES,
    TouchingPair,
    check_touching_hypotheses,
    coincidence_check,
    support_family_probe,
    support_family_rows,
    totally_geodesic_rows,
    verify_totally_geodesic,
)
from src.metrics import build_model

CENTER = (10, 10)


def grid(spec, points=21, extent=0.4):
    return GraphGrid.box([0.0, 0.0], extent, points, build_profile(spec, 4))


# ── touching pairs ───────────────────────────────────────────────────────

class TestTouchingHypotheses:
    def test_identical_null_sections_pass(self, flat_slab):
        pair = TouchingPair(flat_slab, grid("constant"), grid("constant"), CENTER)
        verdict = check_touching_hypotheses(pair)
        assert verdict.passed
        assert verdict.touch_gap == 0.0
        assert coincidence_check(pair, 0.1) == 0.0

    def test_future_cone_above_plane_fails(self, flat_slab):
        upper = grid("offset_cone{offset=1,t0=-1}")
        pair = TouchingPair(flat_slab, grid("constant"), upper, CENTER)
        verdict = check_touching_hypotheses(pair)
        assert not verdict.passed
        assert len(verdict.failures) == 1
        assert "theta(u2)" in verdict.failures[0]
        assert verdict.max_theta2 == pytest.approx(2.0, abs=1e-2)
        # farthest node within 0.1 of the centre sits at (0.08, 0.04)
        assert coincidence_check(pair, 0.1) == pytest.approx(math.sqrt(1.008) - 1.0, rel=1e-9)

    def test_past_cone_below_plane_fails(self, flat_slab):
        lower = grid("offset_past_cone{offset=1,t0=1}")
        verdict = check_touching_hypotheses(TouchingPair(flat_slab, lower, grid("constant"), CENTER))
        assert [f for f in verdict.failures if "theta(u1)" in f]
        assert verdict.min_theta1 == pytest.approx(-2.0, abs=1e-2)

    def test_ordering_and_touching_failures(self, flat_slab):
        verdict = check_touching_hypotheses(
            TouchingPair(flat_slab, grid("constant{c=0.1}"), grid("constant"), CENTER))
        assert any("ordering" in f for f in verdict.failures)
        assert any("touching" in f for f in verdict.failures)

    def test_smooth_mode_compares_expansions(self, flat_slab):
        lower = grid("offset_past_cone{offset=1,t0=1}")
        upper = grid("constant")
        pair = TouchingPair(flat_slab, lower, upper, CENTER)
        smooth = check_touching_hypotheses(pair, mode="smooth")
        assert not smooth.passed
        assert smooth.max_comparison_violation == pytest.approx(2.0, abs=1e-2)

    @settings(max_examples=25, deadline=None)
    @given(
        amplitude=st.one_of(st.just(0.0), st.floats(min_value=1e-3, max_value=0.15)),
        lam1=st.floats(min_value=0.1, max_value=1.0),
        lam2=st.floats(min_value=0.0, max_value=1.0),
        angle=st.floats(min_value=0.0, max_value=math.pi),
        k1=st.floats(min_value=-0.2, max_value=0.2),
        k2=st.floats(min_value=-0.2, max_value=0.2),
        node=st.tuples(st.integers(3, 17), st.integers(3, 17)),
    )
    def test_separated_touching_pair_breaks_a_hypothesis(self, flat_slab, amplitude, lam1, lam2, angle,
                                                        k1, k2, node):
        # u1 is a null hyperplane section (theta = 0); u2 lifts it by a convex
        # quadratic vanishing at the touching node, exact under central differences.
        lower = GraphGrid.box([0.0, 0.0], 0.4, 21, lambda x: x @ np.array([k1, k2]))
        rot = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
        q = rot @ np.diag([lam1, lam2]) @ rot.T
        offset = lower.points - lower.points[node]
        lift = amplitude * np.einsum("...i,ij,...j->...", offset, q, offset)
        pair = TouchingPair(flat_slab, lower, lower.with_u(lower.u + lift), node)

        verdict = check_touching_hypotheses(pair, theta_tol=1e-9)
        gap = coincidence_check(pair, 0.1)
        assert verdict.max_order_violation <= 1e-12 and verdict.touch_gap == 0.0
        if gap > COINCIDENCE_TOL:
            assert not verdict.passed
            assert any("theta(u2)" in f for f in verdict.failures)
        if verdict.passed:
            assert gap == 0.0
        assert (amplitude == 0.0) == verdict.passed

    def test_unknown_mode(self, flat_slab):
        pair = TouchingPair(flat_slab, grid("constant"), grid("constant"), CENTER)
        with pytest.raises(ValueError):
            check_touching_hypotheses(pair, mode="strict")

    def test_pair_on_different_lattices(self, flat_slab):
        with pytest.raises(LatticeMismatch):
            TouchingPair(flat_slab, grid("constant", points=21), grid("constant", points=11), CENTER)

    def test_touch_node_dimension(self, flat_slab):
        with pytest.raises(LatticeMismatch):
            TouchingPair(flat_slab, grid("constant"), grid("constant"), (10,))


# ── support families ─────────────────────────────────────────────────────

class TestSupportFamily:
    RADII = (0.5, 1.0, 2.0, 5.0)

    def test_flat_support_cones(self, flat_slab):
        report = support_family_probe(flat_slab, grid("constant"), CENTER, self.RADII)
        np.testing.assert_allclose(report.theta_lower, [-2.0 / r for r in self.RADII], rtol=1e-10)
        np.testing.assert_allclose(report.epsilons, [2.0 / r for r in self.RADII])
        np.testing.assert_allclose(report.hessian_min_eig, [-math.sqrt(2.0) / r for r in self.RADII],
                                   rtol=1e-6)
        np.testing.assert_allclose(report.ordering_margin, [math.sqrt(2.0) / r for r in self.RADII],
                                   rtol=1e-6)
        assert all(report.nec_holds)
        assert report.theta_bound_ok()
        assert report.k1 == pytest.approx(math.sqrt(2.0) / 0.5, rel=1e-6)
        assert report.point == (0.0, 0.0, 0.0, 0.0)
        np.testing.assert_allclose(report.K, [1.0, 0.0, 0.0, 1.0])

    def test_tilted_graph_stays_supported(self, flat_slab):
        report = support_family_probe(flat_slab, grid("linear{k1=0.3,k2=-0.2}"), CENTER, self.RADII)
        for theta, eps in zip(report.theta_lower, report.epsilons):
            assert theta == pytest.approx(-eps, rel=1e-9)
        assert all(m > 0 for m in report.ordering_margin)

    def test_boundary_node_rejected(self, flat_slab):
        with pytest.raises(LatticeMismatch):
            support_family_probe(flat_slab, grid("constant"), (0, 10), self.RADII)

    def test_rows(self, flat_slab):
        report = support_family_probe(flat_slab, grid("constant", points=5), (2, 2), (1.0,))
        header, rows = support_family_rows(report)
        assert header == ["r", "epsilon", "theta_lower", "hessian_min_eig", "ordering_margin", "nec_holds"]
        assert rows[0][0] == 1.0 and rows[0][-1] == 1.0


# ── totally geodesic hypersurfaces ───────────────────────────────────────

class TestTotallyGeodesic:
    @pytest.mark.parametrize("hypersurface, metric", [
        ("minkowski_null_hyperplane", "minkowski{n=4}"),
        ("schwarzschild_horizon", "schwarzschild_ef{M=1}"),
        ("desitter_horizon", "desitter{H=1,n=4}"),
    ])
    def test_catalog_hypersurfaces_are_totally_geodesic(self, hypersurface, metric):
        report = verify_totally_geodesic(build_model(metric), hypersurface, sample_count=4, span=3.0, seed=1)
        assert report.max_B_norm <= 1e-7
        assert len(report.samples) == 4

    def test_registry(self):
        assert set(HYPERSURFACES) == {"minkowski_null_hyperplane", "schwarzschild_horizon", "desitter_horizon"}

    def test_unknown_hypersurface(self, minkowski4):
        with pytest.raises(UnknownHypersurface, match="Available"):
            verify_totally_geodesic(minkowski4, "kerr_horizon")

    def test_hypersurface_in_wrong_model(self, schwarzschild):
        with pytest.raises(UnknownHypersurface):
            verify_totally_geodesic(schwarzschild, "schwarzschild_horizon")

    def test_threads_give_identical_report(self, monkeypatch, schwarzschild_ef):
        monkeypatch.delenv("NULLGEO_THREADS", raising=False)
        serial = verify_totally_geodesic(schwarzschild_ef, "schwarzschild_horizon", sample_count=3, span=2.0)
        monkeypatch.setenv("NULLGEO_THREADS", "3")
        threaded = verify_totally_geodesic(schwarzschild_ef, "schwarzschild_horizon", sample_count=3, span=2.0)
        assert threaded.max_B_norm == serial.max_B_norm
        assert totally_geodesic_rows(threaded) == totally_geodesic_rows(serial)
