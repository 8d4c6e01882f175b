"""
Tests for the metric catalog and pointwise geometry (src/spacetime.py,
src/metrics/).
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.errors import BaseMismatch, DomainError, SignatureError, UnknownModel, ZeroVector
from src.metrics import METRICS, build_model
from src.spacetime import (
    CausalType,
    ChartDomain,
    MetricModel,
    christoffel_at,
    christoffel_from_metric,
    classify,
    curvature_at,
    inner,
    lorentzian_signature_ok,
    metric_at,
    ricci_along,
)


def kretschmann(sample) -> float:
    low = sample.lowered
    ginv = np.linalg.inv(sample.metric)
    up = np.einsum("ae,bf,cg,dh,efgh->abcd", ginv, ginv, ginv, ginv, low)
    return float(np.einsum("abcd,abcd->", low, up))


# ── catalog ──────────────────────────────────────────────────────────────

class TestCatalog:
    @pytest.mark.parametrize("spec", [
        "minkowski{n=3}", "minkowski{n=5}", "schwarzschild{M=2}", "schwarzschild_ef",
        "desitter{H=0.5,n=5}", "ppwave{n=4,amplitude=0.5,shear=0.1}",
    ])
    def test_every_model_is_lorentzian(self, spec):
        model = build_model(spec)
        x = {"schwarzschild": [0, 6 * model.params.get("M", 1), 1.2, 0.3],
             "schwarzschild_ef": [0, 3, 1.2, 0.3]}.get(model.name, [0.1] * model.n)
        assert lorentzian_signature_ok(metric_at(model, model.point(*x)))

    def test_registry_names(self):
        assert set(METRICS) == {"minkowski", "schwarzschild", "schwarzschild_ef", "desitter", "ppwave"}

    def test_unknown_model_lists_available(self):
        with pytest.raises(UnknownModel, match="Available: minkowski"):
            build_model("kerr{a=0.9}")

    @pytest.mark.parametrize("spec", ["schwarzschild{M=-1}", "desitter{H=0}", "minkowski{n=2}",
                                      "ppwave{n=3,shear=0.2}"])
    def test_bad_parameters_rejected(self, spec):
        with pytest.raises(ValueError):
            build_model(spec)

    def test_tuple_spec(self):
        assert build_model(("Schwarzschild", {"M": 3.0})).params == {"M": 3.0}


# ── points and vectors ───────────────────────────────────────────────────

class TestPointsAndVectors:
    def test_point_needs_n_coordinates(self, minkowski4):
        with pytest.raises(DomainError):
            minkowski4.point(0.0, 1.0)

    def test_point_outside_chart(self, schwarzschild):
        with pytest.raises(DomainError, match="outside"):
            metric_at(schwarzschild, schwarzschild.point(0.0, 1.5, 1.0, 0.0))

    def test_point_from_another_chart(self, schwarzschild, schwarzschild_ef):
        p = schwarzschild_ef.point(0.0, 6.0, 1.0, 0.0)
        with pytest.raises(DomainError, match="chart"):
            metric_at(schwarzschild, p)

    @pytest.mark.parametrize("diagonal", [[1.0, 1.0, 1.0, 1.0], [-1.0, -1.0, 1.0, 1.0], [-1.0, 0.0, 1.0, 1.0]])
    def test_non_lorentzian_metric_rejected(self, diagonal):
        model = MetricModel(
            name="custom", n=4, params={}, chart_id="custom", coordinate_names=("t", "x", "y", "z"),
            metric_fn=lambda x: np.diag(diagonal), domain=ChartDomain(((None, None),) * 4),
        )
        p = model.point(0.0, 0.0, 0.0, 0.0)
        with pytest.raises(SignatureError, match="not Lorentzian"):
            metric_at(model, p)
        with pytest.raises(SignatureError):
            inner(model, p, model.vector(p, [1, 0, 0, 0]), model.vector(p, [1, 0, 0, 0]))

    def test_ef_chart_crosses_horizon(self, schwarzschild_ef):
        g = metric_at(schwarzschild_ef, schwarzschild_ef.point(0.0, 1.0, 1.0, 0.0))
        assert lorentzian_signature_ok(g)

    def test_stencil_near_boundary_rejected(self, schwarzschild):
        # analytic connection, but curvature differentiates it
        p = schwarzschild.point(0.0, 2.0 + 1e-7, 1.0, 0.0)
        with pytest.raises(DomainError, match="stencil"):
            curvature_at(schwarzschild, p)


class TestInnerAndClassify:
    @pytest.mark.parametrize("components, expected", [
        ((1.0, 1.0, 0.0, 0.0), CausalType.NULL),
        ((1.0, 0.0, 0.0, 0.0), CausalType.TIMELIKE),
        ((0.0, 0.0, 1.0, 0.0), CausalType.SPACELIKE),
        ((1.0, 0.6, 0.8, 0.0), CausalType.NULL),
    ])
    def test_classify_minkowski(self, minkowski4, components, expected):
        p = minkowski4.point(0, 0, 0, 0)
        assert classify(minkowski4, p, minkowski4.vector(p, components)) == expected

    def test_classify_zero_vector(self, minkowski4):
        p = minkowski4.point(0, 0, 0, 0)
        with pytest.raises(ZeroVector):
            classify(minkowski4, p, minkowski4.vector(p, np.zeros(4)))

    def test_inner_rejects_other_base(self, minkowski4):
        p, q = minkowski4.point(0, 0, 0, 0), minkowski4.point(1, 0, 0, 0)
        with pytest.raises(BaseMismatch):
            inner(minkowski4, p, minkowski4.vector(q, [1, 0, 0, 0]), minkowski4.vector(p, [1, 0, 0, 0]))

    def test_inner_schwarzschild(self, schwarzschild):
        p = schwarzschild.point(0.0, 4.0, math.pi / 2, 0.0)
        t = schwarzschild.vector(p, [1, 0, 0, 0])
        assert inner(schwarzschild, p, t, t) == pytest.approx(-0.5)

    def test_ef_horizon_generator_is_null(self, schwarzschild_ef):
        p = schwarzschild_ef.point(0.0, 2.0, 1.0, 0.0)
        assert classify(schwarzschild_ef, p, schwarzschild_ef.vector(p, [1, 0, 0, 0])) == CausalType.NULL


# ── connection ───────────────────────────────────────────────────────────

class TestChristoffel:
    @pytest.mark.parametrize("spec, x", [
        ("schwarzschild{M=1}", [0.3, 5.0, 1.1, 0.4]),
        ("schwarzschild_ef{M=1}", [0.3, 1.5, 1.1, 0.4]),
        ("desitter{H=0.7,n=4}", [0.2, 0.1, -0.3, 0.5]),
        ("ppwave{amplitude=0.5,shear=0.1}", [0.2, 0.1, 0.7, -0.4]),
    ])
    def test_analytic_matches_finite_differences(self, spec, x):
        model = build_model(spec)
        x = np.array(x)
        analytic = model.christoffel_fn(x)
        numeric = christoffel_from_metric(model.metric_fn, x)
        np.testing.assert_allclose(numeric, analytic, atol=1e-8)

    @pytest.mark.parametrize("spec, x", [
        ("schwarzschild{M=1}", [0.3, 5.0, 1.1, 0.4]),
        ("desitter{H=0.7,n=4}", [0.2, 0.1, -0.3, 0.5]),
    ])
    def test_central_differences_are_second_order(self, spec, x):
        model = build_model(spec)
        x = np.array(x)
        analytic = model.christoffel_fn(x)
        errors = [float(np.max(np.abs(christoffel_from_metric(model.metric_fn, x, np.full(4, h)) - analytic)))
                  for h in (1e-2, 5e-3)]
        assert errors[1] > 0.0
        assert 3.8 <= errors[0] / errors[1] <= 4.2

    def test_christoffel_symmetric_in_lower_indices(self, schwarzschild):
        gam = christoffel_at(schwarzschild, schwarzschild.point(0.0, 7.0, 0.9, 1.0))
        np.testing.assert_allclose(gam, gam.transpose(0, 2, 1), atol=1e-14)

    def test_batched_coordinates(self, desitter):
        X = np.array([[0.0, 0.1, 0.2, 0.3], [0.5, -0.1, 0.0, 0.2]])
        batch = christoffel_from_metric(
            lambda y: np.stack([desitter.metric_fn(row) for row in y.reshape(-1, 4)]).reshape(y.shape[:-1] + (4, 4)),
            X,
        )
        for k in range(len(X)):
            np.testing.assert_allclose(batch[k], desitter.christoffel_fn(X[k]), atol=1e-8)


# ── curvature ────────────────────────────────────────────────────────────

class TestCurvature:
    def test_minkowski_is_flat(self, minkowski4):
        sample = curvature_at(minkowski4, minkowski4.point(1, 2, 3, 4))
        assert np.max(np.abs(sample.riemann)) == 0.0

    @pytest.mark.parametrize("r", [3.0, 6.0, 20.0])
    def test_schwarzschild_ricci_flat_and_kretschmann(self, schwarzschild, r):
        sample = curvature_at(schwarzschild, schwarzschild.point(0.0, r, 1.2, 0.0))
        assert np.max(np.abs(sample.ricci)) <= 1e-6
        assert kretschmann(sample) == pytest.approx(48.0 / r ** 6, rel=1e-5)

    def test_ef_matches_exterior_invariant(self, schwarzschild_ef):
        sample = curvature_at(schwarzschild_ef, schwarzschild_ef.point(0.0, 1.5, 1.2, 0.0))
        assert np.max(np.abs(sample.ricci)) <= 1e-6
        assert kretschmann(sample) == pytest.approx(48.0 / 1.5 ** 6, rel=1e-5)

    def test_desitter_is_einstein(self, desitter):
        p = desitter.point(0.4, 0.1, 0.2, -0.3)
        sample = curvature_at(desitter, p)
        np.testing.assert_allclose(sample.ricci, 3.0 * sample.metric, atol=1e-6)

    def test_ppwave_ricci_along_generator(self):
        model = build_model("ppwave{n=5,amplitude=0.5}")
        p = model.point(0.0, 0.0, 0.3, -0.2, 0.1)
        k = model.vector(p, [1, 0, 0, 0, 0])
        assert ricci_along(model, p, k) == pytest.approx(3 * 0.5, abs=1e-6)

    def test_symmetry_defects_vanish(self, schwarzschild):
        defects = curvature_at(schwarzschild, schwarzschild.point(0.0, 5.0, 1.0, 0.2)).symmetry_defect()
        assert set(defects) == {"antisym_first", "antisym_last", "pair_exchange", "bianchi", "ricci_sym"}
        assert max(defects.values()) <= 1e-6

    @settings(max_examples=25, deadline=None)
    @given(r=st.floats(min_value=2.5, max_value=40.0), theta=st.floats(min_value=0.2, max_value=2.9))
    def test_schwarzschild_null_energy_vanishes(self, r, theta):
        model = build_model("schwarzschild{M=1}")
        p = model.point(0.0, r, theta, 0.0)
        f = 1.0 - 2.0 / r
        k = model.vector(p, [1.0 / f, 1.0, 0.0, 0.0])
        assert abs(ricci_along(model, p, k)) <= 1e-6 * max(1.0, 1.0 / f ** 2)
