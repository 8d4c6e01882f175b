"""
Timelike slabs P in product form  -dt² + g_ij(t, x) dx^i dx^j.

Slab coordinates are ``Y = (t, x^1, ..., x^{n-2})``.  Every field evaluator
takes ``Y`` with arbitrary leading batch axes, ``(..., n-1)``, so the graph
operator can evaluate a whole lattice at once.  ``beta`` is the second
fundamental form of P with respect to the unit normal N, including the
t-index, so ``B_P(Z, Z) = beta_ab Z^a Z^b``.

Catalog:

* ``minkowski_hyperplane{side, a}``     P = {x^{n-1} = 0}, N = side·∂_{n-1}
* ``minkowski_cylinder{rho, side, a}``  P = {(x1)² + (x2)² = rho²}, arc-length y1
* ``schwarzschild_phi0{M, r0, a}``      P = {phi = 0} in free-fall (Lemaitre)
                                        coordinates (tau, rho, theta)
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .constants import (
    FD_STEP,
    JACOBIAN_FD_STEP,
    SCHWARZSCHILD,
    MINKOWSKI,
    SLAB_MINKOWSKI_CYLINDER,
    SLAB_MINKOWSKI_HYPERPLANE,
    SLAB_SCHWARZSCHILD_PHI0,
)
from .errors import DomainError, NotTimelike, UnknownModel
from .spacetime import (
    MetricModel,
    SpacetimePoint,
    TangentVector,
    christoffel_from_metric,
    connection_fn,
    lorentzian_signature_ok,
)
from .utils import fd_steps, parse_spec

logger = logging.getLogger(__name__)

FieldFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SlabChart:
    name: str
    model: MetricModel = field(repr=False)
    params: Mapping[str, float]
    t_range: tuple[float, float]
    center: tuple[float, ...]
    spatial_metric: FieldFn = field(repr=False, compare=False)
    beta: FieldFn = field(repr=False, compare=False)
    mean_curvature: FieldFn = field(repr=False, compare=False)
    embedding: FieldFn = field(repr=False, compare=False)
    normal: FieldFn = field(repr=False, compare=False)
    valid: FieldFn | None = field(default=None, repr=False, compare=False)

    @property
    def dim_v(self) -> int:
        return self.model.n - 2

    # ── induced geometry ──────────────────────────────────────────────────

    def slab_metric(self, Y: np.ndarray) -> np.ndarray:
        """Full induced metric on P, block diag(-1, g_ij)."""
        Y = np.asarray(Y, dtype=float)
        d = self.dim_v
        out = np.zeros(Y.shape[:-1] + (d + 1, d + 1))
        out[..., 0, 0] = -1.0
        out[..., 1:, 1:] = self.spatial_metric(Y)
        return out

    def christoffel(self, Y: np.ndarray) -> np.ndarray:
        return christoffel_from_metric(self.slab_metric, Y)

    def dt_metric(self, Y: np.ndarray) -> np.ndarray:
        """∂_t g_ij by central differences."""
        Y = np.asarray(Y, dtype=float)
        step = fd_steps(Y[..., 0], FD_STEP)
        shift = np.zeros_like(Y)
        shift[..., 0] = step
        return (self.spatial_metric(Y + shift) - self.spatial_metric(Y - shift)) / (2.0 * step[..., None, None])

    def contains(self, Y: np.ndarray) -> np.ndarray:
        Y = np.asarray(Y, dtype=float)
        lo, hi = self.t_range
        ok = (Y[..., 0] > lo) & (Y[..., 0] < hi)
        if self.valid is not None:
            ok &= self.valid(Y)
        return ok

    # ── ambient lifts ─────────────────────────────────────────────────────

    def lift(self, Y: np.ndarray) -> SpacetimePoint:
        Y = np.asarray(Y, dtype=float)
        if not bool(self.contains(Y)):
            raise DomainError(f"Slab point {tuple(Y)} is outside '{self.name}'")
        return self.model.point(self.embedding(Y))

    def embedding_jacobian(self, Y: np.ndarray) -> np.ndarray:
        """∂X^μ/∂Y^a, shape (n, n-1), by fourth-order central differences.

        Lifted null normals stay null to within the classification tolerance.
        """
        Y = np.asarray(Y, dtype=float)
        steps = fd_steps(Y, JACOBIAN_FD_STEP)
        cols = []
        for a in range(Y.size):
            e = np.zeros_like(Y)
            e[a] = steps[a]
            col = (-self.embedding(Y + 2 * e) + 8 * self.embedding(Y + e)
                   - 8 * self.embedding(Y - e) + self.embedding(Y - 2 * e)) / (12.0 * steps[a])
            cols.append(col)
        return np.stack(cols, axis=1)

    def lift_vector(self, Y: np.ndarray, w: np.ndarray) -> TangentVector:
        """Ambient image of the slab vector *w* at *Y*."""
        p = self.lift(Y)
        return self.model.vector(p, self.embedding_jacobian(Y) @ np.asarray(w, dtype=float))

    def normal_at(self, Y: np.ndarray) -> TangentVector:
        p = self.lift(Y)
        return self.model.vector(p, self.normal(np.asarray(Y, dtype=float)))


@dataclass(frozen=True)
class SlabConsistency:
    product_form: float
    normal_unit: float
    normal_orthogonal: float
    beta: float
    mean_curvature: float
    samples: int

    def worst(self) -> float:
        return max(self.product_form, self.normal_unit, self.normal_orthogonal,
                   self.beta, self.mean_curvature)


# ── catalog builders ──────────────────────────────────────────────────────

def _side(params: Mapping[str, float]) -> float:
    side = float(params.get("side", 1.0))
    if side not in (1.0, -1.0):
        raise ValueError(f"side must be +1 or -1 (got {side})")
    return side


def _half_width(params: Mapping[str, float]) -> float:
    a = float(params.get("a", 10.0))
    if a <= 0.0:
        raise ValueError(f"Slab half-width a must be positive (got {a})")
    return a


def _require(model: MetricModel, name: str, slab: str) -> None:
    if model.name != name:
        raise UnknownModel(f"Slab '{slab}' lives in '{name}', not '{model.name}'")


def _minkowski_hyperplane(model: MetricModel, params: Mapping[str, float]) -> SlabChart:
    _require(model, MINKOWSKI, SLAB_MINKOWSKI_HYPERPLANE)
    n = model.n
    d = n - 2
    side = _side(params)
    a = _half_width(params)
    normal = np.zeros(n)
    normal[-1] = side

    def spatial_metric(Y):
        Y = np.asarray(Y, dtype=float)
        return np.broadcast_to(np.eye(d), Y.shape[:-1] + (d, d)).copy()

    def beta(Y):
        Y = np.asarray(Y, dtype=float)
        return np.zeros(Y.shape[:-1] + (d + 1, d + 1))

    def mean_curvature(Y):
        return np.zeros(np.asarray(Y).shape[:-1])

    return SlabChart(
        name=SLAB_MINKOWSKI_HYPERPLANE,
        model=model,
        params={"side": side, "a": a},
        t_range=(-a, a),
        center=tuple([0.0] * d),
        spatial_metric=spatial_metric,
        beta=beta,
        mean_curvature=mean_curvature,
        embedding=lambda Y: np.concatenate([np.asarray(Y, dtype=float), [0.0]]),
        normal=lambda Y: normal.copy(),
    )


def _minkowski_cylinder(model: MetricModel, params: Mapping[str, float]) -> SlabChart:
    _require(model, MINKOWSKI, SLAB_MINKOWSKI_CYLINDER)
    n = model.n
    d = n - 2
    rho = float(params.get("rho", 1.0))
    if rho <= 0.0:
        raise ValueError(f"Cylinder radius rho must be positive (got {rho})")
    side = _side(params)
    a = _half_width(params)

    def spatial_metric(Y):
        Y = np.asarray(Y, dtype=float)
        return np.broadcast_to(np.eye(d), Y.shape[:-1] + (d, d)).copy()

    def beta(Y):
        Y = np.asarray(Y, dtype=float)
        out = np.zeros(Y.shape[:-1] + (d + 1, d + 1))
        out[..., 1, 1] = side / rho
        return out

    def mean_curvature(Y):
        return np.full(np.asarray(Y).shape[:-1], side / rho)

    def embedding(Y):
        t, y1, rest = Y[0], Y[1], Y[2:]
        phi = y1 / rho
        return np.concatenate([[t, rho * math.cos(phi), rho * math.sin(phi)], rest])

    def normal(Y):
        phi = Y[1] / rho
        out = np.zeros(n)
        out[1], out[2] = side * math.cos(phi), side * math.sin(phi)
        return out

    def valid(Y):
        return np.abs(np.asarray(Y)[..., 1]) < math.pi * rho

    return SlabChart(
        name=SLAB_MINKOWSKI_CYLINDER,
        model=model,
        params={"rho": rho, "side": side, "a": a},
        t_range=(-a, a),
        center=tuple([0.0] * d),
        spatial_metric=spatial_metric,
        beta=beta,
        mean_curvature=mean_curvature,
        embedding=embedding,
        normal=normal,
        valid=valid,
    )


def lemaitre_radius(tau, rho, mass: float):
    """Areal radius r(tau, rho) = (3(rho - tau)/2)^(2/3) (2M)^(1/3)."""
    return np.cbrt(1.5 * (np.asarray(rho) - np.asarray(tau))) ** 2 * np.cbrt(2.0 * mass)


def _schwarzschild_phi0(model: MetricModel, params: Mapping[str, float]) -> SlabChart:
    _require(model, SCHWARZSCHILD, SLAB_SCHWARZSCHILD_PHI0)
    mass = float(model.params["M"])
    r0 = float(params.get("r0", 10.0 * mass))
    if r0 <= 2.0 * mass:
        raise ValueError(f"r0 must lie outside the horizon (got {r0}, 2M = {2.0 * mass})")
    a = _half_width(params)
    rho0 = (2.0 / 3.0) * r0 ** 1.5 / math.sqrt(2.0 * mass)

    def spatial_metric(Y):
        Y = np.asarray(Y, dtype=float)
        r = lemaitre_radius(Y[..., 0], Y[..., 1], mass)
        out = np.zeros(Y.shape[:-1] + (2, 2))
        out[..., 0, 0] = 2.0 * mass / r
        out[..., 1, 1] = r * r
        return out

    def beta(Y):
        return np.zeros(np.asarray(Y).shape[:-1] + (3, 3))

    def mean_curvature(Y):
        return np.zeros(np.asarray(Y).shape[:-1])

    def embedding(Y):
        tau, rho, theta = Y
        r = float(lemaitre_radius(tau, rho, mass))
        w = math.sqrt(r / (2.0 * mass))
        t = tau - 2.0 * math.sqrt(2.0 * mass * r) - 2.0 * mass * math.log(abs((w - 1.0) / (w + 1.0)))
        return np.array([t, r, theta, 0.0])

    def normal(Y):
        tau, rho, theta = Y
        r = float(lemaitre_radius(tau, rho, mass))
        return np.array([0.0, 0.0, 0.0, 1.0 / (r * math.sin(theta))])

    def valid(Y):
        Y = np.asarray(Y)
        return ((Y[..., 1] - Y[..., 0]) > 4.0 * mass / 3.0) & (Y[..., 2] > 0.0) & (Y[..., 2] < math.pi)

    return SlabChart(
        name=SLAB_SCHWARZSCHILD_PHI0,
        model=model,
        params={"r0": r0, "a": a},
        t_range=(-a, a),
        center=(rho0, math.pi / 2.0),
        spatial_metric=spatial_metric,
        beta=beta,
        mean_curvature=mean_curvature,
        embedding=embedding,
        normal=normal,
        valid=valid,
    )


# Registry mapping slab names to builders
SLABS = {
    SLAB_MINKOWSKI_HYPERPLANE: _minkowski_hyperplane,
    SLAB_MINKOWSKI_CYLINDER: _minkowski_cylinder,
    SLAB_SCHWARZSCHILD_PHI0: _schwarzschild_phi0,
}


def slab_from_model(model: MetricModel, spec: str | tuple[str, Mapping[str, float]]) -> SlabChart:
    """Build a catalog slab inside *model*.

    Raises
    ------
    UnknownModel
        If the slab name is unknown or belongs to another spacetime.
    NotTimelike
        If the induced metric at the slab center is not Lorentzian.
    """
    name, params = parse_spec(spec) if isinstance(spec, str) else (spec[0].lower(), dict(spec[1]))
    if name not in SLABS:
        raise UnknownModel(f"Unknown slab '{name}'. Available: {', '.join(SLABS)}")
    slab = SLABS[name](model, params)

    Y0 = np.array([0.0, *slab.center])
    induced = _pullback(slab, Y0)
    if not lorentzian_signature_ok(induced):
        raise NotTimelike(f"Slab '{name}' has non-Lorentzian induced metric at {tuple(Y0)}")
    logger.debug("Built slab %s in %s with params %s", name, model.name, dict(slab.params))
    return slab


def _pullback(slab: SlabChart, Y: np.ndarray) -> np.ndarray:
    J = slab.embedding_jacobian(Y)
    g = slab.model.metric_fn(slab.embedding(Y))
    return J.T @ g @ J


def slab_consistency(model: MetricModel, slab: SlabChart, points: int = 10,
                     extent: float = 0.3, seed: int = 0) -> SlabConsistency:
    """Recheck the slab's closed-form fields against the ambient geometry.

    Samples *points* slab coordinates near the slab center and compares the
    pulled-back metric with the product form, and β, H_P with
    ⟨∇_{E_a} N, E_b⟩ computed from ambient finite differences.
    """
    if model.chart_id != slab.model.chart_id:
        raise DomainError("Slab belongs to a different ambient chart")
    rng = np.random.default_rng(seed)
    conn = connection_fn(model)
    center = np.array([0.0, *slab.center])
    worst = dict(product_form=0.0, normal_unit=0.0, normal_orthogonal=0.0, beta=0.0, mean_curvature=0.0)

    for _ in range(points):
        Y = center + rng.uniform(-extent, extent, size=center.size)
        if not bool(slab.contains(Y)):
            continue
        X = slab.embedding(Y)
        g = model.metric_fn(X)
        J = slab.embedding_jacobian(Y)
        G = slab.slab_metric(Y)
        nvec = slab.normal(Y)

        steps = fd_steps(Y, FD_STEP)
        dN = np.empty((Y.size, model.n))
        for a in range(Y.size):
            shift = np.zeros_like(Y)
            shift[a] = steps[a]
            dN[a] = (slab.normal(Y + shift) - slab.normal(Y - shift)) / (2.0 * steps[a])
        cov = dN + np.einsum("mab,ai,b->im", conn(X), J, nvec)   # ∇_{E_i} N
        beta_fd = cov @ g @ J
        beta_fd = 0.5 * (beta_fd + beta_fd.T)
        h_fd = float(np.einsum("ab,ab->", np.linalg.inv(G), beta_fd))

        worst["product_form"] = max(worst["product_form"], float(np.max(np.abs(J.T @ g @ J - G))))
        worst["normal_unit"] = max(worst["normal_unit"], abs(float(nvec @ g @ nvec) - 1.0))
        worst["normal_orthogonal"] = max(worst["normal_orthogonal"], float(np.max(np.abs(J.T @ g @ nvec))))
        worst["beta"] = max(worst["beta"], float(np.max(np.abs(beta_fd - slab.beta(Y)))))
        worst["mean_curvature"] = max(worst["mean_curvature"], abs(h_fd - float(slab.mean_curvature(Y))))

    report = SlabConsistency(samples=points, **worst)
    logger.info("Slab %s consistency: worst deviation %.3e over %d samples", slab.name, report.worst(), points)
    return report
