"""
Spacetime models and pointwise curvature evaluation.

A :class:`MetricModel` is an immutable bundle of a metric component evaluator,
an optional analytic connection and a chart validity domain.  Everything here is
a pure function of its inputs; models can be shared across threads.

Index conventions
-----------------
``christoffel[m, n, r]``   = Γ^m_{nr}
``riemann[r, s, m, n]``    = R^r_{smn}, with
(R(X, Y)Z)^r = R^r_{smn} Z^s X^m Y^n and R(X,Y)Z = ∇_X∇_Y Z - ∇_Y∇_X Z - ∇_[X,Y] Z
``ricci[s, n]``            = R^m_{smn}
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .constants import (
    CURVATURE_TOL_ANALYTIC,
    CURVATURE_TOL_FD,
    FD_STEP,
    FD_STEP_NESTED,
    STENCIL_RADIUS,
    TAU_NULL,
)
from .errors import BaseMismatch, DomainError, SignatureError, ZeroVector
from .utils import delta_norm_sq, fd_steps

logger = logging.getLogger(__name__)

MetricFn = Callable[[np.ndarray], np.ndarray]
ConnectionFn = Callable[[np.ndarray], np.ndarray]


# ── domain types ──────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SpacetimePoint:
    coords: tuple[float, ...]
    chart_id: str

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


@dataclass(frozen=True)
class TangentVector:
    base: SpacetimePoint
    components: tuple[float, ...]

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.components, dtype=float)


class CausalType(str, enum.Enum):
    TIMELIKE = "timelike"
    NULL = "null"
    SPACELIKE = "spacelike"


@dataclass(frozen=True)
class ChartDomain:
    """Open coordinate box; ``None`` bounds are unbounded."""

    bounds: tuple[tuple[float | None, float | None], ...]

    def margin_ok(self, coords: np.ndarray, margins: np.ndarray | None = None) -> bool:
        if margins is None:
            margins = np.zeros(len(coords))
        for x, pad, (lo, hi) in zip(coords, margins, self.bounds):
            if lo is not None and not x - pad > lo:
                return False
            if hi is not None and not x + pad < hi:
                return False
        return True

    def boundary_distance(self, coords: np.ndarray) -> np.ndarray:
        """Signed distance to every finite bound (positive inside)."""
        out = []
        for x, (lo, hi) in zip(coords, self.bounds):
            if lo is not None:
                out.append(x - lo)
            if hi is not None:
                out.append(hi - x)
        return np.asarray(out, dtype=float)


@dataclass(frozen=True)
class MetricModel:
    name: str
    n: int
    params: Mapping[str, float]
    chart_id: str
    coordinate_names: tuple[str, ...]
    metric_fn: MetricFn = field(repr=False, compare=False)
    domain: ChartDomain = field(repr=False)
    christoffel_fn: ConnectionFn | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.n < 3:
            raise ValueError(f"Spacetime dimension must be >= 3 (got {self.n})")
        if len(self.coordinate_names) != self.n or len(self.domain.bounds) != self.n:
            raise ValueError(f"Model '{self.name}': chart description does not match n={self.n}")

    def point(self, *coords: float) -> SpacetimePoint:
        if len(coords) == 1 and np.ndim(coords[0]) == 1:
            coords = tuple(coords[0])
        if len(coords) != self.n:
            raise DomainError(f"Point needs {self.n} coordinates, got {len(coords)}")
        return SpacetimePoint(tuple(float(c) for c in coords), self.chart_id)

    def vector(self, base: SpacetimePoint, components) -> TangentVector:
        comps = tuple(float(c) for c in np.asarray(components, dtype=float).ravel())
        if len(comps) != self.n:
            raise DomainError(f"Vector needs {self.n} components, got {len(comps)}")
        return TangentVector(base, comps)

    @property
    def has_analytic_connection(self) -> bool:
        return self.christoffel_fn is not None

    @property
    def curvature_tolerance(self) -> float:
        return CURVATURE_TOL_ANALYTIC if self.has_analytic_connection else CURVATURE_TOL_FD


@dataclass(frozen=True)
class CurvatureSample:
    riemann: np.ndarray
    ricci: np.ndarray
    point: SpacetimePoint
    metric: np.ndarray = field(repr=False)

    @property
    def lowered(self) -> np.ndarray:
        """R_{rsmn} = g_{ra} R^a_{smn}."""
        return np.einsum("ra,asmn->rsmn", self.metric, self.riemann)

    def symmetry_defect(self) -> dict[str, float]:
        """Largest violation of each algebraic Riemann identity."""
        low = self.lowered
        return {
            "antisym_first": float(np.max(np.abs(low + low.transpose(1, 0, 2, 3)))),
            "antisym_last": float(np.max(np.abs(low + low.transpose(0, 1, 3, 2)))),
            "pair_exchange": float(np.max(np.abs(low - low.transpose(2, 3, 0, 1)))),
            "bianchi": float(np.max(np.abs(
                low + low.transpose(0, 2, 3, 1) + low.transpose(0, 3, 1, 2)
            ))),
            "ricci_sym": float(np.max(np.abs(self.ricci - self.ricci.T))),
        }


# ── domain checks ─────────────────────────────────────────────────────────

def _check_point(model: MetricModel, p: SpacetimePoint, stencil: float = 0.0) -> np.ndarray:
    if p.chart_id != model.chart_id:
        raise DomainError(f"Point is in chart '{p.chart_id}', model '{model.name}' uses '{model.chart_id}'")
    x = p.array
    if x.shape != (model.n,):
        raise DomainError(f"Point has {x.size} coordinates, model '{model.name}' needs {model.n}")
    margins = fd_steps(x, stencil) * STENCIL_RADIUS if stencil else None
    if not model.domain.margin_ok(x, margins):
        detail = " (within finite-difference stencil of the boundary)" if stencil else ""
        raise DomainError(f"Point {p.coords} outside the '{model.chart_id}' chart domain{detail}")
    return x


# ── connection & curvature kernels ───────────────────────────────────────

def christoffel_from_metric(metric_fn: MetricFn, coords: np.ndarray,
                            steps: np.ndarray | None = None) -> np.ndarray:
    """Levi-Civita connection of *metric_fn* by central differences.

    Works for any signature and dimension; used for spacetime metrics
    without an analytic connection and for slab metrics in :mod:`slabs`.
    *coords* may carry leading batch axes, ``(..., dim)``, provided
    *metric_fn* broadcasts over them.
    """
    x = np.asarray(coords, dtype=float)
    dim = x.shape[-1]
    if steps is None:
        steps = fd_steps(x, FD_STEP)
    steps = np.broadcast_to(steps, x.shape)
    dg = np.empty(x.shape[:-1] + (dim, dim, dim))     # [..., a, i, j] = ∂_a g_ij
    for axis in range(dim):
        shift = np.zeros_like(x)
        shift[..., axis] = steps[..., axis]
        diff = metric_fn(x + shift) - metric_fn(x - shift)
        dg[..., axis, :, :] = diff / (2.0 * steps[..., axis, None, None])
    # lowered Γ_{s n r} = ½(∂_n g_{sr} + ∂_r g_{sn} - ∂_s g_{nr})
    low = 0.5 * (np.einsum("...nsr->...snr", dg) + np.einsum("...rsn->...snr", dg) - dg)
    ginv = np.linalg.inv(metric_fn(x))
    return np.einsum("...ms,...snr->...mnr", ginv, low)


def connection_fn(model: MetricModel) -> ConnectionFn:
    if model.christoffel_fn is not None:
        return model.christoffel_fn
    return lambda x: christoffel_from_metric(model.metric_fn, x)


def riemann_from_connection(conn: ConnectionFn, coords: np.ndarray, step: float) -> tuple[np.ndarray, np.ndarray]:
    """Return (Γ, R^r_{smn}) at *coords*, differencing the connection with *step*."""
    x = np.asarray(coords, dtype=float)
    dim = x.size
    gamma = conn(x)
    steps = fd_steps(x, step)
    d_gamma = np.empty((dim, dim, dim, dim))     # [l, r, n, s] = ∂_l Γ^r_{ns}
    for axis in range(dim):
        shift = np.zeros(dim)
        shift[axis] = steps[axis]
        d_gamma[axis] = (conn(x + shift) - conn(x - shift)) / (2.0 * steps[axis])
    partial = d_gamma.transpose(1, 3, 0, 2)      # [r, s, m, n] = ∂_m Γ^r_{ns}
    quad = np.einsum("rml,lns->rsmn", gamma, gamma)
    riemann = partial - partial.transpose(0, 1, 3, 2) + quad - quad.transpose(0, 1, 3, 2)
    return gamma, riemann


def curvature_step(model: MetricModel) -> float:
    return FD_STEP if model.has_analytic_connection else FD_STEP_NESTED


def riemann_at_coords(model: MetricModel, coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unchecked (Γ, Riemann) for hot loops whose domain is policed elsewhere."""
    return riemann_from_connection(connection_fn(model), coords, curvature_step(model))


# ── operations ────────────────────────────────────────────────────────────

def metric_at(model: MetricModel, p: SpacetimePoint) -> np.ndarray:
    """g_{μν}(p).

    Raises
    ------
    DomainError
        If *p* is outside the chart.
    SignatureError
        If g is not Lorentzian at *p*.
    """
    x = _check_point(model, p)
    g = np.asarray(model.metric_fn(x), dtype=float)
    if not lorentzian_signature_ok(g):
        raise SignatureError(f"Metric of '{model.name}' is not Lorentzian at {p.coords}")
    return g


def christoffel_at(model: MetricModel, p: SpacetimePoint) -> np.ndarray:
    """Γ^μ_{νρ}(p), analytic when the model has it, central differences otherwise.

    Raises
    ------
    DomainError
        If *p* is outside the chart, or within one stencil radius of its
        boundary on the finite-difference path.
    """
    if model.christoffel_fn is not None:
        x = _check_point(model, p)
        return np.asarray(model.christoffel_fn(x), dtype=float)
    x = _check_point(model, p, stencil=FD_STEP)
    return christoffel_from_metric(model.metric_fn, x)


def curvature_at(model: MetricModel, p: SpacetimePoint) -> CurvatureSample:
    """Riemann and Ricci tensors at *p* assembled from Γ and ∂Γ."""
    step = curvature_step(model)
    stencil = step if model.has_analytic_connection else step + FD_STEP
    x = _check_point(model, p, stencil=stencil)
    _, riemann = riemann_at_coords(model, x)
    ricci = np.einsum("msmn->sn", riemann)
    return CurvatureSample(riemann=riemann, ricci=ricci, point=p, metric=model.metric_fn(x))


def inner(model: MetricModel, p: SpacetimePoint, X: TangentVector, Y: TangentVector) -> float:
    """g_{μν}(p) X^μ Y^ν."""
    if X.base != p or Y.base != p:
        raise BaseMismatch(f"Vectors based at {X.base.coords} / {Y.base.coords}, expected {p.coords}")
    g = metric_at(model, p)
    return float(X.array @ g @ Y.array)


def classify(model: MetricModel, p: SpacetimePoint, X: TangentVector,
             tau_null: float = TAU_NULL) -> CausalType:
    """Causal character of *X* against ``tau_null * |X|_δ²``."""
    norm_sq = delta_norm_sq(X.array)
    if norm_sq == 0.0:
        raise ZeroVector("Cannot classify the zero vector")
    q = inner(model, p, X, X)
    if abs(q) <= tau_null * norm_sq:
        return CausalType.NULL
    return CausalType.TIMELIKE if q < 0.0 else CausalType.SPACELIKE


def ricci_along(model: MetricModel, p: SpacetimePoint, K: TangentVector) -> float:
    """Ric(K, K) at *p*; non-negative for null K under the null energy condition."""
    sample = curvature_at(model, p)
    k = K.array
    return float(k @ sample.ricci @ k)


def lorentzian_signature_ok(g: np.ndarray) -> bool:
    eig = np.linalg.eigvalsh(0.5 * (g + g.T))
    return int(np.sum(eig < 0.0)) == 1 and int(np.sum(eig > 0.0)) == g.shape[0] - 1
