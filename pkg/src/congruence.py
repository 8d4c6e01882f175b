"""
Null Weingarten maps and expansion along generators.

Riccati and Raychaudhuri evolutions ride on the coupled flow of
:mod:`src.geodesic`, so curvature is sampled with the same frame and at the
same nodes as the trajectory.  Cones are handled through the Jacobi matrix,
which stays regular at the vertex.

Sign convention: every Weingarten map is reported with respect to the
future-directed generator tangent, so future cones have positive expansion
and past cones negative expansion.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline
from scipy.optimize import brentq, minimize_scalar

from .constants import (
    BLOWUP_THRESHOLD,
    CONDITION_LIMIT,
    CONJUGATE_TOUCH_LIMIT,
    CONJUGATE_XTOL,
    FOCUSING_TOL,
    FUTURE_CONE,
    PAST_CONE,
    TAU_NULL,
)
from .errors import ConjugatePoint, GeometryError, MissingFrame
from .geodesic import (
    CoupledFlow,
    JacobiPayload,
    NullTrajectory,
    ScreenFrame,
    StepControl,
    integrate_geodesic,
    replay,
)
from .spacetime import MetricModel, SpacetimePoint, TangentVector, riemann_at_coords
from .utils import delta_norm_sq, delta_normalize

logger = logging.getLogger(__name__)


# ── domain types ──────────────────────────────────────────────────────────

@dataclass(frozen=True)
class WeingartenState:
    """Screen-frame components of b at affine parameter *s*."""

    s: float
    b: np.ndarray
    det_a: float | None = None

    @property
    def dim(self) -> int:
        return int(self.b.shape[0])

    @property
    def theta(self) -> float:
        return float(np.trace(self.b))

    @property
    def shear(self) -> np.ndarray:
        return self.b - (self.theta / self.dim) * np.eye(self.dim)

    @property
    def sigma2(self) -> float:
        sh = self.shear
        return float(np.trace(sh @ sh))

    @property
    def asymmetry(self) -> float:
        return float(np.max(np.abs(self.b - self.b.T)))


@dataclass(frozen=True)
class ConeSpec:
    vertex: SpacetimePoint
    direction: TangentVector
    orientation: str = FUTURE_CONE

    def __post_init__(self) -> None:
        if self.orientation not in (FUTURE_CONE, PAST_CONE):
            raise ValueError(f"orientation must be '{FUTURE_CONE}' or '{PAST_CONE}', got '{self.orientation}'")
        if self.direction.base != self.vertex:
            raise GeometryError("Cone direction must be based at the vertex")

    @property
    def sign(self) -> float:
        return 1.0 if self.orientation == FUTURE_CONE else -1.0


@dataclass(frozen=True)
class SupportConeReport:
    p: SpacetimePoint
    K: TangentVector
    r: float
    b_at_p: np.ndarray = field(repr=False)
    theta_at_p: float
    nec_holds: bool = True
    min_null_energy: float = 0.0

    @property
    def n(self) -> int:
        return int(self.b_at_p.shape[0]) + 2

    @property
    def bound(self) -> float:
        return -(self.n - 2) / self.r

    @property
    def bound_holds(self) -> bool:
        """θ_{p,K,r} ≥ -(n-2)/r up to FOCUSING_TOL, whatever the energy condition."""
        return self.theta_at_p >= self.bound - FOCUSING_TOL

    @property
    def bound_violated(self) -> bool:
        """The null energy condition holds along the segment and the bound still fails."""
        return self.nec_holds and not self.bound_holds


# ── screen payloads ───────────────────────────────────────────────────────

class RiccatiPayload:
    """b' = -b² - S with a blow-up guard on the Frobenius norm."""

    def __init__(self, dim: int, threshold: float = BLOWUP_THRESHOLD):
        self.dim = dim
        self.size = dim * dim
        self.threshold = threshold

    def rhs(self, s, p, screen_curvature):
        b = p.reshape(self.dim, self.dim)
        return (-b @ b - screen_curvature).reshape(-1)

    def blowup_margin(self, p):
        return self.threshold - float(np.linalg.norm(p))


class RaychaudhuriPayload:
    """θ' = -Ric(K,K) - σ²(s) - θ²/(n-2) with σ² supplied as a function of s."""

    size = 1

    def __init__(self, dim: int, sigma2: Callable[[float], float] | None = None,
                 threshold: float = BLOWUP_THRESHOLD):
        self.dim = dim
        self.sigma2 = sigma2
        self.threshold = threshold

    def rhs(self, s, p, screen_curvature):
        theta = p[0]
        sigma2 = float(self.sigma2(s)) if self.sigma2 is not None else 0.0
        return np.array([-np.trace(screen_curvature) - sigma2 - theta * theta / self.dim])

    def blowup_margin(self, p):
        return self.threshold - float(abs(p[0]))


# ── helpers ───────────────────────────────────────────────────────────────

def _require_frame(traj: NullTrajectory) -> None:
    if not traj.has_frame:
        raise MissingFrame("Trajectory carries no screen frame")


def _weingarten_from_jacobi(A: np.ndarray, Adot: np.ndarray, s: float) -> np.ndarray:
    """b = A' A⁻¹ behind a condition-number guard."""
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise ConjugatePoint(f"Jacobi matrix singular (condition number {cond:.3e})", s=s)
    return np.linalg.solve(A.T, Adot.T).T


def _jacobi_run(traj: NullTrajectory, A0: np.ndarray, Adot0: np.ndarray):
    payload = JacobiPayload(traj.model.n - 2)
    flow, states = replay(traj, payload=payload,
                          payload0=np.concatenate([A0.reshape(-1), Adot0.reshape(-1)]))
    return flow, payload, states


def _jacobi_zeros(flow: CoupledFlow, payload: JacobiPayload, s: np.ndarray,
                  states: np.ndarray, skip_start: bool) -> list[float]:
    """Zeros of det A between nodes: sign changes and touching minima of σ_min."""

    def a_at(t: float) -> np.ndarray:
        k = int(np.argmin(np.abs(s - t)))
        _, ys = flow.advance(states[k], float(s[k]), float(t))
        return payload.split(flow.unpack(ys[-1])[3])[0]

    def smallest_sv(a: np.ndarray) -> float:
        return float(np.linalg.svd(a, compute_uv=False)[-1])

    mats = [payload.split(flow.unpack(y)[3])[0] for y in states]
    det = np.array([np.linalg.det(a) for a in mats])
    smin = np.array([smallest_sv(a) for a in mats])
    start = 1 if skip_start else 0
    roots: list[float] = []

    for k in range(start, len(s) - 1):
        if det[k] == 0.0:
            roots.append(float(s[k]))
        elif det[k] * det[k + 1] < 0.0:
            roots.append(float(brentq(lambda t: np.linalg.det(a_at(t)), s[k], s[k + 1],
                                      xtol=CONJUGATE_XTOL)))

    for k in range(max(start, 1), len(s) - 1):
        if smin[k] <= smin[k - 1] and smin[k] <= smin[k + 1]:
            lo, hi = sorted((float(s[k - 1]), float(s[k + 1])))
            res = minimize_scalar(lambda t: smallest_sv(a_at(t)), bounds=(lo, hi),
                                  method="bounded", options={"xatol": CONJUGATE_XTOL})
            if res.fun < CONJUGATE_TOUCH_LIMIT and all(abs(res.x - r) > 1e-6 for r in roots):
                roots.append(float(res.x))

    s0 = float(s[0])
    return sorted(roots, key=lambda t: abs(t - s0))


# ── operations ────────────────────────────────────────────────────────────

def riccati_evolve(traj: NullTrajectory, b0: np.ndarray) -> list[WeingartenState]:
    """Evolve b' = -b² - R_screen from *b0* at the first trajectory node.

    Raises
    ------
    MissingFrame
        If *traj* was integrated without a screen frame.
    BlowUp
        If ‖b‖ exceeds the blow-up threshold (a focal point is near).
    """
    _require_frame(traj)
    d = traj.model.n - 2
    b0 = np.asarray(b0, dtype=float).reshape(d, d)
    if np.max(np.abs(b0 - b0.T)) > 1e-12:
        raise ValueError("b0 must be symmetric")
    payload = RiccatiPayload(d)
    flow, states = replay(traj, payload=payload, payload0=b0)
    out = [
        WeingartenState(s=float(s), b=flow.unpack(y)[3].reshape(d, d).copy())
        for s, y in zip(traj.s, states)
    ]
    logger.info("Riccati run: %d nodes, theta %.6g -> %.6g", len(out), out[0].theta, out[-1].theta)
    return out


def _sigma2_series(traj: NullTrajectory, source) -> Callable[[float], float] | None:
    """σ²(s) through a per-node series, or None for a shear-free run.

    Riccati states also give dσ²/ds at each node (from b' = -b² - S), so
    they are joined by a cubic Hermite spline; a bare series of values gets
    a cubic spline.
    """
    if source is None or (np.isscalar(source) and source == 0):
        return None
    if np.isscalar(source):
        raise ValueError("A scalar sigma2_source must be 0")
    source = list(source)
    if len(source) != len(traj) or len(traj) < 2:
        raise ValueError(f"sigma2_source has {len(source)} values for {len(traj)} trajectory nodes")
    order = np.argsort(traj.s)
    s = traj.s[order]

    if not isinstance(source[0], WeingartenState):
        values = np.asarray(source, dtype=float)
        if np.any(values < -1e-12):
            raise ValueError("sigma2 must be non-negative")
        return CubicSpline(s, values[order])

    if not np.allclose([state.s for state in source], traj.s):
        raise ValueError("sigma2_source must come from a run on the same trajectory")
    d = traj.model.n - 2
    flow = CoupledFlow(traj.model, d)
    values = np.empty(len(traj))
    slopes = np.empty(len(traj))
    for k, state in enumerate(source):
        S = flow.screen_curvature(traj.x[k], traj.v[k], traj.frames[k])
        bdot = -state.b @ state.b - S
        shear_dot = bdot - (np.trace(bdot) / d) * np.eye(d)
        values[k] = state.sigma2
        slopes[k] = 2.0 * float(np.trace(state.shear @ shear_dot))
    return CubicHermiteSpline(s, values[order], slopes[order])


def raychaudhuri_evolve(traj: NullTrajectory, theta0: float,
                        sigma2_source: Sequence[WeingartenState] | Sequence[float] | float | None = None
                        ) -> list[tuple[float, float]]:
    """Evolve the expansion along *traj*.

    *sigma2_source* is ``None``/``0`` (shear-free), the states of a
    :func:`riccati_evolve` run on the same trajectory, or σ² at every
    trajectory node.  Between nodes σ² is interpolated (see :func:`_sigma2_series`),
    so agreement with tr b improves as the fourth power of the node spacing.
    """
    _require_frame(traj)
    d = traj.model.n - 2
    payload = RaychaudhuriPayload(d, _sigma2_series(traj, sigma2_source))
    flow, states = replay(traj, payload=payload, payload0=np.array([theta0], dtype=float))
    return [(float(s), float(flow.unpack(y)[3][0])) for s, y in zip(traj.s, states)]


def cone_congruence(model: MetricModel, cone: ConeSpec, tau_span: tuple[float, float],
                    nodes=None, *, frame: ScreenFrame | None = None,
                    step_control: StepControl | None = None) -> list[WeingartenState]:
    """Weingarten map of the light cone from ``cone.vertex`` for τ > 0.

    Solves A'' = -R_screen A with A(0) = 0, A'(0) = I and returns
    b = A'A⁻¹ (sign-adjusted to the future-directed generator) at every node
    past the vertex.

    Raises
    ------
    ConjugatePoint
        If det A vanishes anywhere in (0, τ_end].
    """
    tau0, tau1 = float(tau_span[0]), float(tau_span[1])
    if tau0 != 0.0:
        raise ValueError("tau_span must start at the vertex (0)")
    if not tau1 > 0.0:
        raise ValueError("tau_span must end at a positive parameter")
    k = cone.direction.array
    q = k @ model.metric_fn(cone.vertex.array) @ k
    if abs(q) > TAU_NULL * delta_norm_sq(k):
        raise GeometryError(f"Cone direction is not null: <K,K> = {q:.3e}")
    if cone.sign * k[0] <= 0.0:
        raise GeometryError(f"A {cone.orientation} needs a "
                            f"{'future' if cone.sign > 0 else 'past'}-directed direction")

    traj = integrate_geodesic(model, cone.vertex, cone.direction, (tau0, tau1),
                              step_control, nodes, frame=frame)
    d = model.n - 2
    flow, payload, states = _jacobi_run(traj, np.zeros((d, d)), np.eye(d))
    zeros = _jacobi_zeros(flow, payload, traj.s, states, skip_start=True)
    if zeros:
        raise ConjugatePoint(f"Conjugate point of the {cone.orientation} vertex", s=zeros[0])

    out = []
    for s, y in zip(traj.s[1:], states[1:]):
        A, Adot = payload.split(flow.unpack(y)[3])
        b = _weingarten_from_jacobi(A, Adot, float(s))
        out.append(WeingartenState(s=float(s), b=cone.sign * b, det_a=float(np.linalg.det(A))))
    logger.info("%s from %s: %d nodes, theta(%g) = %.9g",
                cone.orientation, cone.vertex.coords, len(out), out[-1].s, out[-1].theta)
    return out


def null_energy_along(model: MetricModel, traj: NullTrajectory) -> np.ndarray:
    """Ric(η', η') at every trajectory node."""
    out = np.empty(len(traj))
    for k in range(len(traj)):
        _, riemann = riemann_at_coords(model, traj.x[k])
        ricci = np.einsum("msmn->sn", riemann)
        out[k] = traj.v[k] @ ricci @ traj.v[k]
    return out


def support_cone_at(model: MetricModel, p: SpacetimePoint, K: TangentVector, r: float,
                    step_control: StepControl | None = None) -> SupportConeReport:
    """Past light cone of η(r) measured back at p, η(s) = exp_p(sK).

    K is δ-normalized first, so r is an affine distance for the unit
    generator.  The returned b is expressed in the screen frame built at p
    from K.  A focusing bound that fails while the null energy condition
    holds is flagged by ``bound_violated`` for the caller's checks.

    Raises
    ------
    ConjugatePoint
        If p is conjugate to η(r) along the segment (or any earlier point is).
    DomainError
        If the segment leaves the chart.
    """
    if not r > 0.0:
        raise ValueError(f"Support radius must be positive (got {r})")
    k_unit = model.vector(p, delta_normalize(K.array))
    forward = integrate_geodesic(model, p, k_unit, (0.0, r), step_control, nodes=None)
    q = forward.point(len(forward) - 1)
    end_frame = forward.frame_at(len(forward) - 1)
    back_dir = model.vector(q, -forward.v[-1])
    back_frame = ScreenFrame(
        K=back_dir,
        e=tuple(model.vector(q, vec.array) for vec in end_frame.e),
        partner=model.vector(q, end_frame.partner.array),
    )
    states = cone_congruence(model, ConeSpec(q, back_dir, PAST_CONE), (0.0, r),
                             frame=back_frame, step_control=step_control)
    b_at_p = states[-1].b

    energy = null_energy_along(model, forward)
    min_energy = float(np.min(energy))
    nec = bool(min_energy >= -model.curvature_tolerance)
    report = SupportConeReport(
        p=p, K=k_unit, r=float(r), b_at_p=b_at_p, theta_at_p=float(np.trace(b_at_p)),
        nec_holds=nec, min_null_energy=min_energy,
    )
    if report.bound_violated:
        logger.warning("Focusing bound violated at r=%g: theta=%.9g < %.9g",
                       r, report.theta_at_p, report.bound)
    logger.debug("Support cone r=%g: theta_at_p=%.12g (bound %.12g)", r, report.theta_at_p, report.bound)
    return report


def focusing_margin(report: SupportConeReport) -> float:
    """θ_{p,K,r} + (n-2)/r; non-negative under the null energy condition."""
    return report.theta_at_p + (report.n - 2) / report.r


def conjugate_point_scan(model: MetricModel, traj: NullTrajectory) -> list[float]:
    """Affine parameters conjugate to the trajectory start, nearest first.

    Sign changes of det A are refined by Brent's method; zeros of even
    multiplicity (det A touching zero) are found as minima of the smallest
    singular value of A.
    """
    _require_frame(traj)
    if model.chart_id != traj.model.chart_id:
        raise GeometryError("Trajectory belongs to a different chart")
    d = model.n - 2
    flow, payload, states = _jacobi_run(traj, np.zeros((d, d)), np.eye(d))
    roots = _jacobi_zeros(flow, payload, traj.s, states, skip_start=True)
    logger.info("Conjugate-point scan over %d nodes: %d found", len(traj), len(roots))
    return roots


def focusing_time_bound(theta0: float, n: int) -> float:
    """Affine time by which a shear-free, NEC-respecting expansion must blow up.

    >>> focusing_time_bound(-0.5, 4)
    4.0
    >>> focusing_time_bound(0.1, 4)
    inf
    """
    if theta0 >= 0.0:
        return float("inf")
    return (n - 2) / abs(theta0)


def inverse_expansion_slope(states: Sequence[WeingartenState]) -> np.ndarray:
    """Finite-difference slope of 1/θ between consecutive states.

    Intervals where θ vanishes at either end are reported as NaN.
    """
    out = np.full(max(len(states) - 1, 0), np.nan)
    for k in range(len(states) - 1):
        a, b = states[k], states[k + 1]
        if a.theta == 0.0 or b.theta == 0.0:
            continue
        out[k] = (1.0 / b.theta - 1.0 / a.theta) / (b.s - a.s)
    return out


def monotonicity_gap(report_r: SupportConeReport, report_t: SupportConeReport) -> float:
    """Smallest eigenvalue of b_{p,K,t} - b_{p,K,r} for r < t."""
    if report_r.p != report_t.p or report_r.K != report_t.K:
        raise GeometryError("Monotonicity compares support cones with the same p and K")
    if not report_r.r < report_t.r:
        raise ValueError("Expected r < t")
    diff = report_t.b_at_p - report_r.b_at_p
    return float(np.min(np.linalg.eigvalsh(0.5 * (diff + diff.T))))


# ── tabular export ────────────────────────────────────────────────────────

def congruence_rows(states: Sequence[WeingartenState]) -> tuple[list[str], list[list[float]]]:
    """CSV header and rows: s, theta, sigma2, b_ij row-major, det_a."""
    d = states[0].dim if states else 0
    header = ["s", "theta", "sigma2"] + [f"b{i}{j}" for i in range(d) for j in range(d)] + ["det_a"]
    rows = [
        [st.s, st.theta, st.sigma2, *map(float, st.b.reshape(-1)),
         float("nan") if st.det_a is None else st.det_a]
        for st in states
    ]
    return header, rows


def focusing_rows(reports: Sequence[SupportConeReport]) -> tuple[list[str], list[list[float]]]:
    """CSV header and rows for a focusing sweep."""
    if not reports:
        return ["r", "theta_at_p", "bound", "margin"], []
    n = reports[0].n
    header = ([f"p{i}" for i in range(n)] + [f"K{i}" for i in range(n)]
              + ["r", "theta_at_p", "bound", "margin", "min_null_energy"])
    rows = [
        [*rep.p.coords, *rep.K.components, rep.r, rep.theta_at_p, rep.bound,
         focusing_margin(rep), rep.min_null_energy]
        for rep in reports
    ]
    return header, rows
