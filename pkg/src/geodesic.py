"""
Geodesic integration, parallel transport, Jacobi fields and screen frames.

Geodesic, transport and any screen-space payload (Jacobi matrix, Weingarten
map, expansion) are integrated as one coupled first-order system so they share
error control and are sampled at identical nodes.  The null constraint is
monitored and never projected back.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .constants import (
    DEFAULT_ATOL,
    DEFAULT_METHOD,
    DEFAULT_RTOL,
    FRAME_TOL,
    NULL_DRIFT_LIMIT,
    TAU_NULL,
)
from .errors import (
    BlowUp,
    DegenerateFrame,
    DomainError,
    GeometryError,
    MissingFrame,
    NullDriftError,
    StepFailure,
)
from .spacetime import (
    MetricModel,
    SpacetimePoint,
    TangentVector,
    _check_point,
    connection_fn,
    riemann_at_coords,
)
from .utils import delta_norm_sq, delta_normalize

logger = logging.getLogger(__name__)


# ── domain types ──────────────────────────────────────────────────────────

@dataclass(frozen=True)
class StepControl:
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    max_step: float = np.inf
    method: str = DEFAULT_METHOD


@dataclass(frozen=True)
class ScreenFrame:
    K: TangentVector
    e: tuple[TangentVector, ...]
    partner: TangentVector | None = None

    @property
    def matrix(self) -> np.ndarray:
        """Frame vectors as rows, shape (n-2, n)."""
        return np.array([vec.array for vec in self.e])


@dataclass(frozen=True)
class JacobiState:
    s: float
    A: np.ndarray
    Adot: np.ndarray

    def wronskian(self) -> np.ndarray:
        return self.A.T @ self.Adot - self.Adot.T @ self.A


@dataclass(frozen=True)
class NullTrajectory:
    """Sampled geodesic with an optional parallel screen frame per node."""

    model: MetricModel = field(repr=False)
    s: np.ndarray
    x: np.ndarray
    v: np.ndarray
    null_residual: np.ndarray
    frames: np.ndarray | None = field(default=None, repr=False)
    partners: np.ndarray | None = field(default=None, repr=False)
    control: StepControl = StepControl()

    def __post_init__(self) -> None:
        for arr in (self.s, self.x, self.v, self.null_residual, self.frames, self.partners):
            if arr is not None:
                arr.setflags(write=False)

    def __len__(self) -> int:
        return int(self.s.size)

    @property
    def has_frame(self) -> bool:
        return self.frames is not None

    @property
    def max_drift(self) -> float:
        return float(np.max(np.abs(self.null_residual)))

    def point(self, k: int) -> SpacetimePoint:
        return self.model.point(self.x[k])

    def tangent(self, k: int) -> TangentVector:
        return self.model.vector(self.point(k), self.v[k])

    @property
    def samples(self) -> list[tuple[float, SpacetimePoint, TangentVector]]:
        return [(float(self.s[k]), self.point(k), self.tangent(k)) for k in range(len(self))]

    def frame_at(self, k: int) -> ScreenFrame:
        if self.frames is None:
            raise MissingFrame("Trajectory was integrated without a screen frame")
        p = self.point(k)
        e = tuple(self.model.vector(p, row) for row in self.frames[k])
        partner = self.model.vector(p, self.partners[k]) if self.partners is not None else None
        return ScreenFrame(K=self.tangent(k), e=e, partner=partner)


class ScreenPayload(Protocol):
    """Extra screen-space ODE components carried along the coupled flow."""

    size: int

    def rhs(self, s: float, p: np.ndarray, screen_curvature: np.ndarray) -> np.ndarray: ...

    def blowup_margin(self, p: np.ndarray) -> float | None: ...


# ── coupled flow ──────────────────────────────────────────────────────────

class CoupledFlow:
    """Geodesic + parallel transport of ``k`` vectors + optional payload.

    State layout: ``[x (n), v (n), W (k*n), payload]``.  When a payload is
    present the first ``n-2`` transported vectors must be the screen frame.
    """

    def __init__(self, model: MetricModel, n_transported: int,
                 payload: ScreenPayload | None = None,
                 control: StepControl | None = None):
        self.model = model
        self.n = model.n
        self.k = n_transported
        self.payload = payload
        self.control = control or StepControl()
        self._conn = connection_fn(model)
        if payload is not None and n_transported < self.n - 2:
            raise MissingFrame("A screen payload needs the transported screen frame")

    # -- packing -------------------------------------------------------------

    @property
    def size(self) -> int:
        return 2 * self.n + self.k * self.n + (self.payload.size if self.payload else 0)

    def pack(self, x, v, vectors=None, payload=None) -> np.ndarray:
        parts = [np.asarray(x, float), np.asarray(v, float)]
        if self.k:
            parts.append(np.asarray(vectors, float).reshape(-1))
        if self.payload is not None:
            parts.append(np.asarray(payload, float).reshape(-1))
        return np.concatenate(parts)

    def unpack(self, y: np.ndarray):
        n, k = self.n, self.k
        x = y[:n]
        v = y[n:2 * n]
        w = y[2 * n:2 * n + k * n].reshape(k, n)
        p = y[2 * n + k * n:]
        return x, v, w, p

    # -- right-hand side -------------------------------------------------------

    def screen_curvature(self, x: np.ndarray, v: np.ndarray, frame: np.ndarray) -> np.ndarray:
        """S_ij = <R(e_i, v) v, e_j> in the given frame (rows e_i)."""
        _, riemann = riemann_at_coords(self.model, x)
        r_vv = np.einsum("rsmn,s,n->rm", riemann, v, v)
        g = self.model.metric_fn(x)
        s_mat = (frame @ g) @ (r_vv @ frame.T)
        return 0.5 * (s_mat + s_mat.T)

    def rhs(self, s: float, y: np.ndarray) -> np.ndarray:
        x, v, w, p = self.unpack(y)
        gamma = self._conn(x)
        dv = -np.einsum("mab,a,b->m", gamma, v, v)
        parts = [v, dv]
        if self.k:
            dw = -np.einsum("mab,a,jb->jm", gamma, v, w)
            parts.append(dw.reshape(-1))
        if self.payload is not None:
            s_mat = self.screen_curvature(x, v, w[: self.n - 2])
            parts.append(self.payload.rhs(s, p, s_mat))
        return np.concatenate(parts)

    # -- events ---------------------------------------------------------------

    def _events(self) -> list:
        events = []
        n_bounds = self.model.domain.boundary_distance(np.zeros(self.n)).size

        for idx in range(n_bounds):
            def chart_exit(s, y, idx=idx):
                return self.model.domain.boundary_distance(y[: self.n])[idx]
            chart_exit.terminal = True
            chart_exit.direction = -1
            chart_exit.kind = "chart"
            events.append(chart_exit)

        if self.payload is not None and self.payload.blowup_margin(np.zeros(self.payload.size)) is not None:
            def blowup(s, y):
                return self.payload.blowup_margin(self.unpack(y)[3])
            blowup.terminal = True
            blowup.direction = -1
            blowup.kind = "blowup"
            events.append(blowup)
        return events

    # -- driving ----------------------------------------------------------------

    def advance(self, y0: np.ndarray, s0: float, s1: float) -> tuple[np.ndarray, np.ndarray]:
        """Integrate one segment; returns (s nodes, states) including both ends."""
        if s1 == s0:
            return np.array([s0]), y0[None, :]
        events = self._events()
        sol = solve_ivp(
            self.rhs, (s0, s1), y0,
            method=self.control.method,
            rtol=self.control.rtol,
            atol=self.control.atol,
            max_step=self.control.max_step,
            events=events or None,
        )
        if sol.status == -1:
            raise StepFailure(f"Integrator failed on [{s0:g}, {s1:g}]: {sol.message}")
        if sol.status == 1:
            for ev, hits in zip(events, sol.t_events):
                if len(hits):
                    if ev.kind == "blowup":
                        raise BlowUp("Screen payload exceeded the blow-up threshold",
                                     last_s=float(sol.t[-2] if sol.t.size > 1 else s0))
                    raise DomainError(
                        f"Geodesic leaves the '{self.model.chart_id}' chart at s={hits[0]:.12g}"
                    )
        return sol.t, sol.y.T

    def run(self, y0: np.ndarray, nodes: Sequence[float]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Integrate through every node; returns (s, states, requested-mask).

        Every requested node is a segment endpoint, so values there are
        integrator outputs, never interpolants.
        """
        nodes = np.asarray(nodes, dtype=float)
        s_all = [nodes[:1]]
        y_all = [y0[None, :]]
        mask = [np.array([True])]
        y = y0
        for a, b in zip(nodes[:-1], nodes[1:]):
            t, ys = self.advance(y, a, b)
            s_all.append(t[1:])
            y_all.append(ys[1:])
            seg_mask = np.zeros(t.size - 1, dtype=bool)
            seg_mask[-1] = True
            mask.append(seg_mask)
            y = ys[-1]
        return np.concatenate(s_all), np.vstack(y_all), np.concatenate(mask)


# ── helpers ───────────────────────────────────────────────────────────────

def _output_nodes(s_span: tuple[float, float], nodes) -> np.ndarray:
    s0, s1 = float(s_span[0]), float(s_span[1])
    if not (np.isfinite(s0) and np.isfinite(s1)):
        raise ValueError("s_span must be finite")
    if nodes is None:
        return np.array([s0, s1])
    if np.isscalar(nodes):
        return np.linspace(s0, s1, max(int(nodes), 2))
    pts = np.asarray(sorted(set([s0, s1, *map(float, nodes)]), reverse=s1 < s0))
    return pts


def null_residuals(model: MetricModel, xs: np.ndarray, vs: np.ndarray) -> np.ndarray:
    out = np.empty(len(xs))
    for k, (x, v) in enumerate(zip(xs, vs)):
        out[k] = float(v @ model.metric_fn(x) @ v) / delta_norm_sq(v)
    return out


def _screen_for(model: MetricModel, p: SpacetimePoint, v: np.ndarray) -> ScreenFrame:
    """Screen frame for a tangent of either time orientation."""
    sign = 1.0 if v[0] > 0.0 else -1.0
    frame = build_screen_frame(model, p, model.vector(p, sign * v))
    if sign > 0:
        return frame
    return ScreenFrame(K=model.vector(p, v), e=frame.e,
                       partner=model.vector(p, -frame.partner.array))


def _trajectory_from_states(flow: CoupledFlow, s: np.ndarray, ys: np.ndarray,
                            with_frame: bool) -> NullTrajectory:
    n = flow.n
    xs = ys[:, :n].copy()
    vs = ys[:, n:2 * n].copy()
    frames = partners = None
    if with_frame:
        w = ys[:, 2 * n:2 * n + flow.k * n].reshape(len(s), flow.k, n)
        frames = w[:, : n - 2].copy()
        partners = w[:, n - 2].copy()
    return NullTrajectory(
        model=flow.model, s=s.copy(), x=xs, v=vs,
        null_residual=null_residuals(flow.model, xs, vs),
        frames=frames, partners=partners, control=flow.control,
    )


# ── operations ────────────────────────────────────────────────────────────

def build_screen_frame(model: MetricModel, p: SpacetimePoint, K: TangentVector,
                       tau_null: float = TAU_NULL) -> ScreenFrame:
    """Orthonormal screen e_1..e_{n-2} orthogonal to K and to a null partner L.

    L is built from the coordinate basis vector with the largest |<K, E_a>|
    (first such on ties) and scaled so <K, L> = -1; the screen is Gram-Schmidt
    over the projected coordinate basis, in coordinate order.

    Raises
    ------
    DegenerateFrame
        If K is zero within tolerance or the projected basis is degenerate.
    GeometryError
        If K is not null or not future-directed.
    """
    n = model.n
    x = _check_point(model, p)
    k = K.array
    if delta_norm_sq(k) <= tau_null:
        raise DegenerateFrame("Generator tangent K is zero within tolerance")
    g = model.metric_fn(x)
    if abs(k @ g @ k) > tau_null * delta_norm_sq(k):
        raise GeometryError(f"K is not null: <K,K> = {k @ g @ k:.3e}")
    if k[0] <= 0.0:
        raise GeometryError("K must be future-directed (first coordinate component positive)")

    gk = g @ k
    a = int(np.argmax(np.abs(gk)))
    e_a = np.zeros(n)
    e_a[a] = 1.0
    ek = gk[a]
    partner = e_a - (g[a, a] / (2.0 * ek)) * k
    partner = -partner / ek
    gl = g @ partner

    basis = []
    for b in range(n):
        vec = np.zeros(n)
        vec[b] = 1.0
        vec = vec + (vec @ gl) * k + (vec @ gk) * partner
        for prev in basis:
            vec = vec - (vec @ g @ prev) * prev
        norm_sq = vec @ g @ vec
        if norm_sq <= FRAME_TOL * max(1.0, delta_norm_sq(vec)):
            continue
        basis.append(vec / np.sqrt(norm_sq))
        if len(basis) == n - 2:
            break
    if len(basis) != n - 2:
        raise DegenerateFrame(f"Could only build {len(basis)} of {n - 2} screen vectors")

    return ScreenFrame(
        K=K,
        e=tuple(model.vector(p, vec) for vec in basis),
        partner=model.vector(p, partner),
    )


def null_tangent(model: MetricModel, p: SpacetimePoint, spatial: Sequence[float]) -> TangentVector:
    """Future-directed null vector with the given components 1..n-1, δ-normalized."""
    x = _check_point(model, p)
    g = model.metric_fn(x)
    sp = np.asarray(spatial, dtype=float)
    if sp.size != model.n - 1:
        raise ValueError(f"Need {model.n - 1} spatial components, got {sp.size}")
    a = g[0, 0]
    b = 2.0 * (g[0, 1:] @ sp)
    c = sp @ g[1:, 1:] @ sp
    if abs(a) < 1e-14:
        if abs(b) < 1e-14:
            raise GeometryError("No null vector with the requested spatial part")
        k0 = -c / b
    else:
        disc = b * b - 4.0 * a * c
        if disc < 0.0:
            raise GeometryError("No null vector with the requested spatial part")
        roots = [(-b + np.sqrt(disc)) / (2.0 * a), (-b - np.sqrt(disc)) / (2.0 * a)]
        k0 = max(roots)
    if k0 <= 0.0:
        raise GeometryError("Requested spatial part has no future-directed null completion")
    return model.vector(p, delta_normalize(np.concatenate([[k0], sp])))


def integrate_geodesic(model: MetricModel, x0: SpacetimePoint, v0: TangentVector,
                       s_span: tuple[float, float], step_control: StepControl | None = None,
                       nodes=None, *, with_frame: bool = True,
                       frame: ScreenFrame | None = None,
                       require_null: bool = True) -> NullTrajectory:
    """Integrate an affinely parameterized geodesic with its parallel screen frame.

    *nodes* is ``None`` (span endpoints only), a count of evenly spaced output
    nodes, or explicit s values; integrator-chosen nodes are always kept.
    A supplied *frame* (screen vectors at x0, orthogonal to v0) is transported
    instead of building one.

    Raises
    ------
    DomainError
        If the curve leaves the chart.
    StepFailure
        If error control cannot meet tolerance.
    NullDriftError
        If |<v,v>|/|v|² exceeds the drift limit at any node.
    """
    x = _check_point(model, x0)
    v = v0.array
    if v0.base != x0:
        raise GeometryError("v0 must be based at x0")
    if require_null:
        q = v @ model.metric_fn(x) @ v
        if abs(q) > TAU_NULL * delta_norm_sq(v):
            raise GeometryError(f"v0 is not null: <v0,v0> = {q:.3e}")

    control = step_control or StepControl()
    if with_frame:
        if frame is None:
            frame = _screen_for(model, x0, v)
        elif frame.partner is None:
            frame = ScreenFrame(K=frame.K, e=frame.e, partner=_screen_for(model, x0, v).partner)
        vectors = np.vstack([frame.matrix, frame.partner.array[None, :]])
        flow = CoupledFlow(model, n_transported=model.n - 1, control=control)
        y0 = flow.pack(x, v, vectors)
    else:
        flow = CoupledFlow(model, n_transported=0, control=control)
        y0 = flow.pack(x, v)

    s, ys, _ = flow.run(y0, _output_nodes(s_span, nodes))
    traj = _trajectory_from_states(flow, s, ys, with_frame)
    drift = traj.max_drift
    logger.info("Geodesic in %s: %d nodes over s in [%g, %g], null drift %.2e",
                model.name, len(traj), s[0], s[-1], drift)
    if require_null and drift > NULL_DRIFT_LIMIT:
        raise NullDriftError(f"Null-constraint drift {drift:.3e} exceeds {NULL_DRIFT_LIMIT:g}")
    return traj


def replay(traj: NullTrajectory, payload: ScreenPayload | None = None,
           payload0: np.ndarray | None = None,
           extra_vectors: Sequence[np.ndarray] = ()) -> tuple[CoupledFlow, np.ndarray]:
    """Re-integrate *traj* carrying extra vectors and/or a screen payload.

    Returns the flow and the full state at every trajectory node.
    """
    if payload is not None and not traj.has_frame:
        raise MissingFrame("Trajectory carries no screen frame")
    n = traj.model.n
    rows = []
    if traj.has_frame:
        rows.extend(traj.frames[0])
    rows.extend(np.asarray(vec, dtype=float) for vec in extra_vectors)
    flow = CoupledFlow(traj.model, n_transported=len(rows), payload=payload, control=traj.control)
    vectors = np.array(rows) if rows else None
    y0 = flow.pack(traj.x[0], traj.v[0], vectors, payload0)
    _, ys, mask = flow.run(y0, traj.s)
    states = ys[mask]
    if states.shape[0] != len(traj):
        raise StepFailure("Replay produced a different node count than the trajectory")
    logger.debug("Replayed %d nodes with %d transported vectors", len(traj), len(rows))
    return flow, states


def parallel_transport(model: MetricModel, traj: NullTrajectory, X0: TangentVector) -> np.ndarray:
    """Components of the parallel field X(s) at every trajectory node, shape (m, n)."""
    if model is not traj.model and model.chart_id != traj.model.chart_id:
        raise DomainError("Trajectory belongs to a different chart")
    if X0.base != traj.point(0):
        raise GeometryError("X0 must be based at the trajectory start")
    flow, states = replay(traj, extra_vectors=[X0.array])
    start = 2 * model.n + (flow.k - 1) * model.n
    return states[:, start:start + model.n].copy()


class JacobiPayload:
    """A'' = -S(s) A in the parallel screen frame; state [A, A']."""

    def __init__(self, dim: int):
        self.dim = dim
        self.size = 2 * dim * dim

    def rhs(self, s, p, screen_curvature):
        d = self.dim
        a = p[: d * d].reshape(d, d)
        adot = p[d * d:].reshape(d, d)
        return np.concatenate([adot.reshape(-1), (-screen_curvature @ a).reshape(-1)])

    def blowup_margin(self, p):
        return None

    def split(self, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        d = self.dim
        return p[: d * d].reshape(d, d), p[d * d: 2 * d * d].reshape(d, d)


def jacobi_evolve(model: MetricModel, traj: NullTrajectory, J0: JacobiState) -> list[JacobiState]:
    """Evolve n-2 Jacobi fields (screen components) along *traj*."""
    if not traj.has_frame:
        raise MissingFrame("jacobi_evolve needs a trajectory with a screen frame")
    d = model.n - 2
    payload = JacobiPayload(d)
    p0 = np.concatenate([np.asarray(J0.A, float).reshape(-1), np.asarray(J0.Adot, float).reshape(-1)])
    flow, states = replay(traj, payload=payload, payload0=p0)
    out = []
    for s, y in zip(traj.s, states):
        a, adot = payload.split(flow.unpack(y)[3])
        out.append(JacobiState(s=float(s), A=a.copy(), Adot=adot.copy()))
    return out


def trajectory_rows(traj: NullTrajectory) -> tuple[list[str], list[list[float]]]:
    """CSV header and rows: s, x^0..x^{n-1}, v^0..v^{n-1}, null_residual."""
    n = traj.model.n
    header = ["s"] + [f"x{i}" for i in range(n)] + [f"v{i}" for i in range(n)] + ["null_residual"]
    rows = [
        [float(traj.s[k]), *map(float, traj.x[k]), *map(float, traj.v[k]), float(traj.null_residual[k])]
        for k in range(len(traj))
    ]
    return header, rows
