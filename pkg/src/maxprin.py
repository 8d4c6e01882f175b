"""
Maximum-principle and splitting checks on discrete graphs and model horizons.

* touching pairs: ordering, touching and curvature-sign hypotheses, and the
  local coincidence gap
* support families: past support cones at a graph node, their expansion and
  the Hessian of their slab slice
* totally geodesic null hypersurfaces: b evolved from zero along generators
  and b measured directly from the null normal field
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .congruence import riccati_evolve, support_cone_at
from .constants import (
    DESITTER,
    FD_STEP,
    HYPERSURFACE_DESITTER,
    HYPERSURFACE_MINKOWSKI,
    HYPERSURFACE_SCHWARZSCHILD,
    MINKOWSKI,
    ORDER_TOL,
    SCHWARZSCHILD_EF,
    THETA_TOL,
)
from .errors import ConjugatePoint, DomainError, LatticeMismatch, UnknownHypersurface
from .geodesic import build_screen_frame, integrate_geodesic
from .graphop import GraphGrid, lattice_derivatives, theta_of_graph
from .slabs import SlabChart
from .spacetime import MetricModel, connection_fn
from .utils import fd_steps, thread_count

logger = logging.getLogger(__name__)

MODES = ("support", "smooth")


# ── touching pairs ────────────────────────────────────────────────────────

@dataclass(frozen=True)
class TouchingPair:
    slab: SlabChart
    u1: GraphGrid
    u2: GraphGrid
    touch_node: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.u1.same_lattice(self.u2):
            raise LatticeMismatch("u1 and u2 must share lattice and boundary mask")
        if len(self.touch_node) != self.u1.dim:
            raise LatticeMismatch(f"touch_node needs {self.u1.dim} indices")


@dataclass(frozen=True)
class TouchingVerdict:
    mode: str
    max_order_violation: float
    touch_gap: float
    min_theta1: float
    max_theta2: float
    max_comparison_violation: float
    failures: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.failures


def check_touching_hypotheses(pair: TouchingPair, theta_tol: float = THETA_TOL,
                              mode: str = "support") -> TouchingVerdict:
    """Check the hypotheses of the comparison principle on a discrete pair.

    ``support`` mode checks θ(u1) ≥ -tol and θ(u2) ≤ tol nodewise;
    ``smooth`` mode checks θ(u2) ≤ θ(u1) + tol nodewise.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got '{mode}'")
    diff = pair.u1.u - pair.u2.u
    order = float(np.max(diff))
    gap = float(abs(diff[pair.touch_node]))
    th1 = theta_of_graph(pair.slab, pair.u1).theta
    th2 = theta_of_graph(pair.slab, pair.u2).theta

    failures = []
    if order > ORDER_TOL:
        failures.append(f"ordering u1 <= u2 (violated by {order:.3e})")
    if gap > ORDER_TOL:
        failures.append(f"touching at node {pair.touch_node} (gap {gap:.3e})")
    comparison = float(np.max(th2 - th1))
    if mode == "support":
        if th1.min() < -theta_tol:
            failures.append(f"theta(u1) >= -{theta_tol:g} (min {th1.min():.6g})")
        if th2.max() > theta_tol:
            failures.append(f"theta(u2) <= {theta_tol:g} (max {th2.max():.6g})")
    elif comparison > theta_tol:
        failures.append(f"theta(u2) <= theta(u1) (violated by {comparison:.6g})")

    verdict = TouchingVerdict(mode=mode, max_order_violation=order, touch_gap=gap,
                              min_theta1=float(th1.min()), max_theta2=float(th2.max()),
                              max_comparison_violation=comparison, failures=tuple(failures))
    logger.info("Touching-pair verdict (%s): %s", mode, "pass" if verdict.passed else "; ".join(failures))
    return verdict


def coincidence_check(pair: TouchingPair, radius: float) -> float:
    """Largest |u1 - u2| over nodes within *radius* of the touching node."""
    pts = pair.u1.points
    centre = pts[pair.touch_node]
    near = np.linalg.norm(pts - centre, axis=-1) <= radius + 1e-12
    return float(np.max(np.abs(pair.u1.u - pair.u2.u)[near]))


# ── support families ──────────────────────────────────────────────────────

@dataclass(frozen=True)
class SupportFamilyReport:
    node: tuple[int, ...]
    point: tuple[float, ...]
    K: tuple[float, ...]
    radii: tuple[float, ...]
    epsilons: tuple[float, ...]
    theta_lower: tuple[float, ...]
    hessian_min_eig: tuple[float, ...]
    ordering_margin: tuple[float, ...]
    nec_holds: tuple[bool, ...]
    errors: tuple[str | None, ...] = field(default=())

    @property
    def k1(self) -> float:
        """Uniform lower Hessian bound: hessian_min_eig ≥ -k1 for every radius."""
        finite = [v for v in self.hessian_min_eig if math.isfinite(v)]
        return max([0.0] + [-v for v in finite])

    def theta_bound_ok(self, tol: float = 1e-6) -> bool:
        return all(
            (not nec) or not math.isfinite(th) or th >= -eps - tol
            for th, eps, nec in zip(self.theta_lower, self.epsilons, self.nec_holds)
        )


@dataclass(frozen=True)
class _NodeGeometry:
    Y: np.ndarray
    du: np.ndarray
    d2u: np.ndarray
    nu: float
    Z: np.ndarray
    E: np.ndarray
    gamma: np.ndarray
    G: np.ndarray
    beta: np.ndarray


def _node_geometry(slab: SlabChart, grid: GraphGrid, node: tuple[int, ...]) -> _NodeGeometry:
    node = tuple(int(i) for i in node)
    if not grid.interior[node] or any(i == 0 or i == s - 1 for i, s in zip(node, grid.shape)):
        raise LatticeMismatch(f"Node {node} is not an interior node")
    patch = grid.u[tuple(slice(i - 1, i + 2) for i in node)]
    grad, hess = lattice_derivatives(patch, grid.spacing)
    zero = (0,) * grid.dim
    du, d2u = grad[zero], hess[zero]
    Y = np.array([grid.u[node], *grid.points[node]])
    h_inv = np.linalg.inv(slab.spatial_metric(Y))
    u_up = h_inv @ du
    nu = 1.0 / math.sqrt(1.0 - float(du @ u_up))
    d = grid.dim
    E = np.zeros((d, d + 1))
    E[:, 0] = du
    E[:, 1:] = np.eye(d)
    return _NodeGeometry(Y=Y, du=du, d2u=d2u, nu=nu, Z=nu * np.concatenate([[1.0], u_up]), E=E,
                         gamma=slab.christoffel(Y), G=slab.slab_metric(Y), beta=slab.beta(Y))


def support_family_probe(slab: SlabChart, grid_u: GraphGrid, node: Sequence[int],
                         cone_radii: Sequence[float]) -> SupportFamilyReport:
    """Past support cones S_{p,K,r} at the lifted node, one per radius.

    K = Z + N is the graph's null normal at the node.  For each r the report
    holds θ of the support cone at p (to compare against -ε with
    ε = (n-2)/r) and the smallest Hessian eigenvalue of the support cone's
    slice through the slab.  Per-radius failures are recorded, not raised.
    """
    node = tuple(int(i) for i in node)
    geo = _node_geometry(slab, grid_u, node)
    model = slab.model
    n = model.n
    J = slab.embedding_jacobian(geo.Y)
    p = slab.lift(geo.Y)
    K_amb = J @ geo.Z + slab.normal(geo.Y)
    K_vec = model.vector(p, K_amb)
    scale = float(np.linalg.norm(K_amb))

    frame = build_screen_frame(model, p, model.vector(p, K_amb / scale))
    g = model.metric_fn(p.array)
    C = (J @ geo.E.T).T @ g @ frame.matrix.T           # C_ik = <E_i, e_k>
    b_p_tan = geo.E @ geo.beta @ geo.E.T
    z_gamma = np.einsum("a,ab,bij->ij", geo.Z, geo.G,
                        np.einsum("bcd,ic,jd->bij", geo.gamma, geo.E, geo.E))

    epsilons, thetas, hess_min, order_margin, necs, errors = [], [], [], [], [], []
    for r in cone_radii:
        epsilons.append((n - 2) / r)
        try:
            report = support_cone_at(model, p, K_vec, r)
        except (ConjugatePoint, DomainError) as exc:
            logger.warning("Support cone r=%g at node %s failed: %s", r, node, exc)
            thetas.append(float("nan"))
            hess_min.append(float("nan"))
            order_margin.append(float("nan"))
            necs.append(False)
            errors.append(str(exc))
            continue
        b_cone = scale * (C @ report.b_at_p @ C.T)
        hess_phi = (b_cone - b_p_tan + z_gamma) / geo.nu
        hess_phi = 0.5 * (hess_phi + hess_phi.T)
        thetas.append(report.theta_at_p)
        hess_min.append(float(np.linalg.eigvalsh(hess_phi)[0]))
        order_margin.append(float(np.linalg.eigvalsh(geo.d2u - hess_phi)[0]))
        necs.append(report.nec_holds)
        errors.append(None)

    result = SupportFamilyReport(
        node=node, point=p.coords, K=tuple(float(k) for k in K_amb),
        radii=tuple(float(r) for r in cone_radii), epsilons=tuple(epsilons),
        theta_lower=tuple(thetas), hessian_min_eig=tuple(hess_min),
        ordering_margin=tuple(order_margin), nec_holds=tuple(necs), errors=tuple(errors),
    )
    logger.info("Support family at node %s: k1 = %.6g over %d radii", node, result.k1, len(thetas))
    return result


def support_family_rows(report: SupportFamilyReport) -> tuple[list[str], list[list[float]]]:
    header = ["r", "epsilon", "theta_lower", "hessian_min_eig", "ordering_margin", "nec_holds"]
    rows = [
        [r, eps, th, hm, om, float(nec)]
        for r, eps, th, hm, om, nec in zip(report.radii, report.epsilons, report.theta_lower,
                                           report.hessian_min_eig, report.ordering_margin,
                                           report.nec_holds)
    ]
    return header, rows


# ── totally geodesic hypersurfaces ────────────────────────────────────────

@dataclass(frozen=True)
class Hypersurface:
    """Null hypersurface with closed-form samples and null normal field."""

    name: str
    model_name: str
    sample: Callable[[MetricModel, np.random.Generator], np.ndarray] = field(repr=False)
    normal_field: Callable[[MetricModel, np.ndarray], np.ndarray] = field(repr=False)


def _minkowski_sample(model, rng):
    x = rng.uniform(-1.0, 1.0, size=model.n - 1)
    return np.concatenate([[x[0]], x])


def _minkowski_normal(model, x):
    k = np.zeros(model.n)
    k[0] = k[1] = 1.0
    return k


def _horizon_sample(model, rng):
    mass = model.params["M"]
    return np.array([rng.uniform(-1.0, 1.0), 2.0 * mass,
                     rng.uniform(0.3, math.pi - 0.3), rng.uniform(0.0, 2.0 * math.pi)])


def _horizon_normal(model, x):
    return np.array([1.0, 0.0, 0.0, 0.0])


def _desitter_sample(model, rng):
    H = model.params["H"]
    t = rng.uniform(-0.5, 0.5)
    direction = rng.normal(size=model.n - 1)
    direction /= np.linalg.norm(direction)
    return np.concatenate([[t], direction * math.exp(-H * t) / H])


def _desitter_normal(model, x):
    H = model.params["H"]
    t, pos = x[0], x[1:]
    return np.concatenate([[1.0], -math.exp(-H * t) * pos / np.linalg.norm(pos)])


# Registry mapping hypersurface names to their closed-form description
HYPERSURFACES = {
    HYPERSURFACE_MINKOWSKI: Hypersurface(HYPERSURFACE_MINKOWSKI, MINKOWSKI, _minkowski_sample, _minkowski_normal),
    HYPERSURFACE_SCHWARZSCHILD: Hypersurface(HYPERSURFACE_SCHWARZSCHILD, SCHWARZSCHILD_EF,
                                             _horizon_sample, _horizon_normal),
    HYPERSURFACE_DESITTER: Hypersurface(HYPERSURFACE_DESITTER, DESITTER, _desitter_sample, _desitter_normal),
}


@dataclass(frozen=True)
class TotallyGeodesicReport:
    hypersurface_id: str
    samples: list[tuple[tuple[float, ...], tuple[float, ...], np.ndarray]] = field(repr=False)
    max_B_norm: float
    max_riccati_norm: float
    max_direct_norm: float


def _direct_b(model: MetricModel, entry: Hypersurface, x: np.ndarray, frame) -> np.ndarray:
    """B_ij = <∇_{e_i} K, e_j> from central differences of the normal field."""
    conn = connection_fn(model)(x)
    k = entry.normal_field(model, x)
    g = model.metric_fn(x)
    E = frame.matrix
    step = float(np.max(fd_steps(x, FD_STEP)))
    cov = []
    for e in E:
        dk = (entry.normal_field(model, x + step * e) - entry.normal_field(model, x - step * e)) / (2.0 * step)
        cov.append(dk + np.einsum("mab,a,b->m", conn, e, k))
    return np.array(cov) @ g @ E.T


def verify_totally_geodesic(model: MetricModel, hypersurface_id: str, sample_count: int = 50,
                            span: float = 5.0, seed: int = 0) -> TotallyGeodesicReport:
    """Measure B on a catalog null hypersurface two ways.

    Along each sampled generator b is evolved from 0 by the Riccati equation;
    at each sample point b is also computed directly from the null normal
    field.  ``max_B_norm`` is the larger of the two maxima (Frobenius norm).

    Raises
    ------
    UnknownHypersurface
        If *hypersurface_id* is not in the catalog or needs another model.
    """
    if hypersurface_id not in HYPERSURFACES:
        raise UnknownHypersurface(
            f"Unknown hypersurface '{hypersurface_id}'. Available: {', '.join(HYPERSURFACES)}"
        )
    entry = HYPERSURFACES[hypersurface_id]
    if model.name != entry.model_name:
        raise UnknownHypersurface(f"'{hypersurface_id}' lives in '{entry.model_name}', not '{model.name}'")

    rng = np.random.default_rng(seed)
    points = [entry.sample(model, rng) for _ in range(sample_count)]
    d = model.n - 2

    def measure(x: np.ndarray):
        p = model.point(x)
        K = model.vector(p, entry.normal_field(model, x))
        frame = build_screen_frame(model, p, K)
        direct = _direct_b(model, entry, x, frame)
        traj = integrate_geodesic(model, p, K, (0.0, span), nodes=11)
        states = riccati_evolve(traj, np.zeros((d, d)))
        riccati = max(float(np.linalg.norm(st.b)) for st in states)
        return p.coords, K.components, direct, riccati

    workers = thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(measure, points))
    else:
        results = [measure(x) for x in points]

    max_direct = max(float(np.linalg.norm(r[2])) for r in results)
    max_riccati = max(r[3] for r in results)
    report = TotallyGeodesicReport(
        hypersurface_id=hypersurface_id,
        samples=[(r[0], r[1], r[2]) for r in results],
        max_B_norm=max(max_direct, max_riccati),
        max_riccati_norm=max_riccati,
        max_direct_norm=max_direct,
    )
    logger.info("%s: max |B| = %.3e over %d samples (riccati %.3e, direct %.3e)", hypersurface_id,
                report.max_B_norm, sample_count, max_riccati, max_direct)
    return report


def totally_geodesic_rows(report: TotallyGeodesicReport) -> tuple[list[str], list[list[float]]]:
    if not report.samples:
        return ["b_norm"], []
    n = len(report.samples[0][0])
    header = [f"x{i}" for i in range(n)] + [f"K{i}" for i in range(n)] + ["b_norm"]
    rows = [[*x, *k, float(np.linalg.norm(b))] for x, k, b in report.samples]
    return header, rows
