"""
Null mean curvature of graphs t = u(x) in a timelike slab, and a solver for θ(u) = c.

θ(u) is assembled geometrically, node by node but vectorized over the lattice:

    Z    = ν(∂_t + ∇u)                        future unit normal of Σ in P
    H_Σ  = σ^{ij} B_Σ(E_i, E_j),  B_Σ(E_i, E_j) = -⟨Z, ∂_ij X + Γ̄(E_i, E_j)⟩
    θ    = H_Σ + B_P(Z, Z) + H_P

with X(x) = (u(x), x), E_i = ∂_i X and σ_ij = h_ij - ∂_i u ∂_j u.  The
principal part a^{ij} = ν h^{ij} + ν³ u^i u^j is assembled separately and the
lower-order remainder is whatever is left of θ.

Only second-order central differences are used; nodes whose stencil would
leave the lattice cannot be interior.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import LinearOperator, gmres, spilu, spsolve

from .constants import (
    ARMIJO_FACTOR,
    ARMIJO_SLOPE,
    EPS_SPACELIKE,
    ILU_DROP_TOL,
    ILU_FILL_FACTOR,
    JACOBIAN_STEP,
    KRYLOV_MAXITER,
    KRYLOV_RESTART,
    KRYLOV_RTOL,
    NEWTON_MAX_HALVINGS,
    NEWTON_MAX_ITER,
    NEWTON_RESIDUAL_TOL,
    NEWTON_STEP_TOL,
)
from .errors import (
    BoundaryStencil,
    DomainError,
    LatticeMismatch,
    NoConvergence,
    NotSpacelike,
    UnknownModel,
    ValidationError,
)
from .slabs import SlabChart
from .utils import parse_spec

logger = logging.getLogger(__name__)


# ── domain types ──────────────────────────────────────────────────────────

@dataclass(frozen=True)
class GraphGrid:
    """Rectangular lattice over V with u values and a Dirichlet mask."""

    axes: tuple[np.ndarray, ...] = field(repr=False)
    u: np.ndarray = field(repr=False)
    boundary_mask: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        shape = tuple(len(ax) for ax in self.axes)
        if self.u.shape != shape or self.boundary_mask.shape != shape:
            raise LatticeMismatch(f"u{self.u.shape} / mask{self.boundary_mask.shape} do not match axes {shape}")
        for ax in self.axes:
            if len(ax) < 3:
                raise ValueError("Every grid axis needs at least 3 points")
            gaps = np.diff(ax)
            if np.any(gaps <= 0.0) or np.ptp(gaps) > 1e-9 * abs(gaps[0]):
                raise ValueError("Grid axes must be uniform and increasing")

    @classmethod
    def box(cls, center: Sequence[float], extent: float | Sequence[float],
            points: int | Sequence[int], values: np.ndarray | Callable | float = 0.0) -> "GraphGrid":
        """Uniform box ``center ± extent`` with the outer ring as Dirichlet boundary."""
        center = np.asarray(center, dtype=float)
        d = center.size
        extent = np.broadcast_to(np.asarray(extent, dtype=float), (d,))
        points = np.broadcast_to(np.asarray(points, dtype=int), (d,))
        axes = tuple(np.linspace(c - e, c + e, int(m)) for c, e, m in zip(center, extent, points))
        mask = np.ones(tuple(int(m) for m in points), dtype=bool)
        mask[tuple(slice(1, -1) for _ in range(d))] = False
        grid = cls(axes=axes, u=np.zeros(mask.shape), boundary_mask=mask)
        if callable(values):
            return grid.with_u(values(grid.points))
        return grid.with_u(np.broadcast_to(np.asarray(values, dtype=float), mask.shape))

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.u.shape

    @property
    def spacing(self) -> np.ndarray:
        return np.array([ax[1] - ax[0] for ax in self.axes])

    @property
    def points(self) -> np.ndarray:
        """Node coordinates, shape (*grid.shape, dim)."""
        return np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)

    @property
    def interior(self) -> np.ndarray:
        return ~self.boundary_mask

    def with_u(self, u: np.ndarray) -> "GraphGrid":
        return replace(self, u=np.array(u, dtype=float, copy=True))

    def same_lattice(self, other: "GraphGrid") -> bool:
        return (self.shape == other.shape
                and all(np.array_equal(a, b) for a, b in zip(self.axes, other.axes))
                and np.array_equal(self.boundary_mask, other.boundary_mask))


@dataclass(frozen=True)
class OperatorEval:
    """θ(u) and its ingredients at the interior nodes, in ``index`` order."""

    index: np.ndarray = field(repr=False)
    theta: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)
    lower_order: np.ndarray = field(repr=False)
    nu: np.ndarray = field(repr=False)
    h_sigma: np.ndarray = field(repr=False)
    b_p_zz: np.ndarray = field(repr=False)
    h_p: np.ndarray = field(repr=False)
    hessian: np.ndarray = field(repr=False)
    shape: tuple[int, ...] = ()

    @property
    def decomposition(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.h_sigma, self.b_p_zz, self.h_p

    def scatter(self, values: np.ndarray) -> np.ndarray:
        """Place per-node *values* on the full lattice, NaN on the boundary."""
        out = np.full(self.shape, np.nan)
        out[tuple(self.index.T)] = values
        return out


@dataclass(frozen=True)
class GraphProfile:
    """Closed-form graph function with its known θ, where one exists."""

    name: str
    params: Mapping[str, float]
    fn: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    theta_exact: float | None = None

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.fn(np.asarray(x, dtype=float))


@dataclass
class SolveSummary:
    iterations: int = 0
    residual_history: list[float] = field(default_factory=list)
    step_history: list[float] = field(default_factory=list)
    damping_events: int = 0
    # GMRES inner iterations per Newton step
    krylov_iterations: list[int] = field(default_factory=list)
    fallback_solves: int = 0
    converged: bool = False

    @property
    def final_residual(self) -> float:
        return self.residual_history[-1] if self.residual_history else float("nan")


@dataclass(frozen=True)
class EllipticityReport:
    min_eig: float
    max_eig: float
    min_margin: float

    @property
    def ratio(self) -> float:
        return self.max_eig / self.min_eig


# ── pointwise kernels ─────────────────────────────────────────────────────

def _nu_batch(grad2: np.ndarray, eps: float = EPS_SPACELIKE) -> np.ndarray:
    grad2 = np.asarray(grad2, dtype=float)
    if np.any(~np.isfinite(grad2)) or np.any(grad2 >= 1.0 - eps):
        worst = float(np.nanmax(grad2)) if grad2.size else float("nan")
        raise NotSpacelike(f"|∇u|² = {worst:.6g} violates the spacelike bound 1 - {eps:g}")
    return 1.0 / np.sqrt(1.0 - grad2)


def _principal_batch(h_inv: np.ndarray, u_up: np.ndarray, nu: np.ndarray) -> np.ndarray:
    return (nu[..., None, None] * h_inv
            + (nu ** 3)[..., None, None] * u_up[..., :, None] * u_up[..., None, :])


def nu_of(grad_u: Sequence[float], h_inv: np.ndarray, eps: float = EPS_SPACELIKE) -> float:
    """ν = 1/√(1 - |∇u|²) with |∇u|² = h^{ij} ∂_i u ∂_j u.

    Raises
    ------
    NotSpacelike
        If |∇u|² ≥ 1 - eps.
    """
    du = np.asarray(grad_u, dtype=float)
    grad2 = float(du @ np.asarray(h_inv, dtype=float) @ du)
    return float(_nu_batch(np.array(grad2), eps))


def principal_coeffs(x: Sequence[float], u: float, du: Sequence[float], slab: SlabChart) -> np.ndarray:
    """a^{ij} = ν h^{ij} + ν³ u^i u^j with h_ij = g_ij(u(x), x)."""
    Y = np.array([u, *np.asarray(x, dtype=float)])
    h_inv = np.linalg.inv(slab.spatial_metric(Y))
    du = np.asarray(du, dtype=float)
    u_up = h_inv @ du
    nu = _nu_batch(np.array(du @ u_up))
    return _principal_batch(h_inv, u_up, nu)


# ── lattice differences ───────────────────────────────────────────────────

def _shifted(u: np.ndarray, offset: Sequence[int]) -> np.ndarray:
    """u at node + offset, over the block of nodes one step inside every edge."""
    return u[tuple(slice(1 + o, u.shape[k] - 1 + o) for k, o in enumerate(offset))]


def lattice_derivatives(u: np.ndarray, h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Central first and second differences on the inner block."""
    d = u.ndim
    zero = [0] * d
    centre = _shifted(u, zero)
    grad = np.empty(centre.shape + (d,))
    hess = np.empty(centre.shape + (d, d))
    for i in range(d):
        plus, minus = list(zero), list(zero)
        plus[i], minus[i] = 1, -1
        up, dn = _shifted(u, plus), _shifted(u, minus)
        grad[..., i] = (up - dn) / (2.0 * h[i])
        hess[..., i, i] = (up - 2.0 * centre + dn) / (h[i] * h[i])
        for j in range(i + 1, d):
            def corner(si, sj):
                off = list(zero)
                off[i], off[j] = si, sj
                return _shifted(u, off)
            val = (corner(1, 1) - corner(1, -1) - corner(-1, 1) + corner(-1, -1)) / (4.0 * h[i] * h[j])
            hess[..., i, j] = hess[..., j, i] = val
    return grad, hess


def _interior_index(grid: GraphGrid) -> np.ndarray:
    idx = np.argwhere(grid.interior)
    shape = np.array(grid.shape)
    if idx.size and (np.any(idx == 0) or np.any(idx == shape - 1)):
        raise BoundaryStencil("An interior node lies on the lattice edge; its stencil would leave the grid")
    return idx


# ── operator ──────────────────────────────────────────────────────────────

def theta_of_graph(slab: SlabChart, grid: GraphGrid) -> OperatorEval:
    """Null mean curvature θ(u) of graph u at every interior node.

    Raises
    ------
    NotSpacelike
        If |∇u|² ≥ 1 - ε at an interior node.
    BoundaryStencil
        If an interior node's stencil leaves the lattice.
    DomainError
        If the graph leaves the slab.
    """
    if grid.dim != slab.dim_v:
        raise LatticeMismatch(f"Grid has {grid.dim} axes, slab '{slab.name}' needs {slab.dim_v}")
    idx = _interior_index(grid)
    d = grid.dim
    grad_blk, hess_blk = lattice_derivatives(grid.u, grid.spacing)
    inner = tuple((idx - 1).T)
    du = grad_blk[inner]
    d2u = hess_blk[inner]
    x = grid.points[tuple(idx.T)]
    u = grid.u[tuple(idx.T)]

    Y = np.concatenate([u[:, None], x], axis=1)
    if not np.all(slab.contains(Y)):
        raise DomainError(f"Graph leaves slab '{slab.name}' (t range {slab.t_range})")

    h = slab.spatial_metric(Y)
    h_inv = np.linalg.inv(h)
    u_up = np.einsum("mij,mj->mi", h_inv, du)
    grad2 = np.einsum("mi,mi->m", du, u_up)
    nu = _nu_batch(grad2)

    m = len(u)
    Z = nu[:, None] * np.concatenate([np.ones((m, 1)), u_up], axis=1)
    E = np.zeros((m, d, d + 1))
    E[:, :, 0] = du
    E[:, :, 1:] = np.eye(d)

    G = slab.slab_metric(Y)
    gamma = slab.christoffel(Y)
    accel = np.einsum("mabc,mib,mjc->mija", gamma, E, E)
    accel[:, :, :, 0] += d2u
    Z_low = np.einsum("ma,mab->mb", Z, G)
    b_sigma = -np.einsum("mb,mijb->mij", Z_low, accel)
    sigma = h - du[:, :, None] * du[:, None, :]
    h_sigma = np.einsum("mij,mij->m", np.linalg.inv(sigma), b_sigma)

    b_p_zz = np.einsum("mab,ma,mb->m", slab.beta(Y), Z, Z)
    h_p = np.asarray(slab.mean_curvature(Y), dtype=float).reshape(m)
    theta = h_sigma + b_p_zz + h_p

    a = _principal_batch(h_inv, u_up, nu)
    lower = theta - np.einsum("mij,mij->m", a, d2u)
    logger.debug("theta_of_graph on %s: %d nodes, max|theta| %.3e", slab.name, m,
                 float(np.max(np.abs(theta))) if m else 0.0)
    return OperatorEval(index=idx, theta=theta, a=a, lower_order=lower, nu=nu,
                        h_sigma=h_sigma, b_p_zz=b_p_zz, h_p=h_p, hessian=d2u, shape=grid.shape)


def decompose_theta(slab: SlabChart, grid: GraphGrid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(H_Σ, B_P(Z,Z), H_P) per interior node; they sum to θ."""
    return theta_of_graph(slab, grid).decomposition


def ellipticity_report(slab: SlabChart, grid: GraphGrid) -> EllipticityReport:
    """Spectrum of a^{ij} over the interior and its margin above ν·λ_min(h^{ij})."""
    ev = theta_of_graph(slab, grid)
    eig = np.linalg.eigvalsh(ev.a)
    Y = np.concatenate([grid.u[tuple(ev.index.T)][:, None], grid.points[tuple(ev.index.T)]], axis=1)
    h_inv_eig = np.linalg.eigvalsh(np.linalg.inv(slab.spatial_metric(Y)))
    margin = eig[:, 0] - ev.nu * h_inv_eig[:, 0]
    return EllipticityReport(min_eig=float(eig[:, 0].min()), max_eig=float(eig[:, -1].max()),
                             min_margin=float(margin.min()))


# ── graph profiles ────────────────────────────────────────────────────────

def _vec(params: Mapping[str, float], prefix: str, d: int) -> np.ndarray:
    return np.array([float(params.get(f"{prefix}{i + 1}", 0.0)) for i in range(d)])


def _profile_linear(params, n):
    k = _vec(params, "k", n - 2)
    c = float(params.get("c", 0.0))
    if float(k @ k) >= 1.0:
        raise ValueError("Linear profile needs |k| < 1 to be spacelike")
    return lambda x: x @ k + c, 0.0


def _profile_constant(params, n):
    c = float(params.get("c", 0.0))
    return lambda x: np.full(x.shape[:-1], c), 0.0


def _cone(params, n, sign):
    offset = float(params.get("offset", 0.5))
    if offset <= 0.0:
        raise ValueError("Cone offset must be positive")
    t0 = float(params.get("t0", 0.0))
    y0 = _vec(params, "y", n - 2)

    def fn(x):
        r2 = np.sum((x - y0) ** 2, axis=-1)
        return t0 + sign * np.sqrt(r2 + offset * offset)

    return fn, sign * (n - 2) / offset


def _profile_offset_cone(params, n):
    return _cone(params, n, 1.0)


def _profile_offset_past_cone(params, n):
    return _cone(params, n, -1.0)


def _profile_cylinder_null_plane(params, n):
    rho = float(params.get("rho", 1.0))
    c = float(params.get("c", 0.0))
    return lambda x: rho * np.cos(x[..., 0] / rho) + c, 0.0


# Registry mapping profile names to builders: params, n -> (fn, exact theta)
PROFILES = {
    "linear": _profile_linear,
    "constant": _profile_constant,
    "offset_cone": _profile_offset_cone,
    "offset_past_cone": _profile_offset_past_cone,
    "cylinder_null_plane": _profile_cylinder_null_plane,
}

# Profiles whose exact θ only holds in a particular slab
_PROFILE_SLAB = {
    "linear": ("minkowski_hyperplane",),
    "constant": ("minkowski_hyperplane",),
    "offset_cone": ("minkowski_hyperplane",),
    "offset_past_cone": ("minkowski_hyperplane",),
    "cylinder_null_plane": ("minkowski_cylinder",),
}


def build_profile(spec: str | tuple[str, Mapping[str, float]], n: int) -> GraphProfile:
    """Graph profile from ``"name{k=v}"`` for an n-dimensional spacetime.

    The exact θ refers to the slab the profile is designed for (see
    :func:`profile_theta`).
    """
    name, params = parse_spec(spec) if isinstance(spec, str) else (spec[0].lower(), dict(spec[1]))
    if name not in PROFILES:
        raise UnknownModel(f"Unknown profile '{name}'. Available: {', '.join(PROFILES)}")
    try:
        fn, theta = PROFILES[name](params, n)
    except ValueError as exc:
        raise ValidationError(f"Profile '{name}': {exc}") from exc
    return GraphProfile(name=name, params=dict(params), fn=fn, theta_exact=theta)


def profile_theta(profile: GraphProfile, slab: SlabChart) -> float | None:
    """Known θ of *profile* in *slab*, or None when no closed form applies."""
    if slab.name not in _PROFILE_SLAB.get(profile.name, ()):
        return None
    if slab.name == "minkowski_cylinder" and profile.params.get("rho", 1.0) != slab.params["rho"]:
        return None
    return profile.theta_exact


# ── solver ────────────────────────────────────────────────────────────────

def _residual(slab: SlabChart, grid: GraphGrid, target: np.ndarray) -> np.ndarray:
    return theta_of_graph(slab, grid).theta - target


def _numeric_jacobian(slab: SlabChart, grid: GraphGrid, idx: np.ndarray,
                      base: np.ndarray, target: np.ndarray) -> sparse.csr_matrix:
    """Forward-difference Jacobian, 3^d colors (stencils of one color never overlap)."""
    d = grid.dim
    m = len(idx)
    position = np.full(grid.shape, -1, dtype=int)
    position[tuple(idx.T)] = np.arange(m)
    shape = np.array(grid.shape)
    rows, cols, vals = [], [], []

    for color in itertools.product(range(3), repeat=d):
        color = np.array(color)
        chosen = np.all(idx % 3 == color, axis=1)
        if not np.any(chosen):
            continue
        u = grid.u.copy()
        nodes = tuple(idx[chosen].T)
        step = JACOBIAN_STEP * np.maximum(1.0, np.abs(u[nodes]))
        u[nodes] += step
        delta = np.zeros(grid.shape)
        delta[nodes] = step
        dres = _residual(slab, grid.with_u(u), target) - base

        rel = (color - idx) % 3
        offset = np.where(rel == 2, -1, rel)
        q = idx + offset
        inside = np.all((q >= 0) & (q < shape), axis=1)
        q_pos = np.full(m, -1)
        q_pos[inside] = position[tuple(q[inside].T)]
        ok = q_pos >= 0
        rows.append(np.nonzero(ok)[0])
        cols.append(q_pos[ok])
        vals.append(dres[ok] / delta[tuple(q[ok].T)])

    return sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(m, m))


def _principal_matrix(grid: GraphGrid, idx: np.ndarray, a: np.ndarray) -> sparse.csr_matrix:
    """Discrete a^{ij} ∂_ij restricted to the unknowns."""
    d = grid.dim
    h = grid.spacing
    m = len(idx)
    position = np.full(grid.shape, -1, dtype=int)
    position[tuple(idx.T)] = np.arange(m)
    rows, cols, vals = [], [], []

    def add(offset, weight):
        q = idx + np.asarray(offset)
        q_pos = position[tuple(q.T)]
        ok = q_pos >= 0
        rows.append(np.nonzero(ok)[0])
        cols.append(q_pos[ok])
        vals.append(weight[ok])

    for i in range(d):
        e = np.zeros(d, dtype=int)
        e[i] = 1
        add(np.zeros(d, dtype=int), -2.0 * a[:, i, i] / h[i] ** 2)
        add(e, a[:, i, i] / h[i] ** 2)
        add(-e, a[:, i, i] / h[i] ** 2)
        for j in range(i + 1, d):
            f = np.zeros(d, dtype=int)
            f[j] = 1
            w = 2.0 * a[:, i, j] / (4.0 * h[i] * h[j])
            add(e + f, w)
            add(-e - f, w)
            add(e - f, -w)
            add(-e + f, -w)

    return sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(m, m))


def _newton_direction(J: sparse.csr_matrix, principal: sparse.csr_matrix, rhs: np.ndarray,
                      summary: SolveSummary) -> np.ndarray:
    """Solve J du = rhs by GMRES, preconditioned with an incomplete LU of the principal part.

    Falls back to a sparse direct solve of J, then of the principal part, when
    the Krylov solve does not converge or the factorization is singular.
    """
    P = principal.tocsc()
    try:
        ilu = spilu(P, drop_tol=ILU_DROP_TOL, fill_factor=ILU_FILL_FACTOR)
        M = LinearOperator(P.shape, matvec=ilu.solve)
    except RuntimeError:
        logger.debug("ILU of the principal part is singular, running GMRES unpreconditioned")
        M = None

    inner = [0]

    def count(_):
        inner[0] += 1

    du, info = gmres(J, rhs, rtol=KRYLOV_RTOL, atol=0.0, restart=KRYLOV_RESTART,
                     maxiter=KRYLOV_MAXITER, M=M, callback=count, callback_type="pr_norm")
    summary.krylov_iterations.append(inner[0])
    if info == 0 and np.all(np.isfinite(du)):
        return du

    summary.fallback_solves += 1
    logger.debug("GMRES stopped with info=%d after %d iterations, solving directly", info, inner[0])
    du = spsolve(J.tocsc(), rhs)
    if not np.all(np.isfinite(du)):
        du = spsolve(P, rhs)
    return du


def _line_search(slab: SlabChart, grid: GraphGrid, nodes: tuple, du: np.ndarray, target: np.ndarray,
                 rnorm: float) -> tuple[float, GraphGrid, OperatorEval, np.ndarray, float]:
    """Backtrack u + λ du until the Armijo condition holds on max|θ - c|.

    Raises
    ------
    NotSpacelike
        If the last trial step left the spacelike region.
    NoConvergence
        If the last trial step was spacelike but did not reduce the residual.
    """
    lam = 1.0
    last_failure: NotSpacelike | None = None
    for _ in range(NEWTON_MAX_HALVINGS + 1):
        u_trial = grid.u.copy()
        u_trial[nodes] += lam * du
        trial = grid.with_u(u_trial)
        try:
            ev_trial = theta_of_graph(slab, trial)
        except NotSpacelike as exc:
            last_failure = exc
        else:
            last_failure = None
            res_trial = ev_trial.theta - target
            tnorm = float(np.max(np.abs(res_trial)))
            if tnorm <= (1.0 - ARMIJO_SLOPE * lam) * rnorm or tnorm <= NEWTON_RESIDUAL_TOL:
                return lam, trial, ev_trial, res_trial, tnorm
        lam *= ARMIJO_FACTOR
    if last_failure is not None:
        raise NotSpacelike(f"Every damped Newton step left the spacelike region: {last_failure}")
    raise NoConvergence(f"Line search could not reduce the residual {rnorm:.3e}")


def solve_theta(slab: SlabChart, boundary_data: GraphGrid, target_c: float | np.ndarray,
                init_u: GraphGrid | None = None, max_iter: int = NEWTON_MAX_ITER,
                ) -> tuple[GraphGrid, SolveSummary]:
    """Damped Newton iteration for θ(u) = target_c with Dirichlet data.

    Boundary values are taken from *boundary_data*; *init_u* (defaults to
    *boundary_data*) provides the interior start.  Each Newton system is
    solved by GMRES preconditioned with the discrete principal part
    a^{ij} ∂_ij.  Converged when max|θ(u) - c| ≤ 1e-9 and the last step's
    sup-norm ≤ 1e-10.

    Raises
    ------
    NoConvergence
        If not converged after *max_iter* Newton steps, or the line search
        cannot reduce the residual.
    NotSpacelike
        If the start is not spacelike or the damped trial steps end outside
        the spacelike region.
    LatticeMismatch
        If *init_u* and *boundary_data* live on different lattices.
    """
    init = init_u if init_u is not None else boundary_data
    if not init.same_lattice(boundary_data):
        raise LatticeMismatch("init_u and boundary_data must share lattice and boundary mask")
    u0 = init.u.copy()
    u0[boundary_data.boundary_mask] = boundary_data.u[boundary_data.boundary_mask]
    grid = boundary_data.with_u(u0)

    idx = _interior_index(grid)
    nodes = tuple(idx.T)
    target = np.broadcast_to(np.asarray(target_c, dtype=float), (len(idx),)) \
        if np.ndim(target_c) == 0 else np.asarray(target_c, dtype=float)[nodes]

    summary = SolveSummary()
    ev = theta_of_graph(slab, grid)
    res = ev.theta - target
    rnorm = float(np.max(np.abs(res)))
    last_step = float("inf")
    summary.residual_history.append(rnorm)

    for it in range(max_iter + 1):
        if rnorm <= NEWTON_RESIDUAL_TOL and last_step <= NEWTON_STEP_TOL:
            summary.converged = True
            break
        if it == max_iter:
            break

        J = _numeric_jacobian(slab, grid, idx, res, target)
        du = _newton_direction(J, _principal_matrix(grid, idx, ev.a), -res, summary)
        try:
            lam, grid, ev, res, rnorm = _line_search(slab, grid, nodes, du, target, rnorm)
        except NoConvergence as exc:
            raise NoConvergence(f"Newton step {it}: {exc}") from exc

        if lam < 1.0:
            summary.damping_events += 1
        last_step = lam * float(np.max(np.abs(du))) if du.size else 0.0
        summary.iterations = it + 1
        summary.residual_history.append(rnorm)
        summary.step_history.append(last_step)
        logger.debug("Newton %d: residual %.3e, step %.3e, lambda %g, gmres %d", it + 1, rnorm, last_step,
                     lam, summary.krylov_iterations[-1])

    logger.info("solve_theta on %s: %d iterations, residual %.3e, %s", slab.name,
                summary.iterations, rnorm, "converged" if summary.converged else "NOT converged")
    if not summary.converged:
        raise NoConvergence(f"No convergence after {max_iter} Newton steps (residual {rnorm:.3e})")
    return grid, summary


# ── tabular export ────────────────────────────────────────────────────────

def graph_rows(grid: GraphGrid, ev: OperatorEval) -> tuple[list[str], list[list[float]]]:
    """CSV header and rows per interior node: x, u, theta, nu, decomposition."""
    header = [f"x{i + 1}" for i in range(grid.dim)] + ["u", "theta", "nu", "h_sigma", "b_p_zz", "h_p"]
    pts = grid.points[tuple(ev.index.T)]
    u = grid.u[tuple(ev.index.T)]
    rows = [
        [*map(float, pts[k]), float(u[k]), float(ev.theta[k]), float(ev.nu[k]),
         float(ev.h_sigma[k]), float(ev.b_p_zz[k]), float(ev.h_p[k])]
        for k in range(len(u))
    ]
    return header, rows


def solver_rows(summary: SolveSummary) -> tuple[list[str], list[list[float]]]:
    header = ["iteration", "residual", "step"]
    steps = [float("nan")] + summary.step_history
    return header, [[k, r, s] for k, (r, s) in enumerate(zip(summary.residual_history, steps))]
