"""
Scenario runners on graphs over a slab: graph-theta, solve and maxprin.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from ..constants import COINCIDENCE_TOL, DISCRETE_THETA_FACTOR, NEWTON_RESIDUAL_TOL
from ..errors import ValidationError
from ..graphop import (
    GraphGrid,
    build_profile,
    ellipticity_report,
    graph_rows,
    profile_theta,
    solve_theta,
    solver_rows,
    theta_of_graph,
)
from ..loader import ScenarioConfig
from ..maxprin import (
    TouchingPair,
    check_touching_hypotheses,
    coincidence_check,
    support_family_probe,
    support_family_rows,
)
from ..metrics import build_model
from ..slabs import SlabChart, slab_consistency, slab_from_model
from .result import Check, Plot, ScenarioResult, Series

logger = logging.getLogger(__name__)


# ── shared helpers ────────────────────────────────────────────────────────

def _axis_values(config: ScenarioConfig, key: str, d: int) -> list:
    values = config[key]
    if len(values) == 1:
        return list(values) * d
    if len(values) != d:
        raise ValidationError(f"needs 1 or {d} entries", key=key, line=config.lines.get(key))
    return list(values)


def build_lattice(config: ScenarioConfig) -> tuple[SlabChart, np.ndarray, list, list]:
    """Slab plus the box (center, extent, points) the scenario's graphs live on."""
    model = build_model(config["metric"])
    slab = slab_from_model(model, config["slab"])
    d = slab.dim_v
    center = config["center"] if config["center"] is not None else list(slab.center)
    if len(center) != d:
        raise ValidationError(f"needs {d} coordinates", key="center", line=config.lines.get("center"))
    return slab, np.asarray(center, dtype=float), _axis_values(config, "extent", d), _axis_values(config, "points", d)


def discrete_tolerance(grid: GraphGrid, theta_scale: float | None) -> float:
    h = float(np.max(grid.spacing))
    scale = max(1.0, abs(theta_scale or 0.0))
    return max(1e-8, DISCRETE_THETA_FACTOR * h * h * scale ** 3)


def _boundary_bump(grid: GraphGrid) -> np.ndarray:
    """Smooth bump equal to 1 at the box center and 0 on its boundary."""
    pts = grid.points
    bump = np.ones(grid.shape)
    for i, ax in enumerate(grid.axes):
        bump *= np.sin(math.pi * (pts[..., i] - ax[0]) / (ax[-1] - ax[0]))
    return bump


# ── graph-theta ───────────────────────────────────────────────────────────

def run_graph_theta(config: ScenarioConfig) -> ScenarioResult:
    slab, center, extent, points = build_lattice(config)
    profile = build_profile(config["profile"], slab.model.n)
    grid = GraphGrid.box(center, extent, points, profile)
    ev = theta_of_graph(slab, grid)
    ellipticity = ellipticity_report(slab, grid)
    consistency = slab_consistency(slab.model, slab, seed=config["seed"])

    scale = max(1.0, float(np.max(np.abs(ev.theta))))
    split_gap = float(np.max(np.abs(ev.theta - ev.h_sigma - ev.b_p_zz - ev.h_p)))
    principal = np.einsum("mij,mij->m", ev.a, ev.hessian) + ev.lower_order
    principal_gap = float(np.max(np.abs(ev.theta - principal)))

    result = ScenarioResult("graph-theta")
    result.add_table("graph", graph_rows(grid, ev))
    result.checks.extend([
        Check.at_most("decomposition", split_gap / scale, 1e-12),
        Check.at_most("principal_split", principal_gap / scale, 1e-12),
        Check.at_least("ellipticity_margin", ellipticity.min_margin, -1e-12),
    ])
    exact = profile_theta(profile, slab)
    if exact is not None:
        tol = config["tolerance"] or discrete_tolerance(grid, exact)
        result.checks.append(Check.at_most("theta_closed_form", float(np.max(np.abs(ev.theta - exact))), tol))
    result.summary.update(slab=slab.name, profile=profile.name, nodes=int(len(ev.theta)),
                          theta_min=float(ev.theta.min()), theta_max=float(ev.theta.max()),
                          theta_exact=exact, ellipticity_ratio=ellipticity.ratio,
                          slab_consistency=consistency.worst())
    return result


# ── solve ─────────────────────────────────────────────────────────────────

def run_solve(config: ScenarioConfig) -> ScenarioResult:
    slab, center, extent, points = build_lattice(config)
    n = slab.model.n
    boundary = build_profile(config["boundary"], n)
    boundary_grid = GraphGrid.box(center, extent, points, boundary)
    if config["init"] is not None:
        init_grid = GraphGrid.box(center, extent, points, build_profile(config["init"], n))
    else:
        init_grid = boundary_grid.with_u(boundary_grid.u + config["perturb"] * _boundary_bump(boundary_grid))

    grid, summary = solve_theta(slab, boundary_grid, config["target"], init_grid, config["max_iter"])
    ev = theta_of_graph(slab, grid)

    result = ScenarioResult("solve")
    result.add_table("graph", graph_rows(grid, ev))
    result.add_table("solver_history", solver_rows(summary))
    result.checks.append(Check.at_most("residual", summary.final_residual, NEWTON_RESIDUAL_TOL))
    exact = profile_theta(boundary, slab)
    if exact is not None and abs(exact - config["target"]) <= 1e-12:
        tol = config["tolerance"] or discrete_tolerance(grid, exact)
        err = float(np.max(np.abs(grid.u - boundary_grid.u)))
        result.checks.append(Check.at_most("manufactured_solution", err, tol))
    result.plots.append(Plot(
        "solver_history", "Newton residual", "iteration", "log10 residual",
        (Series("residual", list(range(len(summary.residual_history))),
                [math.log10(max(r, 1e-300)) for r in summary.residual_history]),),
    ))
    result.summary.update(slab=slab.name, iterations=summary.iterations,
                          damping_events=summary.damping_events,
                          krylov_iterations=int(sum(summary.krylov_iterations)),
                          fallback_solves=summary.fallback_solves,
                          final_residual=summary.final_residual)
    return result


# ── maxprin ───────────────────────────────────────────────────────────────

def run_maxprin(config: ScenarioConfig) -> ScenarioResult:
    slab, center, extent, points = build_lattice(config)
    n = slab.model.n
    u1 = GraphGrid.box(center, extent, points, build_profile(config["lower"], n))
    u2 = GraphGrid.box(center, extent, points, build_profile(config["upper"], n))
    if config["solve"]:
        # Two independent solves of theta = 0 sharing the lower graph's boundary data.
        boundary = u1
        u1, _ = solve_theta(slab, boundary, 0.0, u1)
        u2, _ = solve_theta(slab, boundary, 0.0, u2)
    touch = tuple(m // 2 for m in u1.shape)
    pair = TouchingPair(slab, u1, u2, touch)
    # Lattice graphs carry an O(h²) θ error, so the sign tolerance scales with the grid.
    theta_tol = config["theta_tol"] or discrete_tolerance(u1, None)

    verdict = check_touching_hypotheses(pair, theta_tol, config["mode"])
    gap = coincidence_check(pair, config["radius"])
    probe = support_family_probe(slab, u1, touch, sorted(config["probe_radii"]))

    result = ScenarioResult("maxprin")
    result.add_table("support_family", support_family_rows(probe))
    result.checks.append(Check("hypotheses", verdict.passed, float(len(verdict.failures)), 0.0,
                               "; ".join(verdict.failures)))
    if verdict.passed:
        result.checks.append(Check.at_most("coincidence", gap, COINCIDENCE_TOL))
    slack = [th + eps for th, eps, nec in zip(probe.theta_lower, probe.epsilons, probe.nec_holds)
             if nec and math.isfinite(th)]
    result.checks.append(Check("support_theta_bound", probe.theta_bound_ok(theta_tol),
                               min(slack) if slack else float("nan"), -theta_tol))
    result.plots.append(Plot(
        "support_family", "Support cone expansion against -epsilon", "r", "theta",
        (Series("theta_lower", list(probe.radii), list(probe.theta_lower)),
         Series("-epsilon", list(probe.radii), [-e for e in probe.epsilons])),
    ))
    result.summary.update(slab=slab.name, mode=verdict.mode, touch_node=list(touch), theta_tol=theta_tol,
                          failures=list(verdict.failures), coincidence_gap=gap,
                          min_theta1=verdict.min_theta1, max_theta2=verdict.max_theta2,
                          k1=probe.k1)
    return result
