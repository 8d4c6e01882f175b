"""
Scenario runners on the ambient spacetime: curvature, geodesic, congruence,
focusing-sweep and cone.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from ..congruence import (
    ConeSpec,
    cone_congruence,
    congruence_rows,
    focusing_margin,
    focusing_rows,
    focusing_time_bound,
    monotonicity_gap,
    raychaudhuri_evolve,
    riccati_evolve,
    support_cone_at,
)
from ..constants import (
    CONDITION_LIMIT,
    DESITTER,
    MINKOWSKI,
    MONOTONICITY_TOL,
    NULL_DRIFT_EXPECTED,
    PAST_CONE,
    PPWAVE,
    RAYCHAUDHURI_REFINE,
    SCHWARZSCHILD,
    SCHWARZSCHILD_EF,
)
from ..errors import ValidationError
from ..geodesic import (
    JacobiState,
    StepControl,
    integrate_geodesic,
    jacobi_evolve,
    null_tangent,
    trajectory_rows,
)
from ..loader import ScenarioConfig
from ..metrics import build_model
from ..spacetime import MetricModel, SpacetimePoint, TangentVector, curvature_at
from .result import Check, Plot, ScenarioResult, Series

logger = logging.getLogger(__name__)

# Models whose screen curvature vanishes along every null geodesic.
SCREEN_FLAT = (MINKOWSKI, DESITTER)


# ── shared helpers ────────────────────────────────────────────────────────

def step_control(config: ScenarioConfig) -> StepControl:
    return StepControl(rtol=config["rtol"], atol=config["atol"])


def model_point(model: MetricModel, config: ScenarioConfig, key: str) -> SpacetimePoint:
    coords = config[key]
    if len(coords) != model.n:
        raise ValidationError(f"needs {model.n} coordinates for {model.name}", key=key,
                              line=config.lines.get(key))
    return model.point(coords)


def null_direction(model: MetricModel, p: SpacetimePoint, config: ScenarioConfig, key: str,
                   past: bool = False) -> TangentVector:
    """Direction from config: n components as given, or n-1 spatial
    components completed to a null vector."""
    comps = config[key]
    if len(comps) == model.n:
        return model.vector(p, comps)
    if len(comps) == model.n - 1:
        k = null_tangent(model, p, comps).array
        return model.vector(p, -k if past else k)
    raise ValidationError(f"needs {model.n} or {model.n - 1} components", key=key,
                          line=config.lines.get(key))


def _series_plot(name: str, title: str, xlabel: str, ylabel: str, xs, columns) -> Plot:
    return Plot(name, title, xlabel, ylabel,
                tuple(Series(label, list(map(float, xs)), list(map(float, ys))) for label, ys in columns))


# ── curvature ─────────────────────────────────────────────────────────────

def _default_point(model: MetricModel) -> np.ndarray:
    x = np.zeros(model.n)
    if model.name == SCHWARZSCHILD:
        x[1:3] = 6.0 * model.params["M"], math.pi / 2.0
    elif model.name == SCHWARZSCHILD_EF:
        x[1:3] = 3.0 * model.params["M"], math.pi / 2.0
    elif model.name == PPWAVE:
        x[2] = 0.3
        if model.n > 3:
            x[3] = -0.2
    return x


def expected_ricci(model: MetricModel, x: np.ndarray) -> np.ndarray:
    """Closed-form Ricci tensor of the catalog models."""
    if model.name == DESITTER:
        return (model.n - 1) * model.params["H"] ** 2 * model.metric_fn(x)
    out = np.zeros((model.n, model.n))
    if model.name == PPWAVE:
        out[0, 0] = (model.n - 2) * model.params["amplitude"]
    return out


def run_curvature(config: ScenarioConfig) -> ScenarioResult:
    model = build_model(config["metric"])
    base = np.asarray(config["point"], dtype=float) if config["point"] else _default_point(model)
    if base.size != model.n:
        raise ValidationError(f"needs {model.n} coordinates", key="point", line=config.lines.get("point"))
    rng = np.random.default_rng(config["seed"])
    points = [base] + [base + rng.uniform(-0.25, 0.25, size=model.n) for _ in range(config["samples"] - 1)]

    names = ["antisym_first", "antisym_last", "pair_exchange", "bianchi", "ricci_sym"]
    header = [f"x{i}" for i in range(model.n)] + names + ["ricci_max", "ricci_residual"]
    rows, worst, worst_ricci = [], dict.fromkeys(names, 0.0), 0.0
    for x in points:
        sample = curvature_at(model, model.point(x))
        defects = sample.symmetry_defect()
        residual = float(np.max(np.abs(sample.ricci - expected_ricci(model, x))))
        for key in names:
            worst[key] = max(worst[key], defects[key])
        worst_ricci = max(worst_ricci, residual)
        rows.append([*map(float, x), *(defects[k] for k in names),
                     float(np.max(np.abs(sample.ricci))), residual])

    tol = config["tolerance"]
    result = ScenarioResult("curvature")
    result.add_table("curvature", (header, rows))
    result.checks.extend(Check.at_most(key, worst[key], tol) for key in names)
    result.checks.append(Check.at_most("ricci_closed_form", worst_ricci, tol))
    result.summary.update(model=model.name, samples=len(points),
                          analytic_connection=model.has_analytic_connection)
    return result


# ── geodesic ──────────────────────────────────────────────────────────────

def run_geodesic(config: ScenarioConfig) -> ScenarioResult:
    model = build_model(config["metric"])
    p = model_point(model, config, "x0")
    v = null_direction(model, p, config, "v0")
    traj = integrate_geodesic(model, p, v, (0.0, config["s_end"]), step_control(config),
                              config["nodes"], with_frame=False)

    result = ScenarioResult("geodesic")
    result.add_table("trajectory", trajectory_rows(traj))
    result.checks.append(Check.at_most("null_drift", traj.max_drift, NULL_DRIFT_EXPECTED))
    result.plots.append(_series_plot(
        "trajectory", f"Null geodesic in {model.name}", "s", "coordinate", traj.s,
        [(model.coordinate_names[i], traj.x[:, i]) for i in range(model.n)],
    ))
    result.summary.update(model=model.name, nodes=len(traj), max_null_drift=traj.max_drift)
    return result


# ── congruence ────────────────────────────────────────────────────────────

def _initial_b(config: ScenarioConfig, d: int) -> np.ndarray:
    b0 = np.asarray(config["b0"], dtype=float)
    if b0.size == 1:
        return float(b0[0]) * np.eye(d)
    if b0.size == d * d:
        return b0.reshape(d, d)
    raise ValidationError(f"needs 1 or {d * d} entries", key="b0", line=config.lines.get("b0"))


def run_congruence(config: ScenarioConfig) -> ScenarioResult:
    model = build_model(config["metric"])
    d = model.n - 2
    p = model_point(model, config, "x0")
    v = null_direction(model, p, config, "v0")
    b0 = _initial_b(config, d)
    traj = integrate_geodesic(model, p, v, (0.0, config["s_end"]), step_control(config), config["nodes"])

    states = riccati_evolve(traj, b0)
    jacobi = jacobi_evolve(model, traj, JacobiState(0.0, np.eye(d), b0))
    # Raychaudhuri reads σ² between nodes from a spline, so cross-check on a finer node set.
    fine = integrate_geodesic(model, p, v, (0.0, config["s_end"]), step_control(config),
                              (len(traj) - 1) * RAYCHAUDHURI_REFINE + 1)
    fine_states = riccati_evolve(fine, b0)
    fine_thetas = raychaudhuri_evolve(fine, float(np.trace(b0)), fine_states)
    thetas = fine_thetas[::RAYCHAUDHURI_REFINE]

    tol = config["tolerance"]
    trace_gap = max(abs(th - st.theta) for (_, th), st in zip(fine_thetas, fine_states))
    oracle_gap, wronskian_gap = 0.0, 0.0
    w0 = jacobi[0].wronskian()
    for st, js in zip(states, jacobi):
        wronskian_gap = max(wronskian_gap, float(np.max(np.abs(js.wronskian() - w0))))
        if np.linalg.cond(js.A) > CONDITION_LIMIT:
            continue
        b_j = js.Adot @ np.linalg.inv(js.A)
        oracle_gap = max(oracle_gap, float(np.max(np.abs(b_j - st.b))) / max(1.0, float(np.max(np.abs(st.b)))))

    result = ScenarioResult("congruence")
    result.add_table("congruence", congruence_rows(states))
    result.checks.extend([
        Check.at_most("symmetry", max(st.asymmetry for st in states), 1e-8),
        Check.at_most("raychaudhuri_trace", trace_gap, tol),
        Check.at_most("jacobi_oracle", oracle_gap, tol),
        Check.at_most("wronskian", wronskian_gap, tol),
    ])
    result.plots.append(_series_plot(
        "expansion", "Expansion along the generator", "s", "theta", traj.s,
        [("Riccati", [st.theta for st in states]), ("Raychaudhuri", [th for _, th in thetas])],
    ))
    result.summary.update(model=model.name, theta_end=states[-1].theta,
                          focusing_time_bound=focusing_time_bound(states[0].theta, model.n))
    return result


# ── focusing sweep ────────────────────────────────────────────────────────

def run_focusing_sweep(config: ScenarioConfig) -> ScenarioResult:
    model = build_model(config["metric"])
    p = model_point(model, config, "x0")
    K = null_direction(model, p, config, "k")
    control = step_control(config)
    radii = sorted(config["radii"])
    reports = [support_cone_at(model, p, K, r, control) for r in radii]

    tol = config["tolerance"]
    nec = all(rep.nec_holds for rep in reports)
    min_energy = min(rep.min_null_energy for rep in reports)
    result = ScenarioResult("focusing-sweep")
    result.add_table("focusing_sweep", focusing_rows(reports))
    # The focusing bound and its monotonicity are only claimed under the null energy condition.
    result.checks.append(Check("null_energy", nec, min_energy, -model.curvature_tolerance,
                               "" if nec else "focusing bound not asserted"))
    if nec:
        violated = [rep.r for rep in reports if rep.bound_violated]
        result.checks.append(Check.at_least("focusing_margin", min(focusing_margin(rep) for rep in reports), -tol,
                                            ", ".join(f"r={r:g}" for r in violated)))
        if len(reports) > 1:
            gap = min(monotonicity_gap(a, b) for a, b in zip(reports, reports[1:]))
            result.checks.append(Check.at_least("monotonicity", gap, -MONOTONICITY_TOL))
    else:
        logger.warning("Null energy condition fails along the sweep; focusing bound not asserted")
    result.plots.append(_series_plot(
        "focusing_sweep", "Support cone expansion at p", "r", "theta", radii,
        [("theta_at_p", [rep.theta_at_p for rep in reports]), ("bound", [rep.bound for rep in reports])],
    ))
    result.summary.update(model=model.name, nec_holds=nec, min_null_energy=min_energy)
    return result


# ── cone ──────────────────────────────────────────────────────────────────

def run_cone(config: ScenarioConfig) -> ScenarioResult:
    model = build_model(config["metric"])
    vertex = model_point(model, config, "vertex")
    past = config["orientation"] == PAST_CONE
    direction = null_direction(model, vertex, config, "direction", past=past)
    cone = ConeSpec(vertex, direction, config["orientation"])
    states = cone_congruence(model, cone, (0.0, config["tau_end"]), config["nodes"],
                             step_control=step_control(config))

    result = ScenarioResult("cone")
    result.add_table("cone", congruence_rows(states))
    result.checks.append(Check.at_most("symmetry", max(st.asymmetry for st in states), 1e-8))
    if model.name in SCREEN_FLAT:
        rel = max(abs(st.theta - cone.sign * (model.n - 2) / st.s) / max(1.0, (model.n - 2) / st.s)
                  for st in states)
        result.checks.append(Check.at_most("closed_form_theta", rel, 1e-8))
    result.plots.append(_series_plot(
        "cone", f"{cone.orientation.replace('_', ' ')} expansion", "tau", "theta",
        [st.s for st in states], [("theta", [st.theta for st in states])],
    ))
    result.summary.update(model=model.name, orientation=cone.orientation, theta_end=states[-1].theta)
    return result
