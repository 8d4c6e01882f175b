"""
Centralized constants for the nullgeo toolkit.

All tolerances, default settings, catalog names and lookup tables live here so
that every module imports from one source of truth.
"""

from __future__ import annotations

# ── Version ───────────────────────────────────────────────────────────────
TOOLKIT_VERSION = "1.0.0"

# ── Causal classification / curvature tolerances ─────────────────────────
TAU_NULL = 1e-9                     # |<X,X>| <= TAU_NULL * |X|_delta^2  ->  null
CURVATURE_TOL_FD = 1e-6             # finite-difference Christoffel path
CURVATURE_TOL_ANALYTIC = 1e-10      # analytic Christoffel path (only dGamma differenced)
FRAME_TOL = 1e-8

# ── Finite differences ────────────────────────────────────────────────────
# Step per axis is FD_STEP * max(1, |coord|); central differences throughout.
FD_STEP = 1e-5
# Outer step used when differentiating an already differenced connection.
FD_STEP_NESTED = 1e-4
# Embedding Jacobians use a fourth-order stencil with this step.
JACOBIAN_FD_STEP = 1e-3
STENCIL_RADIUS = 1                  # in units of the per-axis step

# ── Integrator ────────────────────────────────────────────────────────────
DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-10
DEFAULT_METHOD = "RK45"             # Dormand-Prince 5(4) pair
NULL_DRIFT_LIMIT = 1e-6             # a run drifting past this is an error
NULL_DRIFT_EXPECTED = 1e-8

# ── Congruence ────────────────────────────────────────────────────────────
BLOWUP_THRESHOLD = 1e8
CONDITION_LIMIT = 1e12
CONJUGATE_XTOL = 1e-9
CONJUGATE_TOUCH_LIMIT = 1e-6        # smallest singular value treated as a zero
FOCUSING_TOL = 1e-6
MONOTONICITY_TOL = 1e-7
# Sub-nodes per output interval for the Riccati / Raychaudhuri trace cross-check
RAYCHAUDHURI_REFINE = 8

# ── Graph operator / solver ───────────────────────────────────────────────
EPS_SPACELIKE = 1e-3
NEWTON_MAX_ITER = 50
NEWTON_RESIDUAL_TOL = 1e-9
NEWTON_STEP_TOL = 1e-10
NEWTON_MAX_HALVINGS = 30
ARMIJO_SLOPE = 1e-4
ARMIJO_FACTOR = 0.5
JACOBIAN_STEP = 1e-7
# GMRES on the Newton system, preconditioned by an ILU of the principal part
KRYLOV_RTOL = 1e-10
KRYLOV_RESTART = 50
KRYLOV_MAXITER = 20
ILU_DROP_TOL = 1e-6
ILU_FILL_FACTOR = 10.0
# Lattice theta error budget: factor * h^2 * max(1, |theta|)^3.
DISCRETE_THETA_FACTOR = 10.0

# ── Maximum-principle harness ─────────────────────────────────────────────
THETA_TOL = 1e-6
ORDER_TOL = 1e-12
COINCIDENCE_TOL = 1e-8

# ── Catalog names ─────────────────────────────────────────────────────────
MINKOWSKI = "minkowski"
SCHWARZSCHILD = "schwarzschild"
SCHWARZSCHILD_EF = "schwarzschild_ef"
DESITTER = "desitter"
PPWAVE = "ppwave"

SLAB_MINKOWSKI_HYPERPLANE = "minkowski_hyperplane"
SLAB_MINKOWSKI_CYLINDER = "minkowski_cylinder"
SLAB_SCHWARZSCHILD_PHI0 = "schwarzschild_phi0"

HYPERSURFACE_MINKOWSKI = "minkowski_null_hyperplane"
HYPERSURFACE_SCHWARZSCHILD = "schwarzschild_horizon"
HYPERSURFACE_DESITTER = "desitter_horizon"

FUTURE_CONE = "future_cone"
PAST_CONE = "past_cone"

# ── Scenarios ─────────────────────────────────────────────────────────────
SCENARIO_NAMES: list[str] = [
    "curvature",
    "geodesic",
    "congruence",
    "focusing-sweep",
    "cone",
    "graph-theta",
    "solve",
    "maxprin",
    "splitting-verify",
]

# ── Exit codes ────────────────────────────────────────────────────────────
EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

# ── Environment ───────────────────────────────────────────────────────────
THREADS_ENV_VAR = "NULLGEO_THREADS"

# ── CSV schemas (name -> version) ────────────────────────────────────────
CSV_SCHEMAS: dict[str, int] = {
    "curvature": 1,
    "trajectory": 1,
    "congruence": 1,
    "focusing_sweep": 1,
    "cone": 1,
    "graph": 1,
    "solver_history": 1,
    "support_family": 1,
    "totally_geodesic": 1,
}

DEFAULT_OUTPUT_DIR = "output"
TEMPLATE_DIR = "input/templates"

# ── Config schema ─────────────────────────────────────────────────────────
# key -> (kind, default).  A default of REQUIRED means the key must be given.
# Kinds: float, int, bool, str, floats (comma list), ints, metric, slab,
# profile, path.  Tolerance-like keys are listed in POSITIVE_KEYS.
REQUIRED = object()

COMMON_KEYS: dict[str, tuple[str, object]] = {
    "metric": ("metric", "minkowski{n=4}"),
    "output": ("path", DEFAULT_OUTPUT_DIR),
    "plot": ("bool", False),
    "rtol": ("float", DEFAULT_RTOL),
    "atol": ("float", DEFAULT_ATOL),
    "seed": ("int", 0),
}

SCENARIO_KEYS: dict[str, dict[str, tuple[str, object]]] = {
    "curvature": {
        "point": ("floats", None),
        "samples": ("int", 10),
        "tolerance": ("float", CURVATURE_TOL_FD),
    },
    "geodesic": {
        "x0": ("floats", REQUIRED),
        "v0": ("floats", REQUIRED),
        "s_end": ("float", REQUIRED),
        "nodes": ("int", 51),
    },
    "congruence": {
        "x0": ("floats", REQUIRED),
        "v0": ("floats", REQUIRED),
        "s_end": ("float", REQUIRED),
        "nodes": ("int", 51),
        "b0": ("floats", [0.0]),
        "tolerance": ("float", 1e-7),
    },
    "focusing-sweep": {
        "x0": ("floats", REQUIRED),
        "k": ("floats", REQUIRED),
        "radii": ("floats", [1.0, 2.0, 5.0, 10.0]),
        "tolerance": ("float", FOCUSING_TOL),
    },
    "cone": {
        "vertex": ("floats", REQUIRED),
        "direction": ("floats", REQUIRED),
        "orientation": ("str", FUTURE_CONE),
        "tau_end": ("float", REQUIRED),
        "nodes": ("int", 51),
    },
    "graph-theta": {
        "slab": ("slab", REQUIRED),
        "center": ("floats", None),
        "extent": ("floats", [0.4]),
        "points": ("ints", [41]),
        "profile": ("profile", REQUIRED),
        "tolerance": ("float", None),
    },
    "solve": {
        "slab": ("slab", REQUIRED),
        "center": ("floats", None),
        "extent": ("floats", [0.4]),
        "points": ("ints", [41]),
        "boundary": ("profile", REQUIRED),
        "init": ("profile", None),
        "perturb": ("float", 0.0),
        "target": ("float", 0.0),
        "max_iter": ("int", NEWTON_MAX_ITER),
        "tolerance": ("float", None),
    },
    "maxprin": {
        "slab": ("slab", REQUIRED),
        "center": ("floats", None),
        "extent": ("floats", [0.4]),
        "points": ("ints", [21]),
        "lower": ("profile", REQUIRED),
        "upper": ("profile", REQUIRED),
        "radius": ("float", 0.1),
        "probe_radii": ("floats", [1.0, 2.0, 5.0, 10.0]),
        "mode": ("str", "support"),
        "theta_tol": ("float", None),
        "solve": ("bool", False),
    },
    "splitting-verify": {
        "hypersurface": ("str", REQUIRED),
        "samples": ("int", 50),
        "span": ("float", 5.0),
        "tolerance": ("float", 1e-7),
    },
}

POSITIVE_KEYS: set[str] = {
    "rtol", "atol", "tolerance", "theta_tol", "radius", "span",
    "samples", "nodes", "max_iter",
}
