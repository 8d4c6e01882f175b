"""
Scenario runners: static registry of runner functions.

Every runner is imported statically so frozen (PyInstaller) builds see it.
A runner takes a validated :class:`~src.loader.ScenarioConfig` and returns a
:class:`~src.scenarios.result.ScenarioResult`.
"""

from __future__ import annotations

from ..errors import ValidationError
from .geodesics import run_cone, run_congruence, run_curvature, run_focusing_sweep, run_geodesic
from .graphs import run_graph_theta, run_maxprin, run_solve
from .result import Check, Plot, ScenarioResult, Series, Table
from .splitting import run_splitting_verify

# Registry mapping scenario names to runner functions
SCENARIOS = {
    "curvature": run_curvature,
    "geodesic": run_geodesic,
    "congruence": run_congruence,
    "focusing-sweep": run_focusing_sweep,
    "cone": run_cone,
    "graph-theta": run_graph_theta,
    "solve": run_solve,
    "maxprin": run_maxprin,
    "splitting-verify": run_splitting_verify,
}


def run_scenario(config) -> ScenarioResult:
    """Dispatch *config* to its runner.

    Raises
    ------
    ValidationError
        If the scenario has no registered runner.
    """
    if config.scenario not in SCENARIOS:
        available = ", ".join(SCENARIOS)
        raise ValidationError(f"Unknown scenario '{config.scenario}'. Available: {available}")
    return SCENARIOS[config.scenario](config)


__all__ = [
    "SCENARIOS",
    "run_scenario",
    "Check",
    "Plot",
    "ScenarioResult",
    "Series",
    "Table",
]
