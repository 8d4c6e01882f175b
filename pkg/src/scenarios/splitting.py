"""
splitting-verify: totally geodesic check on catalog null hypersurfaces.
"""

from __future__ import annotations

from ..loader import ScenarioConfig
from ..maxprin import HYPERSURFACES, totally_geodesic_rows, verify_totally_geodesic
from ..metrics import build_model
from .result import Check, ScenarioResult


def run_splitting_verify(config: ScenarioConfig) -> ScenarioResult:
    entry = HYPERSURFACES[config["hypersurface"]]
    # Without an explicit metric the hypersurface's own spacetime is used.
    spec = config["metric"] if "metric" in config.lines else entry.model_name
    model = build_model(spec)
    report = verify_totally_geodesic(model, entry.name, config["samples"], config["span"], config["seed"])

    result = ScenarioResult("splitting-verify")
    result.add_table("totally_geodesic", totally_geodesic_rows(report))
    result.checks.append(Check.at_most("max_B_norm", report.max_B_norm, config["tolerance"]))
    result.summary.update(hypersurface=entry.name, model=model.name, samples=len(report.samples),
                          max_riccati_norm=report.max_riccati_norm,
                          max_direct_norm=report.max_direct_norm)
    return result
