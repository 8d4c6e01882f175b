"""
Run report writer: CSV tables, Jinja2-rendered SVG plots and summary, and
the run manifest.

Data files (CSV, SVG, summary.txt) depend only on the config and so are
byte-identical across reruns; wall-clock time lives in manifest.json only.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import numbers
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from .constants import TOOLKIT_VERSION
from .loader import ScenarioConfig, default_template_dir, load_template
from .scenarios.result import Plot, ScenarioResult, Table

logger = logging.getLogger(__name__)

PLOT_WIDTH = 640
PLOT_HEIGHT = 400
PLOT_MARGIN = 56
PLOT_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass
class RunManifest:
    version: str
    scenario: str
    config: dict[str, Any]
    passed: bool
    wall_clock_seconds: float
    outputs: dict[str, str] = field(default_factory=dict)
    checks: list[dict[str, Any]] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)
    error: dict[str, str] | None = None


# ── formatting ────────────────────────────────────────────────────────────

def format_value(value: Any) -> str:
    """Shortest round-trip text for numbers.

    >>> format_value(0.1)
    '0.1'
    >>> format_value(True)
    '1'
    >>> format_value(float("nan"))
    'nan'
    """
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, numbers.Integral):
        return str(int(value))
    try:
        return repr(float(value))
    except (TypeError, ValueError):
        return str(value)


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, numbers.Integral):
        return int(value)
    try:
        number = float(value)
    except (TypeError, ValueError):
        return str(value)
    return number if math.isfinite(number) else str(number)


def render_csv(table: Table) -> str:
    buffer = io.StringIO()
    buffer.write(f"# schema={table.schema} v{table.version}\n")
    buffer.write("# units: geometric (G = c = 1), chart coordinates\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.header)
    for row in table.rows:
        writer.writerow([format_value(v) for v in row])
    return buffer.getvalue()


# ── plots ─────────────────────────────────────────────────────────────────

def _finite_extent(values: list[float]) -> tuple[float, float]:
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return 0.0, 1.0
    lo, hi = min(finite), max(finite)
    if hi - lo < 1e-300:
        pad = max(abs(lo), 1.0) * 0.5
        return lo - pad, hi + pad
    return lo, hi


def plot_context(plot: Plot) -> dict[str, Any]:
    """Pixel-space polylines and axis labels for the SVG template."""
    xs = [float(x) for s in plot.series for x in s.x]
    ys = [float(y) for s in plot.series for y in s.y]
    x_lo, x_hi = _finite_extent(xs)
    y_lo, y_hi = _finite_extent(ys)
    inner_w = PLOT_WIDTH - 2 * PLOT_MARGIN
    inner_h = PLOT_HEIGHT - 2 * PLOT_MARGIN

    def to_px(x: float, y: float) -> str:
        px = PLOT_MARGIN + (x - x_lo) / (x_hi - x_lo) * inner_w
        py = PLOT_HEIGHT - PLOT_MARGIN - (y - y_lo) / (y_hi - y_lo) * inner_h
        return f"{px:.2f},{py:.2f}"

    series = []
    for k, s in enumerate(plot.series):
        pts = [to_px(float(x), float(y)) for x, y in zip(s.x, s.y)
               if math.isfinite(float(x)) and math.isfinite(float(y))]
        series.append({"label": s.label, "colour": PLOT_COLOURS[k % len(PLOT_COLOURS)],
                       "points": " ".join(pts)})
    return {
        "title": plot.title, "xlabel": plot.xlabel, "ylabel": plot.ylabel,
        "width": PLOT_WIDTH, "height": PLOT_HEIGHT, "margin": PLOT_MARGIN,
        "x_lo": f"{x_lo:.6g}", "x_hi": f"{x_hi:.6g}", "y_lo": f"{y_lo:.6g}", "y_hi": f"{y_hi:.6g}",
        "series": series,
    }


# ── writer ────────────────────────────────────────────────────────────────

def _write(path: Path, text: str, outputs: dict[str, str]) -> None:
    data = text.encode("utf-8")
    path.write_bytes(data)
    outputs[path.name] = hashlib.sha256(data).hexdigest()
    logger.info("[OK] %s", path.name)


def _write_manifest(out: Path, manifest: RunManifest) -> None:
    text = json.dumps(asdict(manifest), indent=2, sort_keys=True) + "\n"
    (out / "manifest.json").write_text(text, encoding="utf-8")


def write_report(result: ScenarioResult, config: ScenarioConfig, output_folder: str | Path,
                 *, plot: bool = False, wall_clock: float = 0.0,
                 template_folder: str | Path | None = None) -> RunManifest:
    """Write every artefact of *result* into *output_folder*.

    Raises
    ------
    OSError
        If the output folder cannot be created or written.
    jinja2.TemplateNotFound
        If a template is missing from *template_folder*.
    """
    template_folder = template_folder or default_template_dir()
    out = Path(output_folder).resolve()
    out.mkdir(parents=True, exist_ok=True)
    outputs: dict[str, str] = {}

    for table in result.tables:
        _write(out / f"{table.schema}.csv", render_csv(table), outputs)

    if plot:
        svg = load_template(template_folder, "line_plot.svg.j2")
        for item in result.plots:
            _write(out / f"{item.name}.svg", svg.render(plot_context(item)), outputs)

    checks = [asdict(check) for check in result.checks]
    summary_tpl = load_template(template_folder, "summary.txt.j2")
    _write(out / "summary.txt", summary_tpl.render(
        version=TOOLKIT_VERSION, scenario=result.scenario, passed=result.passed, error=None,
        checks=[{**c, "value": format_value(c["value"]), "limit": format_value(c["limit"])} for c in checks],
        summary={k: format_value(v) if isinstance(v, float) else v for k, v in sorted(result.summary.items())},
        files=sorted(outputs),
    ), outputs)

    manifest = RunManifest(
        version=TOOLKIT_VERSION,
        scenario=result.scenario,
        config=_jsonable(config.resolved()),
        passed=result.passed,
        wall_clock_seconds=round(wall_clock, 6),
        outputs=outputs,
        checks=_jsonable(checks),
        summary=_jsonable(result.summary),
    )
    _write_manifest(out, manifest)
    logger.info("[OK] manifest.json (%d outputs)", len(outputs))
    return manifest


def write_failure_report(config: ScenarioConfig, output_folder: str | Path, error: Exception,
                         *, wall_clock: float = 0.0,
                         template_folder: str | Path | None = None) -> RunManifest:
    """Summary and manifest for a run that stopped on a library error."""
    template_folder = template_folder or default_template_dir()
    out = Path(output_folder).resolve()
    out.mkdir(parents=True, exist_ok=True)
    outputs: dict[str, str] = {}
    details = {"type": type(error).__name__, "message": str(error)}
    summary_tpl = load_template(template_folder, "summary.txt.j2")
    _write(out / "summary.txt", summary_tpl.render(
        version=TOOLKIT_VERSION, scenario=config.scenario, passed=False, error=details,
        checks=[], summary={}, files=[],
    ), outputs)
    manifest = RunManifest(
        version=TOOLKIT_VERSION,
        scenario=config.scenario,
        config=_jsonable(config.resolved()),
        passed=False,
        wall_clock_seconds=round(wall_clock, 6),
        outputs=outputs,
        error=details,
    )
    _write_manifest(out, manifest)
    logger.info("[OK] manifest.json (run failed: %s)", details["type"])
    return manifest
