"""
File loading utilities for the nullgeo toolkit.

Provides path resolution (PyInstaller-aware), scenario config parsing and
validation, and Jinja2 template loading.

Config grammar
--------------
UTF-8 text, one ``[scenario-name]`` section, ``key = value`` lines.  Lines
starting with ``#`` or ``;`` are comments.  Lists are comma separated;
metric, slab and profile values use the ``name{key=value,...}`` syntax.
"""

from __future__ import annotations

import logging
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from jinja2 import Environment, FileSystemLoader, StrictUndefined

from .constants import (
    COMMON_KEYS,
    FUTURE_CONE,
    PAST_CONE,
    POSITIVE_KEYS,
    REQUIRED,
    SCENARIO_KEYS,
    SCENARIO_NAMES,
    TEMPLATE_DIR,
)
from .errors import ParseError, ValidationError
from .utils import parse_spec

logger = logging.getLogger(__name__)

_SECTION_RE = re.compile(r"^\[\s*([^\]]+?)\s*\]$")
_KEY_RE = re.compile(r"^[A-Za-z_][\w\-]*$")
_BOOLS = {"on": True, "true": True, "yes": True, "1": True,
          "off": False, "false": False, "no": False, "0": False}

# Smallest lattice axis: three interior nodes plus the two boundary nodes.
MIN_GRID_POINTS = 5


def get_real_path(relative_path: Path) -> Path:
    """Resolve *relative_path* whether running as a script or inside a
    PyInstaller bundle.

    When frozen (``sys.frozen``), paths are relative to ``sys._MEIPASS``.
    Otherwise they are resolved against the current working directory.
    """
    if getattr(sys, "frozen", False):
        return Path(sys._MEIPASS) / relative_path  # type: ignore[attr-defined]
    return relative_path.resolve()


def default_template_dir() -> Path:
    """Bundled template folder, independent of the working directory."""
    if getattr(sys, "frozen", False):
        return get_real_path(Path(TEMPLATE_DIR))
    return Path(__file__).resolve().parent.parent / TEMPLATE_DIR


# ── scenario config ───────────────────────────────────────────────────────

@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    values: dict[str, Any]
    lines: dict[str, int] = field(default_factory=dict, compare=False)
    source: str | None = field(default=None, compare=False)

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def get(self, key: str, default: Any = None) -> Any:
        return self.values.get(key, default)

    def with_values(self, **overrides: Any) -> "ScenarioConfig":
        return ScenarioConfig(self.scenario, {**self.values, **overrides}, self.lines, self.source)

    def resolved(self) -> dict[str, Any]:
        """JSON-ready view of every key, defaults included."""
        return {"scenario": self.scenario, **{k: self.values[k] for k in sorted(self.values)}}


def _registry_names(kind: str) -> dict:
    # Imported lazily: the catalogs pull in numpy/scipy machinery.
    if kind == "metric":
        from .metrics import METRICS
        return METRICS
    if kind == "slab":
        from .slabs import SLABS
        return SLABS
    from .graphop import PROFILES
    return PROFILES


def _convert(key: str, kind: str, raw: str, line: int) -> Any:
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(raw)
        if kind == "bool":
            if raw.lower() not in _BOOLS:
                raise ValueError(f"expected one of {', '.join(sorted(_BOOLS))}")
            return _BOOLS[raw.lower()]
        if kind == "floats":
            return [float(item) for item in raw.split(",") if item.strip()]
        if kind == "ints":
            return [int(item) for item in raw.split(",") if item.strip()]
        if kind in ("metric", "slab", "profile"):
            name, _ = parse_spec(raw)
            known = _registry_names(kind)
            if name not in known:
                raise ValueError(f"unknown {kind} '{name}' (available: {', '.join(known)})")
            return raw.strip()
        return raw
    except ValueError as exc:
        raise ValidationError(f"invalid {kind} value '{raw}': {exc}", key=key, line=line) from exc


def _validate(scenario: str, values: dict[str, Any], lines: dict[str, int]) -> None:
    for key in POSITIVE_KEYS & values.keys():
        value = values[key]
        items = value if isinstance(value, list) else [value]
        if value is not None and any(v <= 0 for v in items):
            raise ValidationError("must be positive", key=key, line=lines.get(key))
    for key in ("radii", "probe_radii", "extent"):
        if key in values and any(v <= 0 for v in values[key]):
            raise ValidationError("all entries must be positive", key=key, line=lines.get(key))
    if "points" in values and any(m < MIN_GRID_POINTS for m in values["points"]):
        raise ValidationError(f"every axis needs at least {MIN_GRID_POINTS} points (3 interior nodes)",
                              key="points", line=lines.get("points"))
    if "orientation" in values and values["orientation"] not in (FUTURE_CONE, PAST_CONE):
        raise ValidationError(f"must be '{FUTURE_CONE}' or '{PAST_CONE}'", key="orientation",
                              line=lines.get("orientation"))
    if "mode" in values and values["mode"] not in ("support", "smooth"):
        raise ValidationError("must be 'support' or 'smooth'", key="mode", line=lines.get("mode"))
    if scenario == "splitting-verify":
        from .maxprin import HYPERSURFACES
        if values["hypersurface"] not in HYPERSURFACES:
            raise ValidationError(f"unknown hypersurface (available: {', '.join(HYPERSURFACES)})",
                                  key="hypersurface", line=lines.get("hypersurface"))


def parse_config(text: str, scenario: str | None = None, source: str | None = None) -> ScenarioConfig:
    """Parse and validate scenario config text.

    Raises
    ------
    ParseError
        On a grammar fault (with its line number).
    ValidationError
        On unknown scenario or key, a missing required key, or an invalid value.
    """
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    header_lines: dict[str, int] = {}
    current: str | None = None

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith(("#", ";")):
            continue
        match = _SECTION_RE.match(line)
        if match:
            current = match.group(1).lower()
            if current in sections:
                raise ParseError(f"duplicate section [{current}]", line=lineno)
            sections[current] = {}
            header_lines[current] = lineno
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got '{line}'", line=lineno)
        if current is None:
            raise ParseError("key outside of a [scenario] section", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not _KEY_RE.match(key):
            raise ParseError(f"malformed key '{key}'", line=lineno)
        if key in sections[current]:
            raise ParseError(f"duplicate key '{key}'", line=lineno)
        if not value:
            raise ParseError(f"empty value for '{key}'", line=lineno)
        sections[current][key] = (value, lineno)

    if not sections:
        raise ParseError("no [scenario] section found")
    for name, lineno in header_lines.items():
        if name not in SCENARIO_NAMES:
            raise ValidationError(f"unknown scenario '{name}' (valid: {', '.join(SCENARIO_NAMES)})",
                                  line=lineno)
    if scenario is None:
        if len(sections) != 1:
            raise ValidationError(f"config holds {len(sections)} sections; name the scenario to run")
        scenario = next(iter(sections))
    scenario = scenario.lower()
    if scenario not in SCENARIO_NAMES:
        raise ValidationError(f"unknown scenario '{scenario}' (valid: {', '.join(SCENARIO_NAMES)})")
    if scenario not in sections:
        raise ValidationError(f"config has no [{scenario}] section")

    schema = {**COMMON_KEYS, **SCENARIO_KEYS[scenario]}
    entries = sections[scenario]
    values: dict[str, Any] = {}
    lines: dict[str, int] = {}
    for key, (raw, lineno) in entries.items():
        if key not in schema:
            raise ValidationError(f"unknown key for [{scenario}] (allowed: {', '.join(sorted(schema))})",
                                  key=key, line=lineno)
        values[key] = _convert(key, schema[key][0], raw, lineno)
        lines[key] = lineno
    for key, (kind, default) in schema.items():
        if key in values:
            continue
        if default is REQUIRED:
            raise ValidationError("required key missing", key=key, line=header_lines[scenario])
        values[key] = list(default) if isinstance(default, list) else default

    _validate(scenario, values, lines)
    logger.debug("Parsed [%s] with %d explicit keys", scenario, len(entries))
    return ScenarioConfig(scenario=scenario, values=values, lines=lines, source=source)


def load_config_file(filepath: str | Path, scenario: str | None = None) -> ScenarioConfig:
    """Read and parse a config file.

    Raises
    ------
    FileNotFoundError
        If *filepath* does not exist.
    ParseError
        If the file is not valid UTF-8 or breaks the grammar.
    """
    path = Path(filepath)
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"Config is not UTF-8 ({path}): {exc}") from exc
    logger.debug("Loaded config from %s", path)
    return parse_config(text, scenario=scenario, source=str(path))


def load_template(template_dir: str | Path, template_file: str):
    """Load a single Jinja2 template from *template_dir*.

    The directory is resolved via :func:`get_real_path` so that templates
    bundled inside a PyInstaller executable are found correctly.
    """
    real_dir = get_real_path(Path(template_dir))
    env = Environment(loader=FileSystemLoader(str(real_dir)), undefined=StrictUndefined,
                      keep_trailing_newline=True)
    return env.get_template(template_file)
