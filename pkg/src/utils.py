"""
Shared utility functions for the nullgeo toolkit.

Houses small parsing and numeric helpers used by several modules so they are
not duplicated across the catalog, the scenarios and the CLI entry point.
"""

from __future__ import annotations

import logging
import os
import re

import numpy as np

from .constants import THREADS_ENV_VAR

logger = logging.getLogger(__name__)

_SPEC_RE = re.compile(r"^\s*([A-Za-z_][\w\-]*)\s*(?:\{(.*)\})?\s*$")


def parse_spec(text: str) -> tuple[str, dict[str, float]]:
    """Split a ``name{key=value,...}`` spec into its name and numeric parameters.

    >>> parse_spec("schwarzschild{M=1}")
    ('schwarzschild', {'M': 1.0})
    >>> parse_spec("minkowski")
    ('minkowski', {})
    >>> parse_spec("desitter{ H = 0.5 , n=5 }")
    ('desitter', {'H': 0.5, 'n': 5.0})
    """
    match = _SPEC_RE.match(text)
    if not match:
        raise ValueError(f"Malformed spec '{text}' (expected name{{key=value,...}})")
    name, body = match.group(1), match.group(2)
    params: dict[str, float] = {}
    if body and body.strip():
        for item in body.split(","):
            if "=" not in item:
                raise ValueError(f"Malformed parameter '{item.strip()}' in spec '{text}'")
            key, value = (part.strip() for part in item.split("=", 1))
            try:
                params[key] = float(value)
            except ValueError as exc:
                raise ValueError(f"Parameter '{key}' in spec '{text}' is not a number") from exc
    return name.lower(), params


def format_spec(name: str, params: dict[str, float]) -> str:
    """Inverse of :func:`parse_spec` with keys in sorted order.

    >>> format_spec("schwarzschild", {"M": 1.0})
    'schwarzschild{M=1}'
    """
    if not params:
        return name
    body = ",".join(f"{k}={params[k]:g}" for k in sorted(params))
    return f"{name}{{{body}}}"


def thread_count() -> int:
    """Worker count from ``NULLGEO_THREADS`` (1 when unset or invalid)."""
    raw = os.environ.get(THREADS_ENV_VAR, "").strip()
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        logger.warning("Ignoring %s=%r (not an integer)", THREADS_ENV_VAR, raw)
        return 1
    if value < 1:
        logger.warning("Ignoring %s=%r (must be >= 1)", THREADS_ENV_VAR, raw)
        return 1
    return value


def delta_norm_sq(components: np.ndarray) -> float:
    """Squared coordinate-Euclidean norm, the fixed background metric.

    >>> delta_norm_sq(np.array([1.0, 1.0, 0.0, 0.0]))
    2.0
    """
    return float(np.dot(components, components))


def delta_normalize(components: np.ndarray) -> np.ndarray:
    """Scale *components* to unit coordinate-Euclidean length."""
    norm = np.sqrt(delta_norm_sq(components))
    if norm == 0.0:
        raise ValueError("Cannot normalize a zero vector")
    return np.asarray(components, dtype=float) / norm


def symmetric_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def fd_steps(coords: np.ndarray, base: float) -> np.ndarray:
    """Per-axis central-difference step ``base * max(1, |x|)``."""
    return base * np.maximum(1.0, np.abs(np.asarray(coords, dtype=float)))
