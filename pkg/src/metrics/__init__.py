"""
Metric catalog: static registry of model builders.

Every model builder is imported statically so frozen builds see it; look
models up by name through :func:`build_model`.
"""

from __future__ import annotations

from ..errors import UnknownModel
from ..spacetime import MetricModel
from ..utils import parse_spec
from .desitter import build_desitter
from .minkowski import build_minkowski
from .ppwave import build_ppwave
from .schwarzschild import build_schwarzschild, build_schwarzschild_ef

# Registry mapping catalog names to builders
METRICS = {
    "minkowski": build_minkowski,
    "schwarzschild": build_schwarzschild,
    "schwarzschild_ef": build_schwarzschild_ef,
    "desitter": build_desitter,
    "ppwave": build_ppwave,
}


def build_model(spec: str | tuple[str, dict[str, float]]) -> MetricModel:
    """Build a catalog model from ``"name{k=v}"`` or ``(name, params)``.

    Raises
    ------
    UnknownModel
        If the name is not registered.
    ValueError
        If a parameter is out of range.
    """
    name, params = parse_spec(spec) if isinstance(spec, str) else (spec[0].lower(), dict(spec[1]))
    if name not in METRICS:
        available = ", ".join(METRICS)
        raise UnknownModel(f"Unknown metric '{name}'. Available: {available}")
    return METRICS[name](params)


__all__ = [
    "METRICS",
    "build_model",
    "build_minkowski",
    "build_schwarzschild",
    "build_schwarzschild_ef",
    "build_desitter",
    "build_ppwave",
]
