"""
Schwarzschild spacetime (n = 4) in two charts.

* ``schwarzschild``     exterior chart (t, r, theta, phi), r > 2M
* ``schwarzschild_ef``  ingoing Eddington-Finkelstein (v, r, theta, phi), r > 0,
                        regular across the horizon r = 2M
"""

from __future__ import annotations

import math

import numpy as np

from ..constants import SCHWARZSCHILD, SCHWARZSCHILD_EF
from ..spacetime import ChartDomain, MetricModel

_COORDS_EXTERIOR = ("t", "r", "theta", "phi")
_COORDS_EF = ("v", "r", "theta", "phi")


def _mass(params: dict[str, float]) -> float:
    mass = float(params.get("M", 1.0))
    if mass <= 0.0:
        raise ValueError(f"Schwarzschild mass must be positive (got M={mass})")
    return mass


def build_schwarzschild(params: dict[str, float]) -> MetricModel:
    mass = _mass(params)

    def metric(x: np.ndarray) -> np.ndarray:
        r, th = x[1], x[2]
        f = 1.0 - 2.0 * mass / r
        return np.diag([-f, 1.0 / f, r * r, (r * math.sin(th)) ** 2])

    def christoffel(x: np.ndarray) -> np.ndarray:
        r, th = x[1], x[2]
        f = 1.0 - 2.0 * mass / r
        s, c = math.sin(th), math.cos(th)
        gam = np.zeros((4, 4, 4))
        gam[0, 0, 1] = gam[0, 1, 0] = mass / (r * r * f)
        gam[1, 0, 0] = mass * f / (r * r)
        gam[1, 1, 1] = -mass / (r * r * f)
        gam[1, 2, 2] = -r * f
        gam[1, 3, 3] = -r * f * s * s
        gam[2, 1, 2] = gam[2, 2, 1] = 1.0 / r
        gam[2, 3, 3] = -s * c
        gam[3, 1, 3] = gam[3, 3, 1] = 1.0 / r
        gam[3, 2, 3] = gam[3, 3, 2] = c / s
        return gam

    return MetricModel(
        name=SCHWARZSCHILD,
        n=4,
        params={"M": mass},
        chart_id="schwarzschild:exterior",
        coordinate_names=_COORDS_EXTERIOR,
        metric_fn=metric,
        christoffel_fn=christoffel,
        domain=ChartDomain(((None, None), (2.0 * mass, None), (0.0, math.pi), (None, None))),
    )


def build_schwarzschild_ef(params: dict[str, float]) -> MetricModel:
    mass = _mass(params)

    def metric(x: np.ndarray) -> np.ndarray:
        r, th = x[1], x[2]
        f = 1.0 - 2.0 * mass / r
        g = np.zeros((4, 4))
        g[0, 0] = -f
        g[0, 1] = g[1, 0] = 1.0
        g[2, 2] = r * r
        g[3, 3] = (r * math.sin(th)) ** 2
        return g

    def christoffel(x: np.ndarray) -> np.ndarray:
        r, th = x[1], x[2]
        f = 1.0 - 2.0 * mass / r
        s, c = math.sin(th), math.cos(th)
        m_r2 = mass / (r * r)
        gam = np.zeros((4, 4, 4))
        gam[0, 0, 0] = m_r2
        gam[0, 2, 2] = -r
        gam[0, 3, 3] = -r * s * s
        gam[1, 0, 0] = f * m_r2
        gam[1, 0, 1] = gam[1, 1, 0] = -m_r2
        gam[1, 2, 2] = -r * f
        gam[1, 3, 3] = -r * f * s * s
        gam[2, 1, 2] = gam[2, 2, 1] = 1.0 / r
        gam[2, 3, 3] = -s * c
        gam[3, 1, 3] = gam[3, 3, 1] = 1.0 / r
        gam[3, 2, 3] = gam[3, 3, 2] = c / s
        return gam

    return MetricModel(
        name=SCHWARZSCHILD_EF,
        n=4,
        params={"M": mass},
        chart_id="schwarzschild:ingoing_ef",
        coordinate_names=_COORDS_EF,
        metric_fn=metric,
        christoffel_fn=christoffel,
        domain=ChartDomain(((None, None), (0.0, None), (0.0, math.pi), (None, None))),
    )
