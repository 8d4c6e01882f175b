"""
de Sitter space in the flat (expanding) slicing:
ds^2 = -dt^2 + exp(2Ht) (dx1^2 + ... + dx_{n-1}^2).
"""

from __future__ import annotations

import math

import numpy as np

from ..constants import DESITTER
from ..spacetime import ChartDomain, MetricModel


def build_desitter(params: dict[str, float]) -> MetricModel:
    hubble = float(params.get("H", 1.0))
    n = int(params.get("n", 4))
    if hubble <= 0.0:
        raise ValueError(f"Hubble rate must be positive (got H={hubble})")

    def metric(x: np.ndarray) -> np.ndarray:
        a2 = math.exp(2.0 * hubble * x[0])
        return np.diag([-1.0] + [a2] * (n - 1))

    def christoffel(x: np.ndarray) -> np.ndarray:
        a2 = math.exp(2.0 * hubble * x[0])
        gam = np.zeros((n, n, n))
        for i in range(1, n):
            gam[0, i, i] = hubble * a2
            gam[i, 0, i] = gam[i, i, 0] = hubble
        return gam

    return MetricModel(
        name=DESITTER,
        n=n,
        params={"H": hubble, "n": float(n)},
        chart_id="desitter:flat",
        coordinate_names=("t",) + tuple(f"x{i}" for i in range(1, n)),
        metric_fn=metric,
        christoffel_fn=christoffel,
        domain=ChartDomain(tuple((None, None) for _ in range(n))),
    )
