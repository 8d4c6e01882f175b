"""
Minkowski space in global Cartesian coordinates (t, x1, ..., x_{n-1}).
"""

from __future__ import annotations

import numpy as np

from ..constants import MINKOWSKI
from ..spacetime import ChartDomain, MetricModel


def build_minkowski(params: dict[str, float]) -> MetricModel:
    n = int(params.get("n", 4))
    eta = np.diag([-1.0] + [1.0] * (n - 1))
    zero = np.zeros((n, n, n))

    return MetricModel(
        name=MINKOWSKI,
        n=n,
        params={"n": float(n)},
        chart_id="minkowski:cartesian",
        coordinate_names=("t",) + tuple(f"x{i}" for i in range(1, n)),
        metric_fn=lambda x: eta.copy(),
        christoffel_fn=lambda x: zero.copy(),
        domain=ChartDomain(tuple((None, None) for _ in range(n))),
    )
