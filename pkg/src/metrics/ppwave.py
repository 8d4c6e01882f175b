"""
Plane-fronted wave in Brinkmann coordinates (u, v, x1, ..., x_{n-2}):

    ds^2 = -2 du dv - F(x) du^2 + |dx|^2,
    F    = amplitude * |x|^2 + shear * (x1^2 - x2^2).

u increases along future-directed null geodesics crossing the wave.  Along
them the screen curvature is the constant matrix ½ Hess F, so
Ric(K, K) = (n - 2) * amplitude for u' = 1 and the null energy condition holds
iff amplitude >= 0.
"""

from __future__ import annotations

import numpy as np

from ..constants import PPWAVE
from ..spacetime import ChartDomain, MetricModel


def profile_hessian(n: int, amplitude: float, shear: float) -> np.ndarray:
    """Hess F over the transverse coordinates."""
    hess = 2.0 * amplitude * np.eye(n - 2)
    if n - 2 >= 2:
        hess[0, 0] += 2.0 * shear
        hess[1, 1] -= 2.0 * shear
    return hess


def build_ppwave(params: dict[str, float]) -> MetricModel:
    n = int(params.get("n", 4))
    amplitude = float(params.get("amplitude", 1.0))
    shear = float(params.get("shear", 0.0))
    if shear != 0.0 and n < 4:
        raise ValueError("ppwave shear needs at least two transverse coordinates (n >= 4)")
    hess = profile_hessian(n, amplitude, shear)

    def profile(x: np.ndarray) -> float:
        y = x[2:]
        return 0.5 * float(y @ hess @ y)

    def metric(x: np.ndarray) -> np.ndarray:
        g = np.eye(n)
        g[0, 0] = -profile(x)
        g[0, 1] = g[1, 0] = -1.0
        g[1, 1] = 0.0
        return g

    def christoffel(x: np.ndarray) -> np.ndarray:
        half_grad = 0.5 * (hess @ x[2:])         # ½ ∂_i F
        gam = np.zeros((n, n, n))
        gam[1, 0, 2:] = half_grad
        gam[1, 2:, 0] = half_grad
        gam[2:, 0, 0] = half_grad
        return gam

    return MetricModel(
        name=PPWAVE,
        n=n,
        params={"n": float(n), "amplitude": amplitude, "shear": shear},
        chart_id="ppwave:brinkmann",
        coordinate_names=("u", "v") + tuple(f"x{i}" for i in range(1, n - 1)),
        metric_fn=metric,
        christoffel_fn=christoffel,
        domain=ChartDomain(tuple((None, None) for _ in range(n))),
    )
