"""
Exception hierarchy for the nullgeo toolkit.

Library code raises these; only the CLI entry point maps them to exit codes.
Input and geometry problems derive from ``ValueError``, numerical failures from
``RuntimeError``.
"""

from __future__ import annotations

from .constants import EXIT_NUMERIC, EXIT_USAGE


class NullGeoError(Exception):
    """Base class; ``exit_code`` is what ``src.main`` exits with."""

    exit_code = EXIT_NUMERIC


# ── input / geometry ──────────────────────────────────────────────────────

class UsageError(NullGeoError, ValueError):
    exit_code = EXIT_USAGE


class ParseError(UsageError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class ValidationError(UsageError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = (", ".join(where) + ": ") if where else ""
        super().__init__(prefix + message)


class UnknownModel(UsageError):
    pass


class UnknownHypersurface(UsageError):
    pass


class GeometryError(NullGeoError, ValueError):
    """Invalid geometric input (wrong base point, zero vector, ...)."""


class DomainError(GeometryError):
    pass


class SignatureError(GeometryError):
    """Metric is not Lorentzian (one negative, n-1 positive eigenvalues) at a point."""


class BaseMismatch(GeometryError):
    pass


class ZeroVector(GeometryError):
    pass


class DegenerateFrame(GeometryError):
    pass


class MissingFrame(GeometryError):
    pass


class NotTimelike(GeometryError):
    pass


class NotSpacelike(GeometryError):
    pass


class BoundaryStencil(GeometryError):
    pass


class LatticeMismatch(GeometryError):
    pass


# ── numerical failure ─────────────────────────────────────────────────────

class NumericalError(NullGeoError, RuntimeError):
    pass


class StepFailure(NumericalError):
    pass


class NullDriftError(StepFailure):
    pass


class BlowUp(NumericalError):
    def __init__(self, message: str, last_s: float):
        self.last_s = last_s
        super().__init__(f"{message} (last regular s={last_s:.12g})")


class ConjugatePoint(NumericalError):
    def __init__(self, message: str, s: float):
        self.s = s
        super().__init__(f"{message} (s={s:.12g})")


class NoConvergence(NumericalError):
    pass
