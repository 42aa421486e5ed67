"""Input file models and the result envelope written by every CLI command."""
from __future__ import annotations

from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from riemann_surfaces_ex.core.config import Settings
from riemann_surfaces_ex.core.errors import DomainError
from riemann_surfaces_ex.services.curve import Curve, CurvePoint, PointKind
from riemann_surfaces_ex.services.divisor import Divisor
from riemann_surfaces_ex.services.functions import HyperellipticFunction
from riemann_surfaces_ex.services.polycore import BivariatePoly, UniPoly

SCHEMA_VERSION = 1

ComplexPair = tuple[float, float]


def to_pair(value: complex) -> list[float]:
    value = complex(value)
    return [value.real, value.imag]


def to_pairs(values: Any) -> list[Any]:
    """Nested lists of [re, im] pairs for a complex array of any rank."""
    array = np.asarray(values, dtype=complex)
    if array.ndim == 0:
        return to_pair(complex(array))
    return [to_pairs(row) for row in array]


def _poly(pairs: list[ComplexPair]) -> UniPoly:
    return UniPoly(tuple(complex(re, im) for re, im in pairs) or (0j,))


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CurveOptions(StrictModel):
    """Per-curve overrides; CLI flags win over these."""

    tol: float | None = Field(default=None, gt=0)
    base_point: ComplexPair | None = None
    quad_order: int | None = Field(default=None, ge=4)
    newton_steps: int | None = Field(default=None, ge=1)


class CurveSpec(StrictModel):
    """``{"schema_version": 1, "monomials": [[i, j, re, im], ...]}`` for the terms c z^i w^j."""

    schema_version: Literal[1]
    monomials: list[tuple[int, int, float, float]] = Field(min_length=1)
    options: CurveOptions = Field(default_factory=CurveOptions)

    def to_poly(self) -> BivariatePoly:
        return BivariatePoly.from_monomials(self.monomials)

    def settings(self, base: Settings) -> Settings:
        return base.with_overrides(
            root_tol=self.options.tol,
            track_tol=self.options.tol,
            quad_order=self.options.quad_order,
            newton_steps=self.options.newton_steps,
        )

    def to_curve(self, settings: Settings) -> Curve:
        base_point = complex(*self.options.base_point) if self.options.base_point else None
        return Curve(self.to_poly(), settings, base_point)


class PointSpec(StrictModel):
    kind: PointKind
    z: ComplexPair | None = None
    w: ComplexPair | None = None
    sheet: int | None = None
    sign: int = 0

    def to_point(self, curve: Curve) -> CurvePoint:
        """Resolve against the curve: snap branch points and regular w-values to computed ones.

        Raises:
            DomainError: For missing coordinates or a z that is not a branch point.
        """
        if self.kind is PointKind.INFINITY:
            return CurvePoint.infinity(self.sign)
        if self.z is None:
            raise DomainError(f"A {self.kind.value} point needs z")
        z = complex(*self.z)
        if self.kind is PointKind.BRANCH:
            zs = curve.finite_branch_zs
            k = int(np.argmin(np.abs(zs - z))) if len(zs) else -1
            if k < 0 or abs(zs[k] - z) > 1e-6 * max(1.0, abs(z)):
                raise DomainError(f"{z} is not a branch point of the curve")
            return CurvePoint.branch(zs[k])
        w = complex(*self.w) if self.w is not None else None
        return curve.point(z, sheet=self.sheet, w=w)


class DivisorTerm(StrictModel):
    point: PointSpec
    coefficient: int


class DivisorSpec(StrictModel):
    schema_version: Literal[1]
    terms: list[DivisorTerm] = Field(default_factory=list)

    def to_divisor(self, curve: Curve) -> Divisor:
        return Divisor((term.point.to_point(curve), term.coefficient) for term in self.terms)


class FunctionSpec(StrictModel):
    """``R + S w`` with ``R = r_num / r_den`` and ``S = s_num / s_den``, coefficients in ascending powers of z."""

    schema_version: Literal[1]
    r_num: list[ComplexPair] = Field(default_factory=list)
    r_den: list[ComplexPair] = Field(default_factory=lambda: [(1.0, 0.0)])
    s_num: list[ComplexPair] = Field(default_factory=list)
    s_den: list[ComplexPair] = Field(default_factory=lambda: [(1.0, 0.0)])

    def to_function(self, curve: Curve) -> HyperellipticFunction:
        p = curve.require_hyperelliptic()
        return HyperellipticFunction.from_parts(
            p, _poly(self.r_num), _poly(self.r_den), _poly(self.s_num), _poly(self.s_den)
        )


class TargetSpec(StrictModel):
    """Jacobi inversion target as reduced lattice coordinates, with an optional seed divisor."""

    schema_version: Literal[1]
    coords: list[float]
    seed: DivisorSpec | None = None


class PolynomialPairSpec(StrictModel):
    """Two univariate polynomials, coefficients in ascending powers."""

    schema_version: Literal[1]
    f: list[ComplexPair] = Field(min_length=1)
    g: list[ComplexPair] = Field(min_length=1)

    def polys(self) -> tuple[UniPoly, UniPoly]:
        return _poly(self.f), _poly(self.g)


class ResultEnvelope(BaseModel):
    """What every command prints: inputs, outputs, diagnostics and provenance."""

    command: str
    curve_hash: str | None = None
    inputs: dict[str, Any] = Field(default_factory=dict)
    outputs: dict[str, Any] = Field(default_factory=dict)
    diagnostics: dict[str, Any] = Field(default_factory=dict)
    tool_version: str
    wall_time: float = 0.0
    exit_code: int = 0
    error: str | None = None
