"""Rational functions (A(z) + B(z) w) / C(z) on a hyperelliptic curve w^2 = p(z)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from riemann_surfaces_ex.core.errors import DomainError
from riemann_surfaces_ex.services.polycore import UniPoly

_ONE = UniPoly((1.0,))
_ZERO = UniPoly((0j,))


@dataclass(frozen=True, eq=False)
class HyperellipticFunction:
    """The function ``(A(z) + B(z) w) / C(z)`` on ``w^2 = p(z)``."""

    A: UniPoly
    B: UniPoly
    C: UniPoly
    p: UniPoly

    def __post_init__(self) -> None:
        if self.C.is_zero:
            raise DomainError("Denominator of a rational function cannot be zero")

    @classmethod
    def from_parts(
        cls,
        p: UniPoly,
        r_num: UniPoly,
        r_den: UniPoly = _ONE,
        s_num: UniPoly = _ZERO,
        s_den: UniPoly = _ONE
    ) -> HyperellipticFunction:
        """Build ``R + S w`` with ``R = r_num / r_den`` and ``S = s_num / s_den``."""
        if r_den.is_zero or s_den.is_zero:
            raise DomainError("Rational coefficient with zero denominator")
        return cls(r_num * s_den, s_num * r_den, r_den * s_den, p)

    @classmethod
    def constant(cls, p: UniPoly, value: complex) -> HyperellipticFunction:
        return cls(UniPoly((value,)), _ZERO, _ONE, p)

    @classmethod
    def z(cls, p: UniPoly) -> HyperellipticFunction:
        return cls(UniPoly((0, 1)), _ZERO, _ONE, p)

    @classmethod
    def w(cls, p: UniPoly) -> HyperellipticFunction:
        return cls(_ZERO, _ONE, _ONE, p)

    @property
    def is_zero(self) -> bool:
        return self.A.is_zero and self.B.is_zero

    def norm(self) -> UniPoly:
        """``A^2 - B^2 p``; its zeros are the zeros of f or of f composed with w -> -w."""
        return self.A * self.A - self.B * self.B * self.p

    def __call__(self, z: complex | np.ndarray, w: complex | np.ndarray) -> complex | np.ndarray:
        return (self.A(z) + self.B(z) * w) / self.C(z)

    def require_curve(self, p: UniPoly) -> None:
        """Raise DomainError unless the function lives on ``w^2 = p(z)``."""
        if p != self.p:
            raise DomainError("Function is defined on a different curve")

    def _check(self, other: HyperellipticFunction) -> None:
        if other.p != self.p:
            raise DomainError("Functions live on different curves")

    def __mul__(self, other: HyperellipticFunction | complex) -> HyperellipticFunction:
        if not isinstance(other, HyperellipticFunction):
            return HyperellipticFunction(self.A * other, self.B * other, self.C, self.p)
        self._check(other)
        return HyperellipticFunction(
            self.A * other.A + self.B * other.B * self.p,
            self.A * other.B + self.B * other.A,
            self.C * other.C,
            self.p,
        )

    __rmul__ = __mul__

    def __add__(self, other: HyperellipticFunction | complex) -> HyperellipticFunction:
        if not isinstance(other, HyperellipticFunction):
            other = HyperellipticFunction.constant(self.p, other)
        self._check(other)
        return HyperellipticFunction(
            self.A * other.C + other.A * self.C,
            self.B * other.C + other.B * self.C,
            self.C * other.C,
            self.p,
        )

    def __neg__(self) -> HyperellipticFunction:
        return HyperellipticFunction(-self.A, -self.B, self.C, self.p)

    def __sub__(self, other: HyperellipticFunction | complex) -> HyperellipticFunction:
        return self + (-other)

    def inverse(self) -> HyperellipticFunction:
        """``C (A - B w) / (A^2 - B^2 p)``.

        Raises:
            DomainError: If the function is identically zero.
        """
        if self.is_zero:
            raise DomainError("Cannot invert the zero function")
        return HyperellipticFunction(self.C * self.A, -(self.C * self.B), self.norm(), self.p)

    def __truediv__(self, other: HyperellipticFunction | complex) -> HyperellipticFunction:
        if not isinstance(other, HyperellipticFunction):
            if other == 0:
                raise DomainError("Division by zero")
            return self * (1.0 / other)
        return self * other.inverse()
