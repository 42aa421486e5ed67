"""Local parameters on hyperelliptic curves w^2 = p(z).

Charts:
    regular point (z0, w0):   z = z0 + t,     w continued from w0
    finite branch point e:    z = e + t^2,    w = t sqrt(q(z)),  p = (z - e) q
    infinity, deg p odd:      z = t^-2,       w = t^-d sqrt(P(t^2))
    infinity+-, deg p even:   z = 1/t,        w = +-t^(-d/2) sqrt(P(t))
where P(s) = s^d p(1/s). Square roots are continued along the sample circle.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import numpy.polynomial.polynomial as npoly

from riemann_surfaces_ex.core.errors import DomainError, NumericalError
from riemann_surfaces_ex.services.curve import Curve, CurvePoint, PointKind
from riemann_surfaces_ex.services.polycore import UniPoly

logger = logging.getLogger(__name__)

MAX_WINDING_POINTS = 4096


@dataclass(frozen=True)
class ChartSamples:
    """Values on the circle ``|t| = rho``; ``dz`` is dz/dt."""

    t: np.ndarray
    z: np.ndarray
    w: np.ndarray
    dz: np.ndarray


def continuous_sqrt(values: np.ndarray, reference: complex) -> np.ndarray:
    """Square roots of ``values`` chosen continuously, the first one nearest ``reference``."""
    roots = np.sqrt(np.asarray(values, dtype=complex))
    if roots.size == 0:
        return roots
    previous = reference
    for k in range(roots.size):
        if abs(roots[k] - previous) > abs(-roots[k] - previous):
            roots[k] = -roots[k]
        previous = roots[k]
    return roots


def winding_number(values: np.ndarray) -> float:
    """Total phase change of a closed sample sequence divided by 2 pi."""
    closed = np.append(values, values[0])
    increments = np.angle(closed[1:] / closed[:-1])
    return float(np.sum(increments) / (2 * math.pi))


class LocalChart:
    """Local parameter t around one point of a hyperelliptic curve."""

    def __init__(self, curve: Curve, point: CurvePoint) -> None:
        self.curve = curve
        self.p = curve.require_hyperelliptic()
        self.d = self.p.degree
        self.point = point
        self.kind = point.kind

        if self.kind is PointKind.INFINITY:
            odd = self.d % 2 == 1
            if odd and point.sign != 0:
                raise DomainError("Odd-degree curves have a single point at infinity (sign 0)")
            if not odd and point.sign not in (1, -1):
                raise DomainError("Even-degree curves need infinity with sign +1 or -1")
            self.reversed_p = UniPoly(tuple(reversed(self.p.coeffs)))
            self.lead_root = np.sqrt(complex(self.p.leading)) * (point.sign or 1)
        elif self.kind is PointKind.BRANCH:
            self.e = point.z
            if curve.distance_to_branch_points(self.e) > 1e-6 * max(1.0, abs(self.e)):
                raise DomainError(f"{self.e} is not a branch point of the curve")
            quotient, _ = npoly.polydiv(self.p.array, np.array([-self.e, 1.0], dtype=complex))
            self.q = UniPoly(tuple(quotient))
            self.q_root = np.sqrt(complex(self.q(self.e)))
        else:
            if curve.distance_to_branch_points(point.z) <= curve.margin:
                raise DomainError(f"Regular point {point.z} lies inside the branch margin")
            if point.w is None:
                raise DomainError("Regular points need a w-value")

    # ========== geometry ==========

    def special_distance(self) -> float:
        """Distance in z to the nearest other branch point (or to the outer branch radius at infinity)."""
        zs = self.curve.finite_branch_zs
        if self.kind is PointKind.INFINITY:
            return float(np.max(np.abs(zs))) if len(zs) else 0.0
        others = zs[np.abs(zs - self.point.z) > 1e-9 * max(1.0, abs(self.point.z))]
        return float(np.min(np.abs(others - self.point.z))) if len(others) else math.inf

    def t_radius(self, z_distance: float) -> float:
        """Convert a z-distance (an outer radius for infinity) into a radius in t."""
        if self.kind is PointKind.REGULAR:
            return z_distance
        if self.kind is PointKind.BRANCH:
            return math.sqrt(z_distance)
        if z_distance <= 0:
            return 1.0
        return 1.0 / math.sqrt(z_distance) if self.d % 2 else 1.0 / z_distance

    def convergence_radius(self) -> float:
        """Radius in t of the largest disk free of other branch points."""
        distance = self.special_distance()
        if math.isinf(distance):
            return 1.0
        return self.t_radius(distance)

    # ========== sampling ==========

    def sample(self, rho: float, n_points: int) -> ChartSamples:
        """Sample z(t), w(t) and dz/dt on ``t = rho e^(2 pi i k / n_points)``."""
        theta = 2 * math.pi * np.arange(n_points) / n_points
        return self.evaluate(rho * np.exp(1j * theta))

    def evaluate(self, t: np.ndarray) -> ChartSamples:
        """Chart values at parameters ``t`` ordered along a path leaving the point.

        Square roots are continued from their value at t = 0 through the
        given order, so consecutive parameters must stay close.
        """
        t = np.asarray(t, dtype=complex)
        if self.kind is PointKind.REGULAR:
            z = self.point.z + t
            w = continuous_sqrt(self.p(z), self.point.w)
            dz = np.ones_like(t)
        elif self.kind is PointKind.BRANCH:
            z = self.e + t**2
            w = t * continuous_sqrt(self.q(z), self.q_root)
            dz = 2 * t
        elif self.d % 2:
            z = t**-2
            w = t ** (-self.d) * continuous_sqrt(self.reversed_p(t**2), self.lead_root)
            dz = -2 * t**-3
        else:
            z = 1 / t
            w = t ** (-(self.d // 2)) * continuous_sqrt(self.reversed_p(t), self.lead_root)
            dz = -(t**-2)
        return ChartSamples(t, z, w, dz)

    def order_of(self, fn: Callable[[ChartSamples], np.ndarray], rho: float, n_points: int = 256) -> int:
        """Order of ``fn`` (evaluated on samples) at the point by the argument principle in t.

        The sample count doubles until consecutive phase increments stay below pi/2.

        Raises:
            NumericalError: If the function vanishes on the circle or the count
                does not settle.
        """
        count = n_points
        while count <= MAX_WINDING_POINTS:
            values = fn(self.sample(rho, count))
            if not np.all(np.isfinite(values)) or np.any(values == 0):
                raise NumericalError(f"Function vanishes or blows up on the chart circle at {self.point}")
            closed = np.append(values, values[0])
            if np.max(np.abs(np.angle(closed[1:] / closed[:-1]))) < math.pi / 2:
                winding = winding_number(values)
                order = round(winding)
                if abs(winding - order) > 1e-3:
                    raise NumericalError(f"Non-integral winding {winding:.4f} at {self.point}")
                return order
            count *= 2
        raise NumericalError(f"Winding number did not settle at {self.point}")

    def taylor_coefficients(self, fn: Callable[[ChartSamples], np.ndarray], count: int, n_points: int) -> tuple[np.ndarray, float]:
        """First ``count`` Taylor coefficients in t, scaled to unit convergence radius.

        Returns:
            Coefficients ``c_k R^k`` and the sup of |fn| on the sample circle,
            with R the chart's convergence radius and samples taken at R/2.
        """
        radius = self.convergence_radius()
        rho = 0.5 * radius
        values = fn(self.sample(rho, n_points))
        spectrum = np.fft.fft(values) / n_points
        scale = (radius / rho) ** np.arange(count)
        return spectrum[:count] * scale, float(np.max(np.abs(values)))

    def residue(self, fn: Callable[[ChartSamples], np.ndarray], rho: float, n_points: int = 256) -> complex:
        """Residue of ``fn(t) dt`` at t = 0 via the trapezoidal rule on ``|t| = rho``."""
        samples = self.sample(rho, n_points)
        return complex(np.mean(fn(samples) * samples.t))
