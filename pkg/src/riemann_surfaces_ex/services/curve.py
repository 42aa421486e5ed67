"""Plane-curve model F(w, z) = 0: branch locus, fibers and points of the surface."""
from __future__ import annotations

import hashlib
import json
import logging
from collections import Counter
from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property
from typing import TYPE_CHECKING, Any

import numpy as np

from riemann_surfaces_ex.core.config import DEFAULT_SETTINGS, Settings
from riemann_surfaces_ex.core.errors import DomainError
from riemann_surfaces_ex.services import polycore
from riemann_surfaces_ex.services.polycore import BivariatePoly, UniPoly

if TYPE_CHECKING:
    from riemann_surfaces_ex.services.tracker import MonodromyData

logger = logging.getLogger(__name__)


class CurveKind(StrEnum):
    GENERAL = "general"
    HYPERELLIPTIC = "hyperelliptic"
    ELLIPTIC = "elliptic"


class PointKind(StrEnum):
    REGULAR = "regular"
    BRANCH = "branch"
    INFINITY = "infinity"


class BranchSource(StrEnum):
    DISC_ZERO = "disc_zero"
    P0_ZERO = "p0_zero"


@dataclass(frozen=True)
class CurvePoint:
    """A point of the surface.

    Attributes:
        kind: Regular point, finite branch point, or point above z = infinity.
        z: Projection to the sphere; None at infinity.
        w: Fiber value (0 at hyperelliptic branch points, None at infinity).
        sheet: 1-based sheet label when the point was read off a fiber.
        sign: +1/-1 distinguishes the two points at infinity of an even-degree
            hyperelliptic curve; 0 otherwise.
    """

    kind: PointKind
    z: complex | None
    w: complex | None = None
    sheet: int | None = None
    sign: int = 0

    @classmethod
    def regular(cls, z: complex, w: complex, sheet: int | None = None) -> CurvePoint:
        return cls(PointKind.REGULAR, complex(z), complex(w), sheet)

    @classmethod
    def branch(cls, z: complex, w: complex = 0j) -> CurvePoint:
        return cls(PointKind.BRANCH, complex(z), complex(w))

    @classmethod
    def infinity(cls, sign: int = 0) -> CurvePoint:
        return cls(PointKind.INFINITY, None, None, None, sign)

    @property
    def is_infinite(self) -> bool:
        return self.kind is PointKind.INFINITY

    def is_close(self, other: CurvePoint, tol: float = 1e-8) -> bool:
        """Tolerance-based identity; exact equality is meaningless for computed points."""
        if self.kind is PointKind.INFINITY or other.kind is PointKind.INFINITY:
            return self.kind is other.kind and self.sign == other.sign
        scale = max(1.0, abs(self.z), abs(other.z))
        if abs(self.z - other.z) > tol * scale:
            return False
        if self.kind is PointKind.BRANCH and other.kind is PointKind.BRANCH:
            return True
        w_scale = max(1.0, abs(self.w or 0), abs(other.w or 0))
        return abs((self.w or 0) - (other.w or 0)) <= 1e3 * tol * w_scale

    def descriptor(self) -> dict[str, Any]:
        """JSON-friendly description used in result envelopes."""
        if self.kind is PointKind.INFINITY:
            return {"kind": self.kind.value, "sign": self.sign}
        return {
            "kind": self.kind.value,
            "z": [self.z.real, self.z.imag],
            "w": [self.w.real, self.w.imag] if self.w is not None else None,
        }

    def __str__(self) -> str:
        if self.kind is PointKind.INFINITY:
            return {1: "inf+", -1: "inf-"}.get(self.sign, "inf")
        return f"({self.z:.6g}, {self.w:.6g})"


@dataclass(frozen=True)
class BranchPoint:
    z: complex
    source: BranchSource


@dataclass(frozen=True)
class BranchLocus:
    finite_points: tuple[BranchPoint, ...]
    includes_infinity: bool

    @property
    def zs(self) -> np.ndarray:
        return np.array([b.z for b in self.finite_points], dtype=complex)


def canonical_order(values: np.ndarray) -> np.ndarray:
    """Sort fiber values by (real part, imaginary part)."""
    keys = sorted(range(len(values)), key=lambda k: (round(float(values[k].real), 9), float(values[k].imag)))
    return np.asarray(values, dtype=complex)[keys]


class Curve:
    """Compact Riemann surface of an irreducible plane curve F(w, z) = 0.

    The curve is validated on construction (squarefree in w) and caches its
    branch locus, base point and base fiber. Kind detection recognises
    ``a w^2 - p(z)`` with ``p`` squarefree as hyperelliptic (elliptic when
    ``deg p`` is 3 or 4).
    """

    def __init__(
        self,
        F: BivariatePoly,
        settings: Settings | None = None,
        base_point: complex | None = None
    ) -> None:
        """Initialize and validate the curve.

        Args:
            F: Defining polynomial.
            settings: Tolerances; defaults to :data:`DEFAULT_SETTINGS`.
            base_point: Optional override of the regular base point z*.

        Raises:
            DomainError: If F is not squarefree in w or the override is unusable.
        """
        self.F = F
        self.n = F.deg_w
        self.settings = settings or DEFAULT_SETTINGS
        self.F_w = F.diff_w()
        self.F_z = F.diff_z()
        self._base_override = complex(base_point) if base_point is not None else None
        self._monodromy: MonodromyData | None = None

        self.p = self._hyperelliptic_polynomial()
        if self.p is not None:
            self.kind = CurveKind.ELLIPTIC if self.p.degree in (3, 4) else CurveKind.HYPERELLIPTIC
        else:
            self.kind = CurveKind.GENERAL
            if self._discriminant_is_zero():
                raise DomainError("curve not squarefree in w")

        if self._base_override is not None:
            distances = np.abs(self.finite_branch_zs - self._base_override)
            if distances.size and distances.min() <= self.margin:
                raise DomainError(f"Base point {self._base_override} lies within the branch margin")

        logger.info(
            f"Curve of degree {self.n} in w, kind={self.kind.value}, "
            f"{len(self.finite_branch_points)} finite branch points"
        )

    @classmethod
    def hyperelliptic(cls, p: UniPoly, settings: Settings | None = None) -> Curve:
        """Build ``w^2 - p(z)``."""
        return cls(BivariatePoly.from_w_coefficients({2: UniPoly((1.0,)), 0: -p}), settings)

    @classmethod
    def from_monomials(cls, monomials: list[tuple[int, int, float, float]], settings: Settings | None = None) -> Curve:
        return cls(BivariatePoly.from_monomials(monomials), settings)

    # ========== kind detection ==========

    def _hyperelliptic_polynomial(self) -> UniPoly | None:
        if self.n != 2 or any(j not in (0, 2) for _, j in self.F.coeffs):
            return None
        top = self.F.coefficient_in_w(2)
        if top.degree != 0:
            return None
        p = -self.F.coefficient_in_w(0) * (1.0 / top.leading)
        if p.is_zero or p.degree < 1:
            return None
        if not self._is_squarefree(p):
            return None
        return p

    def _is_squarefree(self, p: UniPoly) -> bool:
        if p.degree == 1:
            return True
        if p.is_integer:
            return polycore.discriminant(p) != 0
        clusters = polycore.roots(
            p, self.settings.root_tol, self.settings.cluster_tol, self.settings.max_root_iterations
        )
        return all(c.multiplicity == 1 for c in clusters)

    @cached_property
    def discriminant_poly(self) -> UniPoly:
        """Rés_w(F, dF/dw) as a polynomial in z."""
        return polycore.resultant_poly_in_z(self.F, self.F_w)

    def _discriminant_is_zero(self) -> bool:
        disc = self.discriminant_poly
        if disc.is_zero:
            return True
        if self.F.is_gaussian_integer:
            return False
        scale = float(np.max(np.abs(self.F.dense))) ** (2 * self.n - 1)
        return bool(np.all(np.abs(disc.array) <= self.settings.resultant_zero_tol * max(scale, 1.0)))

    @property
    def is_hyperelliptic(self) -> bool:
        return self.kind in (CurveKind.HYPERELLIPTIC, CurveKind.ELLIPTIC)

    def require_hyperelliptic(self) -> UniPoly:
        """Return p(z) of ``w^2 = p(z)``.

        Raises:
            DomainError: For general curves.
        """
        if self.p is None:
            raise DomainError("unsupported kind: operation needs a hyperelliptic curve")
        return self.p

    @property
    def leading_coefficient(self) -> UniPoly:
        """p0(z), the coefficient of w^n."""
        return self.F.coefficient_in_w(self.n)

    # ========== branch locus ==========

    def _solve(self, p: UniPoly) -> list[polycore.RootCluster]:
        return polycore.roots(p, self.settings.root_tol, self.settings.cluster_tol, self.settings.max_root_iterations)

    @cached_property
    def finite_branch_points(self) -> tuple[BranchPoint, ...]:
        """Clustered zeros of the discriminant and of p0."""
        if self.p is not None:
            return tuple(BranchPoint(c.center, BranchSource.DISC_ZERO) for c in self._solve(self.p))

        points: list[BranchPoint] = []
        p0 = self.leading_coefficient
        if p0.degree > 0:
            points.extend(BranchPoint(c.center, BranchSource.P0_ZERO) for c in self._solve(p0))

        for cluster in self._solve(self.discriminant_poly):
            reach = self.settings.cluster_tol * max(1.0, abs(cluster.center))
            if any(abs(cluster.center - b.z) < reach for b in points):
                continue
            points.append(BranchPoint(cluster.center, BranchSource.DISC_ZERO))
        return tuple(points)

    @cached_property
    def finite_branch_zs(self) -> np.ndarray:
        return np.array([b.z for b in self.finite_branch_points], dtype=complex)

    def branch_locus(self) -> BranchLocus:
        """Finite branch points plus whether z = infinity ramifies.

        For hyperelliptic curves infinity ramifies iff deg p is odd; otherwise
        the answer comes from the monodromy at infinity.
        """
        if self.p is not None:
            includes_infinity = self.p.degree % 2 == 1
        else:
            includes_infinity = not self.monodromy().perm_infinity.is_Identity
        return BranchLocus(self.finite_branch_points, includes_infinity)

    @cached_property
    def margin(self) -> float:
        """Safety radius around branch points inside which fibers are not solved."""
        zs = self.finite_branch_zs
        if len(zs) < 2:
            return self.settings.margin_factor
        diffs = np.abs(zs[:, None] - zs[None, :])
        min_distance = float(np.min(diffs[~np.eye(len(zs), dtype=bool)]))
        return max(self.settings.margin_factor * min_distance, self.settings.margin_floor)

    @cached_property
    def base_point(self) -> complex:
        if self._base_override is not None:
            return self._base_override
        zs = self.finite_branch_zs
        if len(zs) == 0:
            return 2j
        centroid = complex(np.mean(zs))
        spread = float(np.max(np.abs(zs - centroid)))
        return centroid + 1j * (2.0 + spread)

    # ========== fibers ==========

    def distance_to_branch_points(self, z: complex) -> float:
        zs = self.finite_branch_zs
        return float(np.min(np.abs(zs - z))) if len(zs) else float("inf")

    def fiber(self, z: complex) -> np.ndarray:
        """The n roots of F(., z), canonically sorted.

        Raises:
            DomainError: If z lies within the safety margin of the branch locus.
        """
        if self.distance_to_branch_points(z) <= self.margin:
            raise DomainError(f"near-singular fiber at z={z}")
        clusters = polycore.roots(
            self.F.specialize(z),
            self.settings.root_tol,
            self.settings.cluster_tol,
            self.settings.max_root_iterations,
            exact=False,
        )
        values = np.array(polycore.expand_roots(clusters), dtype=complex)
        return canonical_order(values)

    @cached_property
    def base_fiber(self) -> np.ndarray:
        return self.fiber(self.base_point)

    @cached_property
    def collision_threshold(self) -> float:
        fiber = self.base_fiber
        diameter = float(np.max(np.abs(fiber[:, None] - fiber[None, :]))) if len(fiber) > 1 else 1.0
        return self.settings.collision_factor * max(diameter, 1e-12)

    def relative_residual(self, w: np.ndarray | complex, z: complex) -> np.ndarray:
        """``|F(w, z)| / sum |c_ij| |z|^i |w|^j`` elementwise."""
        w = np.asarray(w, dtype=complex)
        return np.abs(self.F(w, z)) / np.maximum(self.F.abs_scale(w, z), np.finfo(float).tiny)

    def vieta_residual(self, z: complex) -> float:
        """``|sum(fiber) + p_{n-1}(z)/p_n(z)|``: the sum-of-roots check."""
        coeffs = self.F.coeffs_in_w(z)
        expected = -coeffs[self.n - 1] / coeffs[self.n]
        return float(abs(np.sum(self.fiber(z)) - expected))

    # ========== points ==========

    def point(self, z: complex, sheet: int | None = None, w: complex | None = None) -> CurvePoint:
        """Regular point above z, picked by 1-based sheet label of :meth:`fiber` or by nearest w."""
        values = self.fiber(z)
        if w is not None:
            index = int(np.argmin(np.abs(values - w)))
        elif sheet is not None:
            if not 1 <= sheet <= self.n:
                raise DomainError(f"Sheet {sheet} outside 1..{self.n}")
            index = sheet - 1
        else:
            index = 0
        return CurvePoint.regular(z, values[index], index + 1)

    def points_at_infinity(self) -> list[CurvePoint]:
        """One point when deg p is odd, two (signs +1, -1) when even (hyperelliptic only)."""
        p = self.require_hyperelliptic()
        if p.degree % 2:
            return [CurvePoint.infinity()]
        return [CurvePoint.infinity(1), CurvePoint.infinity(-1)]

    def branch_curve_points(self) -> list[CurvePoint]:
        return [CurvePoint.branch(b.z) for b in self.finite_branch_points]

    # ========== monodromy-derived data ==========

    def monodromy(self) -> MonodromyData:
        """Monodromy of the cover, computed once per curve."""
        if self._monodromy is None:
            from riemann_surfaces_ex.services.tracker import monodromy

            self._monodromy = monodromy(self)
        return self._monodromy

    def infinity_structure(self) -> list[tuple[int, int]]:
        """Cycle type of the monodromy at infinity as sorted ``(cycle_length, count)`` pairs."""
        perm = self.monodromy().perm_infinity
        lengths = Counter(len(cycle) for cycle in perm.full_cyclic_form)
        return sorted(lengths.items())

    def curve_hash(self) -> str:
        """sha256 of the canonical monomial list."""
        payload = json.dumps(self.F.canonical_monomials(), separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()

    def __repr__(self) -> str:
        return f"Curve(n={self.n}, kind={self.kind.value}, F={self.F!r})"
