"""Divisors, principal divisors and Riemann-Roch dimensions on hyperelliptic curves."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Iterable, Iterator

import numpy as np
import scipy.linalg
import scipy.optimize

from riemann_surfaces_ex.core.errors import DomainError, NumericalError
from riemann_surfaces_ex.services import polycore
from riemann_surfaces_ex.services.curve import Curve, CurvePoint, PointKind
from riemann_surfaces_ex.services.functions import HyperellipticFunction
from riemann_surfaces_ex.services.local_charts import ChartSamples, LocalChart
from riemann_surfaces_ex.services.topology import hyperelliptic_genus

logger = logging.getLogger(__name__)

WEIERSTRASS_GRID = 8
WEIERSTRASS_SCREEN = 1e-3


class Divisor:
    """Finite formal sum of curve points with integer coefficients.

    Points are identified up to ``tol`` (see :meth:`CurvePoint.is_close`);
    zero coefficients are dropped.
    """

    def __init__(self, terms: Iterable[tuple[CurvePoint, int]] = (), tol: float = 1e-8) -> None:
        self.tol = tol
        merged: list[list[Any]] = []
        for point, coefficient in terms:
            for entry in merged:
                if entry[0].is_close(point, tol):
                    entry[1] += int(coefficient)
                    break
            else:
                merged.append([point, int(coefficient)])
        self._terms = tuple((point, coefficient) for point, coefficient in merged if coefficient != 0)

    @classmethod
    def from_points(cls, points: Iterable[CurvePoint], tol: float = 1e-8) -> Divisor:
        return cls(((point, 1) for point in points), tol)

    @property
    def terms(self) -> tuple[tuple[CurvePoint, int], ...]:
        return self._terms

    @property
    def degree(self) -> int:
        return sum(coefficient for _, coefficient in self._terms)

    @property
    def is_positive(self) -> bool:
        """True for effective divisors (all coefficients >= 0, the empty divisor included)."""
        return all(coefficient > 0 for _, coefficient in self._terms)

    @property
    def support(self) -> list[CurvePoint]:
        return [point for point, _ in self._terms]

    def coefficient(self, point: CurvePoint) -> int:
        return next((c for p, c in self._terms if p.is_close(point, self.tol)), 0)

    def expanded(self) -> list[CurvePoint]:
        """Points repeated by coefficient; only for positive divisors."""
        if not self.is_positive:
            raise DomainError("Only positive divisors expand into point lists")
        return [point for point, coefficient in self._terms for _ in range(coefficient)]

    def __iter__(self) -> Iterator[tuple[CurvePoint, int]]:
        return iter(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __add__(self, other: Divisor) -> Divisor:
        return Divisor(self._terms + other._terms, min(self.tol, other.tol))

    def __neg__(self) -> Divisor:
        return Divisor(((p, -c) for p, c in self._terms), self.tol)

    def __sub__(self, other: Divisor) -> Divisor:
        return self + (-other)

    def __mul__(self, factor: int) -> Divisor:
        return Divisor(((p, factor * c) for p, c in self._terms), self.tol)

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Divisor):
            return NotImplemented
        return len((self - other)._terms) == 0

    def __hash__(self) -> int:
        return hash(self.degree)

    def descriptor(self) -> list[dict[str, Any]]:
        return [{"point": point.descriptor(), "coefficient": coefficient} for point, coefficient in self._terms]

    def __repr__(self) -> str:
        body = " + ".join(f"{c}*{p}" for p, c in self._terms) or "0"
        return f"Divisor({body})"


def degree(D: Divisor) -> int:
    return D.degree


def chi(D: Divisor, g: int) -> int:
    """Euler characteristic ``deg D - g + 1``."""
    return D.degree - g + 1


def canonical_degree(g: int) -> int:
    if g < 0:
        raise DomainError(f"Genus must be nonnegative, got {g}")
    return 2 * g - 2


def curve_genus(c: Curve) -> int:
    """Genus of a hyperelliptic curve straight from deg p."""
    return hyperelliptic_genus(c.require_hyperelliptic().degree)


# ================================
# Zeros and poles by winding counts
# ================================

def merge_candidates(c: Curve, zs: Iterable[complex]) -> list[complex]:
    tol = c.settings.cluster_tol
    merged = [complex(z) for z in c.finite_branch_zs]
    for z in zs:
        z = complex(z)
        if all(abs(z - other) >= tol * max(1.0, abs(z)) for other in merged):
            merged.append(z)
    return merged


def points_over(c: Curve, z: complex) -> list[CurvePoint]:
    if c.distance_to_branch_points(z) <= 1e-9 * max(1.0, abs(z)):
        return [CurvePoint.branch(z)]
    w0 = complex(np.sqrt(complex(c.p(z))))
    return [CurvePoint.regular(z, w0), CurvePoint.regular(z, -w0)]


def winding_radius(c: Curve, chart: LocalChart, candidates: list[complex]) -> float:
    """t-radius a quarter of the way to the nearest other candidate (outer radius at infinity)."""
    if chart.kind is PointKind.INFINITY:
        outer = 2.0 * max((abs(z) for z in candidates), default=0.0) + 1.0
        return chart.t_radius(outer)
    z0 = chart.point.z
    others = [abs(z - z0) for z in candidates if abs(z - z0) > 1e-9 * max(1.0, abs(z0))]
    distance = min(others) if others else 4.0
    return chart.t_radius(distance / 4.0)


def _orders(c: Curve, fn: Any, candidates: list[complex]) -> Divisor:
    terms: list[tuple[CurvePoint, int]] = []
    points = [pt for z in candidates for pt in points_over(c, z)] + c.points_at_infinity()
    for point in points:
        chart = LocalChart(c, point)
        order = chart.order_of(fn, winding_radius(c, chart, candidates))
        if order:
            terms.append((point, order))
    return Divisor(terms)


def candidate_zs(c: Curve, f: HyperellipticFunction) -> list[complex]:
    settings = c.settings
    zs: list[complex] = []
    for poly in (f.norm(), f.C):
        if poly.degree > 0:
            clusters = polycore.roots(poly, settings.root_tol, settings.cluster_tol, settings.max_root_iterations)
            zs.extend(cluster.center for cluster in clusters)
    return merge_candidates(c, zs)


def principal_divisor(c: Curve, f: HyperellipticFunction) -> Divisor:
    """Divisor of zeros minus poles of ``f`` on the hyperelliptic curve ``c``.

    Raises:
        DomainError: If f is identically zero or is defined on a different curve than ``c``.
        NumericalError: If the located orders do not sum to zero.
    """
    f.require_curve(c.require_hyperelliptic())
    if f.is_zero:
        raise DomainError("The zero function has no divisor")

    candidates = candidate_zs(c, f)
    D = _orders(c, lambda s: f(s.z, s.w), candidates)
    if D.degree != 0:
        raise NumericalError(
            f"Principal divisor has degree {D.degree}; unresolved sheet assignment",
            diagnostics={"divisor": D.descriptor()},
        )
    return D


def order_at(c: Curve, f: HyperellipticFunction, point: CurvePoint) -> int:
    """Order of ``f`` at one point (argument principle in the local parameter)."""
    f.require_curve(c.require_hyperelliptic())
    if f.is_zero:
        raise DomainError("The zero function has no order")
    candidates = candidate_zs(c, f)
    if point.z is not None:
        candidates = merge_candidates(c, candidates + [point.z])
    chart = LocalChart(c, point)
    return chart.order_of(lambda s: f(s.z, s.w), winding_radius(c, chart, candidates))


def _differential_integrand(k: int):
    def fn(s: ChartSamples) -> np.ndarray:
        return s.z ** (k - 1) * s.dz / s.w
    return fn


def differential_divisor(c: Curve, k: int = 1) -> Divisor:
    """Divisor of ``z^(k-1) dz / w``."""
    c.require_hyperelliptic()
    if k < 1:
        raise DomainError(f"Differential index must be >= 1, got {k}")
    candidates = merge_candidates(c, [0j] if k > 1 else [])
    return _orders(c, _differential_integrand(k), candidates)


def canonical_divisor(c: Curve) -> Divisor:
    """The canonical divisor realised as (dz / w)."""
    return differential_divisor(c, 1)


# ==========================
# Taylor tables and dim I(-D)
# ==========================

@dataclass(frozen=True)
class TaylorTable:
    """Scaled Taylor coefficients of the holomorphic basis at the points of a positive divisor.

    Row s holds ``z^s dz / w``; each point contributes one column per unit of
    its coefficient.
    """

    matrix: np.ndarray
    columns: tuple[tuple[CurvePoint, int], ...]

    def singular_values(self) -> np.ndarray:
        if self.matrix.size == 0:
            return np.zeros(0)
        return scipy.linalg.svdvals(self.matrix)

    def rank(self, threshold: float) -> int:
        values = self.singular_values()
        if values.size == 0 or values[0] == 0:
            return 0
        return int(np.count_nonzero(values > threshold * values[0]))


def taylor_table(c: Curve, D: Divisor) -> TaylorTable:
    """Build the coefficient table of the holomorphic differentials along ``D``.

    Raises:
        DomainError: If D is not positive.
    """
    if not D.is_positive:
        raise DomainError("Taylor tables are defined for positive divisors")
    g = curve_genus(c)
    n_points = c.settings.cauchy_points
    blocks: list[np.ndarray] = []
    columns: list[tuple[CurvePoint, int]] = []
    for point, multiplicity in D:
        chart = LocalChart(c, point)
        block = np.zeros((g, multiplicity), dtype=complex)
        sups = np.zeros(g)
        for s in range(g):
            coefficients, sup = chart.taylor_coefficients(_differential_integrand(s + 1), multiplicity, n_points)
            block[s] = coefficients
            sups[s] = sup
        block /= max(float(np.max(sups)), np.finfo(float).tiny)
        blocks.append(block)
        columns.extend((point, k) for k in range(multiplicity))
    matrix = np.hstack(blocks) if blocks else np.zeros((g, 0), dtype=complex)
    return TaylorTable(matrix, tuple(columns))


def dim_I_minus(c: Curve, D: Divisor) -> int:
    """Dimension of the holomorphic differentials vanishing on the positive divisor D.

    Raises:
        DomainError: If D is not positive.
    """
    if not D.is_positive:
        raise DomainError("dim_I_minus needs a positive divisor")
    g = curve_genus(c)
    if D.degree == 0:
        return g
    rank = taylor_table(c, D).rank(c.settings.rank_threshold)
    return g - rank


def dim_L(c: Curve, D: Divisor, shift: HyperellipticFunction | None = None) -> int:
    """``dim L(D) = dim I(-D) + deg D - g + 1``.

    Args:
        c: Hyperelliptic curve.
        D: Divisor; must be positive unless ``shift`` makes ``D + (shift)`` positive.
        shift: Optional function used to move D into the positive cone.

    Raises:
        DomainError: If the (shifted) divisor is not positive.
    """
    if shift is not None:
        D = D + principal_divisor(c, shift)
    if not D.is_positive:
        raise DomainError("dim_L needs a positive divisor or a shift function making it positive")
    g = curve_genus(c)
    return dim_I_minus(c, D) + D.degree - g + 1


def monomial_dim_L(c: Curve, D: Divisor) -> int:
    """Count the basis ``A(z)/h, B(z) w/h`` of L(D) for D on branch points and infinity.

    Here ``h = prod (z - e_i)^ceil(n_i/2)``; odd coefficients force A(e_i) = 0
    and the pole orders at infinity bound deg A and deg B.

    Raises:
        DomainError: For support off the branch locus, non-positive D, or
            unequal coefficients at the two points at infinity.
    """
    p = c.require_hyperelliptic()
    if not D.is_positive:
        raise DomainError("Monomial enumeration needs a positive divisor")
    d = p.degree

    M = 0
    odd = 0
    at_infinity: dict[int, int] = {}
    for point, n in D:
        if point.kind is PointKind.BRANCH:
            M += math.ceil(n / 2)
            odd += n % 2
        elif point.kind is PointKind.INFINITY:
            at_infinity[point.sign] = n
        else:
            raise DomainError("Monomial enumeration supports branch points and infinity only")

    if d % 2:
        n_inf = at_infinity.get(0, 0)
        count_a = max(0, M + n_inf // 2 - odd + 1)
        count_b = max(0, M + (n_inf - d) // 2 + 1)
    else:
        n_plus, n_minus = at_infinity.get(1, 0), at_infinity.get(-1, 0)
        if n_plus != n_minus:
            raise DomainError("Monomial enumeration needs equal coefficients at infinity+ and infinity-")
        count_a = max(0, M + n_plus - odd + 1)
        count_b = max(0, M + n_plus - d // 2 + 1)
    return count_a + count_b


# ===================
# Weierstrass points
# ===================

def gap_sequence(c: Curve, point: CurvePoint) -> list[int]:
    """Weierstrass gaps at ``point``: (vanishing orders of holomorphic differentials) + 1.

    Raises:
        NumericalError: If the number of gaps differs from the genus.
    """
    g = curve_genus(c)
    dims = [dim_I_minus(c, k * Divisor.from_points([point])) for k in range(2 * g)]
    gaps = [k + 1 for k in range(2 * g - 1) if dims[k] - dims[k + 1] == 1]
    if len(gaps) != g:
        raise NumericalError(f"Found {len(gaps)} gaps at {point}, expected {g}", diagnostics={"dims": dims})
    return gaps


def is_weierstrass(c: Curve, point: CurvePoint) -> bool:
    g = curve_genus(c)
    return dim_I_minus(c, g * Divisor.from_points([point])) > 0


def _wronskian_measure(c: Curve, z: complex, w: complex, g: int) -> float:
    point = CurvePoint.regular(z, w)
    values = taylor_table(c, g * Divisor.from_points([point])).singular_values()
    return float(values[-1] / values[0]) if values[0] > 0 else 0.0


def _regular_weierstrass_search(c: Curve, g: int) -> list[CurvePoint]:
    zs = c.finite_branch_zs
    lo = complex(np.min(zs.real) - 1.0, np.min(zs.imag) - 1.0)
    hi = complex(np.max(zs.real) + 1.0, np.max(zs.imag) + 1.0)
    found: list[CurvePoint] = []
    for x in np.linspace(lo.real, hi.real, WEIERSTRASS_GRID):
        for y in np.linspace(lo.imag, hi.imag, WEIERSTRASS_GRID):
            z0 = complex(x, y)
            if c.distance_to_branch_points(z0) <= 2 * c.margin:
                continue
            for sign in (1, -1):
                w0 = sign * complex(np.sqrt(complex(c.p(z0))))
                if _wronskian_measure(c, z0, w0, g) > WEIERSTRASS_SCREEN:
                    continue

                def objective(xy: np.ndarray, sign: int = sign) -> float:
                    z = complex(xy[0], xy[1])
                    if c.distance_to_branch_points(z) <= 2 * c.margin:
                        return 1.0
                    return _wronskian_measure(c, z, sign * complex(np.sqrt(complex(c.p(z)))), g)

                result = scipy.optimize.minimize(objective, [x, y], method="Nelder-Mead")
                if result.fun < c.settings.rank_threshold:
                    z_best = complex(result.x[0], result.x[1])
                    found.append(CurvePoint.regular(z_best, sign * complex(np.sqrt(complex(c.p(z_best))))))
    return found


def weierstrass_points(c: Curve) -> list[CurvePoint]:
    """Points where the Wronskian of the holomorphic basis vanishes (g >= 2).

    Branch points and the points at infinity are tested in their own local
    parameter; regular points are screened on a grid and refined.

    Raises:
        DomainError: If g < 2.
    """
    g = curve_genus(c)
    if g < 2:
        raise DomainError(f"Weierstrass points need genus >= 2, got {g}")
    candidates = c.branch_curve_points() + c.points_at_infinity()
    points = [point for point in candidates if is_weierstrass(c, point)]
    for point in _regular_weierstrass_search(c, g):
        if not any(point.is_close(other, 1e-6) for other in points):
            points.append(point)
    logger.info(f"Found {len(points)} Weierstrass points (genus {g})")
    return points
