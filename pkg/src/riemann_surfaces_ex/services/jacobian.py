"""Period lattice, Abel-Jacobi map and Jacobi inversion for hyperelliptic curves."""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
import numpy.polynomial.legendre as leg
import scipy.linalg

from riemann_surfaces_ex.core import metrics as app_metrics
from riemann_surfaces_ex.core.errors import DomainError, NumericalError
from riemann_surfaces_ex.core.telemetry import get_tracer
from riemann_surfaces_ex.services import divisor
from riemann_surfaces_ex.services.curve import Curve, CurvePoint, PointKind
from riemann_surfaces_ex.services.divisor import Divisor
from riemann_surfaces_ex.services.functions import HyperellipticFunction
from riemann_surfaces_ex.services.local_charts import LocalChart
from riemann_surfaces_ex.services.periods import DifferentialBasis, PeriodMatrix, period_matrix
from riemann_surfaces_ex.services.tracker import route, track_values

logger = logging.getLogger(__name__)
tracer = get_tracer(__name__)

PANEL_NODES = 16
LEG_NODES = 32
OBSTACLE_SHRINK = 0.9
SNAP_TOL = 1e-10
MAX_CONDITION = 1e12
MAX_INCREMENT_DOUBLINGS = 3
MAX_DAMPING_HALVINGS = 6


class _Stall(Exception):
    def __init__(self, residual: float) -> None:
        super().__init__(f"Newton stalled at residual {residual:.3g}")
        self.residual = residual


@dataclass(frozen=True)
class JacobianPoint:
    """A point of C^g / L: reduced lattice coordinates in [0, 1) and their C^g representative."""

    representative: np.ndarray
    coords: np.ndarray

    def descriptor(self) -> dict[str, Any]:
        return {
            "coords": [float(x) for x in self.coords],
            "representative": [[float(v.real), float(v.imag)] for v in self.representative],
        }


class Lattice:
    """The lattice spanned by the columns of (I, Z)."""

    def __init__(self, Z: np.ndarray) -> None:
        self.Z = np.asarray(Z, dtype=complex)
        self.genus = self.Z.shape[0]
        self.generators = np.hstack([np.eye(self.genus), self.Z])
        self.embedding = np.vstack([self.generators.real, self.generators.imag])
        condition = float(np.linalg.cond(self.embedding))
        if not math.isfinite(condition) or condition > MAX_CONDITION:
            raise NumericalError("Lattice embedding is ill-conditioned", residual=condition)
        self._shifts = np.array(list(itertools.product((-1, 0, 1), repeat=2 * self.genus)), dtype=float)

    @classmethod
    def from_periods(cls, periods: PeriodMatrix) -> Lattice:
        return cls(periods.Z)

    def coordinates(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=complex)
        return scipy.linalg.solve(self.embedding, np.concatenate([v.real, v.imag]))

    def reduce(self, v: np.ndarray) -> JacobianPoint:
        x = self.coordinates(v)
        nearest = np.round(x)
        x = np.where(np.abs(x - nearest) < SNAP_TOL, nearest, x)
        coords = x - np.floor(x)
        coords[coords >= 1.0] = 0.0
        return JacobianPoint(self.generators @ coords, coords)

    def shortest(self, v: np.ndarray) -> np.ndarray:
        """Representative of ``v mod L`` with the smallest max-norm among the 3^(2g) nearest shifts."""
        x = self.coordinates(v)
        candidates = (x - np.round(x))[None, :] + self._shifts
        vectors = candidates @ self.generators.T
        best = int(np.argmin(np.max(np.abs(vectors), axis=1)))
        return vectors[best]

    def distance(self, v: np.ndarray) -> float:
        return float(np.max(np.abs(self.shortest(v))))

    def equal(self, p: JacobianPoint, q: JacobianPoint, tol: float = 1e-6) -> bool:
        return self.distance(p.representative - q.representative) < tol


def reduce_mod_lattice(v: np.ndarray, L: Lattice) -> JacobianPoint:
    return L.reduce(v)


def lattice_distance(v: np.ndarray, L: Lattice) -> float:
    return L.distance(v)


def is_origin(point: JacobianPoint, tol: float = 1e-6) -> bool:
    """True iff every reduced coordinate lies within ``tol`` of 0 or 1."""
    return bool(np.all(np.minimum(point.coords, 1.0 - point.coords) < tol))


def _sign_to(w: complex, target: complex) -> float:
    return 1.0 if abs(w - target) <= abs(w + target) else -1.0


def _unit(v: complex) -> complex:
    return v / abs(v) if v != 0 else 1.0 + 0j


class AbelJacobi:
    """Abel-Jacobi map of a hyperelliptic curve, based at a branch point.

    Integration paths leave the base point in its local parameter, follow
    routed polylines around the branch disks with tracked w-values, and
    enter branch points or infinity in their own local parameter.
    """

    def __init__(
        self,
        c: Curve,
        periods: PeriodMatrix | None = None,
        base: CurvePoint | None = None,
        side: int | None = None
    ) -> None:
        self.curve = c
        self.p = c.require_hyperelliptic()
        self.periods = periods if periods is not None else period_matrix(c)
        self.genus = self.periods.genus
        self.lattice = Lattice.from_periods(self.periods)
        self.basis = DifferentialBasis(c, self.genus)
        self.base = base if base is not None else CurvePoint.branch(self.periods.cycles.chain[0])
        if self.base.kind is not PointKind.BRANCH:
            raise DomainError("The Abel-Jacobi base point must be a finite branch point")
        self.side = side

        self.zs = c.finite_branch_zs
        self.radii = np.array([self._disk_radius(k) for k in range(len(self.zs))])
        self.outer_radius = 2.0 * float(np.max(np.abs(self.zs))) + 1.0
        self.panel_rule = leg.leggauss(PANEL_NODES)
        self.leg_rule = leg.leggauss(LEG_NODES)

    def _disk_radius(self, k: int) -> float:
        others = np.delete(self.zs, k)
        return float(np.min(np.abs(others - self.zs[k]))) / 3.0 if others.size else 1.0

    def _index(self, z: complex) -> int:
        return int(np.argmin(np.abs(self.zs - z)))

    # ========== quadrature pieces ==========

    def _route(self, z_from: complex, z_to: complex) -> list[complex]:
        return route(z_from, z_to, self.zs, OBSTACLE_SHRINK * self.radii, self.side)

    def _clearance(self, a: complex, b: complex) -> float:
        """Distance from the segment [a, b] to the nearest branch point."""
        along = np.clip(((self.zs - a) * np.conj(b - a)).real / abs(b - a) ** 2, 0.0, 1.0)
        return float(np.min(np.abs(a + along * (b - a) - self.zs)))

    def _panelize(self, waypoints: list[complex]) -> tuple[list[complex], list[tuple[int, complex]]]:
        nodes, weights = self.panel_rule
        points = [complex(waypoints[0])]
        quad: list[tuple[int, complex]] = []
        for a, b in zip(waypoints, waypoints[1:]):
            length = abs(b - a)
            if length == 0:
                continue
            clearance = self._clearance(a, b)
            count = max(1, math.ceil(length / (0.5 * clearance)))
            for k in range(count):
                s0 = a + (b - a) * k / count
                s1 = a + (b - a) * (k + 1) / count
                mid, half = (s0 + s1) / 2, (s1 - s0) / 2
                for x, weight in zip(nodes, weights):
                    quad.append((len(points), weight * half))
                    points.append(mid + half * x)
                points.append(s1)
        return points, quad

    def _track_integral(self, z_start: complex, w_start: complex, waypoints: list[complex]) -> tuple[np.ndarray, complex]:
        """Integral of the basis along the polyline, continuing w from ``w_start``."""
        points, quad = self._panelize([z_start] + list(waypoints[1:]))
        if len(points) == 1:
            return np.zeros(self.genus, dtype=complex), w_start
        fibers = track_values(self.curve, np.array([w_start, -w_start]), points)
        w = np.array([fiber[0] for fiber in fibers])
        z = np.asarray(points)
        index = np.array([i for i, _ in quad], dtype=int)
        weight = np.array([wt for _, wt in quad])
        values = self.basis.evaluate(z[index], w[index])
        return values @ weight, complex(w[-1])

    def _chart_leg(self, point: CurvePoint, t_end: complex) -> tuple[np.ndarray, complex]:
        """Integral from ``point`` (t = 0) to ``t_end`` in its local parameter, and w at the end."""
        nodes, weights = self.leg_rule
        t = t_end * (nodes + 1) / 2
        samples = LocalChart(self.curve, point).evaluate(np.append(t, t_end))
        z, dz, w = samples.z[:-1], samples.dz[:-1], samples.w[:-1]
        powers = z[None, :] ** np.arange(self.genus)[:, None]
        values = powers * dz[None, :] / w[None, :]
        return values @ (weights * t_end / 2), complex(samples.w[-1])

    def _branch_leg(self, e: complex, z_end: complex) -> tuple[np.ndarray, complex]:
        return self._chart_leg(CurvePoint.branch(e), np.sqrt(complex(z_end - e)))

    def _infinity_leg(self, point: CurvePoint, z_end: complex) -> tuple[np.ndarray, complex]:
        t_end = 1 / np.sqrt(complex(z_end)) if self.p.degree % 2 else 1 / complex(z_end)
        return self._chart_leg(point, t_end)

    # ========== integrals from the base point ==========

    def integral(self, point: CurvePoint) -> np.ndarray:
        """``int_base^point omega`` for the unnormalized basis, along a routed path."""
        if point.is_close(self.base):
            return np.zeros(self.genus, dtype=complex)
        e0 = self.base.z
        r0 = self.radii[self._index(e0)]

        if point.kind is PointKind.REGULAR:
            z = point.z
            if abs(z - e0) <= r0:
                values, w_end = self._branch_leg(e0, z)
                return _sign_to(w_end, point.w) * values
            z_a = e0 + r0 * _unit(z - e0)
            leg_values, w_a = self._branch_leg(e0, z_a)
            k = self._index(z)
            if abs(z - self.zs[k]) < self.radii[k]:
                anchor = self.zs[k] + self.radii[k] * _unit(z - self.zs[k])
                waypoints = self._route(z_a, anchor) + [z]
            else:
                waypoints = self._route(z_a, z)
            path_values, w_end = self._track_integral(z_a, w_a, waypoints)
            return _sign_to(w_end, point.w) * (leg_values + path_values)

        if point.kind is PointKind.BRANCH:
            k = self._index(point.z)
            e = self.zs[k]
            z_a = e0 + r0 * _unit(e - e0)
            z_b = e + self.radii[k] * _unit(e0 - e)
            leg_values, w_a = self._branch_leg(e0, z_a)
            path_values, w_b = self._track_integral(z_a, w_a, self._route(z_a, z_b))
            end_values, w_leg = self._branch_leg(e, z_b)
            return leg_values + path_values - _sign_to(w_leg, w_b) * end_values

        z_o = self.outer_radius * _unit(e0)
        z_a = e0 + r0 * _unit(z_o - e0)
        leg_values, w_a = self._branch_leg(e0, z_a)
        path_values, w_o = self._track_integral(z_a, w_a, self._route(z_a, z_o))
        end_values, w_leg = self._infinity_leg(point, z_o)
        if self.p.degree % 2:
            return leg_values + path_values - _sign_to(w_leg, w_o) * end_values
        return _sign_to(w_o, w_leg) * (leg_values + path_values) - end_values

    def normalized_integral(self, point: CurvePoint) -> np.ndarray:
        return self.periods.normalize(self.integral(point))

    def positive(self, D: Divisor) -> np.ndarray:
        """Unreduced ``sum n_p int_base^p eta`` (eta the normalized basis)."""
        total = np.zeros(self.genus, dtype=complex)
        for point, n in D:
            total += n * self.normalized_integral(point)
        return total

    def of_divisor(self, D: Divisor) -> JacobianPoint:
        """Abel-Jacobi image of a degree-0 divisor.

        Raises:
            DomainError: If D has nonzero degree.
        """
        if D.degree != 0:
            raise DomainError(f"Abel-Jacobi map needs a degree-0 divisor, got degree {D.degree}")
        return self.lattice.reduce(self.positive(D))

    def move(self, z: complex, w: complex, z_new: complex) -> tuple[np.ndarray, complex]:
        """Normalized integral along the segment from (z, w) to z_new, and the continued w."""
        values, w_new = self._track_integral(z, w, [z, z_new])
        return self.periods.normalize(values), w_new

    def normalized_values(self, zs: np.ndarray, ws: np.ndarray) -> np.ndarray:
        """``eta_j(P_k)`` as a g x len(zs) matrix."""
        return self.periods.normalize(self.basis.evaluate(np.asarray(zs), np.asarray(ws)))


def abel_jacobi(c: Curve, D: Divisor, base: CurvePoint | None = None, aj: AbelJacobi | None = None) -> JacobianPoint:
    aj = aj if aj is not None else AbelJacobi(c, base=base)
    return aj.of_divisor(D)


def abel_jacobi_positive(c: Curve, D: Divisor, aj: AbelJacobi | None = None) -> JacobianPoint:
    """The map phi_g on positive divisors, reduced mod L."""
    if not D.is_positive:
        raise DomainError("abel_jacobi_positive expects a positive divisor")
    aj = aj if aj is not None else AbelJacobi(c)
    return aj.lattice.reduce(aj.positive(D))


def abel_check(c: Curve, f: HyperellipticFunction, aj: AbelJacobi | None = None) -> tuple[JacobianPoint, bool]:
    """Abel-Jacobi image of (f) and whether it is the origin of the Jacobian."""
    aj = aj if aj is not None else AbelJacobi(c)
    image = aj.of_divisor(divisor.principal_divisor(c, f))
    return image, is_origin(image, c.settings.jacobian_tol)


def linearly_equivalent(c: Curve, D1: Divisor, D2: Divisor, aj: AbelJacobi | None = None) -> bool:
    """Abel's criterion: equal degree and ``phi(D1 - D2) = 0`` in Jac."""
    if D1.degree != D2.degree:
        return False
    aj = aj if aj is not None else AbelJacobi(c)
    return is_origin(aj.of_divisor(D1 - D2), c.settings.jacobian_tol)


def is_general(c: Curve, D: Divisor) -> bool:
    """True iff D is positive of degree g with ``dim I(-D) = 0``.

    Repeated points and branch points are handled through derivative columns
    of the Taylor table in their local parameters.
    """
    g = divisor.curve_genus(c)
    if not D.is_positive or D.degree != g:
        raise DomainError(f"Generality is defined for positive divisors of degree g = {g}")
    return divisor.dim_I_minus(c, D) == 0


# ================
# Jacobi inversion
# ================

def _newton_continuation(
    aj: AbelJacobi,
    zs: np.ndarray,
    ws: np.ndarray,
    start: np.ndarray,
    delta: np.ndarray,
    increments: int
) -> tuple[np.ndarray, np.ndarray, list[int]]:
    """Follow the target in ``increments`` equal steps; Newton iterations are counted per step."""
    settings = aj.curve.settings
    current = start.copy()
    per_increment: list[int] = []
    for step in range(1, increments + 1):
        iterations = 0
        goal = start + delta * (step / increments)
        tol = (1e-10 if step == increments else 1e-8) * max(1.0, float(np.max(np.abs(goal))))
        for attempt in range(settings.newton_max_iterations + 1):
            residual = float(np.max(np.abs(goal - current)))
            if residual <= tol:
                break
            if attempt == settings.newton_max_iterations:
                raise _Stall(residual)
            iterations += 1
            J = aj.normalized_values(zs, ws)
            try:
                dz = scipy.linalg.solve(J, goal - current)
            except (scipy.linalg.LinAlgError, ValueError):
                raise _Stall(residual)
            clearance = np.array([aj.curve.distance_to_branch_points(z) for z in zs])
            scale = min(1.0, float(np.min(0.5 * clearance / np.maximum(np.abs(dz), np.finfo(float).tiny))))

            for _ in range(MAX_DAMPING_HALVINGS):
                try:
                    moved = [aj.move(z, w, z + scale * d) for z, w, d in zip(zs, ws, dz)]
                except (DomainError, NumericalError):
                    scale /= 2
                    continue
                trial = current + sum(values for values, _ in moved)
                if float(np.max(np.abs(goal - trial))) < residual:
                    zs = zs + scale * dz
                    ws = np.array([w_new for _, w_new in moved])
                    current = trial
                    break
                scale /= 2
            else:
                raise _Stall(residual)
        per_increment.append(iterations)
    return zs, ws, per_increment


def jacobi_invert(c: Curve, target: JacobianPoint, seed: Divisor, aj: AbelJacobi | None = None) -> Divisor:
    """Positive divisor D of degree g with ``phi_g(D) = target`` in Jac.

    The target is approached from ``phi_g(seed)`` in equal increments with a
    damped Newton solve on the z-coordinates at each; the increment count
    doubles when Newton stalls.

    Raises:
        DomainError: If the seed is not a general divisor of distinct regular points.
        NumericalError: If Newton stalls at every increment count, with the best residual.
    """
    aj = aj if aj is not None else AbelJacobi(c)
    g = aj.genus
    if not is_general(c, seed):
        raise DomainError("seed divisor is not general")
    points = seed.expanded()
    if any(point.kind is not PointKind.REGULAR for point in points) or len(seed) != g:
        raise DomainError("Jacobi inversion needs a seed of g distinct regular points")

    settings = c.settings
    zs = np.array([point.z for point in points], dtype=complex)
    ws = np.array([point.w for point in points], dtype=complex)
    start = aj.positive(seed)
    delta = aj.lattice.shortest(target.representative - start)

    best = math.inf
    increments = settings.newton_steps
    with tracer.start_as_current_span("jacobi_invert") as span:
        span.set_attribute("genus", g)
        for _ in range(MAX_INCREMENT_DOUBLINGS + 1):
            try:
                final_z, final_w, per_increment = _newton_continuation(aj, zs, ws, start, delta, increments)
            except _Stall as stall:
                best = min(best, stall.residual)
                logger.warning(f"Jacobi inversion stalled with {increments} increments; doubling")
                increments *= 2
                continue
            for iterations in per_increment:
                app_metrics.record_newton(iterations, g)
            result = Divisor.from_points(CurvePoint.regular(z, w) for z, w in zip(final_z, final_w))
            residual = aj.lattice.distance(aj.positive(result) - target.representative)
            if residual > settings.jacobian_tol:
                raise NumericalError("Jacobi inversion residual too large", residual=residual)
            logger.info(f"Jacobi inversion converged in {sum(per_increment)} Newton steps over {increments} increments (residual {residual:.2e})")
            return result

    raise NumericalError(
        "Jacobi inversion stalled",
        residual=best,
        diagnostics={"increments": increments // 2},
    )
