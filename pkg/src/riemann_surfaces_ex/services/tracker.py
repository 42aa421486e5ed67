"""Analytic continuation of fibers along paths and monodromy extraction."""
from __future__ import annotations

import cmath
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Sequence

import numpy as np
import numpy.polynomial.polynomial as npoly
from sympy.combinatorics import Permutation

from riemann_surfaces_ex.core import metrics as app_metrics
from riemann_surfaces_ex.core.errors import DomainError, InconsistencyError, NumericalError
from riemann_surfaces_ex.core.telemetry import get_tracer
from riemann_surfaces_ex.services.curve import Curve

logger = logging.getLogger(__name__)
tracer = get_tracer(__name__)

ARC_POINTS = 16
COLLINEAR_TOL = 1e-9
ANGLE_TIE_TOL = 1e-9
INFINITY_LOOP_POINTS = 128
NEWTON_ITERATIONS = 8


class PathKind(StrEnum):
    SEGMENT_CHAIN = "segment_chain"
    LOOP_AROUND = "loop_around"


@dataclass(frozen=True)
class Path:
    """Polyline in the z-plane; consecutive duplicate waypoints are dropped."""

    waypoints: tuple[complex, ...]
    kind: PathKind = PathKind.SEGMENT_CHAIN
    branch_index: int | None = None

    def __post_init__(self) -> None:
        points: list[complex] = []
        for z in self.waypoints:
            z = complex(z)
            if not points or z != points[-1]:
                points.append(z)
        if not points:
            raise DomainError("Path needs at least one waypoint")
        object.__setattr__(self, "waypoints", tuple(points))

    @property
    def start(self) -> complex:
        return self.waypoints[0]

    @property
    def end(self) -> complex:
        return self.waypoints[-1]

    @property
    def length(self) -> float:
        pts = np.asarray(self.waypoints)
        return float(np.sum(np.abs(np.diff(pts)))) if len(pts) > 1 else 0.0

    def reversed(self) -> Path:
        return Path(tuple(reversed(self.waypoints)), self.kind, self.branch_index)

    def __add__(self, other: Path) -> Path:
        return Path(self.waypoints + other.waypoints, self.kind, self.branch_index)


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    max_residual: float = 0.0

    def merge(self, other: StepStats) -> StepStats:
        return StepStats(
            self.accepted + other.accepted,
            self.rejected + other.rejected,
            max(self.max_residual, other.max_residual),
        )


@dataclass(frozen=True)
class TrackState:
    """Fiber values (sheet-indexed) at one z, with the step in use and counters."""

    z: complex
    w_values: np.ndarray
    step: float | None = None
    stats: StepStats = field(default_factory=StepStats)

    def __post_init__(self) -> None:
        values = np.array(self.w_values, dtype=complex)
        values.setflags(write=False)
        object.__setattr__(self, "w_values", values)
        object.__setattr__(self, "z", complex(self.z))


@dataclass(frozen=True)
class MonodromyData:
    """Loop permutations (0-based sympy permutations) of the sheets at z*.

    ``perms[k]`` belongs to ``branch_points[k]``; loops are traversed in
    ``loop_order`` and ``perm_infinity`` inverts their composed product.
    """

    branch_points: tuple[complex, ...]
    perms: tuple[Permutation, ...]
    perm_infinity: Permutation
    base_point: complex
    base_fiber: np.ndarray
    loop_order: tuple[int, ...]
    stats: StepStats = field(default_factory=StepStats)

    @property
    def n(self) -> int:
        return len(self.base_fiber)

    def product(self) -> Permutation:
        """``pi_m o ... o pi_1`` in loop order."""
        total = list(range(self.n))
        for j in self.loop_order:
            perm = self.perms[j]
            total = [perm(total[i]) for i in range(self.n)]
        return Permutation(total)

    def relation_holds(self) -> bool:
        product = self.product()
        combined = [self.perm_infinity(product(i)) for i in range(self.n)]
        return combined == list(range(self.n))


class _FiberEvaluator:
    """Coefficient tables of F and its partials, specialised per z."""

    def __init__(self, curve: Curve) -> None:
        self.dense = curve.F.dense
        self.abs_dense = np.abs(self.dense)
        if self.dense.shape[0] > 1:
            self.dz_dense = npoly.polyder(self.dense, axis=0)
        else:
            self.dz_dense = np.zeros_like(self.dense)

    def coefficients(self, z: complex) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        a = npoly.polyval(z, self.dense)
        return a, npoly.polyder(a), npoly.polyval(z, self.dz_dense)

    def residual(self, w: np.ndarray, z: complex, a: np.ndarray | None = None) -> np.ndarray:
        if a is None:
            a = npoly.polyval(z, self.dense)
        scale = npoly.polyval(np.abs(w), npoly.polyval(abs(z), self.abs_dense))
        return np.abs(npoly.polyval(w, a)) / np.maximum(scale, np.finfo(float).tiny)


def _min_separation(w: np.ndarray) -> float:
    if len(w) < 2:
        return math.inf
    diffs = np.abs(w[:, None] - w[None, :])
    return float(np.min(diffs[~np.eye(len(w), dtype=bool)]))


def _newton(ev: _FiberEvaluator, z: complex, w: np.ndarray, tol: float) -> tuple[np.ndarray, float]:
    a, da, _ = ev.coefficients(z)
    for _ in range(NEWTON_ITERATIONS):
        with np.errstate(divide="ignore", invalid="ignore"):
            w = w - npoly.polyval(w, a) / npoly.polyval(w, da)
        if not np.all(np.isfinite(w)):
            return w, math.inf
        if float(np.max(ev.residual(w, z, a))) <= 0.01 * tol:
            break
    return w, float(np.max(ev.residual(w, z, a)))


class _Tracker:
    """Adaptive predictor-corrector continuation along one path."""

    def __init__(self, curve: Curve, path_length: float) -> None:
        self.curve = curve
        self.settings = curve.settings
        self.ev = _FiberEvaluator(curve)
        self.threshold = curve.collision_threshold
        self.path_length = max(path_length, 1e-300)
        self.min_step = self.settings.step_underflow_ratio * self.path_length
        self.stats = StepStats()

    def segment(self, z0: complex, z1: complex, w0: np.ndarray, step: float) -> tuple[np.ndarray, float]:
        length = abs(z1 - z0)
        if length == 0:
            return w0, step
        direction = (z1 - z0) / length
        tol = self.settings.track_tol
        s, z, w = 0.0, z0, w0
        consecutive = 0

        while length - s > 1e-14 * length:
            h = min(step, length - s)
            at_end = s + h >= length * (1 - 1e-14)
            z_new = z1 if at_end else z0 + direction * (s + h)

            _, da, az = self.ev.coefficients(z)
            with np.errstate(divide="ignore", invalid="ignore"):
                slope = -npoly.polyval(w, az) / npoly.polyval(w, da)
            w_pred = w + slope * (z_new - z)
            w_corr, residual = _newton(self.ev, z_new, w_pred, tol)

            if self._acceptable(w, w_pred, w_corr, residual, tol):
                s = length if at_end else s + h
                z, w = z_new, w_corr
                self.stats.accepted += 1
                self.stats.max_residual = max(self.stats.max_residual, residual)
                consecutive += 1
                if consecutive >= 5:
                    step = min(2.0 * step, self.path_length)
                    consecutive = 0
                if _min_separation(w) < 3.0 * self.threshold:
                    step /= 2.0
                continue

            step /= 2.0
            consecutive = 0
            self.stats.rejected += 1
            logger.debug(f"Step rejected at z={z:.6g}, new step {step:.3g}")
            if step < self.min_step:
                raise NumericalError(
                    "path too close to branch point",
                    residual=residual,
                    diagnostics={"z": [z.real, z.imag], "last_w": [[v.real, v.imag] for v in w]},
                )
        return w, step

    def _acceptable(
        self,
        w: np.ndarray,
        w_pred: np.ndarray,
        w_corr: np.ndarray,
        residual: float,
        tol: float
    ) -> bool:
        if not (np.all(np.isfinite(w_corr)) and residual <= tol):
            return False
        separation = _min_separation(w)
        if np.any(np.abs(w_corr - w_pred) >= 0.25 * separation):
            return False
        if _min_separation(w_corr) <= self.threshold:
            return False
        nearest = np.argmin(np.abs(w_corr[:, None] - w_pred[None, :]), axis=1)
        return bool(np.array_equal(nearest, np.arange(len(w))))


def _check_waypoints(curve: Curve, waypoints: Sequence[complex]) -> None:
    for z in waypoints:
        if curve.distance_to_branch_points(z) <= curve.margin:
            raise DomainError(f"Waypoint {z} lies inside the branch-point safety margin")


def _polish_start(curve: Curve, z: complex, w: np.ndarray) -> np.ndarray:
    ev = _FiberEvaluator(curve)
    residual = float(np.max(ev.residual(w, z))) if len(w) else 0.0
    if residual <= curve.settings.track_tol:
        return w
    polished, residual = _newton(ev, z, w, curve.settings.track_tol)
    if residual > curve.settings.track_tol or _min_separation(polished) <= curve.collision_threshold:
        raise DomainError(f"Start values are not a fiber of the curve at z={z} (residual {residual:.3g})")
    return polished


def track_values(curve: Curve, start: np.ndarray, waypoints: Sequence[complex]) -> list[np.ndarray]:
    """Continue the full fiber ``start`` (at ``waypoints[0]``) and return it at every waypoint.

    Args:
        curve: The curve.
        start: Sheet-indexed fiber at the first waypoint.
        waypoints: Polyline vertices; repeated points are allowed.

    Returns:
        One fiber array per waypoint, in the same sheet order as ``start``.

    Raises:
        DomainError: If a waypoint lies in the branch margin.
        NumericalError: On step underflow.
    """
    pts = [complex(z) for z in waypoints]
    if not pts:
        return []
    _check_waypoints(curve, pts)
    w = _polish_start(curve, pts[0], np.array(start, dtype=complex))

    length = float(np.sum(np.abs(np.diff(np.asarray(pts))))) if len(pts) > 1 else 0.0
    tracker = _Tracker(curve, length)
    step = max(length / curve.settings.initial_step_divisor, tracker.min_step)
    values = [w]
    for z0, z1 in zip(pts, pts[1:]):
        w, step = tracker.segment(z0, z1, w, step)
        values.append(w)
    return values


def continue_along(curve: Curve, start: TrackState, path: Path) -> TrackState:
    """Analytically continue every sheet of ``start`` along ``path``.

    Args:
        curve: The curve.
        start: State at ``path.start``.
        path: Path to follow.

    Returns:
        State at ``path.end`` with sheet order preserved.

    Raises:
        DomainError: If ``start`` is not at the path start or not on the curve.
        NumericalError: If the step underflows near a branch point.
    """
    scale = max(1.0, abs(path.start))
    if abs(start.z - path.start) > 1e-12 * scale:
        raise DomainError(f"Start state at {start.z} does not match path start {path.start}")

    _check_waypoints(curve, path.waypoints)
    w = _polish_start(curve, path.start, np.array(start.w_values))
    if len(path.waypoints) == 1:
        return TrackState(path.start, w, start.step, start.stats)

    tracker = _Tracker(curve, path.length)
    step = start.step or path.length / curve.settings.initial_step_divisor
    for z0, z1 in zip(path.waypoints, path.waypoints[1:]):
        w, step = tracker.segment(z0, z1, w, step)

    app_metrics.record_tracking(tracker.stats.accepted, tracker.stats.rejected, path.kind.value)
    return TrackState(path.end, w, step, start.stats.merge(tracker.stats))


# ==========================
# Routing around branch disks
# ==========================

def _arc(center: complex, radius: float, entry: complex, exit_: complex, outward: complex) -> list[complex]:
    """Arc on the circle from entry to exit passing through ``center + radius*outward``."""
    theta_in = cmath.phase(entry - center)
    theta_out = cmath.phase(exit_ - center)
    target = cmath.phase(outward)
    ccw = (theta_out - theta_in) % (2 * math.pi)
    best: list[complex] = []
    best_gap = math.inf
    for sweep in (ccw, ccw - 2 * math.pi):
        mid = theta_in + sweep / 2
        gap = abs(cmath.phase(cmath.exp(1j * (mid - target))))
        if gap < best_gap:
            best_gap = gap
            best = [
                center + radius * cmath.exp(1j * (theta_in + sweep * k / ARC_POINTS))
                for k in range(ARC_POINTS + 1)
            ]
    return best


def route(
    z_from: complex,
    z_to: complex,
    obstacles: Sequence[complex],
    radii: Sequence[float],
    side: int | None = None
) -> list[complex]:
    """Polyline from ``z_from`` to ``z_to`` detouring around obstacle disks.

    Each disk the straight segment enters is bypassed along its boundary on
    the side the segment already passes; a segment through the center passes
    on the left of the direction of travel. ``side`` forces +1 (left) or
    -1 (right) for every detour.

    Returns:
        Waypoints including both endpoints.
    """
    z_from, z_to = complex(z_from), complex(z_to)
    delta = z_to - z_from
    length = abs(delta)
    if length == 0:
        return [z_from]
    direction = delta / length

    crossings: list[tuple[float, complex, float, complex]] = []
    for center, radius in zip(obstacles, radii):
        rel = (complex(center) - z_from) / direction
        along, across = rel.real, rel.imag
        if abs(across) >= radius:
            continue
        half = math.sqrt(radius**2 - across**2)
        if along - half <= 0 or along + half >= length:
            continue
        cross = across / max(abs(rel), 1e-300)
        if side is not None:
            normal = 1j * direction * side
        elif abs(cross) < COLLINEAR_TOL:
            normal = 1j * direction
        elif cross > 0:
            normal = -1j * direction
        else:
            normal = 1j * direction
        crossings.append((along, complex(center), radius, normal))

    points = [z_from]
    for along, center, radius, normal in sorted(crossings, key=lambda item: item[0]):
        rel = (center - z_from) / direction
        half = math.sqrt(radius**2 - rel.imag**2)
        entry = z_from + direction * (along - half)
        exit_ = z_from + direction * (along + half)
        points.extend(_arc(center, radius, entry, exit_, normal))
    points.append(z_to)
    return points


# =========
# Monodromy
# =========

def loop_radii(curve: Curve) -> np.ndarray:
    """A third of the distance from each branch point to its nearest neighbour (z* included)."""
    zs = curve.finite_branch_zs
    radii = np.empty(len(zs))
    for k, z in enumerate(zs):
        others = np.append(np.delete(zs, k), curve.base_point)
        radii[k] = float(np.min(np.abs(others - z))) / 3.0
    return radii


def loop_order(curve: Curve) -> list[int]:
    """Branch indices sorted by (angle, modulus) as seen from z*."""
    rel = curve.finite_branch_zs - curve.base_point
    angles = np.angle(rel)
    moduli = np.abs(rel)
    order = sorted(range(len(rel)), key=lambda k: (angles[k], moduli[k]))
    # merge near-ties so the modulus decides
    result: list[int] = []
    for k in order:
        result.append(k)
        i = len(result) - 1
        while i > 0 and abs(angles[result[i - 1]] - angles[result[i]]) < ANGLE_TIE_TOL and moduli[result[i - 1]] > moduli[result[i]]:
            result[i - 1], result[i] = result[i], result[i - 1]
            i -= 1
    return result


def loop_path(curve: Curve, j: int, turns: int = 1) -> Path:
    """Spoke from z* to the circle around branch point j, ``turns`` ccw circuits, spoke back."""
    zs = curve.finite_branch_zs
    if not 0 <= j < len(zs):
        raise DomainError(f"Branch index {j} out of range")
    radii = loop_radii(curve)
    center, radius = zs[j], radii[j]
    toward_base = (curve.base_point - center) / abs(curve.base_point - center)
    anchor = center + radius * toward_base

    others = [k for k in range(len(zs)) if k != j]
    spoke = route(curve.base_point, anchor, zs[others], radii[others])

    points_per_turn = curve.settings.loop_points
    theta0 = cmath.phase(toward_base)
    circle = [
        center + radius * cmath.exp(1j * (theta0 + 2 * math.pi * k / points_per_turn))
        for k in range(1, points_per_turn * turns + 1)
    ]
    waypoints = spoke + circle + list(reversed(spoke))
    return Path(tuple(waypoints), PathKind.LOOP_AROUND, j)


def _permutation_from(start: np.ndarray, end: np.ndarray) -> Permutation:
    image = [int(np.argmin(np.abs(start - value))) for value in end]
    if sorted(image) != list(range(len(start))):
        raise NumericalError(
            "Loop end values do not match the base fiber one-to-one",
            residual=float(np.max(np.min(np.abs(end[:, None] - start[None, :]), axis=1))),
        )
    return Permutation(image)


def _loop_permutation(curve: Curve, path: Path) -> tuple[Permutation, StepStats]:
    start = TrackState(curve.base_point, curve.base_fiber)
    end = continue_along(curve, start, path)
    return _permutation_from(curve.base_fiber, np.asarray(end.w_values)), end.stats


def infinity_loop_permutation(curve: Curve) -> Permutation:
    """Permutation along a ccw circle through z* enclosing every finite branch point."""
    zs = curve.finite_branch_zs
    center = complex(np.mean(zs)) if len(zs) else curve.base_point - 2j
    radius = abs(curve.base_point - center)
    theta0 = cmath.phase(curve.base_point - center)
    waypoints = [center + radius * cmath.exp(1j * (theta0 + 2 * math.pi * k / INFINITY_LOOP_POINTS)) for k in range(INFINITY_LOOP_POINTS)]
    waypoints.append(curve.base_point)
    perm, _ = _loop_permutation(curve, Path(tuple(waypoints)))
    return perm


def monodromy(curve: Curve) -> MonodromyData:
    """Sheet permutations for a small ccw loop around every finite branch point.

    Raises:
        NumericalError: Propagated from tracking.
        InconsistencyError: If the loop product disagrees with the loop around
            all branch points.
    """
    zs = curve.finite_branch_zs
    n = curve.n
    order = loop_order(curve)
    logger.info(f"Computing monodromy around {len(zs)} branch points ({n} sheets)")

    with tracer.start_as_current_span("monodromy") as span, \
            app_metrics.measure_duration(app_metrics.monodromy_duration, {"sheets": str(n)}):
        span.set_attribute("branch_points", len(zs))
        paths = [loop_path(curve, j) for j in range(len(zs))]
        if curve.settings.workers > 1 and len(paths) > 1:
            with ThreadPoolExecutor(max_workers=curve.settings.workers) as pool:
                results = list(pool.map(lambda path: _loop_permutation(curve, path), paths))
        else:
            results = [_loop_permutation(curve, path) for path in paths]

        perms = tuple(perm for perm, _ in results)
        stats = StepStats()
        for _, loop_stats in results:
            stats = stats.merge(loop_stats)

        partial = MonodromyData(
            branch_points=tuple(complex(z) for z in zs),
            perms=perms,
            perm_infinity=Permutation(list(range(n))),
            base_point=curve.base_point,
            base_fiber=curve.base_fiber,
            loop_order=tuple(order),
            stats=stats,
        )
        product = partial.product()
        if len(zs):
            around_all = infinity_loop_permutation(curve)
            if around_all.array_form != product.array_form:
                raise InconsistencyError(
                    "monodromy product not identity: ordered loop product "
                    f"{product.cyclic_form} differs from the enclosing loop {around_all.cyclic_form}"
                )

    data = MonodromyData(
        branch_points=partial.branch_points,
        perms=perms,
        perm_infinity=~product,
        base_point=partial.base_point,
        base_fiber=partial.base_fiber,
        loop_order=partial.loop_order,
        stats=stats,
    )
    logger.info(f"Monodromy done: {stats.accepted} accepted / {stats.rejected} rejected steps")
    return data
