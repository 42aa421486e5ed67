"""Ramification data, connectivity and genus of a curve via Riemann-Hurwitz."""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass

from sympy.combinatorics import Permutation

from riemann_surfaces_ex.core.errors import DomainError, InconsistencyError
from riemann_surfaces_ex.services.curve import Curve
from riemann_surfaces_ex.services.tracker import MonodromyData

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RamificationPoint:
    """Cycle partition of the monodromy at one point of the sphere (z is None at infinity)."""

    z: complex | None
    partition: tuple[int, ...]

    @property
    def index(self) -> int:
        return sum(length - 1 for length in self.partition)


@dataclass(frozen=True)
class RamificationProfile:
    per_branch_point: tuple[RamificationPoint, ...]
    V: int
    m: int


def cycle_partition(perm: Permutation) -> tuple[int, ...]:
    """Cycle lengths of ``perm`` (fixed points included), longest first."""
    return tuple(sorted((len(cycle) for cycle in perm.full_cyclic_form), reverse=True))


def ramification_profile(md: MonodromyData) -> RamificationProfile:
    """Cycle decomposition of every loop permutation, infinity last."""
    points = [RamificationPoint(z, cycle_partition(perm)) for z, perm in zip(md.branch_points, md.perms)]
    points.append(RamificationPoint(None, cycle_partition(md.perm_infinity)))
    for point in points:
        if sum(point.partition) != md.n:
            raise InconsistencyError(f"Partition {point.partition} does not sum to {md.n} sheets")
    V = sum(point.index for point in points)
    return RamificationProfile(tuple(points), V, md.n)


def is_connected(md: MonodromyData) -> bool:
    """True iff the loop permutations act transitively on the sheets (BFS orbit of sheet 1)."""
    n = md.n
    seen = {0}
    queue = deque([0])
    while queue:
        sheet = queue.popleft()
        for perm in md.perms:
            image = perm(sheet)
            if image not in seen:
                seen.add(image)
                queue.append(image)
    return len(seen) == n


def riemann_hurwitz_genus(m: int, g_target: int, V: int) -> int:
    """``g = m (g(Y) - 1) + 1 + V/2`` for an m-sheeted cover of a genus-g(Y) surface.

    Raises:
        InconsistencyError: If V is odd or the genus comes out negative.
    """
    if V % 2:
        raise InconsistencyError(f"inconsistent ramification data: V = {V} is odd")
    g = m * (g_target - 1) + 1 + V // 2
    if g < 0:
        raise InconsistencyError(f"inconsistent ramification data: genus {g} < 0")
    return g


def euler_characteristic(g: int) -> int:
    return 2 - 2 * g


def hyperelliptic_genus(n: int) -> int:
    """Genus of ``w^2 = p(z)`` with p squarefree of degree n.

    Raises:
        DomainError: If n < 1.
    """
    if n < 1:
        raise DomainError(f"Hyperelliptic degree must be at least 1, got {n}")
    return (n - 1) // 2


def genus(c: Curve) -> int:
    """Genus of the curve from its monodromy, over the Riemann sphere.

    Raises:
        DomainError: If the monodromy is not transitive (reducible curve).
        InconsistencyError: If the ramification data is impossible.
    """
    md = c.monodromy()
    if not is_connected(md):
        raise DomainError("Monodromy group is not transitive: the curve is reducible")
    profile = ramification_profile(md)
    g = riemann_hurwitz_genus(profile.m, 0, profile.V)
    logger.info(f"Genus {g} from V = {profile.V} on {profile.m} sheets")
    return g
