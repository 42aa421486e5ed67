from __future__ import annotations

import numpy as np
import pytest
from sympy.combinatorics import Permutation

from riemann_surfaces_ex.core.errors import DomainError, InconsistencyError
from riemann_surfaces_ex.services import topology
from riemann_surfaces_ex.services.curve import Curve
from riemann_surfaces_ex.services.polycore import BivariatePoly, UniPoly
from riemann_surfaces_ex.services.tracker import MonodromyData

from tests.conftest import fermat, from_roots, random_separated_roots


def test_cycle_partition() -> None:
    """Test cycle lengths include fixed points, longest first."""
    assert topology.cycle_partition(Permutation([1, 0, 2])) == (2, 1)
    assert topology.cycle_partition(Permutation([1, 2, 3, 0])) == (4,)
    assert topology.cycle_partition(Permutation([0, 1, 2])) == (1, 1, 1)


@pytest.mark.parametrize(("m", "V", "expected"), [(2, 2, 0), (2, 4, 1), (2, 6, 2), (4, 12, 3), (3, 12, 4)])
def test_riemann_hurwitz(m: int, V: int, expected: int) -> None:
    """Test the genus formula over the sphere."""
    assert topology.riemann_hurwitz_genus(m, 0, V) == expected


def test_riemann_hurwitz_inconsistent() -> None:
    """Test odd V and negative genus are reported as inconsistent data."""
    with pytest.raises(InconsistencyError):
        topology.riemann_hurwitz_genus(2, 0, 3)
    with pytest.raises(InconsistencyError):
        topology.riemann_hurwitz_genus(3, 0, 0)


def test_euler_characteristic() -> None:
    """Test chi = 2 - 2g."""
    assert topology.euler_characteristic(0) == 2
    assert topology.euler_characteristic(3) == -4


@pytest.mark.parametrize(("n", "expected"), [(1, 0), (2, 0), (3, 1), (4, 1), (5, 2), (6, 2), (7, 3)])
def test_hyperelliptic_genus(n: int, expected: int) -> None:
    """Test the closed form floor((n - 1) / 2)."""
    assert topology.hyperelliptic_genus(n) == expected


def test_hyperelliptic_genus_rejects_constant() -> None:
    """Test degree zero is rejected."""
    with pytest.raises(DomainError):
        topology.hyperelliptic_genus(0)


def test_is_connected_false() -> None:
    """Test identity monodromy on two sheets is not transitive."""
    identity = Permutation([0, 1])
    md = MonodromyData(
        branch_points=(0j,),
        perms=(identity,),
        perm_infinity=identity,
        base_point=2j,
        base_fiber=np.array([1, -1], dtype=complex),
        loop_order=(0,),
    )
    assert not topology.is_connected(md)


def test_elliptic_genus(elliptic_curve: Curve) -> None:
    """Test the cubic has genus one and V = 4."""
    profile = topology.ramification_profile(elliptic_curve.monodromy())
    assert profile.V == 4
    assert profile.per_branch_point[-1].z is None
    assert topology.genus(elliptic_curve) == 1


def test_genus2(genus2_curve: Curve) -> None:
    """Test w^2 = z^5 - 1 has genus two."""
    assert topology.genus(genus2_curve) == 2


def test_quartic_genus() -> None:
    """Test w^4 = z^4 - 1: four 4-cycles, unramified at infinity, genus three."""
    curve = Curve.from_monomials([(0, 4, 1, 0), (4, 0, -1, 0), (0, 0, 1, 0)])
    md = curve.monodromy()
    assert all(topology.cycle_partition(perm) == (4,) for perm in md.perms)
    assert md.perm_infinity.is_Identity
    assert topology.ramification_profile(md).V == 12
    assert topology.genus(curve) == 3


@pytest.mark.parametrize(("n", "expected"), [(3, 1), (4, 3), (5, 6)])
def test_fermat_genus(n: int, expected: int) -> None:
    """Test Fermat curves have genus (n - 1)(n - 2) / 2."""
    assert topology.genus(fermat(n)) == expected


def test_disconnected_curve() -> None:
    """Test w^2 = z^2 splits into two sheets and has no genus."""
    curve = Curve(BivariatePoly.from_monomials([(0, 2, 1, 0), (2, 0, -1, 0)]))
    assert not topology.is_connected(curve.monodromy())
    with pytest.raises(DomainError, match="not transitive"):
        topology.genus(curve)


@pytest.mark.slow
def test_trigonal_genus() -> None:
    """Test a smooth trigonal curve with unramified infinity has genus four."""
    p2 = UniPoly((-1, 2, 1))
    p4 = UniPoly((2, 1, -3, 0, 1))
    p6 = UniPoly((-5, 3, 0, -1, 0, 1, 2))
    F = BivariatePoly.from_w_coefficients({3: UniPoly((1,)), 2: p2, 1: p4, 0: p6})
    curve = Curve(F)
    assert curve.monodromy().perm_infinity.is_Identity
    assert topology.genus(curve) == 4


@pytest.mark.slow
def test_random_hyperelliptic_genus(rng: np.random.Generator) -> None:
    """Test monodromy genus matches the closed form on random hyperelliptic curves of degree 3 to 10."""
    for degree in range(3, 11):
        curve = from_roots(random_separated_roots(rng, degree))
        assert topology.genus(curve) == topology.hyperelliptic_genus(degree)


def _monodromy_data(perms: list[Permutation]) -> MonodromyData:
    n = perms[0].size
    return MonodromyData(
        branch_points=tuple(complex(k) for k in range(len(perms))),
        perms=tuple(perms),
        perm_infinity=Permutation(list(range(n))),
        base_point=-1j,
        base_fiber=np.arange(n, dtype=complex),
        loop_order=tuple(range(len(perms))),
    )


@pytest.mark.parametrize(
    ("cycles", "connected"),
    [
        ([[[0, 1]], [[1, 2, 3]]], True),
        ([[[0, 1, 2, 3, 4]]], True),
        ([[[0, 1]], [[2, 3]]], False),
        ([[[0, 2], [1, 3]], [[0, 2]]], False),
    ],
)
def test_is_connected_invariant_under_conjugation(rng: np.random.Generator, cycles: list[list[list[int]]], connected: bool) -> None:
    """Test relabelling the sheets by a common conjugation keeps transitivity."""
    n = 1 + max(i for perm in cycles for cycle in perm for i in cycle)
    perms = [Permutation(perm, size=n) for perm in cycles]
    assert topology.is_connected(_monodromy_data(perms)) is connected
    for _ in range(5):
        sigma = Permutation([int(i) for i in rng.permutation(n)])
        conjugated = [perm ^ sigma for perm in perms]
        assert topology.is_connected(_monodromy_data(conjugated)) is connected
