from __future__ import annotations

import numpy as np
import pytest

from riemann_surfaces_ex.core.config import Settings
from riemann_surfaces_ex.core.errors import DomainError
from riemann_surfaces_ex.services.curve import BranchSource, Curve, CurveKind, CurvePoint, PointKind
from riemann_surfaces_ex.services.polycore import BivariatePoly

from tests.conftest import fermat


def test_elliptic_kind_and_branch_locus(elliptic_curve: Curve) -> None:
    """Test w^2 = z(z-1)(z-2) is detected as elliptic with infinity ramified."""
    assert elliptic_curve.kind is CurveKind.ELLIPTIC
    assert elliptic_curve.is_hyperelliptic
    locus = elliptic_curve.branch_locus()
    np.testing.assert_allclose(sorted(locus.zs.real), [0, 1, 2], atol=1e-12)
    assert locus.includes_infinity
    assert all(b.source is BranchSource.DISC_ZERO for b in locus.finite_points)


def test_even_degree_infinity(even_genus2_curve: Curve) -> None:
    """Test an even-degree hyperelliptic curve has two unramified points at infinity."""
    assert even_genus2_curve.kind is CurveKind.HYPERELLIPTIC
    assert not even_genus2_curve.branch_locus().includes_infinity
    assert [p.sign for p in even_genus2_curve.points_at_infinity()] == [1, -1]


def test_general_curve_branch_points() -> None:
    """Test the Fermat cubic has its branch points at the cube roots of unity."""
    curve = fermat(3)
    assert curve.kind is CurveKind.GENERAL
    zs = curve.finite_branch_zs
    assert len(zs) == 3
    np.testing.assert_allclose(np.abs(zs**3 - 1), 0, atol=1e-9)
    with pytest.raises(DomainError, match="unsupported kind"):
        curve.require_hyperelliptic()


def test_leading_coefficient_zeros_are_branch_points() -> None:
    """Test zeros of the w^n coefficient are reported as branch points."""
    # z w^2 - 1 = 0
    curve = Curve(BivariatePoly.from_monomials([(1, 2, 1, 0), (0, 0, -1, 0)]))
    sources = {b.source for b in curve.finite_branch_points}
    assert BranchSource.P0_ZERO in sources
    assert curve.finite_branch_zs[0] == pytest.approx(0)


def test_not_squarefree_in_w() -> None:
    """Test (w - z)^2 is rejected."""
    F = BivariatePoly.from_monomials([(0, 2, 1, 0), (1, 1, -2, 0), (2, 0, 1, 0)])
    with pytest.raises(DomainError, match="not squarefree"):
        Curve(F)


def test_reducible_but_squarefree_is_general() -> None:
    """Test w^2 - z^2 is not hyperelliptic since z^2 has a double root."""
    curve = Curve(BivariatePoly.from_monomials([(0, 2, 1, 0), (2, 0, -1, 0)]))
    assert curve.kind is CurveKind.GENERAL
    assert list(curve.finite_branch_zs) == pytest.approx([0])


def test_base_point_and_fiber(elliptic_curve: Curve) -> None:
    """Test the default base point lies above the branch locus and its fiber solves F."""
    z_star = elliptic_curve.base_point
    assert z_star.imag > 2
    fiber = elliptic_curve.base_fiber
    assert len(fiber) == 2
    assert np.max(elliptic_curve.relative_residual(fiber, z_star)) < 1e-12
    assert elliptic_curve.vieta_residual(z_star) < 1e-10


def test_base_point_override_inside_margin() -> None:
    """Test an override within the branch margin is refused."""
    F = BivariatePoly.from_monomials([(0, 2, 1, 0), (3, 0, -1, 0), (2, 0, 3, 0), (1, 0, -2, 0)])
    with pytest.raises(DomainError):
        Curve(F, base_point=1e-3)


def test_fiber_near_branch_point(elliptic_curve: Curve) -> None:
    """Test fibers are not solved within the safety margin."""
    assert elliptic_curve.margin == pytest.approx(0.05)
    with pytest.raises(DomainError, match="near-singular"):
        elliptic_curve.fiber(1 + 1e-3)


def test_margin_respects_settings() -> None:
    """Test the margin factor comes from the settings."""
    curve = Curve.from_monomials([(0, 2, 1, 0), (3, 0, -1, 0), (0, 0, 1, 0)], Settings(margin_factor=0.1))
    zs = curve.finite_branch_zs
    assert curve.margin == pytest.approx(0.1 * abs(zs[0] - zs[1]))


def test_point_by_sheet_and_w(elliptic_curve: Curve) -> None:
    """Test points are picked by sheet label or by nearest w."""
    z = 3.0
    values = elliptic_curve.fiber(z)
    second = elliptic_curve.point(z, sheet=2)
    assert second.w == pytest.approx(values[1])
    assert second.sheet == 2
    nearest = elliptic_curve.point(z, w=values[1] + 1e-3)
    assert nearest.is_close(second)
    with pytest.raises(DomainError):
        elliptic_curve.point(z, sheet=3)


def test_point_identity() -> None:
    """Test tolerance-based identity of curve points."""
    a = CurvePoint.regular(1.0, 2.0)
    assert a.is_close(CurvePoint.regular(1.0 + 1e-12, 2.0 - 1e-12))
    assert not a.is_close(CurvePoint.regular(1.0, -2.0))
    assert CurvePoint.branch(0.5).is_close(CurvePoint.branch(0.5 + 1e-12))
    assert CurvePoint.infinity(1).is_close(CurvePoint.infinity(1))
    assert not CurvePoint.infinity(1).is_close(CurvePoint.infinity(-1))
    assert CurvePoint.infinity().descriptor() == {"kind": PointKind.INFINITY.value, "sign": 0}


def test_curve_hash_is_canonical() -> None:
    """Test the hash ignores monomial order and repeated terms are summed."""
    a = Curve.from_monomials([(0, 2, 1, 0), (5, 0, -1, 0), (0, 0, 1, 0)])
    b = Curve.from_monomials([(0, 0, 0.5, 0), (5, 0, -1, 0), (0, 2, 1, 0), (0, 0, 0.5, 0)])
    assert a.curve_hash() == b.curve_hash()
    assert len(a.curve_hash()) == 64


def test_polynomial_needs_w() -> None:
    """Test a polynomial without w is not a curve."""
    with pytest.raises(DomainError):
        BivariatePoly.from_monomials([(2, 0, 1, 0)])


def test_infinity_structure(elliptic_curve: Curve, even_genus2_curve: Curve) -> None:
    """Test infinity is one ramified point for odd deg p and two sheets for even deg p."""
    assert elliptic_curve.infinity_structure() == [(2, 1)]
    assert even_genus2_curve.infinity_structure() == [(1, 2)]
