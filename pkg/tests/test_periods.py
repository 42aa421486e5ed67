from __future__ import annotations

import numpy as np
import pytest
import scipy.special

from riemann_surfaces_ex.core.errors import DomainError
from riemann_surfaces_ex.services import periods
from riemann_surfaces_ex.services.curve import Curve, CurvePoint
from riemann_surfaces_ex.services.functions import HyperellipticFunction
from riemann_surfaces_ex.services.polycore import UniPoly

from tests.conftest import from_roots, random_separated_roots


@pytest.fixture(scope="module")
def genus2_periods(genus2_curve: Curve) -> periods.PeriodMatrix:
    return periods.period_matrix(genus2_curve)


@pytest.mark.parametrize("lam", [0.3, 0.5, 0.7])
def test_legendre_tau(lam: float) -> None:
    """Test Z of w^2 = z(z-1)(z-lambda) matches i K(1-lambda)/K(lambda)."""
    curve = from_roots([0, 1, lam])
    result = periods.period_matrix(curve)
    expected = 1j * scipy.special.ellipk(1 - lam) / scipy.special.ellipk(lam)
    assert result.Z[0, 0] == pytest.approx(expected, abs=1e-6)
    assert periods.legendre_tau(lam) == pytest.approx(expected)


def test_legendre_tau_half() -> None:
    """Test the square lattice at lambda = 1/2."""
    assert periods.legendre_tau(0.5) == pytest.approx(1j)
    with pytest.raises(DomainError):
        periods.legendre_tau(1.5)


def test_elliptic_periods(elliptic_curve: Curve) -> None:
    """Test roots 0, 1, 2 are a rescaled lambda = 1/2 curve, so Z = i."""
    result = periods.period_matrix(elliptic_curve)
    assert result.Z[0, 0] == pytest.approx(1j, abs=1e-8)
    assert result.diagnostics.positive_definite
    assert periods.real_independence(result.omega)


def test_homology_intersections(genus2_curve: Curve) -> None:
    """Test the a- and b-cycles form a symplectic basis."""
    cycles = periods.homology_basis(genus2_curve)
    assert cycles.genus == 2
    assert cycles.includes_infinity
    J = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])
    np.testing.assert_array_equal(cycles.intersection_matrix(), J)


def test_genus2_period_matrix(genus2_periods: periods.PeriodMatrix) -> None:
    """Test Z is symmetric with positive definite imaginary part."""
    Z = genus2_periods.Z
    np.testing.assert_allclose(Z, Z.T, atol=1e-9)
    assert np.all(np.linalg.eigvalsh(Z.imag) > 0)
    diagnostics = genus2_periods.diagnostics
    assert diagnostics.first_relation < 1e-8
    assert diagnostics.normalized_form_defect < 1e-7
    assert genus2_periods.quadrature_nodes >= 64
    assert periods.real_independence(genus2_periods.omega)


def test_normalized_form_defect_detects_asymmetry() -> None:
    """Test the normalized Hermitian form matches 2 Im Z only for symmetric Z."""
    E = np.eye(2, dtype=complex)
    symmetric = periods.bilinear_diagnostics(E, np.array([[1j, 0.5], [0.5, 2j]]))
    assert symmetric.normalized_form_defect == pytest.approx(0.0, abs=1e-12)
    skewed = periods.bilinear_diagnostics(E, np.array([[1j, 1.0], [0.0, 1j]]))
    assert skewed.normalized_form_defect == pytest.approx(1.0)
    assert skewed.symmetry_defect == pytest.approx(1.0)


def test_normalize_gives_identity(genus2_periods: periods.PeriodMatrix) -> None:
    """Test E^-1 applied to the a-periods is the identity."""
    np.testing.assert_allclose(genus2_periods.normalize(genus2_periods.E), np.eye(2), atol=1e-12)


def test_differential_basis(genus2_curve: Curve) -> None:
    """Test dz/w and z dz/w are holomorphic with 2g - 2 zeros."""
    basis = periods.differential_basis(genus2_curve)
    assert len(basis) == 2
    assert all(D.degree == 2 for D in basis.divisors())
    values = basis.evaluate(np.array([2.0, 3.0]), np.array([1.0, 2.0]))
    np.testing.assert_allclose(values, [[1.0, 0.5], [2.0, 1.5]])
    with pytest.raises(DomainError):
        basis.differential(3)


def test_genus_zero_has_no_differentials() -> None:
    """Test genus-0 curves are refused."""
    curve = from_roots([0, 1])
    with pytest.raises(DomainError):
        periods.differential_basis(curve)
    with pytest.raises(DomainError):
        periods.homology_basis(curve)


def test_real_independence_detects_dependence() -> None:
    """Test real-collinear columns are flagged."""
    assert not periods.real_independence(np.array([[1.0, 2.0]]))
    assert periods.real_independence(np.array([[1.0, 1j]]))


def test_residues_of_dz_over_z(elliptic_curve: Curve) -> None:
    """Test dz/z has residue 2 at (0, 0) and -2 at infinity."""
    p = elliptic_curve.require_hyperelliptic()
    report = periods.residues(elliptic_curve, HyperellipticFunction.z(p).inverse())
    assert len(report.entries) == 2
    by_kind = {point.kind.value: residue for point, residue in report.entries}
    assert by_kind["branch"] == pytest.approx(2.0, abs=1e-8)
    assert by_kind["infinity"] == pytest.approx(-2.0, abs=1e-8)
    assert abs(report.total) < 1e-8


def test_residues_at_regular_poles(elliptic_curve: Curve) -> None:
    """Test dz/(z - 3) has residue one at both points above 3 and the sum vanishes."""
    p = elliptic_curve.require_hyperelliptic()
    f = HyperellipticFunction.from_parts(p, UniPoly((1,)), UniPoly((-3, 1)))
    report = periods.residues(elliptic_curve, f)
    regular = [residue for point, residue in report.entries if point.z is not None]
    assert regular == [pytest.approx(1.0, abs=1e-8)] * 2
    assert abs(report.total) < 1e-8


def test_residues_holomorphic(elliptic_curve: Curve) -> None:
    """Test a polynomial in z has only a pole at infinity with zero residue."""
    p = elliptic_curve.require_hyperelliptic()
    report = periods.residues(elliptic_curve, HyperellipticFunction.z(p))
    assert [point for point, _ in report.entries] == [CurvePoint.infinity()]
    assert abs(report.total) < 1e-8


@pytest.mark.slow
def test_random_period_matrices(rng: np.random.Generator) -> None:
    """Test bilinear relations on 20 random hyperelliptic curves of genus 1 to 3."""
    for k in range(20):
        curve = from_roots(random_separated_roots(rng, 3 + k % 6))
        result = periods.period_matrix(curve)
        diagnostics = result.diagnostics
        assert diagnostics.first_relation < 1e-6
        assert min(diagnostics.hermitian_eigenvalues) > 0
        assert diagnostics.symmetry_defect < 1e-8
        assert diagnostics.positive_definite


@pytest.mark.slow
def test_random_residue_sums(rng: np.random.Generator, elliptic_curve: Curve, genus2_curve: Curve) -> None:
    """Test the residues of 50 random differentials (R + S w) dz sum to zero."""
    for k in range(50):
        curve = elliptic_curve if k % 2 == 0 else genus2_curve
        p = curve.require_hyperelliptic()
        poles: list[complex] = []
        while len(poles) < 4:
            z = complex(*(2.5 * rng.uniform(-1, 1, 2)))
            if curve.distance_to_branch_points(z) > 0.3 and all(abs(z - q) > 0.3 for q in poles):
                poles.append(z)
        f = HyperellipticFunction.from_parts(
            p,
            UniPoly(tuple(rng.integers(-3, 4, size=3) + 1j * rng.integers(-3, 4, size=3))),
            UniPoly.from_roots(poles[:2]),
            UniPoly((complex(rng.integers(1, 4)),)),
            UniPoly.from_roots(poles[1:]),
        )
        report = periods.residues(curve, f)
        scale = max(1.0, sum(abs(residue) for _, residue in report.entries))
        assert abs(report.total) < 1e-8 * scale


def test_residues_refuse_function_from_other_curve(elliptic_curve: Curve, genus2_curve: Curve) -> None:
    """Test residues need a function defined on the same curve."""
    z = HyperellipticFunction.z(elliptic_curve.require_hyperelliptic())
    with pytest.raises(DomainError):
        periods.residues(genus2_curve, z)
