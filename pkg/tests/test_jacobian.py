from __future__ import annotations

import numpy as np
import pytest

from riemann_surfaces_ex.core import metrics as app_metrics
from riemann_surfaces_ex.core.errors import DomainError, NumericalError
from riemann_surfaces_ex.services import jacobian
from riemann_surfaces_ex.services.curve import Curve, CurvePoint
from riemann_surfaces_ex.services.divisor import Divisor
from riemann_surfaces_ex.services.functions import HyperellipticFunction
from riemann_surfaces_ex.services.jacobian import AbelJacobi, Lattice
from riemann_surfaces_ex.services.polycore import UniPoly

INF = CurvePoint.infinity()


def near_half_lattice(coords: np.ndarray, expected: list[float], tol: float = 1e-6) -> bool:
    """Compare reduced coordinates on the circle R/Z."""
    gaps = np.abs(np.asarray(coords) - np.asarray(expected))
    return bool(np.all(np.minimum(gaps, 1.0 - gaps) < tol))


@pytest.fixture(scope="module")
def elliptic_aj(elliptic_curve: Curve) -> AbelJacobi:
    return AbelJacobi(elliptic_curve)


@pytest.fixture(scope="module")
def genus2_aj(genus2_curve: Curve) -> AbelJacobi:
    return AbelJacobi(genus2_curve)


def test_lattice_reduce() -> None:
    """Test reduction onto the fundamental cell of Z + iZ."""
    L = Lattice(np.array([[1j]]))
    point = L.reduce(np.array([0.5 + 0.5j]))
    np.testing.assert_allclose(point.coords, [0.5, 0.5])
    assert jacobian.is_origin(L.reduce(np.array([1.0 + 1.0j])))
    assert jacobian.is_origin(jacobian.reduce_mod_lattice(np.array([-2.0 + 3.0j]), L))


def test_lattice_shortest_and_distance() -> None:
    """Test the shortest representative wraps around the cell."""
    L = Lattice(np.array([[1j]]))
    np.testing.assert_allclose(L.shortest(np.array([0.9 + 0j])), [-0.1], atol=1e-12)
    assert jacobian.lattice_distance(np.array([2.0 - 1.0j]), L) == pytest.approx(0.0, abs=1e-12)
    assert L.equal(L.reduce(np.array([0.25])), L.reduce(np.array([1.25 + 1j])))


def test_lattice_degenerate() -> None:
    """Test a real period matrix does not span a lattice."""
    with pytest.raises(NumericalError):
        Lattice(np.array([[0.5 + 0j]]))


def test_base_point_must_be_branch(elliptic_curve: Curve) -> None:
    """Test the map is based at a branch point."""
    with pytest.raises(DomainError):
        AbelJacobi(elliptic_curve, base=elliptic_curve.point(3.0))


def test_half_periods(elliptic_aj: AbelJacobi) -> None:
    """Test differences of branch points map to 2-torsion points."""
    e1 = CurvePoint.branch(1.0)
    e2 = CurvePoint.branch(2.0)
    image = elliptic_aj.of_divisor(Divisor([(e1, 1), (elliptic_aj.base, -1)]))
    assert near_half_lattice(image.coords, [0.5, 0.0])
    image = jacobian.abel_jacobi(elliptic_aj.curve, Divisor([(e2, 1), (elliptic_aj.base, -1)]), aj=elliptic_aj)
    assert near_half_lattice(image.coords, [0.5, 0.5])
    assert not jacobian.is_origin(image)


def test_degree_must_be_zero(elliptic_aj: AbelJacobi) -> None:
    """Test the map on divisor classes needs degree zero."""
    with pytest.raises(DomainError):
        elliptic_aj.of_divisor(Divisor([(INF, 1)]))
    with pytest.raises(DomainError):
        jacobian.abel_jacobi_positive(elliptic_aj.curve, Divisor([(INF, -1)]), aj=elliptic_aj)


@pytest.mark.parametrize(
    "f_parts",
    [
        {"r_num": UniPoly((-1, 1))},
        {"r_num": UniPoly((-3, 1))},
        {"r_num": UniPoly((0,)), "s_num": UniPoly((1,))},
        {"r_num": UniPoly((1, 1)), "s_num": UniPoly((1,))},
    ],
)
def test_abel_elliptic(elliptic_aj: AbelJacobi, f_parts: dict[str, UniPoly]) -> None:
    """Test principal divisors map to the origin of the Jacobian."""
    c = elliptic_aj.curve
    f = HyperellipticFunction.from_parts(c.require_hyperelliptic(), **f_parts)
    image, principal = jacobian.abel_check(c, f, aj=elliptic_aj)
    assert principal, image.coords


def test_abel_genus2(genus2_aj: AbelJacobi) -> None:
    """Test z, w, (z - 2) and (w - 1) map to the origin on w^2 = z^5 - 1."""
    c = genus2_aj.curve
    p = c.require_hyperelliptic()
    for f in (
        HyperellipticFunction.z(p),
        HyperellipticFunction.w(p),
        HyperellipticFunction.from_parts(p, UniPoly((-2, 1))),
        HyperellipticFunction.from_parts(p, UniPoly((-1,)), s_num=UniPoly((1,))),
    ):
        _, principal = jacobian.abel_check(c, f, aj=genus2_aj)
        assert principal


def test_linear_equivalence(elliptic_aj: AbelJacobi) -> None:
    """Test 2 (1,0) ~ 2 infinity while (1,0) and (2,0) are not equivalent."""
    c = elliptic_aj.curve
    e1, e2 = CurvePoint.branch(1.0), CurvePoint.branch(2.0)
    assert jacobian.linearly_equivalent(c, Divisor([(e1, 2)]), Divisor([(INF, 2)]), aj=elliptic_aj)
    assert not jacobian.linearly_equivalent(c, Divisor([(e1, 1)]), Divisor([(e2, 1)]), aj=elliptic_aj)
    assert not jacobian.linearly_equivalent(c, Divisor([(e1, 1)]), Divisor([(e2, 2)]), aj=elliptic_aj)


def test_conjugate_points_cancel(genus2_aj: AbelJacobi) -> None:
    """Test P + iota(P) - 2 infinity is principal (it is the divisor of z - z(P))."""
    c = genus2_aj.curve
    z0 = 0.7 + 1.3j
    values = c.fiber(z0)
    D = Divisor([(CurvePoint.regular(z0, values[0]), 1), (CurvePoint.regular(z0, values[1]), 1), (INF, -2)])
    assert jacobian.is_origin(genus2_aj.of_divisor(D), c.settings.jacobian_tol)


def test_is_general(genus2_curve: Curve) -> None:
    """Test generality of degree-g divisors."""
    P = genus2_curve.point(0.5 + 1j, sheet=1)
    Q = genus2_curve.point(-1.5 + 0.3j, sheet=2)
    assert jacobian.is_general(genus2_curve, Divisor.from_points([P, Q]))
    assert not jacobian.is_general(genus2_curve, Divisor([(INF, 2)]))
    with pytest.raises(DomainError):
        jacobian.is_general(genus2_curve, Divisor([(INF, 1)]))


def test_jacobi_invert_elliptic(elliptic_aj: AbelJacobi) -> None:
    """Test inversion recovers the point whose image is the target."""
    c = elliptic_aj.curve
    P = c.point(3.0 + 1.0j, sheet=1)
    target = elliptic_aj.lattice.reduce(elliptic_aj.positive(Divisor.from_points([P])))
    seed = Divisor.from_points([c.point(-1.0 + 1.5j, sheet=2)])
    result = jacobian.jacobi_invert(c, target, seed, aj=elliptic_aj)
    assert result.degree == 1
    assert result.support[0].is_close(P, 1e-6)


def test_jacobi_invert_records_iterations_per_increment(elliptic_aj: AbelJacobi, monkeypatch: pytest.MonkeyPatch) -> None:
    """Test one Newton iteration count is recorded for every continuation increment."""
    recorded: list[tuple[int, int]] = []
    monkeypatch.setattr(app_metrics, "record_newton", lambda iterations, genus: recorded.append((iterations, genus)))
    c = elliptic_aj.curve
    target = elliptic_aj.lattice.reduce(elliptic_aj.positive(Divisor.from_points([c.point(2.5 - 1.0j, sheet=1)])))
    jacobian.jacobi_invert(c, target, Divisor.from_points([c.point(-1.0 + 1.5j, sheet=2)]), aj=elliptic_aj)
    steps = c.settings.newton_steps
    assert len(recorded) >= steps
    assert len(recorded) % steps == 0
    assert all(genus == 1 for _, genus in recorded)
    assert sum(iterations for iterations, _ in recorded) >= 1


def test_jacobi_invert_rejects_bad_seed(elliptic_aj: AbelJacobi) -> None:
    """Test seeds must be regular points in general position."""
    c = elliptic_aj.curve
    target = elliptic_aj.lattice.reduce(np.array([0.3 + 0.2j]))
    with pytest.raises(DomainError):
        jacobian.jacobi_invert(c, target, Divisor([(CurvePoint.branch(1.0), 1)]), aj=elliptic_aj)
    with pytest.raises(DomainError):
        jacobian.jacobi_invert(c, target, Divisor([(INF, 2)]), aj=elliptic_aj)


@pytest.mark.slow
def test_jacobi_invert_genus2(genus2_aj: AbelJacobi) -> None:
    """Test inversion of the image of a general divisor returns that divisor."""
    c = genus2_aj.curve
    D = Divisor.from_points([c.point(0.4 + 1.1j, sheet=1), c.point(-1.2 - 0.6j, sheet=2)])
    target = genus2_aj.lattice.reduce(genus2_aj.positive(D))
    seed = Divisor.from_points([c.point(1.5 + 1.5j, sheet=1), c.point(-0.3 - 1.8j, sheet=1)])
    result = jacobian.jacobi_invert(c, target, seed, aj=genus2_aj)
    image = genus2_aj.lattice.reduce(genus2_aj.positive(result))
    assert genus2_aj.lattice.equal(image, target)
    for point in D.support:
        assert any(point.is_close(found, 1e-5) for found in result.support)


@pytest.mark.slow
def test_jacobi_invert_random_targets(elliptic_aj: AbelJacobi, rng: np.random.Generator) -> None:
    """Test 20 random targets invert with a small residual and the same point from two seeds."""
    c = elliptic_aj.curve
    first = Divisor.from_points([c.point(-1.0 + 1.5j, sheet=2)])
    second = Divisor.from_points([c.point(3.0 - 1.0j, sheet=1)])
    done = 0
    while done < 20:
        coords = rng.uniform(0, 1, 2)
        if near_half_lattice(np.round(2 * coords) / 2, coords, tol=0.1):
            continue
        target = elliptic_aj.lattice.reduce(elliptic_aj.lattice.generators @ coords)
        result = jacobian.jacobi_invert(c, target, first, aj=elliptic_aj)
        image = elliptic_aj.lattice.reduce(elliptic_aj.positive(result))
        assert elliptic_aj.lattice.distance(image.representative - target.representative) < 1e-6
        again = jacobian.jacobi_invert(c, target, second, aj=elliptic_aj)
        assert again.support[0].is_close(result.support[0], 1e-6)
        done += 1


def _regular_points(c: Curve, rng: np.random.Generator, count: int, gap: float = 0.5) -> list[CurvePoint]:
    """Regular points over separated z-values away from the branch points."""
    zs: list[complex] = []
    while len(zs) < count:
        z = complex(*rng.uniform(-2, 2, 2))
        if c.distance_to_branch_points(z) > gap and all(abs(z - other) > gap for other in zs):
            zs.append(z)
    return [c.point(z, sheet=int(rng.integers(1, 3))) for z in zs]


@pytest.mark.parametrize("aj_name", ["elliptic_aj", "genus2_aj"])
def test_abel_jacobi_is_additive(request: pytest.FixtureRequest, rng: np.random.Generator, aj_name: str) -> None:
    """Test phi(D1 + D2) = phi(D1) + phi(D2) mod L when a shared point cancels."""
    aj: AbelJacobi = request.getfixturevalue(aj_name)
    for _ in range(3):
        P, Q, R = _regular_points(aj.curve, rng, 3)
        D1 = Divisor([(P, 1), (Q, -1)])
        D2 = Divisor([(Q, 1), (R, -1), (INF, 1), (CurvePoint.branch(1.0), -1)])
        combined = aj.of_divisor(D1 + D2)
        summed = aj.lattice.reduce(aj.of_divisor(D1).representative + aj.of_divisor(D2).representative)
        assert aj.lattice.equal(combined, summed)


@pytest.mark.parametrize("aj_name", ["elliptic_aj", "genus2_aj"])
def test_abel_jacobi_independent_of_detour_side(request: pytest.FixtureRequest, rng: np.random.Generator, aj_name: str) -> None:
    """Test paths passing the branch disks on the left or on the right give the same class."""
    aj: AbelJacobi = request.getfixturevalue(aj_name)
    left = AbelJacobi(aj.curve, periods=aj.periods, side=1)
    right = AbelJacobi(aj.curve, periods=aj.periods, side=-1)
    for _ in range(3):
        P, Q = _regular_points(aj.curve, rng, 2)
        D = Divisor([(P, 1), (Q, -1)])
        assert left.lattice.equal(left.of_divisor(D), right.of_divisor(D))
        E = Divisor([(P, 1), (INF, -1)])
        assert left.lattice.equal(left.of_divisor(E), right.of_divisor(E))


@pytest.mark.parametrize("aj_name", ["elliptic_aj", "genus2_aj"])
def test_difference_of_points_is_not_principal(request: pytest.FixtureRequest, rng: np.random.Generator, aj_name: str) -> None:
    """Test p - q for distinct regular points stays away from the lattice."""
    aj: AbelJacobi = request.getfixturevalue(aj_name)
    for _ in range(5):
        P, Q = _regular_points(aj.curve, rng, 2)
        image = aj.of_divisor(Divisor([(P, 1), (Q, -1)]))
        assert jacobian.lattice_distance(image.representative, aj.lattice) > 1e-3


@pytest.mark.slow
def test_jacobi_invert_random_targets_genus2(genus2_aj: AbelJacobi, rng: np.random.Generator) -> None:
    """Test 20 random genus-two targets invert with a small residual and to the same divisor from two seeds."""
    c = genus2_aj.curve
    first = Divisor.from_points([c.point(1.5 + 1.5j, sheet=1), c.point(-0.3 - 1.8j, sheet=1)])
    second = Divisor.from_points([c.point(-1.6 + 0.9j, sheet=2), c.point(0.8 - 1.2j, sheet=2)])
    for _ in range(20):
        D = Divisor.from_points(_regular_points(c, rng, 2))
        target = genus2_aj.lattice.reduce(genus2_aj.positive(D))
        result = jacobian.jacobi_invert(c, target, first, aj=genus2_aj)
        image = genus2_aj.lattice.reduce(genus2_aj.positive(result))
        assert genus2_aj.lattice.distance(image.representative - target.representative) < 1e-6
        again = jacobian.jacobi_invert(c, target, second, aj=genus2_aj)
        for point in result.support:
            assert any(point.is_close(found, 1e-5) for found in again.support)
        for point in D.support:
            assert any(point.is_close(found, 1e-5) for found in result.support)
