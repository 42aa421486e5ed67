"""Holomorphic differentials, homology cycles and period matrices of hyperelliptic curves.

Branch points are sorted by (real, imaginary) part into a chain e_1, ..., e_M.
The cycle over segment j runs around [e_j, e_{j+1}] on the sheet given by the
boundary values of w to the left of the chain; its integral is twice the open
segment integral, computed with Gauss-Chebyshev nodes that absorb the
inverse square-root endpoint singularities. With gamma_j these segment cycles,

    a_k = gamma_{2k-1},    b_k = gamma_{2k} + gamma_{2k+2} + ... + gamma_{2g}

is a symplectic basis; b is reversed when needed so that Im Z > 0.
"""
from __future__ import annotations

import cmath
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.special

from riemann_surfaces_ex.core import metrics as app_metrics
from riemann_surfaces_ex.core.errors import DomainError, InconsistencyError, NumericalError
from riemann_surfaces_ex.core.telemetry import get_tracer
from riemann_surfaces_ex.services import divisor
from riemann_surfaces_ex.services.curve import Curve, CurvePoint, canonical_order
from riemann_surfaces_ex.services.functions import HyperellipticFunction
from riemann_surfaces_ex.services.local_charts import LocalChart
from riemann_surfaces_ex.services.polycore import UniPoly

logger = logging.getLogger(__name__)
tracer = get_tracer(__name__)

BILINEAR_TOL = 1e-6
SYMMETRY_TOL = 1e-8
INDEPENDENCE_TOL = 1e-10
RESIDUE_POINTS = 256
CYCLE_PLOT_POINTS = 24


# ==================
# Differential basis
# ==================

@dataclass(frozen=True)
class DifferentialBasis:
    """``omega_k = z^(k-1) dz / w`` for k = 1..g."""

    curve: Curve
    genus: int

    def differential(self, k: int) -> HyperellipticFunction:
        """Coefficient of dz in omega_k, written as ``z^(k-1) w / p``."""
        if not 1 <= k <= self.genus:
            raise DomainError(f"Differential index {k} outside 1..{self.genus}")
        p = self.curve.require_hyperelliptic()
        return HyperellipticFunction(UniPoly((0j,)), UniPoly.monomial(k - 1), p, p)

    def evaluate(self, z: complex | np.ndarray, w: complex | np.ndarray) -> np.ndarray:
        """Values of the dz-coefficients, shape ``(g,) + shape(z)``."""
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        powers = np.arange(self.genus).reshape((-1,) + (1,) * z.ndim)
        return z[None, ...] ** powers / w[None, ...]

    def divisors(self) -> list[divisor.Divisor]:
        return [divisor.differential_divisor(self.curve, k) for k in range(1, self.genus + 1)]

    def verify_holomorphic(self) -> None:
        """Check by order counting that no basis element has a pole.

        Raises:
            InconsistencyError: If some omega_k has a negative order somewhere.
        """
        for k, D in enumerate(self.divisors(), start=1):
            if not D.is_positive:
                raise InconsistencyError(f"omega_{k} is not holomorphic: divisor {D!r}")
            if D.degree != 2 * self.genus - 2:
                raise InconsistencyError(f"omega_{k} has divisor degree {D.degree}, expected {2 * self.genus - 2}")

    def __len__(self) -> int:
        return self.genus


def differential_basis(c: Curve, verify: bool = True) -> DifferentialBasis:
    """Basis of holomorphic differentials of a hyperelliptic curve.

    Raises:
        DomainError: If the curve has genus 0.
    """
    g = divisor.curve_genus(c)
    if g == 0:
        raise DomainError("no holomorphic differentials on a genus-0 curve")
    basis = DifferentialBasis(c, g)
    if verify:
        basis.verify_holomorphic()
    return basis


# ==============
# Homology basis
# ==============

@dataclass(frozen=True)
class Cycle:
    """Integer combination of segment cycles, ``terms`` as (segment index, coefficient)."""

    name: str
    terms: tuple[tuple[int, int], ...]

    def waypoints(self, chain: tuple[complex, ...], width: float) -> list[list[complex]]:
        """A closed stadium around each segment of the cycle (for plotting)."""
        loops: list[list[complex]] = []
        for j, coefficient in self.terms:
            a, b = chain[j], chain[j + 1]
            direction = (b - a) / abs(b - a)
            half = [b + width * direction * cmath.exp(1j * math.pi * (k / CYCLE_PLOT_POINTS - 0.5)) for k in range(CYCLE_PLOT_POINTS + 1)]
            other = [a - width * direction * cmath.exp(1j * math.pi * (k / CYCLE_PLOT_POINTS - 0.5)) for k in range(CYCLE_PLOT_POINTS + 1)]
            loop = half + other + [half[0]]
            loops.append(loop if coefficient > 0 else list(reversed(loop)))
        return loops


@dataclass(frozen=True)
class HomologyBasis:
    chain: tuple[complex, ...]
    a_cycles: tuple[Cycle, ...]
    b_cycles: tuple[Cycle, ...]
    includes_infinity: bool

    @property
    def genus(self) -> int:
        return len(self.a_cycles)

    @property
    def segment_count(self) -> int:
        return 2 * self.genus

    def coefficient_matrix(self) -> np.ndarray:
        """Rows a_1..a_g, b_1..b_g in terms of the segment cycles."""
        C = np.zeros((2 * self.genus, self.segment_count), dtype=int)
        for row, cycle in enumerate(self.a_cycles + self.b_cycles):
            for j, coefficient in cycle.terms:
                C[row, j] += coefficient
        return C

    def intersection_matrix(self) -> np.ndarray:
        """Intersection numbers from the chain, where gamma_j . gamma_(j+1) = 1."""
        n = self.segment_count
        M = np.zeros((n, n), dtype=int)
        for j in range(n - 1):
            M[j, j + 1] = 1
            M[j + 1, j] = -1
        C = self.coefficient_matrix()
        return C @ M @ C.T

    def min_branch_distance(self) -> float:
        zs = np.asarray(self.chain)
        diffs = np.abs(zs[:, None] - zs[None, :])
        return float(np.min(diffs[~np.eye(len(zs), dtype=bool)]))


def homology_basis(c: Curve) -> HomologyBasis:
    """Symplectic cycles on the sorted branch-point chain.

    Raises:
        DomainError: If the curve has genus 0.
    """
    p = c.require_hyperelliptic()
    g = divisor.curve_genus(c)
    if g == 0:
        raise DomainError("genus-0 curves have no homology cycles")
    chain = tuple(complex(z) for z in canonical_order(c.finite_branch_zs))
    a_cycles = tuple(Cycle(f"a{k}", ((2 * k - 2, 1),)) for k in range(1, g + 1))
    b_cycles = tuple(
        Cycle(f"b{k}", tuple((2 * j - 1, 1) for j in range(k, g + 1)))
        for k in range(1, g + 1)
    )
    return HomologyBasis(chain, a_cycles, b_cycles, p.degree % 2 == 1)


# ==========================
# Segment integrals
# ==========================

@dataclass(frozen=True)
class SegmentIntegral:
    """``int_{e_j}^{e_(j+1)} z^s dz / w`` for s = 0..g-1 with left-side boundary values."""

    index: int
    values: np.ndarray
    nodes: int
    delta: float


class _Segment:
    """Square-root factor ``w = sqrt(1 - u^2) r(u)`` on ``z = m + h u``, u in [-1, 1]."""

    def __init__(self, chain: tuple[complex, ...], j: int, lead: complex) -> None:
        self.a, self.b = chain[j], chain[j + 1]
        self.m = (self.a + self.b) / 2
        self.h = (self.b - self.a) / 2
        self.others = np.array([z for k, z in enumerate(chain) if k not in (j, j + 1)], dtype=complex)
        toward = self.m - self.others
        self.mu = toward / np.abs(toward)
        self.prefactor = self.h * np.sqrt(complex(-lead))
        self.sign = 1.0

    def r(self, u: np.ndarray) -> np.ndarray:
        z = self.m + self.h * np.asarray(u, dtype=complex)
        if self.others.size == 0:
            return self.sign * self.prefactor * np.ones_like(z)
        factors = np.sqrt(self.mu[:, None]) * np.sqrt((z[None, :] - self.others[:, None]) / self.mu[:, None])
        return self.sign * self.prefactor * np.prod(factors, axis=0)

    def integrate(self, genus: int, n_nodes: int) -> np.ndarray:
        k = np.arange(1, n_nodes + 1)
        u = np.cos((2 * k - 1) * math.pi / (2 * n_nodes))
        z = self.m + self.h * u
        powers = z[None, :] ** np.arange(genus)[:, None]
        return (math.pi / n_nodes) * np.sum(powers * self.h / self.r(u)[None, :], axis=1)


def _fix_chain_signs(segments: list[_Segment]) -> None:
    """Pick the sign of each r so the left-side values continue across shared branch points."""
    for previous, current in zip(segments, segments[1:]):
        d_in = previous.h / abs(previous.h)
        d_out = current.h / abs(current.h)
        theta_in = cmath.phase(-d_in)
        theta_out = cmath.phase(d_out)
        delta = -((theta_in - theta_out) % (2 * math.pi))
        target = previous.r(np.array([1.0]))[0] * cmath.exp(0.5j * delta) * math.sqrt(abs(current.h) / abs(previous.h))
        raw = current.r(np.array([-1.0]))[0]
        if abs(raw - target) > abs(raw + target):
            current.sign = -1.0


def _converged_integral(segment: _Segment, j: int, genus: int, start: int, max_nodes: int, tol: float) -> SegmentIntegral:
    n = start
    values = segment.integrate(genus, n)
    while True:
        refined = segment.integrate(genus, 2 * n)
        delta = float(np.max(np.abs(refined - values)))
        n *= 2
        if delta <= tol * max(1.0, float(np.max(np.abs(refined)))):
            app_metrics.record_quadrature(n, "gauss_chebyshev")
            return SegmentIntegral(j, refined, n, delta)
        if 2 * n > max_nodes:
            raise NumericalError(
                f"Quadrature on segment {j} did not converge with {n} nodes",
                residual=delta,
                diagnostics={"segment": j, "nodes": n, "endpoints": [[segment.a.real, segment.a.imag], [segment.b.real, segment.b.imag]]},
            )
        logger.debug(f"Segment {j}: doubling to {2 * n} nodes (delta {delta:.3g})")
        values = refined


def segment_integrals(c: Curve, cycles: HomologyBasis) -> list[SegmentIntegral]:
    """Open-segment integrals of the basis along the first 2g chain segments."""
    p = c.require_hyperelliptic()
    settings = c.settings
    segments = [_Segment(cycles.chain, j, complex(p.leading)) for j in range(cycles.segment_count)]
    _fix_chain_signs(segments)

    def run(j: int) -> SegmentIntegral:
        return _converged_integral(
            segments[j], j, cycles.genus, settings.quad_order, settings.quad_max_order, settings.quad_tol
        )

    if settings.workers > 1:
        with ThreadPoolExecutor(max_workers=settings.workers) as pool:
            return list(pool.map(run, range(len(segments))))
    return [run(j) for j in range(len(segments))]


# =============
# Period matrix
# =============

@dataclass(frozen=True)
class BilinearDiagnostics:
    first_relation: float
    hermitian_defect: float
    hermitian_eigenvalues: tuple[float, ...]
    symmetry_defect: float
    im_z_eigenvalues: tuple[float, ...]
    normalized_form_defect: float

    @property
    def positive_definite(self) -> bool:
        return min(self.hermitian_eigenvalues) > 0 and min(self.im_z_eigenvalues) > 0

    def as_dict(self) -> dict[str, object]:
        return {
            "first_relation": self.first_relation,
            "hermitian_defect": self.hermitian_defect,
            "hermitian_eigenvalues": list(self.hermitian_eigenvalues),
            "symmetry_defect": self.symmetry_defect,
            "im_z_eigenvalues": list(self.im_z_eigenvalues),
            "normalized_form_defect": self.normalized_form_defect,
        }


def bilinear_diagnostics(E: np.ndarray, F: np.ndarray) -> BilinearDiagnostics:
    """Residuals of the Riemann bilinear relations for ``Omega = (E, F)``."""
    omega = np.hstack([E, F])
    scale = max(float(np.linalg.norm(omega)) ** 2, np.finfo(float).tiny)
    first = float(np.linalg.norm(E @ F.T - F @ E.T)) / scale
    H = 1j * (E @ F.conj().T - F @ E.conj().T)
    hermitian_defect = float(np.linalg.norm(H - H.conj().T)) / scale
    hermitian_eigs = scipy.linalg.eigvalsh((H + H.conj().T) / 2)
    Z = scipy.linalg.solve(E, F)
    symmetry = float(np.max(np.abs(Z - Z.T)))
    im_eigs = scipy.linalg.eigvalsh((Z.imag + Z.imag.T) / 2)
    # E^-1 H E^-* must equal 2 Im Z once Z is symmetric
    left = scipy.linalg.solve(E, H)
    normalized_form = scipy.linalg.solve(E, left.conj().T).conj().T
    normalized_defect = float(np.max(np.abs(normalized_form - 2.0 * Z.imag))) / max(1.0, float(np.max(np.abs(Z))))
    return BilinearDiagnostics(
        first,
        hermitian_defect,
        tuple(float(x) for x in hermitian_eigs),
        symmetry,
        tuple(float(x) for x in im_eigs),
        normalized_defect,
    )


@dataclass(frozen=True)
class PeriodMatrix:
    """a-periods E, b-periods F (rows = differentials) and ``Z = E^-1 F``."""

    E: np.ndarray
    F: np.ndarray
    Z: np.ndarray
    cycles: HomologyBasis
    diagnostics: BilinearDiagnostics
    segments: tuple[SegmentIntegral, ...] = field(default=())
    b_reversed: bool = False

    @property
    def genus(self) -> int:
        return self.E.shape[0]

    @property
    def omega(self) -> np.ndarray:
        return np.hstack([self.E, self.F])

    def normalize(self, values: np.ndarray) -> np.ndarray:
        """Apply ``E^-1`` to basis values or integrals (first axis = differentials)."""
        return scipy.linalg.solve(self.E, values)

    @property
    def quadrature_nodes(self) -> int:
        return max((s.nodes for s in self.segments), default=0)


def period_matrix(
    c: Curve,
    basis: DifferentialBasis | None = None,
    cycles: HomologyBasis | None = None
) -> PeriodMatrix:
    """Period matrix of a hyperelliptic curve and its normalized form.

    Raises:
        NumericalError: If segment quadrature does not converge.
        InconsistencyError: If Im Z is indefinite or a bilinear relation fails.
    """
    if basis is None:
        basis = differential_basis(c)
    if cycles is None:
        cycles = homology_basis(c)
    g = basis.genus

    with tracer.start_as_current_span("period_matrix") as span:
        span.set_attribute("genus", g)
        integrals = segment_integrals(c, cycles)
        U = np.column_stack([2.0 * s.values for s in integrals])
        C = cycles.coefficient_matrix()
        E = U @ C[:g].T
        F = U @ C[g:].T

        Z = scipy.linalg.solve(E, F)
        im_eigs = scipy.linalg.eigvalsh((Z.imag + Z.imag.T) / 2)
        reversed_b = False
        if np.all(im_eigs < 0):
            F, Z, reversed_b = -F, -Z, True
        elif not np.all(im_eigs > 0):
            raise InconsistencyError(
                f"period matrix inconsistent: Im Z is indefinite (eigenvalues {im_eigs.tolist()})"
            )

        diagnostics = bilinear_diagnostics(E, F)
        app_metrics.record_bilinear_residual(diagnostics.first_relation, g)
        scale = max(1.0, float(np.max(np.abs(Z))))
        if (
            diagnostics.first_relation > BILINEAR_TOL
            or diagnostics.symmetry_defect > SYMMETRY_TOL * scale
            or not diagnostics.positive_definite
        ):
            raise InconsistencyError(
                "period matrix inconsistent: bilinear relations violated "
                f"(first {diagnostics.first_relation:.3g}, symmetry {diagnostics.symmetry_defect:.3g})"
            )

    logger.info(
        f"Period matrix for genus {g}: first relation {diagnostics.first_relation:.2e}, "
        f"symmetry {diagnostics.symmetry_defect:.2e}"
    )
    return PeriodMatrix(E, F, Z, cycles, diagnostics, tuple(integrals), reversed_b)


def real_independence(omega: np.ndarray) -> bool:
    """True iff the 2g columns of Omega are linearly independent over R."""
    omega = np.asarray(omega, dtype=complex)
    R = np.vstack([omega.real, omega.imag])
    if R.shape[0] != R.shape[1]:
        return False
    values = scipy.linalg.svdvals(R)
    return bool(values[0] > 0 and values[-1] > INDEPENDENCE_TOL * values[0])


def legendre_tau(lam: float) -> complex:
    """``i K(1 - lambda) / K(lambda)`` for the curve w^2 = z (z - 1) (z - lambda), 0 < lambda < 1."""
    if not 0 < lam < 1:
        raise DomainError(f"lambda must lie in (0, 1), got {lam}")
    return 1j * float(scipy.special.ellipk(1 - lam)) / float(scipy.special.ellipk(lam))


# ========
# Residues
# ========

@dataclass(frozen=True)
class ResidueReport:
    entries: tuple[tuple[CurvePoint, complex], ...]

    @property
    def total(self) -> complex:
        return complex(sum(residue for _, residue in self.entries))

    def descriptor(self) -> list[dict[str, object]]:
        return [{"point": p.descriptor(), "residue": [r.real, r.imag]} for p, r in self.entries]


def residues(c: Curve, f: HyperellipticFunction) -> ResidueReport:
    """Residues of the meromorphic differential ``f dz`` at all of its poles.

    Raises:
        NumericalError: If an order cannot be resolved on a chart circle.
    """
    f.require_curve(c.require_hyperelliptic())
    if f.is_zero:
        return ResidueReport(())
    candidates = divisor.candidate_zs(c, f)
    points = [pt for z in candidates for pt in divisor.points_over(c, z)] + c.points_at_infinity()

    entries: list[tuple[CurvePoint, complex]] = []
    for point in points:
        chart = LocalChart(c, point)
        rho = divisor.winding_radius(c, chart, candidates)

        def fn(s, f=f):
            return f(s.z, s.w) * s.dz

        if chart.order_of(fn, rho) < 0:
            entries.append((point, chart.residue(fn, rho, RESIDUE_POINTS)))
    report = ResidueReport(tuple(entries))
    logger.debug(f"{len(entries)} poles, residue sum {abs(report.total):.3g}")
    return report
