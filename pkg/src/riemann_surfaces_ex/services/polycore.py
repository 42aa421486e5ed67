"""Univariate and bivariate polynomial arithmetic, root finding and resultants.

Coefficient arrays are always ordered by ascending power, the convention of
``numpy.polynomial.polynomial``. Resultants take an exact sympy path when every
coefficient is a Gaussian integer; root finding does so for integer inputs.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np
import numpy.polynomial.polynomial as npoly
import scipy.linalg
import sympy

from riemann_surfaces_ex.core.errors import DomainError, NumericalError

logger = logging.getLogger(__name__)

_EPS = np.finfo(float).eps


def _is_gaussian_integer(value: complex) -> bool:
    return float(value.real).is_integer() and float(value.imag).is_integer()


def _to_sympy_number(value: complex) -> sympy.Expr:
    re, im = int(value.real), int(value.imag)
    return sympy.Integer(re) + sympy.I * sympy.Integer(im) if im else sympy.Integer(re)


@dataclass(frozen=True, eq=False)
class UniPoly:
    """Polynomial in one variable with complex coefficients (ascending powers).

    Trailing zeros are trimmed on construction, so ``coeffs[-1]`` is the
    leading coefficient unless the polynomial is identically zero, in which
    case ``coeffs == (0j,)``.
    """

    coeffs: tuple[complex, ...]

    def __post_init__(self) -> None:
        values = [complex(c) for c in self.coeffs]
        while len(values) > 1 and values[-1] == 0:
            values.pop()
        if not values:
            values = [0j]
        object.__setattr__(self, "coeffs", tuple(values))

    @classmethod
    def from_roots(cls, roots: Iterable[complex], leading: complex = 1.0) -> UniPoly:
        """Build ``leading * prod(x - r)``."""
        return cls(tuple(leading * npoly.polyfromroots(list(roots))))

    @classmethod
    def monomial(cls, degree: int, coefficient: complex = 1.0) -> UniPoly:
        return cls(tuple([0j] * degree + [coefficient]))

    @cached_property
    def array(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=complex)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> complex:
        return self.coeffs[-1]

    @property
    def is_zero(self) -> bool:
        return len(self.coeffs) == 1 and self.coeffs[0] == 0

    @cached_property
    def is_gaussian_integer(self) -> bool:
        return all(_is_gaussian_integer(c) for c in self.coeffs)

    @cached_property
    def is_integer(self) -> bool:
        return all(c.imag == 0 and float(c.real).is_integer() for c in self.coeffs)

    def __call__(self, z: complex | np.ndarray) -> complex | np.ndarray:
        return npoly.polyval(z, self.array)

    def abs_scale(self, z: complex | np.ndarray) -> float | np.ndarray:
        """Evaluate ``sum |c_i| |z|^i``, the natural scale of ``p(z)``."""
        return npoly.polyval(np.abs(z), np.abs(self.array))

    def derivative(self, order: int = 1) -> UniPoly:
        if order >= len(self.coeffs):
            return UniPoly((0j,))
        return UniPoly(tuple(npoly.polyder(self.array, order)))

    def monic(self) -> UniPoly:
        if self.is_zero:
            raise DomainError("Zero polynomial has no monic form")
        return UniPoly(tuple(self.array / self.leading))

    def _coerce(self, other: UniPoly | complex) -> UniPoly:
        return other if isinstance(other, UniPoly) else UniPoly((complex(other),))

    def __add__(self, other: UniPoly | complex) -> UniPoly:
        return UniPoly(tuple(npoly.polyadd(self.array, self._coerce(other).array)))

    __radd__ = __add__

    def __sub__(self, other: UniPoly | complex) -> UniPoly:
        return UniPoly(tuple(npoly.polysub(self.array, self._coerce(other).array)))

    def __rsub__(self, other: UniPoly | complex) -> UniPoly:
        return self._coerce(other) - self

    def __mul__(self, other: UniPoly | complex) -> UniPoly:
        return UniPoly(tuple(npoly.polymul(self.array, self._coerce(other).array)))

    __rmul__ = __mul__

    def __neg__(self) -> UniPoly:
        return UniPoly(tuple(-self.array))

    def __pow__(self, exponent: int) -> UniPoly:
        return UniPoly(tuple(npoly.polypow(self.array, exponent)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, UniPoly):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def to_sympy(self, x: sympy.Symbol) -> sympy.Expr:
        """Exact sympy expression; only valid for Gaussian-integer coefficients."""
        return sum((_to_sympy_number(c) * x**k for k, c in enumerate(self.coeffs)), sympy.Integer(0))

    @classmethod
    def from_sympy(cls, expr: sympy.Expr, x: sympy.Symbol) -> UniPoly:
        poly = sympy.Poly(sympy.expand(expr), x)
        return cls(tuple(complex(c) for c in reversed(poly.all_coeffs())))

    def __repr__(self) -> str:
        return f"UniPoly({list(self.coeffs)})"


@dataclass(frozen=True, eq=False)
class BivariatePoly:
    """Polynomial F(w, z) stored as ``{(i, j): c}`` for the monomial ``c z^i w^j``."""

    coeffs: Mapping[tuple[int, int], complex] = field(default_factory=dict)

    def __post_init__(self) -> None:
        cleaned: dict[tuple[int, int], complex] = {}
        for (i, j), c in self.coeffs.items():
            if i < 0 or j < 0:
                raise DomainError(f"Negative exponent in monomial ({i}, {j})")
            c = complex(c)
            if c != 0:
                cleaned[(int(i), int(j))] = c
        if not cleaned or max(j for _, j in cleaned) < 1:
            raise DomainError("Curve polynomial must have positive degree in w")
        object.__setattr__(self, "coeffs", dict(sorted(cleaned.items())))

    @classmethod
    def from_monomials(cls, monomials: Iterable[Sequence[float]]) -> BivariatePoly:
        """Build from ``(i, j, re, im)`` rows, summing repeated exponents."""
        acc: dict[tuple[int, int], complex] = {}
        for row in monomials:
            i, j, re, im = row
            acc[(int(i), int(j))] = acc.get((int(i), int(j)), 0j) + complex(re, im)
        return cls(acc)

    @classmethod
    def from_w_coefficients(cls, polys: Mapping[int, UniPoly]) -> BivariatePoly:
        """Build ``sum polys[j](z) w^j``."""
        acc: dict[tuple[int, int], complex] = {}
        for j, p in polys.items():
            for i, c in enumerate(p.coeffs):
                acc[(i, j)] = acc.get((i, j), 0j) + c
        return cls(acc)

    @cached_property
    def deg_w(self) -> int:
        return max(j for _, j in self.coeffs)

    @cached_property
    def deg_z(self) -> int:
        return max(i for i, _ in self.coeffs)

    @cached_property
    def dense(self) -> np.ndarray:
        """Dense table ``C[i, j]`` of the coefficient of ``z^i w^j``."""
        table = np.zeros((self.deg_z + 1, self.deg_w + 1), dtype=complex)
        for (i, j), c in self.coeffs.items():
            table[i, j] = c
        return table

    @cached_property
    def is_gaussian_integer(self) -> bool:
        return all(_is_gaussian_integer(c) for c in self.coeffs.values())

    def coefficient_in_w(self, j: int) -> UniPoly:
        """Polynomial in z multiplying ``w^j``."""
        if j < 0 or j > self.deg_w:
            return UniPoly((0j,))
        return UniPoly(tuple(self.dense[:, j]))

    def coeffs_in_w(self, z: complex) -> np.ndarray:
        """Coefficients of F(., z) in ascending powers of w."""
        return npoly.polyval(z, self.dense)

    def specialize(self, z: complex) -> UniPoly:
        return UniPoly(tuple(self.coeffs_in_w(z)))

    def __call__(self, w: complex | np.ndarray, z: complex | np.ndarray) -> complex | np.ndarray:
        z_arr, w_arr = np.broadcast_arrays(np.asarray(z, dtype=complex), np.asarray(w, dtype=complex))
        value = npoly.polyval2d(z_arr, w_arr, self.dense)
        return complex(value) if np.ndim(value) == 0 else value

    def abs_scale(self, w: complex | np.ndarray, z: complex | np.ndarray) -> float | np.ndarray:
        """``sum |c_ij| |z|^i |w|^j``, used to make residuals relative."""
        z_arr, w_arr = np.broadcast_arrays(np.abs(z), np.abs(w))
        value = npoly.polyval2d(z_arr, w_arr, np.abs(self.dense))
        return float(value) if np.ndim(value) == 0 else value

    def _from_dense(self, table: np.ndarray) -> dict[tuple[int, int], complex]:
        return {(i, j): table[i, j] for i in range(table.shape[0]) for j in range(table.shape[1]) if table[i, j] != 0}

    def diff_w(self) -> BivariatePoly:
        """Partial derivative in w (may drop to degree 0 in w, so returned as a mapping-backed poly)."""
        return _PartialPoly(self._from_dense(npoly.polyder(self.dense, axis=1)))

    def diff_z(self) -> BivariatePoly:
        table = npoly.polyder(self.dense, axis=0) if self.deg_z > 0 else np.zeros((1, self.deg_w + 1), dtype=complex)
        return _PartialPoly(self._from_dense(table))

    def canonical_monomials(self) -> list[tuple[int, int, float, float]]:
        return [(i, j, c.real, c.imag) for (i, j), c in self.coeffs.items()]

    def to_sympy(self, z: sympy.Symbol, w: sympy.Symbol) -> sympy.Expr:
        return sum((_to_sympy_number(c) * z**i * w**j for (i, j), c in self.coeffs.items()), sympy.Integer(0))

    def __repr__(self) -> str:
        terms = " + ".join(f"({c})*z^{i}*w^{j}" for (i, j), c in self.coeffs.items())
        return f"BivariatePoly({terms})"


class _PartialPoly(BivariatePoly):
    """Derivative of a curve polynomial; allowed to be constant in w."""

    def __post_init__(self) -> None:
        cleaned = {(i, j): complex(c) for (i, j), c in self.coeffs.items() if c != 0}
        object.__setattr__(self, "coeffs", dict(sorted(cleaned.items())) or {(0, 0): 0j})

    @cached_property
    def deg_w(self) -> int:
        return max(j for _, j in self.coeffs)


@dataclass(frozen=True)
class RootCluster:
    """A root location with multiplicity; ``radius`` is the merge tolerance used."""

    center: complex
    multiplicity: int
    radius: float


# ======================
# Aberth-Ehrlich solver
# ======================

def _fujiwara_bound(monic: np.ndarray) -> float:
    m = len(monic) - 1
    terms = [abs(monic[m - k]) ** (1.0 / k) for k in range(1, m)]
    terms.append(abs(monic[0] / 2.0) ** (1.0 / m))
    return 2.0 * max(terms)


def _aberth(coeffs: np.ndarray, tol: float, max_iterations: int) -> np.ndarray:
    """Simultaneous root iteration on a polynomial with nonzero constant term."""
    m = len(coeffs) - 1
    monic = coeffs / coeffs[-1]
    if m == 1:
        return np.array([-monic[0]])

    dmonic = npoly.polyder(monic)
    radius = _fujiwara_bound(monic)
    angles = 2.0 * np.pi * np.arange(m) / m + 0.4
    z = radius * np.exp(1j * angles) * (1.0 + 0.01 * np.arange(m) / m)

    off_diag = ~np.eye(m, dtype=bool)
    for iteration in range(max_iterations):
        pz = npoly.polyval(z, monic)
        dpz = npoly.polyval(z, dmonic)
        scale = npoly.polyval(np.abs(z), np.abs(monic))
        if np.all(np.abs(pz) <= 4.0 * _EPS * scale):
            logger.debug(f"Aberth converged on backward error after {iteration} iterations (degree {m})")
            return z

        diff = z[:, None] - z[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = np.where(off_diag, 1.0 / np.where(off_diag, diff, 1.0), 0.0)
            s = inv.sum(axis=1)
            ratio = pz / dpz
            step = ratio / (1.0 - ratio * s)
        bad = ~np.isfinite(step)
        if np.any(bad):
            step[bad] = 1e-3 * (1.0 + np.abs(z[bad])) * np.exp(1j * (iteration + 1.0))
        z = z - step
        if np.all(np.abs(step) <= 4.0 * _EPS * np.maximum(1.0, np.abs(z))):
            logger.debug(f"Aberth converged on step size after {iteration} iterations (degree {m})")
            return z

    residual = float(np.max(np.abs(npoly.polyval(z, monic)) / npoly.polyval(np.abs(z), np.abs(monic))))
    if residual <= tol:
        return z
    raise NumericalError(
        f"Root finder did not converge after {max_iterations} iterations",
        residual=residual,
        diagnostics={"degree": m},
    )


def _cluster(points: np.ndarray, cluster_tol: float) -> list[list[int]]:
    """Union-find grouping of points closer than ``cluster_tol * max(1, |z|)``."""
    parent = list(range(len(points)))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a in range(len(points)):
        for b in range(a + 1, len(points)):
            reach = cluster_tol * max(1.0, abs(points[a]), abs(points[b]))
            if abs(points[a] - points[b]) < reach:
                parent[find(a)] = find(b)

    groups: dict[int, list[int]] = {}
    for a in range(len(points)):
        groups.setdefault(find(a), []).append(a)
    return list(groups.values())


def _refine_center(p: UniPoly, center: complex, multiplicity: int) -> complex:
    """Newton on p^(m-1), which has a simple root at an m-fold root of p."""
    q = p.derivative(multiplicity - 1)
    dq = q.derivative()
    best, best_val = center, abs(q(center))
    z = center
    for _ in range(8):
        d = dq(z)
        if d == 0:
            break
        z = z - q(z) / d
        val = abs(q(z))
        if val < best_val:
            best, best_val = z, val
        else:
            break
    return complex(best)


def _float_roots(p: UniPoly, tol: float, cluster_tol: float, max_iterations: int) -> list[RootCluster]:
    coeffs = p.array
    zero_mult = 0
    while zero_mult < p.degree and coeffs[zero_mult] == 0:
        zero_mult += 1

    clusters: list[RootCluster] = []
    if zero_mult:
        clusters.append(RootCluster(0j, zero_mult, cluster_tol))

    reduced = coeffs[zero_mult:]
    if len(reduced) <= 1:
        return clusters

    found = _aberth(reduced, tol, max_iterations)
    for group in _cluster(found, cluster_tol):
        center = complex(np.mean(found[group]))
        if len(group) > 1:
            center = _refine_center(p, center, len(group))
        clusters.append(RootCluster(center, len(group), cluster_tol))
    return clusters


def squarefree_roots(
    p: UniPoly,
    tol: float = 1e-10,
    cluster_tol: float = 1e-6,
    max_iterations: int = 500
) -> list[RootCluster]:
    """Roots of an integer polynomial via exact square-free decomposition.

    Multiplicities come from sympy's ``sqf_list``; each square-free factor is
    then solved numerically and has only simple roots.

    Raises:
        DomainError: If ``p`` is zero or has non-integer coefficients.
    """
    if p.is_zero:
        raise DomainError("Cannot find roots of the zero polynomial")
    if not p.is_integer:
        raise DomainError("Square-free decomposition needs integer coefficients")

    x = sympy.Symbol("x")
    _, factors = sympy.Poly(p.to_sympy(x), x).sqf_list()

    clusters: list[RootCluster] = []
    for factor, multiplicity in factors:
        q = UniPoly(tuple(complex(c) for c in reversed(factor.all_coeffs())))
        for simple in _float_roots(q, tol, cluster_tol, max_iterations):
            clusters.append(RootCluster(simple.center, simple.multiplicity * multiplicity, cluster_tol))
    return clusters


def roots(
    p: UniPoly,
    tol: float = 1e-10,
    cluster_tol: float = 1e-6,
    max_iterations: int = 500,
    exact: bool | None = None
) -> list[RootCluster]:
    """Find all roots of ``p`` grouped into clusters with multiplicities.

    Args:
        p: Polynomial to solve.
        tol: Relative residual accepted if the iteration stalls.
        cluster_tol: Merge distance, scaled by ``max(1, |z|)``.
        max_iterations: Cap on simultaneous iterations.
        exact: Use exact square-free decomposition first; defaults to True for
            integer coefficients.

    Returns:
        Clusters whose multiplicities sum to ``p.degree``.

    Raises:
        DomainError: If ``p`` is identically zero.
        NumericalError: If the iteration fails to converge.
    """
    if p.is_zero:
        raise DomainError("Cannot find roots of the zero polynomial")
    if p.degree == 0:
        return []

    use_exact = p.is_integer if exact is None else exact
    if use_exact:
        return squarefree_roots(p, tol, cluster_tol, max_iterations)
    return _float_roots(p, tol, cluster_tol, max_iterations)


def expand_roots(clusters: Iterable[RootCluster]) -> list[complex]:
    """List cluster centers repeated by multiplicity."""
    return [c.center for c in clusters for _ in range(c.multiplicity)]


# ============================
# Sylvester matrix, resultants
# ============================

def _check_nonzero(*polys: UniPoly) -> None:
    for p in polys:
        if p.is_zero:
            raise DomainError("Resultant undefined for the zero polynomial")


def sylvester(f: UniPoly, g: UniPoly) -> np.ndarray:
    """Sylvester matrix: deg g rows of shifted f coefficients, then deg f rows of g.

    Rows hold coefficients in descending powers, as in the textbook layout.
    """
    _check_nonzero(f, g)
    m, n = f.degree, g.degree
    size = m + n
    matrix = np.zeros((size, size), dtype=complex)
    a = f.array[::-1]
    b = g.array[::-1]
    for r in range(n):
        matrix[r, r:r + m + 1] = a
    for r in range(m):
        matrix[n + r, r:r + n + 1] = b
    return matrix


def resultant_exact(f: UniPoly, g: UniPoly) -> sympy.Expr:
    """Fraction-free (Bareiss) determinant of the Sylvester matrix over Z[i]."""
    _check_nonzero(f, g)
    if not (f.is_gaussian_integer and g.is_gaussian_integer):
        raise DomainError("Exact resultant needs Gaussian-integer coefficients")
    matrix = sylvester(f, g)
    if matrix.shape[0] == 0:
        return sympy.Integer(1)
    exact = sympy.Matrix(matrix.shape[0], matrix.shape[1], lambda r, c: _to_sympy_number(matrix[r, c]))
    return sympy.expand(exact.det(method="bareiss"))


def resultant(f: UniPoly, g: UniPoly, exact: bool | None = None) -> complex:
    """Determinant of :func:`sylvester` (LU with partial pivoting, or exact).

    Args:
        f: First polynomial.
        g: Second polynomial.
        exact: Force or forbid the exact path; by default it is used when all
            coefficients are Gaussian integers.

    Returns:
        Rés(f, g) as a complex number.
    """
    _check_nonzero(f, g)
    use_exact = (f.is_gaussian_integer and g.is_gaussian_integer) if exact is None else exact
    if use_exact:
        return complex(resultant_exact(f, g))

    matrix = sylvester(f, g)
    if matrix.shape[0] == 0:
        return 1.0 + 0j
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(matrix)
    swaps = int(np.count_nonzero(piv != np.arange(len(piv))))
    det = np.prod(np.diag(lu))
    return complex(-det if swaps % 2 else det)


def resultant_from_roots(f: UniPoly, g: UniPoly) -> complex:
    """``a0^n b0^m prod (alpha_k - beta_j)`` with a0, b0 the leading coefficients."""
    _check_nonzero(f, g)
    m, n = f.degree, g.degree
    alphas = np.array(expand_roots(roots(f)), dtype=complex)
    betas = np.array(expand_roots(roots(g)), dtype=complex)
    product = np.prod(alphas[:, None] - betas[None, :]) if m and n else 1.0
    return complex(f.leading**n * g.leading**m * product)


def resultant_via_f_roots(f: UniPoly, g: UniPoly) -> complex:
    """``a0^n prod g(alpha_k)``."""
    _check_nonzero(f, g)
    alphas = np.array(expand_roots(roots(f)), dtype=complex)
    return complex(f.leading**g.degree * np.prod(g(alphas)))


def resultant_via_g_roots(f: UniPoly, g: UniPoly) -> complex:
    """``(-1)^(mn) b0^m prod f(beta_j)``."""
    _check_nonzero(f, g)
    m, n = f.degree, g.degree
    betas = np.array(expand_roots(roots(g)), dtype=complex)
    return complex((-1) ** (m * n) * g.leading**m * np.prod(f(betas)))


def _discriminant_sign(m: int) -> int:
    return -1 if (m * (m - 1) // 2) % 2 else 1


def discriminant_exact(f: UniPoly) -> sympy.Expr:
    """Exact discriminant from ``Rés(f, f') = (-1)^(m(m-1)/2) a0 Disc(f)``."""
    if f.is_zero or f.degree < 1:
        raise DomainError("Discriminant needs a polynomial of degree at least 1")
    a0 = _to_sympy_number(f.leading)
    return sympy.simplify(_discriminant_sign(f.degree) * resultant_exact(f, f.derivative()) / a0)


def discriminant(f: UniPoly, exact: bool | None = None) -> complex:
    """Disc(f) solved from the resultant of f and its derivative.

    Raises:
        DomainError: If ``f`` is constant.
    """
    if f.is_zero or f.degree < 1:
        raise DomainError("Discriminant needs a polynomial of degree at least 1")
    use_exact = f.is_gaussian_integer if exact is None else exact
    if use_exact:
        return complex(discriminant_exact(f))
    return _discriminant_sign(f.degree) * resultant(f, f.derivative(), exact=False) / f.leading


# ==========================================
# Resultant in w of two bivariate polynomials
# ==========================================

def _trim(p: np.ndarray, tol: float) -> np.ndarray:
    p = np.asarray(p, dtype=complex).ravel()
    k = p.size - 1
    while k > 0 and abs(p[k]) <= tol:
        k -= 1
    return p[:k + 1].copy() if p.size else np.zeros(1, dtype=complex)


def _is_zero(p: np.ndarray, tol: float) -> bool:
    p = _trim(p, tol)
    return p.size == 1 and abs(p[0]) <= tol


def _det_bareiss_poly(entries: list[list[np.ndarray]], tol: float) -> np.ndarray:
    """Fraction-free elimination on a matrix of polynomials in z."""
    size = len(entries)
    if size == 0:
        return np.ones(1, dtype=complex)
    a = [[_trim(entries[r][c], tol) for c in range(size)] for r in range(size)]
    denom = np.ones(1, dtype=complex)
    sign = 1.0

    for k in range(size - 1):
        if _is_zero(a[k][k], tol):
            pivot_row = next((r for r in range(k + 1, size) if not _is_zero(a[r][k], tol)), None)
            if pivot_row is None:
                return np.zeros(1, dtype=complex)
            a[k], a[pivot_row] = a[pivot_row], a[k]
            sign = -sign
        pivot = a[k][k]
        for r in range(k + 1, size):
            for c in range(k + 1, size):
                num = npoly.polysub(npoly.polymul(a[r][c], pivot), npoly.polymul(a[r][k], a[k][c]))
                if k > 0:
                    quotient, _ = npoly.polydiv(_trim(num, tol), _trim(denom, tol))
                    a[r][c] = _trim(quotient, tol)
                else:
                    a[r][c] = _trim(num, tol)
        denom = pivot

    return _trim(sign * a[size - 1][size - 1], tol)


def resultant_poly_in_z(f: BivariatePoly, g: BivariatePoly, tol: float = 1e-13) -> UniPoly:
    """Rés_w(f, g) as a polynomial in z.

    Exact through sympy for Gaussian-integer inputs; otherwise Bareiss
    elimination on the Sylvester matrix whose entries are polynomials in z.
    """
    if f.is_gaussian_integer and g.is_gaussian_integer:
        z, w = sympy.symbols("z w")
        res = sympy.resultant(f.to_sympy(z, w), g.to_sympy(z, w), w)
        res = sympy.expand(res)
        if res == 0:
            return UniPoly((0j,))
        return UniPoly.from_sympy(res, z)

    m, n = f.deg_w, g.deg_w
    size = m + n
    zero = np.zeros(1, dtype=complex)
    entries = [[zero for _ in range(size)] for _ in range(size)]
    a = [f.coefficient_in_w(m - k).array for k in range(m + 1)]
    b = [g.coefficient_in_w(n - k).array for k in range(n + 1)]
    for r in range(n):
        for k in range(m + 1):
            entries[r][r + k] = a[k]
    for r in range(m):
        for k in range(n + 1):
            entries[n + r][r + k] = b[k]

    scale = max(float(np.max(np.abs(f.dense))), float(np.max(np.abs(g.dense))), 1.0)
    return UniPoly(tuple(_det_bareiss_poly(entries, tol * scale)))


def polynomial_scale(p: UniPoly) -> float:
    """Euclidean norm of the coefficient vector (Hadamard-type scale)."""
    return float(math.sqrt(sum(abs(c) ** 2 for c in p.coeffs)))
