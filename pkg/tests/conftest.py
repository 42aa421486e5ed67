from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Callable

import numpy as np
import pytest

from riemann_surfaces_ex.services.curve import Curve
from riemann_surfaces_ex.services.polycore import BivariatePoly, UniPoly


def hyperelliptic(coeffs: list[complex]) -> Curve:
    """``w^2 = p(z)`` with p given in ascending powers."""
    return Curve.hyperelliptic(UniPoly(tuple(coeffs)))


def from_roots(roots: list[complex]) -> Curve:
    return Curve.hyperelliptic(UniPoly.from_roots(roots))


def fermat(n: int) -> Curve:
    """``w^n + z^n - 1``."""
    return Curve(BivariatePoly.from_monomials([(0, n, 1, 0), (n, 0, 1, 0), (0, 0, -1, 0)]))


def random_separated_roots(rng: np.random.Generator, count: int, radius: float = 2.0, separation: float = 0.4) -> list[complex]:
    """Roots in a disk, pairwise at least ``separation`` apart."""
    roots: list[complex] = []
    while len(roots) < count:
        z = complex(*(radius * rng.uniform(-1, 1, 2)))
        if abs(z) <= radius and all(abs(z - other) >= separation for other in roots):
            roots.append(z)
    return roots


@pytest.fixture(scope="session")
def elliptic_curve() -> Curve:
    """``w^2 = z (z - 1) (z - 2)``."""
    return hyperelliptic([0, 2, -3, 1])


@pytest.fixture(scope="session")
def legendre_curve() -> Curve:
    """``w^2 = z (z - 1) (z - 1/2)``."""
    return from_roots([0, 1, 0.5])


@pytest.fixture(scope="session")
def genus2_curve() -> Curve:
    """``w^2 = z^5 - 1``."""
    return hyperelliptic([-1, 0, 0, 0, 0, 1])


@pytest.fixture(scope="session")
def even_genus2_curve() -> Curve:
    """``w^2 = p_6(z)`` with six distinct roots and two points at infinity."""
    return from_roots([-2, -1, -0.5 + 1j, 0.5 - 1j, 1.5, 2.5 + 0.5j])


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def write_json(tmp_path: Path) -> Callable[[str, dict[str, Any]], Path]:
    """Write a JSON input file into the test's temporary directory."""

    def write(name: str, payload: dict[str, Any]) -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(payload))
        return path

    return write
