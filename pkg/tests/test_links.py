"""
Tests for the link families and the scalar minimiser.
"""

import math

import numpy as np
import pytest

from app.exceptions import ConfigError, RangeError
from app.models.links import FAMILIES, LinkFamily, RangeInterval

LINKS = [
    LinkFamily("A1"),
    LinkFamily("A2"),
    LinkFamily("A3"),
    LinkFamily("B1", a=0.5),
    LinkFamily("B2", a=-1.0),
    LinkFamily("C1", a=-0.5, b=2.0),
    LinkFamily("C2", a=0.2, b=1.0),
]


def _random_targets(link: LinkFamily, rng: np.random.Generator, n: int = 100) -> np.ndarray:
    if link.family_id.startswith("A"):
        return rng.uniform(-5.0, 5.0, n)
    if link.family_id.startswith("B"):
        return rng.uniform(link.a + 0.05, link.a + 10.0, n)
    width = link.b - link.a
    return rng.uniform(link.a + 0.05 * width, link.b - 0.05 * width, n)


def test_omega_examples():
    """Test omega at the documented points."""
    assert LinkFamily("A1").omega(0.0) == 0.0
    assert LinkFamily("C1", a=0.0, b=1.0).omega(0.0) == pytest.approx(0.5)
    assert LinkFamily("A2").omega(1.0) == pytest.approx(1.175201, abs=1e-6)


def test_rho_examples():
    """Test rho at the documented points."""
    assert LinkFamily("A1").rho(7.0) == -1.0
    assert LinkFamily("A2").rho(0.0) == -1.0
    assert LinkFamily("B1", a=0.0).rho(0.0) == pytest.approx(-0.5)


def test_phi_psi_examples():
    """Test phi and psi closed forms."""
    a1 = LinkFamily("A1")
    assert a1.phi(2.0) == pytest.approx(2.0)
    assert a1.psi(2.0) == pytest.approx(-2.0)
    assert LinkFamily("A3").phi(0.0) == pytest.approx(4.0)
    assert LinkFamily("C1", a=0.0, b=1.0).psi(0.0) == pytest.approx(-math.log(2.0))


def test_sign_at_zero_keeps_a2_a3_continuous():
    """Test that A2 and A3 vanish at zero."""
    for fid in ("A2", "A3"):
        link = LinkFamily(fid)
        assert link.omega(0.0) == 0.0
        assert link.psi(0.0) == 0.0


def test_functions_are_vectorised():
    """Test that array inputs give array outputs of the same shape."""
    z = np.linspace(-3.0, 3.0, 7)
    for link in LINKS:
        for fn in (link.omega, link.rho, link.phi, link.psi):
            assert np.asarray(fn(z)).shape == z.shape


def test_ranges():
    """Test the range of each family."""
    assert LinkFamily("A2").range() == RangeInterval(-math.inf, math.inf)
    assert LinkFamily("B2", a=3.0).range() == RangeInterval(3.0, math.inf)
    assert LinkFamily("C1", a=0.2, b=1.0).range() == RangeInterval(0.2, 1.0)


def test_range_interval_contains():
    """Test open and closed endpoint handling."""
    open_interval = RangeInterval(0.0, 1.0)
    closed = RangeInterval(0.0, 1.0, lower_closed=True, upper_closed=True)
    assert not open_interval.contains(0.0)
    assert open_interval.contains(0.5)
    assert closed.contains(0.0) and closed.contains(1.0)
    assert open_interval.closure_contains(1.0)


def test_range_interval_rejects_empty():
    """Test that lower < upper is enforced."""
    with pytest.raises(ConfigError):
        RangeInterval(1.0, 1.0)


def test_closure_contains_interval():
    """Test closure checks used by the fixed-point trainers."""
    c1 = LinkFamily("C1", a=0.2, b=1.0)
    assert c1.closure_contains(0.2, 1.0)
    assert not c1.closure_contains(0.1, 1.0)
    assert LinkFamily("C1", a=1.0, b=5.0).closure_contains(0.2 / (1 - 0.8), 1.0 / (1 - 0.8))
    assert LinkFamily("A1").closure_contains(-1e9, 1e9)


def test_from_string():
    """Test parsing of ID[:a[:b]]."""
    link = LinkFamily.from_string("C1:-0.01:1.01")
    assert (link.family_id, link.a, link.b) == ("C1", -0.01, 1.01)
    assert LinkFamily.from_string("b1:0") == LinkFamily("B1", a=0.0)
    assert LinkFamily.from_string(link.spec()) == link


@pytest.mark.parametrize("text", ["Z9", "C1:1:0", "A1:x", "C1:0:1:2"])
def test_from_string_rejects_malformed(text):
    """Test that malformed link specs raise ConfigError."""
    with pytest.raises(ConfigError):
        LinkFamily.from_string(text)


def test_scalar_minimizer_examples():
    """Test the documented minimiser values."""
    assert LinkFamily("A1").scalar_minimizer(0.7) == pytest.approx(0.7, abs=1e-10)
    assert LinkFamily("B1", a=0.0).scalar_minimizer(2.0) == pytest.approx(math.log(2.0), abs=1e-9)
    assert LinkFamily("C1", a=0.0, b=1.0).scalar_minimizer(0.5) == pytest.approx(0.0, abs=1e-10)


@pytest.mark.parametrize("link,r", [
    (LinkFamily("B1", a=0.0), -1.0),
    (LinkFamily("B2", a=0.0), 0.0),
    (LinkFamily("C1", a=0.2, b=1.0), 1.0),
    (LinkFamily("C2", a=0.0, b=1.0), 2.0),
])
def test_scalar_minimizer_rejects_out_of_range(link, r):
    """Test RangeError outside the open range."""
    with pytest.raises(RangeError):
        link.scalar_minimizer(r)


@pytest.mark.parametrize("link", LINKS, ids=FAMILIES)
def test_derivative_identities(link):
    """Test phi' = -omega*rho and psi' = rho by central differences."""
    z = np.linspace(-5.0, 5.0, 40)
    h = 1e-6
    d_phi = (link.phi(z + h) - link.phi(z - h)) / (2 * h)
    d_psi = (link.psi(z + h) - link.psi(z - h)) / (2 * h)
    omega_rho = link.omega(z) * link.rho(z)
    rho = link.rho(z)
    assert np.all(np.abs(d_phi + omega_rho) <= 1e-5 * (1 + np.abs(omega_rho)))
    assert np.all(np.abs(d_psi - rho) <= 1e-5 * (1 + np.abs(rho)))


@pytest.mark.parametrize("link", LINKS, ids=FAMILIES)
def test_monotone_omega_negative_rho(link):
    """Test that omega is strictly increasing and rho strictly negative on [-20, 20]."""
    z = np.linspace(-20.0, 20.0, 10001)
    assert np.all(np.diff(link.omega(z)) > 0)
    assert np.all(link.rho(z) < 0)


@pytest.mark.parametrize("link", LINKS, ids=FAMILIES)
def test_minimizer_matches_brute_force(link):
    """Test the minimiser against a 1e-4 grid search of phi + r*psi."""
    rng = np.random.default_rng(7)
    offsets = np.arange(-10000, 10001) * 1e-4
    for r in _random_targets(link, rng):
        u_star = link.scalar_minimizer(r)
        assert abs(link.omega(u_star) - r) <= 1e-6
        grid = u_star + offsets
        best = grid[np.argmin(link.cost(grid, r))]
        assert abs(best - u_star) <= 1e-4 + 1e-12
