import math

import numpy as np
import pytest
from scipy.integrate import quad

from diracvac.errors import ConfigError, MatchingError
from diracvac.spectral_basis import (
    BoxParams, boundary_defect, build_basis, completeness_defect, dispersion_function,
    dispersion_roots, eigen_residual, gram_matrix, lattice_spectrum, orthonormality_defect,
    root_count_audit, spectral_symmetry_defect, verify_spectrum_lattice, _match,
)


def test_massless_energies_closed_form():
    basis = build_basis(BoxParams(1.0, 0.0), 3)
    assert basis.energy(1) == pytest.approx(math.pi / 4, abs=1e-14)
    assert basis.energy(2) == pytest.approx(3 * math.pi / 4, abs=1e-14)
    assert basis.energy(3) == pytest.approx(5 * math.pi / 4, abs=1e-14)
    assert basis.energy(-1) == pytest.approx(-math.pi / 4, abs=1e-14)


@pytest.mark.parametrize("a", [0.5, 1.0, 3.0])
def test_massless_roots_any_width(a):
    ks = dispersion_roots(BoxParams(a, 0.0), 20)
    expected = (2 * np.arange(1, 21) - 1) * math.pi / (4 * a)
    np.testing.assert_allclose(ks, expected, rtol=1e-14)


def _bisect_roots(a, m, count):
    # plain sign scan plus bisection on the untransformed dispersion relation
    f = lambda k: k * math.cos(2 * a * k) + m * math.sin(2 * a * k)
    grid = np.linspace(1e-9, (count + 2) * math.pi / (2 * a), 200 * (count + 2))
    vals = [f(k) for k in grid]
    roots = []
    for lo, hi, flo, fhi in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if flo == 0:
            roots.append(lo)
        elif flo * fhi < 0:
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if f(lo) * f(mid) <= 0:
                    hi = mid
                else:
                    lo = mid
            roots.append(0.5 * (lo + hi))
    return np.array(roots[:count])


@pytest.mark.parametrize("m", [0.3, 1.0, 7.5])
def test_massive_roots_against_bisection(m):
    ks = dispersion_roots(BoxParams(1.0, m), 10)
    np.testing.assert_allclose(ks, _bisect_roots(1.0, m, 10), rtol=1e-12)
    assert np.max(np.abs(dispersion_function(BoxParams(1.0, m), ks))) < 1e-12 * (1 + m)


@pytest.mark.parametrize("m", [0.0, 0.5, 4.0])
def test_roots_lie_in_their_brackets(m):
    a = 1.0
    ks = dispersion_roots(BoxParams(a, m), 30)
    j = np.arange(1, 31)
    assert np.all(ks >= (2 * j - 1) * math.pi / (4 * a) - 1e-14)
    assert np.all(ks <= j * math.pi / (2 * a) + 1e-14)


@pytest.mark.parametrize("m", [0.0, 1.0, 10.0])
def test_root_count_audit(m):
    changes, found = root_count_audit(BoxParams(1.0, m), 40.0)
    assert changes == found


@pytest.mark.parametrize("m", [0.0, 1.0])
def test_orthonormality(basis_cache, m):
    assert orthonormality_defect(basis_cache(m, 40)) < 1e-12


def test_orthonormality_against_scipy_quad(basis_cache):
    basis = basis_cache(1.0, 8)
    for m, n in [(1, 1), (-3, -3), (2, -2), (1, 5), (-4, 7)]:
        f = lambda y: np.sum(np.conj(basis[m](np.array([y]))) * basis[n](np.array([y]))).real
        val = quad(f, -1, 1, epsabs=1e-14, limit=200)[0]
        assert val == pytest.approx(1.0 if m == n else 0.0, abs=1e-12)


def test_gram_matrix_is_identity_shape(basis_cache):
    g = gram_matrix(basis_cache(0.0, 4), [-2, 1, 3])
    assert g.shape == (3, 3)


@pytest.mark.parametrize("m", [0.0, 1.0, 5.0])
def test_eigen_residual_and_boundary(basis_cache, m):
    basis = basis_cache(m, 12)
    for n in basis.indices:
        assert eigen_residual(basis, n) < 1e-10
        assert boundary_defect(basis, n) < 1e-12


def test_spectrum_is_symmetric(basis_cache):
    for m in (0.0, 1.0, 3.0):
        assert spectral_symmetry_defect(basis_cache(m, 20)) < 1e-13


def test_energy_relation_massive(basis_cache):
    basis = basis_cache(1.0, 6)
    for n in basis.indices:
        assert abs(basis.energy(n)) == pytest.approx(math.hypot(basis[n].momentum, 1.0), rel=1e-15)


def test_completeness_improves_with_cutoff(basis_cache):
    basis = basis_cache(0.0, 40)
    f = lambda y: np.cos(np.pi * y / 2)
    defects = [completeness_defect(basis, M, f, bandwidth=np.pi / 2) for M in (5, 10, 20, 40)]
    assert all(b < a for a, b in zip(defects, defects[1:]))


def test_completeness_exact_for_basis_member(basis_cache):
    basis = basis_cache(1.0, 10)
    assert completeness_defect(basis, 3, lambda y: basis[2](y)) < 1e-12


@pytest.mark.parametrize("kwargs", [dict(a=0.0), dict(a=-1.0), dict(m=-0.1), dict(a=float("nan"))])
def test_invalid_box(kwargs):
    with pytest.raises(ConfigError):
        BoxParams(**kwargs)


def test_invalid_basis_size():
    with pytest.raises(ConfigError):
        build_basis(BoxParams(), 0)


def test_completeness_cutoff_bounds(basis_cache):
    with pytest.raises(ConfigError):
        completeness_defect(basis_cache(0.0, 4), 5, np.cos)


def test_unknown_mode_raises(basis_cache):
    with pytest.raises(KeyError):
        basis_cache(0.0, 3)[4]


# --------------------------------------------------------------------------- #
#                                lattice oracle                                #
# --------------------------------------------------------------------------- #

@pytest.mark.parametrize("m", [0.0, 1.0])
def test_lattice_second_order_convergence(m):
    rep = verify_spectrum_lattice(BoxParams(1.0, m), 3, (200, 400, 800))
    err = rep.max_discrepancy
    assert rep.converging
    assert err[1] < 1e-3
    # halving h should cut the error by about four
    assert 3.5 < err[0] / err[1] < 4.5 and 3.5 < err[1] / err[2] < 4.5
    assert rep.max_extrapolated < 1e-8


def test_lattice_spectrum_symmetric_and_sorted():
    lat = lattice_spectrum(BoxParams(1.0, 0.7), 300, 5)
    assert np.all(np.diff(lat) > 0)
    np.testing.assert_allclose(lat, -lat[::-1], atol=1e-12)


def test_lattice_single_grid():
    rep = verify_spectrum_lattice(BoxParams(), 2, (400,))
    assert rep.extrapolated is None and rep.max_extrapolated is None
    assert rep.max_discrepancy[0] < 1e-3


def test_lattice_rejects_coarse_grid():
    with pytest.raises(ConfigError):
        lattice_spectrum(BoxParams(), 5, 5)
    with pytest.raises(ConfigError):
        verify_spectrum_lattice(BoxParams(), 2, ())


def test_match_rejects_ambiguous():
    with pytest.raises(MatchingError):
        _match(np.array([1.0, 2.0]), np.array([0.9, 1.1, 2.0]))
