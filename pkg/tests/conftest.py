import numpy as np
import pytest

from diracvac.potentials import ChiSpec, make_gauge_potential, make_general_potential
from diracvac.spectral_basis import BoxParams, build_basis

# gauge functions vanishing at both walls, mixing smooth, steep and odd/even shapes
CHI_CORPUS = (
    ChiSpec("sine_series", (1.0,)),
    ChiSpec("sine_series", (0.3, -0.7, 0.2)),
    ChiSpec("sine_series", (0.0, 0.0, 0.0, 0.0, 1.5)),
    ChiSpec("bump_polynomial", (1.0,)),
    ChiSpec("bump_polynomial", (0.2, 1.0, -0.5)),
)

MASSES = (0.0, 1.0)


@pytest.fixture(scope="session")
def basis_cache():
    cache = {}

    def get(m=0.0, n_max=8, a=1.0):
        key = (a, m, n_max)
        if key not in cache:
            cache[key] = build_basis(BoxParams(a, m), n_max)
        return cache[key]

    return get


def gauge(spec, a=1.0, m=0.0):
    return make_gauge_potential(spec, BoxParams(a, m))


def well_plus_field(m=0.0, a=1.0, slope=0.5):
    """Step well in A_0 plus a linear A_y; a generic non-gauge perturbation."""
    return make_general_potential(
        BoxParams(a, m), A0={"family": "step_well", "depth": 1.0}, Ay={"family": "linear", "slope": slope}
    )


def quad_element(basis, pot, m, n, points=None):
    """``<phi_m|V|phi_n>`` by scipy adaptive quadrature, independent of the package rule."""
    from scipy.integrate import quad

    a = basis.params.a

    def integrand(y, part):
        v = pot.apply(basis[n](np.array([y])), np.array([y]))
        val = np.sum(np.conj(basis[m](np.array([y]))) * v)
        return val.real if part == 0 else val.imag

    opts = dict(limit=400, epsabs=1e-14, epsrel=1e-12)
    if points:
        opts["points"] = points
    re = quad(integrand, -a, a, args=(0,), **opts)[0]
    im = quad(integrand, -a, a, args=(1,), **opts)[0]
    return re + 1j * im


ACCEPTANCE_LOG = []


def record_acceptance(number, ok, detail):
    line = f"ACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE_LOG.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LOG:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LOG):
            terminalreporter.write_line(line)
