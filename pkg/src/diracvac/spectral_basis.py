"""Eigenbasis of the free confined Dirac Hamiltonian in 1+1 dimensions.

The free Hamiltonian is ``H0 = -i sigma_y d/dy + sigma_x m`` on ``|y| < a``.
Writing a spinor as ``(u, v)`` the eigenproblem reads::

    eps u = -v' + m v
    eps v =  u' + m u

Confinement uses the bag condition ``u(-a) = 0`` and ``v(+a) = 0``. With
``s = y + a`` every solution has ``u = A sin(k s)`` and
``v = A (k cos(k s) + m sin(k s)) / eps`` where ``eps = +-sqrt(k**2 + m**2)``
and ``k`` is a positive root of ``k cos(2 a k) + m sin(2 a k) = 0``. The
j-th root lies in ``[(2j - 1) pi / (4a), j pi / (2a)]``; for ``m = 0`` it is
the left end of that bracket.

Mode indices are signed: ``n > 0`` labels positive energies in increasing
order, ``n < 0`` negative energies in decreasing order, and modes ``n`` and
``-n`` share the same ``k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal
from scipy.optimize import brentq

from .errors import ConfigError, DegeneracyError, InvariantError, MatchingError, RootFindingError
from .quadrature import gauss_panels


@dataclass(frozen=True)
class BoxParams:
    """Box half-width ``a`` and fermion mass ``m`` (natural units)."""

    a: float = 1.0
    m: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.a) and self.a > 0):
            raise ConfigError(f"box half-width must be positive, got a={self.a}")
        if not (math.isfinite(self.m) and self.m >= 0):
            raise ConfigError(f"mass must be non-negative, got m={self.m}")

    @property
    def energy_scale(self):
        return max(1.0 / self.a, self.m)


@dataclass(frozen=True)
class Mode:
    """One eigenpair ``(eps_n, phi_n)``.

    Calling the mode on an array of positions returns a complex array of
    shape ``(2, *y.shape)`` holding the upper and lower spinor components.
    """

    index: int
    energy: float
    momentum: float
    amplitude: float
    params: BoxParams

    def _trig(self, y):
        s = np.asarray(y, dtype=float) + self.params.a
        return np.sin(self.momentum * s), np.cos(self.momentum * s)

    def __call__(self, y):
        sn, cs = self._trig(y)
        k, m, A = self.momentum, self.params.m, self.amplitude
        upper = A * sn
        lower = A * (k * cs + m * sn) / self.energy
        return np.array([upper, lower], dtype=complex)

    def derivative(self, y):
        """Analytic ``d phi / dy``."""
        sn, cs = self._trig(y)
        k, m, A = self.momentum, self.params.m, self.amplitude
        upper = A * k * cs
        lower = A * k * (m * cs - k * sn) / self.energy
        return np.array([upper, lower], dtype=complex)


@dataclass(frozen=True)
class Basis:
    params: BoxParams
    modes: dict = field(repr=False)

    @property
    def n_max(self):
        return max(self.modes)

    @property
    def indices(self):
        return sorted(self.modes)

    def __contains__(self, n):
        return n in self.modes

    def __getitem__(self, n) -> Mode:
        try:
            return self.modes[n]
        except KeyError:
            raise KeyError(f"mode {n} not in basis (n_max={self.n_max})") from None

    def energy(self, n):
        return self[n].energy

    def energies(self, indices):
        return np.array([self[n].energy for n in indices])

    def max_momentum(self, indices):
        return max(self[n].momentum for n in indices)

    def spinors(self, indices, y):
        """Stack of eigenfunctions, shape ``(len(indices), 2, len(y))``."""
        return np.stack([self[n](y) for n in indices]) if len(indices) else np.zeros((0, 2, len(y)), complex)

    def derivatives(self, indices, y):
        return np.stack([self[n].derivative(y) for n in indices])


def _bracket_function(j, params):
    # Dispersion relation rewritten around the left end of bracket j,
    # 2ak = (2j - 1) pi / 2 + t; the common sign (-1)**j is dropped. It is
    # -m at t = 0 and k > 0 at t = pi/2, with no cancellation for small m.
    a, m = params.a, params.m
    base = (2 * j - 1) * math.pi / 2

    def h(t):
        k = (base + t) / (2 * a)
        return k * math.sin(t) - m * math.cos(t)

    return h, base


def dispersion_roots(params: BoxParams, count: int) -> np.ndarray:
    """First ``count`` positive roots ``k_j`` of the bag dispersion relation."""
    roots = np.empty(count)
    for j in range(1, count + 1):
        h, base = _bracket_function(j, params)
        lo, hi = 0.0, math.pi / 2
        h_lo, h_hi = h(lo), h(hi)
        if h_lo > 0 or h_hi <= 0:
            raise RootFindingError(j)
        if h_lo == 0.0:
            t = 0.0
        else:
            t = brentq(h, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        roots[j - 1] = (base + t) / (2 * params.a)
    return roots


def dispersion_function(params: BoxParams, k):
    """``k cos(2ak) + m sin(2ak)``; zero exactly on the allowed momenta."""
    k = np.asarray(k, dtype=float)
    return k * np.cos(2 * params.a * k) + params.m * np.sin(2 * params.a * k)


def root_count_audit(params: BoxParams, k_max: float, oversample: int = 16):
    """Count sign changes of the dispersion function on ``(0, k_max]``.

    Returns ``(sign_changes, roots_found)`` where ``roots_found`` is the
    number of roots from :func:`dispersion_roots` below ``k_max``. The two
    agree when the bracket scan misses nothing.
    """
    step = math.pi / (4 * params.a) / oversample
    # offset keeps grid points off the massless roots
    grid = np.arange(step * 0.318309886, k_max, step)
    f = dispersion_function(params, grid)
    changes = int(np.count_nonzero(np.signbit(f[1:]) != np.signbit(f[:-1])))
    estimate = int(k_max * 2 * params.a / math.pi) + 2
    found = int(np.count_nonzero(dispersion_roots(params, estimate) < grid[-1]))
    return changes, found


def _amplitude(k, eps, params):
    a, m = params.a, params.m
    s4 = math.sin(4 * a * k) / (4 * k)
    ss = a - s4  # int sin^2
    cc = a + s4  # int cos^2
    sc = math.sin(2 * a * k) ** 2 / (2 * k)  # int sin cos
    norm2 = ss + (k * k * cc + m * m * ss + 2 * k * m * sc) / (eps * eps)
    return 1.0 / math.sqrt(norm2)


def build_basis(params: BoxParams, n_max: int) -> Basis:
    """Construct modes ``n = -n_max..-1, 1..n_max``.

    Raises
    ------
    RootFindingError
        If a dispersion bracket does not contain a sign change.
    DegeneracyError
        If two energies are closer than ``1e-9 * max(1/a, m)``.
    """
    if int(n_max) != n_max or n_max < 1:
        raise ConfigError(f"n_max must be a positive integer, got {n_max}")
    ks = dispersion_roots(params, int(n_max))
    modes = {}
    for j, k in enumerate(ks, start=1):
        e = math.hypot(k, params.m)
        for sign in (1, -1):
            eps = sign * e
            modes[sign * j] = Mode(sign * j, eps, float(k), _amplitude(k, eps, params), params)
    basis = Basis(params, modes)
    _check_ordering(basis)
    return basis


def _check_ordering(basis: Basis):
    idx = basis.indices
    for n in idx:
        if np.sign(basis.energy(n)) != np.sign(n):
            raise InvariantError(f"mode {n} has energy of the wrong sign")
    threshold = 1e-9 * basis.params.energy_scale
    # ascending index must mean ascending energy across the whole ladder
    for lo, hi in zip(idx[:-1], idx[1:]):
        gap = basis.energy(hi) - basis.energy(lo)
        if gap <= threshold:
            raise DegeneracyError((lo, hi), gap)


def apply_free_hamiltonian(psi, dpsi, m):
    """``H0 psi`` from a spinor and its derivative, both shaped ``(2, ...)``."""
    # -i sigma_y = [[0, -1], [1, 0]], sigma_x swaps components
    return np.array([-dpsi[1] + m * psi[1], dpsi[0] + m * psi[0]])


def check_grid(params: BoxParams, n_points: int = 2001):
    return np.linspace(-params.a, params.a, n_points)


def eigen_residual(basis: Basis, n: int, y=None) -> float:
    """Max pointwise norm of ``H0 phi_n - eps_n phi_n`` on a check grid."""
    mode = basis[n]
    y = check_grid(basis.params) if y is None else np.asarray(y, dtype=float)
    r = apply_free_hamiltonian(mode(y), mode.derivative(y), basis.params.m) - mode.energy * mode(y)
    return float(np.max(np.sqrt(np.sum(np.abs(r) ** 2, axis=0))))


def boundary_defect(basis: Basis, n: int) -> float:
    """``max(|u(-a)|, |v(+a)|)`` for mode ``n``."""
    a = basis.params.a
    mode = basis[n]
    return float(max(abs(mode(-a)[0]), abs(mode(a)[1])))


def gram_matrix(basis: Basis, indices: Sequence[int] | None = None) -> np.ndarray:
    indices = basis.indices if indices is None else list(indices)
    y, w = gauss_panels(basis.params.a, 2 * basis.max_momentum(indices))
    phi = basis.spinors(indices, y)
    return np.einsum("msn,ksn,n->mk", phi.conj(), phi, w)


def orthonormality_defect(basis: Basis, indices: Sequence[int] | None = None) -> float:
    """``max |<phi_m, phi_n> - delta_mn|`` over the given indices."""
    g = gram_matrix(basis, indices)
    return float(np.max(np.abs(g - np.eye(len(g)))))


def spectral_symmetry_defect(basis: Basis) -> float:
    """``max_n |eps_{-n} + eps_n|``, measured rather than assumed."""
    return float(max(abs(basis.energy(-n) + basis.energy(n)) for n in range(1, basis.n_max + 1)))


def completeness_defect(basis: Basis, cutoff: int, test_function: Callable, bandwidth: float = 0.0) -> float:
    """L2 norm of what the truncated basis fails to reproduce.

    ``test_function`` maps positions to either a scalar profile, which is
    placed in each spinor slot in turn, or a ``(2, len(y))`` spinor. The
    defects of the separate slot placements are added in quadrature.

    Parameters
    ----------
    cutoff : int
        Keep modes with ``0 < |m| <= cutoff``.
    bandwidth : float
        Largest wavenumber present in ``test_function``; sets the panel size.
    """
    if cutoff < 1 or cutoff > basis.n_max:
        raise ConfigError(f"cutoff {cutoff} outside 1..{basis.n_max}")
    indices = [n for n in basis.indices if abs(n) <= cutoff]
    y, w = gauss_panels(basis.params.a, 2 * (basis.max_momentum(indices) + bandwidth), refine=2)
    f = np.asarray(test_function(y), dtype=complex)
    if f.ndim == 1:
        slots = []
        for s in range(2):
            F = np.zeros((2, len(y)), complex)
            F[s] = f
            slots.append(F)
    else:
        slots = [f]
    phi = basis.spinors(indices, y)
    total = 0.0
    for F in slots:
        coeffs = np.einsum("man,an,n->m", phi.conj(), F, w)
        resid = F - np.einsum("m,man->an", coeffs, phi)
        total += float(np.sum(w * np.sum(np.abs(resid) ** 2, axis=0)))
    return math.sqrt(total)


# --------------------------------------------------------------------------- #
#                           lattice cross-check                                #
# --------------------------------------------------------------------------- #

def lattice_spacing(params: BoxParams, n_cells: int) -> float:
    return 2 * params.a / (n_cells + 0.5)


def lattice_spectrum(params: BoxParams, n_cells: int, count: int) -> np.ndarray:
    """The ``2 * count`` lattice eigenvalues of smallest magnitude, ascending.

    Staggered discretization: ``u`` sits on ``y = -a + i h`` (``i = 1..N``,
    ``u(-a) = 0`` built in), ``v`` on ``y = -a + (i - 1/2) h`` (``i = 1..N``)
    with ``h = 2a / (N + 1/2)`` so that ``v(+a) = 0`` falls on the next
    half-node. Interleaving ``v_1, u_1, v_2, u_2, ...`` makes the operator a
    zero-diagonal tridiagonal matrix with no doubler branch.
    """
    if n_cells < 2 * count + 2:
        raise ConfigError(f"grid of {n_cells} cells too coarse for {count} modes")
    h = lattice_spacing(params, n_cells)
    diag_b = 1.0 / h + params.m / 2  # couples v_i and u_i
    off_b = -1.0 / h + params.m / 2  # couples v_{i+1} and u_i
    off = np.empty(2 * n_cells - 1)
    off[0::2] = diag_b
    off[1::2] = off_b
    d = np.zeros(2 * n_cells)
    return eigvalsh_tridiagonal(
        d, off, select="i", select_range=(n_cells - count, n_cells + count - 1)
    )


@dataclass(frozen=True)
class LatticeReport:
    indices: tuple
    grid_sizes: tuple
    discrepancies: tuple  # one array per grid, aligned with indices
    extrapolated: np.ndarray | None  # Richardson on the last two grids

    @property
    def max_discrepancy(self):
        return tuple(float(np.max(np.abs(d))) for d in self.discrepancies)

    @property
    def max_extrapolated(self):
        return None if self.extrapolated is None else float(np.max(np.abs(self.extrapolated)))

    @property
    def converging(self):
        m = self.max_discrepancy
        return all(b < a for a, b in zip(m[:-1], m[1:]))


def _match(targets, lattice):
    ordered = np.sort(targets)
    gaps = np.diff(ordered)
    window = 0.5 * float(gaps.min()) if len(gaps) else 0.5 * abs(ordered[0])
    matched = np.empty(len(targets))
    for i, e in enumerate(targets):
        hits = lattice[np.abs(lattice - e) < window]
        if len(hits) != 1:
            raise MatchingError(f"{len(hits)} lattice eigenvalues within {window:.3e} of {e:.12g}")
        matched[i] = hits[0]
    return matched


def verify_spectrum_lattice(params: BoxParams, n_check: int, grid_sizes: Sequence[int],
                            basis: Basis | None = None) -> LatticeReport:
    """Compare basis energies ``|n| <= n_check`` with lattice eigenvalues."""
    if not grid_sizes:
        raise ConfigError("need at least one grid size")
    if basis is None or basis.n_max < n_check:
        basis = build_basis(params, n_check)
    indices = tuple([-n for n in range(n_check, 0, -1)] + list(range(1, n_check + 1)))
    targets = basis.energies(indices)
    values = []
    for n_cells in grid_sizes:
        lat = lattice_spectrum(params, n_cells, n_check + 1)
        values.append(_match(targets, lat))
    extrapolated = None
    if len(grid_sizes) >= 2:
        h1, h2 = (lattice_spacing(params, n) for n in grid_sizes[-2:])
        richardson = (h1 ** 2 * values[-1] - h2 ** 2 * values[-2]) / (h1 ** 2 - h2 ** 2)
        extrapolated = richardson - targets
    return LatticeReport(indices, tuple(grid_sizes), tuple(v - targets for v in values), extrapolated)
