"""Static perturbations ``V(y) = -sigma_y A_y(y) + A_0(y)``.

Two kinds exist. General potentials take arbitrary real ``A_0`` and ``A_y``
and serve as contrast cases with genuinely nonzero level shifts. Pure-gauge
potentials come from a gauge function ``chi`` with ``chi(+-a) = 0`` through
``A_0 = 0`` and ``A_y = -chi'``; they carry no electric field (``A_y`` is
static and ``A_0`` vanishes), so every level shift must vanish.

``chi'`` is always differentiated analytically. The gauge-solution residual
below is an exactness check and must not pick up finite-difference noise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial

from .errors import ConfigError, InvariantError
from .spectral_basis import Basis, BoxParams, apply_free_hamiltonian, check_grid

GENERAL = "general"
PURE_GAUGE = "pure_gauge"

BOUNDARY_TOL = 1e-12


def _zero(y):
    return np.zeros_like(np.asarray(y, dtype=float))


@dataclass(frozen=True)
class Potential:
    """A 2x2 Hermitian-matrix field on ``[-a, a]``.

    ``bandwidth`` bounds the angular frequencies in ``A_0`` and ``A_y`` and
    ``breakpoints`` lists interior points where they are not smooth; both are
    quadrature hints.
    """

    A0: Callable
    Ay: Callable
    kind: str = GENERAL
    chi: Callable | None = None
    chi_prime: Callable | None = None
    bandwidth: float = 0.0
    breakpoints: tuple = ()
    label: str = ""
    is_zero: bool = field(default=False)

    def apply(self, psi, y):
        """``V psi`` for spinors of shape ``(2, ...)`` sampled at ``y``."""
        a0 = self.A0(y)
        ay = self.Ay(y)
        # -sigma_y (p, q) = (i q, -i p)
        return np.array([a0 * psi[0] + 1j * ay * psi[1], a0 * psi[1] - 1j * ay * psi[0]])

    def matrix(self, y):
        """``V(y)`` as an array of shape ``(2, 2, len(y))``."""
        a0 = np.asarray(self.A0(y), dtype=complex)
        ay = np.asarray(self.Ay(y), dtype=complex)
        return np.array([[a0, 1j * ay], [-1j * ay, a0]])

    def scaled(self, lam):
        A0, Ay = self.A0, self.Ay
        chi, chip = self.chi, self.chi_prime
        return Potential(
            A0=lambda y: lam * A0(y),
            Ay=lambda y: lam * Ay(y),
            kind=self.kind,
            chi=None if chi is None else (lambda y: lam * chi(y)),
            chi_prime=None if chip is None else (lambda y: lam * chip(y)),
            bandwidth=self.bandwidth,
            breakpoints=self.breakpoints,
            label=f"{lam!r}*{self.label}",
            is_zero=self.is_zero or lam == 0,
        )


def hermiticity_defect(pot: Potential, y) -> float:
    mat = pot.matrix(y)
    return float(np.max(np.abs(mat - np.conj(np.swapaxes(mat, 0, 1)))))


# --------------------------------------------------------------------------- #
#                             gauge families                                   #
# --------------------------------------------------------------------------- #

SINE_SERIES = "sine_series"
BUMP_POLYNOMIAL = "bump_polynomial"
RAW_POLYNOMIAL = "raw_polynomial"  # escape hatch, not guaranteed to vanish at the walls
CHI_FAMILIES = (SINE_SERIES, BUMP_POLYNOMIAL, RAW_POLYNOMIAL)


@dataclass(frozen=True)
class ChiSpec:
    """Gauge function family and amplitudes.

    ``sine_series``: ``sum_j c_j sin(j pi (y + a) / (2a))``, ``j = 1, 2, ...``.
    ``bump_polynomial``: ``(1 - (y/a)**2) * sum_i c_i (y/a)**i``.
    ``raw_polynomial``: ``sum_i c_i (y/a)**i`` with no wall factor.
    """

    family: str
    coefficients: tuple

    def __post_init__(self):
        if self.family not in CHI_FAMILIES:
            raise ConfigError(f"unknown chi family {self.family!r}; expected one of {CHI_FAMILIES}")
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))


def _chi_functions(spec: ChiSpec, a: float):
    c = np.array(spec.coefficients)
    if spec.family == SINE_SERIES:
        q = np.arange(1, len(c) + 1) * math.pi / (2 * a)

        def chi(y):
            y = np.asarray(y, dtype=float)
            return np.tensordot(c, np.sin(np.multiply.outer(q, y + a)), axes=1)

        def chi_prime(y):
            y = np.asarray(y, dtype=float)
            return np.tensordot(c * q, np.cos(np.multiply.outer(q, y + a)), axes=1)

        return chi, chi_prime, float(q[-1])

    poly = Polynomial(c)
    if spec.family == BUMP_POLYNOMIAL:
        poly = Polynomial([1.0, 0.0, -1.0]) * poly
    dpoly = poly.deriv()

    def chi(y):
        return poly(np.asarray(y, dtype=float) / a)

    def chi_prime(y):
        return dpoly(np.asarray(y, dtype=float) / a) / a

    return chi, chi_prime, 0.0


def make_gauge_potential(spec: ChiSpec, params: BoxParams) -> Potential:
    """Pure-gauge potential ``A_0 = 0``, ``A_y = -chi'``.

    Raises
    ------
    ConfigError
        Empty coefficient list.
    InvariantError
        ``chi`` does not vanish at ``y = +-a`` (only reachable through the
        ``raw_polynomial`` family).
    """
    if len(spec.coefficients) == 0:
        raise ConfigError("gauge function needs at least one coefficient")
    a = params.a
    chi, chi_prime, bandwidth = _chi_functions(spec, a)
    scale = max(1.0, float(np.max(np.abs(spec.coefficients))))
    ends = chi(np.array([-a, a]))
    if np.max(np.abs(ends)) > BOUNDARY_TOL * scale:
        raise InvariantError(f"gauge function does not vanish at the walls: chi(-a)={float(ends[0])!r}, chi(a)={float(ends[1])!r}")
    return Potential(
        A0=_zero,
        Ay=lambda y: -chi_prime(y),
        kind=PURE_GAUGE,
        chi=chi,
        chi_prime=chi_prime,
        bandwidth=bandwidth,
        label=f"{spec.family}{list(spec.coefficients)}",
        is_zero=not np.any(spec.coefficients),
    )


def gauge_identity_defect(pot: Potential, y) -> float:
    """``max |A_y + chi'|`` plus ``max |A_0|`` on the sample points."""
    if pot.kind != PURE_GAUGE:
        raise ConfigError("gauge identity only defined for pure-gauge potentials")
    return float(np.max(np.abs(pot.Ay(y) + pot.chi_prime(y))) + np.max(np.abs(pot.A0(y))))


# --------------------------------------------------------------------------- #
#                            general potentials                                #
# --------------------------------------------------------------------------- #

def zero_potential() -> Potential:
    return Potential(A0=_zero, Ay=_zero, label="zero", is_zero=True)


def _field(family, params: BoxParams, **kw):
    """A real scalar field on the box plus its bandwidth and breakpoints."""
    a = params.a
    if family == "zero":
        return _zero, 0.0, ()
    if family == "constant":
        value = float(kw.get("value", 1.0))
        return (lambda y: np.full_like(np.asarray(y, dtype=float), value)), 0.0, ()
    if family == "step_well":
        # -depth on |y| < half_width, 0 outside
        depth = float(kw.get("depth", 1.0))
        half = float(kw.get("half_width", a / 2))
        if not 0 < half < a:
            raise ConfigError(f"step well half-width must lie in (0, a), got {half}")
        return (lambda y: np.where(np.abs(np.asarray(y, dtype=float)) < half, -depth, 0.0)), 0.0, (-half, half)
    if family == "linear":
        slope = float(kw.get("slope", 1.0))
        return (lambda y: slope * np.asarray(y, dtype=float)), 0.0, ()
    if family == "cosine":
        amp = float(kw.get("amplitude", 1.0))
        q = float(kw.get("wavenumber", math.pi / a))
        return (lambda y: amp * np.cos(q * np.asarray(y, dtype=float))), abs(q), ()
    raise ConfigError(f"unknown field family {family!r}")


FIELD_FAMILIES = ("zero", "constant", "step_well", "linear", "cosine")


def make_general_potential(params: BoxParams, A0=None, Ay=None) -> Potential:
    """Build a general potential from family descriptions.

    ``A0`` and ``Ay`` are dicts such as ``{"family": "step_well", "depth": 1}``
    (see ``FIELD_FAMILIES``); ``None`` means identically zero.
    """
    A0 = dict(A0 or {"family": "zero"})
    Ay = dict(Ay or {"family": "zero"})
    f0, b0, p0 = _field(A0.pop("family"), params, **A0)
    fy, by, py = _field(Ay.pop("family"), params, **Ay)
    return Potential(
        A0=f0,
        Ay=fy,
        bandwidth=max(b0, by),
        breakpoints=tuple(sorted(set(p0) | set(py))),
        label="general",
        is_zero=f0 is _zero and fy is _zero,
    )


def step_well(params: BoxParams, depth=1.0, half_width=None) -> Potential:
    half = params.a / 2 if half_width is None else half_width
    return make_general_potential(params, A0={"family": "step_well", "depth": depth, "half_width": half})


def constant_potential(params: BoxParams, value=1.0) -> Potential:
    return make_general_potential(params, A0={"family": "constant", "value": value})


# --------------------------------------------------------------------------- #
#                         exact gauge solution check                           #
# --------------------------------------------------------------------------- #

def exact_gauge_solution_residual(basis: Basis, pot: Potential, n: int, y=None) -> float:
    """Max pointwise norm of ``(H0 + V - eps_n) exp(-i chi) phi_n``.

    For a pure-gauge potential the gauge-rotated free mode is an exact
    eigenfunction of the perturbed Hamiltonian with the unperturbed energy,
    so the result is pure roundoff.
    """
    if pot.kind != PURE_GAUGE:
        raise ConfigError("exact gauge solution requires a pure-gauge potential")
    y = check_grid(basis.params) if y is None else np.asarray(y, dtype=float)
    mode = basis[n]
    phase = np.exp(-1j * pot.chi(y))
    phi, dphi = mode(y), mode.derivative(y)
    psi = phase * phi
    dpsi = phase * (dphi - 1j * pot.chi_prime(y) * phi)
    r = apply_free_hamiltonian(psi, dpsi, basis.params.m) + pot.apply(psi, y) - mode.energy * psi
    return float(np.max(np.sqrt(np.sum(np.abs(r) ** 2, axis=0))))
