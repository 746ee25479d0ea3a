"""Brute-force second-quantized oracle on a truncated mode window.

Modes ``-K_neg..-1, 1..K_pos`` are mapped to bit positions ``0..N-1`` in
ascending index order, and a Fock state is the integer whose set bits are the
occupied modes. Creation operators carry the Jordan-Wigner sign
``(-1)**(number of occupied modes at lower positions)``.

Two vacua are available: ``standard`` fills every negative mode in the
window, ``band`` fills only ``-1..-L`` and leaves the deeper negative modes
empty. In both cases ``xi_ren`` is the filled-level energy, so the chosen
vacuum has free energy exactly zero.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .errors import AdiabaticError, ConfigError, InvariantError
from .matrix_elements import MatrixElementTable
from .spectral_basis import Basis
from .vacuum_sums import Truncation, vacuum_shift_report

MAX_MODES = 16
OVERLAP_THRESHOLD = 0.5


@dataclass(frozen=True)
class ModeWindow:
    K_neg: int
    K_pos: int

    def __post_init__(self):
        if self.K_neg < 1 or self.K_pos < 1:
            raise ConfigError("mode window needs at least one negative and one positive mode")
        if self.n_modes > MAX_MODES:
            raise ConfigError(f"window of {self.n_modes} modes exceeds the exact-diagonalization bound {MAX_MODES}")

    @property
    def n_modes(self):
        return self.K_neg + self.K_pos

    @property
    def modes(self):
        return tuple(range(-self.K_neg, 0)) + tuple(range(1, self.K_pos + 1))

    def position(self, n):
        return self.modes.index(n)


STANDARD = "standard"
BAND = "band"


@dataclass(frozen=True)
class VacuumChoice:
    tag: str = STANDARD
    L: int | None = None

    def __post_init__(self):
        if self.tag not in (STANDARD, BAND):
            raise ConfigError(f"unknown vacuum {self.tag!r}")
        if self.tag == BAND and (self.L is None or self.L < 1):
            raise ConfigError("band vacuum needs L >= 1")

    @classmethod
    def standard(cls):
        return cls(STANDARD)

    @classmethod
    def band(cls, L):
        return cls(BAND, L)

    def filled(self, window: ModeWindow):
        if self.tag == STANDARD:
            return tuple(range(-window.K_neg, 0))
        if self.L >= window.K_neg:
            raise ConfigError(f"band vacuum L={self.L} needs K_neg > L (got K_neg={window.K_neg})")
        return tuple(range(-self.L, 0))

    def truncation(self, window: ModeWindow) -> Truncation:
        """Single-particle truncation matching this vacuum in ``window``."""
        if self.tag == STANDARD:
            return Truncation(window.K_neg, window.K_pos, 0)
        return Truncation(self.L, window.K_pos, window.K_neg - self.L)


# --------------------------------------------------------------------------- #
#                               operators                                      #
# --------------------------------------------------------------------------- #

def creation_operator(n_modes: int, p: int) -> sp.csr_matrix:
    """``a_p^dagger`` on the full ``2**n_modes`` Fock space."""
    states = np.arange(2 ** n_modes, dtype=np.int64)
    empty = ((states >> p) & 1) == 0
    src = states[empty]
    dst = src | (1 << p)
    below = np.bitwise_count(src & ((1 << p) - 1))
    sign = np.where(below % 2 == 0, 1.0, -1.0)
    dim = 2 ** n_modes
    return sp.csr_matrix((sign, (dst, src)), shape=(dim, dim))


@dataclass(frozen=True)
class FockOperatorSet:
    window: ModeWindow
    vacuum: VacuumChoice
    energies: np.ndarray = field(repr=False)
    create: tuple = field(repr=False)
    annihilate: tuple = field(repr=False)
    H0: sp.csr_matrix = field(repr=False)
    V: sp.csr_matrix = field(repr=False)
    V_single: np.ndarray = field(repr=False)
    xi_ren: float = 0.0
    vacuum_state: int = 0

    @property
    def n_particles(self):
        return int(self.vacuum_state).bit_count()

    @property
    def dim(self):
        return 2 ** self.window.n_modes

    def sector(self, n_particles=None):
        """Fock states with the given particle number (default: the vacuum's)."""
        n = self.n_particles if n_particles is None else n_particles
        states = np.arange(self.dim, dtype=np.int64)
        return states[np.bitwise_count(states) == n]

    def number_operator(self):
        return sp.diags(np.bitwise_count(np.arange(self.dim, dtype=np.int64)).astype(float)).tocsr()

    def block(self, op, states=None):
        states = self.sector() if states is None else states
        return op[states][:, states].toarray()

    def state_vector(self, state):
        v = np.zeros(self.dim)
        v[state] = 1.0
        return v


def _occupied_energy(state, energies):
    return math.fsum(e for p, e in enumerate(energies) if (state >> p) & 1)


def build_operators(basis: Basis, table: MatrixElementTable | None, window: ModeWindow,
                    vac: VacuumChoice) -> FockOperatorSet:
    """Sparse ``a_n``, ``a_n^dagger``, ``H0`` and ``V`` on the window.

    ``H0 = sum_n eps_n a_n^dagger a_n - xi_ren`` and
    ``V = sum_{s,r} V_{s,r} a_s^dagger a_r``. Passing ``table=None`` gives
    ``V = 0``.
    """
    modes = window.modes
    N = window.n_modes
    for n in modes:
        if n not in basis:
            raise ConfigError(f"window mode {n} not in basis")
    energies = basis.energies(modes)
    filled = vac.filled(window)
    vacuum_state = sum(1 << window.position(n) for n in filled)

    create = tuple(creation_operator(N, p) for p in range(N))
    annihilate = tuple(c.T.tocsr() for c in create)

    diag = np.array([_occupied_energy(s, energies) for s in range(2 ** N)])
    xi_ren = _occupied_energy(vacuum_state, energies)
    H0 = sp.diags(diag - xi_ren).tocsr()

    V_single = np.zeros((N, N), complex)
    if table is not None:
        for i, s in enumerate(modes):
            for j, r in enumerate(modes):
                V_single[i, j] = table[s, r]
    V = sp.csr_matrix((2 ** N, 2 ** N), dtype=complex)
    for i in range(N):
        for j in range(N):
            if V_single[i, j] != 0:
                V = V + V_single[i, j] * (create[i] @ annihilate[j])
    V = V.tocsr()
    V.eliminate_zeros()
    return FockOperatorSet(window, vac, energies, create, annihilate, H0, V, V_single, xi_ren, vacuum_state)


# --------------------------------------------------------------------------- #
#                             identity checks                                  #
# --------------------------------------------------------------------------- #

def _maxabs(m):
    m = sp.csr_matrix(m)
    return float(np.max(np.abs(m.data))) if m.nnz else 0.0


@dataclass(frozen=True)
class IdentityReport:
    anticommutator_defect: float
    hermiticity_defect: float
    number_conservation_defect: float
    vacuum_energy: float  # <vac|H0|vac>
    occupation_defect: float  # <a_m^dagger a_n> against the filled set
    four_operator_defect: float  # <a_s^dagger a_r a_m^dagger a_-n> = delta_{-n,s} delta_{m,r}
    excitation_element_defect: float  # <V a_m^dagger a_-n> = V_{-n,m}
    min_excitation_energy: float  # smallest free sector energy above the vacuum
    below_vacuum_count: int  # free sector states with energy < 0

    @property
    def exact(self):
        return (self.anticommutator_defect == 0 and self.occupation_defect == 0
                and self.four_operator_defect == 0 and self.vacuum_energy == 0)

    def to_dict(self):
        return asdict(self)


def anticommutator_defect(ops: FockOperatorSet) -> float:
    """Largest entry of ``{a_m, a_n^dagger} - delta_mn``, ``{a_m, a_n}`` and ``{a_m^dagger, a_n^dagger}``."""
    eye = sp.identity(ops.dim, format="csr")
    worst = 0.0
    N = ops.window.n_modes
    for i in range(N):
        for j in range(N):
            a, cd = ops.annihilate[i], ops.create[j]
            mixed = a @ cd + cd @ a - (eye if i == j else 0 * eye)
            worst = max(worst, _maxabs(mixed),
                        _maxabs(a @ ops.annihilate[j] + ops.annihilate[j] @ a),
                        _maxabs(ops.create[i] @ cd + cd @ ops.create[i]))
    return worst


def _excited_indices(ops):
    """Window positions ``(holes, particles)`` reachable from the vacuum."""
    filled = set(ops.vacuum.filled(ops.window))
    holes = [n for n in ops.window.modes if n in filled]
    particles = [n for n in ops.window.modes if n not in filled]
    return holes, particles


def expectation_identities(ops: FockOperatorSet) -> IdentityReport:
    """Exact checks of the many-body algebra around the chosen vacuum."""
    w = ops.window
    vac = ops.state_vector(ops.vacuum_state)
    filled = set(ops.vacuum.filled(w))

    occ = 0.0
    for m in w.modes:
        for n in w.modes:
            op = ops.create[w.position(m)] @ ops.annihilate[w.position(n)]
            expected = 1.0 if (m == n and n in filled) else 0.0
            occ = max(occ, abs(vac @ (op @ vac) - expected))

    holes, particles = _excited_indices(ops)
    four = 0.0
    excitation = 0.0
    Vvac = ops.V.conj().T @ vac  # <vac| V as a ket
    for hole in holes:
        for part in particles:
            k = ops.create[w.position(part)] @ (ops.annihilate[w.position(hole)] @ vac)
            for s in w.modes:
                for r in w.modes:
                    val = vac @ (ops.create[w.position(s)] @ (ops.annihilate[w.position(r)] @ k))
                    expected = 1.0 if (s == hole and r == part) else 0.0
                    four = max(four, abs(val - expected))
            amp = np.vdot(Vvac, k)
            excitation = max(excitation, abs(amp - ops.V_single[w.position(hole), w.position(part)]))

    H = ops.H0 + ops.V
    herm = max(_maxabs(ops.H0 - ops.H0.conj().T), _maxabs(ops.V - ops.V.conj().T), _maxabs(H - H.conj().T))
    num = ops.number_operator()
    conservation = _maxabs(ops.V @ num - num @ ops.V)

    energies = ops.H0.diagonal().real[ops.sector()]
    others = energies[ops.sector() != ops.vacuum_state]
    return IdentityReport(
        anticommutator_defect=anticommutator_defect(ops),
        hermiticity_defect=herm,
        number_conservation_defect=conservation,
        vacuum_energy=float(ops.H0[ops.vacuum_state, ops.vacuum_state]),
        occupation_defect=float(occ),
        four_operator_defect=float(four),
        excitation_element_defect=float(excitation),
        min_excitation_energy=float(others.min()) if len(others) else float("inf"),
        below_vacuum_count=int(np.count_nonzero(energies < 0)),
    )


# --------------------------------------------------------------------------- #
#                      exact shift and perturbation theory                     #
# --------------------------------------------------------------------------- #

class ExactShift(NamedTuple):
    shift: float
    overlap: float  # |<vac|psi>|**2 of the tracked eigenstate
    n_below: int  # sector eigenvalues strictly below the tracked one
    sector_dim: int
    n_degenerate: int  # other free sector states at the vacuum energy; PT is unreliable if > 0


def exact_vacuum_shift(ops: FockOperatorSet, lam: float = 1.0) -> ExactShift:
    """Eigenvalue of ``H0 + lam V`` continuously connected to the vacuum.

    The sector Hamiltonian is diagonalized densely and the eigenvector with
    the largest vacuum overlap is tracked. For the band vacuum that state is
    generally not the sector ground state.
    """
    states = ops.sector()
    H = ops.block(ops.H0, states) + lam * ops.block(ops.V, states)
    vals, vecs = np.linalg.eigh(H)
    pos = int(np.searchsorted(states, ops.vacuum_state))
    weights = np.abs(vecs[pos]) ** 2
    k = int(np.argmax(weights))
    if weights[k] < OVERLAP_THRESHOLD:
        raise AdiabaticError(f"perturbation too strong for adiabatic identification (overlap {weights[k]:.3f})")
    tol = 1e-12 * max(1.0, float(np.max(np.abs(vals))))
    below = int(np.count_nonzero(vals < vals[k] - tol))
    free = ops.H0.diagonal().real[states]
    degenerate = int(np.count_nonzero(np.abs(free) < 1e-12 * max(1.0, float(np.max(np.abs(free)))))) - 1
    return ExactShift(float(vals[k]), float(weights[k]), below, len(states), degenerate)


class ManyBodyPT(NamedTuple):
    E1: float
    E2: float


def pt_from_spectrum(ops: FockOperatorSet) -> ManyBodyPT:
    """First- and second-order vacuum shifts summed over many-body states.

    ``H0`` is diagonal in the occupation basis, so the intermediate states
    ``|k>`` are the sector's occupation states other than the vacuum.
    """
    states = ops.sector()
    Vcol = ops.V[states][:, [ops.vacuum_state]].toarray().ravel()
    E = ops.H0.diagonal().real[states]
    pos = int(np.searchsorted(states, ops.vacuum_state))
    E1 = Vcol[pos]
    if abs(E1.imag) > 1e-12 * max(1.0, abs(E1)):
        raise InvariantError(f"<vac|V|vac> = {E1} is not real")
    scale = max(1.0, float(np.max(np.abs(E))))
    terms = []
    for i, amp in enumerate(Vcol):
        if i == pos or amp == 0:
            continue
        if abs(E[i]) < 1e-12 * scale:
            raise InvariantError(f"vanishing energy denominator for state {states[i]:#b} coupled to the vacuum")
        terms.append(abs(amp) ** 2 / (0.0 - E[i]))
    return ManyBodyPT(float(E1.real), math.fsum(terms))


def single_particle_pt(ops: FockOperatorSet, table: MatrixElementTable) -> ManyBodyPT:
    """The same two numbers from the single-particle vacuum sums restricted
    to the window."""
    trunc = ops.vacuum.truncation(ops.window)
    r = vacuum_shift_report(table, trunc)
    E2 = r.dE2_qft_standard if ops.vacuum.tag == STANDARD else r.dE2_qft_redefined
    return ManyBodyPT(r.E1, E2)


def lambda_scaling(ops: FockOperatorSet, lambdas, pt: ManyBodyPT | None = None):
    """Residuals ``|exact(lam) - lam E1 - lam**2 E2|`` and their log-log slope."""
    pt = pt_from_spectrum(ops) if pt is None else pt
    residuals = []
    shifts = []
    for lam in lambdas:
        ex = exact_vacuum_shift(ops, lam)
        shifts.append(ex)
        residuals.append(abs(ex.shift - lam * pt.E1 - lam ** 2 * pt.E2))
    return residuals, residual_slope(lambdas, residuals), shifts


def residual_slope(lambdas, residuals) -> float:
    """Least-squares log-log slope; ``nan`` unless every residual is positive
    and there are at least two points."""
    r = np.asarray(residuals, dtype=float)
    if len(r) < 2 or not np.all(r > 0):
        return float("nan")
    return float(np.polyfit(np.log(lambdas), np.log(r), 1)[0])
