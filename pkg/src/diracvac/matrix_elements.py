"""Matrix elements ``V_{m,n} = int phi_m^dagger V phi_n dy`` and their identities.

All elements are computed by composite Gauss-Legendre quadrature whose panel
count follows the largest wavenumber in the integrand. Every block is
evaluated twice, the second time with twice the panels, and the finer value is
kept once the two agree to a relative ``1e-10``.

Arithmetic is complex throughout. With the real phase convention of
:mod:`diracvac.spectral_basis` pure-gauge elements come out purely imaginary,
but nothing here relies on that.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, QuadratureError, TableMissingError
from .potentials import PURE_GAUGE, Potential
from .quadrature import gauss_panels
from .spectral_basis import Basis

RTOL = 1e-10
ATOL = 1e-13
MAX_REFINE = 64
_ROW_CHUNK = 64


def _sandwich_once(basis, rows, cols, op, wavenumber, breakpoints, refine):
    y, w = gauss_panels(basis.params.a, wavenumber, breakpoints, refine=refine)
    ket = op(basis.spinors(cols, y), y) * w  # (nc, 2, ny)
    ket = ket.reshape(len(cols), -1).T
    out = np.empty((len(rows), len(cols)), complex)
    for start in range(0, len(rows), _ROW_CHUNK):
        chunk = rows[start:start + _ROW_CHUNK]
        bra = basis.spinors(chunk, y).conj().reshape(len(chunk), -1)
        out[start:start + len(chunk)] = bra @ ket
    return out


def sandwich(basis: Basis, rows, cols, op, bandwidth=0.0, breakpoints=()):
    """``<phi_m | op | phi_n>`` for all ``m`` in rows and ``n`` in cols.

    ``op(psi, y)`` acts on spinor stacks of shape ``(k, 2, len(y))``.

    Returns
    -------
    values : ndarray
        Shape ``(len(rows), len(cols))``.
    error : float
        Largest change seen in the final panel doubling.
    """
    rows, cols = list(rows), list(cols)
    if not rows or not cols:
        return np.zeros((len(rows), len(cols)), complex), 0.0
    wavenumber = basis.max_momentum(rows) + basis.max_momentum(cols) + bandwidth
    coarse = _sandwich_once(basis, rows, cols, op, wavenumber, breakpoints, 1)
    refine = 2
    while True:
        fine = _sandwich_once(basis, rows, cols, op, wavenumber, breakpoints, refine)
        diff = np.abs(fine - coarse)
        scale = max(1.0, float(np.max(np.abs(fine))))
        bad = diff > np.maximum(RTOL * np.abs(fine), ATOL * scale)
        if not bad.any():
            return fine, float(diff.max())
        if refine >= MAX_REFINE:
            i, j = np.unravel_index(np.argmax(np.where(bad, diff, -1.0)), diff.shape)
            raise QuadratureError((rows[i], cols[j]), float(diff[i, j]))
        coarse, refine = fine, 2 * refine


def _potential_op(pot: Potential):
    return lambda psi, y: np.moveaxis(pot.apply(np.moveaxis(psi, 1, 0), y), 0, 1)


def _scalar_op(f):
    return lambda psi, y: psi * f(y)


def matrix_element(basis: Basis, pot: Potential, m: int, n: int) -> complex:
    """Single element ``V_{m,n}``."""
    for k in (m, n):
        if k not in basis:
            raise ConfigError(f"mode {k} not in basis")
    values, _ = sandwich(basis, [m], [n], _potential_op(pot), pot.bandwidth, pot.breakpoints)
    return complex(values[0, 0])


class GaugeIdentity(NamedTuple):
    direct: complex
    via_identity: complex
    discrepancy: float


def chi_element(basis: Basis, pot: Potential, m: int, n: int) -> complex:
    """``int phi_m^dagger chi phi_n dy``."""
    values, _ = sandwich(basis, [m], [n], _scalar_op(pot.chi), pot.bandwidth)
    return complex(values[0, 0])


def gauge_matrix_element_identity(basis: Basis, pot: Potential, m: int, n: int) -> GaugeIdentity:
    """Check ``V_{m,n} = i (eps_m - eps_n) int phi_m^dagger chi phi_n dy``.

    The two sides are separate quadratures: the left integrates ``chi'``
    against ``sigma_y``, the right integrates ``chi`` alone.
    """
    if pot.kind != PURE_GAUGE:
        raise ConfigError("identity holds for pure-gauge potentials only")
    direct = matrix_element(basis, pot, m, n)
    via = 1j * (basis.energy(m) - basis.energy(n)) * chi_element(basis, pot, m, n)
    return GaugeIdentity(direct, via, abs(direct - via))


def sigma_y_bilinear(bra, ket):
    """``bra^dagger sigma_y ket`` pointwise for spinors of shape ``(2, ...)``."""
    return np.conj(bra[0]) * (-1j * ket[1]) + np.conj(bra[1]) * (1j * ket[0])


def derivative_identity_check(basis: Basis, m: int, n: int, y) -> float:
    """Max defect of ``d/dy (phi_m^dagger sigma_y phi_n) = -i (eps_m - eps_n) phi_m^dagger phi_n``.

    The left side uses the closed-form derivatives of both modes.
    """
    y = np.asarray(y, dtype=float)
    bm, bn = basis[m], basis[n]
    pm, pn = bm(y), bn(y)
    left = sigma_y_bilinear(bm.derivative(y), pn) + sigma_y_bilinear(pm, bn.derivative(y))
    right = -1j * (bm.energy - bn.energy) * np.sum(np.conj(pm) * pn, axis=0)
    return float(np.max(np.abs(left - right)))


# --------------------------------------------------------------------------- #
#                                 tables                                       #
# --------------------------------------------------------------------------- #

def symmetric_window(n_max: int) -> tuple:
    """Indices ``-n_max..-1, 1..n_max`` in ascending order."""
    return tuple(range(-n_max, 0)) + tuple(range(1, n_max + 1))


@dataclass(frozen=True)
class MatrixElementTable:
    """Cached block ``V_{m,n}`` for ``m`` in ``rows`` and ``n`` in ``cols``.

    Lookups of ``(m, n)`` outside the block fall back to the conjugate of
    ``(n, m)`` when that one is stored.
    """

    basis: Basis = field(repr=False)
    potential: Potential = field(repr=False)
    rows: tuple
    cols: tuple
    values: np.ndarray = field(repr=False)
    quadrature_error: float = 0.0
    _row_pos: dict = field(default_factory=dict, repr=False, compare=False)
    _col_pos: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self._row_pos.update({m: i for i, m in enumerate(self.rows)})
        self._col_pos.update({n: j for j, n in enumerate(self.cols)})
        self.values.setflags(write=False)

    def stored(self, m, n):
        return m in self._row_pos and n in self._col_pos

    def __contains__(self, pair):
        m, n = pair
        return self.stored(m, n) or self.stored(n, m)

    def __getitem__(self, pair) -> complex:
        m, n = pair
        if self.stored(m, n):
            return complex(self.values[self._row_pos[m], self._col_pos[n]])
        if self.stored(n, m):
            return complex(np.conj(self.values[self._row_pos[n], self._col_pos[m]]))
        raise TableMissingError(f"element ({m}, {n}) not in table")

    def energy(self, n):
        return self.basis.energy(n)

    @property
    def hermiticity_defect(self) -> float:
        """Max ``|V_{m,n} - conj(V_{n,m})|`` over pairs stored both ways."""
        worst = 0.0
        for m, i in self._row_pos.items():
            for n, j in self._col_pos.items():
                if self.stored(n, m):
                    other = self.values[self._row_pos[n], self._col_pos[m]]
                    worst = max(worst, abs(self.values[i, j] - np.conj(other)))
        return float(worst)

    def items(self):
        for i, m in enumerate(self.rows):
            for j, n in enumerate(self.cols):
                yield (m, n), complex(self.values[i, j])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["m", "n", "re", "im"])
        for (m, n), v in self.items():
            writer.writerow([m, n, repr(v.real), repr(v.imag)])
        return buf.getvalue()


def build_table(basis: Basis, pot: Potential, rows: Sequence[int], cols: Sequence[int] | None = None) -> MatrixElementTable:
    """Compute every ``V_{m,n}`` with ``m`` in rows and ``n`` in cols."""
    rows = tuple(rows)
    cols = rows if cols is None else tuple(cols)
    missing = [k for k in set(rows) | set(cols) if k not in basis]
    if missing:
        raise ConfigError(f"window indices outside basis: {sorted(missing)[:5]}")
    if pot.is_zero:
        return MatrixElementTable(basis, pot, rows, cols, np.zeros((len(rows), len(cols)), complex))
    values, err = sandwich(basis, rows, cols, _potential_op(pot), pot.bandwidth, pot.breakpoints)
    return MatrixElementTable(basis, pot, rows, cols, values, err)


def table_gauge_identity_defect(table: MatrixElementTable) -> float:
    """Max over the stored block of ``|V_{m,n} - i (eps_m - eps_n) chi_{m,n}|``."""
    pot, basis = table.potential, table.basis
    if pot.kind != PURE_GAUGE:
        raise ConfigError("identity holds for pure-gauge potentials only")
    chi, _ = sandwich(basis, table.rows, table.cols, _scalar_op(pot.chi), pot.bandwidth)
    de = basis.energies(table.rows)[:, None] - basis.energies(table.cols)[None, :]
    return float(np.max(np.abs(table.values - 1j * de * chi)))
