"""Perturbative level shifts and vacuum-energy sums under explicit cutoffs.

Notation, for ``n, m > 0``::

    Y_L   = - sum_{n<=L} sum_{m<=M}        |V_{m,-n}|**2  / (eps_m  - eps_-n)
    X_L1  =   sum_{n<=L} sum_{m<=L, m!=n}  |V_{-m,-n}|**2 / (eps_-n - eps_-m)
    X_L2  =   sum_{n<=L} sum_{L<m<=L+D}    |V_{-m,-n}|**2 / (eps_-n - eps_-m)

The hole-theory second-order vacuum shift with the occupied band cut at
depth ``L`` is ``Y_L + X_L1 + X_L2``. The field-theory shift of the filled
sea is ``Y_L`` alone, and the field-theory shift of the band vacuum (only
``-1..-L`` filled) is ``Y_L + X_L2``. ``X_L1`` vanishes because swapping
``m`` and ``n`` inside one finite square block flips the sign of each term.

Every accumulation runs in a fixed order through :func:`math.fsum`, so
reports are bit-reproducible and large cancelling sums keep full accuracy.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, InvariantError, TableMissingError
from .matrix_elements import MatrixElementTable, build_table, sigma_y_bilinear
from .potentials import PURE_GAUGE, Potential
from .quadrature import gauss_panels
from .spectral_basis import Basis

IMAG_TOL = 1e-10


@dataclass(frozen=True)
class Truncation:
    """Outer band depth ``L``, positive-side inner cutoff ``M_inner`` and the
    number ``D`` of empty negative levels kept below the band."""

    L: int
    M_inner: int
    D: int = 0

    def __post_init__(self):
        for name in ("L", "M_inner", "D"):
            v = getattr(self, name)
            if int(v) != v:
                raise ConfigError(f"{name} must be an integer, got {v!r}")
        if self.L < 1 or self.M_inner < 1 or self.D < 0:
            raise ConfigError(f"invalid truncation L={self.L} M_inner={self.M_inner} D={self.D}")

    @classmethod
    def proportional(cls, L, inner=25, depth=24):
        return cls(L, inner * L, depth * L)

    @classmethod
    def with_default_depth(cls, basis: Basis, L, M_inner):
        """Pick the smallest ``D`` whose deepest kept level is more than three
        times as deep as the band edge ``-L``."""
        edge = abs(basis.energy(-L))
        D = 1
        while -(L + D) in basis and abs(basis.energy(-(L + D))) <= 3 * edge:
            D += 1
        if -(L + D) not in basis:
            raise ConfigError(f"basis too small for default depth below L={L}")
        return cls(L, M_inner, D)

    @property
    def depth(self):
        return self.L + self.D

    @property
    def rows(self):
        """Table rows needed by :func:`vacuum_shift_report`."""
        return tuple(range(-self.depth, 0)) + tuple(range(1, self.M_inner + 1))

    @property
    def cols(self):
        return tuple(range(-self.L, 0))


def vacuum_table(basis: Basis, pot: Potential, trunc: Truncation) -> MatrixElementTable:
    return build_table(basis, pot, trunc.rows, trunc.cols)


def _get(table, m, n):
    try:
        return table[m, n]
    except TableMissingError:
        raise TableMissingError(f"element ({m}, {n}) not in table; window does not cover the requested sum") from None


# --------------------------------------------------------------------------- #
#                            single-level shifts                               #
# --------------------------------------------------------------------------- #

class ShiftResult(NamedTuple):
    n: int
    first_order: float
    second_order: float
    inner_cutoff: int


def first_order_shift(table: MatrixElementTable, n: int) -> float:
    v = _get(table, n, n)
    if abs(v.imag) > IMAG_TOL * max(1.0, abs(v)):
        raise InvariantError(f"diagonal element V[{n},{n}] = {v} is not real")
    return v.real


def _inner_order(M):
    # ascending |m|, negative before positive
    for j in range(1, M + 1):
        yield -j
        yield j


def second_order_terms(table: MatrixElementTable, n: int, M_inner: int):
    en = table.energy(n)
    return [abs(_get(table, m, n)) ** 2 / (en - table.energy(m)) for m in _inner_order(M_inner) if m != n]


def second_order_shift(table: MatrixElementTable, n: int, M_inner: int) -> float:
    """Truncated sum over ``0 < |m| <= M_inner, m != n`` of ``|V_{m,n}|**2 / (eps_n - eps_m)``."""
    return math.fsum(second_order_terms(table, n, M_inner))


def level_shift(table: MatrixElementTable, n: int, M_inner: int) -> ShiftResult:
    return ShiftResult(n, first_order_shift(table, n), second_order_shift(table, n, M_inner), M_inner)


class ClosedFormShift(NamedTuple):
    direct: float
    via_completeness: complex


def second_order_shift_closed_form(basis: Basis, pot: Potential, n: int, M_inner: int,
                                   table: MatrixElementTable | None = None) -> ClosedFormShift:
    """Second-order shift of level ``n`` two ways for a pure-gauge potential.

    ``direct`` is the truncated sum over intermediate states. ``via_completeness``
    is the single integral ``(i/2) int chi**2 d/dy (phi_n^dagger sigma_y phi_n) dy``
    obtained by closing the sum with the completeness relation and integrating
    by parts; the derivative is taken from the closed-form eigenfunctions.
    """
    if pot.kind != PURE_GAUGE:
        raise ConfigError("closed form needs a pure-gauge potential")
    if table is None:
        table = build_table(basis, pot, [k for k in _inner_order(M_inner)], [n])
    direct = second_order_shift(table, n, M_inner)
    mode = basis[n]
    y, w = gauss_panels(basis.params.a, 2 * mode.momentum + 2 * pot.bandwidth, refine=2)
    phi, dphi = mode(y), mode.derivative(y)
    dbilinear = sigma_y_bilinear(dphi, phi) + sigma_y_bilinear(phi, dphi)
    via = 0.5j * np.sum(w * pot.chi(y) ** 2 * dbilinear)
    return ClosedFormShift(direct, complex(via))


# --------------------------------------------------------------------------- #
#                               vacuum sums                                    #
# --------------------------------------------------------------------------- #

def _y_terms(table, trunc):
    """``[(n, m, term)]`` for Y_L; every term must be <= 0."""
    out = []
    for n in range(1, trunc.L + 1):
        en = table.energy(-n)
        for m in range(1, trunc.M_inner + 1):
            denom = table.energy(m) - en
            t = -abs(_get(table, m, -n)) ** 2 / denom
            if not (denom > 0 and t <= 0):
                raise InvariantError(f"Y_L term (m={m}, n={n}) = {t!r} is positive")
            out.append((n, m, t))
    return out


def _x1_term(table, m, n):
    return abs(_get(table, -m, -n)) ** 2 / (table.energy(-n) - table.energy(-m))


def _x2_terms(table, trunc):
    out = []
    for n in range(1, trunc.L + 1):
        en = table.energy(-n)
        for m in range(trunc.L + 1, trunc.depth + 1):
            denom = en - table.energy(-m)
            t = abs(_get(table, -m, -n)) ** 2 / denom
            if not (denom > 0 and t >= 0):
                raise InvariantError(f"X_L2 term (m={m}, n={n}) = {t!r} is negative")
            out.append((n, m, t))
    return out


class XL1Check(NamedTuple):
    raw_sum: float
    pairwise_sum: float
    abs_sum: float


def x_l1_antisymmetry(table: MatrixElementTable, L: int) -> XL1Check:
    """Accumulate ``X_L1`` two ways.

    ``raw_sum`` adds all ``L (L - 1)`` terms left to right in plain floating
    point, so it shows the bare cancellation noise. ``pairwise_sum`` first
    combines ``term(m, n) + term(n, m)`` for each unordered pair; each such
    pair is zero analytically.
    """
    raw = 0.0
    abs_sum = []
    for n in range(1, L + 1):
        for m in range(1, L + 1):
            if m != n:
                t = _x1_term(table, m, n)
                raw += t
                abs_sum.append(abs(t))
    pairs = [_x1_term(table, m, n) + _x1_term(table, n, m) for n in range(1, L + 1) for m in range(n + 1, L + 1)]
    return XL1Check(raw, math.fsum(pairs), math.fsum(abs_sum))


@dataclass(frozen=True)
class VacuumShiftReport:
    L: int
    M_inner: int
    D: int
    E1: float
    Y_L: float
    X_L1: float
    X_L1_raw: float
    X_L2: float
    dE2_hole: float
    dE2_hole_inner_first: float
    dE2_qft_standard: float
    dE2_qft_redefined: float
    Y_tail: float
    abs_scale: float

    @property
    def truncation(self):
        return Truncation(self.L, self.M_inner, self.D)

    @property
    def cancellation_ratio(self):
        """``|Y_L + X_L2| / |Y_L|`` (``nan`` when ``Y_L`` is zero)."""
        return abs(self.dE2_qft_redefined) / abs(self.Y_L) if self.Y_L else float("nan")

    def to_dict(self):
        d = asdict(self)
        d["cancellation_ratio"] = self.cancellation_ratio
        return d


def vacuum_shift_report(table: MatrixElementTable, trunc: Truncation) -> VacuumShiftReport:
    """All first- and second-order vacuum shifts for one truncation.

    Sign structure is asserted term by term while accumulating: each ``Y_L``
    term is non-positive and each ``X_L2`` term non-negative.
    """
    y_terms = _y_terms(table, trunc)
    x2_terms = _x2_terms(table, trunc)
    x1 = x_l1_antisymmetry(table, trunc.L)

    Y = math.fsum(t for _, _, t in y_terms)
    X2 = math.fsum(t for _, _, t in x2_terms)
    # band-vacuum field theory, accumulated level by level as its own sum
    by_level = {n: [] for n in range(1, trunc.L + 1)}
    for n, _, t in y_terms:
        by_level[n].append(t)
    for n, _, t in x2_terms:
        by_level[n].append(t)
    redefined = math.fsum(t for n in by_level for t in by_level[n])
    # hole theory, inner sum finished first for each occupied level
    inner_first = math.fsum(
        second_order_shift_from_parts(table, n, trunc) for n in range(1, trunc.L + 1)
    )
    half = trunc.M_inner // 2
    tail = math.fsum(t for _, m, t in y_terms if m > half)
    E1 = math.fsum(first_order_shift(table, -n) for n in range(1, trunc.L + 1))
    scale = math.fsum(abs(t) for _, _, t in y_terms) + math.fsum(t for _, _, t in x2_terms) + x1.abs_sum
    return VacuumShiftReport(
        L=trunc.L, M_inner=trunc.M_inner, D=trunc.D, E1=E1,
        Y_L=Y, X_L1=x1.pairwise_sum, X_L1_raw=x1.raw_sum, X_L2=X2,
        dE2_hole=Y + x1.pairwise_sum + X2,
        dE2_hole_inner_first=inner_first,
        dE2_qft_standard=Y,
        dE2_qft_redefined=redefined,
        Y_tail=tail, abs_scale=scale,
    )


def second_order_shift_from_parts(table, n, trunc):
    """Shift of occupied level ``-n`` with intermediate states ``1..M_inner``
    and ``-1..-(L + D)``, as one inner sum."""
    en = table.energy(-n)
    inter = list(range(1, trunc.M_inner + 1)) + [-m for m in range(1, trunc.depth + 1) if m != n]
    return math.fsum(abs(_get(table, m, -n)) ** 2 / (en - table.energy(m)) for m in inter)


# --------------------------------------------------------------------------- #
#                        sweeps and summation order                            #
# --------------------------------------------------------------------------- #

SWEEP_COLUMNS = ("L", "M_inner", "D", "Y_L", "X_L1_raw", "X_L2", "dE2_hole", "dE2_qft_standard", "dE2_qft_redefined")


def covering_truncation(truncs: Sequence[Truncation]) -> Truncation:
    L = max(t.L for t in truncs)
    depth = max(t.depth for t in truncs)
    return Truncation(L, max(t.M_inner for t in truncs), depth - L)


def sweep(basis: Basis, pot: Potential, truncs: Sequence[Truncation], table=None):
    """One report per truncation, all read from a single covering table."""
    if table is None:
        table = vacuum_table(basis, pot, covering_truncation(truncs))
    return [vacuum_shift_report(table, t) for t in truncs]


def sweep_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for r in reports:
        d = asdict(r)
        writer.writerow([d[c] if isinstance(d[c], int) else repr(float(d[c])) for c in SWEEP_COLUMNS])
    return buf.getvalue()


class OrderDemoRow(NamedTuple):
    L: int
    M_inner: int
    D: int
    inner_first: float  # hole theory, inner sums finished per occupied level
    formal_swap: float  # Y_L alone, i.e. the value obtained by declaring X = -X = 0
    Y_L: float
    X_L2: float
    limiting: float  # Y_L + X_L2
    ratio: float


def summation_order_demo(table: MatrixElementTable, truncs: Sequence[Truncation]):
    """Contrast summation orders across a sweep of truncations.

    For each truncation the row shows the inner-first hole-theory value, the
    value left after formally cancelling ``X`` by index swapping (which is
    just ``Y_L``), and the limiting-procedure value ``Y_L + X_L2``.
    """
    rows = []
    for t in truncs:
        r = vacuum_shift_report(table, t)
        rows.append(OrderDemoRow(t.L, t.M_inner, t.D, r.dE2_hole_inner_first, r.Y_L,
                                 r.Y_L, r.X_L2, r.dE2_qft_redefined, r.cancellation_ratio))
    return rows


def observed_orders(cutoffs, residuals):
    """Empirical convergence orders ``-d log|r| / d log(cutoff)`` between
    consecutive sweep points."""
    c = np.log(np.asarray(cutoffs, dtype=float))
    r = np.log(np.abs(np.asarray(residuals, dtype=float)))
    return list(-(np.diff(r) / np.diff(c)))
