import csv
import io
import math
from dataclasses import replace

import numpy as np
import pytest

from conftest import CHI_CORPUS, gauge, quad_element, well_plus_field
from diracvac.errors import ConfigError, InvariantError, TableMissingError
from diracvac.matrix_elements import MatrixElementTable, build_table, symmetric_window
from diracvac.potentials import step_well, zero_potential
from diracvac.spectral_basis import Basis, BoxParams
from diracvac.vacuum_sums import (
    SWEEP_COLUMNS, Truncation, covering_truncation, first_order_shift, level_shift,
    observed_orders, second_order_shift, second_order_shift_closed_form, summation_order_demo,
    sweep, sweep_csv, vacuum_shift_report, vacuum_table, x_l1_antisymmetry,
)


# --------------------------------------------------------------------------- #
#                                 truncation                                   #
# --------------------------------------------------------------------------- #

def test_truncation_windows():
    t = Truncation(2, 5, 3)
    assert t.depth == 5
    assert t.rows == (-5, -4, -3, -2, -1, 1, 2, 3, 4, 5)
    assert t.cols == (-2, -1)
    assert Truncation.proportional(4) == Truncation(4, 100, 96)


@pytest.mark.parametrize("args", [(0, 5, 0), (2, 0, 0), (2, 5, -1), (2.5, 5, 0)])
def test_truncation_rejects(args):
    with pytest.raises(ConfigError):
        Truncation(*args)


def test_default_depth_rule(basis_cache):
    basis = basis_cache(0.0, 40)
    t = Truncation.with_default_depth(basis, 4, 20)
    assert abs(basis.energy(-t.depth)) > 3 * abs(basis.energy(-4))
    assert abs(basis.energy(-(t.depth - 1))) <= 3 * abs(basis.energy(-4))
    with pytest.raises(ConfigError):
        Truncation.with_default_depth(basis_cache(0.0, 10), 8, 5)


# --------------------------------------------------------------------------- #
#                        independent brute-force oracle                        #
# --------------------------------------------------------------------------- #

def _brute_force(basis, pot, L, M, D):
    """Y_L, X_L1, X_L2 from scipy-quad elements and plain loops."""
    V = {}
    for n in range(1, L + 1):
        for m in list(range(1, M + 1)) + [-k for k in range(1, L + D + 1)]:
            V[m, -n] = quad_element(basis, pot, m, -n, points=list(pot.breakpoints) or None)
    e = basis.energy
    Y = sum(-abs(V[m, -n]) ** 2 / (e(m) - e(-n)) for n in range(1, L + 1) for m in range(1, M + 1))
    X1 = sum(abs(V[-m, -n]) ** 2 / (e(-n) - e(-m)) for n in range(1, L + 1) for m in range(1, L + 1) if m != n)
    X2 = sum(abs(V[-m, -n]) ** 2 / (e(-n) - e(-m)) for n in range(1, L + 1) for m in range(L + 1, L + D + 1))
    return Y, X1, X2


@pytest.mark.parametrize("pot_factory,m", [(lambda m: gauge(CHI_CORPUS[1], m=m), 0.0),
                                           (lambda m: well_plus_field(m=m), 1.0)])
def test_report_against_brute_force(basis_cache, pot_factory, m):
    basis = basis_cache(m, 10)
    pot = pot_factory(m)
    trunc = Truncation(2, 8, 3)
    rep = vacuum_shift_report(vacuum_table(basis, pot, trunc), trunc)
    Y, X1, X2 = _brute_force(basis, pot, 2, 8, 3)
    assert rep.Y_L == pytest.approx(Y, abs=1e-11)
    assert rep.X_L2 == pytest.approx(X2, abs=1e-11)
    assert abs(X1) < 1e-11 and abs(rep.X_L1) < 1e-14
    assert rep.dE2_hole == pytest.approx(Y + X1 + X2, abs=1e-11)


# --------------------------------------------------------------------------- #
#                           single-level shifts                                #
# --------------------------------------------------------------------------- #

@pytest.mark.parametrize("spec", CHI_CORPUS)
def test_gauge_first_order_zero(basis_cache, spec):
    table = build_table(basis_cache(1.0, 8), gauge(spec, m=1.0), symmetric_window(8))
    for n in table.rows:
        assert abs(first_order_shift(table, n)) < 1e-10


def test_first_order_rejects_complex_diagonal(basis_cache):
    basis = basis_cache(0.0, 2)
    vals = np.eye(4, dtype=complex) * 1j
    table = MatrixElementTable(basis, zero_potential(), symmetric_window(2), symmetric_window(2), vals)
    with pytest.raises(InvariantError):
        first_order_shift(table, 1)


@pytest.mark.parametrize("spec", CHI_CORPUS[:3])
def test_gauge_second_order_decays(basis_cache, spec):
    basis = basis_cache(0.0, 80)
    pot = gauge(spec)
    table = build_table(basis, pot, symmetric_window(80), symmetric_window(4))
    for n in symmetric_window(4):
        shifts = [abs(second_order_shift(table, n, M)) for M in (20, 40, 80)]
        assert shifts[0] > shifts[1] > shifts[2]
        closed = second_order_shift_closed_form(basis, pot, n, 80, table)
        assert abs(closed.via_completeness) < 1e-10
        assert closed.direct == shifts[2] or closed.direct == -shifts[2]


def test_general_second_order_converges_to_nonzero(basis_cache):
    # massive case: without mass the symmetric well shift vanishes by a pairing symmetry
    basis = basis_cache(1.0, 160)
    table = build_table(basis, step_well(BoxParams(1.0, 1.0)), symmetric_window(160), [1])
    s = [second_order_shift(table, 1, M) for M in (40, 80, 160)]
    assert abs(s[2] - s[1]) < abs(s[1] - s[0])
    assert abs(s[2]) > 1e-3


def test_level_shift_bundle(basis_cache):
    table = build_table(basis_cache(0.0, 6), step_well(BoxParams()), symmetric_window(6))
    r = level_shift(table, -2, 6)
    assert r.n == -2 and r.inner_cutoff == 6
    assert r.first_order == first_order_shift(table, -2)


def test_closed_form_needs_gauge(basis_cache):
    with pytest.raises(ConfigError):
        second_order_shift_closed_form(basis_cache(0.0, 4), step_well(BoxParams()), 1, 4)


# --------------------------------------------------------------------------- #
#                                vacuum sums                                   #
# --------------------------------------------------------------------------- #

@pytest.mark.parametrize("pot", [gauge(CHI_CORPUS[0]), well_plus_field()], ids=["gauge", "general"])
def test_x_l1_pairwise_cancels(basis_cache, pot):
    basis = basis_cache(0.0, 10)
    table = build_table(basis, pot, symmetric_window(10), [-k for k in range(10, 0, -1)])
    chk = x_l1_antisymmetry(table, 10)
    assert abs(chk.pairwise_sum) < 1e-14 * chk.abs_sum
    assert chk.abs_sum > 0.1


@pytest.mark.parametrize("pot", [gauge(CHI_CORPUS[3]), well_plus_field()], ids=["gauge", "general"])
def test_sign_structure(basis_cache, pot):
    basis = basis_cache(0.0, 60)
    trunc = Truncation(3, 40, 10)
    rep = vacuum_shift_report(vacuum_table(basis, pot, trunc), trunc)
    assert rep.Y_L < 0 < rep.X_L2
    assert rep.dE2_qft_standard == rep.Y_L


def test_sign_violation_detected(basis_cache):
    # a positive-index level pushed below the band makes a Y_L term positive
    basis = basis_cache(0.0, 6)
    modes = dict(basis.modes)
    modes[3] = replace(modes[3], energy=-50.0)
    bad = Basis(basis.params, modes)
    trunc = Truncation(2, 4, 1)
    table = vacuum_table(bad, gauge(CHI_CORPUS[0]), trunc)
    with pytest.raises(InvariantError, match="Y_L term"):
        vacuum_shift_report(table, trunc)


def test_x2_sign_violation_detected(basis_cache):
    basis = basis_cache(0.0, 6)
    modes = dict(basis.modes)
    modes[-4] = replace(modes[-4], energy=-0.1)
    bad = Basis(basis.params, modes)
    trunc = Truncation(2, 4, 2)
    with pytest.raises(InvariantError, match="X_L2 term"):
        vacuum_shift_report(vacuum_table(bad, gauge(CHI_CORPUS[0]), trunc), trunc)


@pytest.mark.parametrize("m", [0.0, 1.0])
def test_gauge_cancellation_shrinks(basis_cache, m):
    basis = basis_cache(m, 200)
    truncs = [Truncation.proportional(L) for L in (2, 4, 8)]
    reps = sweep(basis, gauge(CHI_CORPUS[1], m=m), truncs)
    ratios = [r.cancellation_ratio for r in reps]
    assert ratios[0] < 0.1 and ratios[0] > ratios[1] > ratios[2]
    for r in reps:
        assert abs(r.dE2_hole - r.dE2_qft_redefined) < 1e-13 * r.abs_scale
        assert abs(r.dE2_hole - r.dE2_hole_inner_first) < 1e-13 * r.abs_scale


def test_general_no_cancellation(basis_cache):
    basis = basis_cache(1.0, 100)
    trunc = Truncation.proportional(2)
    rep = vacuum_shift_report(vacuum_table(basis, step_well(BoxParams(1.0, 1.0)), trunc), trunc)
    assert rep.dE2_hole != 0.0
    assert rep.E1 != 0.0


def test_zero_potential_report(basis_cache):
    trunc = Truncation(2, 10, 4)
    rep = vacuum_shift_report(vacuum_table(basis_cache(0.0, 10), zero_potential(), trunc), trunc)
    values = rep.to_dict()
    assert all(values[k] == 0 for k in ("E1", "Y_L", "X_L1", "X_L2", "dE2_hole", "dE2_qft_redefined"))
    assert math.isnan(rep.cancellation_ratio)


def test_level_sum_matches_hole_value(basis_cache):
    basis = basis_cache(1.0, 40)
    trunc = Truncation(3, 30, 6)
    table = vacuum_table(basis, well_plus_field(m=1.0), trunc)
    rep = vacuum_shift_report(table, trunc)
    assert rep.dE2_hole_inner_first == pytest.approx(rep.dE2_hole, abs=1e-14 * rep.abs_scale)


def test_missing_table_entries(basis_cache):
    basis = basis_cache(0.0, 10)
    small = vacuum_table(basis, gauge(CHI_CORPUS[0]), Truncation(2, 4, 1))
    with pytest.raises(TableMissingError):
        vacuum_shift_report(small, Truncation(2, 8, 1))


def test_sweep_csv_deterministic(basis_cache):
    basis = basis_cache(0.0, 50)
    pot = gauge(CHI_CORPUS[0])
    truncs = [Truncation(1, 25, 24), Truncation(2, 50, 48)]
    text = sweep_csv(sweep(basis, pot, truncs))
    assert text == sweep_csv(sweep(basis, pot, truncs))
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == SWEEP_COLUMNS
    assert [r[:3] for r in rows[1:]] == [["1", "25", "24"], ["2", "50", "48"]]


def test_covering_truncation():
    cover = covering_truncation([Truncation(2, 50, 48), Truncation(4, 10, 2)])
    assert (cover.L, cover.M_inner, cover.depth) == (4, 50, 50)


def test_summation_order_demo(basis_cache):
    basis = basis_cache(0.0, 100)
    truncs = [Truncation.proportional(L) for L in (1, 2, 4)]
    table = vacuum_table(basis, gauge(CHI_CORPUS[0]), covering_truncation(truncs))
    rows = summation_order_demo(table, truncs)
    for row in rows:
        assert row.formal_swap == row.Y_L < 0
        assert abs(row.limiting) < 0.1 * abs(row.formal_swap)
        assert row.inner_first == pytest.approx(row.limiting, abs=1e-13)


def test_observed_orders():
    cut = [10, 20, 40]
    assert observed_orders(cut, [3.0 / c for c in cut]) == pytest.approx([1.0, 1.0])
    assert observed_orders(cut, [1.0 / c ** 2 for c in cut]) == pytest.approx([2.0, 2.0])
