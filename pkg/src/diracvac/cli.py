"""Command-line front end.

Each subcommand reads one JSON configuration (see :mod:`diracvac.config`),
runs one experiment and writes a CSV table and/or a JSON report. Outputs are
assembled in memory and written only after the run finishes, so a usage error
never leaves a partial file behind.

Exit codes: 0 success, 1 usage or configuration error, 2 invariant violation.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from itertools import combinations

import numpy as np

from . import __version__
from .config import SCHEMA, ExperimentConfig, load_config, read_config_file
from .errors import ConfigError, DiracVacError
from .fock_oracle import (
    build_operators, expectation_identities, lambda_scaling, pt_from_spectrum, single_particle_pt,
)
from .matrix_elements import (
    build_table, derivative_identity_check, symmetric_window, table_gauge_identity_defect,
)
from .potentials import exact_gauge_solution_residual
from .spectral_basis import (
    boundary_defect, build_basis, check_grid, eigen_residual, orthonormality_defect,
    verify_spectrum_lattice,
)
from .vacuum_sums import (
    covering_truncation, first_order_shift, second_order_shift_closed_form, summation_order_demo,
    sweep, sweep_csv, vacuum_table,
)

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT = 0, 1, 2


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Usage(message)


# --------------------------------------------------------------------------- #
#                                 output                                       #
# --------------------------------------------------------------------------- #

def _clean(obj):
    """Make ``obj`` JSON-safe: non-finite floats become null, complex numbers
    become ``[re, im]`` and numpy scalars become Python scalars."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return [_clean(float(obj.real)), _clean(float(obj.imag))]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _report(cfg: ExperimentConfig, command: str, results: dict, checks: dict) -> dict:
    return {
        "schema": SCHEMA,
        "version": __version__,
        "command": command,
        "config": cfg.raw,
        "results": results,
        "checks": checks,
        "ok": all(checks.values()),
    }


def _rows_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, (int, str)) else repr(float(v)) for v in row])
    return buf.getvalue()


# --------------------------------------------------------------------------- #
#                                commands                                      #
# --------------------------------------------------------------------------- #

def cmd_spectrum(cfg: ExperimentConfig):
    """Energies, momenta and lattice discrepancies for ``|n| <= basis_size``."""
    tol = cfg.tolerances
    basis = build_basis(cfg.box, cfg.basis_size)
    lat = verify_spectrum_lattice(cfg.box, cfg.basis_size, cfg.lattice_grids, basis)
    finest = lat.discrepancies[-1]
    rows = [(n, basis[n].momentum, basis[n].energy, d) for n, d in zip(lat.indices, finest)]
    csv_text = _rows_csv(("n", "k_n", "energy", "lattice_discrepancy"), rows)

    low = [i for i, n in enumerate(lat.indices) if abs(n) <= cfg.lattice_check]
    low_max = [float(np.max(np.abs(d[low]))) for d in lat.discrepancies]
    y = check_grid(cfg.box)
    residual = max(eigen_residual(basis, n, y) for n in basis.indices)
    boundary = max(boundary_defect(basis, n) for n in basis.indices)
    ortho = orthonormality_defect(basis)
    results = {
        "orthonormality_defect": ortho,
        "max_eigen_residual": residual,
        "max_boundary_defect": boundary,
        "lattice_grids": list(lat.grid_sizes),
        "lattice_max_discrepancy": list(lat.max_discrepancy),
        "lattice_low_mode_discrepancy": low_max,
        "lattice_extrapolated_max": lat.max_extrapolated,
    }
    checks = {
        "orthonormality": ortho < tol["orthonormality"],
        "eigen_residual": residual < tol["eigen_residual"] and boundary < tol["eigen_residual"],
        "lattice": low_max[-1] < tol["lattice"] and all(b < a for a, b in zip(low_max, low_max[1:])),
    }
    return csv_text, _report(cfg, "spectrum", results, checks)


def cmd_gauge_check(cfg: ExperimentConfig):
    """Exactness checks of a pure-gauge perturbation."""
    if not cfg.is_pure_gauge:
        raise ConfigError("gauge-check needs a pure_gauge potential")
    tol = cfg.tolerances
    M = int(cfg.raw.get("gauge", {}).get("M_inner", 4 * cfg.basis_size))
    if M < cfg.basis_size:
        raise ConfigError("gauge.M_inner must be at least basis_size")
    pot = cfg.build_potential()
    basis = build_basis(cfg.box, M)
    window = symmetric_window(cfg.basis_size)
    inner = symmetric_window(M)
    table = build_table(basis, pot, inner, window)
    y = check_grid(cfg.box)

    levels = []
    for n in window:
        closed = second_order_shift_closed_form(basis, pot, n, M, table)
        levels.append({
            "n": n,
            "gauge_residual": exact_gauge_solution_residual(basis, pot, n, y),
            "first_order": abs(table[n, n]),
            "second_order_truncated": closed.direct,
            "second_order_via_completeness": abs(closed.via_completeness),
        })
    derivative = max((derivative_identity_check(basis, m, n, y) for m, n in combinations(window, 2)), default=0.0)
    identity = table_gauge_identity_defect(table)
    results = {
        "M_inner": M,
        "levels": levels,
        "max_gauge_residual": max(r["gauge_residual"] for r in levels),
        "max_first_order": max(r["first_order"] for r in levels),
        "max_via_completeness": max(r["second_order_via_completeness"] for r in levels),
        "gauge_identity_defect": identity,
        "derivative_identity_defect": derivative,
        "hermiticity_defect": table.hermiticity_defect,
    }
    checks = {
        "gauge_residual": results["max_gauge_residual"] < tol["gauge_residual"],
        "first_order": results["max_first_order"] < tol["first_order"],
        "closed_form": results["max_via_completeness"] < tol["closed_form"],
        "gauge_identity": identity < tol["gauge_identity"],
        "derivative_identity": derivative < tol["derivative_identity"],
    }
    return None, _report(cfg, "gauge-check", results, checks)


def cmd_vacuum_sweep(cfg: ExperimentConfig):
    """Vacuum-energy sums over the configured truncations.

    The basis is enlarged beyond ``basis_size`` when a truncation needs it.
    """
    tol = cfg.tolerances
    pot = cfg.build_potential()
    cover = covering_truncation(cfg.truncations)
    basis = build_basis(cfg.box, max(cfg.basis_size, cover.M_inner, cover.depth))
    table = vacuum_table(basis, pot, cover)
    reports = sweep(basis, pot, cfg.truncations, table)
    csv_text = sweep_csv(reports)

    agreement = [abs(r.dE2_hole - r.dE2_qft_redefined) / r.abs_scale if r.abs_scale else 0.0 for r in reports]
    ratios = [r.cancellation_ratio for r in reports]
    results = {
        "reports": [r.to_dict() for r in reports],
        "hole_qft_agreement": agreement,
        "summation_order": [row._asdict() for row in summation_order_demo(table, cfg.truncations)],
        "quadrature_error": table.quadrature_error,
    }
    checks = {"hole_qft_agreement": max(agreement) < 1e-13}
    if cfg.is_pure_gauge and not pot.is_zero:
        checks["cancellation"] = all(q < tol["cancellation_ratio"] for q in ratios)
        checks["cancellation_decreasing"] = all(b < a for a, b in zip(ratios, ratios[1:]))
        checks["qft_standard_negative"] = all(r.dE2_qft_standard < 0 for r in reports)
    return csv_text, _report(cfg, "vacuum-sweep", results, checks)


def _relative(a, b):
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale else 0.0


def cmd_fock_oracle(cfg: ExperimentConfig):
    """Many-body perturbation theory against exact diagonalization."""
    tol = cfg.tolerances
    pot = cfg.build_potential()
    w = cfg.window
    basis = build_basis(cfg.box, max(w.K_neg, w.K_pos))
    table = build_table(basis, pot, w.modes)
    lambdas = list(cfg.lambdas)
    vacua = {}
    checks = {}
    for vac in cfg.vacua():
        ops = build_operators(basis, table, w, vac)
        ident = expectation_identities(ops)
        mb = pt_from_spectrum(ops)
        sp_pt = single_particle_pt(ops, table)
        residuals, slope, shifts = lambda_scaling(ops, lambdas, mb)
        per_lambda = [
            {"lambda": lam, "exact_shift": s.shift, "overlap": s.overlap, "n_below": s.n_below,
             "n_degenerate": s.n_degenerate, "sector_dim": s.sector_dim,
             "pt_prediction": lam * mb.E1 + lam ** 2 * mb.E2, "residual": r}
            for lam, s, r in zip(lambdas, shifts, residuals)
        ]
        below = ident.below_vacuum_count > 0 or any(s.n_below > 0 for s in shifts)
        vacua[vac.tag] = {
            "L": vac.L,
            "identities": ident.to_dict(),
            "many_body": mb._asdict(),
            "single_particle": sp_pt._asdict(),
            "E1_relative_difference": _relative(mb.E1, sp_pt.E1),
            "E2_relative_difference": _relative(mb.E2, sp_pt.E2),
            "lambdas": per_lambda,
            "residual_slope": slope,
            "below_vacuum_states": below,
        }
        id_tol = tol["fock_identity"]
        checks[f"{vac.tag}_identities"] = (
            ident.anticommutator_defect <= id_tol and ident.occupation_defect <= id_tol
            and ident.four_operator_defect <= id_tol and abs(ident.vacuum_energy) <= id_tol
            and ident.hermiticity_defect <= id_tol and ident.number_conservation_defect <= id_tol
        )
        checks[f"{vac.tag}_pt_agreement"] = (
            vacua[vac.tag]["E1_relative_difference"] <= tol["pt_relative"]
            and vacua[vac.tag]["E2_relative_difference"] <= tol["pt_relative"]
        )
    results = {"window": {"K_neg": w.K_neg, "K_pos": w.K_pos}, "vacua": vacua}
    return None, _report(cfg, "fock-oracle", results, checks)


def cmd_matrix_elements(cfg: ExperimentConfig):
    """Dump ``V_{m,n}`` on the symmetric window ``|n| <= basis_size``."""
    pot = cfg.build_potential()
    basis = build_basis(cfg.box, cfg.basis_size)
    table = build_table(basis, pot, symmetric_window(cfg.basis_size))
    results = {"hermiticity_defect": table.hermiticity_defect, "quadrature_error": table.quadrature_error,
               "size": len(table.rows)}
    checks = {"hermiticity": table.hermiticity_defect < cfg.tolerances["hermiticity"]}
    if cfg.is_pure_gauge:
        diag = max(abs(first_order_shift(table, n)) for n in table.rows)
        results["max_diagonal"] = diag
        checks["first_order"] = diag < cfg.tolerances["first_order"]
    return table.to_csv(), _report(cfg, "matrix-elements", results, checks)


COMMANDS = {
    "spectrum": (cmd_spectrum, "CSV of n, k_n, energy and lattice discrepancy"),
    "gauge-check": (cmd_gauge_check, "JSON report of pure-gauge exactness checks"),
    "vacuum-sweep": (cmd_vacuum_sweep, "CSV sweep of vacuum sums plus JSON summary"),
    "fock-oracle": (cmd_fock_oracle, "JSON comparison of perturbation theory with exact diagonalization"),
    "matrix-elements": (cmd_matrix_elements, "CSV dump of the matrix-element table"),
}


# --------------------------------------------------------------------------- #
#                                 driver                                       #
# --------------------------------------------------------------------------- #

def build_parser():
    parser = _Parser(prog="diracvac", description="Vacuum-energy experiments for a confined 1+1D Dirac field.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY.PATH=VALUE",
                       help="override one field; VALUE is parsed as JSON when possible")
        p.add_argument("--a", type=float, help="box half-width")
        p.add_argument("--m", type=float, help="fermion mass")
        p.add_argument("--n-max", type=int, help="basis size")
        p.add_argument("--out", help="primary output path (CSV, or JSON for JSON-only commands)")
        p.add_argument("--summary", help="JSON summary path for CSV-producing commands")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    doc = read_config_file(args.config) if args.config else {}
    overrides = list(args.overrides)
    for flag, path in (("a", "box.a"), ("m", "box.m"), ("n_max", "basis_size")):
        value = getattr(args, flag)
        if value is not None:
            overrides.append(f"{path}={json.dumps(value)}")
    return load_config(doc, overrides)


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _Usage as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    func = COMMANDS[args.command][0]
    try:
        cfg = _config_from_args(args)
        table_text, report = func(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DiracVacError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT

    json_text = dump_json(report)
    if table_text is None:
        path = args.out or cfg.json_path
        _write(path, json_text) if path else sys.stdout.write(json_text)
    else:
        path = args.out or cfg.csv_path
        _write(path, table_text) if path else sys.stdout.write(table_text)
        summary = args.summary or cfg.json_path
        if summary:
            _write(summary, json_text)
    if not report["ok"]:
        failed = [k for k, v in report["checks"].items() if not v]
        print(f"invariant violation: failed checks {failed}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
