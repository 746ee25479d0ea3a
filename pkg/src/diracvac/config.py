"""Experiment configuration: a JSON document plus dotted-path overrides.

Every field has a default, so an empty document is a valid configuration.
Validation happens once in :func:`load_config` and raises
:class:`~diracvac.errors.ConfigError` on anything malformed.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from typing import Any

from .errors import ConfigError
from .fock_oracle import MAX_MODES, ModeWindow, VacuumChoice
from .potentials import (
    CHI_FAMILIES, FIELD_FAMILIES, PURE_GAUGE, ChiSpec, make_gauge_potential,
    make_general_potential, zero_potential,
)
from .spectral_basis import BoxParams
from .vacuum_sums import Truncation

SCHEMA = "diracvac.run/1"

DEFAULT_TOLERANCES = {
    "orthonormality": 1e-12,
    "eigen_residual": 1e-10,
    "lattice": 1e-3,
    "gauge_residual": 1e-8,
    "first_order": 1e-10,
    "gauge_identity": 1e-8,
    "derivative_identity": 1e-10,
    "closed_form": 1e-10,
    "hermiticity": 1e-10,
    "cancellation_ratio": 0.1,
    "fock_identity": 1e-14,
    "pt_relative": 1e-12,
}

DEFAULTS: dict[str, Any] = {
    "box": {"a": 1.0, "m": 0.0},
    "basis_size": 8,
    "potential": {"kind": "pure_gauge", "family": "sine_series", "coefficients": [1.0]},
    "truncation": {"L": [4, 8, 16]},
    "oracle": {"K_neg": 4, "K_pos": 4, "lambdas": [0.2, 0.1, 0.05], "band_L": 2},
    "lattice": {"grids": [200, 400, 800], "n_check": 3},
    "outputs": {"csv": None, "json": None},
    "tolerances": {},
}


def _merge(base, extra):
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def apply_override(doc: dict, assignment: str) -> None:
    """Apply ``key.path=value`` in place; ``value`` is parsed as JSON when
    possible and kept as a string otherwise."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not of the form key.path=value")
    path, raw = assignment.split("=", 1)
    keys = path.strip().split(".")
    if not all(keys):
        raise ConfigError(f"bad override path {path!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = doc
    for k in keys[:-1]:
        nxt = node.get(k)
        if not isinstance(nxt, dict):
            nxt = node[k] = {}
        node = nxt
    node[keys[-1]] = value


def _int_list(value, name):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{name} must be a non-empty list of integers")
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
            raise ConfigError(f"{name} entries must be integers, got {v!r}")
        out.append(int(v))
    return out


def _number(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated configuration shared by all subcommands."""

    raw: dict  # normalized document, echoed in every report
    box: BoxParams
    basis_size: int
    potential_spec: dict
    truncations: tuple
    window: ModeWindow
    band_L: int | None
    lambdas: tuple
    lattice_grids: tuple
    lattice_check: int
    tolerances: dict
    csv_path: str | None
    json_path: str | None

    @property
    def is_pure_gauge(self):
        return self.potential_spec.get("kind") == PURE_GAUGE

    def build_potential(self):
        """Construct the potential; may raise ``InvariantError`` for a gauge
        function that does not vanish at the walls."""
        spec = self.potential_spec
        kind = spec.get("kind")
        if kind == "zero":
            return zero_potential()
        if kind == PURE_GAUGE:
            return make_gauge_potential(ChiSpec(spec["family"], tuple(spec["coefficients"])), self.box)
        return make_general_potential(self.box, spec.get("A0"), spec.get("Ay"))

    def vacua(self):
        out = [VacuumChoice.standard()]
        if self.band_L is not None:
            out.append(VacuumChoice.band(self.band_L))
        return out


def _potential_spec(spec, box):
    if not isinstance(spec, dict):
        raise ConfigError("potential must be an object")
    kind = spec.get("kind")
    if kind == "zero":
        return {"kind": "zero"}
    if kind == PURE_GAUGE:
        family = spec.get("family", "sine_series")
        if family not in CHI_FAMILIES:
            raise ConfigError(f"unknown chi family {family!r}; expected one of {CHI_FAMILIES}")
        coeffs = spec.get("coefficients")
        if not isinstance(coeffs, list) or not coeffs:
            raise ConfigError("pure_gauge potential needs a non-empty coefficients list")
        return {"kind": PURE_GAUGE, "family": family,
                "coefficients": [_number(c, "coefficient") for c in coeffs]}
    if kind == "general":
        out = {"kind": "general"}
        for key in ("A0", "Ay"):
            field = spec.get(key) or {"family": "zero"}
            if not isinstance(field, dict) or field.get("family") not in FIELD_FAMILIES:
                raise ConfigError(f"{key} needs a family from {FIELD_FAMILIES}")
            out[key] = dict(field)
        # surface parameter errors now rather than mid-run
        make_general_potential(box, out["A0"], out["Ay"])
        return out
    raise ConfigError(f"potential kind must be 'pure_gauge', 'general' or 'zero', got {kind!r}")


def _truncations(spec):
    if not isinstance(spec, dict):
        raise ConfigError("truncation must be an object")
    Ls = _int_list(spec.get("L"), "truncation.L")
    Ms = _int_list(spec["M_inner"], "truncation.M_inner") if spec.get("M_inner") is not None else [25 * L for L in Ls]
    Ds = _int_list(spec["D"], "truncation.D") if spec.get("D") is not None else [24 * L for L in Ls]
    if not len(Ls) == len(Ms) == len(Ds):
        raise ConfigError("truncation.L, M_inner and D must have equal lengths")
    return tuple(Truncation(L, M, D) for L, M, D in zip(Ls, Ms, Ds))


def load_config(doc: dict | None = None, overrides=()) -> ExperimentConfig:
    """Merge ``doc`` over the defaults, apply overrides and validate."""
    if doc is not None and not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    raw = _merge(DEFAULTS, doc or {})
    for item in overrides:
        apply_override(raw, item)

    box_spec = raw.get("box")
    if not isinstance(box_spec, dict):
        raise ConfigError("box must be an object")
    box = BoxParams(_number(box_spec.get("a"), "box.a"), _number(box_spec.get("m"), "box.m"))

    basis_size = raw.get("basis_size")
    if isinstance(basis_size, bool) or not isinstance(basis_size, int) or basis_size < 1:
        raise ConfigError(f"basis_size must be a positive integer, got {basis_size!r}")

    potential = _potential_spec(raw.get("potential"), box)
    truncs = _truncations(raw.get("truncation"))

    oracle = raw.get("oracle")
    if not isinstance(oracle, dict):
        raise ConfigError("oracle must be an object")
    window = ModeWindow(*_int_list([oracle.get("K_neg"), oracle.get("K_pos")], "oracle window"))
    if window.n_modes > MAX_MODES:
        raise ConfigError(f"oracle window exceeds {MAX_MODES} modes")
    band_L = oracle.get("band_L")
    if band_L is not None:
        band_L = _int_list(band_L, "oracle.band_L")[0]
        VacuumChoice.band(band_L).filled(window)
    lambdas = tuple(_number(x, "oracle.lambdas") for x in (oracle.get("lambdas") or []))
    if not lambdas or any(x <= 0 for x in lambdas):
        raise ConfigError("oracle.lambdas must be a non-empty list of positive numbers")

    lattice = raw.get("lattice")
    if not isinstance(lattice, dict):
        raise ConfigError("lattice must be an object")
    grids = tuple(_int_list(lattice.get("grids"), "lattice.grids"))
    n_check = _int_list(lattice.get("n_check"), "lattice.n_check")[0]
    if n_check < 1:
        raise ConfigError("lattice.n_check must be positive")

    tol_spec = raw.get("tolerances") or {}
    unknown = set(tol_spec) - set(DEFAULT_TOLERANCES)
    if unknown:
        raise ConfigError(f"unknown tolerance keys {sorted(unknown)}")
    tolerances = {**DEFAULT_TOLERANCES, **{k: _number(v, f"tolerances.{k}") for k, v in tol_spec.items()}}

    outputs = raw.get("outputs") or {}
    return ExperimentConfig(
        raw=raw, box=box, basis_size=basis_size, potential_spec=potential,
        truncations=truncs, window=window, band_L=band_L, lambdas=lambdas,
        lattice_grids=grids, lattice_check=n_check, tolerances=tolerances,
        csv_path=outputs.get("csv"), json_path=outputs.get("json"),
    )


def read_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
