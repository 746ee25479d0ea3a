"""Composite Gauss-Legendre rules on [-a, a] for oscillatory integrands."""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

GAUSS_ORDER = 20


@lru_cache(maxsize=8)
def _legendre(order):
    return np.polynomial.legendre.leggauss(order)


def panel_count(length, wavenumber, refine=1, min_panels=4):
    """Panels needed so that each spans at most one period of ``wavenumber``.

    With a 20-point rule one period per panel leaves a truncation error far
    below double precision; ``refine`` multiplies the count (used for the
    doubling convergence check).
    """
    periods = length * max(wavenumber, 0.0) / (2.0 * math.pi)
    return refine * max(min_panels, math.ceil(periods) + 1)


def gauss_panels(a, wavenumber, breakpoints=(), refine=1, order=GAUSS_ORDER):
    """Nodes and weights of a composite rule on ``[-a, a]``.

    Parameters
    ----------
    a : float
        Box half-width.
    wavenumber : float
        Largest angular frequency present in the integrand.
    breakpoints : sequence of float
        Interior points where the integrand is not smooth (for example the
        edges of a step potential). Panels never straddle them.
    refine : int
        Panel-count multiplier.

    Returns
    -------
    y, w : ndarray
    """
    x, wx = _legendre(order)
    cuts = sorted({-a, a, *(b for b in breakpoints if -a < b < a)})
    ys, ws = [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        n = panel_count(hi - lo, wavenumber, refine)
        edges = np.linspace(lo, hi, n + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        ys.append((mid[:, None] + half[:, None] * x).ravel())
        ws.append((half[:, None] * wx).ravel())
    return np.concatenate(ys), np.concatenate(ws)
