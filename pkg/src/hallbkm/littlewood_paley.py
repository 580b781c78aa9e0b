"""Littlewood-Paley projections, the B^0_{inf,inf} norm and a dyadic BMO estimate.

The low-pass profile is the standard C-infinity transition built from
``s(x) = exp(-1/x)``::

    m(r) = s(2 - r) / (s(2 - r) + s(r - 1))

which equals 1 on ``r <= 1``, vanishes on ``r >= 2`` and decreases in between.
Bands are taken with respect to the physical wavenumber magnitude, so the
decomposition does not depend on the box length in the continuum limit.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import UsageError
from .spectral import Field, physical_values

MULTIPLIER_PROFILE = "exp-transition-v1: m(r)=s(2-r)/(s(2-r)+s(r-1)), s(x)=exp(-1/x)"


def _s(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def low_pass_multiplier(r):
    """Radial low-pass profile m_{<0}(r)."""
    a = _s(2.0 - np.asarray(r, dtype=float))
    b = _s(np.asarray(r, dtype=float) - 1.0)
    return a / (a + b)


def k_max(grid):
    """Index of the last band needed so that P_{<k_max+1} is the identity on the grid."""
    top = float(np.max(grid.kmag))
    return max(0, int(np.ceil(np.log2(top))) + 1) if top > 0 else 0


def _check_k(k):
    if int(k) != k or k < 0:
        raise UsageError(f"band index must be a non-negative integer, got {k!r}")


@lru_cache(maxsize=64)
def _low_weight(grid, k):
    w = low_pass_multiplier(grid.kmag * 2.0 ** (-k))
    w.flags.writeable = False
    return w


@lru_cache(maxsize=64)
def _band_weight(grid, k):
    w = _low_weight(grid, k + 1) - _low_weight(grid, k)
    w.flags.writeable = False
    return w


def low_weight(grid, k):
    """Spectral multiplier of P_{<k} (read-only, cached per grid)."""
    return _low_weight(grid, int(k))


def band_weight(grid, k):
    """Spectral multiplier of P_k (read-only, cached per grid)."""
    return _band_weight(grid, int(k))


def project_below(f, k):
    """P_{<k} f as a spectral field."""
    _check_k(k)
    a = f.to_spectral()
    return Field(a.grid, a.data * low_weight(a.grid, k), True)


def project_band(f, k):
    """P_k f = P_{<k+1} f - P_{<k} f as a spectral field."""
    _check_k(k)
    a = f.to_spectral()
    return Field(a.grid, a.data * band_weight(a.grid, k), True)


@dataclass
class BandDecomposition:
    base: Field
    bands: list

    def reconstruct(self):
        total = self.base.data.copy()
        for b in self.bands:
            total = total + b.data
        return Field(self.base.grid, total, True)


def decompose(f):
    a = f.to_spectral()
    top = k_max(a.grid)
    return BandDecomposition(project_below(a, 0), [project_band(a, k) for k in range(top + 1)])


def _sup(vals, ncomp):
    if ncomp:
        return float(np.sqrt(np.max(np.sum(vals**2, axis=tuple(range(ncomp))))))
    return float(np.max(np.abs(vals)))


def besov_parts(f, oversample=True):
    """Return ``(||P_{<0} f||_inf, [||P_k f||_inf for k = 0..k_max])``.

    Bands whose multiplier misses every nonzero coefficient are reported as 0
    without a transform.
    """
    a = f.to_spectral()
    g = a.grid
    ncomp = len(a.components)
    active = np.any(a.data != 0, axis=tuple(range(ncomp))) if ncomp else a.data != 0

    def sup_of(weight):
        if not np.any(active & (weight != 0)):
            return 0.0
        return _sup(physical_values(Field(g, a.data * weight, True), oversample), ncomp)

    low = sup_of(low_weight(g, 0))
    bands = [sup_of(band_weight(g, k)) for k in range(k_max(g) + 1)]
    return low, bands


def besov_norm(f, oversample=True):
    """sup_k ||P_k f||_inf + ||P_{<0} f||_inf (inhomogeneous B^0_{inf,inf})."""
    low, bands = besov_parts(f, oversample)
    return max(bands) + low


def _dyadic_levels(n):
    levels = []
    j = 0
    while n % (2**j) == 0 and n // 2**j >= 4:
        levels.append(j)
        j += 1
    return levels


def bmo_norm_estimate(f):
    """Max mean oscillation over grid-aligned dyadic cubes of side L/2^j.

    Levels run while the cube still holds at least 4 points per side.  For
    vector fields the oscillation uses the Euclidean magnitude of the
    deviation from the cube mean.
    """
    vals = f.data if not f.spectral else physical_values(f)
    ncomp = len(f.components)
    if ncomp == 0:
        vals = vals[None]
        ncomp = 1
    lead = vals.shape[:ncomp]
    n = f.grid.n
    best = 0.0
    for j in _dyadic_levels(n):
        c = 2**j
        s = n // c
        blocks = vals.reshape(lead + (c, s, c, s, c, s))
        inner = tuple(ncomp + i for i in (1, 3, 5))
        dev = blocks - blocks.mean(axis=inner, keepdims=True)
        mag = np.sqrt(np.sum(dev**2, axis=tuple(range(ncomp))))
        osc = mag.mean(axis=(1, 3, 5))
        best = max(best, float(osc.max()))
    return best
