"""Divergence-free field generators shared by initial conditions and corpora."""
from __future__ import annotations

import numpy as np

from .errors import UsageError
from .spectral import Field, Grid, fft, leray_array, sup_norm


def _spectral(grid, comps):
    return Field(grid, fft(np.array(comps)), True)


def beltrami(grid, amplitude=1.0):
    """``amplitude * (sin kz, cos kz, 0)`` with k the lowest box wavenumber; curl B = k B."""
    X, Y, Z = grid.coords()
    k = grid.scale
    return _spectral(grid, [amplitude * np.sin(k * Z), amplitude * np.cos(k * Z), 0 * Z])


def abc(grid, A=1.0, B=1.0, C=1.0):
    """Arnold-Beltrami-Childress flow at the lowest box wavenumber."""
    X, Y, Z = grid.coords()
    k = grid.scale
    return _spectral(grid, [
        A * np.sin(k * Z) + C * np.cos(k * Y),
        B * np.sin(k * X) + A * np.cos(k * Z),
        C * np.sin(k * Y) + B * np.cos(k * X),
    ])


def single_mode(grid, m=1, amplitude=1.0):
    """``(0, 0, amplitude * sin(m k x))``."""
    X, Y, Z = grid.coords()
    return _spectral(grid, [0 * X, 0 * X, amplitude * np.sin(m * grid.scale * X)])


def _place_lattice(grid, a, band):
    """Put lattice coefficients ``a[:, z, y, x]`` (indices -band..band) into the reduced layout."""
    n = grid.n
    m = np.arange(-band, band + 1)
    out = np.zeros((3,) + grid.spectral_shape, dtype=complex)
    iz = (m % n)[:, None, None]
    iy = (m % n)[None, :, None]
    ix = np.arange(band + 1)[None, None, :]
    out[:, iz, iy, ix] = a[:, :, :, band:]
    return leray_array(grid, out)


def random_band(grid, band, seed, amplitude=1.0):
    """Seeded random divergence-free trigonometric polynomial.

    Coefficients are drawn on the integer lattice ``|m| <= band`` (Euclidean)
    independently of the grid size, Hermitian-symmetrised and Leray-projected.
    The field is scaled so that its maximum on a fixed reference grid of
    ``8 band + 8`` points per axis (four times the minimal resolving grid) equals
    ``amplitude``.  Seed, band and amplitude therefore describe the same
    continuum field on every grid that resolves it.
    """
    band = int(band)
    if band < 1 or band > grid.n // 2 - 1:
        raise UsageError(f"band must lie in 1..{grid.n // 2 - 1} for n={grid.n}, got {band}")
    rng = np.random.default_rng(seed)
    size = 2 * band + 1
    shape = (3, size, size, size)
    a = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    a = 0.5 * (a + np.conj(a[:, ::-1, ::-1, ::-1]))
    m = np.arange(-band, band + 1)
    mz, my, mx = np.meshgrid(m, m, m, indexing="ij")
    a = a * (mx**2 + my**2 + mz**2 <= band**2)

    ref = Grid(8 * band + 8, grid.length)
    top = sup_norm(Field(ref, _place_lattice(ref, a, band), True), oversample=False)
    out = _place_lattice(grid, a, band)
    if top == 0:
        return Field(grid, out, True)
    return Field(grid, out * (amplitude / top), True)
