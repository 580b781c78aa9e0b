"""Fourier calculus on the periodic cube [0, L)^3.

Arrays are indexed ``[..., z, y, x]`` so that, in C order, x varies fastest.
Spectral arrays use the real-to-complex (Hermitian-reduced) layout of
``scipy.fft.rfftn``: the last axis holds the non-negative x frequencies
``0 .. n/2``.  The forward transform divides by ``n**3`` so the zero mode is
the spatial mean.

All differential operators use wavenumbers with the Nyquist frequency set to
zero.  The Nyquist mode of a real field is its own conjugate partner, so any
odd multiplier must vanish there to keep the output real.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .errors import UsageError, ValidationError

AXES = (-3, -2, -1)
HERMITIAN_RTOL = 1e-10
HERMITIAN_ATOL = 1e-13


@dataclass(frozen=True)
class Grid:
    """Uniform cubic grid with ``n`` points per axis on a box of period ``length``."""

    n: int
    length: float = 2 * np.pi

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8 or self.n % 2:
            raise UsageError(f"grid size must be an even integer >= 8, got {self.n!r}")
        if not (np.isfinite(self.length) and self.length > 0):
            raise UsageError(f"box length must be positive, got {self.length!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "length", float(self.length))

    @property
    def scale(self):
        """Physical wavenumber of integer frequency 1."""
        return 2 * np.pi / self.length

    @property
    def physical_shape(self):
        return (self.n, self.n, self.n)

    @property
    def spectral_shape(self):
        return (self.n, self.n, self.n // 2 + 1)

    @property
    def volume(self):
        return self.length**3

    @property
    def dx(self):
        return self.length / self.n

    @property
    def dealias_cutoff(self):
        """Largest integer frequency kept by :func:`dealias` (strictly below n/3)."""
        return (self.n - 1) // 3

    @cached_property
    def modes(self):
        """Integer frequencies ``(mx, my, mz)`` broadcastable to the spectral shape."""
        n = self.n
        full = np.rint(sfft.fftfreq(n, 1.0 / n)).astype(np.int64)
        half = np.arange(n // 2 + 1, dtype=np.int64)
        return (half[None, None, :], full[None, :, None], full[:, None, None])

    @cached_property
    def kvec(self):
        """Derivative wavenumbers ``(kx, ky, kz)``, Nyquist zeroed."""
        nyq = self.n // 2
        out = []
        for m in self.modes:
            k = m.astype(float) * self.scale
            k[np.abs(m) == nyq] = 0.0
            out.append(k)
        return tuple(out)

    @cached_property
    def ikvec(self):
        """``1j * kvec``, cached for derivative kernels."""
        return tuple(1j * k for k in self.kvec)

    @cached_property
    def inv_k2(self):
        """1/|k|^2 with the zero mode (and all-Nyquist modes) mapped to 0."""
        k2 = self.k2
        return np.divide(1.0, k2, out=np.zeros_like(k2), where=k2 > 0)

    @cached_property
    def k2(self):
        """|k|^2 on the full spectral shape, from the derivative wavenumbers."""
        kx, ky, kz = self.kvec
        return kx**2 + ky**2 + kz**2

    @cached_property
    def kmag(self):
        """True wavenumber magnitude |xi| (Nyquist included) on the spectral shape."""
        mx, my, mz = self.modes
        return self.scale * np.sqrt((mx**2 + my**2 + mz**2).astype(float))

    @cached_property
    def max_int_mode(self):
        """Largest per-axis integer frequency |m| on the spectral shape."""
        mx, my, mz = (np.abs(m) for m in self.modes)
        return np.maximum(np.maximum(mx, my), mz)

    @cached_property
    def dealias_mask(self):
        return self.max_int_mode <= self.dealias_cutoff

    @cached_property
    def hermitian_weights(self):
        """Multiplicity of each stored x frequency in the full spectrum."""
        w = np.full(self.n // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return w

    def coords(self):
        """Physical coordinates ``(X, Y, Z)``, each of shape ``(n, n, n)``."""
        x = np.arange(self.n) * self.dx
        Z, Y, X = np.meshgrid(x, x, x, indexing="ij")
        return X, Y, Z


@dataclass(frozen=True, eq=False)
class Field:
    """A scalar, vector or tensor field on a grid.

    ``data`` has shape ``components + grid shape``: ``()`` for a scalar,
    ``(3,)`` for a vector, ``(3, 3)`` for a gradient of a vector (entry
    ``[i, j]`` is ``d_i v_j``).
    """

    grid: Grid
    data: np.ndarray
    spectral: bool = False

    def __post_init__(self):
        expect = self.grid.spectral_shape if self.spectral else self.grid.physical_shape
        if self.data.shape[-3:] != expect:
            rep = "spectral" if self.spectral else "physical"
            raise UsageError(f"{rep} data must end with shape {expect}, got {self.data.shape}")

    @property
    def components(self):
        return self.data.shape[:-3]

    @property
    def is_scalar(self):
        return self.components == ()

    def to_spectral(self):
        return self if self.spectral else forward_transform(self)

    def to_physical(self):
        return inverse_transform(self) if self.spectral else self

    def _combine(self, other, op):
        if not isinstance(other, Field):
            return NotImplemented
        if other.grid != self.grid:
            raise UsageError("fields live on different grids")
        a, b = self, other
        if a.spectral != b.spectral:
            a, b = a.to_spectral(), b.to_spectral()
        return Field(self.grid, op(a.data, b.data), a.spectral)

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __neg__(self):
        return Field(self.grid, -self.data, self.spectral)

    def __mul__(self, c):
        if isinstance(c, Field):
            return NotImplemented
        return Field(self.grid, self.data * c, self.spectral)

    __rmul__ = __mul__


def zeros(grid, components=(3,), spectral=True):
    shape = grid.spectral_shape if spectral else grid.physical_shape
    dtype = complex if spectral else float
    return Field(grid, np.zeros(tuple(components) + shape, dtype=dtype), spectral)


# --- raw array kernels -----------------------------------------------------

def fft(a):
    return sfft.rfftn(a, axes=AXES, norm="forward", workers=-1)


def ifft(a, n):
    return sfft.irfftn(a, s=(n, n, n), axes=AXES, norm="forward", workers=-1)


def _resize_axis(a, axis, n, size, full):
    """Move integer-frequency content of one axis from length ``n`` to ``size``."""
    half = n // 2
    a = np.moveaxis(a, axis, -1)
    if full:
        out = np.zeros(a.shape[:-1] + (size,), dtype=a.dtype)
        if size >= n:
            out[..., :half] = a[..., :half]
            out[..., size - half + 1:] = a[..., half + 1:]
            out[..., half] += 0.5 * a[..., half]
            out[..., size - half] += 0.5 * a[..., half]
        else:
            h = size // 2
            out[..., :h] = a[..., :h]
            out[..., h + 1:] = a[..., n - h + 1:]
    else:
        out = np.zeros(a.shape[:-1] + (size // 2 + 1,), dtype=a.dtype)
        if size >= n:
            out[..., :half] = a[..., :half]
            out[..., half] = 0.5 * a[..., half] if size > n else a[..., half]
        else:
            h = size // 2
            out[..., :h] = a[..., :h]
    return np.moveaxis(out, -1, axis)


def resize_spectrum(a, n, size):
    """Embed (``size > n``) or truncate (``size < n``) a reduced spectrum.

    A Nyquist coefficient is split evenly between +n/2 and -n/2 when
    embedding, which keeps the trigonometric interpolant real.
    """
    if size == n:
        return a
    a = _resize_axis(a, -3, n, size, full=True)
    a = _resize_axis(a, -2, n, size, full=True)
    return _resize_axis(a, -1, n, size, full=False)


def physical_values(f, oversample=False):
    """Physical samples of ``f``, optionally on a 2x zero-padded grid."""
    n = f.grid.n
    if not oversample:
        return f.data if not f.spectral else ifft(f.data, n)
    a = f.data if f.spectral else fft(f.data)
    return ifft(resize_spectrum(a, n, 2 * n), 2 * n)


def hermitian_defect(grid, a):
    """Max violation of conjugate symmetry on the self-paired x planes."""
    n = grid.n
    neg = (-np.arange(n)) % n
    worst = 0.0
    for ix in (0, n // 2):
        p = a[..., ix]
        q = np.conj(p[..., neg, :][..., neg])
        worst = max(worst, float(np.max(np.abs(p - q), initial=0.0)))
    return worst


# --- transforms ------------------------------------------------------------

def forward_transform(f):
    if f.spectral:
        raise UsageError("forward_transform expects a physical field")
    return Field(f.grid, fft(f.data), True)


def inverse_transform(f):
    if not f.spectral:
        raise UsageError("inverse_transform expects a spectral field")
    scale = float(np.max(np.abs(f.data), initial=0.0))
    defect = hermitian_defect(f.grid, f.data)
    if defect > max(HERMITIAN_RTOL * scale, HERMITIAN_ATOL):
        raise ValidationError(f"coefficients are not Hermitian symmetric (defect {defect:.3e})")
    return Field(f.grid, ifft(f.data, f.grid.n), False)


def _require_spectral(f, name):
    if not f.spectral:
        raise UsageError(f"{name} expects a spectral field")


def _require_vector(f, name):
    if f.components != (3,):
        raise UsageError(f"{name} expects a 3-component vector field")


# --- differential operators -------------------------------------------------

def gradient(f):
    """Spectral gradient; output component ``i`` is ``d_i f``."""
    _require_spectral(f, "gradient")
    out = np.stack([1j * k * f.data for k in f.grid.kvec])
    return Field(f.grid, out, True)


def divergence(v):
    _require_spectral(v, "divergence")
    _require_vector(v, "divergence")
    kx, ky, kz = v.grid.kvec
    d = v.data
    return Field(v.grid, 1j * (kx * d[0] + ky * d[1] + kz * d[2]), True)


def curl_array(grid, d):
    kx, ky, kz = grid.ikvec
    return np.stack([
        ky * d[2] - kz * d[1],
        kz * d[0] - kx * d[2],
        kx * d[1] - ky * d[0],
    ])


def curl(v):
    _require_spectral(v, "curl")
    _require_vector(v, "curl")
    return Field(v.grid, curl_array(v.grid, v.data), True)


def laplacian(v):
    _require_spectral(v, "laplacian")
    return Field(v.grid, -v.grid.k2 * v.data, True)


def leray_array(grid, d):
    kx, ky, kz = grid.kvec
    kdotv = (kx * d[0] + ky * d[1] + kz * d[2]) * grid.inv_k2
    return np.stack([d[0] - kx * kdotv, d[1] - ky * kdotv, d[2] - kz * kdotv])


def leray_project(v):
    """Remove the gradient part of ``v``; the zero mode is left alone."""
    _require_spectral(v, "leray_project")
    _require_vector(v, "leray_project")
    return Field(v.grid, leray_array(v.grid, v.data), True)


def dealias(v):
    """Zero every mode with a per-axis integer frequency of n/3 or more."""
    _require_spectral(v, "dealias")
    return Field(v.grid, v.data * v.grid.dealias_mask, True)


# --- norms ------------------------------------------------------------------

def _pointwise_magnitude(vals, ncomp_axes):
    if ncomp_axes == 0:
        return np.abs(vals)
    axes = tuple(range(ncomp_axes))
    return np.sqrt(np.sum(vals**2, axis=axes))


def sup_norm(f, oversample=True):
    """Grid maximum of |f| (Euclidean over components).

    With ``oversample`` the field is zero-padded to 2n points per axis first,
    which tightens the grid estimate of the true supremum.
    """
    vals = physical_values(f, oversample)
    return float(np.max(_pointwise_magnitude(vals, len(f.components))))


def grad_sup_norm(v, oversample=True):
    """max over x, i, j of |d_i v_j|."""
    g = gradient(v.to_spectral())
    return float(np.max(np.abs(physical_values(g, oversample))))


def _mode_sum(grid, a2):
    """Sum a non-negative spectral density over the full spectrum."""
    return float(np.sum(a2 * grid.hermitian_weights))


def l2_norm(v):
    return sobolev_seminorm(v, 0)


def sobolev_seminorm(v, m):
    """||grad^m v||_{L^2} over the box, computed from Fourier coefficients."""
    if int(m) != m or not 0 <= m <= 5:
        raise UsageError(f"Sobolev order must be an integer in 0..5, got {m!r}")
    g = v.grid
    a = v.to_spectral().data
    dens = np.abs(a) ** 2
    if m:
        dens = dens * g.k2 ** int(m)
    return float(np.sqrt(g.volume * _mode_sum(g, dens)))


def inner_product(a, b):
    """Real L^2 inner product over the box."""
    g = a.grid
    x = a.to_spectral().data
    y = b.to_spectral().data
    return g.volume * _mode_sum(g, np.real(np.conj(x) * y))


def max_divergence(v, oversample=False):
    return sup_norm(divergence(v.to_spectral()), oversample)


def resample(f, n):
    """Spectrally resample ``f`` onto a grid with ``n`` points per axis."""
    grid = Grid(n, f.grid.length)
    a = resize_spectrum(f.to_spectral().data, f.grid.n, n)
    return Field(grid, a, True)
