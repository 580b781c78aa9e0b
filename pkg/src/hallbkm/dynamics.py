"""Right-hand sides of resistive electron-MHD and Hall-MHD.

E-MHD::

    dB/dt = -curl((curl B) x B) + lap B

Hall-MHD (unit resistivity, viscosity ``nu``)::

    du/dt = P[-(u.grad)u + (B.grad)B] + nu lap u
    dB/dt = -(u.grad)B + (B.grad)u - curl((curl B) x B) + lap B

``P`` is the Leray projector, which removes the pressure gradient.  Every
quadratic product is formed in physical space and then 2/3-dealiased, so on
dealiased inputs the curl form and the advective form of the Hall term
compute the same Galerkin-truncated quadratic.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import UsageError, ValidationError
from .spectral import Field, curl_array, fft, ifft, leray_array, sobolev_seminorm

MODELS = ("emhd", "hallmhd")
DIVERGENCE_RTOL = 1e-9


@dataclass(frozen=True)
class SimState:
    """Time, magnetic field and (Hall-MHD only) velocity, both spectral."""

    t: float
    B: Field
    u: Field | None = None
    model: str = "emhd"
    nu: float = 0.0

    def __post_init__(self):
        if self.model not in MODELS:
            raise UsageError(f"unknown model {self.model!r}")
        if self.model == "emhd" and self.u is not None:
            raise UsageError("E-MHD state carries no velocity")
        if self.model == "hallmhd" and self.u is None:
            raise UsageError("Hall-MHD state needs a velocity field")
        if self.nu < 0:
            raise UsageError(f"viscosity must be >= 0, got {self.nu}")
        for f in (self.B, self.u):
            if f is not None and (not f.spectral or f.components != (3,)):
                raise UsageError("state fields must be spectral 3-vectors")
        if self.u is not None and self.u.grid != self.B.grid:
            raise UsageError("u and B live on different grids")

    @property
    def grid(self):
        return self.B.grid

    def with_fields(self, t, B, u=None):
        g = self.grid
        return replace(self, t=t, B=Field(g, B, True), u=None if u is None else Field(g, u, True))


def divergence_defect(grid, a):
    """max |k . a| / max |k||a| over modes: a scale-free divergence measure."""
    kx, ky, kz = grid.kvec
    div = np.abs(kx * a[0] + ky * a[1] + kz * a[2])
    ref = np.sqrt(grid.k2) * np.sqrt(np.sum(np.abs(a) ** 2, axis=0))
    top = float(np.max(ref))
    return float(np.max(div)) / top if top > 0 else 0.0


def _check_divfree(f, name):
    if f is None:
        return
    d = divergence_defect(f.grid, f.data)
    if not d <= DIVERGENCE_RTOL:
        raise ValidationError(f"{name} is not divergence-free (relative defect {d:.3e})")


def _require(f, name):
    if not f.spectral or f.components != (3,):
        raise UsageError(f"{name} must be a spectral 3-vector field")


# --- array kernels -----------------------------------------------------------

def _grad_phys(grid, a):
    """Physical d_i a_j, shape (3, 3, n, n, n)."""
    return ifft(np.stack([1j * k * a for k in grid.kvec]), grid.n)


def _advect(a_phys, grad_b):
    """(a . grad) b from physical a and physical d_i b_j."""
    return a_phys[0] * grad_b[0] + a_phys[1] * grad_b[1] + a_phys[2] * grad_b[2]


def _cross(a, b):
    return np.stack([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])


def _dealiased(grid, p):
    return fft(p) * grid.dealias_mask


def hall_array(grid, B):
    """curl of the dealiased product (curl B) x B."""
    J = curl_array(grid, B)
    jb = _cross(ifft(J, grid.n), ifft(B, grid.n))
    return curl_array(grid, _dealiased(grid, jb))


def nonlinear_arrays(grid, model, B, u=None):
    """Solenoidal nonlinear parts ``(N_B, N_u)``; linear terms excluded.

    Hall-MHD uses the rotational forms, equal to the advective ones for
    divergence-free fields up to gradients the projection removes:
    ``-(u.grad)u + (B.grad)B -> u x omega + J x B`` and
    ``-(u.grad)B + (B.grad)u - curl(J x B) = curl((u - J) x B)``.
    """
    if model == "emhd":
        return -hall_array(grid, B), None
    n = grid.n
    J = curl_array(grid, B)
    phys = ifft(np.concatenate([u, curl_array(grid, u), B, J]), n)
    up, wp, Bp, Jp = phys[0:3], phys[3:6], phys[6:9], phys[9:12]
    prods = _dealiased(grid, np.concatenate([_cross(up, wp) + _cross(Jp, Bp), _cross(up - Jp, Bp)]))
    Nu = leray_array(grid, prods[:3])
    # a curl is solenoidal already, so only the velocity needs projecting
    NB = curl_array(grid, prods[3:])
    return NB, Nu


# --- public operations ---------------------------------------------------------

def hall_term(B, check=True):
    _require(B, "B")
    if check:
        _check_divfree(B, "B")
    return Field(B.grid, hall_array(B.grid, B.data), True)


def emhd_rhs(B, check=True):
    """Curl form: P[-curl(J x B) + lap B]."""
    _require(B, "B")
    if check:
        _check_divfree(B, "B")
    g = B.grid
    out = -hall_array(g, B.data) - g.k2 * B.data
    return Field(g, leray_array(g, out), True)


def emhd_rhs_advective(B, check=True):
    """Advective form: -(B.grad)J + (J.grad)B + lap B, products dealiased."""
    _require(B, "B")
    if check:
        _check_divfree(B, "B")
    g = B.grid
    J = curl_array(g, B.data)
    Bp, Jp = ifft(B.data, g.n), ifft(J, g.n)
    prod = -_advect(Bp, _grad_phys(g, J)) + _advect(Jp, _grad_phys(g, B.data))
    return Field(g, _dealiased(g, prod) - g.k2 * B.data, True)


def hallmhd_rhs(state, check=True):
    """Return ``(du_dt, dB_dt)`` as spectral fields."""
    if state.model != "hallmhd":
        raise UsageError("hallmhd_rhs needs a Hall-MHD state")
    if check:
        _check_divfree(state.B, "B")
        _check_divfree(state.u, "u")
    g = state.grid
    NB, Nu = nonlinear_arrays(g, "hallmhd", state.B.data, state.u.data)
    du = Nu - state.nu * g.k2 * state.u.data
    dB = NB - g.k2 * state.B.data
    return Field(g, du, True), Field(g, dB, True)


def hallmhd_rhs_advective(state, check=True):
    """Advective-form ``(du_dt, dB_dt)``, kept as an independent oracle."""
    if state.model != "hallmhd":
        raise UsageError("hallmhd_rhs_advective needs a Hall-MHD state")
    if check:
        _check_divfree(state.B, "B")
        _check_divfree(state.u, "u")
    g = state.grid
    B, u = state.B.data, state.u.data
    up, Bp = ifft(u, g.n), ifft(B, g.n)
    gu, gB = _grad_phys(g, u), _grad_phys(g, B)
    Nu = _dealiased(g, -_advect(up, gu) + _advect(Bp, gB))
    NB = _dealiased(g, -_advect(up, gB) + _advect(Bp, gu)) - hall_array(g, B)
    du = leray_array(g, Nu) - state.nu * g.k2 * u
    dB = leray_array(g, NB) - g.k2 * B
    return Field(g, du, True), Field(g, dB, True)


def rhs(state, check=True):
    """Model-dispatching right-hand side ``(dB_dt, du_dt or None)``."""
    if state.model == "emhd":
        return emhd_rhs(state.B, check), None
    du, dB = hallmhd_rhs(state, check)
    return dB, du


def energy_flux(state):
    """``(0.5 (|u|^2 + |B|^2), nu |grad u|^2 + |grad B|^2)`` in L^2 over the box."""
    energy = 0.5 * sobolev_seminorm(state.B, 0) ** 2
    dissipation = sobolev_seminorm(state.B, 1) ** 2
    if state.u is not None:
        energy += 0.5 * sobolev_seminorm(state.u, 0) ** 2
        dissipation += state.nu * sobolev_seminorm(state.u, 1) ** 2
    return energy, dissipation
