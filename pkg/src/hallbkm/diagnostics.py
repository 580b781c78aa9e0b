"""Continuation-criterion diagnostics.

A :class:`Monitor` is fed states in time order and returns one
:class:`DiagnosticRecord` per sample: norms, criterion integrands, their
trapezoid-rule time integrals, the maximum-principle quantity
``U_max = exp(-K I(t)) sup |B|^2`` and the H^4 energy-inequality ratio.

``I(t)`` in ``U_max`` is the integral of ``||grad J||_inf`` for E-MHD and of
``||grad(u - J)||_inf`` for Hall-MHD.  The Hall-MHD criterion integral
``I_hall`` additionally carries ``||omega||_inf``; both are kept.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .errors import UsageError
from .littlewood_paley import besov_parts, bmo_norm_estimate
from .spectral import Field, curl, curl_array, grad_sup_norm, l2_norm, physical_values, sobolev_seminorm, sup_norm
from .dynamics import energy_flux

INTEGRAL_NAMES = ("I_emhd", "I_hall", "I_cdl", "I_bmo", "I_lps_u", "I_lps_gradB", "I_selfsim", "I_mp")


class LPSExponentWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class MaxPrincipleConfig:
    K: float = 6.0

    def __post_init__(self):
        if not self.K > 0:
            raise UsageError(f"K must be positive, got {self.K}")


@dataclass(frozen=True)
class LPSExponents:
    """Exponents of u in L^q(L^p) and grad B in L^gamma(L^beta)."""

    p: float = math.inf
    q: float = 2.0
    beta: float = math.inf
    gamma: float = 2.0

    def problems(self):
        msgs = []
        for name, space, time in (("p", self.p, self.q), ("beta", self.beta, self.gamma)):
            if not space > 3:
                msgs.append(f"{name}={space} is outside (3, inf]")
            elif 3 / space + 2 / time > 1:
                msgs.append(f"3/{name} + 2/time-exponent = {3 / space + 2 / time:.4g} exceeds 1")
        return msgs


@dataclass
class DiagnosticRecord:
    t: float
    energy: float = 0.0
    dissipation: float = 0.0
    sup_B: float = 0.0
    sup_u: float | None = None
    grad_J_sup: float = 0.0
    omega_sup: float | None = None
    grad_u_minus_J_sup: float | None = None
    curl_J_sup: float = 0.0
    omega_besov: float | None = None
    cdl_integrand: float = 0.0
    u_bmo: float | None = None
    gradB_bmo: float = 0.0
    lps_u_p: float | None = None
    lps_gradB_beta: float = 0.0
    h4_u: float | None = None
    h4_B: float = 0.0
    U_max: float = 0.0
    I_emhd: float = 0.0
    I_hall: float | None = None
    I_cdl: float = 0.0
    I_bmo: float = 0.0
    I_lps_u: float | None = None
    I_lps_gradB: float = 0.0
    I_selfsim: float = 0.0
    # not part of the CSV schema
    I_mp: float = 0.0
    omega_besov_bands: float | None = None
    grad_B_sup: float = 0.0
    bmo_integrand: float = 0.0
    h4_ratio: float | None = None

    def as_dict(self):
        return asdict(self)


CSV_COLUMNS = (
    "t", "energy", "dissipation", "sup_B", "sup_u", "grad_J_sup", "omega_sup", "grad_u_minus_J_sup",
    "curl_J_sup", "omega_besov", "cdl_integrand", "u_bmo", "gradB_bmo", "h4_u", "h4_B", "U_max",
    "I_emhd", "I_hall", "I_cdl", "I_bmo", "I_lps_u", "I_lps_gradB", "I_selfsim",
)


# --- single-snapshot quantities ------------------------------------------------

def current(B):
    return curl(B.to_spectral())


def vorticity(u):
    return curl(u.to_spectral())


def emhd_criterion_integrand(B, oversample=True):
    """||grad J||_inf with J = curl B."""
    return grad_sup_norm(current(B), oversample)


def hall_criterion_integrand(u, B, oversample=True):
    """||omega||_inf + ||grad(u - J)||_inf."""
    u = u.to_spectral()
    return sup_norm(vorticity(u), oversample) + grad_sup_norm(u - current(B), oversample)


def _cdl_scalar(sup_u, sup_B, grad_B_sup):
    a = sup_u**2 + sup_B**2 + grad_B_sup**2
    return (1.0 + a) / (1.0 + math.log1p(a))


def cdl_integrand(u, B, oversample=True):
    """Besov norm of the vorticity plus the logarithmic energy-type term."""
    B = B.to_spectral()
    sup_u = 0.0 if u is None else sup_norm(u, oversample)
    besov = 0.0
    if u is not None:
        low, bands = besov_parts(vorticity(u), oversample)
        besov = low + max(bands)
    return besov + _cdl_scalar(sup_u, sup_norm(B, oversample), grad_sup_norm(B, oversample))


def lp_norm(f, p, oversample=True):
    """L^p norm over the box by grid quadrature; p = inf uses :func:`sup_norm`."""
    if math.isinf(p):
        return sup_norm(f, oversample)
    vals = physical_values(f)
    ncomp = len(f.components)
    mag = np.sqrt(np.sum(vals**2, axis=tuple(range(ncomp)))) if ncomp else np.abs(vals)
    return float((np.sum(mag**p) * f.grid.dx**3) ** (1.0 / p))


def _gradient_field(v):
    v = v.to_spectral()
    g = v.grid
    return Field(g, np.stack([1j * k * v.data for k in g.kvec]), True)


def _entrywise_bmo(tensor):
    vals = physical_values(tensor)
    g = tensor.grid
    flat = vals.reshape((-1,) + g.physical_shape)
    return max(bmo_norm_estimate(Field(g, comp)) for comp in flat)


def bmo_integrand(u, B):
    """bmo(u)^2 + bmo(grad B)^2, grad B entrywise and reduced by max."""
    ub = 0.0 if u is None else bmo_norm_estimate(u)
    return ub**2 + _entrywise_bmo(_gradient_field(B)) ** 2


def selfsim_integrand(B, oversample=True):
    """||curl J||_inf."""
    return sup_norm(curl(current(B)), oversample)


def max_principle_U(state, I_accum, cfg=MaxPrincipleConfig(), oversample=True):
    """exp(-K I) sup |B|^2."""
    return math.exp(-cfg.K * I_accum) * sup_norm(state.B, oversample) ** 2


def lps_accumulate(records, p=math.inf, q=2.0, beta=math.inf, gamma=2.0):
    """Trapezoid integrals of ||u||_p^q and ||grad B||_beta^gamma over sample times.

    ``records`` yields objects with ``t``, ``lps_u_p`` and ``lps_gradB_beta``
    (``lps_u_p`` may be None, e.g. for E-MHD).  Exponents violating the
    Ladyzhenskaya-Prodi-Serrin condition trigger a warning, not an error.
    """
    for msg in LPSExponents(p, q, beta, gamma).problems():
        warnings.warn(msg, LPSExponentWarning, stacklevel=2)
    Iu = Ib = 0.0
    prev = None
    for r in records:
        fu = 0.0 if r.lps_u_p is None else r.lps_u_p**q
        fb = r.lps_gradB_beta**gamma
        if prev is not None:
            dt = r.t - prev[0]
            Iu += 0.5 * dt * (prev[1] + fu)
            Ib += 0.5 * dt * (prev[2] + fb)
        prev = (r.t, fu, fb)
    return Iu, Ib


def _h4_parts(state):
    xb = sobolev_seminorm(state.B, 4) ** 2
    db = 2.0 * sobolev_seminorm(state.B, 5) ** 2
    xu = du = 0.0
    if state.u is not None:
        xu = sobolev_seminorm(state.u, 4) ** 2
        du = 2.0 * state.nu * sobolev_seminorm(state.u, 5) ** 2
    return xb, xu, db + du


def _midpoint(a, b):
    return math.sqrt(a * b) if a > 0 and b > 0 else 0.5 * (a + b)


def h4_inequality_residual(state_prev, state_next, record):
    """Ratio of the H^4 energy-inequality left side to its bracketed right side.

    Left side: d/dt(|grad^4 u|^2 + |grad^4 B|^2) + 2 nu |grad^5 u|^2 + 2 |grad^5 B|^2.
    The time derivative is a logarithmic finite difference taken at the
    geometric midpoint, so exponentially decaying norms are differentiated
    exactly.  Sup-norm factors of the bracket come from ``record``.
    """
    dt = state_next.t - state_prev.t
    if not dt > 0:
        raise UsageError(f"states must be in increasing time order (dt={dt!r})")
    xb0, xu0, d0 = _h4_parts(state_prev)
    xb1, xu1, d1 = _h4_parts(state_next)
    x0, x1 = xb0 + xu0, xb1 + xu1
    if x0 > 0 and x1 > 0:
        xm = math.sqrt(x0 * x1)
        dx = math.log(x1 / x0) / dt * xm
    else:
        xm = 0.5 * (x0 + x1)
        dx = (x1 - x0) / dt
    lhs = dx + _midpoint(d0, d1)
    supB = record.sup_B
    if state_next.u is None:
        h4 = math.sqrt(_midpoint(xb0, xb1))
        bracket = ((math.log(2 + h4) + supB) * record.grad_J_sup + supB) * xm
    else:
        h4 = math.sqrt(_midpoint(xb0, xb1)) + math.sqrt(_midpoint(xu0, xu1))
        growth = (record.omega_sup or 0.0) + (record.grad_u_minus_J_sup or 0.0) + supB
        bracket = (math.log(2 + h4) + supB + l2_norm(state_next.u) + 1.0) * growth * xm
    return lhs / bracket if bracket > 0 else 0.0


# --- monitor -----------------------------------------------------------------

def _phys_max_abs(g, a, oversample):
    return float(np.max(np.abs(physical_values(Field(g, a, True), oversample))))


def _phys_max_mag(g, a, oversample):
    return sup_norm(Field(g, a, True), oversample)


def snapshot(state, lps=LPSExponents(), oversample=True):
    """Instantaneous diagnostics (no time integrals) as a DiagnosticRecord."""
    g = state.grid
    B = state.B.data
    k = g.kvec
    J = curl_array(g, B)
    gradJ = np.stack([1j * ki * J for ki in k])
    gradB = np.stack([1j * ki * B for ki in k])

    rec = DiagnosticRecord(t=state.t)
    rec.energy, rec.dissipation = energy_flux(state)
    rec.sup_B = _phys_max_mag(g, B, oversample)
    rec.grad_J_sup = _phys_max_abs(g, gradJ, oversample)
    rec.curl_J_sup = _phys_max_mag(g, curl_array(g, J), oversample)
    gB_vals = physical_values(Field(g, gradB, True), oversample)
    rec.grad_B_sup = float(np.max(np.abs(gB_vals)))
    gB_frob = float(np.sqrt(np.max(np.sum(gB_vals**2, axis=(0, 1)))))
    del gB_vals
    rec.h4_B = sobolev_seminorm(state.B, 4)
    gradB_field = Field(g, gradB, True)
    rec.gradB_bmo = _entrywise_bmo(gradB_field)
    rec.lps_gradB_beta = gB_frob if math.isinf(lps.beta) else lp_norm(gradB_field, lps.beta, oversample)

    sup_u = 0.0
    besov = 0.0
    u_bmo = 0.0
    if state.u is not None:
        u = state.u.data
        omega = curl_array(g, u)
        gradu = np.stack([1j * ki * u for ki in k])
        sup_u = rec.sup_u = _phys_max_mag(g, u, oversample)
        rec.omega_sup = _phys_max_mag(g, omega, oversample)
        rec.grad_u_minus_J_sup = _phys_max_abs(g, gradu - gradJ, oversample)
        low, bands = besov_parts(Field(g, omega, True), oversample)
        rec.omega_besov_bands = max(bands)
        besov = rec.omega_besov = low + rec.omega_besov_bands
        u_bmo = rec.u_bmo = bmo_norm_estimate(state.u)
        rec.lps_u_p = sup_u if math.isinf(lps.p) else lp_norm(state.u, lps.p, oversample)
        rec.h4_u = sobolev_seminorm(state.u, 4)
    rec.cdl_integrand = besov + _cdl_scalar(sup_u, rec.sup_B, rec.grad_B_sup)
    rec.bmo_integrand = u_bmo**2 + rec.gradB_bmo**2
    return rec


class Monitor:
    """Sequential accumulator of criterion integrals along one run."""

    def __init__(self, model, K=6.0, lps=LPSExponents(), oversample=True, integrals=None):
        self.model = model
        self.cfg = MaxPrincipleConfig(K)
        self.lps = lps
        self.oversample = oversample
        self.integrals = {name: 0.0 for name in INTEGRAL_NAMES}
        if integrals:
            unknown = set(integrals) - set(INTEGRAL_NAMES)
            if unknown:
                raise UsageError(f"unknown integrals {sorted(unknown)}")
            self.integrals.update({k: float(v) for k, v in integrals.items()})
        self._prev = None
        self.h4_ratio_max = None
        self.lps_warnings = lps.problems()

    def _integrands(self, rec):
        hall = self.model == "hallmhd"
        return {
            "I_emhd": rec.grad_J_sup,
            "I_hall": (rec.omega_sup + rec.grad_u_minus_J_sup) if hall else 0.0,
            "I_cdl": rec.cdl_integrand,
            "I_bmo": rec.bmo_integrand,
            "I_lps_u": rec.lps_u_p**self.lps.q if hall else 0.0,
            "I_lps_gradB": rec.lps_gradB_beta**self.lps.gamma,
            "I_selfsim": rec.curl_J_sup,
            "I_mp": rec.grad_u_minus_J_sup if hall else rec.grad_J_sup,
        }

    def sample(self, state):
        rec = snapshot(state, self.lps, self.oversample)
        now = self._integrands(rec)
        if self._prev is not None:
            prev_state, prev_vals = self._prev
            dt = state.t - prev_state.t
            if dt < 0:
                raise UsageError("samples must be taken in time order")
            if dt > 0:
                for name in INTEGRAL_NAMES:
                    self.integrals[name] += 0.5 * dt * (prev_vals[name] + now[name])
                rec.h4_ratio = h4_inequality_residual(prev_state, state, rec)
                if self.h4_ratio_max is None or rec.h4_ratio > self.h4_ratio_max:
                    self.h4_ratio_max = rec.h4_ratio
        for name in INTEGRAL_NAMES:
            setattr(rec, name, self.integrals[name])
        if self.model != "hallmhd":
            rec.I_hall = rec.I_lps_u = None
        rec.U_max = math.exp(-self.cfg.K * self.integrals["I_mp"]) * rec.sup_B**2
        self._prev = (state, now)
        return rec
