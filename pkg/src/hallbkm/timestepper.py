"""Integrating-factor RK4 time stepping and whistler CFL control.

The diffusion operator is applied exactly through ``exp(-|k|^2 h)`` (and
``exp(-nu |k|^2 h)`` for the velocity); the Leray-projected nonlinearity is
advanced with the classical four-stage scheme on the transformed variable
(Lawson's method).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .diagnostics import Monitor
from .dynamics import nonlinear_arrays
from .errors import BlowUpError, UsageError
from .io import save_checkpoint, write_timeseries
from .spectral import sup_norm

CFL_EPS = 1e-12


@dataclass(frozen=True)
class StepControl:
    mode: str = "cfl"
    dt: float | None = None
    safety: float = 0.3
    dt_min: float = 1e-8
    dt_max: float = 0.05

    def __post_init__(self):
        if self.mode not in ("fixed", "cfl"):
            raise UsageError(f"step mode must be 'fixed' or 'cfl', got {self.mode!r}")
        if self.mode == "fixed" and not (self.dt is not None and self.dt > 0):
            raise UsageError("fixed stepping needs dt > 0")
        if not 0 < self.safety <= 1:
            raise UsageError(f"safety must lie in (0, 1], got {self.safety}")
        if not 0 < self.dt_min <= self.dt_max:
            raise UsageError("need 0 < dt_min <= dt_max")


def cfl_dt(state, control):
    """safety / (|B|_inf k_max^2 + |u|_inf k_max + eps), clamped to [dt_min, dt_max].

    The Hall term acts like a second-order dispersive operator with speed
    |B|, hence the k_max^2 scaling; k_max is the largest wavenumber surviving
    dealiasing.
    """
    if control.mode != "cfl":
        raise UsageError("cfl_dt needs a control in 'cfl' mode")
    g = state.grid
    kmax = g.dealias_cutoff * g.scale
    rate = sup_norm(state.B, oversample=False) * kmax**2
    if state.u is not None:
        rate += sup_norm(state.u, oversample=False) * kmax
    dt = control.safety / (rate + CFL_EPS)
    return float(min(max(dt, control.dt_min), control.dt_max))


def step(state, dt, nonlinear=True):
    """Advance ``state`` by one IF-RK4 step of size ``dt``.

    ``nonlinear=False`` drops the nonlinearity, leaving the exact linear
    propagator.  Raises :class:`BlowUpError` if the result is not finite.
    """
    if not dt > 0:
        raise UsageError(f"dt must be positive, got {dt!r}")
    g = state.grid
    model = state.model
    B0 = state.B.data
    u0 = None if state.u is None else state.u.data

    if not nonlinear:
        B1 = np.exp(-g.k2 * dt) * B0
        u1 = None if u0 is None else np.exp(-state.nu * g.k2 * dt) * u0
        return _finish(state, dt, B1, u1)

    eB_half = np.exp(-g.k2 * (0.5 * dt))
    eB = eB_half * eB_half
    if u0 is not None:
        eu_half = np.exp(-state.nu * g.k2 * (0.5 * dt))
        eu = eu_half * eu_half

    def N(B, u):
        return nonlinear_arrays(g, model, B, u)

    h = dt
    aB, au = N(B0, u0)
    B1 = eB_half * (B0 + 0.5 * h * aB)
    u1 = None if u0 is None else eu_half * (u0 + 0.5 * h * au)
    bB, bu = N(B1, u1)
    B2 = eB_half * B0 + 0.5 * h * bB
    u2 = None if u0 is None else eu_half * u0 + 0.5 * h * bu
    cB, cu = N(B2, u2)
    B3 = eB * B0 + h * eB_half * cB
    u3 = None if u0 is None else eu * u0 + h * eu_half * cu
    dB, du = N(B3, u3)
    Bn = eB * B0 + (h / 6.0) * (eB * aB + 2.0 * eB_half * (bB + cB) + dB)
    un = None
    if u0 is not None:
        un = eu * u0 + (h / 6.0) * (eu * au + 2.0 * eu_half * (bu + cu) + du)
    return _finish(state, dt, Bn, un)


def _finish(state, dt, B, u):
    t = state.t + dt
    if not np.all(np.isfinite(B)) or (u is not None and not np.all(np.isfinite(u))):
        raise BlowUpError(t)
    return state.with_fields(t, B, u)


# --- run loop ----------------------------------------------------------------

SAMPLE_EPS = 1e-9
HALT_T_END = "t_end"
HALT_BLOW_UP = "blow-up signal"


@dataclass
class RunResult:
    t_final: float
    halt_reason: str
    integrals: dict
    records: list
    h4_ratio_max: float | None
    steps: int
    state: object = None
    out_dir: str | None = None
    warnings: list = field(default_factory=list)

    def summary(self):
        return {
            "t_final": self.t_final,
            "halt_reason": self.halt_reason,
            "steps": self.steps,
            "integrals": self.integrals,
            "h4_ratio_max": self.h4_ratio_max,
            "samples": len(self.records),
            "warnings": self.warnings,
        }


def _next_index(t, every):
    return math.floor(t / every + SAMPLE_EPS) + 1


def run(config, start=None, out_dir=None, write=True):
    """Evolve ``config`` to ``t_end`` (or a blow-up signal), sampling diagnostics.

    ``start`` is an optional :class:`~hallbkm.io.Checkpoint` to resume from;
    its integrals seed the accumulators and its state is re-sampled without
    contributing to them.  Steps are shortened to land exactly on every
    sample time, so a resumed run takes the same steps as an uninterrupted
    one.  With ``write`` the run leaves ``timeseries.csv``, ``summary.json``,
    ``config.txt`` and checkpoints in ``out_dir`` (default ``config.out_dir``).
    """
    from . import __version__
    from .config import build_initial, config_hash, config_to_text
    from .littlewood_paley import MULTIPLIER_PROFILE

    out = Path(out_dir if out_dir is not None else config.out_dir)
    if start is None:
        state, integrals = build_initial(config), None
    else:
        state, integrals = start.state, start.integrals
        g = state.grid
        if state.model != config.model or g.n != config.n or not math.isclose(g.length, config.box_length, rel_tol=1e-15):
            raise UsageError("checkpoint does not match the configuration (model, n or box length)")
    monitor = Monitor(config.model, config.K, config.lps, config.oversample, integrals)
    if write:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.txt").write_text(config_to_text(config))

    def checkpoint(name, st):
        if write:
            save_checkpoint(st, monitor.integrals, out / name, config.K)

    records = [monitor.sample(state)]
    every = config.diag_every
    next_sample = _next_index(state.t, every)
    ck_every = config.checkpoint_every
    next_ck = None if ck_every is None else _next_index(state.t, ck_every)
    t_end = config.t_end
    halt = HALT_T_END
    steps = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while state.t < t_end * (1 - 1e-15) - 1e-15:
            dt = config.step.dt if config.step.mode == "fixed" else cfl_dt(state, config.step)
            target = min(next_sample * every, t_end)
            land = state.t + dt >= target - 1e-12 * max(1.0, target)
            if land:
                dt = target - state.t
            try:
                new = step(state, dt)
            except BlowUpError:
                halt = HALT_BLOW_UP
                if records[-1].t != state.t:
                    records.append(monitor.sample(state))
                checkpoint("blowup.bkmd", state)
                break
            steps += 1
            if land:
                new = new.with_fields(target, new.B.data, None if new.u is None else new.u.data)
            state = new
            if land:
                records.append(monitor.sample(state))
                next_sample = _next_index(state.t, every)
                if next_ck is not None and state.t >= next_ck * ck_every * (1 - SAMPLE_EPS):
                    checkpoint(f"checkpoint_t{state.t:.6f}.bkmd", state)
                    next_ck = _next_index(state.t, ck_every)

    result = RunResult(state.t, halt, dict(monitor.integrals), records, monitor.h4_ratio_max, steps, state,
                       str(out) if write else None, list(monitor.lps_warnings))
    if write:
        if halt == HALT_T_END:
            checkpoint("final.bkmd", state)
        meta = {
            "config_hash": config_hash(config),
            "multiplier_profile": MULTIPLIER_PROFILE,
            "version": __version__,
            "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        write_timeseries(records, out / "timeseries.csv", meta)
        (out / "summary.json").write_text(json.dumps(result.summary(), indent=2, sort_keys=True) + "\n")
    return result
