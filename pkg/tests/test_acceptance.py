"""Acceptance criteria, one test per criterion, each at its stated tolerance.

Every test reports a single pass/fail line (collected in the terminal
summary) before asserting.  Runs shared between criteria are cached per
module so the suite does each expensive simulation once.
"""
import math
import time

import numpy as np
import pytest

from hallbkm.config import LabConfig, parse_config
from hallbkm.diagnostics import CSV_COLUMNS
from hallbkm.dynamics import SimState, emhd_rhs, emhd_rhs_advective, energy_flux, rhs
from hallbkm.initial import beltrami, random_band
from hallbkm.inequality_lab import run_lab, scaling_invariance_check
from hallbkm.io import load_checkpoint, save_checkpoint, strip_metadata
from hallbkm.littlewood_paley import besov_norm, decompose
from hallbkm.spectral import Field, Grid, inner_product, max_divergence, physical_values, sobolev_seminorm, zeros
from hallbkm.timestepper import HALT_T_END, cfl_dt, run, step

N = 32
BELTRAMI = "model={model}\nn=32\nt_end=1\nic=beltrami\nout_dir={out}"
RANDOM = "model={model}\nn=32\nt_end=0.5\nic=random_band(band=4, amplitude=0.5, seed={seed})\nout_dir={out}"
MODELS = ("emhd", "hallmhd")


def _max_abs(grid, a):
    return float(np.max(np.abs(physical_values(Field(grid, a, True)))))


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


@pytest.fixture(scope="module")
def beltrami_runs(workdir):
    """Timed Beltrami runs of both models, exactly as the CLI would do them."""
    out = {}
    for model in MODELS:
        cfg = parse_config(BELTRAMI.format(model=model, out=workdir / f"beltrami_{model}"))
        t0 = time.perf_counter()
        res = run(cfg)
        out[model] = (cfg, res, time.perf_counter() - t0)
    return out


@pytest.fixture(scope="module")
def random_runs(workdir):
    runs = []
    for model in MODELS:
        for seed in range(10):
            cfg = parse_config(RANDOM.format(model=model, seed=seed, out=workdir / f"rand_{model}_{seed}"))
            runs.append((f"{model}/seed{seed}", run(cfg)))
    return runs


def _corpus():
    g = Grid(N)
    # band 10 = (n - 1) // 3: every field is fully dealiased
    return [random_band(g, 10, np.random.SeedSequence([2024, i]), 1.0) for i in range(100)]


def test_criterion_01_beltrami_exact_solution(beltrami_runs, acceptance):
    details, ok = [], True
    for model, (cfg, res, seconds) in beltrami_runs.items():
        g = cfg.grid
        B0 = beltrami(g).data
        err = _max_abs(g, res.state.B.data - math.exp(-res.t_final) * B0)
        good = res.halt_reason == HALT_T_END and res.t_final == 1.0 and err <= 1e-6 and seconds <= 10.0
        msg = f"{model} err={err:.2e} time={seconds:.2f}s"
        if model == "hallmhd":
            usup = _max_abs(g, res.state.u.data)
            good = good and usup <= 1e-9
            msg += f" |u|max={usup:.1e}"
        ok &= good
        details.append(msg)
    acceptance(1, "exact-solution regression", ok, "; ".join(details))
    assert ok


def test_criterion_02_rhs_oracle_equivalence(acceptance):
    worst = 0.0
    for B in _corpus():
        a, b = emhd_rhs(B).data, emhd_rhs_advective(B).data
        worst = max(worst, _max_abs(B.grid, a - b) / _max_abs(B.grid, a))
    ok = worst <= 1e-11
    acceptance(2, "rhs oracle equivalence", ok, f"max relative difference {worst:.2e} over 100 fields")
    assert ok


def _dissipation_rate(state):
    """d/dt of nu |grad u|^2 + |grad B|^2 along the flow, from the right-hand side."""
    dB, du = rhs(state, check=False)
    out = 2 * inner_product(Field(state.grid, state.grid.k2 * state.B.data, True), dB)
    if du is not None:
        out += 2 * state.nu * inner_product(Field(state.grid, state.grid.k2 * state.u.data, True), du)
    return out


def test_criterion_03_energy_identity(acceptance):
    worst = 0.0
    for B in _corpus():
        lhs = abs(inner_product(emhd_rhs(B), B) + sobolev_seminorm(B, 1) ** 2)
        worst = max(worst, lhs / (sobolev_seminorm(B, 0) * sobolev_seminorm(B, 1)))
    details = [f"corpus worst {worst:.2e}"]
    ok = worst <= 1e-10
    # Beltrami runs: E(T) - E(0) against -int D dt.  The quadrature is the
    # end-corrected trapezoid rule (uses dD/dt), fourth order in the step.
    for model in MODELS:
        cfg = parse_config(BELTRAMI.format(model=model, out="unused"))
        g = cfg.grid
        s = SimState(0.0, beltrami(g), None if model == "emhd" else zeros(g), model, cfg.nu)
        E0, D = energy_flux(s)
        dD = _dissipation_rate(s)
        integral = 0.0
        while s.t < cfg.t_end:
            h = min(cfl_dt(s, cfg.step), cfg.t_end - s.t)
            s = step(s, h)
            _, D1 = energy_flux(s)
            dD1 = _dissipation_rate(s)
            integral += 0.5 * h * (D + D1) + h * h / 12 * (dD - dD1)
            D, dD = D1, dD1
        E1, _ = energy_flux(s)
        drift = abs((E1 - E0) + integral) / integral
        ok &= drift <= 1e-6
        details.append(f"{model} drift {drift:.2e}")
    acceptance(3, "energy identity", ok, "; ".join(details))
    assert ok


def _monotone(records, slack=1e-6):
    U = [r.U_max for r in records]
    return all(b <= a * (1 + slack) for a, b in zip(U, U[1:]))


def test_criterion_04_max_principle(beltrami_runs, random_runs, acceptance):
    bad = [m for m, (_, res, _) in beltrami_runs.items() if not _monotone(res.records)]
    bad += [name for name, res in random_runs if not _monotone(res.records)]
    total = len(beltrami_runs) + len(random_runs)
    ok = not bad
    acceptance(4, "maximum-principle monotonicity (K = 6)", ok,
               f"{total - len(bad)}/{total} runs non-increasing" + (f", violations: {bad}" if bad else ""))
    assert ok


def test_criterion_05_sup_norm_bound(beltrami_runs, random_runs, acceptance):
    runs = [(m, res) for m, (_, res, _) in beltrami_runs.items()] + random_runs
    worst, bad = 0.0, []
    for name, res in runs:
        sup0 = res.records[0].sup_B
        bound = math.exp(6 * res.integrals["I_emhd"]) * sup0
        top = max(r.sup_B for r in res.records)
        worst = max(worst, top / bound)
        if top > bound:
            bad.append(name)
    ok = not bad
    acceptance(5, "sup-norm bound shape", ok, f"max sup_B / bound = {worst:.3f} over {len(runs)} runs")
    assert ok


def test_criterion_06_inequality_lab(workdir, acceptance):
    lab = LabConfig()
    t0 = time.perf_counter()
    report, results = run_lab(lab.corpus(), lab.sizes, lab.ps, lab.oversample, workdir / "lab")
    seconds = time.perf_counter() - t0
    finite = all(math.isfinite(r.ratio) for r in results)
    trends = {i: report.get(i, max(lab.sizes)).trend for i in report.inequality_ids}
    worst = max(abs(t - 1) for t in trends.values())
    produced = (workdir / "lab" / "constants.csv").exists()
    ok = finite and worst < 0.2 and seconds <= 60 and produced and len(report.inequality_ids) == 7
    acceptance(6, "inequality lab", ok,
               f"{len(results)} ratios finite={finite}, worst refinement change {worst:.1%}, {seconds:.1f}s")
    assert ok


def test_criterion_07_scaling_invariance(acceptance):
    g = Grid(N)
    fields = [beltrami(g)] + [random_band(g, 4, 100 + s, 1.0) for s in range(10)]
    worst = 0.0
    for B in fields:
        a, b = scaling_invariance_check(B, 2)
        worst = max(worst, abs(a - b) / abs(a))
    ok = worst <= 1e-10
    acceptance(7, "scaling invariance (lambda = 2)", ok, f"max relative mismatch {worst:.2e} over 11 fields")
    assert ok


def test_criterion_08_littlewood_paley(acceptance):
    g = Grid(N)
    X, _, _ = g.coords()
    worst = 0.0
    for s in range(5):
        f = random_band(g, 12, s, 1.0)
        rec = decompose(f).reconstruct()
        worst = max(worst, float(np.max(np.abs(rec.data - f.data))))
    cos4 = besov_norm(Field(g, np.cos(4 * X), False))
    one = besov_norm(Field(g, np.ones(g.physical_shape), False))
    ok = worst <= 1e-12 and abs(cos4 - 1) <= 1e-12 and one == 1.0
    acceptance(8, "Littlewood-Paley exactness", ok,
               f"reconstruction {worst:.1e}, besov(cos 4x) - 1 = {cos4 - 1:.1e}, besov(1) = {one!r}")
    assert ok


def _advance(state, dt, m):
    for _ in range(m):
        state = step(state, dt)
    return state


def test_criterion_09_integrator(acceptance):
    g = Grid(N)
    B = beltrami(g) + random_band(g, 4, 11, amplitude=1e-2)
    details, ok = [], True
    for model in MODELS:
        u = None if model == "emhd" else random_band(g, 4, 12, amplitude=1e-2)
        s0 = SimState(0.0, B, u, model, 0.5 if u is not None else 0.0)
        T = 0.2
        sols = [_advance(s0, T / m, m) for m in (10, 20, 40)]
        e1 = np.max(np.abs(sols[0].B.data - sols[1].B.data))
        e2 = np.max(np.abs(sols[1].B.data - sols[2].B.data))
        order = math.log2(e1 / e2)
        ok &= order >= 3.8
        details.append(f"{model} order {order:.2f}")
    g16 = Grid(16)
    s = SimState(0.0, random_band(g16, 4, 8, 0.5), random_band(g16, 4, 9, 0.5), "hallmhd", 0.5)
    for _ in range(1000):
        s = step(s, 0.002)
    div = max(max_divergence(s.B), max_divergence(s.u))
    ok &= div <= 1e-10
    details.append(f"divergence after 1000 steps {div:.1e}")
    acceptance(9, "integrator order and divergence", ok, "; ".join(details))
    assert ok


def test_criterion_10_infrastructure(workdir, acceptance):
    g = Grid(N)
    details, ok = [], True
    # checkpoint round trip
    st = SimState(0.25, random_band(g, 4, 1, 0.5), random_band(g, 4, 2, 0.5), "hallmhd", 0.3)
    ints = {"I_emhd": 1 / 3, "I_mp": math.pi}
    save_checkpoint(st, ints, workdir / "rt.bkmd")
    ck = load_checkpoint(workdir / "rt.bkmd")
    exact = (np.array_equal(ck.state.B.data, st.B.data) and np.array_equal(ck.state.u.data, st.u.data)
             and ck.state.t == st.t and ck.state.nu == st.nu and ck.integrals["I_emhd"] == 1 / 3
             and ck.integrals["I_mp"] == math.pi)
    ok &= exact
    details.append(f"round trip bit-exact={exact}")
    # resume at t = 0.5 and continue to 1.0 against one run to 1.0
    text = "model=emhd\nn=32\nt_end={t}\nic=random_band(band=4, amplitude=0.5, seed=3)\nout_dir={out}"
    full = run(parse_config(text.format(t=1.0, out=workdir / "full")))
    run(parse_config(text.format(t=0.5, out=workdir / "half")))
    rest = run(parse_config(text.format(t=1.0, out=workdir / "rest")),
               start=load_checkpoint(workdir / "half" / "final.bkmd"))
    ref = {round(r.t, 9): r for r in full.records}
    worst = 0.0
    for r in rest.records:
        other = ref[round(r.t, 9)]
        for c in CSV_COLUMNS:
            a, b = getattr(r, c), getattr(other, c)
            if a is None or b is None:
                ok &= a is b
                continue
            worst = max(worst, abs(a - b) / max(abs(b), 1e-300) if b else abs(a))
    ok &= worst <= 1e-12 and len(rest.records) == 6
    details.append(f"resume max relative difference {worst:.1e}")
    # deterministic CSV
    again = run(parse_config(text.format(t=1.0, out=workdir / "again")))
    a = strip_metadata((workdir / "full" / "timeseries.csv").read_text())
    b = strip_metadata((workdir / "again" / "timeseries.csv").read_text())
    same = a == b and again.steps == full.steps
    ok &= same
    details.append(f"CSV identical={same}")
    acceptance(10, "infrastructure", ok, "; ".join(details))
    assert ok
