"""Run configuration: ``key = value`` text, validation and initial data.

Example::

    model = hallmhd
    n = 32
    t_end = 0.5
    nu = 0.5
    ic = random_band(band=4, amplitude=0.5, seed=7)
    u_ic = beltrami(0.1)

Initial-condition values use call syntax with literal arguments:
``beltrami(amplitude)``, ``abc(A, B, C)``, ``single_mode(m, amplitude)``,
``random_band(band, amplitude, seed)``, ``zero`` and ``file(path)`` (a
checkpoint whose grid size must match ``n``).
"""
from __future__ import annotations

import ast
import hashlib
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import initial
from .diagnostics import LPSExponents
from .dynamics import MODELS, SimState
from .errors import CheckpointFormatError, ConfigError, UsageError
from .spectral import Grid, curl, sup_norm, zeros
from .timestepper import StepControl

IC_KINDS = {
    "beltrami": ("amplitude",),
    "abc": ("A", "B", "C"),
    "single_mode": ("m", "amplitude"),
    "random_band": ("band", "amplitude", "seed"),
    "zero": (),
    "file": ("path",),
}
IC_DEFAULTS = {
    "beltrami": {"amplitude": 1.0},
    "abc": {"A": 1.0, "B": 1.0, "C": 1.0},
    "single_mode": {"m": 1, "amplitude": 1.0},
    "random_band": {"band": 4, "amplitude": 1.0, "seed": 0},
    "zero": {},
    "file": {},
}
ABC_TOL = 1e-12


@dataclass(frozen=True)
class ICSpec:
    kind: str
    params: tuple = ()

    @property
    def args(self):
        return dict(self.params)

    def __str__(self):
        if not self.params:
            return self.kind
        return f"{self.kind}(" + ", ".join(f"{k}={v!r}" for k, v in self.params) + ")"


def parse_ic(text):
    """Parse ``name`` or ``name(args)`` into an :class:`ICSpec` (raises ValueError)."""
    try:
        node = ast.parse(text.strip(), mode="eval").body
    except SyntaxError:
        raise ValueError(f"cannot parse initial condition {text!r}") from None
    if isinstance(node, ast.Name):
        name, args, kwargs = node.id, [], {}
    elif isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        name = node.func.id
        try:
            args = [ast.literal_eval(a) for a in node.args]
            kwargs = {k.arg: ast.literal_eval(k.value) for k in node.keywords}
        except ValueError:
            raise ValueError(f"initial-condition arguments must be literals: {text!r}") from None
    else:
        raise ValueError(f"cannot parse initial condition {text!r}")
    if name not in IC_KINDS:
        raise ValueError(f"unknown initial condition {name!r}; expected one of {sorted(IC_KINDS)}")
    names = IC_KINDS[name]
    if len(args) > len(names):
        raise ValueError(f"{name} takes at most {len(names)} arguments")
    params = dict(IC_DEFAULTS[name])
    params.update(zip(names, args))
    for k, v in kwargs.items():
        if k not in names:
            raise ValueError(f"{name} has no parameter {k!r}")
        params[k] = v
    if name == "file" and "path" not in params:
        raise ValueError("file(...) needs a path")
    for k in ("band", "seed", "m"):
        if k in params and (isinstance(params[k], bool) or not isinstance(params[k], int)):
            raise ValueError(f"{name}: {k} must be an integer")
    for k in ("amplitude", "A", "B", "C"):
        if k in params:
            if isinstance(params[k], bool) or not isinstance(params[k], (int, float)):
                raise ValueError(f"{name}: {k} must be a number")
            params[k] = float(params[k])
    if name == "file" and not isinstance(params["path"], str):
        raise ValueError("file path must be a string")
    return ICSpec(name, tuple((k, params[k]) for k in names if k in params))


@dataclass(frozen=True)
class SimConfig:
    model: str
    n: int
    t_end: float
    ic: ICSpec
    box_length: float = 2 * math.pi
    nu: float = 0.0
    step: StepControl = field(default_factory=StepControl)
    u_ic: ICSpec | None = None
    diag_every: float = 0.1
    K: float = 6.0
    lps: LPSExponents = field(default_factory=LPSExponents)
    oversample: bool = True
    out_dir: str = "out"
    checkpoint_every: float | None = None

    @property
    def grid(self):
        return Grid(self.n, self.box_length)

    def with_seed(self, seed):
        """Replace the seed of every random_band initial condition."""
        def reseed(ic):
            if ic is None or ic.kind != "random_band":
                return ic
            return ICSpec(ic.kind, tuple((k, seed if k == "seed" else v) for k, v in ic.params))
        return replace(self, ic=reseed(self.ic), u_ic=reseed(self.u_ic))


def _number(v):
    try:
        return float(v)
    except ValueError:
        raise ValueError(f"expected a number, got {v!r}") from None


def _integer(v):
    try:
        return int(v)
    except ValueError:
        raise ValueError(f"expected an integer, got {v!r}") from None


def _boolean(v):
    low = v.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {v!r}")


def _exponent(v):
    return math.inf if v.lower() in ("inf", "infinity") else _number(v)


def _optional_number(v):
    return None if v.lower() in ("none", "") else _number(v)


KEYS = {
    "model": str, "n": _integer, "box_length": _number, "nu": _number, "t_end": _number,
    "step": str, "dt": _number, "safety": _number, "dt_min": _number, "dt_max": _number,
    "ic": parse_ic, "u_ic": parse_ic, "diag_every": _number, "K": _number,
    "lps_p": _exponent, "lps_q": _exponent, "lps_beta": _exponent, "lps_gamma": _exponent,
    "oversample": _boolean, "out_dir": str, "checkpoint_every": _optional_number,
}
REQUIRED = ("model", "n", "t_end", "ic")


def parse_config(text):
    """Parse and validate configuration text into a :class:`SimConfig`."""
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not eq or not key:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", key, lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", key, lineno)
        try:
            values[key] = KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}", key, lineno) from None
        lines[key] = lineno
    return _build(values, lines)


def _build(values, lines):
    def fail(key, msg):
        raise ConfigError(f"{key}: {msg}", key, lines.get(key))

    for key in REQUIRED:
        if key not in values:
            raise ConfigError(f"missing required key {key!r}", key)
    model = values["model"]
    if model not in MODELS:
        fail("model", f"must be one of {MODELS}, got {model!r}")
    n = values["n"]
    if n < 8 or n % 2:
        fail("n", f"must be an even integer >= 8, got {n}")
    box = values.get("box_length", 2 * math.pi)
    if not box > 0:
        fail("box_length", f"must be positive, got {box}")
    if values["t_end"] < 0:
        fail("t_end", f"must be >= 0, got {values['t_end']}")
    if "nu" in values:
        if values["nu"] < 0:
            fail("nu", f"must be >= 0, got {values['nu']}")
        if model == "emhd":
            fail("nu", "E-MHD has no velocity equation, so nu is not allowed")
    if model == "emhd" and "u_ic" in values:
        fail("u_ic", "E-MHD has no velocity field")
    nu = values.get("nu", 1.0 if model == "hallmhd" else 0.0)
    u_ic = values.get("u_ic", ICSpec("zero") if model == "hallmhd" else None)

    mode = values.get("step", "cfl")
    if mode == "fixed" and "dt" not in values:
        fail("step", "fixed stepping needs dt")
    if mode == "cfl" and "dt" in values:
        fail("dt", "dt is only used with step = fixed")
    if mode not in ("fixed", "cfl"):
        fail("step", f"must be 'fixed' or 'cfl', got {mode!r}")
    if "dt" in values and not values["dt"] > 0:
        fail("dt", f"must be positive, got {values['dt']}")
    if "safety" in values and not 0 < values["safety"] <= 1:
        fail("safety", f"must lie in (0, 1], got {values['safety']}")
    for key in ("dt_min", "dt_max"):
        if key in values and not values[key] > 0:
            fail(key, f"must be positive, got {values[key]}")
    kw = {k: values[k] for k in ("dt", "safety", "dt_min", "dt_max") if k in values}
    try:
        step = StepControl(mode, **kw)
    except UsageError as exc:
        fail("dt_max" if "dt_max" in values else "dt_min", str(exc))

    diag_every = values.get("diag_every", 0.1)
    if not diag_every > 0:
        fail("diag_every", f"must be positive, got {diag_every}")
    K = values.get("K", 6.0)
    if not K > 0:
        fail("K", f"must be positive, got {K}")
    lps = LPSExponents(values.get("lps_p", math.inf), values.get("lps_q", 2.0),
                       values.get("lps_beta", math.inf), values.get("lps_gamma", 2.0))
    for key in ("lps_p", "lps_q", "lps_beta", "lps_gamma"):
        if key in values and not values[key] >= 1:
            fail(key, f"must be >= 1, got {values[key]}")
    ck = values.get("checkpoint_every")
    if ck is not None and not ck > 0:
        fail("checkpoint_every", f"must be positive, got {ck}")
    for key in ("ic", "u_ic"):
        ic = values.get(key)
        if ic is not None and ic.kind == "random_band" and not 1 <= ic.args["band"] <= n // 2 - 1:
            fail(key, f"band must lie in 1..{n // 2 - 1}")
    return SimConfig(model=model, n=n, t_end=values["t_end"], ic=values["ic"], box_length=box, nu=nu,
                     step=step, u_ic=u_ic, diag_every=diag_every, K=K, lps=lps,
                     oversample=values.get("oversample", True), out_dir=values.get("out_dir", "out"),
                     checkpoint_every=ck)


def config_to_text(cfg):
    """Canonical text form; ``parse_config(config_to_text(c)) == c``."""
    s = cfg.step
    rows = [("model", cfg.model), ("n", cfg.n), ("box_length", repr(cfg.box_length)), ("t_end", repr(cfg.t_end)),
            ("ic", cfg.ic)]
    if cfg.model == "hallmhd":
        rows += [("nu", repr(cfg.nu)), ("u_ic", cfg.u_ic)]
    rows.append(("step", s.mode))
    if s.mode == "fixed":
        rows.append(("dt", repr(s.dt)))
    rows += [("safety", repr(s.safety)), ("dt_min", repr(s.dt_min)), ("dt_max", repr(s.dt_max)),
             ("diag_every", repr(cfg.diag_every)), ("K", repr(cfg.K)),
             ("lps_p", cfg.lps.p), ("lps_q", cfg.lps.q), ("lps_beta", cfg.lps.beta), ("lps_gamma", cfg.lps.gamma),
             ("oversample", str(cfg.oversample).lower()), ("out_dir", cfg.out_dir),
             ("checkpoint_every", "none" if cfg.checkpoint_every is None else repr(cfg.checkpoint_every))]
    return "".join(f"{k} = {v}\n" for k, v in rows)


def config_hash(cfg):
    """Short SHA-256 digest of the canonical text, ignoring the output directory."""
    text = "".join(l for l in config_to_text(cfg).splitlines(True) if not l.startswith("out_dir"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def build_field(ic, grid, which="B"):
    """Spectral 3-vector for one initial-condition spec."""
    a = ic.args
    if ic.kind == "beltrami":
        return initial.beltrami(grid, a["amplitude"])
    if ic.kind == "abc":
        B = initial.abc(grid, a["A"], a["B"], a["C"])
        defect = sup_norm(curl(B) - grid.scale * B, oversample=False)
        if defect > ABC_TOL * max(1.0, sup_norm(B, oversample=False)):
            raise UsageError(f"ABC field fails curl B = B check (defect {defect:.3e})")
        return B
    if ic.kind == "single_mode":
        return initial.single_mode(grid, a["m"], a["amplitude"])
    if ic.kind == "random_band":
        return initial.random_band(grid, a["band"], a["seed"], a["amplitude"])
    if ic.kind == "zero":
        return zeros(grid)
    if ic.kind == "file":
        from .io import load_checkpoint
        state = load_checkpoint(a["path"]).state
        if state.grid.n != grid.n:
            raise CheckpointFormatError(f"{a['path']}: grid n={state.grid.n} does not match n={grid.n}")
        f = state.B if which == "B" else state.u
        if f is None:
            raise CheckpointFormatError(f"{a['path']}: checkpoint has no velocity field")
        return type(f)(grid, np.array(f.data), True)
    raise UsageError(f"unknown initial condition {ic.kind!r}")


def build_initial(ic, grid=None, model="emhd", nu=0.0, u_ic=None):
    """Initial :class:`SimState` at t = 0.

    ``ic`` may also be a :class:`SimConfig`, in which case every other
    argument is taken from it.
    """
    if isinstance(ic, SimConfig):
        cfg = ic
        return build_initial(cfg.ic, cfg.grid, cfg.model, cfg.nu, cfg.u_ic)
    B = build_field(ic, grid, "B")
    u = None
    if model == "hallmhd":
        u = build_field(u_ic or ICSpec("zero"), grid, "u")
    return SimState(0.0, B, u, model, nu)


# --- inequality-lab corpus configuration ---------------------------------------

@dataclass(frozen=True)
class LabConfig:
    seed: int = 0
    count: int = 100
    spec: str = "random_band"
    band: int = 4
    sizes: tuple = (32, 64)
    box_length: float = 2 * math.pi
    ps: tuple = (2.0, math.inf)
    oversample: bool = False
    out_dir: str = "lab_out"
    paths: tuple = ()

    def corpus(self):
        from .inequality_lab import FieldCorpus
        return FieldCorpus(self.seed, self.count, self.spec, self.band, Grid(min(self.sizes), self.box_length),
                           self.paths)


def _int_list(v):
    return tuple(_integer(x.strip()) for x in v.split(",") if x.strip())


def _exp_list(v):
    return tuple(_exponent(x.strip()) for x in v.split(",") if x.strip())


def _str_list(v):
    return tuple(x.strip() for x in v.split(",") if x.strip())


LAB_KEYS = {
    "seed": _integer, "count": _integer, "spec": str, "band": _integer, "n": _int_list,
    "box_length": _number, "p": _exp_list, "oversample": _boolean, "out_dir": str, "paths": _str_list,
}


def parse_lab_config(text):
    """Parse corpus configuration for the inequality lab (``key = value`` lines).

    ``n`` and ``p`` take comma-separated lists, e.g. ``n = 32, 64`` and
    ``p = 2, inf``; ``paths`` lists checkpoints for the ``from_file`` generator.
    """
    from .inequality_lab import GENERATORS

    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not eq or not key:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        if key not in LAB_KEYS:
            raise ConfigError(f"unknown key {key!r}", key, lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", key, lineno)
        try:
            values[key] = LAB_KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}", key, lineno) from None
        lines[key] = lineno

    def fail(key, msg):
        raise ConfigError(f"{key}: {msg}", key, lines.get(key))

    cfg = LabConfig(**{("sizes" if k == "n" else "ps" if k == "p" else k): v for k, v in values.items()})
    if cfg.count < 1:
        fail("count", "must be >= 1")
    if cfg.spec not in GENERATORS:
        fail("spec", f"must be one of {GENERATORS}")
    if not cfg.sizes or any(n < 8 or n % 2 for n in cfg.sizes):
        fail("n", "grid sizes must be even integers >= 8")
    if cfg.band < 1 or cfg.band > min(cfg.sizes) // 2 - 1:
        fail("band", f"must lie in 1..{min(cfg.sizes) // 2 - 1}")
    if not cfg.box_length > 0:
        fail("box_length", "must be positive")
    if not cfg.ps or any(not (p == 2 or math.isinf(p)) for p in cfg.ps):
        fail("p", "entries must be 2 or inf")
    if cfg.spec == "from_file" and len(cfg.paths) < cfg.count:
        fail("paths", "from_file needs one checkpoint path per field")
    return replace(cfg, sizes=tuple(sorted(set(cfg.sizes))))
