"""Empirical checks of the Littlewood-Paley inequalities on synthetic fields.

Each check evaluates both sides of an inequality ``lhs <~ rhs`` on every field
of a corpus and reports the ratio; :func:`estimate_constant` reduces ratios to
the implied constants per inequality and grid size.

Inequality ids:

``besov_le_sup``
    ``||f||_B <= C ||f||_inf``
``besov_grad_le_besov_curl``
    ``||grad v||_B <= C ||curl v||_B`` (divergence-free v)
``grad_interpolation``
    ``||grad v||_inf <= C ||v||_inf^(1/2) ||grad curl v||_B^(1/2)``
``bkm_grad_p2``, ``bkm_grad_pinf``
    ``||grad v||_inf <= C (||curl v||_B log(2 + ||grad^4 v||_2) + ||v||_p)``
``bkm_hess_p2``, ``bkm_hess_pinf``
    ``||grad^2 v||_inf <= C (||grad curl v||_B log(2 + ||grad^4 v||_2) + ||v||_p)``

``B`` is the inhomogeneous B^0_{inf,inf} norm of :mod:`littlewood_paley`.
Sup norms of gradients and Hessians are entrywise maxima.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from statistics import median

import numpy as np

from . import initial
from .dynamics import DIVERGENCE_RTOL, divergence_defect
from .errors import UsageError, ValidationError
from .littlewood_paley import MULTIPLIER_PROFILE, besov_norm
from .spectral import Field, Grid, curl_array, l2_norm, physical_values, resample, sobolev_seminorm, sup_norm

GENERATORS = ("random_band", "beltrami", "abc", "single_mode", "from_file")
CORPUS_DIV_TOL = 1e-12
CONSTANT_COLUMNS = ("inequality_id", "n", "max_ratio", "median_ratio", "trend")
RESULT_COLUMNS = ("inequality_id", "field_id", "n", "lhs", "rhs", "ratio")


@dataclass(frozen=True)
class FieldCorpus:
    """A reproducible family of divergence-free test fields.

    ``random_band`` fields are drawn on the integer lattice, so the same corpus
    on a finer grid holds the same continuum fields.  The deterministic
    generators vary one parameter with the field index.
    """

    seed: int = 0
    count: int = 100
    spec: str = "random_band"
    band: int = 4
    grid: Grid = field(default_factory=lambda: Grid(32))
    paths: tuple = ()

    def __post_init__(self):
        if self.spec not in GENERATORS:
            raise UsageError(f"unknown corpus generator {self.spec!r}; expected one of {GENERATORS}")
        if self.count < 0:
            raise UsageError("count must be >= 0")
        if self.band < 1:
            raise UsageError("band must be >= 1")
        if self.spec == "from_file" and len(self.paths) < self.count:
            raise UsageError("from_file corpus needs one checkpoint path per field")

    def on_grid(self, grid):
        return replace(self, grid=grid)

    def field(self, i):
        g = self.grid
        rng = np.random.default_rng([self.seed, i])
        if self.spec == "random_band":
            v = initial.random_band(g, self.band, np.random.SeedSequence([self.seed, i]), 1.0)
        elif self.spec == "beltrami":
            v = initial.beltrami(g, float(rng.uniform(0.5, 2.0)))
        elif self.spec == "abc":
            A, B, C = rng.uniform(0.5, 1.5, 3)
            v = initial.abc(g, float(A), float(B), float(C))
        elif self.spec == "single_mode":
            v = initial.single_mode(g, 1 + i % self.band, 1.0)
        else:
            from .io import load_checkpoint
            B = load_checkpoint(self.paths[i]).state.B
            v = B if B.grid == g else resample(B, g.n)
            v = Field(g, v.data, True)
        d = divergence_defect(g, v.data)
        if d > CORPUS_DIV_TOL:
            raise ValidationError(f"corpus field {i} has divergence defect {d:.3e}")
        return v

    def __iter__(self):
        for i in range(self.count):
            yield i, self.field(i)

    def __len__(self):
        return self.count


@dataclass(frozen=True)
class InequalityResult:
    inequality_id: str
    field_id: int
    n: int
    lhs: float
    rhs: float
    ratio: float

    @classmethod
    def of(cls, inequality_id, field_id, n, lhs, rhs):
        if lhs == 0:
            ratio = 0.0
        elif rhs > 0:
            ratio = lhs / rhs
        else:
            ratio = math.inf
        return cls(inequality_id, int(field_id), int(n), float(lhs), float(rhs), ratio)


@dataclass(frozen=True)
class ConstantRow:
    inequality_id: str
    n: int
    max_ratio: float
    median_ratio: float
    trend: float


@dataclass
class ConstantReport:
    rows: list

    def get(self, inequality_id, n=None):
        rows = [r for r in self.rows if r.inequality_id == inequality_id and (n is None or r.n == n)]
        if not rows:
            raise KeyError((inequality_id, n))
        return rows[0] if n is not None else rows

    @property
    def inequality_ids(self):
        return sorted({r.inequality_id for r in self.rows})


class _Quantities:
    """Lazily computed norms of one vector field, shared between checks."""

    def __init__(self, v, oversample):
        self.v = v.to_spectral()
        self.g = self.v.grid
        self.oversample = oversample

    def _spec(self, a):
        return Field(self.g, a, True)

    @cached_property
    def sup(self):
        return sup_norm(self.v, self.oversample)

    @cached_property
    def grad(self):
        return np.stack([k * self.v.data for k in self.g.ikvec])

    @cached_property
    def curl(self):
        return curl_array(self.g, self.v.data)

    @cached_property
    def grad_curl(self):
        return np.stack([k * self.curl for k in self.g.ikvec])

    @cached_property
    def grad_sup(self):
        return float(np.max(np.abs(physical_values(self._spec(self.grad), self.oversample))))

    @cached_property
    def hess_sup(self):
        # d_i d_j is symmetric in (i, j): transform the six distinct pairs only
        ik = self.g.ikvec
        pairs = [(i, j) for i in range(3) for j in range(i, 3)]
        h = np.stack([ik[i] * ik[j] * self.v.data for i, j in pairs])
        return float(np.max(np.abs(physical_values(self._spec(h), self.oversample))))

    @cached_property
    def besov(self):
        return besov_norm(self.v, self.oversample)

    @cached_property
    def besov_grad(self):
        return besov_norm(self._spec(self.grad), self.oversample)

    @cached_property
    def besov_curl(self):
        return besov_norm(self._spec(self.curl), self.oversample)

    @cached_property
    def besov_grad_curl(self):
        return besov_norm(self._spec(self.grad_curl), self.oversample)

    @cached_property
    def log_h4(self):
        return math.log(2.0 + sobolev_seminorm(self.v, 4))

    def lp(self, p):
        if p == 2:
            return l2_norm(self.v)
        if math.isinf(p):
            return self.sup
        raise UsageError(f"p must be 2 or inf, got {p!r}")


def _iter_fields(corpus):
    """Yield ``(field_id, field)`` from a corpus, a list of fields or a list of pairs."""
    if isinstance(corpus, FieldCorpus):
        yield from corpus
        return
    for i, item in enumerate(corpus):
        yield item if isinstance(item, tuple) else (i, item)


def _quantities(v, oversample, cache):
    if cache is None:
        return _Quantities(v, oversample)
    key = id(v)
    if key not in cache:
        cache[key] = (v, _Quantities(v, oversample))
    return cache[key][1]


def _p_tag(p):
    if p == 2:
        return "p2"
    if math.isinf(p):
        return "pinf"
    raise UsageError(f"p must be 2 or inf, got {p!r}")


def check_besov_bounds(corpus, oversample=False, _cache=None):
    """``besov_le_sup`` for every field and ``besov_grad_le_besov_curl`` for vector fields.

    Raises :class:`ValidationError` if a vector field is not divergence-free.
    """
    out = []
    for i, v in _iter_fields(corpus):
        n = v.grid.n
        if v.components == ():
            out.append(InequalityResult.of("besov_le_sup", i, n, besov_norm(v, oversample), sup_norm(v, oversample)))
            continue
        v = v.to_spectral()
        d = divergence_defect(v.grid, v.data)
        if d > DIVERGENCE_RTOL:
            raise ValidationError(f"field {i} is not divergence-free (relative defect {d:.3e})")
        q = _quantities(v, oversample, _cache)
        out.append(InequalityResult.of("besov_le_sup", i, n, q.besov, q.sup))
        out.append(InequalityResult.of("besov_grad_le_besov_curl", i, n, q.besov_grad, q.besov_curl))
    return out


def check_interpolation(corpus, oversample=False, _cache=None):
    out = []
    for i, v in _iter_fields(corpus):
        q = _quantities(v, oversample, _cache)
        rhs = math.sqrt(q.sup) * math.sqrt(q.besov_grad_curl)
        out.append(InequalityResult.of("grad_interpolation", i, v.grid.n, q.grad_sup, rhs))
    return out


def check_bkm_bounds(corpus, p, oversample=False, _cache=None):
    """First- and second-order BKM-type bounds with the L^p tail, p in {2, inf}."""
    tag = _p_tag(p)
    out = []
    for i, v in _iter_fields(corpus):
        q = _quantities(v, oversample, _cache)
        n = v.grid.n
        tail = q.lp(p)
        out.append(InequalityResult.of(f"bkm_grad_{tag}", i, n, q.grad_sup, q.besov_curl * q.log_h4 + tail))
        out.append(InequalityResult.of(f"bkm_hess_{tag}", i, n, q.hess_sup, q.besov_grad_curl * q.log_h4 + tail))
    return out


def run_all_checks(corpus, ps=(2, math.inf), oversample=False):
    """Every check on one corpus, sharing per-field work."""
    fields_ = list(_iter_fields(corpus))
    cache = {}
    out = check_besov_bounds(fields_, oversample, cache)
    vectors = [(i, v) for i, v in fields_ if v.components == (3,)]
    out += check_interpolation(vectors, oversample, cache)
    for p in ps:
        out += check_bkm_bounds(vectors, p, oversample, cache)
    return out


def scaling_invariance_check(B, lam):
    """E-MHD criterion integrand before and after ``B -> (lam^2/mu) B(x/lam)``, ``mu = lam^2``.

    The rescaled field has the same Fourier coefficients on a box ``lam`` times
    larger, so the relabelling is exact.  Returns ``(||grad J||_inf,
    mu ||grad J'||_inf)``, equal for an exact implementation.
    """
    if isinstance(lam, bool) or int(lam) != lam or lam < 2:
        raise UsageError(f"lambda must be an integer >= 2, got {lam!r}")
    lam = int(lam)
    mu = lam**2
    B = B.to_spectral()
    g = B.grid
    big = Grid(g.n, lam * g.length)
    Bs = Field(big, (lam**2 / mu) * B.data, True)

    def integrand(f):
        J = curl_array(f.grid, f.data)
        gJ = np.stack([k * J for k in f.grid.ikvec])
        return float(np.max(np.abs(physical_values(Field(f.grid, gJ, True), True))))

    return integrand(B), mu * integrand(Bs)


def estimate_constant(results):
    """Max, median and refinement trend of the ratios per inequality and grid size.

    ``trend`` is the max ratio divided by the max ratio on the coarsest grid
    present for that inequality (1 on the coarsest grid).
    """
    results = list(results)
    if not results:
        raise UsageError("no results to reduce")
    groups = {}
    for r in results:
        groups.setdefault(r.inequality_id, {}).setdefault(r.n, []).append(r.ratio)
    rows = []
    for ineq in sorted(groups):
        by_n = groups[ineq]
        base = max(by_n[min(by_n)])
        for n in sorted(by_n):
            top = max(by_n[n])
            if base > 0:
                trend = top / base
            else:
                trend = 1.0 if top == 0 else math.inf
            rows.append(ConstantRow(ineq, n, top, float(median(by_n[n])), trend))
    return ConstantReport(rows)


def _write_csv(path, columns, rows, meta):
    with open(path, "w", newline="") as fh:
        for k, v in (meta or {}).items():
            fh.write(f"# {k}: {v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in (getattr(r, c) for c in columns)])


def write_constants(report, path, meta=None):
    meta = {"multiplier_profile": MULTIPLIER_PROFILE, **(meta or {})}
    _write_csv(path, CONSTANT_COLUMNS, report.rows, meta)


def write_results(results, path, meta=None):
    meta = {"multiplier_profile": MULTIPLIER_PROFILE, **(meta or {})}
    _write_csv(path, RESULT_COLUMNS, results, meta)


def run_lab(corpus, sizes=(32, 64), ps=(2, math.inf), oversample=False, out_dir=None, meta=None):
    """Evaluate every check on ``corpus`` at each grid size and reduce to constants.

    With ``out_dir`` writes ``constants.csv`` and ``ratios.csv``.
    """
    results = []
    for n in sizes:
        grid = Grid(n, corpus.grid.length)
        results += run_all_checks(corpus.on_grid(grid), ps, oversample)
    report = estimate_constant(results)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_constants(report, out / "constants.csv", meta)
        write_results(results, out / "ratios.csv", meta)
    return report, results
