"""Monte Carlo and numerical checks of the domain-of-attraction results for
tempered heavy-tailed triangular arrays.

A row of the array is n iid draws from mu_{l_n}; its scaled sum a_n * S
(continuous) or thinned sum a_n o S (lattice) is compared through Laplace
transforms / pgfs with the predicted limit law.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import integrate

from .diagnostics import (
    STANDARD_Z_GRID,
    EmpiricalTransform,
    GapReport,
    TransformMoments,
    sup_gap,
)
from .heavy_tails import BaseMeasure, NormingSequence, TemperedMeasure, draw_tempered, temper
from .numerics import DomainError, RngStream
from .stable import StableParams, ps_laplace
from .tempered import DtsParams, PtsParams, dts_pgf, dts_sample, pts_laplace_exponent
from .tempering import TemperingFunction, rescale

REGIMES = ("finite_c", "infinite", "zero")
MIN_IN_BAND = 0.95
MAX_SUP_GAP = 0.015
POINT_MASS_DELTA = 0.05
POINT_MASS_LEVEL = 0.02
# draws per replication block; blocks carry their own random stream
BLOCK_DRAWS = 2_000_000
CLASSIFY_NS = (1e3, 1e4, 1e5)
_FLAT_SLOPE = 0.02


class ConfigurationError(ValueError):
    pass


# ------------------------------------------------------------------ schedules

@dataclass(frozen=True)
class Schedule:
    """l_n = scale * n**exponent (``power``) or l_n = c / a_n (``inverse_norming``)."""

    kind: str = "power"
    scale: float = 1.0
    exponent: float = 0.0
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in ("power", "inverse_norming"):
            raise ConfigurationError(f"unknown schedule kind {self.kind!r}")
        if not self.scale > 0 or not self.c > 0:
            raise ConfigurationError("schedule constants must be positive")

    def ell(self, n: float, seq: NormingSequence) -> float:
        if self.kind == "power":
            return self.scale * n**self.exponent
        return self.c / seq.a(n)

    def to_json(self):
        if self.kind == "power":
            return {"kind": "power", "scale": self.scale, "exponent": self.exponent}
        return {"kind": "inverse_norming", "c": self.c}

    @classmethod
    def from_json(cls, obj):
        obj = dict(obj)
        kind = obj.pop("kind", None)
        allowed = {"power": {"scale", "exponent"}, "inverse_norming": {"c"}}.get(kind)
        if allowed is None:
            raise ConfigurationError(f"unknown schedule kind {kind!r}")
        if set(obj) - allowed:
            raise ConfigurationError(f"unknown schedule fields {sorted(set(obj) - allowed)}")
        return cls(kind, **{k: float(v) for k, v in obj.items()})


# ------------------------------------------------------------------ regimes

@dataclass(frozen=True)
class LimitLaw:
    """Predicted limit: PS/DS_alpha(eta) or PTS/DTS_alpha(q, eta)."""

    family: str  # ps, ds, pts, dts
    alpha: float
    eta: float
    q: TemperingFunction | None = None

    @property
    def discrete(self) -> bool:
        return self.family in ("ds", "dts")

    @property
    def point_mass_at_zero(self) -> bool:
        return self.eta == 0

    def transform(self, grid) -> np.ndarray:
        """Laplace transform (continuous) or pgf (discrete) on ``grid``."""
        g = np.asarray(grid, dtype=float)
        if self.family == "ps":
            return np.asarray(ps_laplace(StableParams(self.alpha, self.eta), g))
        if self.family == "ds":
            return np.asarray(ps_laplace(StableParams(self.alpha, self.eta), 1.0 - g))
        if self.family == "pts":
            return np.exp(-pts_laplace_exponent(PtsParams(self.alpha, self.q, self.eta), g))
        return np.asarray(dts_pgf(DtsParams(self.alpha, self.q, self.eta), g))

    def levy_tail(self, s: float) -> float:
        """M((s, inf)) of the limit law."""
        if self.q is None:
            return self.eta / self.alpha * s**-self.alpha
        q = self.q
        pts = [p for p in q.discontinuities() if p > s]
        val = _quad_tail(lambda x: float(q(x)) * x ** (-1.0 - self.alpha), s, pts)
        return self.eta * val

    def small_jump_mean(self, eps: float) -> float:
        """int_{(0, eps)} x M(dx) of the limit law."""
        if self.q is None:
            return self.eta / (1.0 - self.alpha) * eps ** (1.0 - self.alpha)
        q, a = self.q, self.alpha
        # x = eps * u**(1/(1-a)) removes the x^-a singularity
        k = 1.0 / (1.0 - a)
        pts = [(p / eps) ** (1.0 - a) for p in q.discontinuities() if p < eps]
        val = integrate.quad(lambda u: float(q(eps * u**k)), 0.0, 1.0, points=pts or None,
                             epsabs=1e-15, epsrel=1e-12, limit=200)[0]
        return self.eta * eps ** (1.0 - a) * k * val

    def describe(self) -> str:
        if self.q is None:
            return f"{self.family.upper()}_{self.alpha:g}({self.eta:g})"
        return f"{self.family.upper()}_{self.alpha:g}({self.q.kind}{self.q.params()}, {self.eta:g})"

    def to_json(self):
        out = {"family": self.family, "alpha": self.alpha, "eta": self.eta}
        if self.q is not None:
            out["q"] = self.q.to_json()
        return out


def _quad_tail(f, s, pts):
    edges = [s] + sorted(set(pts))
    total = sum(integrate.quad(f, a, b, epsabs=1e-15, epsrel=1e-12, limit=200)[0]
                for a, b in zip(edges[:-1], edges[1:]))
    # x = edge / u maps the unbounded piece onto (0, 1]
    e = edges[-1]
    total += integrate.quad(lambda u: f(e / u) * e / (u * u) if u > 0 else 0.0, 0.0, 1.0,
                            epsabs=1e-15, epsrel=1e-12, limit=200)[0]
    return total


@dataclass(frozen=True)
class Regime:
    classification: str
    c: float | None
    zeta: float | None
    products: tuple[float, ...]
    limit: LimitLaw

    @property
    def beta(self) -> float:
        return self.limit.eta

    def to_json(self):
        return {"classification": self.classification, "c": self.c, "zeta": self.zeta,
                "a_n_l_n": list(self.products), "limit": self.limit.to_json()}


def limit_law(alpha: float, q: TemperingFunction, classification: str, c: float | None,
              discrete: bool) -> LimitLaw:
    stable_family = "ds" if discrete else "ps"
    if classification == "finite_c":
        qc = rescale(q, c)
        if qc.kind == "identity":
            return LimitLaw(stable_family, alpha, alpha)
        return LimitLaw("dts" if discrete else "pts", alpha, alpha, qc)
    if classification == "infinite":
        return LimitLaw(stable_family, alpha, alpha)
    zeta = q.limit_at_infinity
    if zeta is None:
        raise ConfigurationError("the a_n l_n -> 0 regime needs lim q(x) = zeta")
    return LimitLaw(stable_family, alpha, alpha * zeta)


def classify_regime(base: BaseMeasure, q: TemperingFunction, schedule: Schedule,
                    discrete: bool = False, ns=CLASSIFY_NS) -> Regime:
    """Classify lim a_n l_n from its trend along ``ns`` (log-log slope)."""
    seq = NormingSequence(base)
    prods = tuple(seq.a(n) * schedule.ell(n, seq) for n in ns)
    slope = math.log(prods[-1] / prods[0]) / math.log(ns[-1] / ns[0])
    if abs(slope) < _FLAT_SLOPE:
        cls, c = "finite_c", prods[-1]
    elif slope > 0:
        cls, c = "infinite", None
    else:
        cls, c = "zero", None
    return Regime(cls, c, q.limit_at_infinity, prods,
                  limit_law(base.alpha, q, cls, c, discrete))


# ------------------------------------------------------------------ experiments

@dataclass(frozen=True)
class ArrayExperiment:
    base: BaseMeasure
    q: TemperingFunction
    schedule: Schedule
    n: int
    m: int
    seed: int
    discrete: bool = False
    grid: tuple[float, ...] | None = None
    regime: str | None = None  # declared expectation, checked against the classifier

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ConfigurationError("n and m must be >= 1")
        if self.discrete and not self.base.lattice:
            raise ConfigurationError("discrete mode needs a lattice base measure")
        if self.regime is not None and self.regime not in REGIMES:
            raise ConfigurationError(f"unknown regime {self.regime!r}; expected one of {REGIMES}")

    @property
    def norming(self) -> NormingSequence:
        return NormingSequence(self.base)

    @property
    def a_n(self) -> float:
        return self.norming.a(self.n)

    @property
    def ell_n(self) -> float:
        return self.schedule.ell(self.n, self.norming)

    def transform_grid(self) -> tuple[float, ...]:
        if self.grid is not None:
            return tuple(self.grid)
        if self.discrete:
            return tuple(math.exp(-z) for z in STANDARD_Z_GRID)
        return STANDARD_Z_GRID

    def tempered(self) -> TemperedMeasure:
        return temper(self.base, self.q, self.ell_n)

    def to_json(self):
        return {"base": self.base.to_json(), "q": self.q.to_json(),
                "schedule": self.schedule.to_json(), "n": self.n, "m": self.m,
                "seed": self.seed, "discrete": self.discrete,
                "grid": list(self.transform_grid()), "regime": self.regime}


def _row_sums(exp: ArrayExperiment, tm: TemperedMeasure, a_n: float, rng: RngStream, rows: int):
    x = draw_tempered(tm, rng, rows * exp.n).reshape(rows, exp.n)
    s = x.sum(axis=1)
    if not exp.discrete:
        return a_n * s
    if a_n > 1:
        raise ConfigurationError(f"thinning needs a_n <= 1, got {a_n}")
    return rng.binomial(s, a_n)


def run_row(exp: ArrayExperiment, rng: RngStream) -> float:
    """One replication: a_n * sum (continuous) or a_n o sum (discrete)."""
    return float(_row_sums(exp, exp.tempered(), exp.a_n, rng, 1)[0])


def _rows_per_block(n: int) -> int:
    return max(1, BLOCK_DRAWS // n)


def _run_block(args):
    exp, tm, a_n, block, rows = args
    rng = RngStream(exp.seed, block)
    sums = _row_sums(exp, tm, a_n, rng, rows)
    kind = "pgf" if exp.discrete else "lt"
    mom = TransformMoments.from_samples(sums, exp.transform_grid(), kind)
    return mom, int(np.sum(sums > POINT_MASS_DELTA))


def _blocks(m: int, per_block: int):
    out, start, b = [], 0, 0
    while start < m:
        rows = min(per_block, m - start)
        out.append((b, rows))
        start += rows
        b += 1
    return out


@dataclass
class ConvergenceReport:
    label: str
    kind: str
    grid: tuple[float, ...]
    empirical: EmpiricalTransform
    target: np.ndarray
    gap: GapReport
    limit: dict[str, Any]
    passed: bool
    exceed_fraction: float | None = None
    details: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {
            "label": self.label,
            "kind": self.kind,
            "passed": self.passed,
            "sup_gap": self.gap.sup,
            "in_band_fraction": self.gap.in_band_fraction,
            "limit": self.limit,
            "point_mass_check": None if self.exceed_fraction is None else {
                "delta": POINT_MASS_DELTA, "exceed_fraction": self.exceed_fraction,
                "level": POINT_MASS_LEVEL},
            "rows": [
                {"grid_point": g, "empirical": float(self.empirical.values[i]),
                 "se": float(self.empirical.se[i]), "target": float(self.target[i]),
                 "gap": float(self.gap.gaps[i]),
                 "pass": bool(abs(self.gap.gaps[i]) <= self.gap.band[i])}
                for i, g in enumerate(self.grid)
            ],
            "details": self.details,
        }


def _collect(exp: ArrayExperiment, workers: int):
    tm = exp.tempered()
    a_n = exp.a_n
    jobs = [(exp, tm, a_n, b, rows) for b, rows in _blocks(exp.m, _rows_per_block(exp.n))]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_block, jobs))
    else:
        results = [_run_block(j) for j in jobs]
    mom = results[0][0]
    exceed = results[0][1]
    for mo, ex in results[1:]:
        mom = mom.merge(mo)
        exceed += ex
    return mom.finish(), exceed / exp.m, tm


def run_experiment(exp: ArrayExperiment, workers: int = 1, target: LimitLaw | None = None,
                   label: str = "") -> ConvergenceReport:
    """Replicate the row sum m times and compare with the predicted limit.

    Point-mass limits (zeta = 0) are checked through P(sum > 0.05) < 0.02
    rather than through transforms.
    """
    regime = classify_regime(exp.base, exp.q, exp.schedule, exp.discrete)
    if exp.regime is not None and exp.regime != regime.classification:
        raise ConfigurationError(
            f"declared regime {exp.regime!r} but a_n l_n trend {regime.products} "
            f"indicates {regime.classification!r}")
    law = target or regime.limit
    emp, exceed, tm = _collect(exp, workers)
    tv = law.transform(emp.grid)
    gap = sup_gap(emp, tv)
    if law.point_mass_at_zero:
        passed = exceed < POINT_MASS_LEVEL
    else:
        passed = gap.passed(MIN_IN_BAND, MAX_SUP_GAP)
    details = {"experiment": exp.to_json(), "regime": regime.to_json(), "a_n": exp.a_n,
               "ell_n": exp.ell_n, "c_ell": tm.c_ell, "target": law.describe()}
    return ConvergenceReport(label or law.describe(), emp.kind, emp.grid, emp, tv, gap,
                             law.to_json(), bool(passed), exceed, details)


# ------------------------------------------------------------------ natural scale

@dataclass
class NaturalScaleReport:
    ell: float
    n_natural: int
    n_large: int
    natural: ConvergenceReport
    large: ConvergenceReport

    @property
    def passed(self) -> bool:
        return self.natural.gap.sup < self.large.gap.sup

    def to_json(self):
        return {"ell": self.ell, "n_natural": self.n_natural, "n_large": self.n_large,
                "sup_gap_natural": self.natural.gap.sup, "sup_gap_large": self.large.gap.sup,
                "passed": self.passed, "natural": self.natural.to_json(),
                "large": self.large.to_json()}


def natural_scale_experiment(base: BaseMeasure, q: TemperingFunction, ell: float, m: int,
                             seed: int, factor: float = 100.0, workers: int = 1) -> NaturalScaleReport:
    """Fixed l: compare n ~ V(l) (= l^alpha for pareto) with n ~ factor * V(l)
    against the PTS limit for the natural-scale constant c = a_n l."""
    seq = NormingSequence(base)
    n1 = max(1, round(float(seq.V(ell))))
    n2 = max(n1 + 1, round(factor * n1))
    c = seq.a(n1) * ell
    law = limit_law(base.alpha, q, "finite_c", c, base.lattice and False)
    sched = Schedule("power", scale=ell, exponent=0.0)
    r1 = run_experiment(ArrayExperiment(base, q, sched, n1, m, seed), workers, law, "natural")
    r2 = run_experiment(ArrayExperiment(base, q, sched, n2, m, seed + 1), workers, law, "large")
    return NaturalScaleReport(ell, n1, n2, r1, r2)


# ------------------------------------------------------------------ array conditions

@dataclass
class ConditionReport:
    regime: Regime
    tail_rows: list[dict[str, float]]
    mean_rows: list[dict[str, float]]
    tail_converging: dict[float, bool]
    mean_converging: dict[float, bool]

    def to_json(self):
        return {"regime": self.regime.to_json(), "tail": self.tail_rows, "mean": self.mean_rows,
                "tail_converging": {repr(k): v for k, v in self.tail_converging.items()},
                "mean_converging": {repr(k): v for k, v in self.mean_converging.items()}}


def _trend(errors) -> bool:
    e = np.abs(np.asarray(errors))
    return bool(np.all(np.diff(e) <= 1e-12 + 1e-9 * e[:-1]) or e[-1] < 1e-10)


def check_array_conditions(base: BaseMeasure, q: TemperingFunction, schedule: Schedule,
                           n_list, s_grid, eps_grid=(1.0, 0.1, 0.01),
                           discrete: bool = False) -> ConditionReport:
    """Tabulate n P(a_n X > s) and n E[a_n X; a_n X < eps] for X ~ mu_{l_n}
    against M((s, inf)) and int_(0, eps) x M(dx) of the predicted limit."""
    regime = classify_regime(base, q, schedule, discrete)
    law = regime.limit
    seq = NormingSequence(base)
    tail_rows, mean_rows = [], []
    for n in n_list:
        a_n = seq.a(n)
        tm = temper(base, q, schedule.ell(n, seq))
        for s in s_grid:
            val = n * tm.tail(s / a_n)
            lim = law.levy_tail(s)
            tail_rows.append({"n": n, "s": s, "value": val, "limit": lim, "error": val - lim})
        for eps in eps_grid:
            val = n * a_n * tm.truncated_mean(eps / a_n)
            lim = law.small_jump_mean(eps)
            mean_rows.append({"n": n, "eps": eps, "value": val, "limit": lim, "error": val - lim})
    tail_conv = {s: _trend([r["error"] for r in tail_rows if r["s"] == s]) for s in s_grid}
    mean_conv = {e: _trend([r["error"] for r in mean_rows if r["eps"] == e]) for e in eps_grid}
    return ConditionReport(regime, tail_rows, mean_rows, tail_conv, mean_conv)


# ------------------------------------------------------------------ DTS embedding

@dataclass
class EmbeddingReport:
    a_list: tuple[float, ...]
    reports: list[ConvergenceReport]

    @property
    def sup_gaps(self) -> list[float]:
        return [r.gap.sup for r in self.reports]

    @property
    def monotone(self) -> bool:
        g = self.sup_gaps
        return all(x > y for x, y in zip(g[:-1], g[1:]))

    @property
    def passed(self) -> bool:
        return self.monotone and self.sup_gaps[-1] < 0.01

    def to_json(self):
        return {"a_list": list(self.a_list), "sup_gaps": self.sup_gaps,
                "monotone": self.monotone, "passed": self.passed,
                "reports": [r.to_json() for r in self.reports]}


def _embedding_block(args):
    p, a, seed, ia, block, rows, grid = args
    rng = RngStream(seed, ia, block)
    x = a * np.asarray(dts_sample(p, rng, rows), dtype=float)
    return TransformMoments.from_samples(x, grid, "lt")


def prop34_embedding(p: PtsParams, a_list, m: int, seed: int, z_grid=STANDARD_Z_GRID,
                     workers: int = 1) -> EmbeddingReport:
    """Laplace transform of a X_a, X_a ~ DTS_alpha(q_{1/a}, a^-alpha eta),
    against exp(-psi(z)) of PTS_alpha(q, eta)."""
    if p.drift != 0:
        raise ConfigurationError("the embedding is stated for zero drift")
    a_list = tuple(float(a) for a in a_list)
    if any(a <= 0 for a in a_list) or any(x <= y for x, y in zip(a_list[:-1], a_list[1:])):
        raise ConfigurationError("a_list must be positive and decreasing")
    grid = tuple(z_grid)
    target = np.exp(-pts_laplace_exponent(p, np.asarray(grid)))
    law = LimitLaw("pts", p.alpha, p.eta, p.q)
    reports = []
    per_block = BLOCK_DRAWS // 20
    for ia, a in enumerate(a_list):
        dp = DtsParams(p.alpha, rescale(p.q, 1.0 / a), a**-p.alpha * p.eta)
        jobs = [(dp, a, seed, ia, b, rows, grid) for b, rows in _blocks(m, per_block)]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                moms = list(pool.map(_embedding_block, jobs))
        else:
            moms = [_embedding_block(j) for j in jobs]
        mom = moms[0]
        for mo in moms[1:]:
            mom = mom.merge(mo)
        emp = mom.finish()
        gap = sup_gap(emp, target)
        reports.append(ConvergenceReport(f"a={a:g}", "lt", grid, emp, target, gap, law.to_json(),
                                         gap.passed(MIN_IN_BAND), None,
                                         {"dts": dp.to_json(), "a": a}))
    return EmbeddingReport(a_list, reports)
