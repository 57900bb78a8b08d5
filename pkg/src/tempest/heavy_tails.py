"""Heavy-tailed base laws mu with tail t^-alpha L(t), their tempered versions
mu_l(dx) = c_l q(x/l) mu(dx), and the norming sequence a_n = 1/V^<-(n)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .numerics import DomainError, RngStream, invert_monotone
from .stable import as_counts
from .tempering import TemperingFunction, rescale

BASE_KINDS = ("pareto", "log_pareto", "discrete_pareto")
# integrals stop at x = e^700; the neglected mass is below e^(-700 alpha)
_LOG_X_MAX = 700.0
# exact summation length before switching to a midpoint integral
_EXACT_TERMS = 100_000


class DegenerateMeasureError(RuntimeError):
    pass


@dataclass(frozen=True)
class BaseMeasure:
    """Built-in regularly varying laws on [0, inf).

    * ``pareto``: P(X > t) = (t/x_m)^-alpha for t >= x_m.
    * ``log_pareto``: P(X > t) = t^-alpha (log(e+t)/log(e+1))^p for t >= 1.
    * ``discrete_pareto``: P(X > k) = (1+k)^-alpha on the integers.
    """

    kind: str
    alpha: float
    x_m: float = 1.0
    p: float = 0.0

    def __post_init__(self):
        if self.kind not in BASE_KINDS:
            raise DomainError(f"unknown base measure {self.kind!r}")
        if not 0 < self.alpha < 1:
            raise DomainError("tail index must lie in (0, 1)")
        if self.kind == "pareto" and not self.x_m > 0:
            raise DomainError("pareto needs x_m > 0")
        if self.kind == "log_pareto" and self.p > 0:
            t = np.logspace(0, 15, 2000)
            # tail is nonincreasing iff alpha (e+t) log(e+t) >= p t
            if np.any(self.alpha * (math.e + t) * np.log(math.e + t) < self.p * t):
                raise DomainError("log_pareto tail is not monotone for this (alpha, p)")

    @classmethod
    def pareto(cls, alpha, x_m=1.0):
        return cls("pareto", alpha, x_m=x_m)

    @classmethod
    def log_pareto(cls, alpha, p):
        return cls("log_pareto", alpha, p=p)

    @classmethod
    def discrete_pareto(cls, alpha):
        return cls("discrete_pareto", alpha)

    @property
    def lattice(self) -> bool:
        return self.kind == "discrete_pareto"

    @property
    def left_endpoint(self) -> float:
        return {"pareto": self.x_m, "log_pareto": 1.0, "discrete_pareto": 1.0}[self.kind]

    def tail(self, t):
        t = np.asarray(t, dtype=float)
        a = self.alpha
        with np.errstate(divide="ignore"):
            if self.kind == "pareto":
                out = np.where(t >= self.x_m, (np.maximum(t, self.x_m) / self.x_m) ** -a, 1.0)
            elif self.kind == "log_pareto":
                tt = np.maximum(t, 1.0)
                out = np.where(t >= 1, tt**-a * (np.log(math.e + tt) / math.log(math.e + 1)) ** self.p, 1.0)
            else:
                out = np.where(t >= 0, (1.0 + np.floor(np.maximum(t, 0.0))) ** -a, 1.0)
        return out if out.ndim else float(out)

    def slowly_varying(self, t):
        """L(t) = t^alpha P(X > t)."""
        t = np.asarray(t, dtype=float)
        return t**self.alpha * self.tail(t)

    def density(self, x):
        """Lebesgue density (continuous kinds) or point masses (lattice)."""
        x = np.asarray(x, dtype=float)
        a = self.alpha
        if self.kind == "pareto":
            return np.where(x >= self.x_m, a * self.x_m**a * np.maximum(x, self.x_m) ** (-1 - a), 0.0)
        if self.kind == "log_pareto":
            xx = np.maximum(x, 1.0)
            hazard = a / xx - self.p / ((math.e + xx) * np.log(math.e + xx))
            return np.where(x >= 1, self.tail(xx) * hazard, 0.0)
        return np.where(x >= 1, _lattice_mass(a, np.maximum(x, 1.0)), 0.0)

    def to_json(self):
        params = {"alpha": self.alpha}
        if self.kind == "pareto":
            params["x_m"] = self.x_m
        elif self.kind == "log_pareto":
            params["p"] = self.p
        return {"kind": self.kind, "params": params}

    @classmethod
    def from_json(cls, obj):
        kind = obj.get("kind")
        params = dict(obj.get("params", {}))
        allowed = {"pareto": {"alpha", "x_m"}, "log_pareto": {"alpha", "p"},
                   "discrete_pareto": {"alpha"}}.get(kind)
        if allowed is None:
            raise DomainError(f"unknown base measure {kind!r}")
        extra = set(params) - allowed
        if extra:
            raise DomainError(f"unknown base parameters {sorted(extra)} for {kind!r}")
        if "alpha" not in params:
            raise DomainError("base measure needs alpha")
        return cls(kind, float(params["alpha"]), x_m=float(params.get("x_m", 1.0)),
                   p=float(params.get("p", 0.0)))


def _lattice_mass(alpha, k):
    """k^-alpha - (1+k)^-alpha without cancellation for large k."""
    return k**-alpha * -np.expm1(-alpha * np.log1p(1.0 / k))


def tail(base: BaseMeasure, t):
    return base.tail(t)


def _log_pareto_quantile(base: BaseMeasure, u):
    """Solve P(X > t) = u for t >= 1 by Newton's method in y = log t."""
    a, p = base.alpha, base.p
    log_u = np.log(u)
    norm = math.log(math.log(math.e + 1))
    y = np.maximum(-log_u / a, 0.0)
    for _ in range(60):
        et = np.exp(y)
        lg = np.log(math.e + et)
        g = -a * y + p * (np.log(lg) - norm) - log_u
        dg = -a + p * et / ((math.e + et) * lg)
        step = g / dg
        y = np.maximum(y - step, 0.0)
        if np.all(np.abs(step) < 1e-13 * np.maximum(y, 1.0)):
            break
    return np.exp(y)


def draw_base(base: BaseMeasure, rng: RngStream, size):
    """Inverse-cdf draws as float64 (lattice values are integral floats)."""
    u = rng.uniform(size)
    if base.kind == "pareto":
        return base.x_m * u ** (-1.0 / base.alpha)
    if base.kind == "log_pareto":
        return _log_pareto_quantile(base, u)
    # smallest k with (1+k)^-alpha <= u
    return np.maximum(np.ceil(u ** (-1.0 / base.alpha) - 1.0 - 1e-12), 0.0)


def sample_base(base: BaseMeasure, rng: RngStream, size=None):
    x = draw_base(base, rng, 1 if size is None else size)
    if base.lattice:
        x = np.asarray(as_counts(x))
    return x[0].item() if size is None else x


# ------------------------------------------------------------ integration

def _continuous_integral(base: BaseMeasure, g: Callable, lo: float, hi: float, breaks=()):
    """int_{(lo, hi)} g dmu for a continuous base, in the variable y = log x."""
    lo = max(lo, base.left_endpoint)
    if not hi > lo:
        return 0.0

    def h(y):
        x = math.exp(y)
        return g(x) * float(base.density(x)) * x

    ylo = math.log(lo)
    pts = sorted({math.log(b) for b in breaks if lo < b < hi})
    total = 0.0
    edges = [ylo] + pts + [math.log(hi) if math.isfinite(hi) else _LOG_X_MAX]
    for a, b in zip(edges[:-1], edges[1:]):
        total += integrate.quad(h, a, b, epsabs=1e-15, epsrel=1e-12, limit=500)[0]
    return total


def _lattice_sum(base: BaseMeasure, g: Callable, k_lo: int, k_hi: float):
    """sum_{k_lo <= k <= k_hi} g(k) P(X = k) where g is smooth on the range.

    The first terms are summed exactly; the remainder uses the midpoint rule
    sum_k f(k) ~ int_{A-1/2}^{B+1/2} f, whose error is below 1e-13 past the
    exact block for these polynomially decaying summands.
    """
    k_lo = max(int(k_lo), 1)
    if k_hi < k_lo:
        return 0.0
    stop = k_hi if k_hi < k_lo + _EXACT_TERMS else k_lo + _EXACT_TERMS - 1
    k = np.arange(k_lo, int(stop) + 1, dtype=float)
    total = float(np.sum(np.asarray(g(k), dtype=float) * base.density(k)))
    if stop < k_hi:
        a = stop + 0.5
        b = k_hi + 0.5
        alpha = base.alpha

        def h(y):
            x = math.exp(y)
            return float(g(x)) * _lattice_mass(alpha, x) * x

        upper = math.log(b) if math.isfinite(b) else _LOG_X_MAX
        total += integrate.quad(h, math.log(a), upper, epsabs=1e-16, epsrel=1e-12, limit=500)[0]
    return total


@dataclass(frozen=True)
class TemperedMeasure:
    base: BaseMeasure
    q: TemperingFunction
    ell: float
    c_ell: float

    @property
    def q_ell(self) -> TemperingFunction:
        return rescale(self.q, self.ell)

    @property
    def acceptance(self) -> float:
        """Rejection-sampler acceptance rate 1 / (c_l K)."""
        return 1.0 / (self.c_ell * self.q.bound)

    def integrate(self, g: Callable, lo: float = 0.0, hi: float = math.inf,
                  closed_lo: bool = False, closed_hi: bool = False) -> float:
        """int g(x) q_l(x) mu(dx) over the interval (lo, hi) (unnormalized)."""
        ql = self.q_ell
        breaks = ql.discontinuities()
        if not self.base.lattice:
            return _continuous_integral(self.base, lambda x: g(x) * ql(x), lo, hi, breaks)
        # integer range of the interval, then pieces on which q_l is smooth
        k_lo = math.ceil(lo) if closed_lo else math.floor(lo) + 1
        k_hi = (math.floor(hi) if closed_hi else math.ceil(hi) - 1) if math.isfinite(hi) else math.inf
        cuts = sorted({_piece_end(ql, b) for b in breaks})
        total, start = 0.0, k_lo
        for end in [c for c in cuts if k_lo <= c < k_hi] + [k_hi]:
            total += _lattice_sum(self.base, lambda x: g(x) * ql(x), start, end)
            start = end + 1
        return total

    def tail(self, t: float) -> float:
        """mu_l((t, inf))."""
        if self.q.kind == "identity":
            return float(self.base.tail(t))
        return self.c_ell * self.integrate(lambda x: 1.0, t, math.inf)

    def truncated_mean(self, eps: float) -> float:
        """int_{[0, eps)} x mu_l(dx)."""
        return self.c_ell * self.integrate(lambda x: x, 0.0, eps, closed_lo=True)


def _piece_end(q: TemperingFunction, jump: float) -> int:
    """Last integer on the left side of a jump of q."""
    if q.kind == "truncation":
        # q = 1 on [0, jump)
        return math.ceil(jump) - 1
    # table: left-continuous, q = v_i on (k_{i-1}, k_i]
    return math.floor(jump)


def temper(base: BaseMeasure, q: TemperingFunction, ell: float) -> TemperedMeasure:
    """mu_l with c_l = 1 / int q_l dmu, computed through the deficit
    int (1 - q_l) dmu for accuracy when c_l is close to 1."""
    if not ell > 0:
        raise DomainError("ell must be positive")
    if q.kind == "identity":
        return TemperedMeasure(base, q, ell, 1.0)
    probe = TemperedMeasure(base, q, ell, 1.0)
    if base.lattice:
        ql = probe.q_ell
        cuts = sorted({_piece_end(ql, b) for b in ql.discontinuities()})
        deficit, start = 0.0, 1
        for end in [c for c in cuts if c >= 1] + [math.inf]:
            deficit += _lattice_sum(base, lambda x: 1.0 - ql(x), start, end)
            start = end + 1
    else:
        ql = probe.q_ell
        deficit = _continuous_integral(base, lambda x: 1.0 - ql(x), 0.0, math.inf,
                                       ql.discontinuities() + [ell])
    mass = 1.0 - deficit
    if not mass > 0:
        raise DegenerateMeasureError("tempered measure has zero mass")
    return TemperedMeasure(base, q, ell, 1.0 / mass)


def draw_tempered(tm: TemperedMeasure, rng: RngStream, size: int):
    """Rejection from the base law with acceptance q_l(x) / K (float64)."""
    if tm.q.kind == "identity":
        return draw_base(tm.base, rng, size)
    ql, bound = tm.q_ell, tm.q.bound
    out = np.empty(size)
    filled = 0
    while filled < size:
        need = size - filled
        batch = int(need / tm.acceptance * 1.02) + 64
        x = draw_base(tm.base, rng, batch)
        x = x[rng.uniform(batch) * bound <= ql(x)][:need]
        out[filled:filled + x.size] = x
        filled += x.size
    return out


def sample_tempered(tm: TemperedMeasure, rng: RngStream, size=None):
    x = draw_tempered(tm, rng, 1 if size is None else size)
    if tm.base.lattice:
        x = np.asarray(as_counts(x))
    return x[0].item() if size is None else x


# ------------------------------------------------------------ norming

@dataclass(frozen=True)
class NormingSequence:
    """V(t) = t^alpha / L(t) = 1 / P(X > t) and a_t = 1 / V^<-(t)."""

    base: BaseMeasure

    def V(self, t):
        b = self.base
        t = np.asarray(t, dtype=float)
        # closed forms keep V exact at integer powers
        if b.kind == "pareto":
            out = np.maximum(t / b.x_m, 1.0) ** b.alpha
        elif b.kind == "discrete_pareto":
            out = (1.0 + np.floor(np.maximum(t, 0.0))) ** b.alpha
        else:
            out = 1.0 / np.asarray(b.tail(t))
        return out if out.ndim else float(out)

    def V_inverse(self, n: float) -> float:
        """inf{s : V(s) > n}."""
        b = self.base
        if n < 1:
            return 0.0
        if b.kind == "pareto":
            return b.x_m * n ** (1.0 / b.alpha)
        if b.kind == "discrete_pareto":
            # smallest integer k with (1+k)^alpha > n
            k = math.floor(n ** (1.0 / b.alpha))
            while k > 0 and k**b.alpha > n:
                k -= 1
            while (1.0 + k) ** b.alpha <= n:
                k += 1
            return float(k)
        return invert_monotone(self.V, n, (1.0, 2.0))

    def a(self, n: float) -> float:
        return 1.0 / self.V_inverse(n)


def norming_a(seq: NormingSequence, n: float) -> float:
    if n < 1:
        raise DomainError("n must be >= 1")
    return seq.a(n)
