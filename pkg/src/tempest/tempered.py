"""Positive tempered stable PTS_alpha(q, eta, b) and discrete tempered stable
DTS_alpha(q, eta) laws, their transforms, samplers and pmf, and binomial
thinning."""

from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .numerics import (
    DEFAULT_QUADRATURE,
    DomainError,
    QuadratureSpec,
    RngStream,
    gamma_fn,
    levy_integral,
)
from .stable import StableParams, as_counts, ps_sample
from .tempering import TemperingFunction, rescale, validate_integrability

# predicted acceptance below which exponential rejection falls back to the series
MIN_ACCEPTANCE = 0.01
_JUMP_CHUNK = 2_000_000


@functools.lru_cache(maxsize=256)
def _integrable(q: TemperingFunction, alpha: float) -> bool:
    return validate_integrability(q, alpha).passed


def _check_common(alpha, q, eta, drift):
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if not eta >= 0 or not math.isfinite(eta):
        raise DomainError("eta must be finite and >= 0")
    if not drift >= 0:
        raise DomainError("drift must be >= 0")
    if not _integrable(q, alpha):
        raise DomainError("tempering function fails the integrability condition")


@dataclass(frozen=True)
class PtsParams:
    alpha: float
    q: TemperingFunction
    eta: float
    drift: float = 0.0

    def __post_init__(self):
        _check_common(self.alpha, self.q, self.eta, self.drift)

    def levy_density(self, x):
        x = np.asarray(x, dtype=float)
        return self.eta * self.q(x) * x ** (-1.0 - self.alpha)

    def to_json(self):
        return {"alpha": self.alpha, "q": self.q.to_json(), "eta": self.eta, "drift": self.drift}


@dataclass(frozen=True)
class DtsParams:
    alpha: float
    q: TemperingFunction
    eta: float
    rate: float = 1.0
    drift: float = 0.0

    def __post_init__(self):
        _check_common(self.alpha, self.q, self.eta, self.drift)
        if not self.rate > 0:
            raise DomainError("Poisson rate must be positive")

    def folded(self) -> PtsParams:
        """Subordinated PTS law at unit rate: (q_r, r**alpha * eta, r * b)."""
        r = self.rate
        return PtsParams(self.alpha, rescale(self.q, r), r**self.alpha * self.eta, r * self.drift)

    def to_json(self):
        return {"alpha": self.alpha, "q": self.q.to_json(), "eta": self.eta,
                "rate": self.rate, "drift": self.drift}


# ---------------------------------------------------------------- transforms

def _one_minus_exp_over(u: float) -> float:
    """(1 - e^{-u}) / u, accurate down to subnormal u."""
    if u < 1e-8:
        return 1.0 - 0.5 * u
    return -math.expm1(-u) / u


def pts_laplace_exponent(p: PtsParams, z, spec: QuadratureSpec = DEFAULT_QUADRATURE):
    """psi(z) = b z + eta * int (1 - e^{-zx}) q(x) x^{-1-alpha} dx."""
    zs = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(zs < 0):
        raise DomainError("Laplace exponent needs z >= 0")
    alpha, q = p.alpha, p.q
    jumps = q.discontinuities()
    out = np.empty_like(zs)
    for i, zi in enumerate(zs):
        if zi == 0 or p.eta == 0:
            out[i] = p.drift * zi
            continue
        # dividing by z for small z keeps the absolute tolerance meaningful
        k = min(zi, 1.0)
        integral = levy_integral(
            lambda x: _one_minus_exp_over(zi * x) * (zi / k) * float(q(x)) * x ** (-alpha),
            alpha, spec, jumps,
        )
        out[i] = p.drift * zi + p.eta * k * integral
    return out if np.ndim(z) else float(out[0])


def pts_laplace(p: PtsParams, z, spec: QuadratureSpec = DEFAULT_QUADRATURE):
    return np.exp(-pts_laplace_exponent(p, z, spec))


def dts_pgf(p: DtsParams, s, spec: QuadratureSpec = DEFAULT_QUADRATURE):
    s_arr = np.asarray(s, dtype=float)
    if np.any((s_arr <= 0) | (s_arr > 1)):
        raise DomainError("DTS pgf argument must lie in (0, 1]")
    return np.exp(-pts_laplace_exponent(p.folded(), 1.0 - s_arr, spec))


# ---------------------------------------------------------------- samplers

@dataclass(frozen=True)
class SamplerPlan:
    """How pts_sample draws from a given law, and what that costs in bias.

    For the series method jumps below ``epsilon`` are replaced by their mean
    ``compensation``; ``remainder_sd`` is the standard deviation of what was
    dropped and bounds the Laplace-transform bias by z**2 * sd**2 / 2.
    """

    method: str
    acceptance: float | None = None
    epsilon: float = 0.0
    compensation: float = 0.0
    remainder_sd: float = 0.0
    jump_rate: float = 0.0

    def lt_bias_bound(self, z):
        return 0.5 * np.asarray(z, dtype=float) ** 2 * self.remainder_sd**2


def exponential_acceptance(p: PtsParams) -> float:
    """P(accept) = E exp(-a X) for X ~ PS_alpha(eta)."""
    return math.exp(-StableParams(p.alpha, p.eta).coefficient * p.q.rate**p.alpha)


@functools.lru_cache(maxsize=256)
def pts_plan(p: PtsParams, tol: float = 1e-3, method: str = "auto") -> SamplerPlan:
    if not tol > 0:
        raise DomainError("tol must be positive")
    if method not in ("auto", "rejection", "series"):
        raise DomainError(f"unknown sampling method {method!r}")
    kind = p.q.kind
    if p.eta == 0:
        return SamplerPlan("degenerate")
    if method == "auto":
        if kind == "identity":
            method = "stable"
        elif kind == "exponential" and exponential_acceptance(p) >= MIN_ACCEPTANCE:
            method = "rejection"
        else:
            method = "series"
    if method == "rejection":
        if kind != "exponential":
            raise DomainError("exact rejection needs exponential tempering")
        return SamplerPlan("rejection", acceptance=exponential_acceptance(p))
    if method == "stable":
        return SamplerPlan("stable")
    alpha, q = p.alpha, p.q
    eta_k = p.eta * q.bound
    eps = (tol**2 * (2.0 - alpha) / eta_k) ** (1.0 / (2.0 - alpha))
    pts = [d / eps for d in q.discontinuities()]
    # integrals over (0, eps) computed on (0, 1) after x = eps * u
    comp = p.eta * eps ** (1 - alpha) * levy_integral(
        lambda u: float(q(eps * u)) * u**-alpha if u <= 1 else 0.0, alpha, points=pts + [1.0])
    var = p.eta * eps ** (2 - alpha) * levy_integral(
        lambda u: float(q(eps * u)) * u ** (1 - alpha) if u <= 1 else 0.0, 0.0, points=pts + [1.0])
    return SamplerPlan("series", epsilon=eps, compensation=comp,
                       remainder_sd=math.sqrt(var), jump_rate=eta_k * eps**-alpha / alpha)


def _series_draws(p: PtsParams, plan: SamplerPlan, rng: RngStream, size: int):
    alpha, q = p.alpha, p.q
    counts = rng.poisson(plan.jump_rate, size).astype(np.int64)
    out = np.full(size, plan.compensation)
    # groups of draws keep the jump buffer bounded
    group = max(1, int(_JUMP_CHUNK // (plan.jump_rate + 1.0)))
    for start in range(0, size, group):
        c = counts[start:start + group]
        total = int(c.sum())
        if not total:
            continue
        jumps = plan.epsilon * rng.uniform(total) ** (-1.0 / alpha)
        keep = rng.uniform(total) * q.bound <= q(jumps)
        owner = np.repeat(np.arange(c.size), c)
        out[start:start + c.size] += np.bincount(owner, weights=jumps * keep, minlength=c.size)
    return out


def _rejection_draws(p: PtsParams, plan: SamplerPlan, rng: RngStream, size: int):
    stable = StableParams(p.alpha, p.eta)
    rate = p.q.rate
    out = np.empty(size)
    filled = 0
    while filled < size:
        need = size - filled
        batch = int(need / plan.acceptance * 1.1) + 16
        x = ps_sample(stable, rng, batch)
        acc = x[rng.uniform(batch) <= np.exp(-rate * x)][:need]
        out[filled:filled + acc.size] = acc
        filled += acc.size
    return out


def pts_sample(p: PtsParams, rng: RngStream, size=None, tol: float = 1e-3, method: str = "auto"):
    """Draw from PTS_alpha(q, eta, b).

    ``method`` is ``auto``, ``rejection`` (exact, exponential q only) or
    ``series``; the truncation bias of the series path is described by
    ``pts_plan(p, tol)``.
    """
    plan = pts_plan(p, tol, method)
    n = 1 if size is None else int(np.prod(size))
    if plan.method == "degenerate":
        x = np.zeros(n)
    elif plan.method == "stable":
        x = ps_sample(StableParams(p.alpha, p.eta), rng, n)
    elif plan.method == "rejection":
        x = _rejection_draws(p, plan, rng, n)
    else:
        x = _series_draws(p, plan, rng, n)
    x = x + p.drift
    return float(x[0]) if size is None else x.reshape(size)


def dts_sample(p: DtsParams, rng: RngStream, size=None, tol: float = 1e-3, method: str = "auto"):
    """N_{rT} with T ~ PTS_alpha(q, eta); drift enters as independent Poisson(b r)."""
    base = PtsParams(p.alpha, p.q, p.eta)
    t = pts_sample(base, rng, size, tol, method)
    n = rng.poisson(p.rate * np.asarray(t))
    if p.drift > 0:
        n = n + rng.poisson(p.drift * p.rate, np.shape(n) or None)
    return as_counts(n)


def thin(gamma: float, x, rng: RngStream):
    """gamma o x: a Binomial(x, gamma) draw for each count in ``x``."""
    if not 0 <= gamma <= 1:
        raise DomainError("thinning probability must lie in [0, 1]")
    x_arr = np.asarray(x)
    if np.any(x_arr < 0):
        raise DomainError("thinning acts on nonnegative integers")
    if gamma == 1:
        return x
    return as_counts(rng.binomial(x_arr, gamma))


# ---------------------------------------------------------------- pmf

@dataclass(frozen=True)
class LevyWeights:
    """Jump intensities lambda_k (k = 1..k_max) of a DTS law on Z+."""

    weights: np.ndarray
    total: float
    tail_mass: float

    @property
    def k_max(self) -> int:
        return len(self.weights)


def dts_levy_weights(p: DtsParams, k_max: int, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> LevyWeights:
    """lambda_k = eta * int e^{-x} x^k / k! q(x) x^{-1-alpha} dx for the folded
    law; a drift b contributes b r to lambda_1."""
    if k_max < 1:
        raise DomainError("k_max must be >= 1")
    f = p.folded()
    alpha, q = f.alpha, f.q
    jumps = q.discontinuities()
    lam = np.zeros(k_max)
    if f.eta > 0:
        for k in range(1, k_max + 1):
            lg = gammaln(k + 1.0)

            def integrand(x, k=k, lg=lg):
                return math.exp((k - 1.0 - alpha) * math.log(x) - x - lg) * float(q(x))

            # the integrand is a gamma-like bump at x = k of width sqrt(k)
            peak = [k + j * math.sqrt(k) for j in range(-8, 9) if k + j * math.sqrt(k) > 0] if k > 1 else []
            lam[k - 1] = f.eta * levy_integral(integrand, alpha if k == 1 else 0.0, spec,
                                               jumps + peak)
    lam[0] += f.drift
    total = float(pts_laplace_exponent(f, 1.0, spec))
    return LevyWeights(lam, total, max(total - float(lam.sum()), 0.0))


class PmfError(RuntimeError):
    pass


@dataclass(frozen=True)
class PmfTable:
    probabilities: np.ndarray
    tail_mass: float
    weights: LevyWeights = field(repr=False)

    @property
    def n_max(self) -> int:
        return len(self.probabilities) - 1

    def pgf(self, s):
        n = np.arange(self.n_max + 1)
        return np.asarray([np.sum(self.probabilities * si**n) for si in np.atleast_1d(s)])


def dts_pmf(p: DtsParams, n_max: int, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> PmfTable:
    """p_0 = exp(-Lambda), p_n = (1/n) sum_k k lambda_k p_{n-k}.

    Lambda is the full jump intensity from the Laplace exponent, so the
    recursion is exact up to n_max; the unreported mass P(N > n_max) is the
    table's ``tail_mass``.
    """
    if n_max < 0:
        raise DomainError("n_max must be >= 0")
    if p.eta == 0 and p.drift == 0:
        probs = np.zeros(n_max + 1)
        probs[0] = 1.0
        return PmfTable(probs, 0.0, LevyWeights(np.zeros(max(n_max, 1)), 0.0, 0.0))
    w = dts_levy_weights(p, max(n_max, 1), spec)
    if w.weights.sum() > w.total * (1 + 1e-8) + 1e-12:
        raise PmfError(f"jump weights sum {w.weights.sum():.12g} exceeds total intensity "
                       f"{w.total:.12g}; quadrature tolerance too loose")
    probs = np.zeros(n_max + 1)
    probs[0] = math.exp(-w.total)
    klam = np.arange(1, n_max + 1) * w.weights[:n_max]
    for n in range(1, n_max + 1):
        probs[n] = np.dot(klam[:n], probs[n - 1::-1]) / n
    total = probs.sum()
    if total > 1 + 1e-10 or np.any(probs < 0):
        raise PmfError(f"recursion lost conservation: sum of pmf {total:.15g}")
    return PmfTable(probs, max(1.0 - total, 0.0), w)


def write_pmf_csv(table: PmfTable, path, header: list[str] = ()):
    with open(path, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        fh.write(f"# tail_mass={float(table.tail_mass)!r}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "p_n"])
        for n, pn in enumerate(table.probabilities):
            w.writerow([n, repr(float(pn))])
