"""Shared numeric kernel: gamma function, singular Levy-type quadrature,
monotone inversion and the random stream used by every sampler."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate


class DomainError(ValueError):
    """Argument outside the domain of a function."""


class QuadratureError(RuntimeError):
    def __init__(self, message: str, error_estimate: float):
        super().__init__(f"{message} (last error estimate {error_estimate:.3e})")
        self.error_estimate = error_estimate


class InversionError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_subdivisions: int = 200

    def __post_init__(self):
        if not self.rel_tol > 0 or not self.abs_tol > 0:
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")


DEFAULT_QUADRATURE = QuadratureSpec()


def gamma_fn(x: float) -> float:
    if not x > 0:
        raise DomainError(f"gamma_fn needs x > 0, got {x}")
    return math.gamma(x)


def _quad(g, a, b, spec: QuadratureSpec, points=None):
    out = integrate.quad(
        g, a, b,
        epsabs=spec.abs_tol, epsrel=spec.rel_tol, limit=spec.max_subdivisions,
        points=points or None, full_output=1,
    )
    value, err = out[0], out[1]
    if not math.isfinite(value) or err > max(spec.rel_tol * abs(value), spec.abs_tol):
        raise QuadratureError("quadrature did not converge", err)
    return value, err


def levy_integral(
    f: Callable[[float], float],
    singular_exponent: float = 0.0,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
    points: Sequence[float] = (),
) -> float:
    """Integrate ``f`` over (0, inf).

    ``f`` may blow up like ``x**-singular_exponent`` at the origin
    (``singular_exponent < 1``).  The range is split at 1: on (0, 1] we
    substitute ``x = u**(1/(1-beta))`` which removes the singularity, and
    [1, inf) is folded onto (0, 1] by ``x = 1/u``.  ``points`` are known
    kinks or jumps of ``f`` (e.g. a truncation level).
    """
    beta = float(singular_exponent)
    if beta >= 1:
        raise DomainError("singular exponent must be < 1 for integrability")
    beta = max(beta, 0.0)
    power = 1.0 / (1.0 - beta)
    jac = beta / (1.0 - beta)

    def head(u):
        if u <= 0.0:
            return 0.0
        return f(u**power) * u**jac * power

    def tail(u):
        if u <= 0.0:
            return 0.0
        return f(1.0 / u) / (u * u)

    head_pts = sorted(p ** (1.0 - beta) for p in points if 0 < p < 1)
    tail_pts = sorted(1.0 / p for p in points if p > 1)
    # the two halves share the tolerance budget
    half = QuadratureSpec(spec.rel_tol, spec.abs_tol / 2, spec.max_subdivisions)
    v1, _ = _quad(head, 0.0, 1.0, half, head_pts)
    v2, _ = _quad(tail, 0.0, 1.0, half, tail_pts)
    return v1 + v2


def invert_monotone(
    V: Callable[[float], float],
    t: float,
    bracket_hint: tuple[float, float] = (1.0, 2.0),
    rel_tol: float = 1e-13,
    max_expansions: int = 2000,
) -> float:
    """Generalized inverse ``inf{s : V(s) > t}`` of a nondecreasing ``V``
    by bracket expansion and geometric bisection."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    lo, hi = bracket_hint
    lo = max(lo, 1e-300)
    hi = max(hi, lo * 2)
    k = 0
    while not V(hi) > t:
        lo, hi = hi, hi * 2.0
        k += 1
        if k > max_expansions or not math.isfinite(hi):
            raise InversionError(f"V never exceeds {t} below {hi}")
    while V(lo) > t:
        lo /= 2.0
        if lo < 1e-300:
            return 0.0
    for _ in range(400):
        if hi - lo <= rel_tol * hi:
            break
        mid = math.sqrt(lo * hi) if hi / lo > 4 else 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if V(mid) > t:
            hi = mid
        else:
            lo = mid
    return hi


# counts above this are outside the exact range of the numpy generators
_EXACT_COUNT_LIMIT = 2.0**53


class RngStream:
    """Seedable stream of random draws.

    Streams are derived from ``(seed, *key)`` through numpy's SeedSequence,
    so a child stream for block ``i`` of an experiment is
    ``RngStream(seed, i)`` regardless of which worker consumes it.
    """

    def __init__(self, seed: int, *key: int):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def child(self, *key: int) -> "RngStream":
        return RngStream(self.seed, *self.key, *key)

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def uniform(self, size=None):
        """Uniform draws on (0, 1]."""
        return 1.0 - self._gen.random(size)

    def exponential(self, size=None):
        return self._gen.standard_exponential(size)

    def normal(self, size=None):
        return self._gen.standard_normal(size)

    def poisson(self, lam, size=None):
        """Poisson counts as float64 (exact integers below 2**53).

        numpy's PTRS transformed-rejection sampler is used for every mean up
        to 1e15; beyond that a rounded normal is drawn, since such counts are
        not representable exactly in float64 anyway.
        """
        lam = np.asarray(lam, dtype=float)
        if size is not None:
            lam = np.broadcast_to(lam, size)
        out = np.empty(lam.shape)
        big = lam > 1e15
        if np.any(big):
            small = ~big
            out[small] = self._gen.poisson(lam[small])
            lb = lam[big]
            out[big] = np.maximum(np.rint(lb + np.sqrt(lb) * self._gen.standard_normal(lb.shape)), 0.0)
        else:
            out[...] = self._gen.poisson(lam)
        return out if out.ndim else float(out)

    def binomial(self, n, p, size=None):
        """Binomial counts as float64; ``n`` may exceed the int64 range."""
        n = np.asarray(n, dtype=float)
        p = np.asarray(p, dtype=float)
        if size is not None:
            n = np.broadcast_to(n, size)
        n, p = np.broadcast_arrays(n, p)
        out = np.empty(n.shape)
        big = n >= _EXACT_COUNT_LIMIT
        small = ~big
        out[small] = self._gen.binomial(n[small].astype(np.int64), p[small])
        if np.any(big):
            nb, pb = n[big], p[big]
            mean = nb * pb
            normal = np.rint(mean + np.sqrt(mean * (1 - pb)) * self._gen.standard_normal(nb.shape))
            out[big] = np.clip(np.where(pb < 1e-6, self.poisson(mean), normal), 0.0, nb)
        return out if out.ndim else float(out)
