"""Tempering functions ``q`` and their scaled families ``q_l(x) = q(x/l)``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import integrate

from .numerics import DEFAULT_QUADRATURE, DomainError, QuadratureSpec, levy_integral

KINDS = ("identity", "exponential", "truncation", "exp_floor", "table")


@dataclass(frozen=True)
class TemperingFunction:
    """A bounded tempering function with ``q(0+) = 1``.

    Parameters are kept in unscaled form together with an accumulated
    ``scale`` so that repeated rescaling composes exactly:
    ``q(x) = base_q(x / scale)``.

    table kind: ``knots`` x_1 < ... < x_k and ``values`` v_1..v_k give the
    left-continuous step function ``q = v_i`` on ``(x_{i-1}, x_i]``, and
    ``tail`` beyond x_k.  ``values[0]`` must be 1.
    """

    kind: str
    a: float = 1.0
    theta: float = 0.0
    knots: tuple[float, ...] = ()
    values: tuple[float, ...] = ()
    tail: float = 0.0
    zeta_table: float | None = None
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown tempering kind {self.kind!r}")
        if self.kind in ("exponential", "truncation", "exp_floor") and not self.a > 0:
            raise DomainError(f"{self.kind} needs a > 0")
        if self.kind == "exp_floor" and not 0 <= self.theta <= 1:
            raise DomainError("exp_floor needs theta in [0, 1]")
        if self.kind == "table":
            k = np.asarray(self.knots, float)
            v = np.asarray(self.values, float)
            if k.size == 0 or k.size != v.size:
                raise DomainError("table needs equally many knots and values")
            if np.any(k <= 0) or np.any(np.diff(k) <= 0):
                raise DomainError("table knots must be positive and increasing")
            if v[0] != 1.0:
                raise DomainError("table must start at q = 1 so that q(0+) = 1")
            if np.any(v < 0) or self.tail < 0:
                raise DomainError("table values must be nonnegative")
            if self.zeta_table is not None and self.zeta_table != self.tail:
                raise DomainError("stored zeta must equal the tail value")
        if not self.scale > 0:
            raise DomainError("scale must be positive")

    # constructors
    @classmethod
    def identity(cls):
        return cls("identity")

    @classmethod
    def exponential(cls, a: float):
        return cls("exponential", a=a)

    @classmethod
    def truncation(cls, a: float):
        return cls("truncation", a=a)

    @classmethod
    def exp_floor(cls, theta: float, a: float):
        return cls("exp_floor", a=a, theta=theta)

    @classmethod
    def table(cls, knots, values, tail, zeta=None):
        return cls("table", knots=tuple(map(float, knots)), values=tuple(map(float, values)),
                   tail=float(tail), zeta_table=None if zeta is None else float(zeta))

    @property
    def bound(self) -> float:
        """K = sup q."""
        if self.kind == "table":
            return max(max(self.values), self.tail)
        return 1.0

    @property
    def limit_at_infinity(self) -> float | None:
        """zeta = lim q(x) as x -> inf, or None when not available."""
        return {
            "identity": 1.0,
            "exponential": 0.0,
            "truncation": 0.0,
            "exp_floor": self.theta,
            "table": self.zeta_table,
        }[self.kind]

    @property
    def rate(self) -> float:
        """Effective rate a/scale (exponential, exp_floor)."""
        return self.a / self.scale

    @property
    def cutoff(self) -> float:
        """Effective cutoff a*scale (truncation)."""
        return self.a * self.scale

    def discontinuities(self) -> list[float]:
        if self.kind == "truncation":
            return [self.cutoff]
        if self.kind == "table":
            return [k * self.scale for k in self.knots]
        return []

    def __call__(self, x):
        if type(x) is float:
            return _scalar(self, x)
        return evaluate(self, x)

    def params(self) -> dict[str, Any]:
        if self.kind == "identity":
            return {}
        if self.kind == "exponential":
            return {"a": self.rate}
        if self.kind == "truncation":
            return {"a": self.cutoff}
        if self.kind == "exp_floor":
            return {"theta": self.theta, "a": self.rate}
        return {
            "knots": [k * self.scale for k in self.knots],
            "values": list(self.values),
            "tail": self.tail,
            "zeta": self.zeta_table,
        }

    def to_json(self) -> dict[str, Any]:
        return {"kind": self.kind, "params": self.params()}

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "TemperingFunction":
        kind = obj.get("kind")
        params = dict(obj.get("params", {}))
        try:
            if kind == "identity":
                expected = set()
                q = cls.identity()
            elif kind in ("exponential", "truncation"):
                expected = {"a"}
                q = cls(kind, a=float(params["a"]))
            elif kind == "exp_floor":
                expected = {"theta", "a"}
                q = cls.exp_floor(float(params["theta"]), float(params["a"]))
            elif kind == "table":
                expected = {"knots", "values", "tail", "zeta"}
                q = cls.table(params["knots"], params["values"], params["tail"], params.get("zeta"))
            else:
                raise DomainError(f"unknown tempering kind {kind!r}")
        except KeyError as exc:
            raise DomainError(f"tempering {kind!r} is missing parameter {exc}") from None
        extra = set(params) - expected
        if extra:
            raise DomainError(f"unknown tempering parameters {sorted(extra)} for {kind!r}")
        return q


def evaluate(q: TemperingFunction, x):
    """q(x) for scalar or array ``x >= 0``."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("tempering functions are defined on [0, inf)")
    y = arr / q.scale
    if q.kind == "identity":
        out = np.ones_like(y)
    elif q.kind == "exponential":
        out = np.exp(-q.a * y)
    elif q.kind == "truncation":
        out = (y < q.a).astype(float)
    elif q.kind == "exp_floor":
        out = q.theta + (1.0 - q.theta) * np.exp(-q.a * y)
    else:
        knots = np.asarray(q.knots)
        vals = np.append(np.asarray(q.values), q.tail)
        # left-continuous: x in (k_{i-1}, k_i] -> v_i
        out = vals[np.searchsorted(knots, y, side="left")]
        out = np.where(y == 0, 1.0, out)
    return out if out.ndim else float(out)


def _scalar(q: TemperingFunction, x: float) -> float:
    # fast path for quadrature integrands
    if x < 0 or x != x:
        raise DomainError("tempering functions are defined on [0, inf)")
    y = x / q.scale
    if q.kind == "identity":
        return 1.0
    if q.kind == "exponential":
        return math.exp(-q.a * y)
    if q.kind == "truncation":
        return 1.0 if y < q.a else 0.0
    if q.kind == "exp_floor":
        return q.theta + (1.0 - q.theta) * math.exp(-q.a * y)
    return float(evaluate(q, x))


def rescale(q: TemperingFunction, ell: float) -> TemperingFunction:
    """q_l(x) = q(x / l)."""
    if not ell > 0:
        raise DomainError("scale must be positive")
    if q.kind == "identity":
        return q
    return TemperingFunction(q.kind, q.a, q.theta, q.knots, q.values, q.tail,
                             q.zeta_table, q.scale * ell)


@dataclass(frozen=True)
class IntegrabilityReport:
    alpha: float
    value: float
    head: float
    tail: float
    passed: bool
    tail_increments: list[float] = field(default_factory=list)


def validate_integrability(
    q: TemperingFunction, alpha: float, spec: QuadratureSpec = DEFAULT_QUADRATURE
) -> IntegrabilityReport:
    """Evaluate the integral of (1 ^ x) q(x) x^(-1-alpha) over (0, inf)."""
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    jumps = [p for p in q.discontinuities() if p > 0]
    head = levy_integral(lambda x: float(q(x)) * x**-alpha if x < 1 else 0.0,
                         alpha, spec, [p for p in jumps if p < 1] + [1.0])
    # Cauchy check of the tail on doubling upper limits
    increments = []
    upper = 1.0
    for _ in range(64):
        pts = [p for p in jumps if upper < p < 2 * upper] or None
        inc, _ = integrate.quad(lambda x: float(q(x)) * x ** (-1 - alpha), upper, 2 * upper,
                                points=pts, epsabs=1e-14, epsrel=1e-12, limit=200)
        increments.append(inc)
        upper *= 2
    # a divergent tail has increments that do not shrink geometrically
    last = increments[-8:]
    passed = bool(np.all(np.isfinite(increments)) and
                  (last[-1] == 0.0 or (last[-5] > 0 and (last[-1] / last[-5]) ** 0.25 < 1 - 1e-6)))
    tail = levy_integral(lambda x: float(q(x)) * x ** (-1 - alpha) if x >= 1 else 0.0,
                         0.0, spec, [p for p in jumps if p > 1] + [1.0]) if passed else math.inf
    return IntegrabilityReport(alpha, head + tail, head, tail, passed, increments)
