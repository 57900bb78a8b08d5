"""Positive stable PS_alpha(eta) and discrete stable DS_alpha(eta) laws."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import DomainError, RngStream, gamma_fn


@dataclass(frozen=True)
class StableParams:
    alpha: float
    eta: float

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.eta >= 0 or not math.isfinite(self.eta):
            raise DomainError(f"eta must be finite and >= 0, got {self.eta}")

    @property
    def coefficient(self) -> float:
        """eta * Gamma(1-alpha) / alpha, the factor in front of z**alpha."""
        return self.eta * gamma_fn(1.0 - self.alpha) / self.alpha

    @property
    def scale(self) -> float:
        return self.coefficient ** (1.0 / self.alpha)

    def to_json(self):
        return {"alpha": self.alpha, "eta": self.eta}


def _as_output(x):
    return x if np.ndim(x) else float(x)


def ps_laplace(p: StableParams, z):
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise DomainError("Laplace transform needs z >= 0")
    return _as_output(np.exp(-p.coefficient * z**p.alpha))


def ds_pgf(p: StableParams, s):
    s = np.asarray(s, dtype=float)
    if np.any((s < 0) | (s > 1)):
        raise DomainError("pgf argument must lie in [0, 1]")
    return ps_laplace(p, 1.0 - s)


def kanter_variates(alpha: float, rng: RngStream, size=None):
    """Standard one-sided stable draws with Laplace transform exp(-z**alpha).

    Kanter's representation (A(U) / E)**((1-alpha)/alpha) with U uniform on
    (0, pi) and E standard exponential.
    """
    u = np.pi * rng.uniform(size)
    e = rng.exponential(size)
    a = (np.sin(alpha * u) / np.sin(u)) ** (1.0 / (1.0 - alpha)) \
        * np.sin((1.0 - alpha) * u) / np.sin(alpha * u)
    return (a / e) ** ((1.0 - alpha) / alpha)


def ps_sample(p: StableParams, rng: RngStream, size=None):
    if p.eta == 0:
        return _as_output(np.zeros(size if size is not None else ()))
    return _as_output(p.scale * kanter_variates(p.alpha, rng, size))


def as_counts(x):
    """Cast integral float draws to int64 when they all fit."""
    x = np.asarray(x)
    if x.size and np.max(x) < 2.0**62:
        x = x.astype(np.int64)
    return x if x.ndim else x[()].item()


def ds_sample(p: StableParams, rng: RngStream, size=None):
    """N_T with T ~ PS_alpha(eta) and N a unit-rate Poisson process."""
    t = ps_sample(p, rng, size)
    return as_counts(rng.poisson(t))
