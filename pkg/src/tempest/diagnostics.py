"""Empirical transforms with CLT error bands, gap reports and the two-sample
KS statistic."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

STANDARD_Z_GRID = (0.1, 0.25, 0.5, 1.0, 2.0, 5.0)
BAND_SE = 3.0


def standard_s_grid():
    return tuple(math.exp(-z) for z in STANDARD_Z_GRID)


@dataclass(frozen=True)
class TransformMoments:
    """Count, mean and centered sum of squares of e^{-zX} or s^X per grid
    point; mergeable across sample chunks (pairwise update)."""

    kind: str
    grid: tuple[float, ...]
    count: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def from_samples(cls, samples, grid, kind: str) -> "TransformMoments":
        x = np.asarray(samples, dtype=float).ravel()
        if x.size == 0:
            raise ValueError("empty sample")
        if np.any(x < 0):
            raise ValueError("samples must be nonnegative")
        g = np.asarray(grid, dtype=float)
        if kind == "lt":
            vals = np.exp(-np.outer(g, x))
        else:
            with np.errstate(under="ignore"):
                vals = np.power.outer(g, x)
        mean = vals.mean(axis=1)
        dev = vals - mean[:, None]
        return cls(kind, tuple(map(float, g)), x.size, mean, (dev * dev).sum(axis=1))

    def merge(self, other: "TransformMoments") -> "TransformMoments":
        if self.grid != other.grid or self.kind != other.kind:
            raise ValueError("cannot merge transforms on different grids")
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.count / n)
        m2 = self.m2 + other.m2 + delta * delta * (self.count * other.count / n)
        return TransformMoments(self.kind, self.grid, n, mean, m2)

    def finish(self) -> "EmpiricalTransform":
        m = self.count
        if m > 1:
            se = np.sqrt(self.m2 / (m - 1) / m)
        else:
            se = np.zeros_like(self.mean)
        return EmpiricalTransform(self.kind, self.grid, np.clip(self.mean, 0.0, 1.0), se, m)


@dataclass(frozen=True)
class EmpiricalTransform:
    kind: str  # "lt" or "pgf"
    grid: tuple[float, ...]
    values: np.ndarray
    se: np.ndarray
    m: int


def empirical_lt(samples, z_grid=STANDARD_Z_GRID) -> EmpiricalTransform:
    return TransformMoments.from_samples(samples, z_grid, "lt").finish()


def empirical_pgf(samples, s_grid) -> EmpiricalTransform:
    return TransformMoments.from_samples(samples, s_grid, "pgf").finish()


@dataclass(frozen=True)
class GapReport:
    gaps: np.ndarray
    band: np.ndarray
    sup: float
    in_band_fraction: float
    target: np.ndarray

    def passed(self, min_fraction: float = 0.95, max_sup: float | None = None) -> bool:
        ok = self.in_band_fraction >= min_fraction
        if max_sup is not None:
            ok = ok and self.sup < max_sup
        return bool(ok)


def sup_gap(emp: EmpiricalTransform, target, band_se: float = BAND_SE) -> GapReport:
    """Compare an empirical transform with a target curve.

    ``target`` is a callable evaluated on the grid or an array of values.
    """
    if callable(target):
        tv = np.asarray([float(target(g)) for g in emp.grid])
    else:
        tv = np.asarray(target, dtype=float)
    gaps = np.asarray(emp.values) - tv
    band = band_se * np.asarray(emp.se)
    inside = np.abs(gaps) <= band
    return GapReport(gaps, band, float(np.max(np.abs(gaps))), float(np.mean(inside)), tv)


def write_transform_csv(path, emp: EmpiricalTransform, report: GapReport | None = None,
                        header: list[str] = ()):
    with open(path, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["grid_point", "empirical", "se", "target", "gap", "pass"])
        for i, g in enumerate(emp.grid):
            if report is None:
                w.writerow([repr(g), repr(float(emp.values[i])), repr(float(emp.se[i])), "", "", ""])
            else:
                ok = abs(report.gaps[i]) <= report.band[i]
                w.writerow([repr(g), repr(float(emp.values[i])), repr(float(emp.se[i])),
                            repr(float(report.target[i])), repr(float(report.gaps[i])), int(ok)])


@dataclass(frozen=True)
class KsResult:
    statistic: float
    critical: float

    @property
    def flagged(self) -> bool:
        return self.statistic > self.critical


def ks_two_sample(x, y) -> KsResult:
    """Two-sample Kolmogorov-Smirnov statistic with the 1% critical value
    1.63 sqrt((n+m)/(nm))."""
    x = np.sort(np.asarray(x, dtype=float).ravel())
    y = np.sort(np.asarray(y, dtype=float).ravel())
    n, m = x.size, y.size
    if n == 0 or m == 0:
        raise ValueError("both samples must be nonempty")
    pts = np.concatenate([x, y])
    fx = np.searchsorted(x, pts, side="right") / n
    fy = np.searchsorted(y, pts, side="right") / m
    return KsResult(float(np.max(np.abs(fx - fy))), 1.63 * math.sqrt((n + m) / (n * m)))


def evaluate_target(target: Callable, grid) -> np.ndarray:
    return np.asarray([float(target(g)) for g in grid])
