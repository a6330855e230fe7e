"""Local times of lattice walks and their occupation functionals."""

import math
from dataclasses import dataclass

import numpy as np


class DimensionMismatch(ValueError):
    """Raised when a local-time operation receives a non-scalar walk."""


@dataclass(frozen=True)
class LocalTimeHistogram:
    """Visit counts of a walk: level -> number of k < n with S_k = level."""

    n: int
    counts: dict

    def __post_init__(self):
        if any(c < 1 for c in self.counts.values()):
            raise ValueError("present levels must have count >= 1")
        if sum(self.counts.values()) != self.n:
            raise ValueError("counts must sum to n")

    def __getitem__(self, level):
        return self.counts.get(level, 0)

    @property
    def support(self):
        return (min(self.counts), max(self.counts)) if self.counts else (0, 0)


def local_time(path):
    """Histogram of S_0..S_{n-1} as exact integer counts."""
    if path.dimension != 1:
        raise DimensionMismatch("local time is defined for scalar walks")
    levels, counts = np.unique(path.values[: path.n], return_counts=True)
    return LocalTimeHistogram(
        n=path.n,
        counts={int(l): int(c) for l, c in zip(levels, counts)},
    )


def occupation_square(h):
    """Sum of squared visit counts, exact."""
    return sum(c * c for c in h.counts.values())


def occupation_cross(h, shift):
    """Sum over levels of N(l) * N(l + shift), exact."""
    if shift == 0:
        return occupation_square(h)
    get = h.counts.get
    return sum(c * get(l + shift, 0) for l, c in h.counts.items())


def continuity_modulus(paths, x, y, n):
    """Empirical E|N_n(x) - N_n(y)|^2 normalized by sqrt(n)*|x - y|."""
    if x == y:
        return 0.0
    acc = 0
    for p in paths:
        if p.dimension != 1:
            raise DimensionMismatch("continuity modulus is for scalar walks")
        if p.n < n:
            raise ValueError("paths shorter than requested horizon")
        vals = p.values[:n]
        d = int(np.count_nonzero(vals == x)) - int(np.count_nonzero(vals == y))
        acc += d * d
    return acc / len(paths) / (math.sqrt(n) * abs(x - y))


@dataclass(frozen=True)
class Rw2Report:
    """Tabulated tightness diagnostics for rescaled local times."""

    n: int
    t_grid: tuple
    delta_grid: tuple
    m_bound: float
    integrand: dict
    integrand_decreasing: bool
    sup_levels: tuple
    sup_norms: tuple
    sup_norm: float


def _dense_local_time(values, m):
    lo = int(values[:m].min())
    hi = int(values[:m].max())
    return np.bincount(values[:m] - lo, minlength=hi - lo + 1), lo, hi


def rw2_condition_check(paths, t_grid, delta_grid, M):
    """Tabulate the coarse-graining integrand and the rescaled-sup bound.

    For each t and delta, approximates the integral over [-M, M] of
    E|N_m(floor(sqrt(n) a)) - N_m(floor(sqrt(n) delta floor(a/delta)))|^2
    with m = floor(n t), and reports whether it decreases as delta shrinks.
    Also reports sup over integer a in [-3, 3] of the L2 norm of
    N_n(floor(sqrt(n) a)) / sqrt(n).
    """
    if not paths:
        raise ValueError("need at least one path")
    n = paths[0].n
    if any(p.n != n or p.dimension != 1 for p in paths):
        raise ValueError("paths must be scalar with a common length")
    root = math.sqrt(n)
    h = min(min(delta_grid), 1.0 / root) / 4.0
    a_grid = np.arange(-M + h / 2, M, h)
    k_fine = np.floor(root * a_grid).astype(np.int64)
    k_coarse = {
        d: np.floor(root * d * np.floor(a_grid / d)).astype(np.int64)
        for d in delta_grid
    }
    integrand = {(t, d): 0.0 for t in t_grid for d in delta_grid}
    sup_levels = tuple(int(math.floor(root * a)) for a in range(-3, 4))
    sup_acc = np.zeros(len(sup_levels))
    for p in paths:
        vals = np.asarray(p.values[:n], dtype=np.int64)
        for t in t_grid:
            m = int(math.floor(n * t))
            dense, lo, hi = _dense_local_time(vals, m)

            def at(k):
                out = np.zeros(k.shape, dtype=np.int64)
                ok = (k >= lo) & (k <= hi)
                out[ok] = dense[k[ok] - lo]
                return out

            nf = at(k_fine)
            for d in delta_grid:
                diff = nf - at(k_coarse[d])
                integrand[(t, d)] += float(np.mean(diff.astype(float) ** 2)) * 2 * M
            if t == max(t_grid):
                for i, lv in enumerate(sup_levels):
                    c = dense[lv - lo] if lo <= lv <= hi else 0
                    sup_acc[i] += (c / root) ** 2
    for key in integrand:
        integrand[key] /= len(paths)
    sup_norms = tuple(float(math.sqrt(s / len(paths))) for s in sup_acc)
    deltas = sorted(delta_grid, reverse=True)
    decreasing = all(
        all(integrand[(t, deltas[i + 1])] <= integrand[(t, deltas[i])]
            for i in range(len(deltas) - 1))
        for t in t_grid
    )
    return Rw2Report(
        n=n,
        t_grid=tuple(t_grid),
        delta_grid=tuple(delta_grid),
        m_bound=float(M),
        integrand=integrand,
        integrand_decreasing=decreasing,
        sup_levels=sup_levels,
        sup_norms=sup_norms,
        sup_norm=max(sup_norms),
    )
