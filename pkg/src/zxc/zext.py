"""Lattice extensions of chaotic maps: step functions, walks, limit checks."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import billiard as _bil


@dataclass(frozen=True)
class WalkPath:
    """Prefix sums of the step function along one orbit."""

    n: int
    values: np.ndarray
    variance_hint: float = 0.0

    def __post_init__(self):
        v = self.values
        if v.shape[0] != self.n + 1:
            raise ValueError("values must hold S_0..S_n")
        if not np.all(v[0] == 0):
            raise ValueError("walk must start at the origin")

    @property
    def dimension(self):
        return 1 if self.values.ndim == 1 else self.values.shape[1]


class BaseSystem:
    """Interface: a measure-preserving map with an integer step function."""

    dimension = 1
    step_bound = 1

    def sample(self, rng):
        raise NotImplementedError

    def next(self, state):
        raise NotImplementedError

    def phi(self, state):
        raise NotImplementedError

    def walk_from(self, state, n):
        """Steps phi, phi(T x), ..., as an (n,) or (n, d) integer array."""
        out = np.empty((n, self.dimension) if self.dimension > 1 else n,
                       dtype=np.int64)
        x = state
        for i in range(n):
            out[i] = self.phi(x)
            x = self.next(x)
        return out


@dataclass
class _ToyState:
    """Lazy symbolic point of the doubling map: its future sign digits."""

    rng: np.random.Generator
    pos: int = 0
    cache: list = field(default_factory=list)
    forced: tuple = ()
    bias: tuple = ()

    def digit(self, i, width):
        while len(self.cache) <= self.pos + i:
            j = len(self.cache)
            if j < len(self.forced):
                self.cache.append(np.full(width, self.forced[j], dtype=np.int64))
            else:
                p = self.bias[j] if j < len(self.bias) else 0.5
                bits = self.rng.random(width) < p
                self.cache.append(bits.astype(np.int64) * 2 - 1)
        return self.cache[self.pos + i]


class DoublingToy(BaseSystem):
    """Symbolic doubling-map extension: i.i.d. sign digits as the steps.

    Iterating x -> 2x mod 1 in floats exhausts the mantissa after ~53 steps,
    so states carry their exact symbolic itinerary instead; the digits are
    drawn on demand and the shift map just advances the read position.
    """

    def __init__(self, dimension=1):
        if dimension not in (1, 3):
            raise ValueError("dimension must be 1 or 3")
        self.dimension = dimension
        self.step_bound = 1

    def sample(self, rng, forced=(), bias=()):
        child = np.random.default_rng(rng.integers(0, 2 ** 63))
        return _ToyState(rng=child, forced=tuple(forced), bias=tuple(bias))

    def next(self, state):
        return _ToyState(rng=state.rng, pos=state.pos + 1, cache=state.cache,
                         forced=state.forced, bias=state.bias)

    def phi(self, state):
        d = state.digit(0, self.dimension)
        return int(d[0]) if self.dimension == 1 else d

    def walk_from(self, state, n):
        rows = [state.digit(i, self.dimension) for i in range(n)]
        steps = np.stack(rows)
        return steps[:, 0] if self.dimension == 1 else steps

    def walk_batch(self, rng, n, n_paths, bias=()):
        """Endpoint-free batched steps: (n_paths, n) or (n_paths, n, d) of +-1."""
        if self.dimension == 1:
            steps = (rng.random((n_paths, n)) < 0.5).astype(np.int8)
            for j, p in enumerate(bias):
                steps[:, j] = rng.random(n_paths) < p
            return steps * 2 - 1
        if bias:
            raise ValueError("bias applies to scalar walks only")
        shape = (n_paths, n, self.dimension)
        return (rng.random(shape) < 0.5).astype(np.int8) * 2 - 1


class BilliardSystem(BaseSystem):
    """Cylinder Lorentz gas viewed as a cell-index extension of its quotient."""

    def __init__(self, table=None):
        self.table = table if table is not None else _bil.default_table()
        self.dimension = 1
        self.step_bound = self.table.phi_bound

    def sample(self, rng):
        return _bil.sample_mu_bar(self.table, rng)

    def next(self, state):
        new, _, _ = _bil.billiard_map(self.table, state)
        return new

    def phi(self, state):
        return _bil.step_phi(self.table, state)

    def walk_from(self, state, n):
        orbit = _bil.run_orbit(self.table, state, n)
        return np.diff(orbit.cells)


def birkhoff_path(sys, x0, n):
    """Prefix-sum the step function over n iterations from x0."""
    if n < 1:
        raise ValueError("n must be >= 1")
    steps = sys.walk_from(x0, n)
    if np.abs(steps).max(initial=0) > sys.step_bound:
        raise ValueError("step exceeds the declared bound")
    if steps.ndim == 1:
        values = np.concatenate([[0], np.cumsum(steps)])
    else:
        values = np.vstack([np.zeros(steps.shape[1], dtype=np.int64),
                            np.cumsum(steps, axis=0)])
    return WalkPath(n=n, values=values)


def variance_estimate(paths):
    """Diffusivity estimate: mean of S_n^2/n with its standard error."""
    if len(paths) < 100:
        raise ValueError("need at least 100 paths")
    n = paths[0].n
    if any(p.n != n for p in paths):
        raise ValueError("paths must share a common length")
    if any(p.dimension != 1 for p in paths):
        raise ValueError("variance estimate is for scalar walks")
    ends = np.array([p.values[-1] for p in paths], dtype=float)
    samples = ends ** 2 / n
    return float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(len(samples)))


@dataclass(frozen=True)
class LltReport:
    """Gaussian pointwise comparison of the walk's endpoint law."""

    n: int
    sigma: float
    lattice_period: int
    levels: tuple
    empirical: tuple
    predicted: tuple
    max_rel_dev: float


def _billiard_endpoints(sys, n, n_paths, rng):
    ends = np.empty(n_paths, dtype=np.int64)
    steps_seen = set()
    i = 0
    while i < n_paths:
        x0 = sys.sample(rng)
        try:
            steps = sys.walk_from(x0, n)
        except _bil.TangentialHit:
            continue
        ends[i] = steps.sum()
        steps_seen.update(np.unique(steps).tolist())
        i += 1
    return ends, sorted(steps_seen)


def llt_check(sys, n, n_paths, rng=None):
    """Compare the endpoint mass function to its Gaussian prediction."""
    if rng is None:
        rng = np.random.default_rng(0)
    if isinstance(sys, DoublingToy):
        if sys.dimension != 1:
            raise ValueError("endpoint check is for scalar walks")
        # the symbolic walk endpoint is exactly 2*Binomial(n, 1/2) - n
        ends = 2 * rng.binomial(n, 0.5, size=n_paths) - n
        period = 2
    else:
        ends, seen = _billiard_endpoints(sys, n, n_paths, rng)
        # lattice period = gcd of observed step differences
        diffs = [s - seen[0] for s in seen[1:]]
        period = math.gcd(*diffs) if diffs else 0
        if period == 0:
            raise ValueError("degenerate walk: a single observed step value")
    sigma = float(np.mean(ends.astype(float) ** 2) / n)
    base = int(math.isqrt(n))
    residue = int(ends[0]) % period
    levels = []
    for mult in (0, 1, -1, 2, -2):
        lv = mult * base
        lv += (residue - lv) % period
        levels.append(lv)
    emp = []
    pred = []
    for lv in levels:
        p_hat = float(np.mean(ends == lv))
        dens = math.exp(-lv * lv / (2.0 * sigma * n)) / math.sqrt(
            2.0 * math.pi * sigma * n)
        emp.append(p_hat)
        pred.append(period * dens)
    max_rel = max(abs(e - p) / p for e, p in zip(emp, pred))
    return LltReport(n=n, sigma=sigma, lattice_period=period,
                     levels=tuple(levels), empirical=tuple(emp),
                     predicted=tuple(pred), max_rel_dev=max_rel)
