"""Limit-law verification: Brownian oracle, constants, and convergence checks."""

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from . import billiard as _bil
from . import _kernels as K
from . import localtime as _lt
from . import selfcross as _sx
from . import zext as _zx


class BprimeViolation(RuntimeError):
    """A sampled arc met one of its own vertical translates."""


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


class _Report:
    def to_dict(self):
        return _plain(asdict(self))


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Sorted sample carrier for distribution comparisons."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 1 or s.shape[0] < 2:
            raise ValueError("need at least two samples")
        if np.any(np.diff(s) < 0):
            raise ValueError("samples must be sorted ascending")
        object.__setattr__(self, "samples", s)

    @classmethod
    def from_samples(cls, raw):
        return cls(np.sort(np.asarray(raw, dtype=float)))

    @property
    def n(self):
        return self.samples.shape[0]

    @property
    def mean(self):
        return float(self.samples.mean())

    def scaled(self, factor):
        return EmpiricalDistribution(self.samples * factor if factor > 0
                                     else np.sort(self.samples * factor))


def ks_distance(a, b):
    """Sup distance between the two empirical CDFs."""
    grid = np.concatenate([a.samples, b.samples])
    fa = np.searchsorted(a.samples, grid, side="right") / a.n
    fb = np.searchsorted(b.samples, grid, side="right") / b.n
    return float(np.abs(fa - fb).max())


def oracle_sample(m, sigma, rng):
    """One squared-local-time sample from a fresh m-step sign walk."""
    steps = rng.integers(0, 2, size=m - 1, dtype=np.int64) * 2 - 1
    s = np.concatenate([[0], np.cumsum(steps)])
    s -= s.min()
    counts = np.bincount(s)
    return sigma ** -0.5 * m ** -1.5 * float(np.dot(counts, counts))


def brownian_L2_oracle(m, reps, sigma, rng=None):
    """Samples converging to the squared-local-time integral of Brownian motion.

    Each sample is sigma^{-1/2} m^{-3/2} sum_l N_m(l)^2 for a fresh simple
    random walk of m steps; the limit is the integral of the squared local
    time at time 1 of the Brownian motion with variance parameter sigma.
    """
    if m < 10 ** 5:
        raise ValueError("walk length must be at least 1e5")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if rng is None:
        rng = np.random.default_rng(0)
    out = np.empty(reps)
    for r in range(reps):
        out[r] = oracle_sample(m, sigma, rng)
    return EmpiricalDistribution.from_samples(out)


@dataclass(frozen=True)
class ConstantsReport(_Report):
    """Geometric and dynamical constants of one table, with cross-checks."""

    gamma: float
    e_tau: float
    e_tau_stderr: float
    e_i_direct: float
    e_i_direct_stderr: float
    e_i_kac: float
    e_i_prime: float
    combined_stderr: float
    consistent: bool
    n_pairs: int
    n_tau: int
    n_degenerate: int = 0

    def __post_init__(self):
        for name in ("gamma", "e_tau", "e_i_direct", "e_i_kac", "e_i_prime"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def _sample_flights(table, n, rng):
    """Arc arrays of n accepted single flights from invariant samples."""
    dcx, dcy, dr, cj, cm, ck, clb = table.arrays()
    parts = []
    need = n
    dropped = 0
    while need > 0:
        idx, psi, theta = _bil.sample_mu_bar_batch(table, rng, need)
        tau, ax, ay, bx, by, ok, status = K.flights(
            idx, psi, theta, dcx, dcy, dr, cj, cm, ck, clb, table.tau_max)
        if status == K.ERR_NO_HIT:
            raise _bil.HorizonViolation("a sampled flight found no obstacle")
        good = ok == 1
        dropped += int(need - good.sum())
        parts.append((ax[good], ay[good], bx[good], by[good]))
        need -= int(good.sum())
    ax = np.concatenate([p[0] for p in parts])[:n]
    ay = np.concatenate([p[1] for p in parts])[:n]
    bx = np.concatenate([p[2] for p in parts])[:n]
    by = np.concatenate([p[3] for p in parts])[:n]
    return ax, ay, bx, by, dropped


def pair_count_samples(table, n_pairs, rng):
    """Mod-Z intersection counts of independent arc pairs, plus overlap flags."""
    xax, xay, xbx, xby, d1 = _sample_flights(table, n_pairs, rng)
    yax, yay, ybx, yby, d2 = _sample_flights(table, n_pairs, rng)
    counts, selfbad, status = K.pair_quotient_counts(
        xax, xay, xbx, xby, yax, yay, ybx, yby)
    if status != K.OK and np.any(counts < 0):
        bad = counts < 0
        counts = counts[~bad]
    return counts, int(selfbad.sum()), d1 + d2


def estimate_constants(table, n_pairs, n_tau, rng=None):
    """Estimate the intersection constants two independent ways."""
    if n_pairs <= 0 or n_tau <= 0:
        raise ValueError("need positive sample counts")
    if rng is None:
        rng = np.random.default_rng(0)
    gamma = 2.0 * table.boundary_length
    e_tau, se_tau = _bil.mean_free_path(table, n_tau, rng=rng)
    counts, n_selfbad, n_dropped = pair_count_samples(table, n_pairs, rng)
    if n_selfbad > 0:
        raise BprimeViolation(
            f"{n_selfbad} sampled arcs met their own vertical translates")
    mean_c = float(counts.mean())
    se_c = float(counts.std(ddof=1) / math.sqrt(counts.shape[0]))
    e_i_direct = gamma ** 2 * mean_c
    e_i_direct_se = gamma ** 2 * se_c
    e_i_kac = 4.0 * gamma * e_tau
    e_i_prime = e_i_kac / (e_tau ** 2 * gamma ** 2)
    combined = math.hypot(e_i_direct_se, 4.0 * gamma * se_tau)
    return ConstantsReport(
        gamma=gamma, e_tau=e_tau, e_tau_stderr=se_tau,
        e_i_direct=e_i_direct, e_i_direct_stderr=e_i_direct_se,
        e_i_kac=e_i_kac, e_i_prime=e_i_prime, combined_stderr=combined,
        consistent=abs(e_i_direct - e_i_kac) <= 3.0 * combined,
        n_pairs=int(counts.shape[0]), n_tau=n_tau, n_degenerate=n_dropped)


def _quick_constants(table, rng):
    return estimate_constants(table, n_pairs=10 ** 5, n_tau=2 * 10 ** 5,
                              rng=rng)


def _run_orbit_resampled(table, n, rng, counters):
    while True:
        x0 = _bil.sample_mu_bar(table, rng)
        try:
            return _bil.run_orbit(table, x0, n)
        except _bil.TangentialHit:
            counters["tangential"] = counters.get("tangential", 0) + 1


@dataclass(frozen=True)
class Theorem2Report(_Report):
    """Crossing-count distribution vs the scaled Brownian oracle."""

    statistic: str
    n_grid: tuple
    n_starts: int
    ks_by_n: dict
    ks_final: float
    decreasing: bool
    mean_stat: float
    mean_limit: float
    mean_ratio: float
    moments_ok: bool
    gamma: float
    e_tau: float
    e_i: float
    e_i_prime: float
    sigma_hat: float
    degenerate_events: dict
    samples_by_n: dict = field(repr=False)


def thm2_grid(n):
    """Three-point collision grid used by the crossing-law check."""
    return sorted({max(200, n // 10), max(200, (3 * n) // 10), n})


def thm2_start(table, grid, rng, counters):
    """One start's crossing statistics over the grid, plus its endpoint term."""
    n = grid[-1]
    orb = _run_orbit_resampled(table, n, rng, counters)
    stats = [2.0 * _sx.nu_from_orbit(orb, m) / m ** 1.5 for m in grid]
    s_n = int(orb.cells[n] - orb.cells[0])
    return stats, s_n * s_n / n


def thm2_assemble(constants, grid, stats, endsq, counters, oracle):
    n = grid[-1]
    n_starts = endsq.shape[0]
    sigma_hat = float(endsq.mean())
    c_bar = constants.e_i_kac / constants.gamma ** 2
    factor = c_bar * sigma_hat ** -0.5
    scaled = oracle.scaled(factor)
    ks_by_n = {m: ks_distance(EmpiricalDistribution.from_samples(stats[m]),
                              scaled)
               for m in grid}
    ks_list = [ks_by_n[m] for m in grid]
    mean_stat = float(stats[n].mean())
    mean_limit = factor * oracle.mean
    ratio = mean_stat / mean_limit
    return Theorem2Report(
        statistic="2*nu_n/n^1.5",
        n_grid=tuple(grid), n_starts=n_starts,
        ks_by_n=ks_by_n, ks_final=ks_list[-1],
        decreasing=all(ks_list[i + 1] <= ks_list[i]
                       for i in range(len(ks_list) - 1)),
        mean_stat=mean_stat, mean_limit=mean_limit, mean_ratio=ratio,
        moments_ok=abs(ratio - 1.0) <= 0.10,
        gamma=constants.gamma, e_tau=constants.e_tau,
        e_i=constants.e_i_kac, e_i_prime=constants.e_i_prime,
        sigma_hat=sigma_hat, degenerate_events=dict(counters),
        samples_by_n={m: np.sort(v) for m, v in stats.items()})


def theorem2_check(table, n, n_starts, oracle, rng=None, constants=None):
    """Distribution check of the collision-indexed crossing count.

    Builds the empirical law of 2 nu_n / n^{3/2} over independent starts
    and compares it, via the KS distance, to the oracle rescaled by
    e_I Gamma^{-2} sigma_hat^{-1/2}; the oracle must be a unit-variance
    draw from brownian_L2_oracle. The pair count is doubled because the
    limiting constant applies to ordered index pairs.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if constants is None:
        constants = _quick_constants(table, rng)
    grid = thm2_grid(n)
    counters = {}
    stats = {m: np.empty(n_starts) for m in grid}
    endsq = np.empty(n_starts)
    for i in range(n_starts):
        row, endsq[i] = thm2_start(table, grid, rng, counters)
        for m, v in zip(grid, row):
            stats[m][i] = v
    return thm2_assemble(constants, grid, stats, endsq, counters, oracle)


@dataclass(frozen=True)
class Theorem1Report(_Report):
    """Flow-time crossing count vs the time-changed oracle."""

    statistic: str
    t: float
    n_starts: int
    ks: float
    sandwich_ok: bool
    n_sandwich_failures: int
    mean_stat: float
    mean_limit: float
    mean_ratio_collision: float
    ratio_target: float
    ratio_ok: bool
    t_over_nt: float
    t_over_nt_ok: bool
    gamma: float
    e_tau: float
    e_i: float
    e_i_prime: float
    sigma_hat: float
    sigma_tilde: float
    degenerate_events: dict
    samples: np.ndarray = field(repr=False)


def thm1_start(table, t, e_tau, rng, counters):
    """One flow-time start: statistic, ratios, and the sandwich outcome."""
    n_need = int(1.10 * t / e_tau) + 100
    while True:
        orb = _run_orbit_resampled(table, n_need, rng, counters)
        ct = np.cumsum(orb.tau)
        s = float(rng.uniform(0.0, orb.tau[0]))
        if ct[-1] >= s + t:
            break
        n_need = int(1.2 * n_need) + 100
    k0 = int(np.searchsorted(ct, s, side="right"))
    k1 = int(np.searchsorted(ct, s + t, side="right"))
    m = k1 - k0
    lower, _, _ = _sx.count_arrays(
        orb.ax[k0 + 1:k1], orb.ay[k0 + 1:k1],
        orb.bx[k0 + 1:k1], orb.by[k0 + 1:k1], orb.cells[k0 + 1:k1])
    upper, _, _ = _sx.count_arrays(
        orb.ax[k0:k1 + 1], orb.ay[k0:k1 + 1],
        orb.bx[k0:k1 + 1], orb.by[k0:k1 + 1], orb.cells[k0:k1 + 1])
    arcs = _head_clipped_arcs(orb, k0, k1, s)
    n_t = _sx.continuous_count(arcs, t)
    nu_m = _sx.nu_from_orbit(orb, m)
    s_n = int(orb.cells[n_need] - orb.cells[0])
    return (2.0 * n_t / t ** 1.5,
            (n_t / t ** 1.5) / (nu_m / m ** 1.5),
            t / m,
            s_n * s_n / n_need,
            not lower <= n_t <= upper)


def thm1_assemble(constants, t, stat, ratio_disc, t_over, endsq, failures,
                   counters, oracle):
    e_tau = constants.e_tau
    sigma_hat = float(endsq.mean())
    sigma_tilde = sigma_hat / e_tau
    factor = constants.e_i_prime * sigma_tilde ** -0.5
    scaled = oracle.scaled(factor)
    emp = EmpiricalDistribution.from_samples(stat)
    mean_ratio = float(ratio_disc.mean())
    target = e_tau ** -1.5
    t_over_nt = float(t_over.mean())
    return Theorem1Report(
        statistic="2*N_t/t^1.5",
        t=float(t), n_starts=endsq.shape[0],
        ks=ks_distance(emp, scaled),
        sandwich_ok=failures == 0, n_sandwich_failures=failures,
        mean_stat=float(stat.mean()), mean_limit=factor * oracle.mean,
        mean_ratio_collision=mean_ratio, ratio_target=target,
        ratio_ok=abs(mean_ratio / target - 1.0) <= 0.10,
        t_over_nt=t_over_nt,
        t_over_nt_ok=abs(t_over_nt / e_tau - 1.0) <= 0.02,
        gamma=constants.gamma, e_tau=e_tau,
        e_i=constants.e_i_kac, e_i_prime=constants.e_i_prime,
        sigma_hat=sigma_hat, sigma_tilde=sigma_tilde,
        degenerate_events=dict(counters), samples=emp.samples)


def theorem1_check(table, t, n_starts, oracle, rng=None, constants=None):
    """Distribution and sandwich check of the flow-time crossing count.

    Starts are drawn from the invariant collision measure with an initial
    flow phase uniform on [0, tau); the statistic 2 N_t / t^{3/2} is
    compared to the oracle rescaled by e'_I (sigma_hat / E_tau)^{-1/2}.
    Per orbit the exact sandwich holds: crossings of the fully-covered
    arcs <= N_t <= crossings of the covering arcs.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if constants is None:
        constants = _quick_constants(table, rng)
    counters = {}
    stat = np.empty(n_starts)
    ratio_disc = np.empty(n_starts)
    t_over = np.empty(n_starts)
    endsq = np.empty(n_starts)
    failures = 0
    for i in range(n_starts):
        stat[i], ratio_disc[i], t_over[i], endsq[i], bad = thm1_start(
            table, t, constants.e_tau, rng, counters)
        failures += int(bad)
    return thm1_assemble(constants, t, stat, ratio_disc, t_over, endsq,
                          failures, counters, oracle)


def _head_clipped_arcs(orb, k0, k1, s):
    """TrajectoryArc list for the trace window, times re-anchored at s."""
    from .geometry import Point2, Segment
    ct0 = float(np.sum(orb.tau[:k0]))
    out = []
    f = (s - ct0) / float(orb.tau[k0])
    ax0 = orb.ax[k0] + f * (orb.bx[k0] - orb.ax[k0])
    ay0 = orb.ay[k0] + f * (orb.by[k0] - orb.ay[k0])
    t_acc = 0.0
    if f < 1.0 - 1e-12:
        seg = Segment(Point2(float(ax0), float(ay0)),
                      Point2(float(orb.bx[k0]), float(orb.by[k0])))
        out.append(_sx.TrajectoryArc(
            seg=seg, start_cell=int(orb.cells[k0]),
            end_cell=int(orb.cells[k0 + 1]),
            t_start=0.0, t_end=seg.length, index=k0))
        t_acc = seg.length
    for k in range(k0 + 1, min(k1 + 1, orb.n)):
        seg = Segment(Point2(float(orb.ax[k]), float(orb.ay[k])),
                      Point2(float(orb.bx[k]), float(orb.by[k])))
        out.append(_sx.TrajectoryArc(
            seg=seg, start_cell=int(orb.cells[k]),
            end_cell=int(orb.cells[k + 1]),
            t_start=t_acc, t_end=t_acc + seg.length, index=k))
        t_acc += seg.length
    return out


@dataclass(frozen=True)
class InitialLaw:
    """Named initial distribution for strong-convergence probes."""

    name: str
    absolutely_continuous: bool = True
    bias: tuple = ()
    sampler: object = None


def toy_laws():
    """Three absolutely continuous start laws for the doubling toy."""
    return [InitialLaw("uniform"),
            InitialLaw("biased20", bias=(0.7,) * 20),
            InitialLaw("firstbit1", bias=(1.0,))]


def billiard_laws(table):
    """Three absolutely continuous start laws for the billiard."""

    def mu_bar(rng):
        return _bil.sample_mu_bar(table, rng)

    def disk0(rng):
        while True:
            x = _bil.sample_mu_bar(table, rng)
            if x.disk_id == table.disks[0].id:
                return x

    def cos2(rng):
        while True:
            x = _bil.sample_mu_bar(table, rng)
            if rng.random() < math.cos(x.theta):
                return x

    return [InitialLaw("mu_bar", sampler=mu_bar),
            InitialLaw("disk0", sampler=disk0),
            InitialLaw("cos2_theta", sampler=cos2)]


def normalized_self_pairs(values, n):
    """Doubled coincidence-pair count of a scalar walk, n^{-3/2}-scaled."""
    v = np.asarray(values[:n], dtype=np.int64)
    counts = np.bincount(v - v.min())
    return (float(np.dot(counts, counts)) - n) / n ** 1.5


def toy_L2_start(system, n_grid, rng, bias=()):
    """One toy walk's squared-occupation statistic at each grid length."""
    n_grid = sorted(int(n) for n in n_grid)
    steps = system.walk_batch(rng, n_grid[-1], 1, bias=bias)[0]
    s = np.concatenate([[0], np.cumsum(steps, dtype=np.int64)])
    out = []
    for n in n_grid:
        v = s[:n]
        counts = np.bincount(v - v.min())
        out.append(float(np.dot(counts, counts)) / n ** 1.5)
    return out


def toy_L2_statistics(system, n_grid, n_starts, rng=None, bias=()):
    """Empirical laws of n^{-3/2} sum N^2 for the toy walk across the grid."""
    if rng is None:
        rng = np.random.default_rng(0)
    n_grid = sorted(int(n) for n in n_grid)
    stats = {n: np.empty(n_starts) for n in n_grid}
    for i in range(n_starts):
        for n, v in zip(n_grid, toy_L2_start(system, n_grid, rng, bias)):
            stats[n][i] = v
    return {n: EmpiricalDistribution.from_samples(v) for n, v in stats.items()}


@dataclass(frozen=True)
class ToyTheoremReport(_Report):
    """Toy-walk occupation statistic vs the Brownian oracle."""

    statistic: str
    n_grid: tuple
    n_starts: int
    ks_by_n: dict
    ks_final: float
    decreasing: bool
    mean_stat: float
    mean_ratio: float
    samples_by_n: dict = field(repr=False)


def toy_theorem_assemble(dists, oracle):
    grid = sorted(dists)
    ks_by_n = {n: ks_distance(dists[n], oracle) for n in grid}
    ks_list = [ks_by_n[n] for n in grid]
    mean_stat = dists[grid[-1]].mean
    return ToyTheoremReport(
        statistic="sumN^2/n^1.5",
        n_grid=tuple(grid), n_starts=dists[grid[-1]].n,
        ks_by_n=ks_by_n, ks_final=ks_list[-1],
        decreasing=all(ks_list[i + 1] <= ks_list[i]
                       for i in range(len(ks_list) - 1)),
        mean_stat=mean_stat, mean_ratio=mean_stat / oracle.mean,
        samples_by_n={n: d.samples for n, d in dists.items()})


def toy_theorem_check(system, n_grid, n_starts, oracle, rng=None, bias=()):
    """Distribution check of the toy occupation statistic across the grid."""
    dists = toy_L2_statistics(system, n_grid, n_starts, rng=rng, bias=bias)
    return toy_theorem_assemble(dists, oracle)


@dataclass(frozen=True)
class StrongConvergenceReport(_Report):
    """Per-law distribution distances for strong convergence in law."""

    n: int
    n_starts: int
    law_names: tuple
    ks_to_oracle: dict
    pairwise_ks: dict
    max_pairwise: float
    pairwise_ok: bool
    samples_by_law: dict = field(repr=False)


def strong_start(system, statistic, law, n, rng):
    """One start's statistic value under the given initial law."""
    if isinstance(system, _zx.DoublingToy):
        steps = system.walk_batch(rng, n, 1, bias=law.bias)[0]
        s = np.concatenate([[0], np.cumsum(steps, dtype=np.int64)])
        return statistic(s, n)
    while True:
        x0 = law.sampler(rng)
        try:
            path = _zx.birkhoff_path(system, x0, n)
        except _bil.TangentialHit:
            continue
        return statistic(path.values, n)


def strong_convergence_check(system, statistic, laws, oracle, n=10 ** 5,
                             n_starts=2000, rng=None, threshold=0.06):
    """Compare the statistic's law across initial distributions.

    Every law must be absolutely continuous; each yields an empirical
    distribution of statistic(S_0..S_n) over n_starts independent starts,
    and all pairwise KS distances must fall below the threshold.
    """
    if len(laws) < 3:
        raise ValueError("need at least three initial laws")
    for law in laws:
        if not law.absolutely_continuous:
            raise ValueError(f"law {law.name} is not absolutely continuous")
    if rng is None:
        rng = np.random.default_rng(0)
    dists = {}
    for law in laws:
        vals = np.empty(n_starts)
        for i in range(n_starts):
            vals[i] = strong_start(system, statistic, law, n, rng)
        dists[law.name] = EmpiricalDistribution.from_samples(vals)
    names = [law.name for law in laws]
    return strong_assemble(names, dists, oracle, n, threshold)


def strong_assemble(names, dists, oracle, n, threshold=0.06):
    ks_oracle = {name: ks_distance(d, oracle) for name, d in dists.items()}
    pairwise = {}
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            pairwise[f"{names[i]}|{names[j]}"] = ks_distance(
                dists[names[i]], dists[names[j]])
    max_pair = max(pairwise.values())
    return StrongConvergenceReport(
        n=n, n_starts=dists[names[0]].n, law_names=tuple(names),
        ks_to_oracle=ks_oracle, pairwise_ks=pairwise,
        max_pairwise=max_pair, pairwise_ok=max_pair < threshold,
        samples_by_law={k: d.samples for k, d in dists.items()})


def _coincidence_pairs(positions):
    """Number of index pairs i < j at the same lattice point."""
    if positions.ndim == 1:
        keys = positions
    else:
        m = int(np.abs(positions).max()) + 1
        base = 2 * m + 1
        keys = ((positions[:, 0] + m) * base + (positions[:, 1] + m)) * base \
            + (positions[:, 2] + m)
    _, counts = np.unique(keys, return_counts=True)
    return int((counts * (counts - 1) // 2).sum())


def appa_orbit(system, t_grid, rng):
    """Coincidence pace nu_t / t of one lattice orbit at each grid time."""
    t_grid = sorted(int(t) for t in t_grid)
    d = system.dimension
    steps = system.walk_batch(rng, t_grid[-1], 1)[0]
    pos = np.cumsum(steps, axis=0, dtype=np.int64)
    zero = np.zeros((1, d), dtype=np.int64) if d > 1 else \
        np.zeros(1, dtype=np.int64)
    pos = np.concatenate([zero, pos], axis=0)
    return [_coincidence_pairs(pos[:t]) / t for t in t_grid]


def return_prob_partial_sums(t_values, dimension):
    """Brute-force partial sums of the origin-return probabilities.

    For the product walk with i.i.d. +-1 coordinates, P(S_k = 0) is the
    d-th power of the scalar central binomial mass; the sums over even
    k <= t are the exact truncated expected coincidence pace E(I).
    """
    t_max = max(int(t) for t in t_values)
    m = np.arange(1, t_max // 2 + 1, dtype=float)
    p_even = np.cumprod((2.0 * m - 1.0) / (2.0 * m))
    sums = np.cumsum(p_even ** dimension)
    return {int(t): float(sums[int(t) // 2 - 1]) for t in t_values}


@dataclass(frozen=True)
class AppendixAReport(_Report):
    """Pace of coincidence pairs for the transient lattice extension."""

    dimension: int
    t_grid: tuple
    n_orbits: int
    mean_rate_by_t: dict
    per_orbit_last: np.ndarray
    per_orbit_gaps: np.ndarray
    per_orbit_gap_max: float
    mean_gap: float
    converged: bool
    direct_estimate: float
    direct_partial_prev: float
    cauchy_gap: float
    transient_ok: bool
    match_direct: bool
    rel_dev_direct: float


def appendixA_check(system, t_grid, n_orbits, rng=None, gap_tol=0.05,
                    match_tol=0.05):
    """Almost-sure pace check: coincidence pairs per unit time stabilize.

    For each orbit of the lattice extension, tracks nu_t / t across the
    time grid; the mean over orbits must settle (relative gap below
    gap_tol between the last two grid times) and agree with the directly
    summed return-probability series truncated at the same horizon. The
    recurrent scalar case is expected to fail both the stabilization and
    the partial-sum Cauchy test.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    t_grid = sorted(int(t) for t in t_grid)
    rates = {t: np.empty(n_orbits) for t in t_grid}
    for i in range(n_orbits):
        for t, r in zip(t_grid, appa_orbit(system, t_grid, rng)):
            rates[t][i] = r
    return appa_assemble(system.dimension, rates, gap_tol, match_tol)


def appa_assemble(dimension, rates, gap_tol=0.05, match_tol=0.05):
    t_grid = sorted(rates)
    n_orbits = rates[t_grid[-1]].shape[0]
    mean_by_t = {t: float(rates[t].mean()) for t in t_grid}
    last, prev = t_grid[-1], t_grid[-2]
    mean_gap = abs(mean_by_t[last] - mean_by_t[prev]) / mean_by_t[last]
    gaps = np.abs(rates[last] - rates[prev]) / rates[last]
    partial = return_prob_partial_sums([prev, last], dimension)
    direct = partial[last]
    direct_prev = partial[prev]
    cauchy = abs(direct - direct_prev) / direct
    rel_dev = abs(mean_by_t[last] - direct) / direct
    return AppendixAReport(
        dimension=dimension, t_grid=tuple(t_grid), n_orbits=n_orbits,
        mean_rate_by_t=mean_by_t, per_orbit_last=np.sort(rates[last]),
        per_orbit_gaps=np.sort(gaps), per_orbit_gap_max=float(gaps.max()),
        mean_gap=float(mean_gap), converged=mean_gap < gap_tol,
        direct_estimate=direct, direct_partial_prev=direct_prev,
        cauchy_gap=float(cauchy), transient_ok=cauchy < 0.01,
        match_direct=rel_dev < match_tol, rel_dev_direct=float(rel_dev))


def appb_orbit(table, n_grid, rng, counters):
    """One orbit's quotient crossing pace per grid point, plus dominance."""
    n_grid = sorted(int(n) for n in n_grid)
    n_max = n_grid[-1]
    while True:
        orb = _run_orbit_resampled(table, n_max, rng, counters)
        try:
            row = []
            for n in n_grid:
                total, _, _ = _sx.count_arrays(
                    orb.ax[:n], orb.ay[:n], orb.bx[:n], orb.by[:n],
                    orb.cells[:n], quotient=True)
                row.append(2.0 * total / n ** 2)
            break
        except _sx.OverlapDetected:
            counters["overlap"] = counters.get("overlap", 0) + 1
    nu_cyl = _sx.nu_from_orbit(orb, n_max)
    return row, row[-1] * n_max ** 2 / 2.0 >= nu_cyl


@dataclass(frozen=True)
class AppendixBReport(_Report):
    """Quadratic pace of crossings on the compact quotient."""

    n_grid: tuple
    n_orbits: int
    stat_by_n: dict
    per_orbit_gaps: np.ndarray
    per_orbit_gap_mean: float
    per_orbit_gap_max: float
    per_orbit_ok: bool
    converged: bool
    mean_gap: float
    e_bar_direct: float
    e_bar_direct_stderr: float
    mean_final: float
    rel_dev: float
    match_direct: bool
    dominates_cylinder: bool
    degenerate_events: dict


def appendixB_check(table, n_grid, n_orbits, rng=None, n_pairs=2 * 10 ** 5,
                    gap_tol=0.05, match_tol=0.05):
    """Almost-sure quadratic law on the torus-projected billiard.

    Tracks 2 nu_bar_n / n^2 per orbit across the collision grid (both
    coordinates identified mod 1); per-orbit gaps between the last two
    grid points must fall below gap_tol, the mean must match the directly
    pair-sampled intersection expectation, and every orbit's quotient
    count must dominate its cylinder count.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    n_grid = sorted(int(n) for n in n_grid)
    counters = {}
    stat = {n: np.empty(n_orbits) for n in n_grid}
    dominates = True
    for i in range(n_orbits):
        row, dom = appb_orbit(table, n_grid, rng, counters)
        for n, v in zip(n_grid, row):
            stat[n][i] = v
        dominates = dominates and dom
    counts, n_selfbad, _ = pair_count_samples(table, n_pairs, rng)
    return appb_assemble(stat, dominates, counts, counters, gap_tol,
                         match_tol)


def appb_assemble(stat, dominates, counts, counters, gap_tol=0.05,
                  match_tol=0.05):
    n_grid = sorted(stat)
    last, prev = n_grid[-1], n_grid[-2]
    gaps = np.abs(stat[last] - stat[prev]) / stat[last]
    e_bar = float(counts.mean())
    e_bar_se = float(counts.std(ddof=1) / math.sqrt(counts.shape[0]))
    mean_final = float(stat[last].mean())
    mean_gap = abs(mean_final - float(stat[prev].mean())) / mean_final
    rel_dev = abs(mean_final - e_bar) / e_bar
    return AppendixBReport(
        n_grid=tuple(n_grid), n_orbits=stat[last].shape[0],
        stat_by_n={n: np.sort(v) for n, v in stat.items()},
        per_orbit_gaps=np.sort(gaps),
        per_orbit_gap_mean=float(gaps.mean()),
        per_orbit_gap_max=float(gaps.max()),
        per_orbit_ok=bool(gaps.max() < gap_tol),
        converged=bool(gaps.mean() < gap_tol),
        mean_gap=float(mean_gap),
        e_bar_direct=e_bar, e_bar_direct_stderr=e_bar_se,
        mean_final=mean_final, rel_dev=float(rel_dev),
        match_direct=rel_dev < match_tol,
        dominates_cylinder=dominates,
        degenerate_events=dict(counters))


def toy_path(system, n, rng, bias=()):
    """One toy walk wrapped as a WalkPath."""
    steps = system.walk_batch(rng, n, 1, bias=bias)[0]
    values = np.concatenate([[0], np.cumsum(steps, dtype=np.int64)])
    return _zx.WalkPath(n=n, values=values)


def localtime_path_stats(system, n, rng):
    """Decay and modulus contributions of one fresh toy path."""
    p = toy_path(system, n, rng)
    h = _lt.local_time(p)
    decay = (_lt.occupation_square(h) - _lt.occupation_cross(h, 1)) / n ** 1.5
    y_lv = max(1, int(0.5 * math.sqrt(n)))
    modulus = _lt.continuity_modulus([p], 0, y_lv, n)
    return decay, modulus


@dataclass(frozen=True)
class LocaltimePropsReport(_Report):
    """Occupation-moment diagnostics of the scalar toy walk."""

    n_grid: tuple
    n_paths: int
    decay_by_n: dict
    decay_decreasing: bool
    modulus_by_n: dict
    modulus_ratio: float
    modulus_stable: bool
    sup_by_n: dict
    sup_ratio: float
    sup_stable: bool
    rw2_integrand_decreasing: bool


def localtime_props_check(system, n_grid, n_paths, rng=None,
                          rw2_t_grid=(0.5, 1.0), rw2_deltas=(0.2, 0.1, 0.05),
                          rw2_m=3.0):
    """Moment probes of the rescaled local time of the scalar toy walk.

    Tracks the adjacent-level defect n^{-3/2}(sum N^2 - sum N N_+1),
    which must decrease along the grid; the discrete continuity modulus,
    which must stay within a factor 1.5 across the grid; and the
    coarse-graining integrand and rescaled-sup bound on the two smallest
    grid lengths.
    """
    if system.dimension != 1:
        raise ValueError("local-time probes need the scalar toy")
    if rng is None:
        rng = np.random.default_rng(0)
    n_grid = sorted(int(n) for n in n_grid)
    decay_by_n = {}
    modulus_by_n = {}
    for n in n_grid:
        dec = np.empty(n_paths)
        mod = np.empty(n_paths)
        for i in range(n_paths):
            dec[i], mod[i] = localtime_path_stats(system, n, rng)
        decay_by_n[n] = float(dec.mean())
        modulus_by_n[n] = float(mod.mean())
    decs = [decay_by_n[n] for n in n_grid]
    mods = [modulus_by_n[n] for n in n_grid]
    mod_ratio = max(mods) / min(mods)
    sup_by_n = {}
    rw2_decreasing = True
    for n in n_grid[:2]:
        paths = [toy_path(system, n, rng) for _ in range(n_paths)]
        rep = _lt.rw2_condition_check(paths, rw2_t_grid, rw2_deltas, rw2_m)
        sup_by_n[n] = rep.sup_norm
        rw2_decreasing = rw2_decreasing and rep.integrand_decreasing
    sups = [sup_by_n[n] for n in n_grid[:2]]
    sup_ratio = max(sups) / min(sups)
    return LocaltimePropsReport(
        n_grid=tuple(n_grid), n_paths=n_paths,
        decay_by_n=decay_by_n,
        decay_decreasing=all(decs[i + 1] <= decs[i]
                             for i in range(len(decs) - 1)),
        modulus_by_n=modulus_by_n, modulus_ratio=float(mod_ratio),
        modulus_stable=mod_ratio <= 1.5,
        sup_by_n=sup_by_n, sup_ratio=float(sup_ratio),
        sup_stable=sup_ratio <= 1.2,
        rw2_integrand_decreasing=rw2_decreasing)
