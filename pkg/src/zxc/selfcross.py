"""Self-intersection counting for cylinder trajectories and their quotients."""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from . import billiard as _bil
from .geometry import OverlapDetected, Point2, Segment, POINT_TOL, _intersect_core

TIME_TOL = 1e-9


class SpanTooSmall(ValueError):
    """Raised when a candidate pair's cell gap exceeds the declared span."""


@dataclass(frozen=True)
class TrajectoryArc:
    """One straight flight of the lifted trajectory, with its flow times."""

    seg: Segment
    start_cell: int
    end_cell: int
    t_start: float
    t_end: float
    index: int

    def __post_init__(self):
        if not math.isclose(self.t_end - self.t_start, self.seg.length,
                            rel_tol=1e-9, abs_tol=TIME_TOL):
            raise ValueError("flow duration must equal arc length (unit speed)")


@dataclass(frozen=True)
class CrossingRecord:
    """Unordered arc pair (i < j) with its geometric multiplicity."""

    i: int
    j: int
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("multiplicity must be >= 1")
        if not self.i < self.j:
            raise ValueError("records are for ordered index pairs i < j")


def arcs_from_orbit(orbit, n=None):
    """TrajectoryArc list for the first n flights of an orbit."""
    n = orbit.n if n is None else n
    t = 0.0
    out = []
    for i in range(n):
        seg = Segment(Point2(float(orbit.ax[i]), float(orbit.ay[i])),
                      Point2(float(orbit.bx[i]), float(orbit.by[i])))
        out.append(TrajectoryArc(seg=seg,
                                 start_cell=int(orbit.cells[i]),
                                 end_cell=int(orbit.cells[i + 1]),
                                 t_start=t, t_end=t + float(orbit.tau[i]),
                                 index=i))
        t += float(orbit.tau[i])
    return out


def _arc_arrays(arcs):
    n = len(arcs)
    ax = np.empty(n)
    ay = np.empty(n)
    bx = np.empty(n)
    by = np.empty(n)
    cells = np.empty(n, dtype=np.int64)
    idx = np.empty(n, dtype=np.int64)
    for i, a in enumerate(arcs):
        ax[i] = a.seg.a.x
        ay[i] = a.seg.a.y
        bx[i] = a.seg.b.x
        by[i] = a.seg.b.y
        cells[i] = a.start_cell
        idx[i] = a.index
    if n > 1 and not np.all(np.diff(idx) > 0):
        raise ValueError("arcs must be sorted by strictly increasing index")
    return ax, ay, bx, by, cells, idx


def _raise_kernel(status):
    if status == K.ERR_OVERLAP:
        raise OverlapDetected("trajectory arcs overlap along a line")
    if status == K.ERR_CAPACITY:
        raise RuntimeError("crossing buffer capacity exceeded")


def count_arrays(ax, ay, bx, by, cells, idx=None, quotient=False,
                 want_pairs=False):
    """Kernel crossing count over raw arc arrays; returns totals and records."""
    n = ax.shape[0]
    if idx is None:
        idx = np.arange(n, dtype=np.int64)
    cap = 64 + 2 * n * (1 + int(math.isqrt(n))) if want_pairs else 0
    total, nrec, i_idx, j_idx, k_mult, max_gap, status = K.count_crossings(
        ax, ay, bx, by, cells, idx, n, quotient, want_pairs, cap)
    _raise_kernel(status)
    return int(total), (i_idx[:nrec], j_idx[:nrec], k_mult[:nrec]), int(max_gap)


def nu_n(arcs, cell_span):
    """Self-intersection count over unordered arc pairs, with records.

    Crossing points are counted on the cylinder (horizontal wraps
    identified, heights kept); the shared collision point of arcs with
    consecutive indices, taken as the later arc's start, is excluded.
    cell_span only validates: candidate pairs with a larger cell gap
    raise SpanTooSmall.
    """
    if not arcs:
        return 0, []
    ax, ay, bx, by, cells, idx = _arc_arrays(arcs)
    total, (ii, jj, kk), max_gap = count_arrays(ax, ay, bx, by, cells, idx,
                                                want_pairs=True)
    if max_gap > cell_span:
        raise SpanTooSmall(f"cell gap {max_gap} exceeds declared {cell_span}")
    records = [CrossingRecord(int(idx[i]), int(idx[j]), int(k))
               for i, j, k in zip(ii, jj, kk) if i < j]
    return total, records


def nu_from_orbit(orbit, n=None):
    """Crossing total for the first n flights, straight from orbit arrays."""
    n = orbit.n if n is None else n
    total, _, _ = count_arrays(orbit.ax[:n], orbit.ay[:n],
                               orbit.bx[:n], orbit.by[:n],
                               orbit.cells[:n], quotient=False)
    return total


def nu_n_quotient(arcs):
    """Crossing total with both coordinates identified mod 1."""
    if not arcs:
        return 0
    ax, ay, bx, by, cells, idx = _arc_arrays(arcs)
    total, _, _ = count_arrays(ax, ay, bx, by, cells, idx, quotient=True)
    return total


def _pair_points_py(p, q, k_lo, k_hi, skip00, excl_pt, seen):
    """Python twin of the kernel's per-pair translate enumeration."""
    cnt = 0
    m_lo = math.floor(min(p[0], p[2]) - max(q[0], q[2]))
    m_hi = math.ceil(max(p[0], p[2]) - min(q[0], q[2]))
    for m in range(m_lo, m_hi + 1):
        for k in range(k_lo, k_hi + 1):
            if skip00 and m == 0 and k == 0:
                continue
            kind, ix, iy = _intersect_core(
                p[0], p[1], p[2], p[3],
                q[0] + m, q[1] + k, q[2] + m, q[3] + k)
            if kind == 0:
                continue
            if kind == 2:
                raise OverlapDetected("trajectory arcs overlap along a line")
            wx = ix - math.floor(ix)
            if excl_pt is not None:
                dx = abs(wx - excl_pt[0]) % 1.0
                dx = min(dx, 1.0 - dx)
                if dx <= POINT_TOL and abs(iy - excl_pt[1]) <= POINT_TOL:
                    continue
            dup = False
            for ux, uy in seen:
                dx = abs(wx - ux) % 1.0
                dx = min(dx, 1.0 - dx)
                if dx <= POINT_TOL and abs(iy - uy) <= POINT_TOL:
                    dup = True
                    break
            if not dup:
                seen.append((wx, iy))
                cnt += 1
    return cnt


def nu_n_bruteforce(arcs, cell_span):
    """All-pairs reference count with the same conventions as nu_n."""
    n = len(arcs)
    if n > 10 ** 4:
        raise ValueError("brute force is guarded to n <= 10^4")
    coords = [(a.seg.a.x, a.seg.a.y, a.seg.b.x, a.seg.b.y) for a in arcs]
    total = 0
    for i in range(n):
        total += _pair_points_py(coords[i], coords[i], 0, 0, True, None, [])
    for i in range(n):
        pi = coords[i]
        ylo_i = min(pi[1], pi[3])
        yhi_i = max(pi[1], pi[3])
        for j in range(i + 1, n):
            qj = coords[j]
            if min(qj[1], qj[3]) > yhi_i or ylo_i > max(qj[1], qj[3]):
                continue
            gap = abs(arcs[i].start_cell - arcs[j].start_cell)
            if gap > cell_span:
                raise SpanTooSmall(f"cell gap {gap} exceeds declared {cell_span}")
            excl = None
            if arcs[j].index == arcs[i].index + 1:
                excl = (qj[0] - math.floor(qj[0]), qj[1])
            total += _pair_points_py(pi, qj, 0, 0, False, excl, [])
    return total


def _clipped_arrays(arcs, t):
    ax, ay, bx, by, cells = [], [], [], [], []
    for a in arcs:
        if a.t_start >= t - TIME_TOL:
            break
        f = min(1.0, (t - a.t_start) / (a.t_end - a.t_start))
        ex = a.seg.a.x + f * (a.seg.b.x - a.seg.a.x)
        ey = a.seg.a.y + f * (a.seg.b.y - a.seg.a.y)
        if math.hypot(ex - a.seg.a.x, ey - a.seg.a.y) <= TIME_TOL:
            break
        ax.append(a.seg.a.x)
        ay.append(a.seg.a.y)
        bx.append(ex)
        by.append(ey)
        cells.append(a.start_cell)
    return (np.array(ax), np.array(ay), np.array(bx), np.array(by),
            np.array(cells, dtype=np.int64))


def continuous_count(arcs, t):
    """Crossing pairs of the trace up to flow time t (final arc truncated)."""
    if not arcs:
        if t > TIME_TOL:
            raise ValueError("t exceeds the total trajectory time")
        return 0
    if t > arcs[-1].t_end + TIME_TOL:
        raise ValueError("t exceeds the total trajectory time")
    if t <= TIME_TOL:
        return 0
    ax, ay, bx, by, cells = _clipped_arrays(arcs, t)
    if ax.shape[0] == 0:
        return 0
    total, _, _ = count_arrays(ax, ay, bx, by, cells, quotient=False)
    return total


def vk_profile(table, x, n_samples, rng=None, k_cap=64):
    """Monte Carlo multiplicity profile of one arc against invariant samples.

    Estimates, for each k >= 1, the measure of starting points whose first
    flight (in some vertical translate) crosses the arc of x exactly k
    times; horizontal wraps are identified.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    dcx, dcy, dr, cj, cm, ck, clb = table.arrays()
    q = _bil.state_position(table, x)
    v = _bil.state_velocity(table, x)
    tau, j, dm, dk, disc = K.free_flight(
        q.x % 1.0, q.y, v.vx, v.vy, dcx, dcy, dr, cj, cm, ck, clb)
    if j < 0:
        raise _bil.HorizonViolation("reference state has no next collision")
    pax, pay = q.x % 1.0, q.y
    pbx, pby = pax + tau * v.vx, pay + tau * v.vy
    idx, psi, theta = _bil.sample_mu_bar_batch(table, rng, n_samples)
    ytau, yax, yay, ybx, yby, ok, status = K.flights(
        idx, psi, theta, dcx, dcy, dr, cj, cm, ck, clb, table.tau_max)
    if status == K.ERR_NO_HIT:
        raise _bil.HorizonViolation("a sampled flight found no obstacle")
    good = ok == 1
    hist, skipped, status = K.vk_histogram(
        pax, pay, pbx, pby, yax[good], yay[good], ybx[good], yby[good], k_cap)
    _raise_kernel(status)
    n_eff = int(good.sum())
    return {k: float(hist[k]) / n_eff for k in range(1, k_cap) if hist[k] > 0}
