"""Crossing counts: hashed kernel vs brute force, clipping, quotients."""

import numpy as np
import pytest

import zxc
from zxc.geometry import OverlapDetected, Point2, Segment
from zxc.selfcross import (CrossingRecord, SpanTooSmall, TrajectoryArc,
                           arcs_from_orbit, continuous_count, nu_from_orbit,
                           nu_n, nu_n_bruteforce, nu_n_quotient, vk_profile)


def make_arcs(rows):
    t = 0.0
    out = []
    for i, (ax, ay, bx, by, cell) in enumerate(rows):
        seg = Segment(Point2(ax, ay), Point2(bx, by))
        out.append(TrajectoryArc(seg=seg, start_cell=cell, end_cell=cell,
                                 t_start=t, t_end=t + seg.length, index=i))
        t += seg.length
    return out


SPACER = (0.05, 3.0, 0.10, 3.1, 0)


def test_crossing_record_contract():
    with pytest.raises(ValueError):
        CrossingRecord(2, 1, 1)
    with pytest.raises(ValueError):
        CrossingRecord(0, 1, 0)


def test_arc_duration_contract():
    seg = Segment(Point2(0, 0), Point2(1, 0))
    with pytest.raises(ValueError, match="unit speed"):
        TrajectoryArc(seg=seg, start_cell=0, end_cell=0,
                      t_start=0.0, t_end=2.0, index=0)


def test_x_pair_nonconsecutive():
    arcs = make_arcs([(0.1, 0.1, 0.9, 0.9, 0), SPACER,
                      (0.1, 0.9, 0.9, 0.1, 0)])
    total, records = nu_n(arcs, 0)
    assert total == 1
    assert records == [CrossingRecord(0, 2, 1)]
    assert nu_n_bruteforce(arcs, 0) == 1


def test_consecutive_shared_endpoint_excluded():
    arcs = make_arcs([(0.1, 0.1, 0.9, 0.9, 0), (0.9, 0.9, 0.1, 0.85, 0)])
    total, records = nu_n(arcs, 0)
    assert (total, records) == (0, [])
    assert nu_n_bruteforce(arcs, 0) == 0


def test_consecutive_interior_crossing_counts():
    arcs = make_arcs([(0.1, 0.1, 0.9, 0.9, 0), (0.9, 0.2, 0.1, 0.8, 0)])
    total, records = nu_n(arcs, 0)
    assert total == 1
    assert records == [CrossingRecord(0, 1, 1)]
    assert nu_n_bruteforce(arcs, 0) == 1


def test_translation_invariance():
    base = [(0.1, 0.1, 0.9, 0.9, 0), SPACER, (0.1, 0.9, 0.9, 0.1, 0)]
    for dm, dk in ((2, 0), (0, 5), (-1, -3)):
        rows = [(ax + dm, ay + dk, bx + dm, by + dk, c)
                for ax, ay, bx, by, c in base]
        total, _ = nu_n(make_arcs(rows), 0)
        assert total == 1


def test_empty_and_single():
    assert nu_n([], 0) == (0, [])
    one = make_arcs([(0.1, 0.1, 0.9, 0.9, 0)])
    assert nu_n(one, 0) == (0, [])
    assert nu_n_bruteforce(one, 0) == 0
    assert nu_n_bruteforce([], 0) == 0


def test_identical_arcs_overlap():
    arcs = make_arcs([(0.1, 0.1, 0.9, 0.9, 0), SPACER,
                      (0.1, 0.1, 0.9, 0.9, 0)])
    with pytest.raises(OverlapDetected):
        nu_n(arcs, 0)
    with pytest.raises(OverlapDetected):
        nu_n_bruteforce(arcs, 0)


def test_wraparound_crossing():
    arcs = make_arcs([(0.9, 0.1, 1.4, 0.6, 0), SPACER,
                      (0.2, 0.55, 0.45, 0.15, 0)])
    total, _ = nu_n(arcs, 0)
    assert total == 1
    assert nu_n_bruteforce(arcs, 0) == 1


def test_span_gate():
    rows = [(0.1, 0.1, 0.9, 0.9, 0), (0.1, 0.9, 0.9, 0.1, 5)]
    with pytest.raises(SpanTooSmall):
        nu_n(make_arcs(rows), 3)
    with pytest.raises(SpanTooSmall):
        nu_n_bruteforce(make_arcs(rows), 3)
    total, _ = nu_n(make_arcs(rows), 5)
    assert total == 1


def orbit_arcs(table, rng, n):
    while True:
        x0 = zxc.billiard.sample_mu_bar(table, rng)
        try:
            orb = zxc.run_orbit(table, x0, n)
        except zxc.TangentialHit:
            continue
        return orb, arcs_from_orbit(orb)


def test_arcs_from_orbit_bookkeeping(table, rng):
    orb, arcs = orbit_arcs(table, rng, 40)
    assert len(arcs) == 40
    t = 0.0
    for i, a in enumerate(arcs):
        assert a.index == i
        assert a.start_cell == orb.cells[i]
        assert a.end_cell == orb.cells[i + 1]
        assert a.t_start == pytest.approx(t, abs=1e-9)
        assert a.seg.length == pytest.approx(orb.tau[i], abs=1e-9)
        t += float(orb.tau[i])


def test_hashed_matches_bruteforce_on_orbits(table, rng):
    for _ in range(10):
        orb, arcs = orbit_arcs(table, rng, 120)
        span = int(np.ptp(orb.cells)) + 1
        total, records = nu_n(arcs, span)
        assert total == nu_n_bruteforce(arcs, span)
        assert total == nu_from_orbit(orb)
        assert total == sum(r.k for r in records)


def test_bruteforce_guard():
    seg = Segment(Point2(0, 0), Point2(1, 0))
    arc = TrajectoryArc(seg=seg, start_cell=0, end_cell=0,
                        t_start=0.0, t_end=1.0, index=0)
    with pytest.raises(ValueError, match="guarded"):
        nu_n_bruteforce([arc] * (10 ** 4 + 1), 0)


def test_continuous_count_clock(table, rng):
    orb, arcs = orbit_arcs(table, rng, 150)
    assert continuous_count(arcs, 0.0) == 0
    total_time = arcs[-1].t_end
    grid = np.linspace(0.0, total_time, 12)
    counts = [continuous_count(arcs, t) for t in grid]
    assert all(b >= a for a, b in zip(counts, counts[1:]))
    assert counts[-1] == nu_from_orbit(orb)
    with pytest.raises(ValueError, match="exceeds"):
        continuous_count(arcs, total_time + 1.0)


def test_continuous_count_truncation_matches_brute(table, rng):
    orb, arcs = orbit_arcs(table, rng, 80)
    t = 0.5 * (arcs[40].t_start + arcs[40].t_end)
    clipped = []
    for a in arcs:
        if a.t_start >= t:
            break
        if a.t_end <= t:
            clipped.append(a)
        else:
            f = (t - a.t_start) / (a.t_end - a.t_start)
            seg = Segment(a.seg.a, Point2(
                a.seg.a.x + f * (a.seg.b.x - a.seg.a.x),
                a.seg.a.y + f * (a.seg.b.y - a.seg.a.y)))
            clipped.append(TrajectoryArc(
                seg=seg, start_cell=a.start_cell, end_cell=a.end_cell,
                t_start=a.t_start, t_end=t, index=a.index))
    span = int(np.ptp(orb.cells)) + 1
    assert continuous_count(arcs, t) == nu_n_bruteforce(clipped, span)


def test_quotient_dominates_cylinder(table, rng):
    _, arcs = orbit_arcs(table, rng, 200)
    total, _ = nu_n(arcs, int(np.ptp([a.start_cell for a in arcs])) + 1)
    assert nu_n_quotient(arcs) >= total
    assert nu_n_quotient([]) == 0


def test_vk_profile_is_subprobability(table, rng):
    x = zxc.billiard.sample_mu_bar(table, rng)
    prof = vk_profile(table, x, 3000, rng=rng)
    assert prof
    assert all(k >= 1 for k in prof)
    assert all(v > 0.0 for v in prof.values())
    assert sum(prof.values()) <= 1.0 + 1e-12
