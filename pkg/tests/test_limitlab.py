"""Distribution tooling, constants, and small-scale limit-law plumbing."""

import math

import numpy as np
import pytest

import zxc.limitlab as L
from zxc import _kernels as K
from zxc.limitlab import (BprimeViolation, EmpiricalDistribution,
                          brownian_L2_oracle, estimate_constants, ks_distance,
                          normalized_self_pairs, oracle_sample,
                          return_prob_partial_sums)
from zxc.zext import DoublingToy


def dist(*vals):
    return EmpiricalDistribution.from_samples(np.array(vals, dtype=float))


def test_empirical_distribution_contract():
    with pytest.raises(ValueError, match="sorted"):
        EmpiricalDistribution(np.array([2.0, 1.0]))
    with pytest.raises(ValueError, match="two samples"):
        EmpiricalDistribution(np.array([1.0]))
    d = dist(3.0, 1.0, 2.0)
    assert d.samples.tolist() == [1.0, 2.0, 3.0]
    assert d.n == 3
    assert d.mean == pytest.approx(2.0)
    assert d.scaled(-1.0).samples.tolist() == [-3.0, -2.0, -1.0]


def test_ks_examples():
    assert ks_distance(dist(0, 1, 2), dist(0, 1, 2)) == 0.0
    assert ks_distance(dist(0, 0, 0), dist(1, 1, 1)) == 1.0
    assert ks_distance(dist(0, 1), dist(0.5, 1.5)) == pytest.approx(0.5)


def test_ks_metric_properties(rng):
    for _ in range(50):
        a = dist(*rng.normal(size=40))
        b = dist(*rng.normal(size=25))
        c = dist(*rng.normal(size=30))
        dab = ks_distance(a, b)
        assert dab == ks_distance(b, a)
        assert 0.0 <= dab <= 1.0
        assert dab <= ks_distance(a, c) + ks_distance(c, b) + 1e-12


def test_ks_null_calibration(rng):
    # two same-law samples of 2000 stay below the 5% critical value
    hits = 0
    for _ in range(200):
        a = dist(*rng.normal(size=2000))
        b = dist(*rng.normal(size=2000))
        hits += ks_distance(a, b) < 0.043
    assert hits >= 180


def test_oracle_contracts(rng):
    with pytest.raises(ValueError, match="1e5"):
        brownian_L2_oracle(10 ** 4, 10, 1.0, rng)
    with pytest.raises(ValueError, match="sigma"):
        brownian_L2_oracle(10 ** 5, 10, 0.0, rng)
    assert brownian_L2_oracle(10 ** 5, 2, 1.0, rng).n == 2


def test_oracle_sample_sigma_scaling():
    a = oracle_sample(10 ** 5, 1.0, np.random.default_rng(5))
    b = oracle_sample(10 ** 5, 4.0, np.random.default_rng(5))
    assert b == pytest.approx(0.5 * a, rel=1e-12)
    assert a > 0.0


def test_estimate_constants_identities(table, rng):
    rep = estimate_constants(table, n_pairs=3 * 10 ** 4, n_tau=10 ** 5,
                             rng=rng)
    assert rep.gamma == pytest.approx(2.0 * table.boundary_length)
    assert rep.e_i_kac == pytest.approx(4.0 * rep.gamma * rep.e_tau)
    assert rep.e_i_prime == pytest.approx(
        rep.e_i_kac / (rep.e_tau ** 2 * rep.gamma ** 2))
    # Kac route equals the area form 8 pi A through the mean free path
    assert abs(rep.e_i_kac - 8.0 * math.pi * table.quotient_area) \
        <= 4.0 * 4.0 * rep.gamma * rep.e_tau_stderr
    assert rep.consistent
    assert rep.n_pairs == 3 * 10 ** 4


def test_estimate_constants_contract(table):
    with pytest.raises(ValueError):
        estimate_constants(table, n_pairs=0, n_tau=10)


def test_bprime_violation_propagates(table, rng, monkeypatch):
    def fake(table_, n_pairs, rng_):
        return np.array([1.0, 2.0]), 3, 0

    monkeypatch.setattr(L, "pair_count_samples", fake)
    with pytest.raises(BprimeViolation):
        estimate_constants(table, n_pairs=10, n_tau=10 ** 3, rng=rng)


def test_kernel_flags_vertical_self_translate():
    # an arc spanning more than one vertical period meets its own translate
    # collinearly; the kernel must flag it instead of counting
    x = (np.array([0.3]), np.array([0.0]), np.array([0.3]), np.array([1.2]))
    y = (np.array([0.6]), np.array([0.1]), np.array([0.9]), np.array([0.4]))
    counts, selfbad, status = K.pair_quotient_counts(*x, *y)
    assert int(selfbad[0]) == 1


def test_normalized_self_pairs_matches_brute(rng):
    for _ in range(20):
        n = int(rng.integers(5, 60))
        steps = rng.choice([-1, 1], size=n)
        values = np.concatenate([[0], np.cumsum(steps)])
        v = values[:n]
        brute = sum(int(v[i] == v[j]) for i in range(n)
                    for j in range(i + 1, n))
        assert normalized_self_pairs(values, n) == pytest.approx(
            2.0 * brute / n ** 1.5)


def test_coincidence_pairs_brute(rng):
    v1 = rng.integers(-3, 4, size=40)
    brute = sum(int(v1[i] == v1[j]) for i in range(40) for j in range(i + 1, 40))
    assert L._coincidence_pairs(v1) == brute
    v3 = rng.integers(-2, 3, size=(30, 3))
    brute3 = sum(int(np.array_equal(v3[i], v3[j]))
                 for i in range(30) for j in range(i + 1, 30))
    assert L._coincidence_pairs(v3) == brute3


def test_return_prob_partial_sums_exact():
    g1 = return_prob_partial_sums([2, 4], 1)
    assert g1[2] == pytest.approx(0.5)
    assert g1[4] == pytest.approx(0.875)
    g3 = return_prob_partial_sums([2, 4], 3)
    assert g3[2] == pytest.approx(0.125)
    assert g3[4] == pytest.approx(0.125 + 0.375 ** 3)


def test_return_prob_series_shape():
    g3 = return_prob_partial_sums([10 ** 5, 2 * 10 ** 5], 3)
    assert 0.0 < g3[10 ** 5] < g3[2 * 10 ** 5]
    assert g3[2 * 10 ** 5] - g3[10 ** 5] < 1e-3  # transient: Cauchy tail
    g1 = return_prob_partial_sums([10 ** 4, 4 * 10 ** 4], 1)
    assert g1[4 * 10 ** 4] / g1[10 ** 4] == pytest.approx(2.0, rel=0.03)


def test_thm2_grid():
    assert L.thm2_grid(10 ** 4) == [1000, 3000, 10000]
    assert L.thm2_grid(300) == [200, 300]


def test_strong_contracts(rng):
    toy = DoublingToy(1)
    oracle = brownian_L2_oracle(10 ** 5, 5, 1.0, rng)
    laws = L.toy_laws()
    with pytest.raises(ValueError, match="three"):
        L.strong_convergence_check(toy, normalized_self_pairs, laws[:2],
                                   oracle, n=100, n_starts=5, rng=rng)
    bad = laws[:2] + [L.InitialLaw("atom", absolutely_continuous=False)]
    with pytest.raises(ValueError, match="absolutely continuous"):
        L.strong_convergence_check(toy, normalized_self_pairs, bad,
                                   oracle, n=100, n_starts=5, rng=rng)


def test_law_factories(table, rng):
    names = [law.name for law in L.toy_laws()]
    assert len(names) == len(set(names)) == 3
    for law in L.billiard_laws(table):
        x = law.sampler(rng)
        assert -0.5 * math.pi < x.theta < 0.5 * math.pi
    assert L.billiard_laws(table)[1].sampler(rng).disk_id == table.disks[0].id


def test_toy_theorem_small(rng):
    toy = DoublingToy(1)
    oracle = brownian_L2_oracle(10 ** 5, 400, 1.0, rng)
    rep = L.toy_theorem_check(toy, [400, 1600], 400, oracle, rng=rng)
    assert rep.n_grid == (400, 1600)
    assert rep.statistic == "sumN^2/n^1.5"
    assert all(0.0 <= v <= 1.0 for v in rep.ks_by_n.values())
    assert rep.mean_ratio == pytest.approx(1.0, abs=0.25)


def test_theorem1_sandwich_exact(table, rng):
    oracle = brownian_L2_oracle(10 ** 5, 50, 1.0, rng)
    rep = L.theorem1_check(table, 300.0, 12, oracle, rng=rng)
    assert rep.sandwich_ok
    assert rep.n_sandwich_failures == 0
    assert rep.t_over_nt == pytest.approx(rep.e_tau, rel=0.05)
    assert rep.sigma_tilde == pytest.approx(rep.sigma_hat / rep.e_tau)


def test_appendix_a_small(rng):
    rep = L.appendixA_check(DoublingToy(3), [2 * 10 ** 4, 4 * 10 ** 4], 40,
                            rng=rng)
    assert rep.transient_ok
    assert rep.mean_rate_by_t[4 * 10 ** 4] > 0.0
    assert rep.per_orbit_last.shape == (40,)
    ctrl = L.appendixA_check(DoublingToy(1), [2 * 10 ** 4, 4 * 10 ** 4], 25,
                             rng=rng)
    assert not ctrl.converged
    assert not ctrl.transient_ok


def test_appendix_b_small(table, rng):
    rep = L.appendixB_check(table, [600, 1200], 8, rng=rng,
                            n_pairs=3 * 10 ** 4)
    assert rep.dominates_cylinder
    assert rep.e_bar_direct > 0.0
    assert all(np.all(v > 0.0) for v in rep.stat_by_n.values())
    assert rep.per_orbit_gaps.shape == (8,)


def test_localtime_props_small(rng):
    rep = L.localtime_props_check(DoublingToy(1), [2000, 8000], 80, rng=rng)
    assert rep.n_grid == (2000, 8000)
    assert rep.decay_decreasing
    assert rep.sup_by_n and all(v > 0.0 for v in rep.sup_by_n.values())
    assert rep.modulus_ratio >= 1.0
    with pytest.raises(ValueError, match="scalar"):
        L.localtime_props_check(DoublingToy(3), [100, 200], 5, rng=rng)


def test_report_to_dict_plain(rng):
    oracle = brownian_L2_oracle(10 ** 5, 4, 1.0, rng)
    d = L.toy_theorem_check(DoublingToy(1), [300], 40, oracle,
                            rng=rng).to_dict()
    assert isinstance(d["ks_by_n"], dict)
    assert isinstance(d["mean_stat"], float)
