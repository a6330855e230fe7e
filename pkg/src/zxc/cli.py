"""Command-line laboratory: configured runs with reproducible artifacts."""

import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import click
import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import __version__
from . import billiard as _bil
from . import limitlab as L
from . import zext as _zx
from .geometry import Point2
from .seeding import derive_seed

SYSTEMS = ("billiard", "toy1d", "toy3d", "quotient-billiard")
INITIAL_LAWS = ("invariant",)
BILLIARD_SYSTEMS = ("billiard", "quotient-billiard")

# disjoint stream-id blocks, one per role, so no unit ever shares a seed
ROLE_MAIN = 0
ROLE_ORACLE = 1 << 20
ROLE_START = 2 << 20
ROLE_AUX = 3 << 20

ORACLE_M = 10 ** 5
DEGENERATE_FLAG_RATE = 1e-6


class ConfigError(Exception):
    """Configuration that fails to parse or validate."""


@dataclass(frozen=True)
class RunConfig:
    """Validated run parameters for one subcommand invocation."""

    system: str
    seed: int
    n_grid: tuple
    t_grid: tuple
    n_starts: int
    reps: int
    sigma: float
    initial_law: str
    output_dir: str
    disks: tuple
    tau_max: float
    n_pairs: int
    n_tau: int


_TOP_KEYS = {"system", "seed", "n_grid", "t_grid", "n_starts", "reps",
             "sigma", "initial_law", "output_dir", "n_pairs", "n_tau",
             "table"}
_TABLE_KEYS = {"disks", "tau_max"}


def _as_int(raw, key):
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(f"{key} must be an integer, got {raw!r}")
    if isinstance(raw, float):
        if not raw.is_integer():
            raise ConfigError(f"{key} must be an integer, got {raw!r}")
        raw = int(raw)
    return int(raw)


def _grid_of_ints(raw, key):
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{key} must be a non-empty list")
    vals = [_as_int(v, key) for v in raw]
    if any(v <= 0 for v in vals):
        raise ConfigError(f"{key} entries must be positive")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ConfigError(f"{key} must be strictly increasing")
    return tuple(vals)


def _parse_table(raw):
    if not isinstance(raw, dict):
        raise ConfigError("table must be a section")
    unknown = set(raw) - _TABLE_KEYS
    if unknown:
        raise ConfigError(f"unknown table keys: {sorted(unknown)}")
    rows = raw.get("disks")
    if not isinstance(rows, list) or not rows:
        raise ConfigError("table.disks must be a non-empty list")
    disks = []
    for i, row in enumerate(rows):
        if (not isinstance(row, list) or len(row) != 3
                or any(isinstance(v, bool) or not isinstance(v, (int, float))
                       for v in row)):
            raise ConfigError(f"disk {i}: expected [cx, cy, r] numbers")
        disks.append(tuple(float(v) for v in row))
    tau_max = raw.get("tau_max")
    if isinstance(tau_max, bool) or not isinstance(tau_max, (int, float)):
        raise ConfigError("table.tau_max must be a number")
    return tuple(disks), float(tau_max)


def load_config(path, seed_flag=None, out_flag=None):
    """Parse and validate a run configuration from a structured text file."""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"config does not parse: {e}")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    system = raw.get("system")
    if system not in SYSTEMS:
        raise ConfigError(f"system must be one of {SYSTEMS}, got {system!r}")
    seed = seed_flag if seed_flag is not None else raw.get("seed")
    if seed is None:
        raise ConfigError("seed is required: runs are reproducible "
                          "by construction, there is no entropy default")
    seed = _as_int(seed, "seed")
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must fit in 64 bits")
    n_grid = _grid_of_ints(raw["n_grid"], "n_grid") if "n_grid" in raw else ()
    t_grid = _grid_of_ints(raw["t_grid"], "t_grid") if "t_grid" in raw else ()
    n_starts = _as_int(raw.get("n_starts", 100), "n_starts")
    if n_starts < 2:
        raise ConfigError("n_starts must be at least 2")
    reps = _as_int(raw.get("reps", 2000), "reps")
    if reps < 2:
        raise ConfigError("reps must be at least 2")
    sigma = raw.get("sigma", 1.0)
    if isinstance(sigma, bool) or not isinstance(sigma, (int, float)) \
            or not sigma > 0:
        raise ConfigError("sigma must be a positive number")
    law = raw.get("initial_law", "invariant")
    if law not in INITIAL_LAWS:
        raise ConfigError(f"initial_law must be one of {INITIAL_LAWS}; "
                          "comparison runs draw their own start laws")
    out_dir = out_flag if out_flag is not None else raw.get("output_dir",
                                                            "zxc-out")
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError("output_dir must be a non-empty path")
    n_pairs = _as_int(raw.get("n_pairs", 10 ** 5), "n_pairs")
    n_tau = _as_int(raw.get("n_tau", 2 * 10 ** 5), "n_tau")
    if n_pairs <= 0 or n_tau <= 0:
        raise ConfigError("n_pairs and n_tau must be positive")
    disks, tau_max = ((), 0.0)
    if system in BILLIARD_SYSTEMS:
        if "table" not in raw:
            raise ConfigError(f"system {system!r} needs a [table] section")
        disks, tau_max = _parse_table(raw["table"])
    return RunConfig(system=system, seed=seed, n_grid=n_grid, t_grid=t_grid,
                     n_starts=n_starts, reps=reps, sigma=float(sigma),
                     initial_law=law, output_dir=out_dir, disks=disks,
                     tau_max=tau_max, n_pairs=n_pairs, n_tau=n_tau)


def build_table(cfg):
    """Construct the obstacle table, naming the offending disk on failure."""
    disks = []
    for i, (cx, cy, r) in enumerate(cfg.disks):
        try:
            disks.append(_bil.Disk(Point2(cx, cy % 1.0), r, i))
        except ValueError as e:
            raise ConfigError(f"disk {i}: {e}")
    try:
        return _bil.BilliardTable(disks=disks, tau_max=cfg.tau_max)
    except ValueError as e:
        raise ConfigError(f"table: {e}")


def _checked_table(cfg):
    table = build_table(cfg)
    try:
        _bil.validate_table(table)
    except (_bil.OverlappingObstacles, _bil.HorizonViolation) as e:
        raise ConfigError(f"table fails validation: {e}")
    return table


def _workers_from(flag):
    if flag is not None:
        if flag < 1:
            raise ConfigError("workers must be at least 1")
        return flag
    env = os.environ.get("ZXC_WORKERS", "").strip()
    if env:
        try:
            w = int(env)
        except ValueError:
            raise ConfigError(f"ZXC_WORKERS must be an integer, got {env!r}")
        if w < 1:
            raise ConfigError("ZXC_WORKERS must be at least 1")
        return w
    return os.cpu_count() or 1


def _pmap(fn, args, workers):
    """Order-preserving map over share-nothing units."""
    if workers <= 1:
        return [fn(a) for a in args]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, args))


def _streams(master, role, count):
    return [derive_seed(master, role + i) for i in range(count)]


def _rng(seed):
    return np.random.default_rng(seed)


def _merge_counts(dicts):
    out = {}
    for d in dicts:
        for k, v in d.items():
            out[k] = out.get(k, 0) + v
    return out


def _oracle(master, reps, sigma, workers):
    """Reference distribution built from one stream per repetition."""
    seeds = _streams(master, ROLE_ORACLE, reps)
    vals = _pmap(lambda s: L.oracle_sample(ORACLE_M, sigma, _rng(s)),
                 seeds, workers)
    return L.EmpiricalDistribution.from_samples(np.array(vals)), seeds


def _require(cfg, *allowed):
    if cfg.system not in allowed:
        raise ConfigError(f"this subcommand needs system in {allowed}, "
                          f"got {cfg.system!r}")


def _need_grid(cfg, which, min_len=1):
    grid = getattr(cfg, which)
    if len(grid) < min_len:
        raise ConfigError(f"{which} with at least {min_len} "
                          f"entr{'y' if min_len == 1 else 'ies'} is required")
    return grid


def _report_dict(rep):
    if isinstance(rep, dict):
        d = dict(rep)
    elif hasattr(rep, "to_dict"):
        d = rep.to_dict()
    else:
        d = asdict(rep)
    for k in ("samples_by_n", "samples", "samples_by_law"):
        d.pop(k, None)
    return d


def _fmt_n(v):
    f = float(v)
    return str(int(f)) if f.is_integer() else repr(f)


def _fmt_v(v):
    return repr(float(v))


def _run_validate_table(cfg, workers):
    """Check the obstacle table: disjoint copies and a confirmed flight bound."""
    _require(cfg, *BILLIARD_SYSTEMS)
    table = build_table(cfg)
    summary = {"disks": [list(d) for d in cfg.disks], "tau_max": cfg.tau_max,
               "quotient_area": table.quotient_area,
               "boundary_length": table.boundary_length,
               "phi_bound": table.phi_bound}
    try:
        rep = _bil.validate_table(table)
    except (_bil.OverlappingObstacles, _bil.HorizonViolation) as e:
        return {"report": {**summary, "error": str(e)},
                "assertions": {"table_ok": False},
                "rows": [], "stream_seeds": {}, "degenerate": {},
                "total_events": 0}
    rows = [("max_flight_observed", rep.n_rays, cfg.seed, rep.max_flight),
            ("min_clearance", rep.n_rays, cfg.seed, rep.min_clearance)]
    return {"report": {**summary, **asdict(rep)},
            "assertions": {"table_ok": True},
            "rows": rows, "stream_seeds": {}, "degenerate": {},
            "total_events": rep.n_rays}


def _run_constants(cfg, workers):
    """Estimate the intersection constants two independent ways."""
    _require(cfg, *BILLIARD_SYSTEMS)
    table = _checked_table(cfg)
    seed = derive_seed(cfg.seed, ROLE_MAIN)
    rep = L.estimate_constants(table, cfg.n_pairs, cfg.n_tau, rng=_rng(seed))
    rows = [("gamma", 0, seed, rep.gamma),
            ("e_tau", cfg.n_tau, seed, rep.e_tau),
            ("e_tau_stderr", cfg.n_tau, seed, rep.e_tau_stderr),
            ("e_i_direct", cfg.n_pairs, seed, rep.e_i_direct),
            ("e_i_direct_stderr", cfg.n_pairs, seed, rep.e_i_direct_stderr),
            ("e_i_kac", cfg.n_tau, seed, rep.e_i_kac),
            ("e_i_prime", cfg.n_tau, seed, rep.e_i_prime)]
    return {"report": rep, "assertions": {"e_i_consistent": rep.consistent},
            "rows": rows, "stream_seeds": {"main": [seed]},
            "degenerate": {"resampled_flights": rep.n_degenerate},
            "total_events": 2 * cfg.n_pairs + cfg.n_tau}


def _run_oracle(cfg, workers):
    """Sample the squared-local-time functional of the reference walk."""
    grid = cfg.n_grid or (ORACLE_M,)
    m = grid[-1]
    if m < ORACLE_M:
        raise ConfigError(f"oracle resolution n_grid[-1] must be >= {ORACLE_M}")
    seeds = _streams(cfg.seed, ROLE_ORACLE, cfg.reps)
    vals = _pmap(lambda s: L.oracle_sample(m, cfg.sigma, _rng(s)),
                 seeds, workers)
    dist = L.EmpiricalDistribution.from_samples(np.array(vals))
    limit_mean = 8.0 / (3.0 * math.sqrt(2.0 * math.pi))
    report = {"m": m, "reps": cfg.reps, "sigma": cfg.sigma,
              "mean": dist.mean, "limit_mean": limit_mean,
              "mean_abs_dev": abs(dist.mean - limit_mean)}
    rows = [("L2_local_time", m, s, v) for s, v in zip(seeds, vals)]
    return {"report": report, "assertions": {},
            "rows": rows, "stream_seeds": {"oracle": seeds},
            "degenerate": {}, "total_events": cfg.reps * m}


def _run_thm2(cfg, workers):
    """Distribution check of the collision-indexed crossing count."""
    _require(cfg, "billiard", "toy1d")
    grid = _need_grid(cfg, "n_grid")
    oracle, oracle_seeds = _oracle(cfg.seed, cfg.reps, 1.0, workers)
    seeds = _streams(cfg.seed, ROLE_START, cfg.n_starts)
    if cfg.system == "toy1d":
        toy = _zx.DoublingToy(1)
        res = _pmap(lambda s: L.toy_L2_start(toy, grid, _rng(s)),
                    seeds, workers)
        dists = {n: L.EmpiricalDistribution.from_samples(
            np.array([row[j] for row in res]))
            for j, n in enumerate(grid)}
        rep = L.toy_theorem_assemble(dists, oracle)
        stats = {n: d.samples for n, d in dists.items()}
        degenerate = {}
        total = cfg.n_starts * grid[-1]
    else:
        table = _checked_table(cfg)
        main_seed = derive_seed(cfg.seed, ROLE_MAIN)
        constants = L.estimate_constants(table, cfg.n_pairs, cfg.n_tau,
                                         rng=_rng(main_seed))
        if len(grid) == 1:
            grid = tuple(L.thm2_grid(grid[-1]))

        def unit(s):
            counters = {}
            row, e2 = L.thm2_start(table, grid, _rng(s), counters)
            return row, e2, counters

        res = _pmap(unit, seeds, workers)
        stats = {n: np.array([r[0][j] for r in res])
                 for j, n in enumerate(grid)}
        endsq = np.array([r[1] for r in res])
        degenerate = _merge_counts([r[2] for r in res])
        degenerate["resampled_flights"] = constants.n_degenerate
        rep = L.thm2_assemble(constants, list(grid), stats, endsq,
                              degenerate, oracle)
        total = cfg.n_starts * grid[-1] + 2 * cfg.n_pairs + cfg.n_tau
    rows = [(rep.statistic, n, seeds[i], stats[n][i])
            for n in grid for i in range(cfg.n_starts)]
    assertions = {"monotone_trend": rep.decreasing}
    if cfg.system == "billiard":
        assertions["moments_ok"] = rep.moments_ok
        seeds_used = {"main": [main_seed], "oracle": oracle_seeds,
                      "start": seeds}
    else:
        seeds_used = {"oracle": oracle_seeds, "start": seeds}
    extra = {"monotone_trend": rep.decreasing,
             "ks_distance": {str(n): rep.ks_by_n[n] for n in grid}}
    return {"report": rep, "assertions": assertions, "rows": rows,
            "stream_seeds": seeds_used, "degenerate": degenerate,
            "total_events": total, "extra": extra}


def _run_thm1(cfg, workers):
    """Distribution and sandwich check of the flow-time crossing count."""
    _require(cfg, "billiard")
    t = float(_need_grid(cfg, "t_grid")[-1])
    table = _checked_table(cfg)
    main_seed = derive_seed(cfg.seed, ROLE_MAIN)
    constants = L.estimate_constants(table, cfg.n_pairs, cfg.n_tau,
                                     rng=_rng(main_seed))
    oracle, oracle_seeds = _oracle(cfg.seed, cfg.reps, 1.0, workers)
    seeds = _streams(cfg.seed, ROLE_START, cfg.n_starts)

    def unit(s):
        counters = {}
        out = L.thm1_start(table, t, constants.e_tau, _rng(s), counters)
        return out, counters

    res = _pmap(unit, seeds, workers)
    stat = np.array([r[0][0] for r in res])
    ratio_disc = np.array([r[0][1] for r in res])
    t_over = np.array([r[0][2] for r in res])
    endsq = np.array([r[0][3] for r in res])
    failures = sum(int(r[0][4]) for r in res)
    degenerate = _merge_counts([r[1] for r in res])
    degenerate["resampled_flights"] = constants.n_degenerate
    rep = L.thm1_assemble(constants, t, stat, ratio_disc, t_over, endsq,
                          failures, degenerate, oracle)
    rows = [(rep.statistic, t, seeds[i], stat[i])
            for i in range(cfg.n_starts)]
    return {"report": rep,
            "assertions": {"sandwich_ok": rep.sandwich_ok,
                           "t_over_nt_ok": rep.t_over_nt_ok,
                           "ratio_ok": rep.ratio_ok},
            "rows": rows,
            "stream_seeds": {"main": [main_seed], "oracle": oracle_seeds,
                             "start": seeds},
            "degenerate": degenerate,
            "total_events": cfg.n_starts * int(1.1 * t / constants.e_tau
                                               + 100)
            + 2 * cfg.n_pairs + cfg.n_tau}


def _run_strong(cfg, workers):
    """Compare the crossing statistic's law across initial distributions."""
    _require(cfg, "billiard", "toy1d")
    n = _need_grid(cfg, "n_grid")[-1]
    if cfg.system == "toy1d":
        sysobj = _zx.DoublingToy(1)
        laws = L.toy_laws()
    else:
        table = _checked_table(cfg)
        sysobj = _zx.BilliardSystem(table)
        laws = L.billiard_laws(table)
    oracle, oracle_seeds = _oracle(cfg.seed, cfg.reps, 1.0, workers)
    all_seeds = {}
    dists = {}
    rows = []
    for k, law in enumerate(laws):
        seeds = _streams(cfg.seed, ROLE_START + k * cfg.n_starts,
                         cfg.n_starts)
        vals = _pmap(lambda s: L.strong_start(
            sysobj, L.normalized_self_pairs, law, n, _rng(s)),
            seeds, workers)
        dists[law.name] = L.EmpiricalDistribution.from_samples(np.array(vals))
        all_seeds[f"start_{law.name}"] = seeds
        rows.extend((f"self_pairs_{law.name}", n, s, v)
                    for s, v in zip(seeds, vals))
    rep = L.strong_assemble([law.name for law in laws], dists, oracle, n)
    all_seeds["oracle"] = oracle_seeds
    return {"report": rep, "assertions": {"pairwise_ok": rep.pairwise_ok},
            "rows": rows, "stream_seeds": all_seeds, "degenerate": {},
            "total_events": len(laws) * cfg.n_starts * n}


def _run_appendixA(cfg, workers):
    """Pace check of coincidence pairs for the lattice extension."""
    _require(cfg, "toy3d", "toy1d")
    t_grid = _need_grid(cfg, "t_grid", min_len=2)
    toy = _zx.DoublingToy(3 if cfg.system == "toy3d" else 1)
    seeds = _streams(cfg.seed, ROLE_START, cfg.n_starts)
    res = _pmap(lambda s: L.appa_orbit(toy, t_grid, _rng(s)), seeds, workers)
    rates = {t: np.array([row[j] for row in res])
             for j, t in enumerate(t_grid)}
    rep = L.appa_assemble(toy.dimension, rates)
    rows = [("nu_t/t", t, seeds[i], rates[t][i])
            for t in t_grid for i in range(cfg.n_starts)]
    return {"report": rep,
            "assertions": {"converged": rep.converged,
                           "transient_ok": rep.transient_ok,
                           "match_direct": rep.match_direct},
            "rows": rows, "stream_seeds": {"start": seeds},
            "degenerate": {}, "total_events": cfg.n_starts * t_grid[-1]}


def _run_appendixB(cfg, workers):
    """Quadratic crossing pace on the torus-projected billiard."""
    _require(cfg, "quotient-billiard")
    n_grid = _need_grid(cfg, "n_grid", min_len=2)
    table = _checked_table(cfg)
    seeds = _streams(cfg.seed, ROLE_START, cfg.n_starts)

    def unit(s):
        counters = {}
        row, dom = L.appb_orbit(table, n_grid, _rng(s), counters)
        return row, dom, counters

    res = _pmap(unit, seeds, workers)
    stat = {n: np.array([r[0][j] for r in res])
            for j, n in enumerate(n_grid)}
    dominates = all(r[1] for r in res)
    degenerate = _merge_counts([r[2] for r in res])
    aux_seed = derive_seed(cfg.seed, ROLE_AUX)
    counts, n_selfbad, dropped = L.pair_count_samples(table, cfg.n_pairs,
                                                      _rng(aux_seed))
    degenerate["resampled_flights"] = dropped
    degenerate["self_overlap_pairs"] = n_selfbad
    rep = L.appb_assemble(stat, dominates, counts, degenerate)
    rows = [("2*nu_bar/n^2", n, seeds[i], stat[n][i])
            for n in n_grid for i in range(cfg.n_starts)]
    return {"report": rep,
            "assertions": {"converged": rep.converged,
                           "match_direct": rep.match_direct,
                           "dominates_cylinder": rep.dominates_cylinder},
            "rows": rows,
            "stream_seeds": {"start": seeds, "aux": [aux_seed]},
            "degenerate": degenerate,
            "total_events": cfg.n_starts * n_grid[-1] + 2 * cfg.n_pairs}


def _run_llt(cfg, workers):
    """Compare the endpoint mass function to its Gaussian prediction."""
    _require(cfg, "toy1d", "billiard")
    n = _need_grid(cfg, "n_grid")[-1]
    if cfg.system == "billiard":
        sysobj = _zx.BilliardSystem(_checked_table(cfg))
    else:
        sysobj = _zx.DoublingToy(1)
    seed = derive_seed(cfg.seed, ROLE_MAIN)
    rep = _zx.llt_check(sysobj, n, cfg.n_starts, rng=_rng(seed))
    rows = []
    for lv, emp, pred in zip(rep.levels, rep.empirical, rep.predicted):
        rows.append(("endpoint_mass_empirical", lv, seed, emp))
        rows.append(("endpoint_mass_predicted", lv, seed, pred))
    return {"report": rep,
            "assertions": {"llt_ok": rep.max_rel_dev <= 0.07},
            "rows": rows, "stream_seeds": {"main": [seed]},
            "degenerate": {}, "total_events": cfg.n_starts * n}


def _run_localtime_props(cfg, workers):
    """Moment probes of the rescaled local time of the scalar toy walk."""
    _require(cfg, "toy1d")
    n_grid = _need_grid(cfg, "n_grid", min_len=2)
    seed = derive_seed(cfg.seed, ROLE_MAIN)
    rep = L.localtime_props_check(_zx.DoublingToy(1), n_grid, cfg.n_starts,
                                  rng=_rng(seed))
    rows = []
    rows.extend(("adjacent_defect", n, seed, v)
                for n, v in rep.decay_by_n.items())
    rows.extend(("continuity_modulus", n, seed, v)
                for n, v in rep.modulus_by_n.items())
    rows.extend(("rescaled_sup", n, seed, v) for n, v in rep.sup_by_n.items())
    return {"report": rep,
            "assertions": {
                "decay_decreasing": rep.decay_decreasing,
                "modulus_stable": rep.modulus_stable,
                "sup_stable": rep.sup_stable,
                "rw2_integrand_decreasing": rep.rw2_integrand_decreasing},
            "rows": rows, "stream_seeds": {"main": [seed]},
            "degenerate": {},
            "total_events": cfg.n_starts * sum(n_grid)}


_BODIES = {
    "validate-table": _run_validate_table,
    "constants": _run_constants,
    "oracle": _run_oracle,
    "thm2": _run_thm2,
    "thm1": _run_thm1,
    "strong": _run_strong,
    "appendixA": _run_appendixA,
    "appendixB": _run_appendixB,
    "llt": _run_llt,
    "localtime-props": _run_localtime_props,
}


def _write_json(path, doc):
    with open(path, "w", newline="\n") as fh:
        json.dump(L._plain(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_artifacts(name, cfg, workers, out, wall):
    outdir = cfg.output_dir
    degenerate = out.get("degenerate", {})
    total = int(out.get("total_events", 0))
    bad = int(sum(degenerate.values()))
    rate = bad / total if total > 0 else 0.0
    manifest = {
        "subcommand": name,
        "version": __version__,
        "config": asdict(cfg),
        "master_seed": cfg.seed,
        "seed_rule": "derive_seed(master, role_base + unit_index)",
        "stream_seeds": out.get("stream_seeds", {}),
        "workers": workers,
        "wall_clock_s": wall,
        "degenerate_events": degenerate,
        "total_events": total,
        "degenerate_rate": rate,
        "degenerate_flagged": rate >= DEGENERATE_FLAG_RATE,
    }
    _write_json(os.path.join(outdir, "manifest.json"), manifest)
    report_doc = {"subcommand": name,
                  "assertions": out["assertions"],
                  "report": _report_dict(out["report"])}
    report_doc.update(out.get("extra", {}))
    _write_json(os.path.join(outdir, "report.json"), report_doc)
    with open(os.path.join(outdir, "samples.csv"), "w", newline="\n") as fh:
        fh.write("statistic,n,seed,value\n")
        for stat, n, seed, val in out["rows"]:
            fh.write(f"{stat},{_fmt_n(n)},{int(seed)},{_fmt_v(val)}\n")


def _fail_record(name, kind, detail):
    return {"subcommand": name, "error": kind, "detail": detail}


def _execute(name, config_path, seed, workers_flag, out_dir):
    body = _BODIES[name]
    try:
        cfg = load_config(config_path, seed_flag=seed, out_flag=out_dir)
        workers = _workers_from(workers_flag)
    except ConfigError as e:
        sys.stderr.write(json.dumps(_fail_record(name, "config", str(e)))
                         + "\n")
        return 2
    os.makedirs(cfg.output_dir, exist_ok=True)
    marker = os.path.join(cfg.output_dir, "failed")
    t0 = time.monotonic()
    try:
        out = body(cfg, workers)
    except ConfigError as e:
        sys.stderr.write(json.dumps(_fail_record(name, "config", str(e)))
                         + "\n")
        return 2
    except Exception as e:
        record = _fail_record(name, type(e).__name__, str(e))
        _write_json(marker, record)
        sys.stderr.write(json.dumps(record) + "\n")
        return 1
    wall = time.monotonic() - t0
    _write_artifacts(name, cfg, workers, out, wall)
    failed = sorted(k for k, v in out["assertions"].items() if not v)
    if failed:
        _write_json(marker, {"subcommand": name,
                             "failed_assertions": failed})
        sys.stderr.write(json.dumps({"subcommand": name,
                                     "failed_assertions": failed}) + "\n")
        return 1
    if os.path.exists(marker):
        os.remove(marker)
    return 0


@click.group()
@click.version_option(version=__version__, prog_name="zxc")
def main():
    """Crossing statistics of periodic billiards and lattice-walk models."""


def _make_command(name, body):
    @click.command(name=name, help=body.__doc__)
    @click.option("--config", "config_path", required=True,
                  help="Path to the run configuration file.")
    @click.option("--seed", type=int, default=None,
                  help="Override the config seed.")
    @click.option("--workers", type=int, default=None,
                  help="Worker pool size; default from ZXC_WORKERS or cores.")
    @click.option("--out", "out_dir", default=None,
                  help="Override the config output directory.")
    def cmd(config_path, seed, workers, out_dir):
        raise SystemExit(_execute(name, config_path, seed, workers, out_dir))
    return cmd


for _name, _body in _BODIES.items():
    main.add_command(_make_command(_name, _body))


if __name__ == "__main__":
    main()
