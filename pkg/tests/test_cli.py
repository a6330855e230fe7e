"""Tests for the command-line laboratory: config validation and artifacts."""

import json
import os
import subprocess
import sys

import pytest

import zxc
from zxc import cli
from zxc.cli import ConfigError, build_table, load_config


def write_cfg(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


GOOD_TOY = """
system = "toy1d"
seed = 20260815
n_grid = [200, 800]
n_starts = 40
reps = 80
"""

GOOD_TABLE = """
system = "billiard"
seed = 99
[table]
disks = [[0.25, 0.25, 0.40], [0.75, 0.75, 0.25]]
tau_max = 1.6
"""


def test_load_config_good_defaults(tmp_path):
    cfg = load_config(write_cfg(tmp_path, GOOD_TOY))
    assert cfg.system == "toy1d"
    assert cfg.seed == 20260815
    assert cfg.n_grid == (200, 800)
    assert cfg.t_grid == ()
    assert cfg.n_starts == 40
    assert cfg.reps == 80
    assert cfg.sigma == 1.0
    assert cfg.initial_law == "invariant"
    assert cfg.output_dir == "zxc-out"
    assert cfg.n_pairs == 10 ** 5
    assert cfg.n_tau == 2 * 10 ** 5
    assert cfg.disks == ()


def test_load_config_flag_overrides(tmp_path):
    path = write_cfg(tmp_path, GOOD_TOY)
    cfg = load_config(path, seed_flag=7, out_flag="elsewhere")
    assert cfg.seed == 7
    assert cfg.output_dir == "elsewhere"


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="config file not found"):
        load_config(str(tmp_path / "absent.toml"))


def test_load_config_bad_syntax(tmp_path):
    path = write_cfg(tmp_path, "system = [unclosed")
    with pytest.raises(ConfigError, match="config does not parse"):
        load_config(path)


def test_load_config_unknown_key(tmp_path):
    path = write_cfg(tmp_path, GOOD_TOY + "zork = 1\n")
    with pytest.raises(ConfigError, match="unknown config keys"):
        load_config(path)


def test_load_config_bad_system(tmp_path):
    path = write_cfg(tmp_path, 'system = "pinball"\nseed = 1\n')
    with pytest.raises(ConfigError, match="system must be one of"):
        load_config(path)


def test_load_config_seed_required(tmp_path):
    path = write_cfg(tmp_path, 'system = "toy1d"\n')
    with pytest.raises(ConfigError, match="seed is required"):
        load_config(path)


def test_load_config_seed_range(tmp_path):
    path = write_cfg(tmp_path, 'system = "toy1d"\nseed = -1\n')
    with pytest.raises(ConfigError, match="seed must fit in 64 bits"):
        load_config(path)
    big = 'system = "toy1d"\nseed = 18446744073709551616\n'
    with pytest.raises(ConfigError, match="seed must fit in 64 bits"):
        load_config(write_cfg(tmp_path, big, name="big.toml"))


def test_load_config_seed_zero_ok(tmp_path):
    cfg = load_config(write_cfg(tmp_path, 'system = "toy1d"\nseed = 0\n'))
    assert cfg.seed == 0


def test_load_config_seed_not_integer(tmp_path):
    path = write_cfg(tmp_path, 'system = "toy1d"\nseed = true\n')
    with pytest.raises(ConfigError, match="seed must be an integer"):
        load_config(path)


def test_load_config_grid_errors(tmp_path):
    base = 'system = "toy1d"\nseed = 1\n'
    cases = [
        ("n_grid = 7\n", "n_grid must be a non-empty list"),
        ("n_grid = []\n", "n_grid must be a non-empty list"),
        ("n_grid = [0, 5]\n", "n_grid entries must be positive"),
        ("n_grid = [5, 5]\n", "n_grid must be strictly increasing"),
        ("n_grid = [2.5]\n", "n_grid must be an integer"),
        ("t_grid = [100, 50]\n", "t_grid must be strictly increasing"),
    ]
    for k, (line, msg) in enumerate(cases):
        path = write_cfg(tmp_path, base + line, name=f"g{k}.toml")
        with pytest.raises(ConfigError, match=msg):
            load_config(path)


def test_load_config_count_bounds(tmp_path):
    base = 'system = "toy1d"\nseed = 1\n'
    cases = [
        ("n_starts = 1\n", "n_starts must be at least 2"),
        ("reps = 1\n", "reps must be at least 2"),
        ("sigma = 0\n", "sigma must be a positive number"),
        ("sigma = \"wide\"\n", "sigma must be a positive number"),
        ("n_pairs = 0\n", "n_pairs and n_tau must be positive"),
        ("output_dir = \"\"\n", "output_dir must be a non-empty path"),
        ('initial_law = "atom"\n', "initial_law must be one of"),
    ]
    for k, (line, msg) in enumerate(cases):
        path = write_cfg(tmp_path, base + line, name=f"c{k}.toml")
        with pytest.raises(ConfigError, match=msg):
            load_config(path)


def test_load_config_table_required(tmp_path):
    path = write_cfg(tmp_path, 'system = "billiard"\nseed = 1\n')
    with pytest.raises(ConfigError, match="needs a \\[table\\] section"):
        load_config(path)


def test_load_config_table_errors(tmp_path):
    base = 'system = "billiard"\nseed = 1\n[table]\n'
    cases = [
        ("spin = 1\ndisks = [[0.2, 0.2, 0.1]]\ntau_max = 2.0\n",
         "unknown table keys"),
        ("tau_max = 2.0\n", "table.disks must be a non-empty list"),
        ("disks = [[0.2, 0.2]]\ntau_max = 2.0\n",
         "disk 0: expected"),
        ("disks = [[0.2, 0.2, 0.1], [0.7, 0.7, \"r\"]]\ntau_max = 2.0\n",
         "disk 1: expected"),
        ("disks = [[0.2, 0.2, 0.1]]\n", "table.tau_max must be a number"),
    ]
    for k, (body, msg) in enumerate(cases):
        path = write_cfg(tmp_path, base + body, name=f"t{k}.toml")
        with pytest.raises(ConfigError, match=msg):
            load_config(path)


def test_build_table_names_offending_disk(tmp_path):
    text = ('system = "billiard"\nseed = 1\n[table]\n'
            "disks = [[0.25, 0.25, 0.40], [0.75, 0.75, 0.60]]\n"
            "tau_max = 1.6\n")
    cfg = load_config(write_cfg(tmp_path, text))
    with pytest.raises(ConfigError, match="disk 1:"):
        build_table(cfg)


def test_build_table_roundtrip(tmp_path):
    cfg = load_config(write_cfg(tmp_path, GOOD_TABLE))
    table = build_table(cfg)
    assert table.phi_bound == 3
    assert [d.id for d in table.disks] == [0, 1]


def test_workers_from_flag_and_env(monkeypatch):
    monkeypatch.delenv("ZXC_WORKERS", raising=False)
    assert cli._workers_from(4) == 4
    with pytest.raises(ConfigError, match="workers must be at least 1"):
        cli._workers_from(0)
    monkeypatch.setenv("ZXC_WORKERS", "3")
    assert cli._workers_from(None) == 3
    monkeypatch.setenv("ZXC_WORKERS", "junk")
    with pytest.raises(ConfigError, match="ZXC_WORKERS must be an integer"):
        cli._workers_from(None)
    monkeypatch.setenv("ZXC_WORKERS", "0")
    with pytest.raises(ConfigError, match="ZXC_WORKERS must be at least 1"):
        cli._workers_from(None)


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def last_stderr_record(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    return json.loads(err[-1])


def test_execute_config_error_exit_2(tmp_path, capsys):
    path = write_cfg(tmp_path, 'system = "toy1d"\n')
    code = cli._execute("thm2", path, None, 1, str(tmp_path / "out"))
    assert code == 2
    record = last_stderr_record(capsys)
    assert record["error"] == "config"
    assert "seed is required" in record["detail"]
    assert not (tmp_path / "out").exists()


def test_execute_bad_geometry_exit_2(tmp_path, capsys):
    text = ('system = "billiard"\nseed = 5\n[table]\n'
            "disks = [[0.25, 0.25, 0.30], [0.75, 0.75, 0.30]]\n"
            "tau_max = 1.6\n")
    path = write_cfg(tmp_path, text)
    code = cli._execute("constants", path, None, 1, str(tmp_path / "out"))
    assert code == 2
    record = last_stderr_record(capsys)
    assert record["error"] == "config"
    assert "table fails validation" in record["detail"]
    assert not os.path.exists(tmp_path / "out" / "manifest.json")


def test_execute_validate_table_failure_exit_1(tmp_path, capsys):
    text = ('system = "billiard"\nseed = 5\n[table]\n'
            "disks = [[0.5, 0.5, 0.40]]\ntau_max = 1.6\n")
    path = write_cfg(tmp_path, text)
    out = tmp_path / "out"
    code = cli._execute("validate-table", path, None, 1, str(out))
    assert code == 1
    marker = read_json(out / "failed")
    assert marker["failed_assertions"] == ["table_ok"]
    report = read_json(out / "report.json")
    assert report["assertions"] == {"table_ok": False}
    assert "error" in report["report"]
    record = last_stderr_record(capsys)
    assert record["failed_assertions"] == ["table_ok"]


def test_failed_marker_removed_after_pass(tmp_path, capsys):
    out = str(tmp_path / "out")
    appa = write_cfg(tmp_path, 'system = "toy1d"\nseed = 4242\n'
                     "t_grid = [2000, 4000]\nn_starts = 20\n",
                     name="appa.toml")
    code = cli._execute("appendixA", appa, None, 1, out)
    assert code == 1
    marker = read_json(os.path.join(out, "failed"))
    assert "converged" in marker["failed_assertions"]
    capsys.readouterr()

    oracle = write_cfg(tmp_path, 'system = "toy1d"\nseed = 4242\n'
                       "reps = 40\n", name="oracle.toml")
    code = cli._execute("oracle", oracle, None, 1, out)
    assert code == 0
    assert not os.path.exists(os.path.join(out, "failed"))
    manifest = read_json(os.path.join(out, "manifest.json"))
    assert manifest["subcommand"] == "oracle"
    report = read_json(os.path.join(out, "report.json"))
    assert report["assertions"] == {}
    assert abs(report["report"]["mean"] - report["report"]["limit_mean"]) \
        == pytest.approx(report["report"]["mean_abs_dev"])


def test_oracle_rows_match_stream_seeds(tmp_path):
    out = str(tmp_path / "out")
    path = write_cfg(tmp_path, 'system = "toy1d"\nseed = 11\nreps = 12\n')
    assert cli._execute("oracle", path, None, 1, out) == 0
    manifest = read_json(os.path.join(out, "manifest.json"))
    seeds = manifest["stream_seeds"]["oracle"]
    assert len(seeds) == 12
    with open(os.path.join(out, "samples.csv")) as fh:
        lines = fh.read().splitlines()
    assert lines[0] == "statistic,n,seed,value"
    rows = [line.split(",") for line in lines[1:]]
    assert [r[0] for r in rows] == ["L2_local_time"] * 12
    assert [int(r[2]) for r in rows] == list(seeds)
    assert all(float(r[3]) > 0 for r in rows)


def test_thm2_toy_bytewise_deterministic(tmp_path):
    path = write_cfg(tmp_path, GOOD_TOY)
    outs = [str(tmp_path / f"out{k}") for k in range(3)]
    for out, workers in zip(outs, (1, 1, 2)):
        assert cli._execute("thm2", path, None, workers, out) == 0
    blobs = []
    for out in outs:
        with open(os.path.join(out, "samples.csv"), "rb") as fh:
            blobs.append(fh.read())
    assert blobs[0] == blobs[1] == blobs[2]
    reports = [read_json(os.path.join(out, "report.json")) for out in outs]
    assert reports[0] == reports[1] == reports[2]
    m0 = read_json(os.path.join(outs[0], "manifest.json"))
    m2 = read_json(os.path.join(outs[2], "manifest.json"))
    assert m0["workers"] == 1 and m2["workers"] == 2
    assert m0["stream_seeds"] == m2["stream_seeds"]
    assert "monotone_trend" in reports[0]
    assert set(reports[0]["ks_distance"]) == {"200", "800"}
    seeds = set(m0["stream_seeds"]["start"])
    with open(os.path.join(outs[0], "samples.csv")) as fh:
        rows = [line.split(",") for line in fh.read().splitlines()[1:]]
    assert len(rows) == 2 * 40
    assert {int(r[2]) for r in rows} <= seeds
    assert {r[1] for r in rows} == {"200", "800"}


def test_llt_toy_run_passes(tmp_path):
    out = str(tmp_path / "out")
    path = write_cfg(tmp_path, 'system = "toy1d"\nseed = 31\n'
                     "n_grid = [10000]\nn_starts = 4000000\n")
    assert cli._execute("llt", path, None, 1, out) == 0
    report = read_json(os.path.join(out, "report.json"))
    assert report["assertions"] == {"llt_ok": True}
    assert report["report"]["max_rel_dev"] <= 0.07
    with open(os.path.join(out, "samples.csv")) as fh:
        rows = [line.split(",") for line in fh.read().splitlines()[1:]]
    assert len(rows) == 2 * len(report["report"]["levels"])
    assert {r[0] for r in rows} == {"endpoint_mass_empirical",
                                    "endpoint_mass_predicted"}


def test_module_entry_point_help():
    proc = subprocess.run([sys.executable, "-m", "zxc.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    for name in ("validate-table", "constants", "oracle", "thm2", "thm1",
                 "strong", "appendixA", "appendixB", "llt",
                 "localtime-props"):
        assert name in proc.stdout


def test_module_entry_point_validate_table(tmp_path):
    path = write_cfg(tmp_path, GOOD_TABLE)
    out = str(tmp_path / "out")
    proc = subprocess.run(
        [sys.executable, "-m", "zxc.cli", "validate-table",
         "--config", path, "--out", out, "--workers", "1"],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    manifest = read_json(os.path.join(out, "manifest.json"))
    assert manifest["subcommand"] == "validate-table"
    assert manifest["version"] == zxc.__version__
    assert manifest["master_seed"] == 99
    assert manifest["workers"] == 1
    assert manifest["degenerate_flagged"] is False
    assert "derive_seed" in manifest["seed_rule"]
    report = read_json(os.path.join(out, "report.json"))
    assert report["assertions"] == {"table_ok": True}
    assert report["report"]["phi_bound"] == 3
    assert report["report"]["max_flight"] <= 1.6
    assert report["report"]["min_clearance"] > 0
    with open(os.path.join(out, "samples.csv")) as fh:
        lines = fh.read().splitlines()
    assert lines[0] == "statistic,n,seed,value"
    assert len(lines) == 3
    assert not os.path.exists(os.path.join(out, "failed"))
