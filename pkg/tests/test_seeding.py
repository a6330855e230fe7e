"""Deterministic stream-seed derivation."""

import pytest

from zxc.seeding import derive_seed


def test_streams_distinct():
    for master in (0, 1, 2 ** 63, 2 ** 64 - 1):
        assert derive_seed(master, 0) != derive_seed(master, 1)


def test_pure_and_stable():
    first = derive_seed(12345, 7)
    assert derive_seed(12345, 7) == first
    assert derive_seed(12345, 8) != first


def test_output_range():
    for sid in (0, 1, 10 ** 6):
        out = derive_seed(987654321, sid)
        assert 0 <= out < 2 ** 64


def test_contracts():
    with pytest.raises(ValueError, match="64-bit"):
        derive_seed(2 ** 64, 0)
    with pytest.raises(ValueError, match="64-bit"):
        derive_seed(-1, 0)
    with pytest.raises(ValueError, match="nonnegative"):
        derive_seed(1, -1)


def test_million_streams_no_duplicates():
    seeds = {derive_seed(20260815, i) for i in range(10 ** 6)}
    assert len(seeds) == 10 ** 6
