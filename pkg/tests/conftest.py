"""Shared fixtures: the validated default table and seeded generators."""

import numpy as np
import pytest

import zxc


@pytest.fixture(scope="session")
def table():
    t = zxc.default_table()
    zxc.validate_table(t)
    return t


@pytest.fixture()
def rng():
    return np.random.default_rng(20260815)
