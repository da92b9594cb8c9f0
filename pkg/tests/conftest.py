import os

import sys

from pathlib import Path

# must happen before numpy is imported anywhere in the session
for _name in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
              "VECLIB_MAXIMUM_THREADS", "NUMEXPR_NUM_THREADS"):

    os.environ[_name] = "1"

ROOT = Path(__file__).resolve().parents[1]

sys.path.insert(0, str(ROOT))

import numpy as np

import pytest

SPECS = ROOT / "config" / "specs"

FIXTURES = ROOT / "res" / "fixtures"


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_spec():
    from net.spec import load_spec
    return load_spec(SPECS / "tiny.json")


@pytest.fixture
def tiny_model(tiny_spec):
    from net.model import init_model
    return init_model(tiny_spec, seed=7)
