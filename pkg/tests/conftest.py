import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from utils.reaction import load_reaction
from utils.run_config import Tolerances
from utils.terrace import build_terrace

DATA_DIR = Path(__file__).resolve().parent.parent / "data"

settings.register_profile(
    "ci",
    max_examples=20,
    deadline=None,
    suppress_health_check=[HealthCheck.function_scoped_fixture, HealthCheck.too_slow],
)
settings.register_profile("dev", max_examples=5, deadline=None)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "ci"))


def data_path(name: str) -> str:
    return str(DATA_DIR / name)


@pytest.fixture(scope="session")
def tols():
    return Tolerances()


@pytest.fixture(scope="session")
def spec_a():
    return load_reaction(data_path("example_a.json"))


@pytest.fixture(scope="session")
def spec_b():
    return load_reaction(data_path("example_b.json"))


@pytest.fixture(scope="session")
def spec_c():
    return load_reaction(data_path("example_c.json"))


@pytest.fixture(scope="session")
def terrace_a(spec_a, tols):
    return build_terrace(spec_a, tols)


@pytest.fixture(scope="session")
def terrace_b(spec_b, tols):
    return build_terrace(spec_b, tols)


@pytest.fixture(scope="session")
def terrace_c(spec_c, tols):
    return build_terrace(spec_c, tols)
