import pytest

from pfmeta.effect_size import EffectEstimate, to_estimate
from pfmeta.io import load_builtin_dataset

FIGURE_ROWS = [
    ("Koch", -0.78, -0.96, -0.62),
    ("Modeer", -0.40, -0.70, -0.10),
    ("Clark", -0.65, -0.75, -0.55),
    ("Tewari", -0.30, -0.45, -0.15),
    ("Bravo", -0.38, -0.55, -0.25),
    ("Skold", -0.34, -0.48, -0.20),
    ("Arruda", -0.36, -0.52, -0.22),
    ("Tagliaferro", -0.36, -0.95, 0.08),
    ("Milsom", 0.08, -0.15, 0.28),
]


@pytest.fixture(scope="session")
def builtin_dataset():
    return load_builtin_dataset()


@pytest.fixture(scope="session")
def builtin_estimates(builtin_dataset):
    return [to_estimate(r)[0] for r in builtin_dataset.records]


@pytest.fixture
def two_studies():
    return [EffectEstimate("a", -0.2, 0.04), EffectEstimate("b", -0.6, 0.04)]


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
