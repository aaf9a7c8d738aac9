import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from awest.path_measure import DiscretePathMeasure

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

ACCEPTANCE: dict = {}


def random_t2_measure(rng, max_first=4, max_children=4, d=1, grid=None) -> DiscretePathMeasure:
    """Random T = 2 path measure with at most ``max_first`` time-1 atoms and
    ``max_children`` continuations each; ``grid`` snaps values to multiples."""

    def draw(k):
        v = rng.normal(size=(k, d)) * 2
        return np.round(v / grid) * grid if grid else v

    firsts = np.unique(draw(rng.integers(1, max_first + 1)), axis=0)
    paths, weights = [], []
    for x1 in firsts:
        kids = np.unique(draw(rng.integers(1, max_children + 1)), axis=0)
        w = rng.dirichlet(np.ones(len(kids))) * rng.uniform(0.2, 1.0)
        for x2, wk in zip(kids, w):
            paths.append(np.stack([x1, x2]))
            weights.append(wk)
    return DiscretePathMeasure.from_atoms(np.array(paths), np.array(weights))


def random_path_measure(rng, T=3, d=1, atoms=5, grid=0.5) -> DiscretePathMeasure:
    paths = np.round(rng.normal(size=(atoms, T, d)) / grid) * grid
    return DiscretePathMeasure.from_atoms(paths, rng.dirichlet(np.ones(atoms)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
