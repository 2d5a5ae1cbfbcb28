import numpy as np
import pytest
from hypothesis import strategies as st

from gibbstree.offspring import OffspringDistribution

STANDARD = (0.3, 0.69, 0.01)


def random_subcritical(rng: np.random.Generator, K: int, need_p2: bool = True) -> OffspringDistribution:
    """Law on {0..K} with p0 >= 0.05, free mean <= 0.95 and (optionally) p2 >= 0.02."""
    while True:
        p = rng.dirichlet(np.ones(K + 1))
        mean = float(np.dot(np.arange(K + 1), p))
        if p[0] < 0.05 or mean > 0.95 or (need_p2 and p[2] < 0.02):
            continue
        return OffspringDistribution(tuple(p / p.sum()))


def random_laws(seed: int, count: int, K_choices=(2, 3, 4), need_p2: bool = True) -> list[OffspringDistribution]:
    rng = np.random.default_rng(seed)
    return [random_subcritical(rng, int(rng.choice(K_choices)), need_p2) for _ in range(count)]


@st.composite
def subcritical_laws(draw, max_K: int = 4):
    K = draw(st.integers(2, max_K))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_subcritical(np.random.default_rng(seed), K)


@pytest.fixture
def standard():
    return OffspringDistribution(STANDARD)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[num])
