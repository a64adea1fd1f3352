import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from cplab.dist import DiscreteDistribution

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def lattice_dists(draw, dim=1, max_atoms=8, span=6):
    """Small integer-lattice laws with strictly positive masses."""
    n = draw(st.integers(1, max_atoms))
    coords = st.tuples(*[st.integers(-span, span)] * dim)
    pts = draw(st.lists(coords, min_size=n, max_size=n, unique=True))
    w = np.array(draw(st.lists(st.floats(0.05, 1.0), min_size=n, max_size=n)))
    return DiscreteDistribution(np.array(pts, dtype=float), w / w.sum())


def random_dist(rng, *, dim=1, atoms=6, span=5, integer=True):
    if integer:
        pts = rng.integers(-span, span + 1, size=(atoms, dim)).astype(float)
    else:
        pts = rng.normal(size=(atoms, dim)) * span
    w = rng.random(atoms) + 0.05
    return DiscreteDistribution(pts, w / w.sum(), normalize=True)


def cdf_oracle_1d(F, G):
    """sup_x |F(x) - G(x)| by brute force over every support point."""
    fx = {float(p[0]): m for p, m in zip(F.points, F.masses)}
    gx = {float(p[0]): m for p, m in zip(G.points, G.masses)}
    best = 0.0
    for x in sorted(set(fx) | set(gx)):
        a = sum(m for y, m in fx.items() if y <= x)
        b = sum(m for y, m in gx.items() if y <= x)
        best = max(best, abs(a - b))
    return best


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
