import os
import sys

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@st.composite
def graphs(draw, nmin: int = 1, nmax: int = 5):
    from spinlab.core import Graph

    n = draw(st.integers(nmin, nmax))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Graph(n, tuple(p for p, keep in zip(pairs, mask) if keep))


@st.composite
def systems(draw, nmin: int = 1, nmax: int = 5, antiferro: bool = True):
    """Random two-spin systems with per-vertex activities."""
    from spinlab.core import TwoSpinSystem

    g = draw(graphs(nmin, nmax))
    if draw(st.booleans()):
        beta = 0.0
        gamma = draw(st.floats(0.3, 3.0))
    else:
        gamma = draw(st.floats(0.3, 3.0))
        hi = min(gamma, 0.95 / gamma) if antiferro else gamma
        beta = draw(st.floats(0.01, hi))
    fields = tuple(draw(st.floats(0.1, 4.0)) for _ in range(g.n))
    return TwoSpinSystem(g, beta, gamma, fields)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
