import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from minkcell.geometry import Lattice, SymmetricPolytope

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def random_polygon(rng, m=None, m_range=(4, 16)) -> SymmetricPolytope:
    """Random centrally symmetric polygon with m vertices (m even).

    Half the vertices sit on the unit circle at sorted angles in [0, pi) with a
    minimum spacing, get reflected through the origin and are then pushed
    through a random linear map.  Nearly degenerate maps are rejected.
    """
    if m is None:
        m = int(rng.integers(m_range[0] // 2, m_range[1] // 2 + 1)) * 2
    while True:
        th = np.sort(rng.uniform(0, np.pi, m // 2))
        gaps = np.diff(np.concatenate([th, [th[0] + np.pi]]))
        if gaps.min() < 0.05:
            continue
        half = np.column_stack([np.cos(th), np.sin(th)])
        A = rng.normal(size=(2, 2))
        pts = np.vstack([half, -half]) @ A
        if np.linalg.det(np.cov(pts.T)) < 1e-3:
            continue
        return SymmetricPolytope.from_vertices(pts)


def random_lattice(rng, dim=2, scale=1.0) -> Lattice:
    while True:
        B = rng.normal(size=(dim, dim)) * scale
        s = np.linalg.svd(B, compute_uv=False)
        if s.min() > 0.25 * scale and s.max() / s.min() < 6:
            return Lattice(B)


def random_direction(rng, dim=2):
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


seeds = st.integers(min_value=0, max_value=2**32 - 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> str:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
