from pathlib import Path

import numpy as np
import pytest

from nvem.bench import rectangle_mesh
from nvem.constitutive import Material
from nvem.mesh import Mesh, read_mesh

DATA = Path(__file__).parent / "data"

UNIT_SQUARE_TEXT = """nvem-mesh 1
4 1 4
0 0
1 0
1 1
0 1
4 0 1 2 3
0 1 1
1 2 2
2 3 3
3 0 4
"""


@pytest.fixture
def unit_square() -> Mesh:
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    return Mesh(nodes, [[0, 1, 2, 3]], np.array([[0, 1, 1], [1, 2, 2], [2, 3, 3], [3, 0, 4]]))


@pytest.fixture
def grid3() -> Mesh:
    return rectangle_mesh(3, 3)


@pytest.fixture(scope="session")
def voronoi() -> Mesh:
    return read_mesh(DATA / "voronoi30.mesh")


@pytest.fixture
def steel() -> Material:
    return Material(210000.0, 0.3, 240.0)


def hexagon(radius=1.0, centre=(0.0, 0.0)) -> np.ndarray:
    t = np.arange(6) * np.pi / 3
    return np.column_stack([centre[0] + radius * np.cos(t), centre[1] + radius * np.sin(t)])


def single_element(xy) -> Mesh:
    n = len(xy)
    edges = np.array([[a, (a + 1) % n, 1] for a in range(n)])
    return Mesh(np.asarray(xy, float), [list(range(n))], edges)


def random_convex_polygon(rng, n):
    """Random convex polygon: sorted angles on a jittered circle."""
    t = np.sort(rng.uniform(0, 2 * np.pi, n))
    while np.min(np.diff(np.concatenate([t, [t[0] + 2 * np.pi]]))) < 0.2:
        t = np.sort(rng.uniform(0, 2 * np.pi, n))
    r = 1.0 + 0.1 * rng.uniform(-1, 1)
    return np.column_stack([r * np.cos(t), r * np.sin(t)]) * rng.uniform(0.5, 3.0) + rng.uniform(-5, 5, 2)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
