from __future__ import annotations

import numpy as np
import pytest

from aqc_workbench.graphs import Graph


@pytest.fixture
def p3() -> Graph:
    return Graph.path(3)


@pytest.fixture
def triangle() -> Graph:
    return Graph.complete(3)


@pytest.fixture
def k2() -> Graph:
    return Graph.complete(2)


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)
