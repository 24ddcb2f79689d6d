"""Shared fixtures and independent oracles for the test suite."""
from __future__ import annotations

import math

import numpy as np
import pytest

from qcalc import geometry, metric
from qcalc.fields import ScalarField


def circle_points(n: int) -> list[tuple[float, float]]:
    return [(math.cos(2 * math.pi * j / n), math.sin(2 * math.pi * j / n)) for j in range(n)]


@pytest.fixture(scope="session")
def circle256():
    return geometry.build_polyline(circle_points(256), closed=True, label="circle256")


@pytest.fixture(scope="session")
def gasket2():
    return geometry.build_gasket(2)


@pytest.fixture(scope="session")
def gasket3():
    return geometry.build_gasket(3)


@pytest.fixture(scope="session")
def gasket4():
    return geometry.build_gasket(4)


@pytest.fixture(scope="session")
def carpet3():
    return geometry.build_carpet(3)


@pytest.fixture(scope="session")
def dumbbell():
    return geometry.build_dumbbell(1.0, 0.1, math.pi / 32)


@pytest.fixture(scope="session")
def square_loop():
    return geometry.build_polyline([(0, 0), (1, 0), (1, 1), (0, 1)], closed=True)


@pytest.fixture(scope="session")
def khat_circle256(circle256):
    return metric.estimate_chord_arc(circle256)


@pytest.fixture(scope="session")
def khat_gasket4(gasket4):
    return metric.estimate_chord_arc(gasket4)


@pytest.fixture(scope="session")
def khat_carpet3(carpet3):
    return metric.estimate_chord_arc(carpet3)


# ---------------------------------------------------------------------------
# independent oracles


def scipy_distance_matrix(sample) -> np.ndarray:
    """All-pairs geodesic distances via scipy's graph machinery."""
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import dijkstra

    nv = sample.vertex_count
    i, j, w = zip(*sample.edges)
    mat = coo_matrix((w + w, (i + j, j + i)), shape=(nv, nv))
    return dijkstra(mat.tocsr(), directed=False)


def brute_force_chord_arc(sample) -> tuple[float, tuple[int, int]]:
    """Max geodesic/Euclidean ratio by a plain pair scan over scipy distances."""
    dist = scipy_distance_matrix(sample)
    pts = sample.points_array
    best, witness = -math.inf, (-1, -1)
    for i in range(sample.vertex_count - 1):
        for j in range(i + 1, sample.vertex_count):
            ratio = dist[i, j] / math.dist(sample.points[i], sample.points[j])
            if ratio > best:
                best, witness = ratio, (i, j)
    return best, witness


def measured_local_constant(sample, f: ScalarField, radius: float) -> float:
    """Smallest C for which f is C-Lipschitz over pairs within the radius."""
    pts = sample.points_array
    vals = f.values
    out = 0.0
    for i in range(sample.vertex_count - 1):
        d = np.linalg.norm(pts[i + 1 :] - pts[i], axis=1)
        df = np.abs(vals[i + 1 :] - vals[i])
        mask = d <= radius
        if mask.any():
            out = max(out, float(np.max(df[mask] / d[mask])))
    return out


def vertex_at(sample, coords, tol=1e-9) -> int:
    """Index of the sample vertex at the given coordinates."""
    for i, p in enumerate(sample.points):
        if math.dist(p, coords) <= tol:
            return i
    raise AssertionError(f"no vertex at {coords}")


def geodesic_field(sample, base: int = 0) -> ScalarField:
    """Intrinsic distance from a basepoint as a scalar field."""
    vals = np.array(
        [metric.geodesic_distance(sample, base, v) for v in range(sample.vertex_count)]
    )
    return ScalarField(sample, vals)
