"""Small mesh factories shared by the tests."""

import numpy as np
from scipy.spatial import Delaunay

from h3plateau.mesh import TriMesh, orient_consistently


def polar_points(n: int, rmax: float) -> np.ndarray:
    pts = [[0.0, 0.0]]
    for k in range(1, n + 1):
        t = np.linspace(0, 2 * np.pi, 6 * k, endpoint=False) + 0.5 / (6 * k)
        pts += list(rmax * k / n * np.column_stack([np.cos(t), np.sin(t)]))
    return np.array(pts)


def flat_disk(rho: float, h: float, n: int = 30) -> TriMesh:
    pts = polar_points(n, rho)
    faces = orient_consistently(Delaunay(pts).simplices)
    m = TriMesh(np.column_stack([pts, np.full(len(pts), h)]), faces)
    m.fixed[m.boundary_vertices()] = True
    return m


def hemisphere_cap(n: int, R: float = 1.0, frac: float = 0.9, center=(0.0, 0.0)) -> TriMesh:
    pts = polar_points(n, frac * R)
    faces = orient_consistently(Delaunay(pts).simplices)
    z = np.sqrt(R * R - np.sum(pts**2, axis=1))
    m = TriMesh(np.column_stack([pts + np.asarray(center), z]), faces)
    m.fixed[m.boundary_vertices()] = True
    return m


def random_mesh(rng: np.random.Generator, max_vertices: int = 200) -> TriMesh:
    """Jittered planar Delaunay patch lifted to random heights in [0.1, 5]."""
    n = int(rng.integers(8, max_vertices + 1))
    pts = rng.uniform(-1, 1, (n, 2))
    faces = Delaunay(pts).simplices
    z = rng.uniform(0.1, 5.0, n)
    m = TriMesh(np.column_stack([pts, z]), orient_consistently(faces))
    m.fixed[m.boundary_vertices()] = True
    return m


def fine_rim_cap(rim: int = 200, inner: int = 3, frac: float = 0.9) -> TriMesh:
    """Unit-hemisphere cap with a densely sampled rim and a coarse interior."""
    t = np.linspace(0, 2 * np.pi, rim, endpoint=False)
    pts = np.vstack([polar_points(inner, 0.75 * frac), frac * np.column_stack([np.cos(t), np.sin(t)])])
    z = np.sqrt(1 - np.sum(pts**2, axis=1))
    m = TriMesh(np.column_stack([pts, z]), orient_consistently(Delaunay(pts).simplices))
    m.fixed[m.boundary_vertices()] = True
    return m


def central_difference_gradient(m: TriMesh, h: float = 1e-6) -> np.ndarray:
    """Central differences of the area, evaluated on each free vertex's star (the rest cancels)."""
    from h3plateau.mesh import face_areas

    out = np.zeros_like(m.vertices)
    for i in np.flatnonzero(m.free):
        star = m.faces[np.any(m.faces == i, axis=1)]
        for k in range(3):
            v = m.vertices.copy()
            v[i, k] += h
            up = face_areas(v, star).sum()
            v[i, k] -= 2 * h
            down = face_areas(v, star).sum()
            out[i, k] = (up - down) / (2 * h)
    return out
