"""Euclidean queries against triangle soups: closest points, ray parity, segment crossings."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree


def closest_points_on_triangles(p: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Closest point of triangle ``(a[i], b[i], c[i])`` to ``p[i]``, row-wise.

    Region classification over the triangle's Voronoi regions (vertex, edge,
    face), vectorised over rows.
    """
    ab, ac, ap = b - a, c - a, p - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = p - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    out = np.empty_like(p)
    done = np.zeros(len(p), dtype=bool)

    def take(mask, value):
        m = mask & ~done
        out[m] = value[m] if value.ndim == 2 else value
        done[m] = True

    take((d1 <= 0) & (d2 <= 0), a)
    take((d3 >= 0) & (d4 <= d3), b)
    with np.errstate(divide="ignore", invalid="ignore"):
        v_ab = d1 / (d1 - d3)
        take((vc <= 0) & (d1 >= 0) & (d3 <= 0), a + v_ab[:, None] * ab)
        take((d6 >= 0) & (d5 <= d6), c)
        w_ac = d2 / (d2 - d6)
        take((vb <= 0) & (d2 >= 0) & (d6 <= 0), a + w_ac[:, None] * ac)
        w_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        take((va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0), b + w_bc[:, None] * (c - b))
        denom = va + vb + vc
        v = vb / denom
        w = vc / denom
        take(np.ones(len(p), dtype=bool), a + v[:, None] * ab + w[:, None] * ac)
    return out


class TriangleSoup:
    """Static triangle set with nearest-surface queries.

    Candidate triangles come from a k-d tree over face centroids; the exact
    closest point is then taken over the ``k`` nearest candidates, which is
    exact whenever the true nearest face is among them (checked by a
    conservative radius test, falling back to a wider search).
    """

    def __init__(self, vertices: np.ndarray, faces: np.ndarray, k: int = 12):
        self.vertices = np.asarray(vertices, dtype=float)
        self.faces = np.asarray(faces, dtype=np.int64)
        tri = self.vertices[self.faces]
        self.centroids = tri.mean(axis=1)
        self.reach = float(np.linalg.norm(tri - self.centroids[:, None, :], axis=2).max()) if len(tri) else 0.0
        self.tree = cKDTree(self.centroids)
        self.k = min(k, len(self.faces))
        self.lo = self.vertices.min(axis=0)
        self.hi = self.vertices.max(axis=0)
        n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        self.normals = n / np.maximum(np.linalg.norm(n, axis=1), 1e-300)[:, None]

    def box_distance(self, pts: np.ndarray) -> np.ndarray:
        d = np.maximum(self.lo - pts, 0.0) + np.maximum(pts - self.hi, 0.0)
        return np.linalg.norm(d, axis=1)

    def closest(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Distance, closest point and face index for each query point."""
        pts = np.asarray(pts, dtype=float).reshape(-1, 3)
        k = self.k
        cd, ci = self.tree.query(pts, k=k)
        cd, ci = cd.reshape(len(pts), k), ci.reshape(len(pts), k)
        best_d, best_q, best_f = self._exact(pts, ci)
        # a face whose centroid is farther than best + reach cannot be closer
        unsure = cd[:, -1] < best_d + self.reach
        if unsure.any() and k < len(self.faces):
            for i in np.flatnonzero(unsure):
                idx = np.asarray(self.tree.query_ball_point(pts[i], best_d[i] + self.reach), dtype=np.int64)
                d, q, f = self._exact(pts[i : i + 1], idx[None, :])
                best_d[i], best_q[i], best_f[i] = d[0], q[0], f[0]
        return best_d, best_q, best_f

    def _exact(self, pts, cand):
        n, k = cand.shape
        P = np.repeat(pts, k, axis=0)
        F = self.faces[cand.ravel()]
        V = self.vertices
        q = closest_points_on_triangles(P, V[F[:, 0]], V[F[:, 1]], V[F[:, 2]])
        d = np.linalg.norm(P - q, axis=1).reshape(n, k)
        j = np.argmin(d, axis=1)
        rows = np.arange(n)
        return d[rows, j], q.reshape(n, k, 3)[rows, j], cand[rows, j]


# fixed offset of the query line: keeps the vertical ray off mesh edges in practice
_JITTER = np.array([1.234567e-11, -7.654321e-12])


def vertical_crossings(
    vertices: np.ndarray, faces: np.ndarray, xy, z_lo: float = -np.inf, z_hi: float = np.inf
) -> np.ndarray:
    """Heights where the vertical line over ``xy`` crosses the triangles, restricted to ``[z_lo, z_hi]``.

    Triangles are tested by 2D barycentric coordinates of their projections;
    faces parallel to the line (zero projected area) are skipped.  Sorted ascending.
    """
    V = np.asarray(vertices, dtype=float)
    F = np.asarray(faces, dtype=np.int64)
    if len(F) == 0:
        return np.empty(0)
    q = np.asarray(xy, dtype=float)[:2] + _JITTER
    a, b, c = V[F[:, 0]], V[F[:, 1]], V[F[:, 2]]
    e1 = b[:, :2] - a[:, :2]
    e2 = c[:, :2] - a[:, :2]
    r = q - a[:, :2]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    ok = np.abs(det) > 1e-300
    det = np.where(ok, det, 1.0)
    u = (r[:, 0] * e2[:, 1] - r[:, 1] * e2[:, 0]) / det
    v = (e1[:, 0] * r[:, 1] - e1[:, 1] * r[:, 0]) / det
    inside = ok & (u >= 0) & (v >= 0) & (u + v <= 1)
    z = a[:, 2] + u * (b[:, 2] - a[:, 2]) + v * (c[:, 2] - a[:, 2])
    hit = inside & (z >= z_lo) & (z <= z_hi)
    return np.sort(z[hit])


def points_inside_closed(vertices: np.ndarray, faces: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Ray parity (upward vertical rays) against a closed triangle surface."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 3)
    out = np.zeros(len(pts), dtype=bool)
    for i, p in enumerate(pts):
        out[i] = len(vertical_crossings(vertices, faces, p[:2], z_lo=p[2])) % 2 == 1
    return out
