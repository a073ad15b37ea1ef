"""Triangle meshes in the upper half-space with the hyperbolic area functional."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import SolverError
from .hyperbolic import quad_rule

EULER = {"disk": 1, "annulus": 0, "sphere": 2}


@dataclass
class TriMesh:
    vertices: np.ndarray
    faces: np.ndarray
    fixed: np.ndarray = None
    topology: str = "disk"

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if self.fixed is None:
            self.fixed = np.zeros(len(self.vertices), dtype=bool)
        self.fixed = np.asarray(self.fixed, dtype=bool)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def free(self) -> np.ndarray:
        return ~self.fixed

    def with_vertices(self, vertices: np.ndarray) -> "TriMesh":
        return replace(self, vertices=np.array(vertices, dtype=float), faces=self.faces.copy(), fixed=self.fixed.copy())

    def copy(self) -> "TriMesh":
        return self.with_vertices(self.vertices)

    def edges(self) -> np.ndarray:
        """Unique undirected edges, sorted."""
        e = np.concatenate([self.faces[:, [0, 1]], self.faces[:, [1, 2]], self.faces[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    def edge_face_counts(self) -> tuple[np.ndarray, np.ndarray]:
        e = np.concatenate([self.faces[:, [0, 1]], self.faces[:, [1, 2]], self.faces[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0, return_counts=True)

    def boundary_edges(self) -> np.ndarray:
        e, c = self.edge_face_counts()
        return e[c == 1]

    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.boundary_edges())

    def euler_characteristic(self) -> int:
        used = np.unique(self.faces)
        return int(len(used) - len(self.edges()) + len(self.faces))

    def boundary_loops(self) -> list[np.ndarray]:
        """Boundary cycles as vertex index arrays, following face orientation."""
        directed = {}
        for f in self.faces:
            for a, b in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
                directed[(int(a), int(b))] = True
        nxt = {}
        for a, b in directed:
            if (b, a) not in directed:
                nxt[a] = b
        loops, seen = [], set()
        for start in sorted(nxt):
            if start in seen:
                continue
            loop, v = [], start
            while v not in seen:
                seen.add(v)
                loop.append(v)
                v = nxt[v]
            loops.append(np.array(loop))
        return loops

    def check(self) -> None:
        """Raise if the mesh violates the TriMesh invariants."""
        if np.any(self.vertices[:, 2] <= 0):
            raise SolverError("vertex with non-positive height")
        _, counts = self.edge_face_counts()
        if np.any(counts > 2):
            raise SolverError("non-manifold edge")
        chi = self.euler_characteristic()
        want = EULER.get(self.topology)
        if want is not None and chi != want:
            raise SolverError(f"Euler characteristic {chi} does not match topology {self.topology!r}")


def face_areas(vertices: np.ndarray, faces: np.ndarray, quad_order: int = 3) -> np.ndarray:
    a, b, c = vertices[faces[:, 0]], vertices[faces[:, 1]], vertices[faces[:, 2]]
    cr = np.cross(b - a, c - a)
    area_e = 0.5 * np.sqrt(np.einsum("ij,ij->i", cr, cr))
    bary, w = quad_rule(quad_order)
    zq = np.stack([a[:, 2], b[:, 2], c[:, 2]], axis=1) @ bary.T
    return area_e * (w / zq**2).sum(axis=1)


def mesh_area(m: TriMesh, quad_order: int = 3) -> float:
    if len(m.faces) == 0:
        return 0.0
    return float(face_areas(m.vertices, m.faces, quad_order).sum())


def area_and_gradient(vertices: np.ndarray, faces: np.ndarray, quad_order: int = 3) -> tuple[float, np.ndarray]:
    """Total hyperbolic area and its Euclidean-coordinate gradient (all vertices)."""
    nv = len(vertices)
    grad = np.zeros((nv, 3))
    if len(faces) == 0:
        return 0.0, grad
    a, b, c = vertices[faces[:, 0]], vertices[faces[:, 1]], vertices[faces[:, 2]]
    cr = np.cross(b - a, c - a)
    norm = np.sqrt(np.einsum("ij,ij->i", cr, cr))
    area_e = 0.5 * norm
    safe = np.where(norm > 0, norm, 1.0)
    nhat = cr / safe[:, None]
    nhat[norm == 0] = 0.0

    bary, w = quad_rule(quad_order)
    zs = np.stack([a[:, 2], b[:, 2], c[:, 2]], axis=1)
    zq = zs @ bary.T
    weight = (w / zq**2).sum(axis=1)
    # d weight / d z_i = sum_q -2 w_q bary_qi / zq^3
    dweight = (-2.0 * w / zq**3) @ bary

    ga = 0.5 * np.cross(nhat, c - b) * weight[:, None]
    gb = 0.5 * np.cross(nhat, a - c) * weight[:, None]
    gc = 0.5 * np.cross(nhat, b - a) * weight[:, None]
    ga[:, 2] += area_e * dweight[:, 0]
    gb[:, 2] += area_e * dweight[:, 1]
    gc[:, 2] += area_e * dweight[:, 2]

    idx = faces.T.ravel()
    contrib = np.concatenate([ga, gb, gc])
    for k in range(3):
        grad[:, k] = np.bincount(idx, weights=contrib[:, k], minlength=nv)
    return float((area_e * weight).sum()), grad


def area_gradient(m: TriMesh, quad_order: int = 3) -> np.ndarray:
    """Gradient of :func:`mesh_area`; rows of fixed vertices are zero."""
    _, g = area_and_gradient(m.vertices, m.faces, quad_order)
    g[m.fixed] = 0.0
    return g


def hyperbolic_grad_norms(vertices: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Per-vertex norm of the area differential in the hyperbolic metric."""
    return vertices[:, 2] * np.linalg.norm(grad, axis=1)


def vertex_areas(m: TriMesh, quad_order: int = 3) -> np.ndarray:
    fa = face_areas(m.vertices, m.faces, quad_order)
    return np.bincount(m.faces.ravel(), weights=np.repeat(fa / 3.0, 3), minlength=m.n_vertices)


def vertex_normals(m: TriMesh) -> np.ndarray:
    v, f = m.vertices, m.faces
    cr = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
    n = np.zeros_like(v)
    for k in range(3):
        for j in range(3):
            n[:, j] += np.bincount(f[:, k], weights=cr[:, j], minlength=len(v))
    ln = np.linalg.norm(n, axis=1)
    return n / np.where(ln > 0, ln, 1.0)[:, None]


def mean_curvature(m: TriMesh, quad_order: int = 3, signed: bool = False) -> np.ndarray:
    """Discrete hyperbolic mean curvature (average of principal curvatures).

    From the first variation of area: ``H = -z (dA . n) / (2 A_v)`` with
    ``A_v`` the hyperbolic vertex area.  Unsigned values use ``|dA|``.
    Boundary vertices are meaningless and returned as NaN.
    """
    _, g = area_and_gradient(m.vertices, m.faces, quad_order)
    av = vertex_areas(m, quad_order)
    z = m.vertices[:, 2]
    if signed:
        n = vertex_normals(m)
        h = -z * np.einsum("ij,ij->i", g, n) / (2 * av)
    else:
        h = z * np.linalg.norm(g, axis=1) / (2 * av)
    h[m.boundary_vertices()] = np.nan
    return h


def orient_consistently(faces: np.ndarray) -> np.ndarray:
    """Flip faces by BFS so that every interior edge is used once in each direction."""
    faces = np.array(faces, dtype=np.int64)
    adj: dict[tuple[int, int], list[int]] = {}
    for i, f in enumerate(faces):
        for a, b in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
            adj.setdefault((min(a, b), max(a, b)), []).append(i)
    done = np.zeros(len(faces), dtype=bool)
    for seed in range(len(faces)):
        if done[seed]:
            continue
        done[seed] = True
        stack = [seed]
        while stack:
            i = stack.pop()
            f = faces[i]
            for a, b in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
                for j in adj[(min(a, b), max(a, b))]:
                    if done[j]:
                        continue
                    g = faces[j]
                    same = any((g[k] == a and g[(k + 1) % 3] == b) for k in range(3))
                    if same:
                        faces[j] = g[::-1]
                    done[j] = True
                    stack.append(j)
    return faces


# ---------------------------------------------------------------- OBJ I/O


def obj_text(m: TriMesh) -> str:
    lines = [f"# topology {m.topology}"]
    fixed = np.flatnonzero(m.fixed)
    if len(fixed):
        lines.append("# fixed " + " ".join(str(int(i) + 1) for i in fixed))
    lines += [f"v {x:.12f} {y:.12f} {z:.12f}" for x, y, z in m.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in m.faces]
    return "\n".join(lines) + "\n"


def parse_obj(text: str) -> TriMesh:
    verts, faces, fixed, topology = [], [], [], "disk"
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(t) for t in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(t.split("/")[0]) - 1 for t in parts[1:4]])
        elif parts[0] == "#" and len(parts) > 1:
            if parts[1] == "topology" and len(parts) > 2:
                topology = parts[2]
            elif parts[1] == "fixed":
                fixed.extend(int(t) - 1 for t in parts[2:])
    mask = np.zeros(len(verts), dtype=bool)
    mask[fixed] = True
    return TriMesh(np.array(verts).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3), mask, topology)


def write_obj(m: TriMesh, path) -> None:
    from .io import atomic_write

    atomic_write(Path(path), obj_text(m))


def read_obj(path) -> TriMesh:
    return parse_obj(Path(path).read_text())


# ---------------------------------------------------------------- remeshing


def _hyp_len(p: np.ndarray, q: np.ndarray) -> float:
    d = p - q
    return 2.0 * math.asinh(math.sqrt(float(d @ d)) / (2.0 * math.sqrt(p[2] * q[2])))


@dataclass
class _Work:
    """Mutable list-based mesh used while remeshing."""

    verts: list
    faces: list
    fixed: list
    alive: list = field(default_factory=list)

    def __post_init__(self):
        self.alive = [True] * len(self.faces)

    def edge_map(self):
        em: dict[tuple[int, int], list[int]] = {}
        for i, f in enumerate(self.faces):
            if not self.alive[i]:
                continue
            for k in range(3):
                a, b = f[k], f[(k + 1) % 3]
                em.setdefault((min(a, b), max(a, b)), []).append(i)
        return em

    def vertex_faces(self):
        vf: dict[int, list[int]] = {}
        for i, f in enumerate(self.faces):
            if self.alive[i]:
                for v in f:
                    vf.setdefault(v, []).append(i)
        return vf

    def normal(self, f) -> np.ndarray:
        a, b, c = (self.verts[i] for i in f)
        return np.cross(b - a, c - a)


def _opposite(face, a, b):
    for v in face:
        if v != a and v != b:
            return v
    raise SolverError("degenerate face")


def _scaled_len(w: _Work, a: int, b: int, grade) -> float:
    L = _hyp_len(w.verts[a], w.verts[b])
    if grade is None:
        return L
    return L / grade(0.5 * float(w.verts[a][2] + w.verts[b][2]))


def _split_long(w: _Work, l_max: float, grade=None) -> int:
    em = w.edge_map()
    cand = []
    for (a, b), fs in em.items():
        if len(fs) != 2:
            continue
        L = _scaled_len(w, a, b, grade)
        if L > l_max:
            cand.append((-L, a, b))
    cand.sort()
    touched, count = set(), 0
    for _, a, b in cand:
        fs = em[(a, b)]
        quad = set(w.faces[fs[0]]) | set(w.faces[fs[1]])
        if quad & touched:
            continue
        touched |= quad
        m_idx = len(w.verts)
        w.verts.append(0.5 * (w.verts[a] + w.verts[b]))
        w.fixed.append(False)
        for fi in fs:
            f = w.faces[fi]
            k = f.index(a)
            if f[(k + 1) % 3] == b:
                p, q = a, b
            else:
                p, q = b, a
            r = _opposite(f, a, b)
            w.faces[fi] = [p, m_idx, r]
            w.faces.append([m_idx, q, r])
            w.alive.append(True)
        count += 1
    return count


def _collapse_short(w: _Work, l_min: float, l_max: float, grade=None) -> int:
    em = w.edge_map()
    vf = w.vertex_faces()
    boundary = set()
    for (a, b), fs in em.items():
        if len(fs) == 1:
            boundary.update((a, b))
    cand = []
    for (a, b), fs in em.items():
        if len(fs) != 2:
            continue
        L = _scaled_len(w, a, b, grade)
        if L < l_min:
            cand.append((L, a, b))
    cand.sort()
    touched, count = set(), 0
    for _, a, b in cand:
        # remove u, keep v
        for u, v in ((a, b), (b, a)):
            if w.fixed[u] or u in boundary:
                continue
            ring_u = {x for fi in vf[u] for x in w.faces[fi]} - {u}
            if ({u} | ring_u) & touched:
                continue
            ring_v = {x for fi in vf[v] for x in w.faces[fi]} - {v}
            shared = ring_u & ring_v
            opp = {_opposite(w.faces[fi], u, v) for fi in em[(min(u, v), max(u, v))]}
            if shared != opp:
                continue  # link condition
            pv = w.verts[v]
            ok = True
            for fi in vf[u]:
                f = w.faces[fi]
                if v in f:
                    continue
                pts = [pv if x == u else w.verts[x] for x in f]
                n0 = w.normal(f)
                n1 = np.cross(pts[1] - pts[0], pts[2] - pts[0])
                if n0 @ n1 <= 0.2 * np.linalg.norm(n0) * np.linalg.norm(n1):
                    ok = False
                    break
                if any(x != u and _hyp_len(pv, w.verts[x]) > l_max * (grade(float(pv[2])) if grade else 1.0) for x in f):
                    ok = False
                    break
            if not ok:
                continue
            for fi in vf[u]:
                f = w.faces[fi]
                if v in f:
                    w.alive[fi] = False
                else:
                    w.faces[fi] = [v if x == u else x for x in f]
            touched |= {u, v} | ring_u | ring_v
            count += 1
            break
    return count


def _angle_at(p, a, b) -> float:
    u, v = a - p, b - p
    c = float(u @ v) / (np.linalg.norm(u) * np.linalg.norm(v) + 1e-300)
    return math.acos(max(-1.0, min(1.0, c)))


def _flip_edges(w: _Work) -> int:
    em = w.edge_map()
    touched, count = set(), 0
    for (a, b), fs in sorted(em.items()):
        if len(fs) != 2 or fs[0] in touched or fs[1] in touched:
            continue
        f0, f1 = w.faces[fs[0]], w.faces[fs[1]]
        c, d = _opposite(f0, a, b), _opposite(f1, a, b)
        if (min(c, d), max(c, d)) in em:
            continue
        P = w.verts
        if _angle_at(P[c], P[a], P[b]) + _angle_at(P[d], P[a], P[b]) <= math.pi + 1e-9:
            continue
        # orient: f0 contains a->b or b->a
        k = f0.index(a)
        if f0[(k + 1) % 3] == b:
            new0, new1 = [a, d, c], [b, c, d]
        else:
            new0, new1 = [b, d, c], [a, c, d]
        n_old = w.normal(f0) + w.normal(f1)
        if w.normal(new0) @ n_old <= 0 or w.normal(new1) @ n_old <= 0:
            continue
        w.faces[fs[0]], w.faces[fs[1]] = new0, new1
        touched.update(fs)
        em[(min(c, d), max(c, d))] = list(fs)
        count += 1
    return count


def _relax(w: _Work, boundary: set, passes: int = 2, rate: float = 0.5) -> None:
    verts = np.array(w.verts)
    faces = np.array([f for f, al in zip(w.faces, w.alive) if al])
    nbrs: dict[int, set] = {}
    for f in faces:
        for k in range(3):
            nbrs.setdefault(int(f[k]), set()).update(int(x) for x in f if x != f[k])
    tmp = TriMesh(verts, faces)
    normals = vertex_normals(tmp)
    for _ in range(passes):
        new = verts.copy()
        for v, ns in nbrs.items():
            if w.fixed[v] or v in boundary:
                continue
            idx = np.fromiter(sorted(ns), dtype=np.int64)
            q = verts[idx]
            # weights balance hyperbolic spacing on height-graded meshes
            wt = 1.0 / np.sqrt(q[:, 2])
            target = (wt[:, None] * q).sum(0) / wt.sum()
            d = target - verts[v]
            d -= (d @ normals[v]) * normals[v]
            new[v] = verts[v] + rate * d
        verts = new
    for i in range(len(w.verts)):
        w.verts[i] = verts[i]


def tangential_relax(m: TriMesh, passes: int = 2, rate: float = 0.5) -> TriMesh:
    """Tangential smoothing of free interior vertices; connectivity is unchanged."""
    w = _Work([v.copy() for v in m.vertices], [list(map(int, f)) for f in m.faces], list(map(bool, m.fixed)))
    _relax(w, set(map(int, m.boundary_vertices())), passes=passes, rate=rate)
    return m.with_vertices(np.array(w.verts))


def remesh(
    m: TriMesh,
    l_min: float = 0.02,
    l_max: float = 0.12,
    passes: int = 3,
    relax: bool = True,
    grade: Callable[[float], float] | None = None,
    max_splits: int = 64,
) -> TriMesh:
    """Split/collapse/flip interior edges toward hyperbolic lengths in ``[l_min, l_max]``.

    With ``grade`` both bounds are multiplied by ``grade(z)`` at the edge midpoint.
    After the passes, long edges are split (without relaxation) until none
    remain or ``max_splits`` sweeps have run.

    Boundary edges and fixed vertices are never modified.  The topology tag and
    Euler characteristic are preserved (checked on exit).
    """
    if not l_min < l_max:
        raise ValueError("requires l_min < l_max")
    chi0 = m.euler_characteristic()
    w = _Work([v.copy() for v in m.vertices], [list(map(int, f)) for f in m.faces], list(map(bool, m.fixed)))
    boundary = set(map(int, m.boundary_vertices()))
    for _ in range(passes):
        n_split = _split_long(w, l_max, grade)
        n_coll = _collapse_short(w, l_min, l_max, grade)
        n_flip = _flip_edges(w)
        if relax:
            _relax(w, boundary)
        if n_split == 0 and n_coll == 0 and n_flip == 0:
            break
    # split-only sweeps so every interior edge ends within the bound (boundary edges are fixed)
    for _ in range(max_splits):
        if _split_long(w, l_max, grade) == 0:
            break
    faces = np.array([f for f, al in zip(w.faces, w.alive) if al], dtype=np.int64)
    used = np.zeros(len(w.verts), dtype=bool)
    used[faces.ravel()] = True
    remap = -np.ones(len(w.verts), dtype=np.int64)
    remap[used] = np.arange(used.sum())
    out = TriMesh(np.array(w.verts)[used], remap[faces], np.array(w.fixed)[used], m.topology)
    if out.euler_characteristic() != chi0:
        raise SolverError("remeshing changed the topology")
    return out
