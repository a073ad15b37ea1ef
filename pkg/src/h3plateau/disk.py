"""Initial cone meshes and the constrained disk solve.

The initial disk follows the cone from ``p = (0, 0, 1)`` over each circle of
the boundary curve: sheet ``k`` is the cone over the arcs of ``C_k`` closed by
straight chords across its gaps, and consecutive sheets are joined by flat
strips spanning the bridges at the boundary height.  The strips run under the
tunnel necks, which the literal cone over the bridges would cut through.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .hyperbolic import geodesic_through, hyp_distance
from .mesh import TriMesh, orient_consistently, remesh
from .solver import ConstraintSet, SolveReport, SolverConfig, descend, restore_feasibility

APEX = np.array([0.0, 0.0, 1.0])
# per-iteration step cap as a fraction of the shortest incident edge (prevents folds)
DISK_EDGE_STEP = 0.05
# normals are re-based this often in the polish phase
POLISH_REBASE = 100
# shape phase ends when this many remesh cycles fail to lower the best area
STALL_CYCLES = 4


def _chains(tags: list) -> list[tuple[tuple, np.ndarray]]:
    """Maximal runs of equal edge tags as ``(tag, vertex indices incl. the run's end vertex)``."""
    n = len(tags)
    starts = [i for i in range(n) if tags[i] != tags[i - 1]]
    if not starts:
        return [(tags[0], np.arange(n + 1) % n)]
    return [(tags[s], np.arange(s, e + 1) % n) for s, e in zip(starts, starts[1:] + [starts[0] + n])]


def _stitch(a_idx: np.ndarray, a_par: np.ndarray, b_idx: np.ndarray, b_par: np.ndarray) -> list:
    """Triangulate the band between two closed rings given cyclic parameters in ``[0, 1)``."""
    faces = []
    na, nb = len(a_idx), len(b_idx)
    i = j = 0
    while i < na or j < nb:
        ai, an = a_idx[i % na], a_idx[(i + 1) % na]
        bj, bn = b_idx[j % nb], b_idx[(j + 1) % nb]
        pa = a_par[(i + 1) % na] + (1.0 if i + 1 >= na else 0.0)
        pb = b_par[(j + 1) % nb] + (1.0 if j + 1 >= nb else 0.0)
        if j >= nb or (i < na and pa <= pb):
            faces.append([ai, an, bj])
            i += 1
        else:
            faces.append([ai, bn, bj])
            j += 1
    return faces


def _sheet(rim_pts: np.ndarray, rim_idx: np.ndarray, apex: np.ndarray, target: float, start: int, grade=None):
    """Cone sheet over a closed rim; rings about ``target`` apart, ring spacing ``target * grade(z)``."""
    K = len(rim_pts)
    if apex is None:
        # top of the hemisphere fitted to the rim: rays then lie close to that plane
        apex = np.array([0.0, 0.0, math.sqrt(float(np.mean(np.sum(rim_pts**2, axis=1))))])
    arcs = [geodesic_through(apex, q) for q in rim_pts]
    lengths = np.array([a.length() for a in arcs])
    # ring fractions marched along the longest ray with the graded step
    far = arcs[int(np.argmax(lengths))]
    L = float(lengths.max())
    s, marks = 0.0, []
    while True:
        z = float(far.at_length(np.array([s]))[0, 2])
        s += target * (grade(z) if grade else 1.0)
        if s >= L - 0.5 * target:
            break
        marks.append(s)
    ts = np.array(marks) / L if marks else np.array([0.5])
    n_rings = len(ts) + 1
    grid = np.stack([a.at_length(ts * L) for a, L in zip(arcs, lengths)], axis=1)  # rings x K x 3
    par = np.arange(K) / K
    verts = [apex[None, :]]
    rows_idx, rows_par = [], []
    nxt = start + 1
    for r in range(n_rings - 1):
        ring = grid[r]
        step = float(np.median(hyp_distance(ring, np.roll(ring, -1, axis=0))))
        local = target * (grade(float(ring[:, 2].mean())) if grade else 1.0)
        stride = 1
        while stride * 2 * step <= local and K // (stride * 2) >= 6:
            stride *= 2
        sel = np.arange(0, K, stride)
        verts.append(ring[sel])
        rows_idx.append(np.arange(nxt, nxt + len(sel)))
        rows_par.append(par[sel])
        nxt += len(sel)
    rows_idx.append(np.asarray(rim_idx))
    rows_par.append(par)
    first = rows_idx[0]
    faces = [[start, first[i], first[(i + 1) % len(first)]] for i in range(len(first))]
    for r in range(len(rows_idx) - 1):
        faces += _stitch(rows_idx[r], rows_par[r], rows_idx[r + 1], rows_par[r + 1])
    return np.vstack(verts), faces, nxt


@dataclass
class ConeDisk:
    mesh: TriMesh
    sheets: int


def cone_disk_mesh(
    vertices: np.ndarray, tags: list, target: float, apex: np.ndarray | None = None, grade=None
) -> ConeDisk:
    """Disk mesh spanning a cone curve (``tags`` as produced for the boundary curve).

    With ``apex=None`` each sheet is coned from the top of the hemisphere
    fitted to its rim, so the sheets start nearly totally geodesic and
    pairwise disjoint.  Passing ``APEX`` cones every sheet from ``p``.
    """
    V = np.asarray(vertices, dtype=float)
    h = float(V[:, 2].mean())
    chains = _chains(tags)
    verts = [V]
    faces: list = []
    nxt = len(V)
    arcs: dict[int, list[np.ndarray]] = {}
    bridges: dict[tuple[int, str], np.ndarray] = {}
    for tag, idx in chains:
        if tag[0] == "arc":
            arcs.setdefault(tag[1], []).append(idx)
        else:
            bridges[(tag[1], tag[2])] = idx
    if len(chains) == 1:
        idx = chains[0][1][:-1]
        sv, sf, nxt = _sheet(V[idx], idx, apex, target, nxt, grade)
        faces += sf
        verts.append(sv)
        f = orient_consistently(np.array(faces))
        fixed = np.zeros(nxt, dtype=bool)
        fixed[: len(V)] = True
        return ConeDisk(TriMesh(np.vstack(verts), f, fixed, "disk"), 1)

    def chord(a: int, b: int) -> tuple[np.ndarray, np.ndarray]:
        """Interior points of the straight chord from vertex a to vertex b at height h."""
        nonlocal nxt
        length = float(np.linalg.norm(V[b] - V[a])) / h
        m = max(1, int(math.ceil(length / (target * (grade(h) if grade else 1.0)))))
        t = np.arange(1, m)[:, None] / m
        pts = V[a][None, :] * (1 - t) + V[b][None, :] * t
        ids = np.arange(nxt, nxt + len(pts))
        nxt += len(pts)
        verts.append(pts)
        return ids, pts

    n_bridges = max(j for j, _ in bridges)
    chord_ids: dict[tuple[int, int], np.ndarray] = {}  # (circle, bridge) -> chord from "-" end to "+" end
    for j in range(1, n_bridges + 1):
        minus, plus = bridges[(j, "-")], bridges[(j, "+")]
        # gap on C_j: from the start of the "-" chain to the end of the "+" chain
        ids, _ = chord(minus[0], plus[-1])
        chord_ids[(j, j)] = np.concatenate([[minus[0]], ids, [plus[-1]]])
        ids, _ = chord(minus[-1], plus[0])
        chord_ids[(j + 1, j)] = np.concatenate([[minus[-1]], ids, [plus[0]]])

    n_circles = n_bridges + 1
    for k in range(1, n_circles + 1):
        pieces = sorted(arcs[k], key=lambda c: int(c[0]))
        if k == 1:
            c = pieces[0]
            ring = np.concatenate([c[:-1], chord_ids[(1, 1)][:-1]])
        elif k == n_circles:
            c = pieces[0]
            ring = np.concatenate([c[:-1], chord_ids[(k, k - 1)][::-1][:-1]])
        else:
            lower = next(p for p in pieces if p[-1] == chord_ids[(k, k)][0])
            upper = next(p for p in pieces if p[0] == chord_ids[(k, k)][-1])
            ring = np.concatenate([lower[:-1], chord_ids[(k, k)][:-1], upper[:-1], chord_ids[(k, k - 1)][::-1][:-1]])
        allv = np.vstack(verts)
        sv, sf, nxt = _sheet(allv[ring], ring, apex, target, nxt, grade)
        verts.append(sv)
        faces += sf

    allv = np.vstack(verts)
    for j in range(1, n_bridges + 1):
        minus = bridges[(j, "-")]
        plus = bridges[(j, "+")][::-1]
        a_end, b_end = chord_ids[(j, j)], chord_ids[(j + 1, j)]
        m = len(a_end) - 1
        if len(b_end) - 1 != m:
            # equalise chord resolution by using the coarser count on both ends
            raise ValueError("mismatched chord resolution across a bridge")
        L = len(minus) - 1
        grid = np.empty((L + 1, m + 1), dtype=np.int64)
        grid[0] = a_end
        grid[L] = b_end
        grid[:, 0] = minus
        grid[:, m] = plus
        for i in range(1, L):
            for c in range(1, m):
                t = c / m
                allv = np.vstack([allv, (1 - t) * allv[minus[i]] + t * allv[plus[i]]])
                grid[i, c] = nxt
                nxt += 1
        for i in range(L):
            for c in range(m):
                a, b, d, e = grid[i, c], grid[i, c + 1], grid[i + 1, c], grid[i + 1, c + 1]
                faces += [[a, b, e], [a, e, d]]
    f = orient_consistently(np.array(faces))
    fixed = np.zeros(nxt, dtype=bool)
    fixed[: len(V)] = True
    return ConeDisk(TriMesh(allv, f, fixed, "disk"), n_circles)


def boundary_spacing(vertices: np.ndarray) -> float:
    v = np.asarray(vertices, dtype=float)
    return float(np.median(hyp_distance(v, np.roll(v, -1, axis=0))))


def height_grade(cfg: SolverConfig, vertices: np.ndarray) -> Callable[[float], float]:
    """Edge-length factor ``1/sqrt(z)``, clipped to ``[1, cap]``.

    The cap matches the target length at the boundary height to the boundary
    spacing (the boundary itself is never refined), so near-floor regions,
    which hold most of the hyperbolic area, are not over-resolved.
    """
    cap = max(1.0, 1.2 * boundary_spacing(vertices) / cfg.l_max)

    def grade(z: float) -> float:
        return min(cap, max(1.0, 1.0 / math.sqrt(max(z, 1e-12))))

    return grade


def solve_disk(
    boundary,
    c: ConstraintSet | None,
    cfg: SolverConfig,
    progress: Callable[[int, float], None] | None = None,
    shape_tol: float = 1e-5,
    start: str = "cone",
) -> tuple[TriMesh, SolveReport]:
    """Least-area disk spanning ``boundary`` (a cone curve) inside the constraint set.

    Two phases share the ``cfg.max_iter`` budget.  The shape phase alternates
    ``cfg.remesh_every`` descent iterations with remeshing until the last
    ``STALL_CYCLES`` cycles fail to lower the best area by ``shape_tol``
    (relative).  The polish phase
    then runs the full penalty schedule on fixed connectivity, since every
    remesh perturbs the discrete gradient.  Boundary vertices never move.

    ``start`` picks the initial sheets: ``"fitted"`` cones each sheet from
    the top of its fitted hemisphere, ``"cone"`` cones every sheet from ``p``.
    """
    if start not in ("fitted", "cone"):
        raise ValueError(f"unknown start {start!r}")
    c = c or ConstraintSet()
    run = replace(cfg, normal_steps=True, mass_metric=True, edge_step=min(cfg.edge_step, DISK_EDGE_STEP))
    grade = height_grade(cfg, boundary.vertices)
    apex = APEX if start == "cone" else None
    disk = cone_disk_mesh(boundary.vertices, boundary.tags, target=run.l_max, apex=apex, grade=grade)
    mesh = remesh(disk.mesh, run.l_min, run.l_max, passes=4, grade=grade)
    mesh = restore_feasibility(mesh, c)
    moved = getattr(mesh, "moved_count", 0)

    used = 0
    history: list[float] = []
    cycle = max(1, run.remesh_every or 50)
    shape = replace(run, penalty_rounds=1, remesh_every=0)
    areas: list[float] = []
    report = None
    while used < run.max_iter:
        budget = min(cycle, run.max_iter - used)
        mesh, report = descend(mesh, c, replace(shape, max_iter=budget))
        used += report.iterations
        history += report.merit_history
        areas.append(report.area)
        if progress is not None:
            progress(used, report.area)
        if report.reason != "max_iter":
            break
        if len(areas) > STALL_CYCLES and min(areas[:-STALL_CYCLES]) - min(areas[-STALL_CYCLES:]) < shape_tol * areas[-1]:
            break
        mesh = remesh(mesh, run.l_min, run.l_max, passes=2, grade=grade)

    if used < run.max_iter and report.reason != "converged":
        polish = replace(run, max_iter=run.max_iter - used, remesh_every=POLISH_REBASE)
        mesh, report = descend(mesh, c, polish)
        used += report.iterations
        history += report.merit_history
    report.iterations = used
    report.merit_history = history
    report.moved_vertices = moved
    n_fixed = len(boundary.vertices)
    if not np.array_equal(mesh.vertices[:n_fixed], np.asarray(boundary.vertices, dtype=float)):
        raise AssertionError("boundary vertices moved")
    return mesh, report
