"""Constrained least-area surfaces by line-search descent on triangle meshes."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import NeckPinch, SolverError
from .hyperbolic import geodesic_through, hyp_distance
from .mesh import (
    TriMesh,
    area_and_gradient,
    mean_curvature,
    mesh_area,
    orient_consistently,
    remesh,
    vertex_areas,
    vertex_normals,
)

logger = logging.getLogger("h3plateau")


@dataclass
class SolverConfig:
    grad_tol: float = 1e-6
    max_iter: int = 3000
    penalty_initial: float = 1e3
    penalty_growth: float = 10.0
    penalty_rounds: int = 3
    l_min: float = 0.02
    l_max: float = 0.12
    remesh_every: int = 50
    quad_order: int = 3
    armijo: float = 1e-4
    backtrack: float = 0.5
    memory: int = 12
    max_hyp_step: float = 0.25
    edge_step: float = math.inf
    mass_metric: bool = False
    pinch_tol: float = 1e-3
    pinch_ratio: float = 5e-2
    stall_pinch_ratio: float = 0.25
    feas_tol: float = 1e-6
    normal_steps: bool = False

    def validate(self) -> "SolverConfig":
        for name in ("grad_tol", "max_iter", "penalty_initial", "penalty_growth", "penalty_rounds", "l_min", "l_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"solver field {name} must be positive")
        if not self.l_min < self.l_max:
            raise ValueError("requires l_min < l_max")
        if not 0 < self.backtrack < 1 or not 0 < self.armijo < 1:
            raise ValueError("line-search parameters must lie in (0, 1)")
        return self


@dataclass
class SolveReport:
    area: float
    iterations: int
    grad_rms: float
    feasibility: float
    reason: str
    merit_history: list = field(default_factory=list, repr=False)
    moved_vertices: int = 0

    @property
    def converged(self) -> bool:
        return self.reason == "converged"

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("merit_history")
        for k in ("area", "grad_rms", "feasibility"):
            d[k] = float(f"{d[k]:.12g}")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


@dataclass
class ConstraintSet:
    """Floor ``z >= floor``, inside the hemisphere of radius ``outer_radius``, outside tunnels.

    Tunnels are any objects offering ``signed_distance(points) -> (sd, normals)``
    (positive outside) and ``contains(points) -> bool array``.
    """

    floor: float = 0.0
    outer_radius: float = math.inf
    tunnels: Sequence = ()
    margin: float = 0.0

    def violations(self, pts: np.ndarray) -> np.ndarray:
        v = np.maximum(self.floor - pts[:, 2], 0.0)
        if math.isfinite(self.outer_radius):
            v = np.maximum(v, np.linalg.norm(pts, axis=1) - self.outer_radius)
        for t in self.tunnels:
            sd, _ = t.signed_distance(pts)
            v = np.maximum(v, -sd)
        return v

    def feasibility(self, pts: np.ndarray) -> float:
        return float(self.violations(pts).max(initial=0.0))

    def penalty(self, pts: np.ndarray) -> tuple[float, np.ndarray]:
        """Quadratic penalty ``sum max(0, violation)^2`` and its gradient."""
        g = np.zeros_like(pts)
        low = np.maximum(self.floor - pts[:, 2], 0.0)
        val = float(low @ low)
        g[:, 2] -= 2 * low
        if math.isfinite(self.outer_radius):
            r = np.linalg.norm(pts, axis=1)
            out = np.maximum(r - self.outer_radius, 0.0)
            val += float(out @ out)
            mask = out > 0
            g[mask] += (2 * out[mask] / r[mask])[:, None] * pts[mask]
        for t in self.tunnels:
            sd, nrm = t.signed_distance(pts)
            inside = np.maximum(-sd, 0.0)
            val += float(inside @ inside)
            mask = inside > 0
            g[mask] -= 2 * inside[mask, None] * nrm[mask]
        return val, g


def restore_feasibility(m: TriMesh, c: ConstraintSet, max_passes: int = 50) -> TriMesh:
    """Project violating free vertices back into the domain.

    Floor and outer hemisphere are exact projections; tunnel violations are
    pushed along the outward normal of the nearest tunnel surface point.
    """
    v = m.vertices.copy()
    free = m.free
    moved = np.zeros(len(v), dtype=bool)
    push = 1e-9
    for _ in range(max_passes):
        changed = False
        low = free & (v[:, 2] < c.floor)
        if low.any():
            v[low, 2] = c.floor
            moved |= low
            changed = True
        if math.isfinite(c.outer_radius):
            r = np.linalg.norm(v, axis=1)
            out = free & (r > c.outer_radius)
            if out.any():
                v[out] *= (c.outer_radius / r[out])[:, None]
                moved |= out
                changed = True
        for t in c.tunnels:
            sd, nrm = t.signed_distance(v)
            bad = free & (sd < 0)
            if bad.any():
                v[bad] += (-sd[bad] + push)[:, None] * nrm[bad]
                moved |= bad
                changed = True
        if not changed:
            out = m.with_vertices(v)
            out.moved_count = int(moved.sum())
            return out
    raise SolverError("feasibility restoration did not converge")


Monitor = Callable[[np.ndarray, int], Optional[str]]


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(x * x))) if len(x) else 0.0


def descend(
    m: TriMesh,
    c: ConstraintSet | None,
    cfg: SolverConfig,
    monitor: Monitor | None = None,
    remesher: Callable[[TriMesh], TriMesh] | None = None,
) -> tuple[TriMesh, SolveReport]:
    """Minimise area + penalty over the free vertices.

    Directions come from limited-memory BFGS, preconditioned per vertex by the
    inverse metric ``z^2``; steps are accepted by Armijo backtracking, so the
    merit value never increases.  The penalty weight grows geometrically over
    ``cfg.penalty_rounds`` rounds that share the ``cfg.max_iter`` budget.
    """
    cfg.validate()
    c = c or ConstraintSet()
    mesh = m.copy()
    history: list[float] = []
    it_total = 0
    reason = "max_iter"
    grad_rms = math.inf
    per_round = max(1, cfg.max_iter // cfg.penalty_rounds)

    for rnd in range(cfg.penalty_rounds):
        weight = cfg.penalty_initial * cfg.penalty_growth**rnd
        budget = cfg.max_iter - it_total if rnd == cfg.penalty_rounds - 1 else per_round
        mesh, used, reason, grad_rms, hist = _lbfgs_round(mesh, c, cfg, weight, budget, monitor, remesher, it_total)
        history += hist
        it_total += used
        if reason in ("pinched", "stalled_hard"):
            break
        feas = c.feasibility(mesh.vertices[mesh.free]) if mesh.free.any() else 0.0
        if reason == "converged" and feas <= cfg.feas_tol:
            break
    if reason == "stalled_hard":
        reason = "stalled"
    # exact projection for whatever small violation the penalty leaves
    mesh = restore_feasibility(mesh, c)
    free = mesh.free
    feas = c.feasibility(mesh.vertices[free]) if free.any() else 0.0
    report = SolveReport(
        area=mesh_area(mesh, cfg.quad_order),
        iterations=it_total,
        grad_rms=grad_rms,
        feasibility=feas,
        reason=reason,
        merit_history=history,
    )
    return mesh, report


def _lbfgs_round(mesh, c, cfg, weight, budget, monitor, remesher, it_offset):
    faces = mesh.faces
    free = mesh.free
    verts = mesh.vertices.copy()

    def frame(v):
        # normal-only steps move each free vertex along a frozen unit normal
        if not cfg.normal_steps:
            return v[free].copy(), None
        return v[free].copy(), vertex_normals(TriMesh(v, faces))[free]

    def local_scale(v):
        # lumped hyperbolic mass (for the metric) and shortest incident edge (for the step cap)
        tmp = TriMesh(v, faces)
        if cfg.mass_metric:
            mass = vertex_areas(tmp, cfg.quad_order)[free]
            mass = mass / max(float(np.mean(mass)), 1e-300)
        else:
            mass = np.ones(int(free.sum()))
        e = tmp.edges()
        L = hyp_distance(v[e[:, 0]], v[e[:, 1]])
        short = np.full(len(v), np.inf)
        np.minimum.at(short, e[:, 0], L)
        np.minimum.at(short, e[:, 1], L)
        cap = np.minimum(cfg.max_hyp_step, cfg.edge_step * short[free])
        return np.maximum(mass, 1e-12), cap

    base, nrm = frame(verts)
    mass, cap = local_scale(verts)

    def pos(t):
        return base + t if nrm is None else base + t[:, None] * nrm

    def merit(t):
        x = pos(t)
        v = verts.copy()
        v[free] = x
        if np.any(v[:, 2] <= 0):
            return math.inf, None, None
        a, g = area_and_gradient(v, faces, cfg.quad_order)
        p, gp = c.penalty(x)
        gx = g[free] + weight * gp
        gt = gx if nrm is None else np.einsum("ij,ij->i", gx, nrm)
        return a + weight * p, gt, gx

    def hyp_rms(t, gx):
        x = pos(t)
        return _rms(x[:, 2] * np.linalg.norm(gx if nrm is None else np.einsum("ij,ij->i", gx, nrm)[:, None], axis=1))

    t = np.zeros_like(base) if nrm is None else np.zeros(len(base))
    f, g, gx = merit(t)
    hist = [f]
    S: list[np.ndarray] = []
    Y: list[np.ndarray] = []
    reason = "max_iter"
    grad_rms = hyp_rms(t, gx)
    it = 0
    while it < budget:
        if grad_rms <= cfg.grad_tol:
            reason = "converged"
            break
        z = pos(t)[:, 2]
        D = (z**2 / mass)[:, None] if nrm is None else z**2 / mass
        d = _two_loop(g, S, Y, D)
        slope = float(np.sum(g * d))
        if not slope < 0:
            S.clear()
            Y.clear()
            d = -D * g
            slope = float(np.sum(g * d))
        hyp = (np.linalg.norm(d, axis=1) if nrm is None else np.abs(d)) / z
        alpha = min(1.0, float(np.min(cap / np.maximum(hyp, 1e-300))))
        accepted = False
        while alpha * float(hyp.max()) > 1e-14:
            tn = t + alpha * d
            fn, gn, gxn = merit(tn)
            if fn <= f + cfg.armijo * alpha * slope:
                accepted = True
                break
            alpha *= cfg.backtrack
        if not accepted:
            if S:
                S.clear()
                Y.clear()
                continue
            reason = "stalled"
            break
        s, y = tn - t, gn - g
        if float(np.sum(s * y)) > 1e-16:
            S.append(s)
            Y.append(y)
            if len(S) > cfg.memory:
                S.pop(0)
                Y.pop(0)
        t, f, g, gx = tn, fn, gn, gxn
        hist.append(f)
        grad_rms = hyp_rms(t, gx)
        it += 1
        if monitor is not None:
            verts[free] = pos(t)
            msg = monitor(verts, it_offset + it)
            if msg:
                reason = msg
                break
        if cfg.remesh_every and (it_offset + it) % cfg.remesh_every == 0 and (remesher is not None or nrm is not None):
            verts[free] = pos(t)
            if remesher is not None:
                mesh = remesher(TriMesh(verts, faces, mesh.fixed, mesh.topology))
                faces, free, verts = mesh.faces, mesh.free, mesh.vertices.copy()
            base, nrm = frame(verts)
            mass, cap = local_scale(verts)
            t = np.zeros_like(base) if nrm is None else np.zeros(len(base))
            f, g, gx = merit(t)
            hist.append(f)
            S.clear()
            Y.clear()
            grad_rms = hyp_rms(t, gx)
    verts[free] = pos(t)
    return TriMesh(verts, faces, mesh.fixed, mesh.topology), it, reason, grad_rms, hist


def _two_loop(g, S, Y, D):
    q = g.copy()
    alphas = []
    for s, y in zip(reversed(S), reversed(Y)):
        rho = 1.0 / float(np.sum(y * s))
        a = rho * float(np.sum(s * q))
        alphas.append((rho, a))
        q -= a * y
    if S:
        s, y = S[-1], Y[-1]
        gamma = float(np.sum(s * y)) / float(np.sum(y * D * y))
    else:
        gamma = 1.0
    r = gamma * D * q
    for (s, y), (rho, a) in zip(zip(S, Y), reversed(alphas)):
        b = rho * float(np.sum(y * r))
        r += s * (a - b)
    return -r


# ---------------------------------------------------------------- annulus


@dataclass
class AnnulusMesh:
    mesh: TriMesh
    rings: list  # vertex index arrays from the plus circle to the minus circle


def ruled_annulus(c_plus: np.ndarray, c_minus: np.ndarray, n_rings: int) -> AnnulusMesh:
    """Annulus ruled by geodesic arcs joining ``c_plus[i]`` to ``c_minus[i]``.

    Both boundary loops are ``(M, 3)`` arrays with matching sample order.
    Interior rings are placed at equal hyperbolic arclength along each arc.
    """
    M = len(c_plus)
    rows = [c_plus]
    arcs = [geodesic_through(a, b) for a, b in zip(c_plus, c_minus)]
    lengths = np.array([arc.length() for arc in arcs])
    for k in range(1, n_rings + 1):
        t = k / (n_rings + 1)
        rows.append(np.array([arc.at_length(t * L) for arc, L in zip(arcs, lengths)]))
    rows.append(c_minus)
    verts = np.vstack(rows)
    R = len(rows)
    faces = []
    for r in range(R - 1):
        for i in range(M):
            a, b = r * M + i, r * M + (i + 1) % M
            c_, d = a + M, b + M
            # diagonals mirror about the middle strip so paired boundary data give a symmetric mesh
            if 2 * r < R - 1:
                faces += [[a, b, d], [a, d, c_]]
            else:
                faces += [[a, b, c_], [b, d, c_]]
    fixed = np.zeros(len(verts), dtype=bool)
    fixed[:M] = True
    fixed[-M:] = True
    mesh = TriMesh(verts, orient_consistently(np.array(faces)), fixed, "annulus")
    return AnnulusMesh(mesh, [np.arange(r * M, (r + 1) * M) for r in range(R)])


def ring_lengths(verts: np.ndarray, rings: list) -> np.ndarray:
    out = []
    for ring in rings:
        p, q = verts[ring], verts[np.roll(ring, -1)]
        d = np.linalg.norm(p - q, axis=1)
        out.append(float(np.sum(2 * np.arcsinh(d / (2 * np.sqrt(p[:, 2] * q[:, 2]))))))
    return np.array(out)


def solve_annulus(
    c_plus: np.ndarray, c_minus: np.ndarray, cfg: SolverConfig, n_rings: int = 17
) -> tuple[TriMesh, SolveReport]:
    """Least-area annulus spanning two space circles (given as sample loops).

    Vertices move along their normals only (re-based every ``remesh_every``
    iterations); tangential sliding carries no geometry and degrades the mesh.
    Raises :class:`NeckPinch` when the thinnest cross-section ring's hyperbolic
    circumference falls below ``cfg.pinch_tol`` or below ``cfg.pinch_ratio``
    times its starting value, or when the descent stops unconverged with that
    ring below ``cfg.stall_pinch_ratio`` times its start.
    """
    ann = ruled_annulus(np.asarray(c_plus, float), np.asarray(c_minus, float), n_rings)
    run = replace(cfg, normal_steps=True, penalty_rounds=1, remesh_every=cfg.remesh_every or 100)
    start = float(ring_lengths(ann.mesh.vertices, ann.rings[1:-1]).min())
    limit = max(cfg.pinch_tol, cfg.pinch_ratio * start)
    state = {"min": start}

    def monitor(verts, it):
        state["min"] = float(ring_lengths(verts, ann.rings[1:-1]).min())
        if not np.all(np.isfinite(verts)) or state["min"] < limit:
            return "pinched"
        return None

    mesh, report = descend(ann.mesh, None, run, monitor=monitor)
    if report.reason == "pinched":
        raise NeckPinch(
            f"annulus neck collapsed (min circumference {state['min']:.3g} < {limit:.3g})",
            state["min"],
            report,
        )
    final = float(ring_lengths(mesh.vertices, ann.rings[1:-1]).min())
    if not report.converged and final < cfg.stall_pinch_ratio * start:
        # a neck that is still shrinking when the descent gives up is collapsing, not settling
        raise NeckPinch(
            f"annulus neck still collapsing at {report.reason} (min circumference {final:.3g}, started at {start:.3g})",
            final,
            report,
        )
    mesh.rings = ann.rings
    return mesh, report


def annulus_residuals(mesh: TriMesh, quad_order: int = 3) -> np.ndarray:
    """Interior |H| values of a solved annulus (normal component of the area gradient)."""
    h = mean_curvature(mesh, quad_order, signed=True)
    return np.abs(h[np.isfinite(h)])
