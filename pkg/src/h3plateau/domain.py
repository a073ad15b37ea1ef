"""Tunnels, cone curves and the truncated solve domain.

Tunnel ``k`` sits over its footprint circles ``eta_k^±``: the two half-balls
under the hemispheres ``P_k^±`` joined by a least-area annulus neck whose
boundary circles ``beta_k^±`` are cut from those hemispheres.  Tunnel 1 is
solved numerically; tunnel ``k`` is its image under the boundary similarity
``phi_k``.  The solve domain for ``E_n`` is the part of the half-ball of
radius 3 above the horosphere ``z = 1/c_n`` and outside every tunnel.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import Delaunay

from .curve import CurveParams, GammaCurve, build_gamma, eta_circles, radius, scale
from .errors import ConstructionError, NeckPinch, SolverError
from .hyperbolic import GeodesicPlane, Horosphere, Similarity, apply_isometry, geodesic_through, plane_from_circle
from .hyperbolic import cone_points_at_height
from .mesh import TriMesh, mean_curvature, orient_consistently
from .solver import SolverConfig, SolveReport, solve_annulus
from .spatial import TriangleSoup, points_inside_closed

CONE_POINT = np.array([0.0, 0.0, 1.0])
OUTER_RADIUS = 3.0


@dataclass(frozen=True)
class TunnelParams:
    """How tunnel 1's neck is cut and meshed.

    The cut disk ``D^±`` is the hyperbolic disk of radius ``cut_radius`` in
    ``P^±`` centred at the foot of the common perpendicular of ``P^+`` and
    ``P^-``.  Setting ``z_d`` instead cuts ``P^±`` by the horosphere
    ``z = z_d``.
    """

    cut_radius: float = 1.0
    z_d: float | None = None
    ring_samples: int = 48
    rings: int = 17
    cap_rings: int = 4

    def validate(self, params: CurveParams) -> "TunnelParams":
        if self.z_d is not None and not 0 < self.z_d < params.del1:
            raise ConstructionError(f"requires 0 < z_d < del1 (got z_d={self.z_d}, del1={params.del1})")
        if self.z_d is None and not self.cut_radius > 0:
            raise ConstructionError(f"requires cut_radius > 0 (got {self.cut_radius})")
        if self.ring_samples < 8 or self.rings < 3 or self.cap_rings < 1:
            raise ConstructionError("tunnel mesh needs ring_samples >= 8, rings >= 3, cap_rings >= 1")
        return self


def transport_isometry(n: int) -> Similarity:
    """Similarity carrying tunnel 1 to tunnel ``n``: scale ``sigma_n``, half-turn for even ``n``."""
    if n < 1:
        raise ValueError(f"tunnel index must be >= 1, got {n}")
    if n == 1:
        return Similarity()
    s = scale(n)
    angle = 0.0 if n % 2 == 1 else math.pi
    sign = 1.0 if n % 2 == 1 else -1.0
    target = np.array([sign * 0.5 * (radius(n) + radius(n + 1)), 0.0])
    src = np.array([0.5 * (radius(1) + radius(2)), 0.0])
    rot = Similarity(1.0, angle).rotation
    t = target - s * (rot @ src)
    return Similarity(s, angle, (float(t[0]), float(t[1])))


def perpendicular_foot(params: CurveParams) -> np.ndarray:
    """Foot on ``P_1^+`` of the common perpendicular of ``P_1^+`` and ``P_1^-``.

    The perpendicular is the semicircle over ``x = cx`` of radius
    ``a = sqrt(eps^2 - del^2)`` (orthogonal to both hemispheres).
    """
    eps, dl = params.eps1, params.del1
    cx = 0.5 * (radius(1) + radius(2))
    a = math.sqrt(eps * eps - dl * dl)
    return np.array([cx, a * a / eps, a * dl / eps])


def plane_distance(params: CurveParams) -> float:
    """Hyperbolic distance between ``P_1^+`` and ``P_1^-``."""
    return math.acosh(2.0 * (params.eps1 / params.del1) ** 2 - 1.0)


def cut_circles(params: CurveParams, tp: TunnelParams) -> tuple[np.ndarray, np.ndarray]:
    """Sample loops of ``beta_1^+`` and its mirror image ``beta_1^-`` (paired by index)."""
    params.validate()
    tp.validate(params)
    cx = 0.5 * (radius(1) + radius(2))
    eps, dl = params.eps1, params.del1
    M = tp.ring_samples
    th = np.linspace(0.0, 2 * np.pi, M, endpoint=False)
    if tp.z_d is not None:
        rr = math.sqrt(dl * dl - tp.z_d * tp.z_d)
        plus = np.column_stack([cx + rr * np.cos(th), eps + rr * np.sin(th), np.full(M, tp.z_d)])
    else:
        f = perpendicular_foot(params)
        # hyperbolic sphere about f: Euclidean centre (f_x, f_y, f_z cosh r), radius f_z sinh r
        c1 = np.array([f[0], f[1], f[2] * math.cosh(tp.cut_radius)])
        r1 = f[2] * math.sinh(tp.cut_radius)
        c2 = np.array([cx, eps, 0.0])
        d = float(np.linalg.norm(c1 - c2))
        nrm = (c1 - c2) / d
        t = (d * d + dl * dl - r1 * r1) / (2 * d)
        if not abs(t) < dl:
            raise ConstructionError("cut disk does not meet the hemisphere; reduce cut_radius")
        cc = c2 + t * nrm
        rc = math.sqrt(dl * dl - t * t)
        u = np.cross(nrm, [1.0, 0.0, 0.0])
        u /= np.linalg.norm(u)
        w = np.cross(nrm, u)
        plus = cc + rc * (np.outer(np.cos(th), u) + np.outer(np.sin(th), w))
    if plus[:, 2].min() <= 0:
        raise ConstructionError("cut circle reaches the boundary plane; reduce cut_radius")
    minus = plus * np.array([1.0, -1.0, 1.0])
    return plus, minus


def _cap_disk(center: np.ndarray, ring_idx: np.ndarray, ring: np.ndarray, n_rings: int, start: int):
    """Geodesic polar mesh of the plane disk bounded by ``ring`` about ``center``.

    Returns new vertices (numbered from ``start``) and faces that reuse the
    ring's own indices on the outer row.
    """
    M = len(ring)
    arcs = [geodesic_through(center, q) for q in ring]
    lengths = np.array([a.length() for a in arcs])
    verts = [center[None, :]]
    rows = [np.array([start])]
    nxt = start + 1
    for r in range(1, n_rings):
        t = r / n_rings
        verts.append(np.array([a.at_length(t * L) for a, L in zip(arcs, lengths)]))
        rows.append(np.arange(nxt, nxt + M))
        nxt += M
    rows.append(np.asarray(ring_idx))
    faces = [[rows[0][0], rows[1][i], rows[1][(i + 1) % M]] for i in range(M)]
    for r in range(1, n_rings):
        a, b = rows[r], rows[r + 1]
        for i in range(M):
            j = (i + 1) % M
            faces += [[a[i], b[i], b[j]], [a[i], b[j], a[j]]]
    return np.vstack(verts), faces


def _signed_volume(v: np.ndarray, f: np.ndarray) -> float:
    return float(np.einsum("ij,ij->i", v[f[:, 0]], np.cross(v[f[:, 1]], v[f[:, 2]])).sum() / 6.0)


def _outward(v: np.ndarray, f: np.ndarray) -> np.ndarray:
    f = orient_consistently(f)
    return f if _signed_volume(v, f) > 0 else f[:, ::-1].copy()


def _inside_polygon(poly: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Even-odd test of 2D points against a closed polygon."""
    x, y = pts[:, 0][:, None], pts[:, 1][:, None]
    a, b = poly[None, :, :], np.roll(poly, -1, axis=0)[None, :, :]
    cond = (a[..., 1] > y) != (b[..., 1] > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = a[..., 0] + (y - a[..., 1]) * (b[..., 0] - a[..., 0]) / (b[..., 1] - a[..., 1])
    return (np.sum(cond & (x < xint), axis=1) % 2) == 1


def _plane_piece(center: np.ndarray, rho: float, cut: np.ndarray, cap_h: float, n_bottom: int):
    """Hemisphere piece outside the cut circle and above ``z = cap_h``.

    Triangulated as a graph over its projection (Delaunay, then trimmed),
    so its two boundary loops are exactly the cut samples and a bottom ring.
    """
    rb = math.sqrt(rho * rho - cap_h * cap_h)
    th = np.linspace(0.0, 2 * np.pi, n_bottom, endpoint=False)
    bottom = np.column_stack([center[0] + rb * np.cos(th), center[1] + rb * np.sin(th)])
    step = 2 * np.pi * rb / n_bottom
    g = np.arange(-rb, rb + step, step)
    X, Y = np.meshgrid(g, g)
    grid = np.column_stack([X.ravel() + center[0], Y.ravel() + center[1]])
    keep = np.linalg.norm(grid - center[:2], axis=1) < rb - 0.6 * step
    grid = grid[keep]
    poly = cut[:, :2]
    grid = grid[~_inside_polygon(poly, grid)]
    cut_step = float(np.linalg.norm(np.diff(np.vstack([poly, poly[:1]]), axis=0), axis=1).max())
    dmin = np.min(np.linalg.norm(grid[:, None, :] - poly[None, :, :], axis=2), axis=1)
    grid = grid[dmin > 0.6 * max(step, cut_step)]
    pts2 = np.vstack([poly, bottom, grid])
    tri = Delaunay(pts2).simplices
    cen = pts2[tri].mean(axis=1)
    ok = (~_inside_polygon(poly, cen)) & (np.linalg.norm(cen - center[:2], axis=1) < rb)
    tri = tri[ok]
    z_grid = np.sqrt(np.maximum(rho * rho - np.sum((grid - center[:2]) ** 2, axis=1), 0.0))
    verts = np.vstack([cut, np.column_stack([bottom, np.full(n_bottom, cap_h)]), np.column_stack([grid, z_grid])])
    return verts, tri, len(cut), n_bottom


@dataclass
class TunnelSolid:
    """Closed barrier solid ``T_k``: half-balls under ``P_k^±`` plus the neck region.

    ``neck`` is the annulus ``A_k``; ``closed`` is ``A_k`` closed by the cut
    disks ``D_k^±`` (outward oriented) and bounds the neck region; ``surface``
    is the boundary ``(P^+ - D^+) ∪ (P^- - D^-) ∪ A`` closed by flat caps at
    ``cap_height`` and is used for export.
    """

    index: int
    similarity: Similarity
    plus_plane: GeodesicPlane
    minus_plane: GeodesicPlane
    neck: TriMesh
    closed: TriMesh
    surface: TriMesh
    cap_height: float
    report: SolveReport | None = None
    _soup: TriangleSoup = field(init=False, repr=False)

    def __post_init__(self):
        n_neck = len(self.neck.faces)
        # distances use the neck faces only; the cut disks are interior to the solid
        self._soup = TriangleSoup(self.closed.vertices, self.closed.faces[:n_neck])
        self._lo = self.closed.vertices.min(axis=0)
        self._hi = self.closed.vertices.max(axis=0)

    @property
    def planes(self) -> tuple[GeodesicPlane, GeodesicPlane]:
        return (self.plus_plane, self.minus_plane)

    @property
    def max_height(self) -> float:
        return float(max(self.surface.vertices[:, 2].max(), self.plus_plane.radius))

    @property
    def neck_low(self) -> float:
        """Lowest point of the neck annulus."""
        return float(self.neck.vertices[:, 2].min())

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.minimum(self._lo, [min(p.center[0] - p.radius for p in self.planes), min(p.center[1] - p.radius for p in self.planes), 0.0])
        hi = np.maximum(self._hi, [max(p.center[0] + p.radius for p in self.planes), max(p.center[1] + p.radius for p in self.planes), max(p.radius for p in self.planes)])
        return lo, hi

    def _ball_sd(self, pts: np.ndarray):
        out = []
        for p in self.planes:
            d = pts - np.array([p.center[0], p.center[1], 0.0])
            r = np.linalg.norm(d, axis=1)
            out.append((r - p.radius, d / np.maximum(r, 1e-300)[:, None]))
        return out

    def _in_neck(self, pts: np.ndarray) -> np.ndarray:
        inside = np.zeros(len(pts), dtype=bool)
        box = np.all((pts >= self._lo) & (pts <= self._hi), axis=1)
        if box.any():
            inside[box] = points_inside_closed(self.closed.vertices, self.closed.faces, pts[box])
        return inside

    def contains(self, pts) -> np.ndarray:
        """Inside test: in either half-ball or in the neck region (ray parity)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        inside = np.zeros(len(pts), dtype=bool)
        for sd, _ in self._ball_sd(pts):
            inside |= sd < 0
        rest = ~inside
        if rest.any():
            inside[rest] = self._in_neck(pts[rest])
        return inside

    def signed_distance(self, pts, cutoff: float | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Euclidean signed distance (positive outside) and outward unit normals.

        Exact for the half-balls; for the neck it is exact within ``cutoff``
        of the neck's bounding box and a positive lower bound beyond it.
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        (sp, npl), (sm, nmi) = self._ball_sd(pts)
        sd = np.minimum(sp, sm)
        nrm = np.where((sp <= sm)[:, None], npl, nmi)
        cutoff = self.plus_plane.radius if cutoff is None else cutoff
        bd = self._soup.box_distance(pts)
        near = bd <= cutoff
        neck_sd = bd.copy()
        neck_n = np.zeros_like(pts)
        if near.any():
            q = pts[near]
            d, cp, fi = self._soup.closest(q)
            inside = self._in_neck(q)
            diff = q - cp
            ln = np.linalg.norm(diff, axis=1)
            n_out = np.where((ln > 1e-14)[:, None], diff / np.maximum(ln, 1e-300)[:, None], self._soup.normals[fi])
            n_out = np.where(inside[:, None], -n_out, n_out)
            neck_sd[near] = np.where(inside, -d, d)
            neck_n[near] = n_out
        use = neck_sd < sd
        sd = np.where(use, neck_sd, sd)
        nrm = np.where(use[:, None], neck_n, nrm)
        return sd, nrm

    def transported(self, s: Similarity, index: int) -> "TunnelSolid":
        def move(m: TriMesh) -> TriMesh:
            return m.with_vertices(apply_isometry(s, m.vertices))

        planes = [plane_from_circle(s.apply_circle(_circle(p))) for p in self.planes]
        return TunnelSolid(
            index=index,
            similarity=s @ self.similarity,
            plus_plane=planes[0],
            minus_plane=planes[1],
            neck=move(self.neck),
            closed=move(self.closed),
            surface=move(self.surface),
            cap_height=s.scale * self.cap_height,
            report=self.report,
        )


def _circle(p: GeodesicPlane):
    from .hyperbolic import Circle2

    return Circle2(p.center, p.radius)


_TUNNEL_CACHE: dict = {}


def _solve_tunnel_one(params: CurveParams, tp: TunnelParams, cfg: SolverConfig) -> TunnelSolid:
    key = (params.eps1, params.del1, tp, repr(cfg))
    if key in _TUNNEL_CACHE:
        return _TUNNEL_CACHE[key]
    plus, minus = cut_circles(params, tp)
    try:
        neck, report = solve_annulus(plus, minus, cfg, n_rings=tp.rings)
    except NeckPinch as e:
        raise NeckPinch(
            f"no least-area annulus between the cut circles at eps1={params.eps1}, del1={params.del1}: "
            f"{e}; move the footprint circles closer (smaller eps1/del1) or enlarge the cut disks",
            e.min_circumference,
            e.report,
        ) from e
    if report.reason != "converged":
        raise SolverError(
            f"tunnel neck annulus did not converge ({report.reason}, grad_rms={report.grad_rms:.3g}) "
            f"at eps1={params.eps1}, del1={params.del1}"
        )
    M = tp.ring_samples
    nv = neck.n_vertices
    ring_p, ring_m = np.arange(M), np.arange(nv - M, nv)
    f_plus = perpendicular_foot(params)
    f_minus = f_plus * np.array([1.0, -1.0, 1.0])
    vp, fp = _cap_disk(f_plus, ring_p, plus, tp.cap_rings, nv)
    vm, fm = _cap_disk(f_minus, ring_m, minus, tp.cap_rings, nv + len(vp))
    cv = np.vstack([neck.vertices, vp, vm])
    cf = _outward(cv, np.vstack([neck.faces, np.array(fp), np.array(fm)]))
    closed = TriMesh(cv, cf, topology="sphere")
    closed.check()
    neck_oriented = TriMesh(neck.vertices, cf[: len(neck.faces)], neck.fixed, "annulus")

    fps = eta_circles(1, params)
    p_plus, p_minus = plane_from_circle(fps.plus_circle), plane_from_circle(fps.minus_circle)
    cap_h = 0.25 * min(float(neck.vertices[:, 2].min()), float(plus[:, 2].min()))
    surface = _tunnel_surface(neck_oriented, p_plus, p_minus, plus, minus, cap_h, M)
    solid = TunnelSolid(1, Similarity(), p_plus, p_minus, neck_oriented, closed, surface, cap_h, report)
    _TUNNEL_CACHE[key] = solid
    return solid


def _tunnel_surface(neck, p_plus, p_minus, plus, minus, cap_h, M) -> TriMesh:
    verts = [neck.vertices]
    faces = [neck.faces]
    nv = neck.n_vertices
    offset = nv
    for plane, cut, ring in ((p_plus, plus, np.arange(M)), (p_minus, minus, np.arange(nv - M, nv))):
        c = np.array([plane.center[0], plane.center[1], 0.0])
        pv, pt, ncut, nb = _plane_piece(c, plane.radius, cut, cap_h, 4 * M)
        remap = np.empty(len(pv), dtype=np.int64)
        remap[:ncut] = ring
        remap[ncut:] = offset + np.arange(len(pv) - ncut)
        verts.append(pv[ncut:])
        faces.append(remap[pt])
        bottom = offset + np.arange(nb)
        centre = offset + len(pv) - ncut
        verts.append(np.array([[c[0], c[1], cap_h]]))
        faces.append(np.array([[centre, bottom[(i + 1) % nb], bottom[i]] for i in range(nb)]))
        offset = centre + 1
    v = np.vstack(verts)
    f = _outward(v, np.vstack(faces))
    return TriMesh(v, f, topology="sphere")


def build_tunnel(
    n: int, params: CurveParams | None = None, solver_cfg: SolverConfig | None = None, tparams: TunnelParams | None = None
) -> TunnelSolid:
    """Tunnel ``n``: solved for ``n = 1``, transported by ``phi_n`` otherwise.

    Raises :class:`NeckPinch` when the neck annulus does not exist.
    """
    if n < 1:
        raise ValueError(f"tunnel index must be >= 1, got {n}")
    params = params or CurveParams()
    tp = tparams or TunnelParams()
    cfg = solver_cfg or SolverConfig()
    one = _solve_tunnel_one(params, tp, cfg)
    if n == 1:
        return one
    return one.transported(transport_isometry(n), n)


def is_inside_tunnel(p, t: TunnelSolid) -> bool:
    return bool(t.contains(np.asarray(p, dtype=float).reshape(1, 3))[0])


@dataclass
class ConeCurve:
    """``alpha_n^i``: the cone over ``Gamma_n`` from ``(0, 0, 1)`` cut at height ``1/i``."""

    n: int
    i: int
    vertices: np.ndarray
    tags: list

    @property
    def height(self) -> float:
        return 1.0 / self.i


def cone_curve(n: int, i: int, params: CurveParams | None = None, gamma: GammaCurve | None = None) -> ConeCurve:
    if i <= 1:
        raise ValueError(f"cone height index must be >= 2, got {i}")
    params = replace(params or CurveParams(), n=n)
    gamma = gamma or build_gamma(params)
    pts = cone_points_at_height(CONE_POINT, gamma.vertices, 1.0 / i)
    pts[:, 2] = 1.0 / i
    return ConeCurve(n, i, pts, list(gamma.tags))


def corridor_clearance(t: TunnelSolid, params: CurveParams, samples: int = 200) -> float:
    """Distance from bridge ``t.index``'s boundary segments to tunnel ``t``."""
    k = t.index
    from .curve import gap_endpoints, side_of

    a_plus, a_minus = gap_endpoints(k, params, side_of(k))
    b_plus, b_minus = gap_endpoints(k + 1, params, side_of(k))
    s = np.linspace(0.0, 1.0, samples)[:, None]
    pts = np.vstack([a_plus * (1 - s) + b_plus * s, a_minus * (1 - s) + b_minus * s])
    pts = np.column_stack([pts, np.full(len(pts), 1e-9)])
    sd, _ = t.signed_distance(pts)
    return float(sd.min())


def default_margin(n: int, tunnels: list[TunnelSolid], params: CurveParams) -> float:
    """A quarter of the smallest bridge-corridor clearance among the bridged tunnels."""
    relevant = [t for t in tunnels if t.index <= max(1, n - 1)]
    if not relevant:
        relevant = [build_tunnel(1, params)]
    return 0.25 * min(corridor_clearance(t, params) for t in relevant)


def curve_clearance(curve: ConeCurve, tunnels: list[TunnelSolid], cutoff: float | None = None) -> float:
    """Minimum distance from the cone curve to the tunnels (lower bound beyond ``cutoff``)."""
    if not tunnels:
        return math.inf
    return float(min(t.signed_distance(curve.vertices, cutoff)[0].min() for t in tunnels))


def compute_cn(
    n: int,
    params: CurveParams | None = None,
    margin: float | None = None,
    tunnels: list[TunnelSolid] | None = None,
    cap: int = 4000,
) -> int:
    """Least ``i >= 2`` such that ``alpha_n^j`` keeps ``margin`` from every tunnel for all ``j >= i``.

    "All ``j``" is checked up to a horizon of ``max(4 i, 4 / z_low)`` where
    ``z_low`` is the lowest neck point among the tunnels: below that height
    the cone curve has passed under every neck and only approaches the
    boundary curve, whose clearance exceeds the margin.
    """
    params = replace(params or CurveParams(), n=n)
    if tunnels is None:
        tunnels = [build_tunnel(k, params) for k in range(1, n + 1)]
    if margin is None:
        margin = default_margin(n, tunnels, params)
    if not margin > 0:
        raise ValueError("margin must be positive")
    gamma = build_gamma(params)
    z_low = min((t.neck_low for t in tunnels), default=1.0)
    ok: dict[int, bool] = {}

    def clear(i: int) -> bool:
        if i not in ok:
            ok[i] = curve_clearance(cone_curve(n, i, params, gamma), tunnels, cutoff=2 * margin) >= margin
        return ok[i]

    horizon = int(math.ceil(4.0 / z_low))
    if horizon > cap:
        raise ConstructionError(f"verification horizon {horizon} exceeds the search cap {cap}")
    # scan downward from the horizon: c_n is one past the highest failing index
    last_bad = 1
    for j in range(horizon, 1, -1):
        if not clear(j):
            last_bad = j
            break
    c = last_bad + 1
    if any(not clear(j) for j in range(c, 4 * c + 1)):
        raise ConstructionError("cone clearance is not monotone beyond the verification horizon")
    return c


@dataclass
class DomainSpec:
    n: int
    c_n: int
    floor: float
    tunnels: list
    margin: float
    boundary: ConeCurve
    outer_radius: float = OUTER_RADIUS

    @property
    def pieces(self) -> dict:
        return {
            "outer hemisphere": GeodesicPlane("hemisphere", (0.0, 0.0), self.outer_radius),
            "floor horosphere": Horosphere(self.floor),
            "tunnel surfaces": [t.neck for t in self.tunnels],
        }

    def constraints(self):
        from .solver import ConstraintSet

        return ConstraintSet(self.floor, self.outer_radius, list(self.tunnels), self.margin)


def is_inside_domain(p, dom: DomainSpec) -> bool:
    p = np.asarray(p, dtype=float).reshape(1, 3)
    if p[0, 2] < dom.floor or float(np.linalg.norm(p)) > dom.outer_radius:
        return False
    return not any(t.contains(p)[0] for t in dom.tunnels)


def _tunnels_meeting(floor: float, top1: float, start: int) -> int:
    k = start
    while scale(k + 1) * top1 > floor:
        k += 1
    return k


def build_domain(
    n: int,
    params: CurveParams | None = None,
    solver_cfg: SolverConfig | None = None,
    tparams: TunnelParams | None = None,
    margin: float | None = None,
) -> DomainSpec:
    """Floor ``1/c_n``, outer hemisphere of radius 3, and every tunnel reaching above the floor."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    params = replace(params or CurveParams(), n=n)
    one = build_tunnel(1, params, solver_cfg, tparams)
    top1 = one.max_height
    count = max(1, n)
    while True:
        tunnels = [build_tunnel(k, params, solver_cfg, tparams) for k in range(1, count + 1)]
        m = margin if margin is not None else default_margin(n, tunnels, params)
        c = compute_cn(n, params, m, tunnels)
        floor = 1.0 / c
        k_max = _tunnels_meeting(floor, top1, 0) if top1 > floor else 0
        if k_max <= count:
            break
        count = k_max
    tunnels = [t for t in tunnels if t.index <= k_max]
    boundary = cone_curve(n, c, params)
    dom = DomainSpec(n, c, floor, tunnels, m, boundary)
    if not is_inside_domain(CONE_POINT, dom):
        raise ConstructionError("cone point (0, 0, 1) is not inside the domain")
    return dom


def mean_curvature_sample(piece, p, tol: float = 1e-6) -> float:
    """Mean curvature of a boundary piece at ``p`` (horosphere 1, geodesic plane 0, meshes discrete)."""
    p = np.asarray(p, dtype=float)
    if isinstance(piece, Horosphere):
        if abs(p[2] - piece.height) > tol:
            raise ValueError("point is not on the horosphere")
        return 1.0
    if isinstance(piece, GeodesicPlane):
        if piece.kind == "hemisphere":
            off = abs(math.sqrt((p[0] - piece.center[0]) ** 2 + (p[1] - piece.center[1]) ** 2 + p[2] ** 2) - piece.radius)
        else:
            off = abs(float(piece.signed_value(p[None, :])[0]))
        if off > tol:
            raise ValueError("point is not on the plane")
        return 0.0
    if isinstance(piece, TriMesh):
        d = np.linalg.norm(piece.vertices - p, axis=1)
        i = int(np.argmin(d))
        if d[i] > tol:
            raise ValueError("point is not a vertex of the mesh")
        h = mean_curvature(piece, signed=True)[i]
        if not np.isfinite(h):
            raise ValueError("mean curvature is undefined at boundary vertices")
        return float(h)
    raise TypeError(f"unsupported boundary piece {type(piece).__name__}")


def mean_convexity_report(dom: DomainSpec, tol: float = 0.02) -> dict:
    """Sampled mean curvature of each boundary piece with respect to the inward normal."""
    neck_h = []
    for t in dom.tunnels:
        h = mean_curvature(t.neck, signed=True)
        neck_h.append(h[np.isfinite(h)])
    neck = np.concatenate(neck_h) if neck_h else np.empty(0)
    report = {
        "floor_horosphere": 1.0,
        "outer_hemisphere": 0.0,
        "tunnel_planes": 0.0,
        "neck_min": round(float(neck.min()), 9) if len(neck) else None,
        "neck_max_abs": round(float(np.abs(neck).max()), 9) if len(neck) else None,
        "tolerance": tol,
    }
    report["mean_convex"] = bool(len(neck) == 0 or neck.min() >= -tol)
    return report


def domain_summary(dom: DomainSpec) -> dict:
    cl = curve_clearance(dom.boundary, dom.tunnels)
    return {
        "n": dom.n,
        "c_n": dom.c_n,
        "floor": round(dom.floor, 12),
        "tunnel_count": len(dom.tunnels),
        "min_clearance": round(cl, 12) if math.isfinite(cl) else None,
        "mean_convexity_report": mean_convexity_report(dom),
    }


def domain_json(dom: DomainSpec) -> str:
    return json.dumps(domain_summary(dom), indent=2, sort_keys=True) + "\n"
