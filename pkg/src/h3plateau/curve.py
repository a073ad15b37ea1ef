"""Nested circles joined by thin bridges on the boundary plane.

Circle ``C_k`` has radius ``1 + 1/k``.  Bridge ``j`` joins ``C_j`` to
``C_{j+1}`` on the right (x > 0) when ``j`` is odd and on the left when ``j`` is
even; its two straight segments run at ``y = ±w_j`` with
``w_j = (eps_j - del_j) / 2``.  The tunnel footprint circles for bridge ``j``
sit just outside that corridor.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstructionError
from .hyperbolic import Circle2


def radius(k: int) -> float:
    if k < 1:
        raise ValueError(f"circle index must be >= 1, got {k}")
    return 1.0 + 1.0 / k


def scale(k: int) -> float:
    """Size ratio of tunnel/bridge ``k`` relative to tunnel 1: ``2 / (k (k+1))``."""
    if k < 1:
        raise ValueError(f"tunnel index must be >= 1, got {k}")
    return 2.0 / (k * (k + 1))


@dataclass(frozen=True)
class CurveParams:
    eps1: float = 0.108
    del1: float = 0.10
    samples_per_unit: int = 64
    n: int = 1

    def validate(self) -> "CurveParams":
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not self.del1 > 0:
            raise ConstructionError(f"requires 0 < del1 (got del1={self.del1})")
        if not self.del1 < self.eps1:
            raise ConstructionError(f"requires del1 < eps1 (got del1={self.del1}, eps1={self.eps1})")
        if not 2 * self.del1 < radius(1) - radius(2):
            raise ConstructionError(f"requires 2*del1 < r1 - r2 = 0.5 (got 2*del1={2 * self.del1})")
        if self.samples_per_unit < 16:
            raise ConstructionError(f"requires samples_per_unit >= 16 (got {self.samples_per_unit})")
        return self


def side_of(k: int) -> str:
    return "right" if k % 2 == 1 else "left"


def band_halfwidth(j: int, params: CurveParams) -> float:
    s = scale(j)
    return 0.5 * s * (params.eps1 - params.del1)


@dataclass(frozen=True)
class TunnelFootprint:
    index: int
    plus_circle: Circle2
    minus_circle: Circle2
    side: str

    @property
    def circles(self) -> tuple[Circle2, Circle2]:
        return (self.plus_circle, self.minus_circle)


def eta_circles(k: int, params: CurveParams) -> TunnelFootprint:
    s = scale(k)
    sign = 1.0 if k % 2 == 1 else -1.0
    cx = sign * 0.5 * (radius(k) + radius(k + 1))
    eps, dl = s * params.eps1, s * params.del1
    return TunnelFootprint(k, Circle2((cx, eps), dl), Circle2((cx, -eps), dl), side_of(k))


def gap_endpoints(k: int, params: CurveParams, side: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Endpoints ``(plus, minus)`` of the gap cut from ``C_k`` on ``side``.

    The gap on the right of ``C_k`` belongs to the odd bridge touching it and
    the gap on the left to the even one, so the band width is taken from that
    bridge.  ``side`` defaults to the side of bridge ``k``.
    """
    side = side or side_of(k)
    if side == "right":
        j = k if k % 2 == 1 else k - 1
    else:
        j = k if k % 2 == 0 else k - 1
    if j < 1:
        raise ConstructionError(f"circle {k} has no gap on the {side}")
    w = band_halfwidth(j, params)
    r = radius(k)
    if w >= r:
        raise ConstructionError(f"requires band half-width < r_{k} (got {w} >= {r})")
    x = math.sqrt(r * r - w * w) * (1.0 if side == "right" else -1.0)
    return np.array([x, w]), np.array([x, -w])


@dataclass
class GammaCurve:
    """Closed polyline; ``tags[i]`` labels the edge from vertex ``i`` to ``i+1``.

    Tags are ``("arc", k)`` or ``("bridge", j, "+" | "-")``.
    """

    vertices: np.ndarray
    tags: list[tuple]
    n: int
    params: CurveParams = field(default_factory=CurveParams)

    def __len__(self) -> int:
        return len(self.vertices)

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices, np.roll(self.vertices, -1, axis=0)

    def tag_strings(self) -> list[str]:
        return [":".join(str(t) for t in tag) for tag in self.tags]


def _arc(r: float, a0: float, a1: float, direction: int, spu: int, full: bool = False) -> np.ndarray:
    if full:
        sweep = 2 * math.pi
    elif direction > 0:
        sweep = (a1 - a0) % (2 * math.pi)
    else:
        sweep = (a0 - a1) % (2 * math.pi)
    count = max(int(math.ceil(r * sweep * spu)), 2)
    t = a0 + direction * sweep * np.arange(count) / count
    return np.column_stack([r * np.cos(t), r * np.sin(t)])


def _segment(a: np.ndarray, b: np.ndarray, spu: int) -> np.ndarray:
    count = max(int(math.ceil(np.linalg.norm(b - a) * spu)), 8)
    t = np.arange(count)[:, None] / count
    return a[None, :] * (1 - t) + b[None, :] * t


def _angle(p: np.ndarray) -> float:
    return math.atan2(p[1], p[0])


def build_gamma(params: CurveParams) -> GammaCurve:
    """Sample the closed curve made of ``C_1 .. C_n`` joined by ``n - 1`` bridges.

    The walk descends from ``C_1`` to ``C_n`` along the lower ("-") bridge
    segments and climbs back along the upper ("+") ones; odd circles run
    counter-clockwise and even circles clockwise.
    """
    params.validate()
    n, spu = params.n, params.samples_per_unit
    pieces: list[np.ndarray] = []
    tags: list[tuple] = []

    def add(points: np.ndarray, tag: tuple) -> None:
        pieces.append(points)
        tags.extend([tag] * len(points))

    if n == 1:
        add(_arc(radius(1), 0.0, 0.0, 1, spu, full=True), ("arc", 1))
        return GammaCurve(np.vstack(pieces), tags, n, params)

    def gap(k: int, j: int) -> tuple[np.ndarray, np.ndarray]:
        return gap_endpoints(k, params, side_of(j))

    # descend: lower arcs, then lower bridge segments
    for k in range(1, n + 1):
        direction = 1 if k % 2 == 1 else -1
        r = radius(k)
        if k == 1:
            plus, minus = gap(1, 1)
            add(_arc(r, _angle(plus), _angle(minus), direction, spu), ("arc", 1))
        elif k < n:
            _, in_minus = gap(k, k - 1)
            _, out_minus = gap(k, k)
            add(_arc(r, _angle(in_minus), _angle(out_minus), direction, spu), ("arc", k))
        else:
            in_plus, in_minus = gap(k, k - 1)
            add(_arc(r, _angle(in_minus), _angle(in_plus), direction, spu), ("arc", k))
            break
        _, a = gap(k, k)
        _, b = gap(k + 1, k)
        add(_segment(a, b, spu), ("bridge", k, "-"))
    # climb: upper bridge segments, then upper arcs of the middle circles
    for k in range(n - 1, 0, -1):
        a, _ = gap(k + 1, k)
        b, _ = gap(k, k)
        add(_segment(a, b, spu), ("bridge", k, "+"))
        if k > 1:
            direction = 1 if k % 2 == 1 else -1
            out_plus, _ = gap(k, k)
            in_plus, _ = gap(k, k - 1)
            add(_arc(radius(k), _angle(out_plus), _angle(in_plus), direction, spu), ("arc", k))
    curve = GammaCurve(np.vstack(pieces), tags, n, params)
    for j in range(1, n):
        fp = eta_circles(j, params)
        w = band_halfwidth(j, params)
        inner = fp.plus_circle.center[1] - fp.plus_circle.radius
        if not w < inner:
            raise ConstructionError(f"requires bridge corridor half-width < eps_{j} - del_{j} (got {w} >= {inner})")
    return curve


def winding_number(vertices, pt, tol: float = 1e-12) -> int:
    """Winding number of the closed polyline about ``pt`` by angle summation."""
    v = np.asarray(vertices, dtype=float) - np.asarray(pt, dtype=float)
    a, b = v, np.roll(v, -1, axis=0)
    if point_polyline_distance(vertices, pt) <= tol:
        raise ValueError("point lies on the curve")
    ang = np.arctan2(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0], np.einsum("ij,ij->i", a, b))
    return int(round(ang.sum() / (2 * math.pi)))


def point_polyline_distance(vertices, pt) -> float:
    """Minimum distance from ``pt`` to the closed polyline's edges."""
    a = np.asarray(vertices, dtype=float)
    b = np.roll(a, -1, axis=0)
    return float(_point_segment_distances(np.asarray(pt, dtype=float), a, b).min())


def _point_segment_distances(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = b - a
    L2 = np.einsum("ij,ij->i", d, d)
    t = np.where(L2 > 0, np.einsum("ij,ij->i", p - a, d) / np.where(L2 > 0, L2, 1), 0.0)
    t = np.clip(t, 0.0, 1.0)
    proj = a + t[:, None] * d
    return np.linalg.norm(p - proj, axis=1)


def is_simple(vertices, chunk: int = 512) -> bool:
    """Brute-force check that no two non-adjacent edges of the closed polyline meet."""
    a = np.asarray(vertices, dtype=float)
    b = np.roll(a, -1, axis=0)
    m = len(a)
    lo, hi = np.minimum(a, b), np.maximum(a, b)

    def orient(p, q, r):
        return (q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1]) - (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0])

    for s in range(0, m, chunk):
        i = np.arange(s, min(s + chunk, m))
        ai, bi = a[i][:, None, :], b[i][:, None, :]
        box = (
            (lo[i][:, None, 0] <= hi[None, :, 0])
            & (lo[None, :, 0] <= hi[i][:, None, 0])
            & (lo[i][:, None, 1] <= hi[None, :, 1])
            & (lo[None, :, 1] <= hi[i][:, None, 1])
        )
        jj = np.arange(m)[None, :]
        ii = i[:, None]
        adjacent = (jj == ii) | (jj == (ii + 1) % m) | (jj == (ii - 1) % m)
        cand = box & ~adjacent
        if not cand.any():
            continue
        ci, cj = np.nonzero(cand)
        p1, p2 = a[i[ci]], b[i[ci]]
        q1, q2 = a[cj], b[cj]
        d1 = orient(q1, q2, p1)
        d2 = orient(q1, q2, p2)
        d3 = orient(p1, p2, q1)
        d4 = orient(p1, p2, q2)
        proper = (d1 * d2 <= 0) & (d3 * d4 <= 0)
        if proper.any():
            return False
    return True


def clearance(curve: GammaCurve | np.ndarray, footprints: list[TunnelFootprint]) -> float:
    """Minimum distance from the curve to the union of footprint disks (negative if it enters one)."""
    if not footprints:
        return math.inf
    verts = curve.vertices if isinstance(curve, GammaCurve) else np.asarray(curve)
    a, b = verts, np.roll(verts, -1, axis=0)
    best = math.inf
    for fp in footprints:
        for c in fp.circles:
            d = _point_segment_distances(np.asarray(c.center), a, b).min() - c.radius
            best = min(best, float(d))
    return best


def all_footprints(n: int, params: CurveParams) -> list[TunnelFootprint]:
    """Footprints of the tunnels under bridges ``1 .. n-1`` plus tunnel ``n``."""
    return [eta_circles(k, params) for k in range(1, n + 1)]


def curve_summary(curve: GammaCurve) -> dict:
    fps = all_footprints(curve.n, curve.params)
    return {
        "n": curve.n,
        "eps1": curve.params.eps1,
        "del1": curve.params.del1,
        "winding": winding_number(curve.vertices, (0.0, 0.0)),
        "simple": bool(is_simple(curve.vertices)),
        "clearance": round(clearance(curve, fps), 12),
    }


def curve_text(curve: GammaCurve) -> str:
    lines = [f"{x:.12f} {y:.12f} {tag}" for (x, y), tag in zip(curve.vertices, curve.tag_strings())]
    return "\n".join(lines) + "\n"


def curve_json(curve: GammaCurve) -> str:
    return json.dumps(curve_summary(curve), indent=2, sort_keys=True) + "\n"
