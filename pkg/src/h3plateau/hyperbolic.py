"""Hyperbolic 3-space in the upper half-space model.

Points are ``(x, y, z)`` with ``z > 0``; the metric is ``|dx|^2 / z^2``.
Everything here is a pure function of immutable values, and most helpers
accept stacked numpy arrays as well as single points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

TAU_ON = 1e-10


@dataclass(frozen=True)
class UpperHalfPoint:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not self.z > 0:
            raise ValueError(f"height must be positive, got z={self.z}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


@dataclass(frozen=True)
class BoundaryPoint:
    """A point of the sphere at infinity; ``at_infinity`` marks the point ∞."""

    x: float = 0.0
    y: float = 0.0
    at_infinity: bool = False


@dataclass(frozen=True)
class Circle2:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")

    def sample(self, count: int) -> np.ndarray:
        t = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
        cx, cy = self.center
        return np.column_stack([cx + self.radius * np.cos(t), cy + self.radius * np.sin(t)])


class Side(Enum):
    NEGATIVE = -1
    ON = 0
    POSITIVE = 1


@dataclass(frozen=True)
class GeodesicPlane:
    """Hemisphere over a boundary circle, or a vertical half-plane over a line.

    For ``kind == "vertical"`` the plane is ``{p : (p_xy - point) . normal = 0}``
    where ``normal`` is the unit normal of the boundary line.
    """

    kind: str
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0
    point: tuple[float, float] = (0.0, 0.0)
    direction: tuple[float, float] = (1.0, 0.0)

    def __post_init__(self):
        if self.kind not in ("hemisphere", "vertical"):
            raise ValueError(f"unknown plane kind {self.kind!r}")
        if self.kind == "hemisphere" and not self.radius > 0:
            raise ValueError("hemisphere radius must be positive")

    @property
    def apex(self) -> np.ndarray:
        if self.kind != "hemisphere":
            raise ValueError("vertical planes have no apex")
        return np.array([self.center[0], self.center[1], self.radius])

    def signed_value(self, pts) -> np.ndarray:
        """Implicit function, negative on the side containing the origin's footprint.

        For hemispheres this is ``|p - c|^2 - rho^2`` (negative inside).
        """
        p = np.asarray(pts, dtype=float)
        if self.kind == "hemisphere":
            d = p[..., :2] - np.asarray(self.center)
            return np.einsum("...i,...i->...", d, d) + p[..., 2] ** 2 - self.radius**2
        ux, uy = self.direction
        n = np.array([-uy, ux]) / math.hypot(ux, uy)
        val = (p[..., :2] - np.asarray(self.point)) @ n
        # orient so that the boundary origin has a negative value
        origin_val = -np.asarray(self.point) @ n
        return val if origin_val <= 0 else -val

    def sample(self, n_theta: int = 32, n_phi: int = 16, z_min: float = 1e-3) -> np.ndarray:
        """Points on a hemisphere at heights >= ``z_min``."""
        if self.kind != "hemisphere":
            raise ValueError("sampling is only provided for hemispheres")
        rho = self.radius
        phi = np.linspace(math.asin(min(z_min / rho, 1.0)), np.pi / 2, n_phi)
        th = np.linspace(0, 2 * np.pi, n_theta, endpoint=False)
        P, T = np.meshgrid(phi, th, indexing="ij")
        out = np.stack(
            [
                self.center[0] + rho * np.cos(P) * np.cos(T),
                self.center[1] + rho * np.cos(P) * np.sin(T),
                rho * np.sin(P),
            ],
            axis=-1,
        )
        return out.reshape(-1, 3)


@dataclass(frozen=True)
class Horosphere:
    """The horosphere ``z = height`` centred at ∞."""

    height: float

    def __post_init__(self):
        if not self.height > 0:
            raise ValueError("horosphere height must be positive")


@dataclass(frozen=True)
class Similarity:
    """Boundary similarity ``w -> scale * R(angle) w + t``, extended to H^3."""

    scale: float = 1.0
    angle: float = 0.0
    translation: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("similarity scale must be positive")

    @property
    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.angle), math.sin(self.angle)
        # exact values for the half-turn used by the even tunnels
        if self.angle == math.pi:
            c, s = -1.0, 0.0
        return np.array([[c, -s], [s, c]])

    def __matmul__(self, other: "Similarity") -> "Similarity":
        """Composition ``self ∘ other``."""
        t = self.scale * (self.rotation @ np.asarray(other.translation)) + np.asarray(self.translation)
        return Similarity(self.scale * other.scale, self.angle + other.angle, (float(t[0]), float(t[1])))

    def inverse(self) -> "Similarity":
        rinv = self.rotation.T
        t = -(rinv @ np.asarray(self.translation)) / self.scale
        return Similarity(1.0 / self.scale, -self.angle, (float(t[0]), float(t[1])))

    def apply_boundary(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        return self.scale * (w @ self.rotation.T) + np.asarray(self.translation)

    def apply_circle(self, c: Circle2) -> Circle2:
        center = self.apply_boundary(np.asarray(c.center))
        return Circle2((float(center[0]), float(center[1])), self.scale * c.radius)


@dataclass(frozen=True)
class GeodesicArc:
    """Geodesic through ``start`` towards ``end`` inside a vertical plane.

    ``vertical`` arcs are the lines ``(x0, y0, t)``.  Otherwise the carrying
    circle has horizontal centre ``center`` (on the boundary plane, z = 0) and
    Euclidean radius ``radius``; ``direction`` is the unit horizontal vector of
    the vertical plane.
    """

    start: np.ndarray
    end: np.ndarray
    vertical: bool
    center: np.ndarray
    radius: float
    direction: np.ndarray

    def _local(self, pts) -> np.ndarray:
        """Horizontal coordinate of points along ``direction`` from ``center``."""
        return (np.asarray(pts)[..., :2] - self.center) @ self.direction

    def point_at_height(self, z: float) -> np.ndarray:
        """Point of the arc between ``start`` and ``end`` at height ``z``.

        Heights above the circle's top are rejected.  On the rising branch the
        point on the ``end`` side of the apex is returned.
        """
        if self.vertical:
            return np.array([self.center[0], self.center[1], z])
        if z > self.radius:
            raise ValueError("height above the carrying circle")
        u_end = self._local(self.end)
        u = math.copysign(math.sqrt(self.radius**2 - z**2), u_end) if u_end != 0 else 0.0
        xy = self.center + u * self.direction
        return np.array([xy[0], xy[1], z])

    def at_length(self, s) -> np.ndarray:
        """Points at hyperbolic arclength ``s`` from ``start`` towards ``end``."""
        scalar = np.ndim(s) == 0
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if self.vertical:
            z0 = self.start[2]
            sign = 1.0 if self.end[2] >= z0 else -1.0
            zs = z0 * np.exp(sign * s)
            out = np.column_stack([np.full_like(zs, self.center[0]), np.full_like(zs, self.center[1]), zs])
            return out[0] if scalar else out
        phi0 = math.atan2(self.start[2], self._local(self.start))
        u_end = self._local(self.end)
        if self.end[2] > 0:
            phi1 = math.atan2(self.end[2], u_end)
        else:
            phi1 = 0.0 if u_end > 0 else math.pi
        sign = 1.0 if phi1 > phi0 else -1.0
        # along the carrying circle ds = dphi / sin(phi)
        g0 = math.log(math.tan(phi0 / 2))
        phi = 2 * np.arctan(np.exp(g0 + sign * s))
        u = self.radius * np.cos(phi)
        xy = self.center[None, :] + u[:, None] * self.direction[None, :]
        out = np.column_stack([xy, self.radius * np.sin(phi)])
        return out[0] if scalar else out

    def length(self) -> float:
        """Hyperbolic length between start and end (inf if end is ideal)."""
        if self.end[2] <= 0:
            return math.inf
        return float(hyp_distance(self.start, self.end))


def _arr(p) -> np.ndarray:
    if isinstance(p, UpperHalfPoint):
        return p.as_array()
    return np.asarray(p, dtype=float)


def hyp_distance(p, q) -> np.ndarray | float:
    """Hyperbolic distance, vectorised over leading axes.

    Uses ``d = 2 asinh(|p - q| / (2 sqrt(z_p z_q)))``, which equals
    ``arccosh(1 + |p-q|^2 / (2 z_p z_q))`` but keeps precision for close points.
    """
    p, q = _arr(p), _arr(q)
    diff = p - q
    euc = np.sqrt(np.einsum("...i,...i->...", diff, diff))
    out = 2.0 * np.arcsinh(euc / (2.0 * np.sqrt(p[..., 2] * q[..., 2])))
    return float(out) if np.ndim(out) == 0 else out


def geodesic_through(p, q) -> GeodesicArc:
    """Geodesic arc from interior point ``p`` to the point ``q``.

    ``q`` may be interior (length-3) or ideal (a :class:`BoundaryPoint`, or a
    length-2 boundary coordinate).
    """
    p = _arr(p)
    if isinstance(q, BoundaryPoint):
        if q.at_infinity:
            return GeodesicArc(p, np.array([p[0], p[1], np.inf]), True, p[:2].copy(), math.inf, np.array([1.0, 0.0]))
        q = np.array([q.x, q.y, 0.0])
    else:
        q = np.asarray(q, dtype=float)
        if q.shape[-1] == 2:
            q = np.array([q[0], q[1], 0.0])
    dxy = q[:2] - p[:2]
    horiz = math.hypot(dxy[0], dxy[1])
    if horiz == 0.0:
        return GeodesicArc(p, q, True, p[:2].copy(), math.inf, np.array([1.0, 0.0]))
    e = dxy / horiz
    # centre at p_xy + a e with a^2 + z_p^2 = (horiz - a)^2 + z_q^2
    a = (horiz**2 + q[2] ** 2 - p[2] ** 2) / (2 * horiz)
    center = p[:2] + a * e
    radius = math.sqrt(a * a + p[2] ** 2)
    return GeodesicArc(p, q, False, center, radius, e)


def geodesic_to_boundary(p, q) -> GeodesicArc:
    """The ray from ``p`` limiting on the ideal point ``q``."""
    if not isinstance(q, BoundaryPoint):
        q = BoundaryPoint(float(q[0]), float(q[1]))
    return geodesic_through(p, q)


def cone_points_at_height(apex, targets: np.ndarray, z: float) -> np.ndarray:
    """For each ideal point in ``targets`` (N x 2) the ray point at height ``z``.

    Vectorised form of ``geodesic_to_boundary(apex, q).point_at_height(z)``;
    the point returned is the one on the far side of the carrying circle's top,
    i.e. the part of the ray that descends to ``q``.
    """
    apex = _arr(apex)
    t = np.asarray(targets, dtype=float)
    dxy = t - apex[:2]
    horiz = np.hypot(dxy[:, 0], dxy[:, 1])
    out = np.empty((len(t), 3))
    vert = horiz == 0
    out[vert, :2] = apex[:2]
    nv = ~vert
    e = dxy[nv] / horiz[nv, None]
    a = (horiz[nv] ** 2 - apex[2] ** 2) / (2 * horiz[nv])
    R2 = a * a + apex[2] ** 2
    if np.any(z * z > R2):
        raise ValueError("height above the ray's carrying circle")
    u = a + np.sqrt(R2 - z * z)
    out[nv, :2] = apex[:2] + u[:, None] * e
    out[:, 2] = z
    return out


def plane_from_circle(c: Circle2) -> GeodesicPlane:
    return GeodesicPlane("hemisphere", center=(float(c.center[0]), float(c.center[1])), radius=float(c.radius))


def side_of_plane(plane: GeodesicPlane, p, tol: float = TAU_ON) -> Side:
    """Side of ``p`` relative to ``plane``; NEGATIVE is the origin side.

    For hemispheres the test compares the Euclidean distance to the centre
    with the radius, so ``tol`` is an absolute tolerance in model units.
    """
    p = _arr(p)
    if plane.kind == "hemisphere":
        d = p - np.array([plane.center[0], plane.center[1], 0.0])
        val = math.sqrt(float(d @ d)) - plane.radius
    else:
        val = float(plane.signed_value(p[None, :])[0])
    if abs(val) <= tol:
        return Side.ON
    return Side.NEGATIVE if val < 0 else Side.POSITIVE


def distance_to_plane(plane: GeodesicPlane, pts) -> np.ndarray:
    """Hyperbolic distance from points to a geodesic plane."""
    p = np.asarray(pts, dtype=float)
    if plane.kind == "hemisphere":
        d = p[..., :2] - np.asarray(plane.center)
        s2 = np.einsum("...i,...i->...", d, d) + p[..., 2] ** 2
        return np.abs(np.arcsinh((s2 - plane.radius**2) / (2 * plane.radius * p[..., 2])))
    return np.abs(np.arcsinh(plane.signed_value(p) / p[..., 2]))


def apply_isometry(s: Similarity, p) -> np.ndarray:
    """Extend the boundary similarity to H^3: ``(v, z) -> (s(v), scale z)``.

    Accepts a single point or an ``(N, 3)`` array.
    """
    p = _arr(p)
    out = np.empty_like(p, dtype=float)
    out[..., :2] = s.apply_boundary(p[..., :2])
    out[..., 2] = s.scale * p[..., 2]
    return out


# Interior barycentric quadrature rules on the reference triangle.
_QUAD_RULES = {
    1: (np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([1.0])),
    3: (
        np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]]),
        np.full(3, 1 / 3),
    ),
    6: (
        np.array(
            [
                [0.108103018168070, 0.445948490915965, 0.445948490915965],
                [0.445948490915965, 0.108103018168070, 0.445948490915965],
                [0.445948490915965, 0.445948490915965, 0.108103018168070],
                [0.816847572980459, 0.091576213509771, 0.091576213509771],
                [0.091576213509771, 0.816847572980459, 0.091576213509771],
                [0.091576213509771, 0.091576213509771, 0.816847572980459],
            ]
        ),
        np.array([0.223381589678011] * 3 + [0.109951743655322] * 3),
    ),
}


def quad_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    try:
        return _QUAD_RULES[order]
    except KeyError:
        raise ValueError(f"quad_order must be one of {sorted(_QUAD_RULES)}, got {order}") from None


def tri_area_hyp(p1, p2, p3, quad_order: int = 3) -> float:
    """Hyperbolic area of the flat triangle ``p1 p2 p3`` by conformal-weight quadrature."""
    a, b, c = _arr(p1), _arr(p2), _arr(p3)
    area_e = 0.5 * np.linalg.norm(np.cross(b - a, c - a))
    if area_e == 0.0:
        return 0.0
    bary, w = quad_rule(quad_order)
    zq = bary @ np.array([a[2], b[2], c[2]])
    return float(area_e * np.sum(w / zq**2))
