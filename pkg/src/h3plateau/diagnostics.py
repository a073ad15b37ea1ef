"""Finite-n trend measurements on solved disks and the n-sweep."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstructionError, NeckPinch, SolverError
from .hyperbolic import GeodesicPlane, distance_to_plane, hyp_distance
from .mesh import TriMesh, face_areas
from .pipeline import RunConfig, solve
from .topology import BETA, segment_intersections

log = logging.getLogger(__name__)

UNIT_PLANE = GeodesicPlane("hemisphere", (0.0, 0.0), 1.0)

CSV_COLUMNS = [
    "n",
    "c_n",
    "area",
    "beta_count",
    "beta_min",
    "beta_all",
    "dist_to_P",
    "ball_area",
    "grad_rms",
    "feasibility",
    "status",
]


def beta_heights(m: TriMesh) -> list[float]:
    return [float(z) for z in segment_intersections(m, BETA)[:, 2]]


def min_distance_to_plane(m: TriMesh, plane: GeodesicPlane = UNIT_PLANE) -> float:
    if m.n_vertices == 0:
        return math.inf
    return float(distance_to_plane(plane, m.vertices).min())


def ball_area(m: TriMesh, center, r_hyp: float, quad_order: int = 3) -> float:
    """Area of the faces whose centroid lies within hyperbolic distance ``r_hyp`` of ``center``."""
    if not r_hyp > 0:
        raise ValueError("ball radius must be positive")
    if len(m.faces) == 0:
        return 0.0
    centroids = m.vertices[m.faces].mean(axis=1)
    inside = hyp_distance(centroids, np.asarray(center, dtype=float)[None, :]) <= r_hyp
    if not inside.any():
        return 0.0
    return float(face_areas(m.vertices, m.faces[inside], quad_order).sum())


@dataclass
class SweepRow:
    n: int
    c_n: int | None = None
    area: float | None = None
    beta_heights: list = field(default_factory=list)
    dist_to_P: float | None = None
    ball_area: float | None = None
    grad_rms: float | None = None
    feasibility: float | None = None
    status: str = "error"

    def csv_fields(self) -> list[str]:
        def num(x):
            return "" if x is None else f"{x:.12g}"

        return [
            str(self.n),
            "" if self.c_n is None else str(self.c_n),
            num(self.area),
            str(len(self.beta_heights)),
            num(min(self.beta_heights)) if self.beta_heights else "",
            ";".join(f"{z:.12g}" for z in self.beta_heights),
            num(self.dist_to_P),
            num(self.ball_area),
            num(self.grad_rms),
            num(self.feasibility),
            self.status,
        ]


def sweep_row(n: int, rc: RunConfig) -> tuple[SweepRow, object]:
    """One pipeline run; failures become a row status instead of an exception."""
    row = SweepRow(n)
    try:
        sol = solve(n, rc)
    except NeckPinch as e:
        row.status = "neck_pinch"
        log.warning("n=%d: %s", n, e)
        return row, None
    except ConstructionError as e:
        row.status = "construction_error"
        log.warning("n=%d: %s", n, e)
        return row, None
    except SolverError as e:
        row.status = "solver_error"
        log.warning("n=%d: %s", n, e)
        return row, None
    cx, cy, cz, r = rc.probe
    row.c_n = sol.domain.c_n
    row.area = sol.report.area
    row.beta_heights = beta_heights(sol.mesh)
    row.dist_to_P = min_distance_to_plane(sol.mesh)
    row.ball_area = ball_area(sol.mesh, (cx, cy, cz), r, rc.quad_order)
    row.grad_rms = sol.report.grad_rms
    row.feasibility = sol.report.feasibility
    row.status = sol.status
    return row, sol


def sweep(n_max: int, rc: RunConfig | None = None, keep: bool = False) -> list:
    """Rows for ``n = 1..n_max`` in ascending order (with solutions if ``keep``)."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    rc = rc or RunConfig()
    out = []
    for n in range(1, n_max + 1):
        row, sol = sweep_row(n, rc)
        out.append((row, sol) if keep else row)
    return out


def sweep_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow(row.csv_fields())
    return buf.getvalue()
