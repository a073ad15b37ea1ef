"""Run configuration and the end-to-end construction: curve, tunnels, domain, disk."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .curve import CurveParams
from .disk import solve_disk
from .domain import DomainSpec, TunnelParams, build_domain
from .mesh import TriMesh
from .solver import SolveReport, SolverConfig

# disk mesh size by n: ~2.4k vertices for E_1; E_n for n >= 2 has hyperbolic area in the thousands
DISK_L_MAX_FIRST = 0.16
DISK_L_MAX = 0.2


@dataclass
class RunConfig:
    eps1: float = CurveParams.eps1
    del1: float = CurveParams.del1
    z_d: float | None = None
    cut_radius: float = TunnelParams.cut_radius
    samples_per_unit: int = CurveParams.samples_per_unit
    grad_tol: float = SolverConfig.grad_tol
    max_iter: int = SolverConfig.max_iter
    penalty_initial: float = SolverConfig.penalty_initial
    penalty_growth: float = SolverConfig.penalty_growth
    penalty_rounds: int = SolverConfig.penalty_rounds
    l_min: float | None = None
    l_max: float | None = None
    remesh_every: int = SolverConfig.remesh_every
    quad_order: int = SolverConfig.quad_order
    margin: float | None = None
    probe: tuple = (0.0, 0.0, 1.5, 1.0)
    out_dir: str = "."
    start: str = "cone"

    def curve_params(self, n: int = 1) -> CurveParams:
        return CurveParams(eps1=self.eps1, del1=self.del1, samples_per_unit=self.samples_per_unit, n=n)

    def tunnel_params(self) -> TunnelParams:
        return TunnelParams(cut_radius=self.cut_radius, z_d=self.z_d)

    def disk_config(self, n: int) -> SolverConfig:
        l_max = self.l_max if self.l_max is not None else (DISK_L_MAX_FIRST if n == 1 else DISK_L_MAX)
        l_min = self.l_min if self.l_min is not None else l_max / 6.0
        return SolverConfig(
            grad_tol=self.grad_tol,
            max_iter=self.max_iter,
            penalty_initial=self.penalty_initial,
            penalty_growth=self.penalty_growth,
            penalty_rounds=self.penalty_rounds,
            l_min=l_min,
            l_max=l_max,
            remesh_every=self.remesh_every,
            quad_order=self.quad_order,
        ).validate()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["probe"] = list(self.probe)
        return d


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _coerce(name: str, text: str):
    text = text.strip()
    if name == "probe":
        parts = [float(x) for x in text.split(",")]
        if len(parts) != 4:
            raise ValueError("probe needs four comma-separated numbers cx,cy,cz,r")
        return tuple(parts)
    if name in ("out_dir", "start"):
        return text
    if text.lower() in ("none", ""):
        if name in ("z_d", "l_min", "l_max", "margin"):
            return None
        raise ValueError(f"{name} cannot be empty")
    if name in ("samples_per_unit", "max_iter", "penalty_rounds", "remesh_every", "quad_order"):
        return int(text)
    return float(text)


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment; dashes in keys map to underscores."""
    aliases = {"zd": "z_d", "samples": "samples_per_unit"}
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        key = aliases.get(key, key)
        if key not in _FIELDS:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def load_config(path: str | Path | None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the config file, then explicit overrides (``None`` values are ignored)."""
    rc = RunConfig()
    if path is not None:
        rc = replace(rc, **parse_config_text(Path(path).read_text()))
    if overrides:
        rc = replace(rc, **{k: v for k, v in overrides.items() if v is not None})
    return rc


@dataclass
class Solution:
    n: int
    domain: DomainSpec
    mesh: TriMesh
    report: SolveReport
    config: RunConfig = field(repr=False, default_factory=RunConfig)

    @property
    def status(self) -> str:
        if self.report.reason == "converged" and self.report.feasibility <= 1e-6:
            return "ok"
        return self.report.reason


def build_domain_for(n: int, rc: RunConfig) -> DomainSpec:
    params = rc.curve_params(n).validate()
    tp = rc.tunnel_params().validate(params)
    return build_domain(n, params, None, tp, rc.margin)


def solve(n: int, rc: RunConfig) -> Solution:
    dom = build_domain_for(n, rc)
    mesh, report = solve_disk(dom.boundary, dom.constraints(), rc.disk_config(n), start=rc.start)
    return Solution(n, dom, mesh, report, rc)


def report_dict(sol: Solution) -> dict:
    d = sol.report.to_dict()
    d.update(
        {
            "n": sol.n,
            "c_n": sol.domain.c_n,
            "floor": float(f"{sol.domain.floor:.12g}"),
            "status": sol.status,
            "vertices": int(sol.mesh.n_vertices),
            "faces": int(len(sol.mesh.faces)),
        }
    )
    return {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in d.items()}
