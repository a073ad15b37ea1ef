"""Least-area disks in hyperbolic 3-space spanning a nested-circle boundary curve with tunnels.

The pipeline builds the boundary curve, solves the tunnel necks, truncates the
domain at a horosphere, solves the constrained disk and measures how it meets
the vertical axis segment.
"""

from .curve import CurveParams, GammaCurve, build_gamma
from .disk import solve_disk
from .domain import ConeCurve, DomainSpec, TunnelParams, build_domain, build_tunnel, compute_cn, cone_curve
from .errors import ConstructionError, NeckPinch, SolverError
from .mesh import TriMesh, mesh_area, remesh
from .pipeline import RunConfig, solve
from .solver import ConstraintSet, SolveReport, SolverConfig, descend, solve_annulus
from .topology import FreeWord, alpha_word, free_reduce, is_trivial, kill_generator

__all__ = [
    "ConeCurve",
    "ConstraintSet",
    "ConstructionError",
    "CurveParams",
    "DomainSpec",
    "FreeWord",
    "GammaCurve",
    "NeckPinch",
    "RunConfig",
    "SolveReport",
    "SolverConfig",
    "SolverError",
    "TriMesh",
    "TunnelParams",
    "alpha_word",
    "build_domain",
    "build_gamma",
    "build_tunnel",
    "compute_cn",
    "cone_curve",
    "descend",
    "free_reduce",
    "is_trivial",
    "kill_generator",
    "mesh_area",
    "remesh",
    "solve",
    "solve_annulus",
    "solve_disk",
]
