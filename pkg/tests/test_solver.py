import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.spatial import cKDTree

from h3plateau.curve import CurveParams
from h3plateau.domain import TunnelParams, build_tunnel, cut_circles, transport_isometry
from h3plateau.errors import NeckPinch
from h3plateau.hyperbolic import apply_isometry, distance_to_plane, GeodesicPlane, hyp_distance
from h3plateau.mesh import TriMesh, mean_curvature, mesh_area
from h3plateau.solver import (
    ConstraintSet,
    SolverConfig,
    annulus_residuals,
    descend,
    restore_feasibility,
    ruled_annulus,
    solve_annulus,
)
from meshes import hemisphere_cap

UNIT = GeodesicPlane("hemisphere", (0.0, 0.0), 1.0)


def bumped_cap(n=8, amp=0.08):
    """Hemisphere cap with its free vertices pushed off the plane."""
    m = hemisphere_cap(n)
    v = m.vertices.copy()
    r2 = np.sum(v[:, :2] ** 2, axis=1)
    v[m.free, 2] += amp * (0.81 - r2[m.free])
    return m.with_vertices(v)


def reflection_residual(m: TriMesh) -> float:
    d, _ = cKDTree(m.vertices).query(m.vertices * np.array([1.0, -1.0, 1.0]))
    return float(d.max())


def test_config_validation():
    SolverConfig().validate()
    with pytest.raises(ValueError):
        SolverConfig(l_min=0.2, l_max=0.1).validate()
    with pytest.raises(ValueError):
        SolverConfig(grad_tol=0).validate()
    with pytest.raises(ValueError):
        SolverConfig(backtrack=1.5).validate()


# ------------------------------------------------------------------ feasibility


def test_restore_leaves_feasible_mesh_unchanged():
    m = hemisphere_cap(6)
    c = ConstraintSet(floor=0.1, outer_radius=3.0)
    out = restore_feasibility(m, c)
    assert np.array_equal(out.vertices, m.vertices)


def test_restore_lifts_vertex_to_floor():
    m = hemisphere_cap(4)
    floor = 0.8
    v = m.vertices.copy()
    i = int(np.flatnonzero(m.free)[0])
    v[i, 2] = floor / 2
    c = ConstraintSet(floor=floor)
    out = restore_feasibility(m.with_vertices(v), c)
    assert out.vertices[i, 2] == pytest.approx(floor)
    assert c.feasibility(out.vertices[out.free]) <= 1e-12


def test_restore_pulls_vertex_inside_outer_hemisphere():
    m = hemisphere_cap(4)
    v = m.vertices.copy()
    i = int(np.flatnonzero(m.free)[0])
    v[i] = [0.0, 0.0, 1.5]
    out = restore_feasibility(m.with_vertices(v), ConstraintSet(outer_radius=1.2))
    assert np.linalg.norm(out.vertices[i]) <= 1.2 + 1e-12


def test_restore_pushes_vertex_out_of_tunnel():
    t = build_tunnel(1)
    m = hemisphere_cap(4)
    v = m.vertices.copy()
    i = int(np.flatnonzero(m.free)[0])
    v[i] = [1.75, 0.108, 0.05]
    c = ConstraintSet(tunnels=[t])
    assert c.feasibility(v[m.free]) > 0
    out = restore_feasibility(m.with_vertices(v), c)
    assert c.feasibility(out.vertices[out.free]) <= 1e-9
    assert not t.contains(out.vertices[i : i + 1])[0]


# ------------------------------------------------------------------ descent


def test_descent_flattens_bumped_cap_onto_the_plane():
    m = bumped_cap()
    cfg = SolverConfig(grad_tol=1e-7, penalty_rounds=1, remesh_every=0, max_iter=2000)
    out, rep = descend(m, None, cfg)
    assert rep.converged
    assert rep.area < mesh_area(m)
    assert np.all(out.vertices[out.fixed] == m.vertices[m.fixed])
    assert distance_to_plane(UNIT, out.vertices).max() < 5e-3


def test_merit_never_increases_within_a_round():
    cfg = SolverConfig(penalty_rounds=1, remesh_every=0, max_iter=300)
    _, rep = descend(bumped_cap(), ConstraintSet(floor=0.3), cfg)
    h = np.array(rep.merit_history)
    assert len(h) > 10
    assert np.all(np.diff(h) <= 1e-12 * np.abs(h[:-1]))


def test_max_iter_reason():
    _, rep = descend(bumped_cap(), None, SolverConfig(max_iter=3, penalty_rounds=1, remesh_every=0))
    assert rep.reason == "max_iter" and rep.iterations == 3
    assert rep.grad_rms > 1e-6


def test_penalty_keeps_surface_above_floor():
    # the minimiser of the bumped cap dips below z = 0.6 near the rim; the floor pushes back
    m = bumped_cap()
    c = ConstraintSet(floor=0.45)
    out, rep = descend(m, c, SolverConfig(penalty_rounds=3, remesh_every=0, max_iter=900))
    assert rep.feasibility <= 1e-6
    assert out.vertices[out.free, 2].min() >= 0.45 - 1e-6


def test_descent_is_isometry_equivariant():
    cfg = SolverConfig(grad_tol=1e-8, penalty_rounds=1, remesh_every=0, max_iter=2000)
    m = bumped_cap(6)
    phi = transport_isometry(2)
    a, rep_a = descend(m, None, cfg)
    b, rep_b = descend(m.with_vertices(apply_isometry(phi, m.vertices)), None, cfg)
    assert rep_a.converged and rep_b.converged
    assert rep_b.area == pytest.approx(rep_a.area, rel=1e-9)
    # both meshes sit within solver tolerance of the same discrete minimiser
    assert hyp_distance(apply_isometry(phi, a.vertices), b.vertices).max() <= 2e-5


# ------------------------------------------------------------------ annulus


@pytest.fixture(scope="module")
def default_neck():
    plus, minus = cut_circles(CurveParams(), TunnelParams())
    return solve_annulus(plus, minus, SolverConfig())


def test_ruled_annulus_topology():
    plus, minus = cut_circles(CurveParams(), TunnelParams())
    ann = ruled_annulus(plus, minus, 5)
    ann.mesh.check()
    assert ann.mesh.euler_characteristic() == 0
    assert len(ann.rings) == 7
    assert len(ann.mesh.boundary_loops()) == 2


def test_annulus_converges_at_defaults(default_neck):
    mesh, rep = default_neck
    assert rep.converged
    assert annulus_residuals(mesh).max() <= 0.05
    assert reflection_residual(mesh) <= 1e-3
    h = mean_curvature(mesh, signed=True)
    assert np.sqrt(np.nanmean(h**2)) <= 0.05


def test_annulus_boundary_fixed(default_neck):
    mesh, _ = default_neck
    plus, minus = cut_circles(CurveParams(), TunnelParams())
    M = len(plus)
    assert np.array_equal(mesh.vertices[:M], plus)
    assert np.array_equal(mesh.vertices[-M:], minus)


@pytest.mark.parametrize("tp", [TunnelParams(), TunnelParams(z_d=0.05)])
def test_far_circles_pinch(tp):
    params = CurveParams(eps1=0.5, del1=0.1)
    plus, minus = cut_circles(params, tp)
    with pytest.raises(NeckPinch) as info:
        solve_annulus(plus, minus, SolverConfig())
    assert info.value.min_circumference > 0


def test_literal_horizontal_cut_pinches_at_wide_offset():
    # eps1 = 0.12 with the horizontal cut at 0.05 admits no annulus (see the design notes)
    plus, minus = cut_circles(CurveParams(eps1=0.12), TunnelParams(z_d=0.05))
    with pytest.raises(NeckPinch):
        solve_annulus(plus, minus, SolverConfig())


def test_pinch_detected_without_rebasing():
    plus, minus = cut_circles(CurveParams(eps1=0.5), TunnelParams())
    with pytest.raises(NeckPinch):
        solve_annulus(plus, minus, replace(SolverConfig(), remesh_every=0))
