import csv
import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from h3plateau.diagnostics import (
    CSV_COLUMNS,
    UNIT_PLANE,
    SweepRow,
    ball_area,
    beta_heights,
    min_distance_to_plane,
    sweep,
    sweep_csv,
    sweep_row,
)
from h3plateau.mesh import TriMesh, mesh_area
from h3plateau.pipeline import RunConfig
from meshes import hemisphere_cap

PROBE = (0.0, 0.0, 1.5)


def test_first_disk_crosses_axis_near_two(disk1):
    hs = beta_heights(disk1.mesh)
    assert len(hs) == 1
    assert hs[0] == pytest.approx(2.0, abs=0.05)
    # the exact minimal disk is the hemisphere of radius 1.9605
    assert hs[0] == pytest.approx(1.9605, abs=5e-3)


def test_second_disk_crosses_axis_twice(disk2):
    hs = beta_heights(disk2.mesh)
    assert len(hs) == 2
    assert hs == sorted(hs)
    assert hs[0] == pytest.approx(1.5, abs=0.15) and hs[1] == pytest.approx(2.0, abs=0.15)
    assert all(0.5 < h < 3 for h in hs)


def test_min_height_decreases_but_stays_above_one(disk1, disk2):
    h1, h2 = min(beta_heights(disk1.mesh)), min(beta_heights(disk2.mesh))
    assert 1 < h2 < h1


def test_no_crossings_off_axis():
    assert beta_heights(hemisphere_cap(8, R=0.3, center=(2, 0))) == []


def test_distance_to_plane():
    on_plane = hemisphere_cap(10, R=1.0)
    assert min_distance_to_plane(on_plane) == pytest.approx(0.0, abs=1e-12)
    assert min_distance_to_plane(on_plane, UNIT_PLANE) == pytest.approx(0.0, abs=1e-12)
    assert min_distance_to_plane(TriMesh(np.zeros((0, 3)), np.zeros((0, 3)))) == float("inf")


def test_distance_trend(disk1, disk2):
    d1, d2 = min_distance_to_plane(disk1.mesh), min_distance_to_plane(disk2.mesh)
    assert d1 > 0.3
    assert 0 < d2 < d1


def test_ball_area_basics():
    empty = TriMesh(np.zeros((0, 3)), np.zeros((0, 3)))
    assert ball_area(empty, PROBE, 1.0) == 0.0
    cap = hemisphere_cap(20, R=1.5)
    assert ball_area(cap, PROBE, 50.0) == pytest.approx(mesh_area(cap))
    assert ball_area(cap, (10, 10, 0.1), 0.5) == 0.0
    with pytest.raises(ValueError):
        ball_area(cap, PROBE, 0.0)


@given(st.floats(0.05, 3.0), st.floats(0.05, 3.0))
def test_ball_area_monotone_in_radius(r1, r2):
    cap = hemisphere_cap(12, R=1.5)
    lo, hi = sorted((r1, r2))
    assert ball_area(cap, PROBE, lo) <= ball_area(cap, PROBE, hi)


def test_ball_area_grows_with_extra_sheet(disk1, disk2):
    assert ball_area(disk2.mesh, PROBE, 1.0) > ball_area(disk1.mesh, PROBE, 1.0) > 0


def test_csv_layout():
    row = SweepRow(2, 47, 1029.5, [1.5, 2.0], 0.41, 6.4, 8e-7, 0.0, "ok")
    text = sweep_csv([row, SweepRow(3, status="neck_pinch")])
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == CSV_COLUMNS
    assert rows[0] == ["n", "c_n", "area", "beta_count", "beta_min", "beta_all", "dist_to_P", "ball_area", "grad_rms", "feasibility", "status"]
    assert rows[1][:6] == ["2", "47", "1029.5", "2", "1.5", "1.5;2"]
    assert rows[2] == ["3", "", "", "0", "", "", "", "", "", "", "neck_pinch"]


def test_failures_become_statuses():
    row, sol = sweep_row(1, RunConfig(eps1=0.5))
    assert row.status == "neck_pinch" and sol is None
    row, _ = sweep_row(2, RunConfig(eps1=0.3, del1=0.26))
    assert row.status == "construction_error"


def test_sweep_validates_and_is_deterministic():
    with pytest.raises(ValueError):
        sweep(0)
    rc = RunConfig(l_max=0.3)
    a, b = sweep(1, rc), sweep(1, rc)
    assert sweep_csv(a) == sweep_csv(b)
    assert [r.status for r in a] == ["ok"]
    assert len(a[0].beta_heights) == 1
