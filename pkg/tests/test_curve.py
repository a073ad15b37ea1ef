import itertools
import math

import numpy as np
import pytest
from shapely.geometry import LinearRing

from h3plateau.curve import (
    CurveParams,
    build_gamma,
    clearance,
    curve_json,
    curve_summary,
    curve_text,
    eta_circles,
    gap_endpoints,
    is_simple,
    radius,
    scale,
    winding_number,
)
from h3plateau.errors import ConstructionError
from h3plateau.hyperbolic import Similarity

WIDE = CurveParams(eps1=0.12, del1=0.10)


def groups(curve):
    return [k for k, _ in itertools.groupby(curve.tags)]


def test_radius_and_scale():
    assert radius(1) == 2.0 and radius(2) == 1.5
    rs = [radius(k) for k in range(1, 200)]
    assert all(a > b > 1 for a, b in zip(rs, rs[1:]))
    assert scale(1) == 1.0
    assert scale(2) == pytest.approx(1 / 3)
    assert scale(4) == pytest.approx(0.1)
    for k in range(1, 30):
        assert scale(k) == pytest.approx((radius(k) - radius(k + 1)) / (radius(1) - radius(2)))
    for f in (radius, scale):
        with pytest.raises(ValueError):
            f(0)


def test_footprint_examples():
    fp = eta_circles(1, WIDE)
    assert fp.plus_circle.center == pytest.approx((1.75, 0.12))
    assert fp.minus_circle.center == pytest.approx((1.75, -0.12))
    assert fp.plus_circle.radius == pytest.approx(0.10)
    assert fp.side == "right"
    fp2 = eta_circles(2, WIDE)
    assert fp2.plus_circle.center == pytest.approx((-17 / 12, 0.04))
    assert fp2.plus_circle.radius == pytest.approx(1 / 30)
    assert fp2.side == "left"


@pytest.mark.parametrize("k", range(1, 21))
def test_footprints_clear_neighbouring_circles(k):
    th = np.linspace(0, 2 * np.pi, 4000, endpoint=False)
    for c in eta_circles(k, WIDE).circles:
        disk = np.array(c.center) + c.radius * np.column_stack([np.cos(th), np.sin(th)])
        r = np.linalg.norm(disk, axis=1)
        assert np.min(np.abs(r - radius(k))) > 0
        assert np.min(np.abs(r - radius(k + 1))) > 0


def test_gap_endpoints():
    p, m = gap_endpoints(1, WIDE)
    assert p == pytest.approx([math.sqrt(4 - 1e-4), 0.01])
    assert m == pytest.approx([math.sqrt(4 - 1e-4), -0.01])
    assert p[0] == pytest.approx(1.999975, abs=1e-6)
    p, _ = gap_endpoints(2, WIDE, "right")
    assert p == pytest.approx([1.499967, 0.01], abs=1e-6)
    # bridge 2 band: half of (eps_2 - del_2)
    p, m = gap_endpoints(2, WIDE, "left")
    w = 0.5 * (0.04 - 1 / 30)
    assert p == pytest.approx([-math.sqrt(2.25 - w * w), w])
    assert m == pytest.approx([-math.sqrt(2.25 - w * w), -w])


def test_gap_endpoint_on_impossible_side():
    with pytest.raises(ConstructionError):
        gap_endpoints(1, WIDE, "left")


@pytest.mark.parametrize(
    "kwargs",
    [dict(eps1=0.1, del1=0.1), dict(eps1=0.3, del1=0.26), dict(del1=0.0), dict(samples_per_unit=8)],
)
def test_invalid_parameters(kwargs):
    with pytest.raises(ConstructionError):
        CurveParams(**kwargs).validate()


def test_single_circle():
    g = build_gamma(CurveParams(n=1))
    assert set(g.tags) == {("arc", 1)}
    assert np.allclose(np.linalg.norm(g.vertices, axis=1), 2.0)


def test_two_circles_structure():
    g = build_gamma(CurveParams(n=2))
    assert groups(g) == [("arc", 1), ("bridge", 1, "-"), ("arc", 2), ("bridge", 1, "+")]


@pytest.mark.parametrize("n", range(1, 9))
def test_structure_counts(n):
    g = build_gamma(CurveParams(n=n))
    gs = groups(g)
    assert sum(t[0] == "bridge" for t in gs) == 2 * (n - 1)
    assert {t[1] for t in gs if t[0] == "arc"} == set(range(1, n + 1))


@pytest.mark.parametrize("n", range(1, 9))
def test_simple_against_independent_oracle(n):
    g = build_gamma(CurveParams(n=n))
    assert is_simple(g.vertices)
    assert LinearRing(g.vertices).is_simple


def test_self_crossing_detected():
    bowtie = np.array([[0, 0], [1, 1], [1, 0], [0, 1]], dtype=float)
    assert not is_simple(bowtie)
    assert not LinearRing(bowtie).is_simple


@pytest.mark.parametrize("n", range(1, 9))
def test_winding_about_origin(n):
    # odd circles run counter-clockwise, even circles clockwise
    g = build_gamma(CurveParams(n=n))
    assert winding_number(g.vertices, (0.0, 0.0)) == n % 2
    assert curve_summary(g)["winding"] == n % 2


def test_winding_examples():
    g = build_gamma(CurveParams(n=1))
    assert winding_number(g.vertices, (10.0, 10.0)) == 0
    assert winding_number(g.vertices[::-1], (0.0, 0.0)) == -1
    with pytest.raises(ValueError):
        winding_number(g.vertices, g.vertices[3])


def test_clearance_examples():
    g2 = build_gamma(CurveParams(n=2, eps1=0.12))
    assert clearance(g2, [eta_circles(1, WIDE)]) == pytest.approx(0.01, abs=1e-4)
    g1 = build_gamma(CurveParams(n=1, eps1=0.12))
    assert clearance(g1, [eta_circles(1, WIDE)]) == pytest.approx(2 - math.hypot(1.75, 0.12) - 0.1, abs=1e-4)
    assert clearance(g1, []) == math.inf


@pytest.mark.parametrize("n", range(1, 9))
def test_clearance_positive_and_matches_corridor(n):
    p = CurveParams(n=n)
    g = build_gamma(p)
    fps = [eta_circles(k, p) for k in range(1, n + 1)]
    c = clearance(g, fps)
    assert c > 0
    if n >= 2:
        corridor = min(0.5 * scale(j) * (p.eps1 - p.del1) for j in range(1, n))
        assert c == pytest.approx(corridor, abs=1e-9)


@pytest.mark.parametrize("n", [1, 2, 4])
def test_clearance_refinement_stable(n):
    coarse, fine = CurveParams(n=n, samples_per_unit=64), CurveParams(n=n, samples_per_unit=128)
    fps = [eta_circles(k, coarse) for k in range(1, n + 1)]
    assert abs(clearance(build_gamma(coarse), fps) - clearance(build_gamma(fine), fps)) <= 1e-3


@pytest.mark.parametrize("n", range(2, 9))
def test_bridge_parity(n):
    g = build_gamma(CurveParams(n=n))
    v = g.vertices
    for i, tag in enumerate(g.tags):
        if tag[0] == "bridge":
            j = tag[1]
            xs = np.array([v[i, 0], v[(i + 1) % len(v), 0]])
            assert np.all(xs > 0) if j % 2 == 1 else np.all(xs < 0)


@pytest.mark.parametrize("k", range(1, 10))
def test_footprint_self_similarity(k):
    a, b = eta_circles(k, WIDE), eta_circles(k + 1, WIDE)
    ratio = scale(k + 1) / scale(k)
    mid_a = np.array([np.mean([c.center[0] for c in a.circles]), 0.0])
    mid_b = np.array([np.mean([c.center[0] for c in b.circles]), 0.0])
    turn = Similarity(ratio, math.pi)
    t = mid_b - turn.apply_boundary(mid_a)
    s = Similarity(ratio, math.pi, (float(t[0]), float(t[1])))
    imgs = sorted((tuple(np.round(s.apply_boundary(np.array(c.center)), 12)), s.scale * c.radius) for c in a.circles)
    want = sorted((tuple(np.round(np.array(c.center), 12)), c.radius) for c in b.circles)
    for (ci, ri), (cw, rw) in zip(imgs, want):
        assert ci == pytest.approx(cw, abs=1e-12)
        assert ri == pytest.approx(rw, abs=1e-12)


def test_exports():
    g = build_gamma(CurveParams(n=2))
    lines = curve_text(g).splitlines()
    assert len(lines) == len(g)
    x, y, tag = lines[0].split()
    assert float(x) == pytest.approx(g.vertices[0, 0]) and tag == "arc:1"
    assert any(line.endswith("bridge:1:+") for line in lines)
    js = curve_json(g)
    assert '"simple": true' in js
    assert set(curve_summary(g)) == {"n", "eps1", "del1", "winding", "simple", "clearance"}
