"""Grid construction, areas, regularity, and file round-trips."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liouville_lab.grid2d import (Grid, GridError, make_periodic_grid,
                                  make_pinwheel_grid, make_radial_grid,
                                  make_sector_grid, point_in_polygon,
                                  validate_regular)


def shoelace_fraction(poly):
    """Exact rational shoelace oracle (independent of the float implementation)."""
    total = Fraction(0)
    n = len(poly)
    for i in range(n):
        x0, y0 = (Fraction(float(poly[i][0])), Fraction(float(poly[i][1])))
        x1, y1 = (Fraction(float(poly[(i + 1) % n][0])),
                  Fraction(float(poly[(i + 1) % n][1])))
        total += x0 * y1 - x1 * y0
    return total / 2


def test_radial_k2_is_a_diameter():
    g = make_radial_grid(2, 1.0)
    areas = g.face_areas()
    assert np.allclose(areas, [0.5, 0.5], atol=1e-12)
    # the two spokes are collinear: the grid is a straight diameter
    d0 = g.arcs[0].points[-1] - g.arcs[0].points[0]
    d1 = g.arcs[1].points[-1] - g.arcs[1].points[0]
    assert abs(d0 @ d1 + np.linalg.norm(d0) * np.linalg.norm(d1)) < 1e-12


def test_radial_k4_equal_areas():
    g = make_radial_grid(4, 1.0)
    assert np.allclose(g.face_areas(), 0.25, atol=1e-12)


def test_radial_k3_area3():
    g = make_radial_grid(3, 3.0)
    areas = g.face_areas()
    assert np.allclose(areas, [1.0, 1.0, 1.0], atol=1e-12)
    assert abs(areas.sum() - 3.0) < 1e-12


def test_radial_rejects_k1():
    with pytest.raises(GridError):
        make_radial_grid(1, 1.0)
    with pytest.raises(GridError):
        make_radial_grid(4, -1.0)


def test_periodic_grids():
    g1 = make_periodic_grid(1)
    assert g1.n_faces == 1
    assert np.allclose(g1.face_areas(), [1.0])
    assert np.allclose(g1.marked_points[0], [0.5, 0.5])
    g2 = make_periodic_grid(2)
    assert g2.n_faces == 4
    assert np.allclose(g2.face_areas(), 1.0)
    g3 = make_periodic_grid(3)
    assert abs(g3.face_areas().sum() - 9.0) < 1e-12
    # marked points fill the half-integer lattice
    expect = {(i + 0.5, j + 0.5) for i in range(3) for j in range(3)}
    got = {(round(p[0], 6), round(p[1], 6)) for p in g3.marked_points}
    assert got == expect


def test_perturbed_diameter_areas():
    # sector construction makes the areas exact: the oracle is the sector
    # formula fraction * A, cross-checked by exact rational shoelace
    g = make_sector_grid(1.0, [0.6, 0.4])
    areas = g.face_areas()
    assert abs(areas[0] - 0.6) < 1e-12
    assert abs(areas[1] - 0.4) < 1e-12
    oracle = [float(shoelace_fraction(g.face_polygon(i))) for i in range(2)]
    assert np.allclose(areas, oracle, atol=1e-12)
    assert g.max_face_area() == pytest.approx(0.6, abs=1e-12)


def test_max_face_area():
    assert make_radial_grid(4, 1.0).max_face_area() == pytest.approx(0.25, abs=1e-12)
    assert make_periodic_grid(2).max_face_area() == pytest.approx(1.0, abs=1e-12)


def test_radial_regularity_certificate_is_exact():
    for k in range(2, 7):
        cert = validate_regular(make_radial_grid(k, 1.0))
        assert cert.ok
        assert cert.max_deviation() < 1e-12


def test_unequal_sectors_fail_regularity():
    g = make_sector_grid(1.0, [0.5, 0.3, 0.2])
    cert = validate_regular(g)
    assert not cert.ok
    assert cert.offender == 0  # the origin vertex
    sectors = sorted(cert.offender_entry().sector_angles)
    assert np.allclose(sorted([0.5, 0.3, 0.2]),
                       sorted(s / (2 * np.pi) for s in sectors), atol=1e-9)


def test_t_vertex_with_straight_crossing_fails():
    # interior 3-valent vertex with sectors (pi/2, pi/2, pi)
    g = make_sector_grid(1.0, [0.25, 0.25, 0.5])
    cert = validate_regular(g)
    assert not cert.ok
    entry = cert.offender_entry()
    assert sorted(np.round(entry.sector_angles, 6)) == sorted(
        np.round([np.pi / 2, np.pi / 2, np.pi], 6))


def test_pinwheel_regular_with_unequal_areas():
    g = make_pinwheel_grid(3, 2.0, [0.35, -0.25, 0.1])
    cert = validate_regular(g)
    assert cert.ok
    areas = g.face_areas()
    assert areas.std() > 0.01      # genuinely unequal weights
    assert abs(areas.sum() - 2.0) < 1e-12


def test_marked_points_inside_faces():
    for g in (make_radial_grid(5, 2.0), make_pinwheel_grid(4, 1.0, [0.2, -0.1, 0.15, 0.0]),
              make_periodic_grid(2)):
        for i in range(g.n_faces):
            assert point_in_polygon(g.marked_points[i], g.face_polygon(i))


def test_connectivity_and_valence_validation():
    import copy

    from liouville_lab.grid2d import Arc, Vertex

    g = make_radial_grid(3, 1.0)
    bad = copy.deepcopy(g)
    # a dangling whisker creates two 1-valent vertices
    n = len(bad.vertices)
    bad.vertices.append(Vertex(np.array([0.1, 0.02])))
    bad.vertices.append(Vertex(np.array([0.2, 0.02])))
    bad.arcs.append(Arc(n, n + 1, np.array([[0.1, 0.02], [0.2, 0.02]])))
    with pytest.raises(GridError):
        Grid(1.0, bad.vertices, bad.arcs, bad.faces, bad.marked_points)

    disc = copy.deepcopy(g)
    # an arc island disconnects the graph
    n = len(disc.vertices)
    disc.vertices.append(Vertex(np.array([0.1, 0.02])))
    disc.vertices.append(Vertex(np.array([0.2, 0.02])))
    pts = np.array([[0.1, 0.02], [0.15, 0.05], [0.2, 0.02]])
    disc.arcs.append(Arc(n, n + 1, pts))
    disc.arcs.append(Arc(n, n + 1, pts + [0.0, 1e-4]))
    with pytest.raises(GridError):
        Grid(1.0, disc.vertices, disc.arcs, disc.faces, disc.marked_points)


def test_json_roundtrip_bit_exact():
    for g in (make_radial_grid(4, 1.0), make_periodic_grid(2),
              make_pinwheel_grid(3, 1.5, [0.3, -0.2, 0.05])):
        text = g.to_json()
        g2 = Grid.from_json(text)
        assert g2.to_json() == text
        assert np.array_equal(g2.face_areas(), g.face_areas())


@settings(max_examples=25, deadline=None)
@given(k=st.integers(2, 9), A=st.floats(0.2, 8.0))
def test_partition_property(k, A):
    g = make_radial_grid(k, A)
    areas = g.face_areas()
    assert np.all(areas > 0)
    assert abs(areas.sum() - A) < 1e-6 * A


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 4))
def test_periodic_partition_property(N):
    g = make_periodic_grid(N)
    assert abs(g.face_areas().sum() - N * N) < 1e-6 * N * N
    assert g.n_faces == N * N


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(0.05, 0.5), min_size=2, max_size=5))
def test_sector_partition_property(raw):
    fracs = np.array(raw)
    fracs = np.round(fracs / fracs.sum(), 3)
    fracs[-1] = 1.0 - fracs[:-1].sum()
    if np.any(fracs < 0.05):
        return
    g = make_sector_grid(1.0, fracs, base_segments=1000)
    assert np.allclose(g.face_areas(), fracs, atol=1e-12)
