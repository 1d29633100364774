"""Foliation construction, evaluators, residues, flows, splitting."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liouville_lab.checks import (check_backward_complete, check_basin,
                                  check_gamma_invariance, gamma_samples,
                                  sample_off_singular)
from liouville_lab.geom import shoelace_area
from liouville_lab.grid2d import make_radial_grid, make_sector_grid
from liouville_lab.liouville2d import (DomainError, FoliationError,
                                       build_foliation, build_form,
                                       split_weights)


# -- foliation structure ------------------------------------------------------

def test_radial_foliation_is_radial_with_bisector_separatrices(radial4_form):
    f = radial4_form
    fol = f.fol
    for fc in f.faces:
        # separatrix to the origin vertex leaves p along the sector bisector
        for vid, th in fc.vertex_thetas:
            q = f.grid.vertices[vid].xy
            land = fc.boundary_point(th)
            assert np.linalg.norm(land - q) < 1e-9
        # leaves are straight rays from the marked point
        x1 = fc.leaf(0.3, 0.5)
        x2 = fc.leaf(0.3, 1.0)
        v1, v2 = x1 - fc.p, x2 - fc.p
        assert abs(v1[0] * v2[1] - v1[1] * v2[0]) < 1e-12


def test_betas_sum_to_one_against_boundary_action_oracle(radial4_form, pinwheel_form):
    for f in (radial4_form, pinwheel_form):
        for i in range(len(f.faces)):
            betas = f.fol.betas(i)
            assert abs(betas.sum() - 1.0) < 1e-12
            # oracle: trapezoid quadrature of the recentered shoelace
            # primitive over the polygon boundary between separatrix feet
            fc = f.faces[i]
            poly = f.grid.face_polygon(i) - fc.p
            q = np.roll(poly, -1, axis=0)
            piece = 0.5 * (poly[:, 0] * q[:, 1] - poly[:, 1] * q[:, 0])
            assert abs(piece.sum() / fc.area - 1.0) < 2e-4


def test_swept_area_law_against_polygon_oracle(radial3_form):
    fc = radial3_form.faces[0]
    for theta in (0.25, 0.5, 0.75):
        taus = np.linspace(0.0, theta, 3000)
        ring = np.array([fc.boundary_point(t) for t in taus])
        oracle = shoelace_area(np.vstack([fc.p[None, :], ring]))
        assert abs(oracle - theta * fc.area) < 1e-4 * fc.area


def test_sector_half_sweep(radial4_form):
    fc = radial4_form.faces[1]
    taus = np.linspace(0.0, 0.5, 2000)
    ring = np.array([fc.boundary_point(t) for t in taus])
    area = shoelace_area(np.vstack([fc.p[None, :], ring]))
    assert area == pytest.approx(0.5 * fc.area, rel=1e-5)


def test_non_star_shaped_face_rejected():
    # a marked point far off-center of a thin sector cannot see the whole face
    g = make_sector_grid(1.0, [0.05, 0.95])
    g.marked_points[1] = np.array([-0.4, -0.35])
    with pytest.raises((FoliationError, Exception)):
        build_foliation(g)


def test_irregular_grid_rejected():
    g = make_sector_grid(1.0, [0.6, 0.4])
    with pytest.raises(FoliationError):
        build_form(g)


# -- evaluators ---------------------------------------------------------------

def test_lambda_in_marked_chart(radial4_form):
    f = radial4_form
    fc = f.faces[0]
    a = fc.area
    # at adapted radius R = 0.1: lambda(d/dtheta) = R - a, lambda(leaf) = 0
    t = np.sqrt(0.1 / a)
    x = fc.leaf(0.37, t)
    lam = f.eval_lambda(x)
    dth = t * fc.boundary_velocity(0.37)
    assert lam @ dth == pytest.approx(0.1 - a, abs=1e-10)
    leaf_dir = (x - fc.p) / np.linalg.norm(x - fc.p)
    assert abs(lam @ leaf_dir) < 1e-12


def test_X_in_marked_chart(radial4_form):
    f = radial4_form
    fc = f.faces[0]
    a = fc.area
    t = np.sqrt(0.1 / a)
    x = fc.leaf(0.2, t)
    X = f.eval_X(x)
    # X = (R - a) d/dR: compare against the finite-difference of the leaf map
    h = 1e-7
    R = 0.1
    dxdR = (fc.leaf(0.2, np.sqrt((R + h) / a)) - fc.leaf(0.2, np.sqrt((R - h) / a))) / (2 * h)
    assert np.allclose(X, (R - a) * dxdR, atol=1e-6)
    # pointing at the marked point
    assert X @ (x - fc.p) < 0


def test_lambda_vanishes_on_grid(radial4_form, pinwheel_form):
    for f in (radial4_form, pinwheel_form):
        for fc in f.faces:
            for th in (0.15, 0.45, 0.85):
                x = fc.boundary_point(th)
                if f.chart_at(x) is not None:
                    continue
                assert np.linalg.norm(f.eval_lambda(x)) < 1e-8
                assert np.linalg.norm(f.eval_X(x)) < 1e-8


def test_singular_evaluations_raise(radial4_form):
    f = radial4_form
    with pytest.raises(DomainError):
        f.eval_lambda(f.faces[0].p)
    outside = np.array([2.0, 2.0])
    with pytest.raises(DomainError):
        f.eval_lambda(outside)


def test_presmoothing_vertex_band_is_forbidden():
    g = make_radial_grid(4, 1.0)
    f = build_form(g, smoothing=False)
    with pytest.raises(DomainError):
        f.eval_lambda(np.array([1e-3, 2e-3]))  # inside the origin chart
    # away from vertices the raw form evaluates fine
    assert np.isfinite(f.eval_lambda(np.array([0.2, 0.1]))).all()


def test_smoothed_vertex_chart_formula(radial4_form):
    # inside the origin chart the covector matches the model formula
    f = radial4_form
    chart = [c for c in f.charts if not c.boundary][0]
    x = chart.center + np.array([0.3, 0.2]) * chart.ambient_radius()
    lam = f.eval_lambda(x)
    R, th, _ = chart.chart_coords(x, f.grid)
    m = chart.mult
    a_th = R - chart.chi(R) * np.cos(2 * np.pi * m * th)
    a_R = -chart.chi_prime(R) / (2 * np.pi * m) * np.sin(2 * np.pi * m * th)
    # reconstruct through the chart frame
    xi = x - chart.center
    dth = np.array([-xi[1], xi[0]]) / (2 * np.pi * (xi @ xi))
    dR = 2 * np.pi * xi
    assert np.allclose(lam, a_th * dth + a_R * dR, atol=1e-12)
    # X is radial on the branch rays
    ray = chart.center + np.array([chart.ambient_radius() * 0.4, 0.0])
    X = f.eval_X(ray)
    assert abs(X[1]) < 1e-12 and X[0] > 0


def test_loop_integrals_approximate_residue(radial4_form):
    f = radial4_form
    for i, fc in enumerate(f.faces):
        a = fc.area
        v = f.residue_loop_integral(i, 1e-3)
        assert v == pytest.approx(1e-3 - a, abs=1e-9)


def test_residue_examples():
    g = make_radial_grid(2, 1.0)   # faces of weight 1/2
    f = build_form(g)
    assert f.residue_loop_integral(0, 1e-2) == pytest.approx(-0.49, abs=1e-3)
    g2 = make_radial_grid(2, 2.0)  # faces of weight 1
    f2 = build_form(g2)
    assert f2.residue_loop_integral(0, 1e-3) == pytest.approx(-0.999, abs=1e-4)


# -- closedness ---------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_closedness_at_random_points(radial3_form, seed):
    rng = np.random.default_rng(seed)
    x = sample_off_singular(radial3_form, 1, rng)[0]
    h = 1e-5
    f = radial3_form
    dl = ((f.eval_lambda(x + [h, 0])[1] - f.eval_lambda(x - [h, 0])[1])
          - (f.eval_lambda(x + [0, h])[0] - f.eval_lambda(x - [0, h])[0])) / (2 * h)
    assert abs(dl - 1.0) < 1e-4


# -- flow ---------------------------------------------------------------------

def test_flow_examples(radial4_form):
    f = radial4_form
    fc = f.faces[2]
    tr = f.flow(fc.leaf(0.4, 0.75), 20.0)
    assert tr.classification == "converged" and tr.face == 2
    assert tr.t_plus is not None and tr.t_plus < 20.0

    # marked point is fixed
    tr0 = f.flow(fc.p, 20.0)
    assert tr0.classification == "converged"
    assert np.allclose(tr0.points[-1][1:], fc.p)

    # smooth edge point stays on the skeleton both ways
    xg = fc.boundary_point(0.5)
    for direction in (1, -1):
        tr1 = f.flow(xg, 20.0, direction=direction)
        for (_, px, py) in tr1.points:
            assert f.grid.grid_distance(np.array([px, py])) < 1e-3


def test_face_zone_flow_is_exact_exponential(radial4_form):
    f = radial4_form
    fc = f.faces[0]
    a = fc.area
    t0 = 0.6
    x = fc.leaf(0.3, t0)
    s = 0.3   # below the finite hitting time -log(1 - t0^2)
    tr = f.flow(x, s)
    R_expect = a + (a * t0 * t0 - a) * np.exp(s)
    end = np.asarray(tr.points[-1][1:])
    _, t_end = fc.labels(end)
    assert a * t_end**2 == pytest.approx(R_expect, abs=1e-10)


def test_hit_time_formula(radial4_form):
    f = radial4_form
    fc = f.faces[1]
    t0 = 0.35
    tr = f.flow(fc.leaf(0.6, t0), 20.0)
    assert tr.t_plus == pytest.approx(-np.log(1 - t0 * t0), abs=1e-9)


def test_gamma_and_basin_batteries(pinwheel_form):
    r1 = check_basin(pinwheel_form, n=300, seed=3)
    assert r1.ok, r1.line()
    r2 = check_gamma_invariance(pinwheel_form)
    assert r2.ok, r2.line()
    r3 = check_backward_complete(pinwheel_form, n=100)
    assert r3.ok, r3.line()


def test_periodic_flow(periodic_form):
    f = periodic_form
    tr = f.flow(np.array([0.7, 0.41]), 20.0)
    assert tr.classification == "converged" and tr.face == 0
    tr2 = f.flow(np.array([1.3, 0.2]), 20.0)
    assert tr2.classification == "converged" and tr2.face == 1
    # edge point of the lattice grid stays put
    tr3 = f.flow(np.array([0.37, 1.0]), 20.0)
    assert tr3.classification == "skeleton"


# -- splitting ----------------------------------------------------------------

def test_split_weights_residues(radial4_form):
    f = radial4_form
    a = f.faces[0].area  # 0.25 + boundary-resolution epsilon
    sf = split_weights(f, 0, (0.4 * a, 0.6 * a))
    rho = 0.2 * np.linalg.norm(sf.p1 - sf.p2)
    v1 = sf.residue_loop_integral(1, rho)
    v2 = sf.residue_loop_integral(2, rho)
    assert v1 == pytest.approx(-0.4 * a, abs=1e-4)
    assert v2 == pytest.approx(-0.6 * a, abs=1e-4)
    # a tighter loop stays at the same residue (the pole term dominates)
    v1b = sf.residue_loop_integral(1, 0.25 * rho)
    assert v1b == pytest.approx(-0.4 * a, abs=1e-4)


def test_split_rejects_degenerate_parts(radial4_form):
    a = radial4_form.faces[0].area
    with pytest.raises(ValueError):
        split_weights(radial4_form, 0, (a, 0.0))
    with pytest.raises(ValueError):
        split_weights(radial4_form, 0, (0.5 * a, 0.1 * a))


def test_split_flow_unchanged_outside_disc(radial4_form):
    f = radial4_form
    a = f.faces[0].area
    sf = split_weights(f, 0, (0.5 * a, 0.5 * a))
    start = f.faces[0].leaf(0.25, 0.9)
    base = f.flow(start, 3.0)
    split = sf.flow(start, 3.0)
    # pointwise equality until the trajectory enters the split disc
    matched = 0
    for (s, x, y), (sb, xb, yb) in zip(split.points, base.points):
        if sf.in_disc(np.array([x, y])):
            break
        assert s == pytest.approx(sb, abs=1e-12)
        assert (x, y) == pytest.approx((xb, yb), abs=1e-12)
        matched += 1
    assert matched >= 1
    assert split.classification == "converged"
    assert base.face == split.face


def test_split_basin_equality(radial4_form):
    f = radial4_form
    a = f.faces[0].area
    sf = split_weights(f, 0, (0.3 * a, 0.7 * a))
    rng = np.random.default_rng(11)
    pts = sample_off_singular(f, 14, rng, chart_margin=0.0, gamma_margin=1e-3)
    for x in pts:
        i, _, _ = f.face_at(x)
        tr = sf.flow(x, 15.0)
        if i == 0:
            assert tr.classification == "converged"
        else:
            base = f.flow(x, 15.0)
            assert base.face == i


def test_gamma_samples_stay_put(radial3_form):
    pts = gamma_samples(radial3_form)
    for x in pts[::5]:
        tr = radial3_form.flow(x, 20.0)
        end = np.asarray(tr.points[-1][1:])
        assert radial3_form.grid.grid_distance(end) < 1e-3
