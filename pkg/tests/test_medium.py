import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zcs.errors import (
    DomainError,
    GeometryError,
    ParameterError,
    SupportViolationError,
)
from zcs.medium import (
    Chord,
    chord_for,
    eval_beta,
    line_sample,
    load_phantom_config,
    make_phantom,
    medium_from_config,
    medium_to_csv,
    observation_geometry,
    phantom_config,
    save_phantom_config,
)


def gaussian_medium(grid_n=129, sigma=0.5, beta0=0.01):
    return make_phantom("gaussian", [0.0, 0.0, sigma, beta0], grid_n=grid_n)


# -- phantom construction -----------------------------------------------------

def test_zero_phantom_is_identically_zero():
    m = make_phantom("zero", [], grid_n=65)
    assert m.beta.shape == (65, 65)
    assert np.all(m.beta == 0.0)


def test_gaussian_peak_at_center():
    m = gaussian_medium()
    assert m.beta.max() == pytest.approx(0.01, rel=1e-12)
    # the origin is a node on an odd grid
    i = m.grid_n // 2
    assert m.axis[i] == pytest.approx(0.0, abs=1e-12)
    assert m.beta[i, i] == pytest.approx(0.01, rel=1e-12)


def test_two_balls_values():
    m = make_phantom(
        "two_balls", [0.4, 0.0, 0.2, 0.01, -0.4, 0.0, 0.2, 0.01], grid_n=129
    )
    assert eval_beta(m, np.array([0.4, 0.0])) == pytest.approx(0.01)
    assert eval_beta(m, np.array([0.0, 0.0])) == 0.0


def test_medium_invariants_hold_on_grid():
    for m in (gaussian_medium(grid_n=65),
              make_phantom("two_balls", [0.4, 0.0, 0.2, 0.01, -0.4, 0.0, 0.2, 0.02],
                           grid_n=65)):
        assert np.all(m.beta >= 0.0)
        assert np.all(m.beta[m.outside_ball_mask()] == 0.0)
        assert m.spacing > 0
        # grid covers the ball with margin
        assert m.axis[0] < -m.radius_R < m.radius_R < m.axis[-1]


def test_phantom_rejections():
    with pytest.raises(ParameterError):
        make_phantom("gaussian", [0.0, 0.0, 0.5, -0.01])
    with pytest.raises(ParameterError):
        make_phantom("gaussian", [0.0, 0.0, -0.5, 0.01])
    with pytest.raises(SupportViolationError):
        make_phantom("gaussian", [0.97, 0.0, 0.1, 0.01])
    # ball poking through the boundary leaves mass on it
    with pytest.raises(SupportViolationError):
        make_phantom("two_balls", [0.9, 0.0, 0.2, 0.01, -0.4, 0.0, 0.2, 0.01])
    with pytest.raises(ParameterError):
        make_phantom("blob", [1.0])


def test_two_balls_boundary_ball_with_zero_height_allowed():
    # zero-height ball carries no mass, so touching the boundary is fine
    m = make_phantom("two_balls", [0.9, 0.0, 0.2, 0.0, -0.3, 0.0, 0.2, 0.01],
                     grid_n=65)
    assert m.beta.max() == pytest.approx(0.01)


# -- interpolation ------------------------------------------------------------

def test_eval_beta_examples():
    m = gaussian_medium()
    assert eval_beta(m, np.array([0.3, 0.2])) >= 0.0
    assert eval_beta(m, np.array([0.0, 0.0])) == pytest.approx(0.01, rel=1e-12)
    # analytic value at (0.5, 0): beta0 * e^{-1}; bilinear on a 129^2 grid
    assert eval_beta(m, np.array([0.5, 0.0])) == pytest.approx(
        0.01 * np.exp(-1.0), abs=1e-4
    )


def test_eval_beta_exact_at_nodes():
    m = gaussian_medium(grid_n=65)
    pts = m.grid_points()
    vals = eval_beta(m, pts)
    assert np.allclose(vals, m.beta.ravel(), rtol=0, atol=1e-15)


def test_interpolation_error_against_analytic_phantom():
    # second-order interpolation of the smooth phantom on the 129^2 grid
    m = gaussian_medium()
    rng = np.random.default_rng(7)
    pts = rng.uniform(-0.99, 0.99, size=(4000, 2))
    exact = m.phantom.value(pts)
    interp = eval_beta(m, pts)
    assert np.max(np.abs(interp - exact)) <= 1e-4
    assert np.all(interp >= 0.0)


def test_eval_beta_vanishes_outside_ball():
    m = gaussian_medium(grid_n=65)
    pts = m.grid_points()
    r = np.linalg.norm(pts, axis=1)
    assert np.all(eval_beta(m, pts[r >= 1.0]) == 0.0)


def test_eval_beta_out_of_box():
    m = gaussian_medium(grid_n=65)
    with pytest.raises(DomainError):
        eval_beta(m, np.array([5.0, 0.0]))


# -- geometry -----------------------------------------------------------------

def test_chord_examples():
    g = observation_geometry(1.0, np.pi / 2, 0.0)   # nu = (0, 1), diameter
    c = chord_for(g)
    assert np.allclose(c.p0, [0.0, 1.0], atol=1e-12)
    assert np.allclose(c.p1, [0.0, -1.0], atol=1e-12)

    from zcs.medium import Geometry
    x = np.array([np.sqrt(2) / 2, np.sqrt(2) / 2])
    c = chord_for(Geometry(np.array([1.0, 0.0]), x, 1.0, 1.0))
    assert np.allclose(c.p1, [-np.sqrt(2) / 2, np.sqrt(2) / 2], atol=1e-12)


def test_chord_requires_forward_side():
    from zcs.medium import Geometry
    with pytest.raises(GeometryError):
        chord_for(Geometry(np.array([0.0, 1.0]), np.array([1.0, 0.0]), 1.0, 1.0))


def test_geometry_validation():
    from zcs.medium import Geometry
    with pytest.raises(GeometryError):
        Geometry(np.array([0.0, 1.1]), np.array([0.0, 1.0]), 1.0, 1.0)
    with pytest.raises(GeometryError):
        Geometry(np.array([0.0, 1.0]), np.array([0.0, 1.01]), 1.0, 1.0)
    with pytest.raises(GeometryError):
        Geometry(np.array([0.0, 1.0]), np.array([0.0, 1.0]), 1.0, 0.5)
    with pytest.raises(GeometryError):
        observation_geometry(1.0, 0.3, 1.0)


@settings(max_examples=200, deadline=None)
@given(
    angle=st.floats(min_value=0.0, max_value=2 * np.pi),
    offset=st.floats(min_value=-0.999, max_value=0.999),
)
def test_chord_geometry_properties(angle, offset):
    g = observation_geometry(1.0, angle, offset)
    c = chord_for(g)
    # midpoint is perpendicular to nu; endpoints sit on the circle
    assert abs(np.dot(c.midpoint, g.nu)) <= 1e-9
    assert abs(np.linalg.norm(c.p0) - 1.0) <= 1e-9
    assert abs(np.linalg.norm(c.p1) - 1.0) <= 1e-9
    assert abs(np.dot(c.p1 - c.p0, g.nu) + c.length) <= 1e-9  # runs against nu


def test_line_sample_weights_integrate_length():
    pts, w = line_sample([0.0, 0.0], [3.0, 4.0], max_step=0.05)
    assert w.sum() == pytest.approx(5.0, rel=1e-12)
    assert np.all(np.linalg.norm(np.diff(pts, axis=0), axis=1) <= 0.05 + 1e-12)
    # trapezoid rule on a linear integrand is exact
    f = pts[:, 0] + 2.0 * pts[:, 1]
    assert np.dot(w, f) == pytest.approx(5.0 * (1.5 + 2.0 * 2.0), rel=1e-12)


# -- serialization ------------------------------------------------------------

def test_phantom_config_round_trip(tmp_path):
    m = gaussian_medium(grid_n=65)
    cfg = phantom_config(m)
    assert cfg["kind"] == "gaussian" and cfg["grid_n"] == 65
    m2 = medium_from_config(cfg)
    assert np.array_equal(m.beta, m2.beta)

    path = tmp_path / "phantom.json"
    save_phantom_config(m, path)
    m3 = load_phantom_config(path)
    assert np.array_equal(m.beta, m3.beta)
    with open(path) as fh:
        assert set(json.load(fh)) == {"kind", "params", "dim", "R", "grid_n"}


def test_medium_csv_dump(tmp_path):
    m = gaussian_medium(grid_n=33)
    path = tmp_path / "medium.csv"
    medium_to_csv(m, path)
    with open(path) as fh:
        assert fh.readline().strip() == "x,y,beta"
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (33 * 33, 3)
    assert data[:, 2].max() == pytest.approx(m.beta.max(), rel=1e-10)


def test_dim3_forward_evaluation():
    m = make_phantom("gaussian", [0.0, 0.0, 0.0, 0.5, 0.01], dim=3, grid_n=33)
    assert m.beta.shape == (33, 33, 33)
    assert eval_beta(m, np.array([0.0, 0.0, 0.0])) == pytest.approx(0.01, rel=1e-12)
    assert np.all(m.beta[m.outside_ball_mask()] == 0.0)
