import numpy as np
import pytest

from colwave.errors import ValidationError
from colwave.linwave import (
    QuadratureSpec,
    check_support,
    duhamel,
    field_from_binary,
    field_to_binary,
    field_to_csv,
    linear_value,
    operator_norm_probe,
    solve_linear,
)
from colwave.nets import InitialDatum, ZERO_DATUM
from colwave.seminorms import Field, SpaceTimeGrid, constant_field

QUAD = QuadratureSpec(angular_points=16, polar_points=12)
GAUSS = InitialDatum("gaussian_bump", outer_radius=0.5, amplitude=1.0)
PLATEAU = InitialDatum("plateau_bump", outer_radius=0.8, inner_radius=0.6, amplitude=1.0)


def test_quadrature_validation():
    with pytest.raises(ValidationError, match="angular_points"):
        QuadratureSpec(angular_points=7)
    with pytest.raises(ValidationError, match="angular_points"):
        QuadratureSpec(angular_points=2)
    with pytest.raises(ValidationError, match="polar_points"):
        QuadratureSpec(polar_points=3)
    with pytest.raises(ValidationError, match="time_points_per_dt"):
        QuadratureSpec(time_points_per_dt=0)


# ---------------------------------------------------------------------------
# homogeneous solutions
# ---------------------------------------------------------------------------

def test_dalembert_translation_average():
    grid = SpaceTimeGrid.covering(1, 0.5, 0.5, dx=0.02, dt=0.01)
    field = solve_linear(GAUSS, ZERO_DATUM, None, grid, QUAD)
    tmesh, xmesh = grid.meshes()
    exact = 0.5 * (
        GAUSS.value((xmesh + tmesh)[..., None]) + GAUSS.value((xmesh - tmesh)[..., None])
    )
    np.testing.assert_allclose(field.samples, exact, atol=1e-8)


@pytest.mark.parametrize("dim", [1, 2, 3])
@pytest.mark.parametrize("t", [0.2, 0.45])
def test_plateau_mean_identity(dim, t):
    # closed-form means of the unit plateau: the velocity term integrates to t
    value = linear_value(ZERO_DATUM, PLATEAU, t, np.zeros(dim), QUAD)
    assert value == pytest.approx(t, abs=1e-6)


def test_zero_data_zero_solution():
    grid = SpaceTimeGrid.covering(2, 0.3, 0.2, dx=0.1, dt=0.05)
    field = solve_linear(ZERO_DATUM, ZERO_DATUM, None, grid, QUAD)
    assert np.all(field.samples == 0.0)


def test_initial_conditions_exact_and_velocity_consistent():
    quad = QuadratureSpec(angular_points=12, polar_points=10)
    u1 = InitialDatum("plateau_bump", outer_radius=0.4, inner_radius=0.2, amplitude=0.5)
    errs = []
    for dx in (0.04, 0.02):
        grid = SpaceTimeGrid.covering(1, 0.2, 0.5, dx=dx, dt=dx / 2)
        field = solve_linear(GAUSS, u1, None, grid, quad)
        pts = grid.spatial_points
        np.testing.assert_array_equal(field.samples[0], GAUSS.value(pts).reshape(grid.spatial_shape))
        fd_velocity = (field.samples[1] - field.samples[0]) / grid.dt
        errs.append(
            float(np.max(np.abs(fd_velocity - u1.value(pts).reshape(grid.spatial_shape))))
        )
    # one-sided velocity error is O(dt): halving dt roughly halves it
    assert errs[1] <= 0.65 * errs[0]


def test_linearity_in_data_and_source():
    grid = SpaceTimeGrid.covering(1, 0.4, 0.5, dx=0.05, dt=0.025)
    h = Field(grid, np.cos(grid.meshes()[1]) * grid.cone_mask(0))
    base = solve_linear(GAUSS, PLATEAU_SMALL, h, grid, QUAD)
    a = 3.7
    scaled = solve_linear(
        InitialDatum("gaussian_bump", outer_radius=0.5, amplitude=a),
        InitialDatum("plateau_bump", outer_radius=0.4, inner_radius=0.2, amplitude=0.5 * a),
        Field(grid, a * h.samples),
        grid,
        QUAD,
    )
    np.testing.assert_allclose(scaled.samples, a * base.samples, rtol=1e-12, atol=1e-13)


PLATEAU_SMALL = InitialDatum("plateau_bump", outer_radius=0.4, inner_radius=0.2, amplitude=0.5)


# ---------------------------------------------------------------------------
# Duhamel integral
# ---------------------------------------------------------------------------

def test_duhamel_zero_source():
    grid = SpaceTimeGrid.covering(1, 0.4, 0.2, dx=0.05, dt=0.025)
    assert duhamel(constant_field(grid, 0.0), 0.0, 0.3, QUAD) == 0.0


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_duhamel_constant_source(dim):
    # closed form: unit source integrates to t^2/2 while the integration
    # cone stays inside the sampled box
    grid = SpaceTimeGrid(dim=dim, horizon=0.5, support_radius=0.2,
                         spatial_extent=1.0, dx=0.1, dt=0.05)
    h = constant_field(grid, 1.0)
    t = 0.4
    val = duhamel(h, np.zeros(dim), t, QUAD)
    assert val == pytest.approx(t * t / 2.0, abs=1e-6)


def test_duhamel_time_out_of_range():
    grid = SpaceTimeGrid.covering(1, 0.4, 0.2, dx=0.05, dt=0.025)
    with pytest.raises(ValidationError, match="t"):
        duhamel(constant_field(grid, 1.0), 0.0, 0.5, QUAD)


def test_solve_linear_rejects_foreign_source_grid():
    grid = SpaceTimeGrid.covering(1, 0.4, 0.2, dx=0.05, dt=0.025)
    other = SpaceTimeGrid.covering(1, 0.4, 0.2, dx=0.1, dt=0.05)
    with pytest.raises(ValidationError, match="h"):
        solve_linear(ZERO_DATUM, ZERO_DATUM, constant_field(other, 1.0), grid, QUAD)


# ---------------------------------------------------------------------------
# support
# ---------------------------------------------------------------------------

def test_support_of_linear_solution():
    grid = SpaceTimeGrid.covering(1, 2.0, 1.0, dx=0.05, dt=0.025)
    bump = InitialDatum("gaussian_bump", outer_radius=1.0, amplitude=1.0)
    field = solve_linear(bump, ZERO_DATUM, None, grid, QUAD)
    report = check_support(field, 1.0, tol=1e-10)
    assert report.ok
    # the probe point (t, x) = (0.5, 2.0) sits outside the cone
    assert grid.node_radius.max() >= 2.0


def test_support_zero_and_constant_fields():
    grid = SpaceTimeGrid.covering(1, 0.4, 0.2, dx=0.05, dt=0.025)
    assert check_support(constant_field(grid, 0.0), 0.2).max_outside == 0.0
    report = check_support(constant_field(grid, 1.0), 0.2, tol=0.5)
    assert not report.ok and report.max_outside == 1.0


# ---------------------------------------------------------------------------
# operator norm probe
# ---------------------------------------------------------------------------

def test_probe_zero_data_not_applicable():
    grid = SpaceTimeGrid.covering(1, 0.4, 0.2, dx=0.05, dt=0.025)
    report = operator_norm_probe(ZERO_DATUM, ZERO_DATUM, None, grid, QUAD)
    assert all(entry.ratio is None for entry in report.entries)


def test_probe_plateau_velocity_3d():
    # Kirchhoff mean of a unit plateau is bounded by t * sup|u1|; with
    # T = 1 and the mean saturating at the origin the ratio approaches 1
    u1 = InitialDatum("plateau_bump", outer_radius=1.3, inner_radius=1.0, amplitude=1.0)
    grid = SpaceTimeGrid.covering(3, 1.0, 1.3, dx=0.2, dt=0.1)
    report = operator_norm_probe(ZERO_DATUM, u1, None, grid, QUAD)
    ratio = report.entries[0].ratio
    assert ratio == pytest.approx(1.0, abs=0.05)


def test_probe_gaussian_position_1d():
    grid = SpaceTimeGrid.covering(1, 1.0, 0.5, dx=0.02, dt=0.01)
    report = operator_norm_probe(GAUSS, ZERO_DATUM, None, grid, QUAD)
    ratio = report.entries[0].ratio
    assert ratio is not None and 0.0 < ratio <= 1.05


# ---------------------------------------------------------------------------
# quadrature stability and export
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("dim", [2, 3])
def test_quadrature_doubling_stable(dim):
    # at the plateau-mean configuration the integrand is constant over the
    # disk/sphere, so doubling the rule must not move the result at all
    coarse = QuadratureSpec(angular_points=16, polar_points=12)
    fine = QuadratureSpec(angular_points=32, polar_points=24)
    for t in (0.25, 0.45):
        a = linear_value(ZERO_DATUM, PLATEAU, t, np.zeros(dim), coarse)
        b = linear_value(ZERO_DATUM, PLATEAU, t, np.zeros(dim), fine)
        assert abs(a - b) < 1e-8


@pytest.mark.parametrize("dim", [2, 3])
def test_quadrature_refinement_converges_off_center(dim):
    # off-center the integrand varies over the sphere; the bump profile is
    # smooth but not analytic, so demand steady refinement, not 1e-8
    x = np.full(dim, 0.2)
    vals = [
        linear_value(ZERO_DATUM, PLATEAU, 0.7, x, QuadratureSpec(2 * n, n))
        for n in (12, 24, 48)
    ]
    assert abs(vals[1] - vals[2]) < abs(vals[0] - vals[1]) / 4.0
    assert abs(vals[0] - vals[1]) < 1e-3


def test_field_binary_roundtrip(tmp_path):
    grid = SpaceTimeGrid.covering(2, 0.3, 0.2, dx=0.1, dt=0.05)
    field = solve_linear(GAUSS, ZERO_DATUM, None, grid, QUAD)
    path = tmp_path / "field.bin"
    field_to_binary(field, path)
    back = field_from_binary(path)
    assert back.grid == grid
    np.testing.assert_array_equal(back.samples, field.samples)


def test_field_csv_layout(tmp_path):
    grid = SpaceTimeGrid.covering(1, 0.3, 0.2, dx=0.1, dt=0.05)
    field = constant_field(grid, 1.25)
    path = tmp_path / "field.csv"
    field_to_csv(field, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t,x,value"
    assert len(lines) == 1 + field.samples.size
    assert lines[1].split(",")[2] == "1.25"
