import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from colwave.errors import UnsupportedOrderError, ValidationError
from colwave.nets import (
    InitialDatum,
    NonlinearitySpec,
    Problem,
    datum_derivative,
    eval_datum,
    eval_nonlinearity,
    make_ladder,
    nonlinearity_derivative,
    power_number,
)


# ---------------------------------------------------------------------------
# ladders
# ---------------------------------------------------------------------------

def test_make_ladder_geometric():
    lad = make_ladder(0.5, 0.5, 3)
    np.testing.assert_allclose(lad.values, [0.5, 0.25, 0.125], rtol=0)


def test_make_ladder_powers_of_ten():
    lad = make_ladder(1.0, 0.1, 4)
    np.testing.assert_allclose(lad.values, [1.0, 0.1, 0.01, 0.001], rtol=1e-15)


def test_make_ladder_rejects_bad_ratio():
    with pytest.raises(ValidationError, match="ratio"):
        make_ladder(0.5, 1.5, 3)


@pytest.mark.parametrize(
    "kwargs,name",
    [
        (dict(eps0=0.0, ratio=0.5, count=3), "eps0"),
        (dict(eps0=1.5, ratio=0.5, count=3), "eps0"),
        (dict(eps0=0.5, ratio=0.5, count=2), "count"),
    ],
)
def test_ladder_validation(kwargs, name):
    with pytest.raises(ValidationError, match=name):
        make_ladder(**kwargs)


def test_power_number_values():
    lad = make_ladder(1.0, 0.1, 3)
    assert power_number(lad, 1.0).values == (1.0, 0.1, 0.01)
    assert power_number(lad, 0.0).values == (1.0, 1.0, 1.0)
    squares = power_number(make_ladder(0.5, 0.5, 3), 2.0)
    assert squares.values[:2] == (0.25, 0.0625)
    assert squares.nominal_exponent == 2.0


@given(b1=st.floats(-3, 3), b2=st.floats(-3, 3))
@settings(max_examples=50, deadline=None)
def test_power_number_multiplicative(b1, b2):
    lad = make_ladder(0.5, 0.5, 6)
    prod = power_number(lad, b1) * power_number(lad, b2)
    expected = power_number(lad, b1 + b2)
    assert prod.nominal_exponent == pytest.approx(b1 + b2)
    for a, b in zip(prod.values, expected.values):
        assert a == pytest.approx(b, rel=1e-12)


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------

def test_plateau_values():
    d = InitialDatum("plateau_bump", outer_radius=1.0, inner_radius=0.5, amplitude=1.0)
    assert eval_datum(d, 0.0) == 1.0
    assert eval_datum(d, 2.0) == 0.0
    # exactly the amplitude on the closed inner ball
    for x in (0.0, 0.3, 0.49, 0.5):
        assert eval_datum(d, x) == 1.0
    # strictly between 0 and amplitude on the open annulus
    mid = eval_datum(d, 0.75)
    assert 0.0 < mid < 1.0


def test_plateau_flat_inside():
    d = InitialDatum("plateau_bump", outer_radius=1.0, inner_radius=0.5, amplitude=2.0)
    pts = np.linspace(-0.5, 0.5, 41)[:, None]
    np.testing.assert_array_equal(d.value(pts), 2.0)
    np.testing.assert_array_equal(d.gradient(pts), 0.0)
    np.testing.assert_array_equal(d.hessian(pts), 0.0)


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_datum_support(dim):
    rng = np.random.default_rng(7)
    for kind, kwargs in [
        ("plateau_bump", dict(outer_radius=0.8, inner_radius=0.4)),
        ("gaussian_bump", dict(outer_radius=0.8)),
    ]:
        d = InitialDatum(kind, amplitude=1.3, **kwargs)
        dirs = rng.normal(size=(100, dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        radii = 0.8 + rng.uniform(0.0, 5.0, size=(100, 1))
        assert np.all(d.value(dirs * radii) == 0.0)
        assert np.all(d.gradient(dirs * radii) == 0.0)


@pytest.mark.parametrize("dim", [1, 2, 3])
@pytest.mark.parametrize(
    "datum",
    [
        InitialDatum("gaussian_bump", outer_radius=1.0, amplitude=1.0),
        InitialDatum("plateau_bump", outer_radius=1.0, inner_radius=0.4, amplitude=0.7),
    ],
    ids=["gaussian", "plateau"],
)
def test_datum_gradient_matches_finite_differences(dim, datum):
    # centered finite differences as the independent derivative oracle
    rng = np.random.default_rng(3)
    pts = rng.uniform(-0.95, 0.95, size=(20, dim))
    h = 1e-4
    grad = datum.gradient(pts)
    for axis in range(dim):
        e = np.zeros(dim)
        e[axis] = h
        fd = (datum.value(pts + e) - datum.value(pts - e)) / (2 * h)
        np.testing.assert_allclose(grad[:, axis], fd, atol=1e-6)


@pytest.mark.parametrize("dim", [1, 3])
def test_datum_hessian_matches_gradient_differences(dim):
    datum = InitialDatum("gaussian_bump", outer_radius=1.0, amplitude=1.0)
    rng = np.random.default_rng(11)
    pts = rng.uniform(-0.9, 0.9, size=(20, dim))
    h = 1e-4
    hess = datum.hessian(pts)
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = h
        fd = (datum.gradient(pts + e) - datum.gradient(pts - e)) / (2 * h)
        np.testing.assert_allclose(hess[:, :, j], fd, rtol=2e-4, atol=1e-6)


def test_datum_derivative_dispatch():
    d = InitialDatum("gaussian_bump", outer_radius=1.0, amplitude=1.0)
    x = np.array([0.3, -0.2])
    assert datum_derivative(d, x, (0, 0)) == eval_datum(d, x)
    assert datum_derivative(d, x, (1, 0)) == pytest.approx(d.gradient(x[None])[0, 0])
    assert datum_derivative(d, x, (1, 1)) == pytest.approx(d.hessian(x[None])[0, 0, 1])
    assert datum_derivative(d, x, (0, 2)) == pytest.approx(d.hessian(x[None])[0, 1, 1])
    with pytest.raises(UnsupportedOrderError):
        datum_derivative(d, x, (2, 1))


def test_datum_validation():
    with pytest.raises(ValidationError, match="kind"):
        InitialDatum("box")
    with pytest.raises(ValidationError, match="inner_radius"):
        InitialDatum("plateau_bump", outer_radius=1.0)
    with pytest.raises(ValidationError, match="inner_radius"):
        InitialDatum("plateau_bump", outer_radius=1.0, inner_radius=1.5)
    with pytest.raises(ValidationError, match="outer_radius"):
        InitialDatum("gaussian_bump", outer_radius=0.0)


# ---------------------------------------------------------------------------
# nonlinearities
# ---------------------------------------------------------------------------

def test_polynomial_value():
    f = NonlinearitySpec("polynomial", (0.0, 0.0, 2.0))  # 2 u^3
    assert eval_nonlinearity(f, 2.0) == 16.0
    assert eval_nonlinearity(f, 0.0) == 0.0
    assert nonlinearity_derivative(f, 2.0) == pytest.approx(24.0)


def test_sine_and_exp():
    assert eval_nonlinearity(NonlinearitySpec("sine"), 0.0) == 0.0
    assert eval_nonlinearity(NonlinearitySpec("exp_minus_one"), 1.0) == pytest.approx(
        math.e - 1.0, rel=1e-12
    )
    assert eval_nonlinearity(NonlinearitySpec("zero"), 3.0) == 0.0


def test_constant_term_rejected():
    with pytest.raises(ValidationError, match="constant_term"):
        NonlinearitySpec("polynomial", (1.0,), constant_term=0.5)


def test_nonlinearity_validation():
    with pytest.raises(ValidationError, match="kind"):
        NonlinearitySpec("tanh")
    with pytest.raises(ValidationError, match="coefficients"):
        NonlinearitySpec("polynomial", ())
    with pytest.raises(ValidationError, match="coefficients"):
        NonlinearitySpec("sine", (1.0,))


@given(
    kind=st.sampled_from(["sine", "exp_minus_one", "zero"]),
)
@settings(max_examples=20, deadline=None)
def test_f_vanishes_at_zero(kind):
    assert eval_nonlinearity(NonlinearitySpec(kind), 0.0) == 0.0


@given(coeffs=st.lists(st.floats(-5, 5), min_size=1, max_size=6))
@settings(max_examples=50, deadline=None)
def test_polynomial_vanishes_at_zero(coeffs):
    f = NonlinearitySpec("polynomial", tuple(coeffs))
    assert eval_nonlinearity(f, 0.0) == 0.0


def test_nonlinearity_derivative_matches_finite_differences():
    h = 1e-6
    for spec in (
        NonlinearitySpec("polynomial", (1.0, -0.5, 2.0)),
        NonlinearitySpec("sine"),
        NonlinearitySpec("exp_minus_one"),
    ):
        for u in (-1.2, 0.0, 0.7):
            fd = (eval_nonlinearity(spec, u + h) - eval_nonlinearity(spec, u - h)) / (2 * h)
            assert nonlinearity_derivative(spec, u) == pytest.approx(fd, rel=1e-6, abs=1e-8)


# ---------------------------------------------------------------------------
# problems
# ---------------------------------------------------------------------------

def _datum(r=0.5):
    return InitialDatum("gaussian_bump", outer_radius=r, amplitude=1.0)


def test_problem_validation():
    ok = Problem(
        dim=2, horizon=1.0, support_radius=0.5, u0=_datum(), u1=InitialDatum("zero"),
        f=NonlinearitySpec("sine"), small_exponent=1.0,
    )
    assert ok.small_factor(0.5) == 0.5
    with pytest.raises(ValidationError, match="dim"):
        Problem(dim=4, horizon=1.0, support_radius=0.5, u0=_datum(),
                u1=InitialDatum("zero"), f=NonlinearitySpec("sine"))
    with pytest.raises(ValidationError, match="small_exponent"):
        Problem(dim=1, horizon=1.0, support_radius=0.5, u0=_datum(),
                u1=InitialDatum("zero"), f=NonlinearitySpec("sine"), small_exponent=0.0)
    with pytest.raises(ValidationError, match="u0"):
        Problem(dim=1, horizon=1.0, support_radius=0.3, u0=_datum(0.5),
                u1=InitialDatum("zero"), f=NonlinearitySpec("sine"))
