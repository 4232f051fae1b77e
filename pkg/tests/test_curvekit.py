import math

import numpy as np
import pytest
from scipy.integrate import quad

from curveflow.curvekit import (
    CLOSED,
    OPEN,
    CurveSpec,
    SampledCurve,
    arclength,
    d_ds,
    d_du4,
    sample,
    speed,
    total_length,
)
from curveflow.errors import (
    DegenerateCurveError,
    DimensionMismatch,
    MixedCausalityError,
    NullCurveError,
)
from curveflow.minkowski import CausalCharacter

TWO_PI = 2.0 * math.pi


def spec(components, domain, topology=OPEN, samples=128):
    return CurveSpec.from_strings(components, domain, topology, samples)


def test_sample_circle_spacelike():
    c = sample(spec(("0", "cos(u)", "sin(u)"), (0, TWO_PI), CLOSED, 256))
    assert c.char is CausalCharacter.SPACELIKE
    assert c.samples == 256 and c.n == 3


def test_sample_hyperbola_timelike():
    c = sample(spec(("sinh(u)", "cosh(u)"), (-1, 1), OPEN, 128))
    assert c.char is CausalCharacter.TIMELIKE


def test_sample_null_curve_rejected():
    with pytest.raises(NullCurveError):
        sample(spec(("u", "u", "0"), (0, 1)))


def test_sample_mixed_causality_rejected():
    # tangent (2u, 1) flips character at u = 0.5; the grid hops over the
    # null point so the mixed-character error (not the null one) fires
    with pytest.raises(MixedCausalityError):
        sample(spec(("u^2", "u"), (0.41, 0.61), OPEN, 16))


def test_sample_degenerate_speed_rejected():
    with pytest.raises(DegenerateCurveError):
        sample(spec(("0", "u^3", "0"), (-1, 1), OPEN, 17))


def test_closed_requires_matching_endpoints():
    with pytest.raises(ValueError):
        sample(spec(("0", "u", "0"), (0, 1), CLOSED))


def test_minimum_samples():
    with pytest.raises(ValueError):
        sample(spec(("0", "cos(u)", "sin(u)"), (0, TWO_PI), CLOSED, 8))


def test_dimension_mismatch():
    bad = CurveSpec(3, tuple(CurveSpec.from_strings(("0", "u"), (0, 1)).components), (0, 1))
    with pytest.raises(DimensionMismatch):
        bad.validate()


def test_component_variable_restriction():
    with pytest.raises(ValueError):
        sample(spec(("0", "cos(t)", "sin(u)"), (0, TWO_PI), CLOSED))


def test_speed_examples(circle_256):
    assert speed(circle_256, 0) == pytest.approx(1.0, abs=1e-12)
    assert speed(circle_256, 100) == pytest.approx(1.0, abs=1e-12)
    c2 = sample(spec(("2*u", "0", "0"), (0, 1)))
    assert all(speed(c2, i) == pytest.approx(2.0) for i in (0, 64, 127))
    c3 = sample(spec(("0", "cos(2*u)", "sin(2*u)"), (0, math.pi), CLOSED))
    assert speed(c3, 5) == pytest.approx(2.0, abs=1e-12)


def test_arclength_examples(circle_256):
    assert arclength(circle_256, 0) == 0.0
    assert total_length(circle_256) == pytest.approx(TWO_PI, abs=1e-8)
    c2 = sample(spec(("2*u", "0", "0"), (0, 1)))
    assert total_length(c2) == pytest.approx(2.0, abs=1e-10)


def test_arclength_monotone(hyperbola_256):
    s = [arclength(hyperbola_256, i) for i in range(hyperbola_256.samples)]
    assert all(b >= a for a, b in zip(s, s[1:]))


def test_index_bounds(circle_256):
    with pytest.raises(IndexError):
        speed(circle_256, 256)
    with pytest.raises(IndexError):
        arclength(circle_256, -1)


def test_d_ds_constant_is_zero(circle_256):
    out = d_ds(np.ones(circle_256.samples), circle_256)
    assert np.max(np.abs(out)) < 1e-14


def test_d_ds_of_arclength_is_one(hyperbola_256):
    # open curve: s is a smooth non-periodic grid function
    out = d_ds(hyperbola_256.s, hyperbola_256)
    assert np.max(np.abs(out - 1.0)) < 1e-4


def test_d_ds_sin_on_circle(circle_256):
    out = d_ds(np.sin(circle_256.s), circle_256)
    assert np.max(np.abs(out - np.cos(circle_256.s))) < 5e-4


def test_d_ds_second_order():
    errs = []
    for n in (128, 256, 512):
        c = sample(spec(("sinh(u)", "cosh(u)"), (-1, 1), OPEN, n))
        errs.append(np.max(np.abs(d_ds(np.sin(c.s), c) - np.cos(c.s))))
    for a, b in zip(errs, errs[1:]):
        assert 3.0 < a / b < 5.5


def test_d_ds_linear(hyperbola_256):
    rng = np.random.default_rng(5)
    f, g = rng.standard_normal((2, hyperbola_256.samples))
    lhs = d_ds(2.5 * f - 1.5 * g, hyperbola_256)
    rhs = 2.5 * d_ds(f, hyperbola_256) - 1.5 * d_ds(g, hyperbola_256)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


def test_d_ds_vector_valued(circle_256):
    out = d_ds(circle_256.points, circle_256)
    expected = np.stack(
        [np.zeros(256), -np.sin(circle_256.grid), np.cos(circle_256.grid)], axis=1
    )
    assert np.max(np.abs(out - expected)) < 2e-4


def test_simpson_convergence_sixteenfold():
    # Non-unit-speed reparametrizations of the catalog geometries on
    # windows where the speed is not periodic, so composite Simpson shows
    # its clean fourth-order signature.
    arc = lambda n: spec(
        ("0", "cos(u + 0.2*sin(2*u))", "sin(u + 0.2*sin(2*u))"), (0.0, 2.7), OPEN, n
    )
    hyp = lambda n: spec(
        ("sinh(u + 0.2*sin(2*u))", "cosh(u + 0.2*sin(2*u))"), (-1.0, 1.0), OPEN, n
    )
    for build, length in (
        (arc, quad(lambda u: 1 + 0.4 * np.cos(2 * u), 0, 2.7, epsabs=1e-14)[0]),
        (hyp, quad(lambda u: abs(1 + 0.4 * np.cos(2 * u)), -1, 1, epsabs=1e-14)[0]),
    ):
        errs = [abs(total_length(sample(build(n))) - length) for n in (65, 129, 257)]
        for a, b in zip(errs, errs[1:]):
            assert 10.0 < a / b < 22.0, errs


def test_quadrature_rule_recorded(circle_256):
    assert circle_256.quadrature == "simpson"
    odd_closed = sample(spec(("0", "cos(u)", "sin(u)"), (0, TWO_PI), CLOSED, 127))
    assert odd_closed.quadrature == "trapezoid"
    assert total_length(odd_closed) == pytest.approx(TWO_PI, abs=1e-8)


def test_reparametrization_invariance():
    c1 = sample(spec(("0", "cos(u)", "sin(u)"), (0, TWO_PI), CLOSED, 256))
    c2 = sample(spec(("0", "cos(2*u)", "sin(2*u)"), (0, math.pi), CLOSED, 256))
    assert abs(total_length(c1) - total_length(c2)) < 1e-8


def test_from_points_matches_jet_sampling(circle_256):
    c = SampledCurve.from_points(circle_256.points, circle_256.grid, True, 3)
    assert not c.exact_derivs
    assert c.char is CausalCharacter.SPACELIKE
    # fourth-order metric tangents: speed and length agree to ~h^4
    assert np.max(np.abs(c.speeds - 1.0)) < 1e-7
    assert abs(c.total_length - TWO_PI) < 1e-6


def test_from_points_rejects_non_finite(circle_256):
    pts = circle_256.points.copy()
    pts[5, 1] = np.inf
    with pytest.raises(ValueError):
        SampledCurve.from_points(pts, circle_256.grid, True, 2)


def test_d_du4_fourth_order():
    errs = []
    for n in (64, 128, 256):
        x = np.linspace(0.0, 1.5, n)
        h = x[1] - x[0]
        err = np.max(np.abs(d_du4(np.sin(x), h, False) - np.cos(x)))
        errs.append(err)
    for a, b in zip(errs, errs[1:]):
        assert 12.0 < a / b < 20.0
