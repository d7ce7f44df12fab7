import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from steinhaus.norms import (
    DEFAULT_BETA,
    Custom3DParams,
    NormSpec,
    boundary_scale,
    box_corner_bound,
    convex_gauge,
    edge_point,
    edge_tangent_slope,
    example_surface_height,
    in_custom_body,
    norm_eval,
    parse_norm,
    pyramid_gauge,
    sample_unit_sphere,
    surface_height,
)

CUSTOM = NormSpec.custom3d()
coord = st.floats(-50, 50, allow_nan=False)
vec3 = st.tuples(coord, coord, coord).map(np.array)
scalar = st.floats(-20, 20, allow_nan=False).filter(lambda a: abs(a) > 1e-6)


def test_spec_examples():
    assert norm_eval(NormSpec.lp(2, 2), [3, 4]) == 5.0
    assert norm_eval(CUSTOM, [1, 1, 0]) == pytest.approx(1.0, abs=1e-12)
    assert norm_eval(CUSTOM, [0, 0, 2]) == pytest.approx(2.0, abs=1e-12)
    assert example_surface_height(0, 0.5) == pytest.approx(1 - 0.5**1.5, abs=1e-12)


def test_lp_against_direct_formula(rng):
    v = rng.standard_normal((200, 4)) * 10
    for p in (1.0, 1.5, 2.0, 3.0, 7.5):
        expected = (np.abs(v) ** p).sum(axis=1) ** (1 / p)
        np.testing.assert_allclose(norm_eval(NormSpec.lp(p, 4), v), expected, rtol=1e-13)
    np.testing.assert_allclose(norm_eval(NormSpec.linf(4), v), np.abs(v).max(axis=1))


def test_lp_extreme_magnitudes():
    spec = NormSpec.lp(3, 2)
    assert norm_eval(spec, [1e200, 0]) == pytest.approx(1e200, rel=1e-12)
    assert norm_eval(spec, [1e-200, 0]) == pytest.approx(1e-200, rel=1e-12)


def test_batch_independence(rng):
    # a row's norm must not depend on the rest of the batch
    v = rng.standard_normal((50, 3))
    for spec in (NormSpec.lp(1.5, 3), NormSpec.linf(3), CUSTOM):
        batch = norm_eval(spec, v)
        single = np.array([norm_eval(spec, row) for row in v])
        np.testing.assert_array_equal(batch, single)


def test_parse_norm():
    assert parse_norm("l2", 3) == NormSpec.lp(2, 3)
    assert parse_norm("L1.5", 2) == NormSpec.lp(1.5, 2)
    assert parse_norm("linf", 2) == NormSpec.linf(2)
    assert parse_norm("custom3d").params.beta == DEFAULT_BETA
    spec = parse_norm("custom3d", beta=(1.5, 2.0, 2.5, 2.0))
    assert parse_norm(spec.name) == spec
    for bad in ("l0.5", "lfoo", "cosine"):
        with pytest.raises(ValueError):
            parse_norm(bad, 2)
    with pytest.raises(ValueError):
        parse_norm("custom3d", 2)


def test_params_validation():
    with pytest.raises(ValueError):
        Custom3DParams((1.25, 1.75, 2.25))
    with pytest.raises(ValueError):
        Custom3DParams((0.9, 1.75, 2.25, 1.75))
    with pytest.raises(ValueError):
        Custom3DParams((1.5, 1.5, 2.0, 1.75))


def test_rejects_bad_vectors():
    with pytest.raises(ValueError):
        norm_eval(NormSpec.lp(2, 2), [1, 2, 3])
    with pytest.raises(ValueError):
        norm_eval(NormSpec.lp(2, 2), [np.nan, 1])
    with pytest.raises(ValueError):
        boundary_scale(NormSpec.lp(2, 2), [0, 0])
    with pytest.raises(ValueError):
        example_surface_height(1.5, 0)


@given(vec3, scalar)
def test_custom_homogeneity(v, a):
    lhs = norm_eval(CUSTOM, a * v)
    rhs = abs(a) * norm_eval(CUSTOM, v)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


@given(vec3)
def test_custom_symmetry_and_positivity(v):
    n = norm_eval(CUSTOM, v)
    assert norm_eval(CUSTOM, -v) == pytest.approx(n, rel=1e-9, abs=1e-12)
    if np.any(v != 0):
        assert n > 0
    # the gauge dominates the sup norm and is dominated by the pyramid gauge
    assert np.abs(v).max() <= n * (1 + 1e-9) + 1e-300
    assert n <= pyramid_gauge(v) * (1 + 1e-9) + 1e-300


@given(st.floats(-1, 1), st.floats(0, 1))
def test_surface_points_have_unit_gauge(s, t):
    for k in (1, 2, 3, 4):
        xy = t * edge_point(k, s)[:2]
        z = surface_height(CUSTOM.params, xy[0], xy[1])
        assert norm_eval(CUSTOM, [xy[0], xy[1], z]) == pytest.approx(1.0, abs=1e-9)
        assert norm_eval(CUSTOM, [-xy[0], -xy[1], -z]) == pytest.approx(1.0, abs=1e-9)


def test_boundary_scale_lands_on_sphere(rng):
    for spec in (NormSpec.lp(1.5, 3), NormSpec.linf(3), CUSTOM):
        v = rng.standard_normal((100, 3))
        u = v * boundary_scale(spec, v)[:, None]
        np.testing.assert_allclose(norm_eval(spec, u), 1.0, atol=1e-10)
        np.testing.assert_allclose(norm_eval(spec, sample_unit_sphere(spec, rng, 50)), 1.0, atol=1e-10)


def test_membership_agrees_with_gauge(rng):
    p = rng.uniform(-1.2, 1.2, (2000, 3))
    n = norm_eval(CUSTOM, p)
    clear = np.abs(n - 1) > 1e-8
    np.testing.assert_array_equal(in_custom_body(CUSTOM.params, p)[clear], (n <= 1)[clear])


def test_tangent_slope_profile():
    s = np.linspace(-1, 1, 50)
    for k in (1, 2, 3, 4):
        beta = np.array([edge_tangent_slope(k, x) for x in s])
        assert np.all(beta > 1 / np.sqrt(s**2 + 1))
        d = np.diff(beta)
        assert np.all(d > 0) or np.all(d < 0)


def test_tangent_slope_matches_surface_derivative():
    # along the ray through edge point s, the height falls with slope -beta*sqrt(1+s^2)/sqrt(1+s^2)
    params = CUSTOM.params
    for s in (-0.8, -0.3, 0.0, 0.5, 0.9):
        h = 1e-6
        ray = np.array([s, 1.0])
        z = surface_height(params, *(ray * (1 - h)))
        # distance along the ray, measured in the plane
        slope = z / (h * math.hypot(s, 1.0))
        assert slope == pytest.approx(edge_tangent_slope(1, s), rel=1e-4)


def test_convex_gauge_bound(rng):
    v = rng.standard_normal((500, 3))
    for inner in (NormSpec.lp(2, 3), NormSpec.linf(3), CUSTOM):
        k = box_corner_bound(inner, CUSTOM)
        assert np.all(convex_gauge(CUSTOM, v) <= k * norm_eval(inner, v) * (1 + 1e-9))
    assert box_corner_bound(NormSpec.lp(2, 3), NormSpec.lp(2, 3)) == 1.0
