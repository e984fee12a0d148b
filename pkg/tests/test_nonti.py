import math

import numpy as np
import pytest

from sostree import boundary, nonti, ti
from sostree.model import ModelParams
from sostree.tree import Word, ball_size


def test_path_parameter_endpoints():
    k = 2
    hi = (k + 1) / k
    assert nonti.path_from_parameter(0.0, k, 6).digits == (0,) * 6
    assert nonti.path_from_parameter(hi, k, 6).digits == (2,) + (1,) * 5
    first = nonti.path_from_parameter(hi, k, 6).digits
    assert first[0] == k and all(d == k - 1 for d in first[1:])
    with pytest.raises(ValueError):
        nonti.path_from_parameter(-0.01, k, 4)
    with pytest.raises(ValueError):
        nonti.path_from_parameter(hi + 0.01, k, 4)


def test_path_parameter_monotone():
    rng = np.random.default_rng(0)
    k = 2
    hi = (k + 1) / k
    for _ in range(300):
        t1, t2 = sorted(rng.uniform(0, hi, size=2))
        d1 = nonti.path_from_parameter(t1, k, 8).digits
        d2 = nonti.path_from_parameter(t2, k, 8).digits
        assert d1 <= d2


def test_split_components_partition(fm_params):
    k, depth = 2, 3
    p1 = nonti.path_from_parameter(0.4, k, depth)
    p2 = nonti.path_from_parameter(1.1, k, depth)
    comp = nonti.split_components(p1, p2, k, depth)
    assert len(comp) == ball_size(k, depth)
    assert set(comp.values()) <= {1, 2, 3}
    assert {1, 2, 3} <= set(comp.values())


def test_split_components_coincident_paths():
    k, depth = 2, 3
    p = nonti.path_from_parameter(0.7, k, depth)
    comp = nonti.split_components(p, p, k, depth)
    assert 2 not in comp.values()
    assert {1, 3} <= set(comp.values())


def test_split_components_extreme_paths():
    k, depth = 2, 2
    p1 = nonti.path_from_parameter(0.0, k, depth)
    p2 = nonti.path_from_parameter(1.5, k, depth)
    comp = nonti.split_components(p1, p2, k, depth)
    assert len(comp) == 10
    assert 1 in comp.values() and 3 in comp.values()
    with pytest.raises(ValueError):
        nonti.split_components(p2, p1, k, depth)


def test_build_field_requires_three_solutions():
    p = ModelParams(k=2, m=2, J=-1.0, beta=0.5)
    with pytest.raises(ValueError):
        nonti.build_field(0.0, 0.0, p, 4)
    p2 = ModelParams(k=2, m=2, J=-1.0, beta=2.0)
    with pytest.raises(ValueError):
        nonti.build_field(1.0, 0.5, p2, 4)


def test_build_field_endpoint_constants(fm_params, fm_roots):
    hi = (fm_params.k + 1) / fm_params.k
    h_minus = np.array([0.0, math.log(fm_roots[0])])
    h_plus = np.array([0.0, math.log(fm_roots[2])])

    low = nonti.build_field(0.0, 0.0, fm_params, 6)
    assert all(np.array_equal(h, h_plus) for h in low.field.laws.values())
    np.testing.assert_array_equal(low.field.root, 1.5 * h_plus)

    high = nonti.build_field(hi, hi, fm_params, 6)
    assert all(np.array_equal(h, h_minus) for h in high.field.laws.values())

    # the two extreme fields differ at least by the outer-root gap everywhere
    gap = math.log(fm_roots[2]) - math.log(fm_roots[0])
    assert nonti.field_distance(low, high) >= gap - 1e-12
    assert np.max(np.abs(low.field.laws[Word((1,))] - high.field.laws[Word((1,))])) \
        == pytest.approx(gap, abs=1e-12)


def test_build_field_interior_consistency_is_exact(fm_params):
    built = nonti.build_field(0.3, 1.2, fm_params, 5)
    assert boundary.compatibility_residual(built.field, fm_params) == 0.0


def test_build_field_preserves_slice_and_sandwich(fm_params, fm_roots):
    rng = np.random.default_rng(1)
    hi = (fm_params.k + 1) / fm_params.k
    for _ in range(20):
        t, s = sorted(rng.uniform(0, hi, size=2))
        built = nonti.build_field(t, s, fm_params, 6)
        for h in built.field.laws.values():
            assert h[0] == 0.0
            z1 = math.exp(h[1])
            assert fm_roots[0] - 1e-9 <= z1 <= fm_roots[2] + 1e-9


def test_mixed_field_uses_middle_law_in_bulk(fm_params, fm_roots):
    hi = (fm_params.k + 1) / fm_params.k
    built = nonti.build_field(0.0, hi, fm_params, 4)
    counts = {1: 0, 2: 0, 3: 0}
    for w, c in built.components.items():
        if len(w) == 4:
            counts[c] += 1
    # single leaf on each path, the rest of the sphere in the middle
    assert counts[1] == 1 and counts[3] == 1
    assert counts[2] == ball_size(2, 4) - ball_size(2, 3) - 2


def test_root_convergence_constant_case(fm_params):
    report = nonti.root_convergence(0.0, 0.0, fm_params, depths=[3, 4, 5, 6])
    assert report.differences == [0.0, 0.0, 0.0]
    assert report.cauchy


def test_root_convergence_mixed_case(fm_params):
    hi = (fm_params.k + 1) / fm_params.k
    report = nonti.root_convergence(0.0, hi, fm_params, depths=[4, 5, 6, 7, 8])
    assert all(b < a for a, b in zip(report.differences, report.differences[1:]))
    assert report.cauchy
    # empirical rate against the slice contraction ceiling when it contracts
    ceiling = fm_params.k * boundary.slice_contraction_constant(fm_params.theta)
    if ceiling < 1:
        assert max(report.rates) <= ceiling + 1e-6


def test_distinctness_matrix(fm_params, fm_roots):
    hi = (fm_params.k + 1) / fm_params.k
    pairs = [(0.0, 0.0), (hi, hi), (0.0, hi), (0.0, 0.0)]
    mat = nonti.distinctness_check(pairs, fm_params, depth=5)
    assert mat[0, 3] == 0.0
    gap = math.log(fm_roots[2]) - math.log(fm_roots[0])
    assert mat[0, 1] >= gap - 1e-12
    assert mat[0, 2] > 0 and mat[1, 2] > 0
    np.testing.assert_allclose(mat, mat.T)


def test_paths_differing_beyond_depth_are_indistinguishable(fm_params):
    # two parameters whose digit expansions agree to the ball depth
    t1 = 0.4
    d = nonti.path_from_parameter(t1, 2, 12)
    t2 = t1 + 1e-9
    assert nonti.path_from_parameter(t2, 2, 6).digits == d.digits[:6]
    mat = nonti.distinctness_check([(0.0, t1), (0.0, t2)], fm_params, depth=6)
    assert mat[0, 1] == 0.0


def test_field_json_payload(fm_params):
    built = nonti.build_field(0.2, 1.0, fm_params, 3)
    data = built.to_json_dict()
    assert data["t"] == 0.2 and data["s"] == 1.0
    assert data["depth"] == 3
    assert len(data["component_map"]) == ball_size(2, 3)
    assert any(e["vertex"] == "e" for e in data["entries"])
