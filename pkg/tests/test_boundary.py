import json
import math

import numpy as np
import pytest

from sostree import boundary, ti
from sostree.boundary import (BoundaryLawField, compatibility_residual, constant_field,
                              derivative_bounds, flip_field, injectivity_check, law_map,
                              law_map_jac, perturb_field, slice_contraction_constant)
from sostree.model import ModelParams
from sostree.tree import Word, ball


def naive_law_map(h, m, theta):
    # direct ratio evaluation, independent of the log-space implementation
    h = np.asarray(h, dtype=float)
    w = np.concatenate([np.exp(h), [1.0]])
    out = np.empty(m)
    for i in range(m):
        num = sum(theta ** abs(i - j) * w[j] for j in range(m)) + theta ** (m - i)
        den = sum(theta ** (m - j) * w[j] for j in range(m)) + 1.0
        out[i] = math.log(num / den)
    return out


def test_zero_law_at_theta_one_is_exactly_zero():
    for m in (1, 2, 3, 5):
        assert np.all(law_map(np.zeros(m), m, 1.0) == 0.0)
    # theta=1 kills the update for every argument, exactly
    rng = np.random.default_rng(0)
    for _ in range(20):
        h = rng.normal(size=4)
        assert np.all(law_map(h, 4, 1.0) == 0.0)


def test_component_zero_vanishes_on_symmetric_slice():
    rng = np.random.default_rng(1)
    for theta in (0.3, 0.5, 2.0, 7.0):
        for _ in range(50):
            h = np.array([0.0, rng.normal() * 4])
            assert law_map(h, 2, theta)[0] == 0.0


def test_known_value_half_theta():
    f = law_map(np.zeros(2), 2, 0.5)
    assert f[0] == 0.0
    assert f[1] == pytest.approx(math.log(8 / 7), abs=1e-15)


def test_matches_naive_evaluation():
    rng = np.random.default_rng(2)
    for m in (2, 3, 4):
        for theta in (0.2, 0.9, 1.5, 4.0):
            for _ in range(25):
                h = rng.normal(size=m) * 3
                np.testing.assert_allclose(
                    law_map(h, m, theta), naive_law_map(h, m, theta),
                    rtol=1e-12, atol=1e-12)


def test_law_map_rejects_bad_inputs():
    with pytest.raises(ValueError):
        law_map(np.zeros(2), 2, -1.0)
    with pytest.raises(ValueError):
        law_map(np.zeros(3), 2, 0.5)


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(3)
    step = 1e-6
    for theta in (0.4, 1.8):
        for _ in range(30):
            h = rng.uniform(-4, 4, size=2)
            jac = law_map_jac(h, theta)
            for j in range(2):
                dh = np.zeros(2)
                dh[j] = step
                fd = (law_map(h + dh, 2, theta) - law_map(h - dh, 2, theta)) / (2 * step)
                np.testing.assert_allclose(jac[:, j], fd, atol=1e-8)


def test_compatibility_residual_fixed_point(fm_params, fm_roots):
    for z in fm_roots:
        fld = constant_field(np.array([0.0, math.log(z)]), fm_params, 2)
        assert compatibility_residual(fld, fm_params) <= 1e-12


def test_compatibility_residual_zero_field():
    p = ModelParams.from_theta(k=2, m=2, theta=0.5)
    fld = constant_field(np.zeros(2), p, 2)
    expected = p.k * math.log(8 / 7)
    assert compatibility_residual(fld, p) == pytest.approx(expected, abs=1e-12)
    # theta = 1: the all-zeros field is consistent
    p1 = ModelParams(k=2, m=2, J=0.0, beta=3.0)
    assert compatibility_residual(constant_field(np.zeros(2), p1, 2), p1) == 0.0


def test_compatibility_residual_missing_vertex(fm_params):
    fld = constant_field(np.zeros(2), fm_params, 2)
    del fld.laws[Word((1,))]
    with pytest.raises(KeyError):
        compatibility_residual(fld, fm_params)


def test_injectivity_randomized():
    rng = np.random.default_rng(4)
    for _ in range(2000):
        h = rng.uniform(-10, 10, size=2)
        l = rng.uniform(-10, 10, size=2)
        if np.max(np.abs(h - l)) < 1e-3:
            continue
        assert injectivity_check(h, l, 0.5)
        f_h, f_l = law_map(h, 2, 0.5), law_map(l, 2, 0.5)
        assert np.max(np.abs(f_h - f_l)) > 0.0
    h = rng.uniform(-5, 5, size=2)
    assert injectivity_check(h, h.copy(), 0.5)
    with pytest.raises(ValueError):
        injectivity_check(h, h, 1.0)


def test_slice_contraction_constant_value():
    # |t^2-1| / (1 + 3t^2 + 2t sqrt(2(t^2+1))) at t = 0.5
    expected = 0.75 / (1.75 + math.sqrt(2.5))
    assert slice_contraction_constant(0.5) == pytest.approx(expected, abs=1e-15)
    assert slice_contraction_constant(0.5) == pytest.approx(0.22514822655441374, abs=1e-12)
    assert slice_contraction_constant(1.0) == 0.0


@pytest.mark.parametrize("theta", [0.5, 1.5])
def test_derivative_bounds_sampled(theta):
    report = derivative_bounds(theta, 2000, seed=99)
    assert report.ok, report.violations
    assert report.worst["partial"] <= report.bound_partial + 1e-6
    assert report.worst["slice"] <= report.bound_slice + 1e-6


def test_derivative_bounds_theta_one_trivial():
    report = derivative_bounds(1.0, 200, seed=1)
    assert report.ok
    # all four ceilings vanish and the update is constant
    assert report.bound_partial == 0.0
    assert report.worst["pair"] <= 1e-9


def test_field_json_round_trip(fm_params):
    rng = np.random.default_rng(6)
    laws = {w: rng.normal(size=2) for w in ball(2, 2) if w.letters}
    fld = BoundaryLawField(depth=2, laws=laws, root=rng.normal(size=2))
    data = json.loads(fld.to_json())
    back = BoundaryLawField.from_json(json.dumps(data))
    assert back.depth == 2
    np.testing.assert_array_equal(back.root, fld.root)
    assert set(back.laws) == set(fld.laws)
    for w in fld.laws:
        np.testing.assert_array_equal(back.laws[w], fld.laws[w])


def test_flip_field_matches_weight_reversal():
    rng = np.random.default_rng(7)
    p = ModelParams(k=2, m=2, J=-1.0, beta=1.0)
    fld = constant_field(rng.normal(size=2), p, 1)
    flipped = flip_field(fld, 2)
    for w, h in fld.laws.items():
        w_unred = np.exp(np.concatenate([h, [0.0]]))
        f_unred = np.exp(np.concatenate([flipped.laws[w], [0.0]]))
        ratio = w_unred[::-1] / w_unred[::-1][-1]
        np.testing.assert_allclose(f_unred, ratio, rtol=1e-12)


def test_perturb_field_shifts_all_laws(fm_high_field):
    bad = perturb_field(fm_high_field, 0.25)
    for w, h in fm_high_field.laws.items():
        assert bad.laws[w][-1] == h[-1] + 0.25
    assert bad.root[-1] == fm_high_field.root[-1] + 0.25
