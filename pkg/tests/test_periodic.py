import itertools
import math

import numpy as np
import pytest

from sostree import boundary, periodic, ti
from sostree.model import ModelParams
from sostree.tree import SubgroupSpec

# frozen from the solver itself after confirming the instability criterion
# held at the designated point; regression guards only
CYCLE_LOW = 0.0800034524222
CYCLE_HIGH = 0.3891711157846
CYCLE_FIXED = 0.2000528860818


def full_spec(k):
    return SubgroupSpec(k=k, parity_set=frozenset(range(1, k + 2)))


def test_slice_map_values():
    psi = ti.SliceMap(1.0, 4)
    for z in (0.0, 0.5, 3.0):
        assert float(psi(z)) == 1.0
    assert float(ti.SliceMap(2.0, 2)(0.0)) == pytest.approx(0.64, abs=1e-15)


def test_slice_map_monotonicity_and_range():
    zs = np.linspace(0.0, 50.0, 400)
    inc = ti.SliceMap(0.5, 3)
    vals = inc(zs)
    assert np.all(np.diff(vals) > 0)
    dec = ti.SliceMap(2.0, 3)
    assert np.all(np.diff(dec(zs)) < 0)
    for psi in (inc, dec):
        lo, hi = psi.range_interval()
        assert lo < hi
        assert np.all(vals >= min(inc.range_interval()) - 1e-12)


def test_slice_map_derivative_matches_finite_differences():
    rng = np.random.default_rng(0)
    for theta in (0.4, 1.07, 3.0):
        psi = ti.SliceMap(theta, 5)
        for _ in range(30):
            z = float(rng.uniform(0.01, 5.0))
            fd = (float(psi(z + 1e-6)) - float(psi(z - 1e-6))) / 2e-6
            assert float(psi.deriv(z)) == pytest.approx(fd, rel=1e-5, abs=1e-9)


def test_instability_value_is_slope_at_fixed_point(cycle_params):
    value, holds = periodic.cycle_instability(cycle_params)
    assert holds and value > 1.0
    assert value == pytest.approx(1.05026182719649, abs=1e-9)
    z = ti.solve_symmetric_roots(cycle_params)[0]
    psi = ti.SliceMap(cycle_params.theta, cycle_params.k)
    fd = abs((float(psi(z + 1e-6)) - float(psi(z - 1e-6))) / 2e-6)
    assert value == pytest.approx(fd, abs=1e-6)


def test_instability_small_k():
    p = ModelParams.from_theta(k=2, m=2, theta=3.0)
    value, holds = periodic.cycle_instability(p)
    assert not holds and value < 1.0
    with pytest.raises(ValueError):
        periodic.cycle_instability(ModelParams(k=2, m=2, J=-1.0, beta=1.0))


def test_two_cycle_at_designated_point(cycle_params):
    sols = periodic.solve_two_cycle_symmetric(cycle_params)
    fixed = [s for s in sols if s.type == periodic.FIXED]
    cycles = [s for s in sols if s.type == periodic.CYCLE]
    assert len(fixed) == 1 and len(cycles) == 2
    assert fixed[0].z == pytest.approx(CYCLE_FIXED, abs=1e-9)
    lo = min(c.z for c in cycles)
    hi = max(c.z for c in cycles)
    assert lo == pytest.approx(CYCLE_LOW, abs=1e-9)
    assert hi == pytest.approx(CYCLE_HIGH, abs=1e-9)
    assert lo < fixed[0].z < hi
    psi = ti.SliceMap(cycle_params.theta, cycle_params.k)
    for s in cycles:
        assert abs(s.z - float(psi(s.t))) <= 1e-12
        assert abs(s.t - float(psi(s.z))) <= 1e-12
    assert float(psi(hi)) == pytest.approx(lo, abs=1e-10)
    # swapped partners both present
    pairs = {(round(c.z, 9), round(c.t, 9)) for c in cycles}
    assert (round(lo, 9), round(hi, 9)) in pairs and (round(hi, 9), round(lo, 9)) in pairs


def test_forward_iteration_converges_to_high_cycle_point(cycle_params):
    # even iterates from z = 1 decrease monotonically onto the cycle
    psi = ti.SliceMap(cycle_params.theta, cycle_params.k)
    z = 1.0
    prev = None
    for _ in range(200):
        z = float(psi(psi(z)))
        if prev is not None:
            assert z <= prev + 1e-15
        prev = z
    assert z == pytest.approx(CYCLE_HIGH, abs=1e-8)


def test_two_cycle_fm_only_fixed(fm_params):
    sols = periodic.solve_two_cycle_symmetric(fm_params)
    assert len(sols) == 3
    assert all(s.type == periodic.FIXED for s in sols)


def test_two_cycle_theta_one():
    p = ModelParams(k=3, m=2, J=0.0, beta=1.0)
    sols = periodic.solve_two_cycle_symmetric(p)
    assert len(sols) == 1
    assert sols[0].type == periodic.FIXED
    assert sols[0].z == pytest.approx(1.0, abs=1e-12)


def test_double_step_fixed_points_contain_single_step(fm_params, fm_roots):
    zs = sorted(s.z for s in periodic.solve_two_cycle_symmetric(fm_params))
    for z in fm_roots:
        assert min(abs(z - w) for w in zs) <= 1e-9


def test_no_cycles_on_small_k_grid():
    for k in (2, 5, 10):
        for theta in np.geomspace(1.01, 10.0, 12):
            p = ModelParams.from_theta(k=k, m=2, theta=float(theta))
            _, holds = periodic.cycle_instability(p)
            assert not holds
            assert all(s.type == periodic.FIXED
                       for s in periodic.solve_two_cycle_symmetric(p))


def test_alternating_full_free_coupling():
    p = ModelParams(k=2, m=2, J=0.0, beta=2.0)
    sols = periodic.solve_two_cycle_full(p, n_starts=20, seed=1)
    assert len(sols) == 1
    assert sols[0].type == periodic.FIXED
    np.testing.assert_allclose(sols[0].full_pair[0], (1.0, 1.0), atol=1e-10)


def test_alternating_full_fm_all_equal_pairs(fm_params):
    h, l, resid = periodic.alternating_limits(fm_params, n_starts=100, seed=2)
    assert resid.max() <= 1e-10
    assert np.max(np.abs(h - l)) <= 1e-8


def test_alternating_full_afm_slice_solutions_match_scalar(cycle_params):
    # solutions on the z0 = t0 = 1 slice reproduce the scalar pair list
    sols = periodic.solve_two_cycle_full(cycle_params, n_starts=40, seed=3)
    on_slice = [s for s in sols
                if abs(s.full_pair[0][0] - 1) <= 1e-8 and abs(s.full_pair[1][0] - 1) <= 1e-8]
    scalar = periodic.solve_two_cycle_symmetric(cycle_params)
    for s in on_slice:
        assert min(abs(s.z - w.z) + abs(s.t - w.t) for w in scalar) <= 1e-7
    # whatever was found is a genuine solution; cycles exist in this regime
    assert any(s.type == periodic.CYCLE for s in sols)


def test_cycle_expanded_field_is_consistent(cycle_params):
    cyc = [s for s in periodic.solve_two_cycle_symmetric(cycle_params)
           if s.type == periodic.CYCLE][0]
    fld = periodic.expand_two_cycle_field(cyc.z, cyc.t, cycle_params, depth=2)
    assert boundary.compatibility_residual(fld, cycle_params) <= 1e-10


def test_parity_residuals_swap_symmetry(cycle_params):
    # (z, t) solves the alternating system iff (t, z) does
    cyc = [s for s in periodic.solve_two_cycle_symmetric(cycle_params)
           if s.type == periodic.CYCLE][0]
    h = np.array([[0.0, math.log(cyc.z)]])
    l = np.array([[0.0, math.log(cyc.t)]])
    spec = full_spec(cycle_params.k)
    r1 = periodic.parity_residuals(h, l, spec, cycle_params)
    r2 = periodic.parity_residuals(l, h, spec, cycle_params)
    assert r1[0] <= 1e-12 and r2[0] <= 1e-12


def test_parity_iteration_proper_subgroups_reach_ti_only(fm_params, afm_params):
    full_sols = {p: ti.solve_full(p) for p in (fm_params, afm_params)}
    for r in (1, 2):
        for a_set in itertools.combinations((1, 2, 3), r):
            spec = SubgroupSpec(k=2, parity_set=frozenset(a_set))
            for p, sols in full_sols.items():
                res = periodic.iterate_parity_system(spec, p, n_starts=20, seed=8)
                assert res.converged.all()
                assert res.ti.all()
                for h in res.h_even:
                    z = tuple(np.exp(h))
                    assert min(abs(z[0] - s[0]) + abs(z[1] - s[1]) for s in sols) <= 1e-6


def test_parity_iteration_full_subgroup_finds_cycles(cycle_params):
    res = periodic.iterate_parity_system(full_spec(cycle_params.k), cycle_params,
                                          n_starts=20, seed=9)
    assert res.converged.all()
    assert not res.ti.any()


def test_classify_by_subgroup_fm(fm_params):
    report = periodic.classify_by_subgroup(full_spec(2), fm_params)
    assert not report["I_nonempty"]
    assert report["instability"] is None
    assert all(s["type"] == periodic.FIXED for s in report["solutions"])


def test_classify_by_subgroup_afm_proper(afm_params):
    spec = SubgroupSpec(k=2, parity_set=frozenset({1}))
    report = periodic.classify_by_subgroup(spec, afm_params)
    assert report["I_nonempty"]
    assert len(report["solutions"]) == 1
    assert report["solutions"][0]["type"] == periodic.FIXED


def test_classify_by_subgroup_cycle_regime(cycle_params):
    report = periodic.classify_by_subgroup(full_spec(cycle_params.k), cycle_params)
    assert not report["I_nonempty"]
    assert report["instability"]["holds"]
    kinds = sorted(s["type"] for s in report["solutions"])
    assert kinds == [periodic.CYCLE, periodic.CYCLE, periodic.FIXED]
