import numpy as np
import pytest

import lamlab
from lamlab import (Box, CheckInconclusive, Configuration, GOLDEN_MEAN,
                    NotBirkhoff, check_birkhoff, check_comparison_principle,
                    check_minmax_inequality, meet_join, quasi_newton_continue,
                    rotation_vector, sample_config, step_hull_from_simplex,
                    translate)


def staircase(window, omega, s=0.37):
    # exact Birkhoff sample of the identity hull: x_i = ceil(s + omega . i)
    sites = window.sites()
    vals = np.ceil(s + sites @ np.asarray(omega)).reshape(window.shape)
    return Configuration(window, vals)


def test_translate_group_law():
    x = staircase(Box.centered(6, 1), [GOLDEN_MEAN])
    same = translate(x, [0], 0)
    assert same.domain == x.domain and np.array_equal(same.values, x.values)
    up = translate(x, [0], 1)
    assert np.array_equal(up.values, x.values + 1)
    a = translate(translate(x, [2], 1), [1], -3)
    b = translate(x, [3], -2)
    assert a.domain == b.domain and np.allclose(a.values, b.values)


def test_check_birkhoff_accepts_exact_staircases():
    for d, omega in ((1, [GOLDEN_MEAN]), (2, [np.sqrt(2) - 1, np.sqrt(3) - 1])):
        x = staircase(Box.centered(12, d), omega)
        verdict = check_birkhoff(x, 4)
        assert verdict.ordered and verdict.violation is None


def test_check_birkhoff_flags_a_swapped_pair():
    window = Box.centered(12, 1)
    x = staircase(window, [GOLDEN_MEAN])
    vals = x.values.copy()
    vals[3], vals[19] = vals[19], vals[3]
    verdict = check_birkhoff(Configuration(window, vals), 4)
    assert not verdict.ordered
    k, l, i, j = verdict.violation
    assert np.max(np.abs(k)) <= 4 and isinstance(l, int)


def test_sign_rule_for_exact_samples():
    # the phase omega . k + l decides the uniform order of the translate
    omega = np.asarray([GOLDEN_MEAN])
    x = staircase(Box.centered(20, 1), omega)
    for k in range(-5, 6):
        shifted = translate(x, [k], 0)
        ovl = x.domain.intersect(shifted.domain)
        base = (shifted.box_values(ovl) - x.box_values(ovl))
        for l in range(-5, 6):
            phase = omega[0] * k + l
            diff = base + l
            if phase > 0:
                assert np.min(diff) >= 0.0
            else:
                assert np.max(diff) <= 0.0


def test_check_birkhoff_window_guard():
    x = Configuration(Box([0], [0]), [0.0])
    with pytest.raises(ValueError):
        check_birkhoff(x, 2)


def test_rotation_vector_on_exact_staircase():
    x = staircase(Box.centered(50, 1), [GOLDEN_MEAN])
    omega, dev = rotation_vector(x)
    assert omega[0] == pytest.approx(GOLDEN_MEAN, abs=0.02)
    assert dev <= 1.0 + 1e-9


def test_rotation_vector_trivial_cases():
    B = Box.centered(10, 1)
    const = Configuration(B, np.zeros(21))
    omega, dev = rotation_vector(const)
    assert omega[0] == pytest.approx(0.0, abs=1e-12) and dev < 1e-12
    linear = Configuration(B, np.arange(-10.0, 11.0))
    omega, _ = rotation_vector(linear)
    assert omega[0] == pytest.approx(1.0, abs=1e-12)


def test_rotation_vector_rejects_wild_configurations():
    rng = np.random.default_rng(2)
    B = Box.centered(20, 1)
    with pytest.raises(NotBirkhoff):
        rotation_vector(Configuration(B, 5.0 * rng.normal(size=41)))


def test_meet_join_identities():
    rng = np.random.default_rng(3)
    B = Box.centered(4, 2)
    x = Configuration(B, rng.normal(size=B.shape))
    y = Configuration(B, rng.normal(size=B.shape))
    lo, hi = meet_join(x, y)
    assert np.array_equal(lo.values + hi.values, x.values + y.values)
    lo2, hi2 = meet_join(y, x)
    assert np.array_equal(lo.values, lo2.values)
    same_lo, same_hi = meet_join(x, x)
    assert np.array_equal(same_lo.values, x.values)
    assert np.array_equal(same_hi.values, x.values)
    with pytest.raises(ValueError):
        meet_join(x, Configuration(Box.centered(3, 2), np.zeros((7, 7))))


def test_minmax_inequality_and_equality_iff_ordered(model1):
    rng = np.random.default_rng(8)
    B = Box.centered(5, 1)
    Bp = B.padded(1)
    eps = model1.constants.eps1 / 2
    amp = (model1.constants.osc_bound_K + 1.0) / 2.0
    crossings = 0
    for _ in range(30):
        x = Configuration(Bp, rng.uniform(-amp, amp, Bp.shape))
        y = Configuration(Bp, rng.uniform(-amp, amp, Bp.shape))
        out = check_minmax_inequality(model1, eps, B, x, y)
        assert out["holds"] and out["gap"] >= -1e-10
        ordered = np.all(x.values <= y.values) or np.all(y.values <= x.values)
        if ordered:
            assert out["gap"] == 0.0
        else:
            crossings += 1
            assert out["gap"] > 0.0
    assert crossings > 20  # random pairs essentially always cross


def test_comparison_principle_shift_pair(model1, golden):
    eps = model1.constants.eps1 / 2
    B = Box.centered(10, 1)
    Bp = B.padded(1)
    phi = step_hull_from_simplex([0.5, 0.5], model1.potential.minima)
    s = lamlab.generic_parameter(phi, golden, Bp, 0.5)
    x0 = sample_config(phi, golden, s, Bp)
    res = quasi_newton_continue(model1, eps, x0, B)
    shifted = translate(res.solution, [0], 1)
    out = check_comparison_principle(model1, eps, B, res.solution, shifted)
    assert out["verdict"] == "strictly-less"
    assert out["margin"] >= 1.0 - 2.0 * model1.constants.delta0
    same = check_comparison_principle(model1, eps, B, res.solution, res.solution)
    assert same["verdict"] == "identical"


def test_comparison_principle_guards(model1, golden):
    eps = model1.constants.eps1 / 2
    B = Box.centered(6, 1)
    Bp = B.padded(1)
    rng = np.random.default_rng(4)
    x = Configuration(Bp, np.sort(rng.uniform(0.0, 2.0, Bp.shape)))
    with pytest.raises(CheckInconclusive):
        check_comparison_principle(model1, eps, B, x, translate(x, [0], 1))
    with pytest.raises(ValueError):
        check_comparison_principle(model1, 0.0, B, x, x)
