import numpy as np
import pytest

from lamlab import Box, Configuration, ball_offsets, l1_norms


def brute_ball(d, r):
    # independent enumeration: all points of the cube with L1 norm <= r
    pts = [p for p in np.ndindex(*([2 * r + 1] * d))]
    pts = np.asarray(pts) - r
    return pts[np.sum(np.abs(pts), axis=1) <= r]


@pytest.mark.parametrize("d,r", [(1, 0), (1, 3), (2, 1), (2, 4), (3, 2)])
def test_ball_offsets_match_brute_enumeration(d, r):
    got = ball_offsets(d, r)
    want = brute_ball(d, r)
    assert got.shape == want.shape
    assert set(map(tuple, got.tolist())) == set(map(tuple, want.tolist()))


def test_ball_offsets_lexicographic_and_l1_norms():
    got = ball_offsets(2, 2)
    assert got.tolist() == sorted(got.tolist())
    assert np.array_equal(l1_norms(got), np.sum(np.abs(got), axis=1))


def test_box_basics():
    B = Box([-2, -3], [4, 5])
    assert B.shape == (7, 9)
    assert B.size == 63
    assert B.contains([0, 0]) and not B.contains([5, 0])
    sites = B.sites()
    assert sites.shape == (63, 2)
    assert tuple(sites[0]) == (-2, -3) and tuple(sites[-1]) == (4, 5)
    # index() maps the j-th site to the j-th array cell
    for j in (0, 17, 62):
        assert B.index(sites[j]) == np.unravel_index(j, B.shape)


def test_box_centered_interior_padded_shift():
    B = Box.centered(5, 2)
    assert B.lo == (-5, -5) and B.hi == (5, 5)
    assert B.interior(2) == Box.centered(3, 2)
    assert B.padded(1) == Box.centered(6, 2)
    assert B.shift([1, -2]) == Box([-4, -7], [6, 3])
    assert B.padded(1).interior(1) == B


def test_box_intersect_and_slice():
    A = Box([-3], [4])
    C = Box([0], [9])
    got = A.intersect(C)
    assert got == Box([0], [4])
    assert A.intersect(Box([5], [9])) is None
    sl = got.slice_in(A)
    vals = np.arange(8)
    assert vals[sl].tolist() == [3, 4, 5, 6, 7]


def test_slice_in_requires_containment():
    with pytest.raises(ValueError):
        Box([-3], [3]).slice_in(Box([0], [2]))


def test_configuration_shape_and_finite_checks():
    B = Box.centered(2, 1)
    with pytest.raises(ValueError):
        Configuration(B, np.zeros(4))
    with pytest.raises(ValueError):
        Configuration(B, [0.0, 1.0, np.nan, 0.0, 1.0])
    x = Configuration(B, np.arange(5.0))
    assert x.value_at([-2]) == 0.0 and x.value_at([2]) == 4.0


def test_configuration_restrict_and_box_values():
    B = Box.centered(3, 2)
    vals = np.arange(49.0).reshape(7, 7)
    x = Configuration(B, vals)
    sub = Box.centered(1, 2)
    assert np.array_equal(x.box_values(sub), vals[2:5, 2:5])
    y = x.restrict(sub)
    assert y.domain == sub
    assert np.array_equal(y.values, vals[2:5, 2:5])
    y.values[0, 0] = -1.0
    assert x.values[2, 2] == 16.0  # restriction owns its values


def test_configuration_osc_matches_direct_scan():
    rng = np.random.default_rng(11)
    B = Box.centered(4, 2)
    x = Configuration(B, rng.normal(size=B.shape))
    r = 2
    sites = B.sites()
    flat = x.values.ravel()
    worst = 0.0
    for i, si in enumerate(sites):
        norms = np.sum(np.abs(sites - si), axis=1)
        near = norms <= r
        worst = max(worst, float(np.max(np.abs(flat[near] - flat[i]))))
    assert x.osc(r) == pytest.approx(worst, abs=0.0)
