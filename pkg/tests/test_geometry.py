import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boolpic.geometry import (
    Ball,
    NormKind,
    Picture,
    ball_pair_hausdorff,
    clipped_intervals,
    cover_map,
    covered_by_others,
    grid_hausdorff,
    hausdorff_tolerance,
    interval_hausdorff,
    norm_dist,
    point_in_union,
    union_hausdorff,
)

L1, L2, LINF = NormKind.L1, NormKind.L2, NormKind.LINF


def pic(dim, norm, *balls):
    return Picture.from_balls(dim, norm, [Ball(c if isinstance(c, tuple) else (c,), r) for c, r in balls])


# ---------------------------------------------------------------------------
# independent oracles


def oracle_dist_to_union_l2(points, balls):
    """Distance from points to a union of l2 balls lying inside the cube."""
    d = np.full(len(points), np.inf)
    for c, r in balls:
        d = np.minimum(d, np.maximum(np.linalg.norm(points - np.array(c), axis=1) - r, 0.0))
    return d


def oracle_hausdorff_l2(balls_a, balls_b, samples=200_000):
    """sup over the boundary circles of A of the distance to B, and back.

    For unions of l2 discs the farthest point of A from B sits on the
    boundary of A, so densely sampling circles suffices."""

    def directed(src, dst):
        t = np.linspace(0, 2 * np.pi, samples, endpoint=False)
        best = 0.0
        for c, r in src:
            pts = np.column_stack([c[0] + r * np.cos(t), c[1] + r * np.sin(t)])
            best = max(best, oracle_dist_to_union_l2(pts, dst).max())
        return best

    return max(directed(balls_a, balls_b), directed(balls_b, balls_a))


# ---------------------------------------------------------------------------
# NormKind


def test_cube_diameter():
    assert L1.cube_diameter(5) == 5
    assert L2.cube_diameter(4) == 2.0
    assert LINF.cube_diameter(7) == 1.0


def test_theta_constants_are_one_and_valid():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(1000, 3))
    for norm in NormKind:
        assert norm.theta == 1.0
        for v in x:
            assert norm_dist(v, np.zeros(3), norm) >= norm.theta * np.abs(v).max() - 1e-15


def test_norm_parse():
    assert NormKind.parse("L2") is L2
    with pytest.raises(ValueError):
        NormKind.parse("l3")


# ---------------------------------------------------------------------------
# norm_dist


@pytest.mark.parametrize("norm,expected", [(L2, 5.0), (L1, 7.0), (LINF, 4.0)])
def test_norm_dist_examples(norm, expected):
    assert norm_dist((0, 0), (3, 4), norm) == expected


def test_norm_dist_dimension_mismatch():
    with pytest.raises(ValueError):
        norm_dist((0, 0), (1, 2, 3), L2)


@given(
    st.lists(st.floats(-10, 10), min_size=3, max_size=3),
    st.lists(st.floats(-10, 10), min_size=3, max_size=3),
    st.sampled_from(list(NormKind)),
)
def test_norm_dist_symmetric_and_zero_iff_equal(x, y, norm):
    assert norm_dist(x, y, norm) == norm_dist(y, x, norm)
    assert (norm_dist(x, y, norm) == 0) == (x == y)


# ---------------------------------------------------------------------------
# balls and pictures


def test_ball_validation():
    with pytest.raises(ValueError):
        Ball((0.5,), 0.0)
    with pytest.raises(ValueError):
        Ball((1.2,), 0.1)
    with pytest.raises(ValueError):
        Picture(1, L2, [[0.5]], [-1.0])


def test_picture_roundtrip_balls():
    p = pic(2, L2, ((0.1, 0.2), 0.3), ((0.5, 0.5), 0.1))
    assert p.balls == [Ball((0.1, 0.2), 0.3), Ball((0.5, 0.5), 0.1)]
    assert len(Picture.empty(3, L1)) == 0


def test_ball_pair_hausdorff_examples():
    b = Ball((0.2, 0.2), 0.1)
    assert ball_pair_hausdorff(b, b, L2) == 0
    assert ball_pair_hausdorff(b, Ball((0.5, 0.2), 0.15), L2) == pytest.approx(0.35, abs=1e-15)
    assert ball_pair_hausdorff(Ball((0.1,), 0.2), Ball((0.4,), 0.2), L1) == pytest.approx(0.3, abs=1e-15)


def test_point_in_union_examples():
    p = pic(1, L2, (0.5, 0.1))
    assert point_in_union((0.5,), p)
    assert not point_in_union((0.9,), p)
    assert point_in_union((0.6,), p)  # closed ball


# ---------------------------------------------------------------------------
# coverage

TRIPLE = ((0.25, 0.15), (0.45, 0.15), (0.35, 0.15))


def test_covered_by_others_examples():
    p = pic(1, L2, *TRIPLE)
    assert covered_by_others(2, p) is None
    assert covered_by_others(0, p) is not None
    single = pic(2, L2, ((0.3, 0.7), 0.2))
    np.testing.assert_array_equal(covered_by_others(0, single), [0.3, 0.7])
    nested = pic(2, L2, ((0.3, 0.3), 0.1), ((0.3, 0.3), 0.2))
    assert covered_by_others(0, nested, 0.005) is None
    assert covered_by_others(1, nested, 0.005) is not None


def test_covered_by_others_rejects_bad_input():
    p = pic(1, L2, *TRIPLE)
    with pytest.raises(ValueError):
        covered_by_others(0, p, 0.0)
    with pytest.raises(IndexError):
        covered_by_others(3, p)


def test_cover_map_large_ball_count_uses_several_words():
    # 70 balls cross the 62-bit word boundary
    rng = np.random.default_rng(3)
    c = rng.random((70, 2))
    p = Picture(2, L2, c, np.full(70, 0.05))
    m = cover_map(p, 1 / 64)
    assert all(m_ > 0 for m_ in m.masks)
    assert max(m.masks).bit_length() > 62
    for mask, point in zip(m.masks, m.points):
        inside = np.flatnonzero(p._membership(point[None, :])[0])
        assert mask == sum(1 << int(i) for i in inside)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 7), st.sampled_from(list(NormKind)), st.integers(1, 3))
def test_witness_is_certified(seed, n, norm, d):
    rng = np.random.default_rng(seed)
    p = Picture(d, norm, rng.random((n, d)), 0.05 + 0.3 * rng.random(n))
    h = 1 / 64 if d < 3 else 1 / 24
    for i in range(n):
        w = covered_by_others(i, p, h)
        if w is None:
            continue
        assert np.all((w >= 0) & (w <= 1))
        assert norm_dist(w, p.centers[i], norm) <= p.radii[i] + 1e-12
        assert not point_in_union(w, p.without(i))


def test_covered_verdict_is_exact_in_1d():
    # slivers far thinner than any grid are still found
    p = pic(1, L2, (0.3, 0.1), (0.5, 0.1 + 1e-9), (0.4, 0.05))
    assert covered_by_others(2, p) is None
    q = pic(1, L2, (0.3, 0.1), (0.5, 0.1 - 1e-9), (0.4, 0.05))
    w = covered_by_others(2, q)
    assert w is not None and 0.4 - 1e-9 < w[0] < 0.4 + 1e-9


# ---------------------------------------------------------------------------
# Hausdorff distances


def test_union_hausdorff_identical_and_empty():
    p = pic(2, L1, ((0.2, 0.4), 0.3), ((0.9, 0.1), 0.05))
    assert union_hausdorff(p, p, 0.01) == 0
    e = Picture.empty(2, L1)
    assert union_hausdorff(e, e) == 0
    assert union_hausdorff(e, p, 0.01) == 2.0
    assert union_hausdorff(p, e, 0.01) == 2.0


def test_union_hausdorff_translated_interval_exact():
    a = pic(1, L2, (0.3, 0.1))
    b = pic(1, L2, (0.4, 0.1))
    assert union_hausdorff(a, b, 0.5) == pytest.approx(0.1, abs=1e-15)


def test_two_ball_example_against_boundary_oracle():
    balls_a = [((0.2, 0.2), 0.1), ((0.8, 0.8), 0.1)]
    balls_b = [((0.2, 0.2), 0.1)]
    oracle = oracle_hausdorff_l2(balls_a, balls_b)
    # frozen: the far disc's farthest point lies 0.6*sqrt(2) from the near disc
    assert oracle == pytest.approx(0.848528137423857, abs=1e-9)
    h = 0.002
    got = union_hausdorff(pic(2, L2, *balls_a), pic(2, L2, *balls_b), h)
    assert abs(got - oracle) <= hausdorff_tolerance(L2, 2, h)


def test_union_hausdorff_mismatched_spaces():
    with pytest.raises(ValueError):
        union_hausdorff(pic(1, L2, (0.5, 0.1)), pic(1, L1, (0.5, 0.1)))
    with pytest.raises(ValueError):
        union_hausdorff(pic(1, L2, (0.5, 0.1)), pic(1, L2, (0.5, 0.1)), -1)


@pytest.mark.parametrize("norm", list(NormKind))
def test_ball_pair_formula_matches_grid(norm):
    rng = np.random.default_rng(11)
    h = 1 / 256
    for _ in range(30):
        r = 0.05 + 0.15 * rng.random(2)
        c = r[:, None] + (1 - 2 * r[:, None]) * rng.random((2, 2))
        b1, b2 = Ball(tuple(c[0]), r[0]), Ball(tuple(c[1]), r[1])
        got = union_hausdorff(Picture.from_balls(2, norm, [b1]), Picture.from_balls(2, norm, [b2]), h)
        assert abs(got - ball_pair_hausdorff(b1, b2, norm)) <= 2 * h * 2


def test_l2_random_unions_against_boundary_oracle():
    rng = np.random.default_rng(5)
    h = 1 / 256
    for _ in range(10):
        ka, kb = rng.integers(1, 4, size=2)

        def draw(k):
            r = 0.05 + 0.15 * rng.random(k)
            c = r[:, None] + (1 - 2 * r[:, None]) * rng.random((k, 2))
            return [((float(x), float(y)), float(rr)) for (x, y), rr in zip(c, r)]

        a, b = draw(ka), draw(kb)
        want = oracle_hausdorff_l2(a, b, 20_000)
        got = union_hausdorff(pic(2, L2, *a), pic(2, L2, *b), h)
        assert abs(got - want) <= hausdorff_tolerance(L2, 2, h)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(list(NormKind)))
def test_triangle_inequality(seed, norm):
    rng = np.random.default_rng(seed)
    h = 1 / 128
    pics = [Picture(2, norm, rng.random((k, 2)), 0.05 + 0.25 * rng.random(k)) for k in rng.integers(1, 4, 3)]
    ab = union_hausdorff(pics[0], pics[1], h)
    bc = union_hausdorff(pics[1], pics[2], h)
    ac = union_hausdorff(pics[0], pics[2], h)
    assert ac <= ab + bc + 3 * hausdorff_tolerance(norm, 2, h)


def test_exact_1d_matches_grid_evaluator():
    rng = np.random.default_rng(9)
    h = 1 / 1024
    for _ in range(500):
        ka, kb = rng.integers(1, 5, size=2)
        a = Picture(1, L2, rng.random((ka, 1)), 0.01 + 0.3 * rng.random(ka))
        b = Picture(1, L2, rng.random((kb, 1)), 0.01 + 0.3 * rng.random(kb))
        assert abs(union_hausdorff(a, b, h) - grid_hausdorff(a, b, h)) <= 2 * h


def test_interval_hausdorff_gap_midpoint():
    # the farthest point of [0,1] from [0,0.2] u [0.8,1] is the gap midpoint
    assert interval_hausdorff([(0, 1)], [(0, 0.2), (0.8, 1)]) == pytest.approx(0.3)
    assert interval_hausdorff([], [(0.1, 0.2)]) == 1.0


def test_clipped_intervals_merge_and_clip():
    p = pic(1, L2, (0.05, 0.1), (0.2, 0.05), (0.9, 0.3))
    assert clipped_intervals(p) == [(0.0, pytest.approx(0.25)), (pytest.approx(0.6), 1.0)]


def test_hausdorff_tolerance_values():
    assert hausdorff_tolerance(L2, 1, 0.1) == 0.0
    assert hausdorff_tolerance(L1, 3, 0.01) == pytest.approx(0.06)
    assert hausdorff_tolerance(LINF, 2, 0.01) == pytest.approx(0.02)
    assert math.isclose(hausdorff_tolerance(L2, 2, 0.5), 2 * 0.5 * math.sqrt(2))
