import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from almostlip.covering import (
    ScaleGrid,
    _fps_matrix,
    _greedy_ball_count_table,
    box_dimension_estimate,
    covering_number_bounds,
    farthest_point_net,
    homogeneity_fit,
    image_homogeneity_audit,
    packing_count,
    verify_net,
)
from almostlip.gallery import cantor, interval
from almostlip.metric_core import FiniteMetricSpace, PointSet
from almostlip.net_embedding import assemble_embedding

clouds = arrays(
    np.float64,
    st.tuples(st.integers(2, 30), st.integers(1, 3)),
    elements=st.integers(-500, 500).map(lambda v: v / 100.0),
)


def _naive_counts(D, r, eps):
    out = []
    for x in range(D.shape[0]):
        ball = np.flatnonzero(D[x] <= r)
        ball = np.concatenate(([x], ball[ball != x]))
        # keep index order for ties, with the center first
        rest = np.sort(ball[1:])
        ball = np.concatenate(([x], rest))
        sub = D[np.ix_(ball, ball)]
        mind = sub[0].copy()
        count = 1
        while mind.max() > eps:
            # ties go to the lowest original index among the maxima
            cand = np.flatnonzero(mind == mind.max())
            k = cand[np.argmin(ball[cand])]
            mind = np.minimum(mind, sub[k])
            count += 1
        out.append(count)
    return np.array(out)


@settings(max_examples=60, deadline=None)
@given(clouds, st.floats(0.05, 5.0), st.floats(0.01, 2.0))
def test_lockstep_counts_match_naive(coords, r, eps):
    D = PointSet(coords).distances()
    table = _greedy_ball_count_table(D, r, np.array([eps, 2 * eps]))
    assert np.array_equal(table[0], _naive_counts(D, r, eps))
    assert np.array_equal(table[1], _naive_counts(D, r, 2 * eps))


@settings(max_examples=60, deadline=None)
@given(clouds, st.floats(0.01, 3.0))
def test_farthest_point_net_is_separated_and_covering(coords, eps):
    X = PointSet(coords)
    net = farthest_point_net(X, eps)
    verify_net(X, net)
    D = X.distances()
    c = list(net.center_indices)
    assert np.all(D[np.ix_(range(X.n), c)].min(axis=1) <= eps)
    if len(c) > 1:
        sub = D[np.ix_(c, c)]
        assert sub[~np.eye(len(c), dtype=bool)].min() > eps
    assert c[0] == 0


@settings(max_examples=60, deadline=None)
@given(clouds, st.floats(0.1, 5.0), st.floats(0.05, 0.9))
def test_lower_never_exceeds_upper(coords, r, frac):
    lower, upper = covering_number_bounds(PointSet(coords), r, r * frac)
    assert 1 <= lower <= upper


def test_covering_bounds_need_rho_below_r():
    X = interval(8)
    with pytest.raises(ValueError):
        covering_number_bounds(X, 0.1, 0.1)
    with pytest.raises(ValueError):
        covering_number_bounds(X, 0.1, 0.0)


def test_interval_bounds_by_hand():
    # center 1/2 holds the whole segment; the 1/4-packing is {1/2, 0, 1} and
    # the 1/8-net adds 1/4 and 3/4
    X = interval(257)
    assert covering_number_bounds(X, 0.5, 0.125) == (3, 5)


def test_single_point_counts():
    X = FiniteMetricSpace(np.zeros((1, 1)))
    assert covering_number_bounds(X, 1.0, 0.25) == (1, 1)
    fit = homogeneity_fit(X, ScaleGrid(0, 8))
    assert fit.s_hat == 0.0
    assert all(row[2] == 1 for row in fit.profile.rows)


def test_packing_count_separated():
    X = PointSet(np.eye(5))
    assert packing_count(X, 0, 2.0, 1.0) == 5
    assert packing_count(X, 0, 2.0, 1.5) == 1


def test_interval_fit():
    fit = homogeneity_fit(interval(512))
    assert 0.8 <= fit.s_hat <= 1.2
    assert fit.scale_pairs_used >= 6
    assert fit.residual_rms >= 0


def test_cantor_fit():
    fit = homogeneity_fit(cantor(8))
    assert 0.55 <= fit.s_hat <= 0.72


def test_fit_is_scale_invariant():
    X = cantor(6)
    D = X.distances()
    a = homogeneity_fit(D).s_hat
    b = homogeneity_fit(2.0 * D).s_hat
    assert abs(a - b) <= 0.05


def test_fit_needs_six_pairs():
    with pytest.raises(ValueError):
        homogeneity_fit(interval(4), ScaleGrid(0, 3))


def test_required_m_covers_profile():
    fit = homogeneity_fit(cantor(5))
    M = fit.required_M()
    for r, rho, n_up, _ in fit.profile.rows:
        assert n_up <= M * (r / rho) ** fit.s_hat * (1 + 1e-9)


def test_box_dimension():
    assert box_dimension_estimate(interval(512)).estimate == pytest.approx(1.0, abs=0.1)
    assert box_dimension_estimate(FiniteMetricSpace(np.zeros((1, 1)))).estimate == 0.0
    with pytest.raises(ValueError):
        box_dimension_estimate(interval(4))


def test_scale_grid():
    g = ScaleGrid.for_space(interval(5))
    assert g.j_min == math.floor(1 - math.log2(1.0))
    assert g.j_max == 2
    assert 2 in g and len(g) == g.j_max - g.j_min + 1
    with pytest.raises(ValueError):
        ScaleGrid(3, 1)


def test_embedding_image_keeps_dimension():
    X = interval(256)
    emb = assemble_embedding(X.distances())
    report = image_homogeneity_audit(X, emb.pointset(), gamma=1.0)
    assert report.passed, report.to_dict()


def test_fps_start_index():
    D = interval(9).distances()
    assert _fps_matrix(D, 0.3, start=4)[0] == 4
