import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from infolandscape.binomial import Binomial, alpha
from infolandscape.decomposition import sample_domain, series_decomposition
from infolandscape.domain import MarginalPair, binary_domain, build_domain, embed_array
from infolandscape.optimize import (
    Location,
    classification_error,
    classify_minimizer,
    critical_condition_residual,
    determinant_line,
    information,
    minimize_classification_error,
    minimize_information,
)

from oracles import (
    classification_error_enum,
    grid_minimum,
    info_s_xy,
    random_binary_instance,
    random_positive_joint,
    shuffle_binary,
)

# (P(s1), P(x1|s), P(y1|s), min I) with min I from the zooming grid oracle
GRID_FROZEN = [
    (0.543, (0.320, 0.836), (0.055, 0.789), 0.31781195966204745),
    (0.354, (0.279, 0.451), (0.504, 0.548), 0.014561901054008564),
    (0.611, (0.601, 0.090), (0.082, 0.513), 0.1851401869578182),
    (0.749, (0.061, 0.223), (0.673, 0.231), 0.07959216305263972),
    (0.261, (0.291, 0.842), (0.509, 0.812), 0.13254216212424308),
    (0.766, (0.507, 0.834), (0.375, 0.588), 0.04307551501329221),
    (0.236, (0.785, 0.392), (0.931, 0.581), 0.07117086927488847),
    (0.463, (0.446, 0.266), (0.412, 0.137), 0.04929281265096219),
]


def test_information_matches_loop_oracle(rng):
    m = random_positive_joint(rng, (3, 2, 4))
    assert information(m) == pytest.approx(info_s_xy(m), abs=1e-14)


@pytest.mark.parametrize("ps, px, py, expected", GRID_FROZEN)
def test_minimum_matches_frozen_grid_values(ps, px, py, expected):
    r = minimize_information(binary_domain([ps, 1 - ps], px, py))
    assert r.i_star == pytest.approx(expected, abs=1e-6)
    assert r.i_star <= expected + 1e-12


def test_minimum_matches_live_grid_oracle(rng):
    for _ in range(50):
        p_s, px, py = random_binary_instance(rng)
        r = minimize_information(binary_domain(p_s, px, py))
        oracle, _ = grid_minimum(shuffle_binary(p_s, px, py))
        assert r.i_star == pytest.approx(oracle, abs=1e-6)


def test_independent_marginals_give_nonunique_zero():
    d = binary_domain([0.3, 0.7], [0.4, 0.4], [0.8, 0.8])
    r = minimize_information(d)
    assert r.location is Location.NON_UNIQUE
    assert r.i_star == pytest.approx(0.0, abs=1e-14)
    cert = classify_minimizer(d, r)
    assert cert.violations == ()
    assert cert.x_independent and cert.y_independent and not cert.numerically_unique
    # the zero set is the diagonal line t_s = lam P(s)
    lam_max = min(d.upper / d.p_s)
    lam_min = max(d.lower / d.p_s)
    for lam in np.linspace(lam_min, lam_max, 11):
        assert information(np.clip(embed_array(d, lam * d.p_s), 0, None)) < 1e-12


def test_positive_alpha_gives_nonnegative_coordinates():
    d = binary_domain([0.5, 0.5], [0.2, 0.7], [0.3, 0.8])
    assert alpha(d.q0, Binomial.determinant()).value > 0
    r = minimize_information(d)
    assert np.all(r.t_star.t >= -1e-12)
    assert classify_minimizer(d, r).violations == ()


def test_boundary_instance_has_nonzero_limit_derivative():
    d = binary_domain([0.4, 0.6], [0.2, 0.7], [0.3, 0.9])
    r = minimize_information(d)
    assert r.location is Location.BOUNDARY
    cert = classify_minimizer(d, r)
    assert cert.corner == "upper" and cert.labeling_ok
    assert cert.corner_margin > 0.1
    assert cert.violations == ()


def test_interior_minimizer_satisfies_alpha_equals_beta():
    d = binary_domain([0.5, 0.5], [0.3, 0.45], [0.6, 0.5])
    r = minimize_information(d)
    assert r.location is Location.INTERIOR
    assert np.max(np.abs(critical_condition_residual(r.q_star, d))) <= 1e-6
    assert r.first_order_residual <= 1e-9


def test_residual_at_shuffle_is_minus_alpha():
    d = binary_domain([0.3, 0.7], [0.2, 0.6], [0.25, 0.85])
    a0 = alpha(d.q0, Binomial.determinant()).value
    np.testing.assert_allclose(critical_condition_residual(d.q0, d), [-a0, -a0], atol=1e-14)


def test_history_is_non_increasing(rng):
    for _ in range(30):
        r = minimize_information(binary_domain(*random_binary_instance(rng, n_s=3)))
        h = np.array(r.history)
        assert np.all(np.diff(h) <= 1e-12)


def test_first_order_conditions_on_general_domain(rng):
    m = random_positive_joint(rng, (2, 3, 3), floor=0.05)
    d = build_domain(MarginalPair.from_joint(m))
    r = minimize_information(d)
    for t in sample_domain(d, 40, rng):
        assert r.i_star <= information(np.clip(embed_array(d, t), 0, None)) + 1e-10


def test_frank_wolfe_agrees_with_newton_on_interior_minima(rng):
    checked = 0
    while checked < 8:
        m = random_positive_joint(rng, (2, 3, 2), floor=0.1)
        d = build_domain(MarginalPair.from_joint(m))
        a = minimize_information(d)
        if a.location is not Location.INTERIOR:
            # the log gradient is unbounded near faces, where conditional gradient crawls
            continue
        b = minimize_information(d, tol=1e-6, method="frank-wolfe", max_iters=2000)
        # the duality gap bounds the suboptimality
        assert a.i_star - 1e-12 <= b.i_star <= a.i_star + 1e-6
        checked += 1


def test_deterministic(rng):
    d = binary_domain(*random_binary_instance(rng))
    a, b = minimize_information(d), minimize_information(d)
    assert a.i_star == b.i_star and np.array_equal(a.t_star.t, b.t_star.t)


@settings(max_examples=25)
@given(st.floats(0.1, 0.9), st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.05, 0.95),
       st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_information_convex_on_domain(ps, a, b, c, e, u1, u2, v1, v2, lam):
    d = binary_domain([ps, 1 - ps], [a, b], [c, e])
    t1 = d.lower + np.array([u1, u2]) * (d.upper - d.lower)
    t2 = d.lower + np.array([v1, v2]) * (d.upper - d.lower)

    def f(t):
        return information(np.clip(embed_array(d, t), 0, None))

    assert f(lam * t1 + (1 - lam) * t2) <= lam * f(t1) + (1 - lam) * f(t2) + 1e-12


def test_classification_error_examples(rng):
    assert classification_error(np.full((2, 2, 2), 1 / 8)) == 0.5
    det = np.zeros((2, 2, 2))
    det[0, 0, 0] = det[0, 1, 1] = det[1, 0, 1] = det[1, 1, 0] = 0.25
    assert classification_error(det) == 0.0
    for shape in [(2, 2, 2), (3, 2, 2)]:
        m = random_positive_joint(rng, shape)
        assert classification_error(m) == pytest.approx(classification_error_enum(m), abs=1e-15)
        assert 0 <= classification_error(m) <= 1 - 1 / shape[0]


def test_symmetric_instance_minimizers_are_off_diagonal_corners():
    d = binary_domain([0.5, 0.5], [0.5, 0.5], [0.5, 0.5])
    rep = minimize_classification_error(d)
    assert set(rep.argmin) == {("max", "min"), ("min", "max")}
    assert rep.min_error == 0.0


def test_independent_instance_corners_tie_in_symmetric_pairs():
    d = binary_domain([0.5, 0.5], [0.3, 0.3], [0.6, 0.6])
    e = dict(zip(minimize_classification_error(d).labels, minimize_classification_error(d).errors))
    # both slices equal the same product law, so swapping the stimuli maps corners onto each other
    assert e[("min", "min")] == pytest.approx(e[("max", "max")], abs=1e-15)
    assert e[("min", "max")] == pytest.approx(e[("max", "min")], abs=1e-15)
    # equal slices make the stimulus undecodable, opposite corners do not
    assert e[("min", "min")] == pytest.approx(0.5, abs=1e-15)
    assert e[("min", "max")] < 0.5


def test_unequal_priors_fall_back_to_grid():
    d = binary_domain([0.3, 0.7], [0.3, 0.6], [0.6, 0.2])
    with pytest.warns(UserWarning):
        rep = minimize_classification_error(d, grid=21)
    assert rep.method == "grid"


def test_classification_error_piecewise_linear_slopes(rng):
    allowed = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
    for _ in range(20):
        d = binary_domain([0.5, 0.5], rng.uniform(0.1, 0.9, 2), rng.uniform(0.1, 0.9, 2))
        t2 = rng.uniform(d.lower[1], d.upper[1])
        g = np.linspace(d.lower[0], d.upper[0], 400)
        err = np.array([classification_error(np.clip(embed_array(d, [t, t2]), 0, None)) for t in g])
        # slopes in the conditional scale g = t / P(s)
        slopes = np.diff(err) / np.diff(g / 0.5)
        near = np.min(np.abs(slopes[:, None] - allowed[None, :]), axis=1)
        # segments straddling a kink are averages; most segments sit on an allowed slope
        assert np.mean(near < 1e-9) > 0.95


def test_determinant_line_scan():
    scan = determinant_line(np.array([[3 / 4, 1 / 16], [1 / 16, 1 / 8]]))
    assert scan.det0 == pytest.approx(23 / 256, abs=1e-16)
    assert (scan.lower, scan.upper) == (-1 / 8, 1 / 16)
    assert not scan.det_in_interval
    assert scan.critical == pytest.approx(-23 / 256, abs=1e-16)
    # the derivative log[(a+t)(d+t)/((b-t)(c-t))] vanishes at -det P0, which is feasible
    assert scan.location is Location.INTERIOR and scan.i_star == pytest.approx(0.0, abs=1e-14)


@given(st.lists(st.floats(0.01, 1.0), min_size=4, max_size=4))
def test_determinant_line_always_reaches_independence(v):
    p0 = np.array(v).reshape(2, 2) / sum(v)
    scan = determinant_line(p0)
    # t = -det P0 gives the product of the marginals, which is always feasible
    assert scan.location is Location.INTERIOR
    assert scan.i_star == pytest.approx(0.0, abs=1e-12)


def test_series_terms_vanish_at_product_of_minimiser_with_independent_marginals():
    d = binary_domain([0.3, 0.7], [0.4, 0.4], [0.8, 0.8])
    r = minimize_information(d)
    s = series_decomposition(r.q_star)
    assert abs(s.i_cd) < 1e-12 and abs(s.i_total) < 1e-12
    assert math.isfinite(s.i_ci)
