import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from infolandscape.binomial import Binomial, alpha, beta
from infolandscape.distributions import JointDistribution, marginal_array
from infolandscape.domain import (
    KernelBasisVector,
    MarginalPair,
    binary_domain,
    build_domain,
    coords,
    derivative_along_basis,
    embed,
    embed_array,
    from_conditional_scale,
    shuffle_distribution,
    to_conditional_scale,
)
from infolandscape.errors import InconsistentMarginals, NotInDomain, OutOfDomain, ZeroProbabilityOnDirection

from oracles import binary_box, central_difference, info_s_xy, random_positive_joint, shuffle_binary

prob = st.floats(0.05, 0.95)
binary_pairs = st.tuples(st.lists(prob, min_size=2, max_size=3)).flatmap(
    lambda w: st.tuples(
        st.just(np.array(w[0]) / np.sum(w[0])),
        st.lists(prob, min_size=len(w[0]), max_size=len(w[0])),
        st.lists(prob, min_size=len(w[0]), max_size=len(w[0])),
    )
)


def test_kernel_basis_vector_pattern():
    b = KernelBasisVector(1, 0, 2, 0, 1)
    a = b.array((2, 3, 2))
    assert sorted(a[a != 0].tolist()) == [-1, -1, 1, 1]
    assert a[1, 0, 0] == 1 and a[1, 2, 1] == 1 and a[1, 2, 0] == -1 and a[1, 0, 1] == -1
    with pytest.raises(ValueError):
        KernelBasisVector(0, 1, 1, 0, 1)


def test_inconsistent_marginals():
    with pytest.raises(InconsistentMarginals):
        MarginalPair.from_arrays([[0.3, 0.2], [0.25, 0.25]], [[0.1, 0.3], [0.3, 0.3]])


def test_shuffle_of_uniform_is_uniform():
    d = binary_domain([0.5, 0.5], [0.5, 0.5], [0.5, 0.5])
    np.testing.assert_allclose(d.q0.mass, np.full((2, 2, 2), 1 / 8), atol=0)
    np.testing.assert_allclose(d.lower, [-1 / 8, -1 / 8])
    np.testing.assert_allclose(d.upper, [1 / 8, 1 / 8])


def test_shuffle_matches_conditional_product(rng):
    m = random_positive_joint(rng, (3, 2, 3))
    pair = MarginalPair.from_joint(m)
    q0 = shuffle_distribution(pair).mass
    ps = m.sum(axis=(1, 2))
    for s in range(3):
        px = m[s].sum(axis=1) / ps[s]
        py = m[s].sum(axis=0) / ps[s]
        np.testing.assert_allclose(q0[s], ps[s] * np.outer(px, py), atol=1e-15)


def test_null_stimulus_dropped_with_warning():
    pair = MarginalPair.from_arrays([[0.5, 0.0], [0.0, 0.0], [0.25, 0.25]], [[0.25, 0.25], [0.0, 0.0], [0.1, 0.4]])
    with pytest.warns(UserWarning):
        d = build_domain(pair)
    assert d.states == (0, 2)
    assert d.dims == 2


def test_degenerate_slice_has_no_room():
    pair = MarginalPair.from_conditionals([0.5, 0.5], [[1.0, 0.0], [0.4, 0.6]], [[0.3, 0.7], [0.5, 0.5]])
    d = build_domain(pair)
    assert d.lower[0] == 0.0 and d.upper[0] == 0.0
    assert d.upper[1] > d.lower[1]


def test_dims_formula():
    for shape in [(2, 2, 2), (3, 2, 4), (2, 3, 3), (4, 5, 2)]:
        m = np.full(shape, 1.0 / np.prod(shape))
        assert build_domain(MarginalPair.from_joint(m)).dims == shape[0] * (shape[1] - 1) * (shape[2] - 1)


def test_box_bounds_match_rejection_sampling(rng):
    p_s, px1, py1 = rng.dirichlet([2, 2]), rng.uniform(0.1, 0.9, 2), rng.uniform(0.1, 0.9, 2)
    d = binary_domain(p_s, px1, py1)
    q0 = shuffle_binary(p_s, px1, py1)
    lo, hi = binary_box(q0)
    np.testing.assert_allclose(d.lower, lo, atol=1e-15)
    np.testing.assert_allclose(d.upper, hi, atol=1e-15)
    wide_lo, wide_hi = lo - 0.1, hi + 0.1
    t = rng.uniform(wide_lo, wide_hi, size=(10**4, 2))
    q = q0[None] + t[:, :, None, None] * np.array([[1, -1], [-1, 1.0]])
    feasible = np.all(q >= 0, axis=(2, 3))
    for k in range(2):
        inside = feasible[:, k]
        assert t[inside, k].min() >= lo[k] and t[inside, k].max() <= hi[k]
        assert t[inside, k].min() - lo[k] < 0.01 and hi[k] - t[inside, k].max() < 0.01


def test_embed_examples():
    d = binary_domain([0.5, 0.5], [0.5, 0.5], [0.5, 0.5])
    np.testing.assert_allclose(embed(d, [0.0, 0.0]).mass, d.q0.mass)
    q = embed(d, [1 / 8, 1 / 8]).mass
    np.testing.assert_allclose(q[0], [[0.25, 0.0], [0.0, 0.25]], atol=1e-15)
    with pytest.raises(OutOfDomain):
        embed(d, [0.2, 0.0])


@given(binary_pairs, st.lists(st.floats(0.0, 1.0), min_size=3, max_size=3))
def test_embed_preserves_marginals_and_round_trips(inst, u):
    p_s, px1, py1 = inst
    d = binary_domain(p_s, px1, py1)
    t = d.lower + np.array(u[: d.dims]) * (d.upper - d.lower)
    q = embed(d, t)
    np.testing.assert_allclose(marginal_array(q, ["S", "X"]), d.pair.p_sx.mass, atol=1e-12)
    np.testing.assert_allclose(marginal_array(q, ["S", "Y"]), d.pair.p_sy.mass, atol=1e-12)
    np.testing.assert_allclose(coords(d, q).t, t, atol=1e-9)
    # the shuffle law is the same for every point of the domain
    np.testing.assert_allclose(shuffle_distribution(MarginalPair.from_joint(q)).mass, d.q0.mass, atol=1e-12)


def test_round_trip_general_domain(rng):
    m = random_positive_joint(rng, (2, 3, 3), floor=0.3)
    d = build_domain(MarginalPair.from_joint(m))
    t = coords(d, m).t
    np.testing.assert_allclose(embed_array(d, t), m, atol=1e-12)
    assert np.max(np.abs(coords(d, d.q0).t)) < 1e-15


def test_coords_rejects_off_domain_points():
    d = binary_domain([0.5, 0.5], [0.3, 0.6], [0.4, 0.7])
    q = d.q0.mass.copy()
    q[0, 0, 0] += 1e-3
    q[1, 1, 1] -= 1e-3
    with pytest.raises(NotInDomain):
        coords(d, q)


def test_conditional_scale_converter():
    d = binary_domain([0.25, 0.75], [0.3, 0.6], [0.4, 0.7])
    t = np.array([0.01, -0.02])
    np.testing.assert_allclose(to_conditional_scale(d, t), [0.04, -0.02 / 0.75])
    np.testing.assert_allclose(from_conditional_scale(d, to_conditional_scale(d, t)).t, t)


def test_derivative_at_shuffle_is_minus_alpha():
    d = binary_domain([0.4, 0.6], [0.2, 0.7], [0.3, 0.9])
    q0 = d.q0.mass
    m = q0.sum(axis=0)
    expected = np.log(m[0, 1] * m[1, 0] / (m[0, 0] * m[1, 1]))
    det = Binomial.determinant()
    for b in d.basis:
        assert derivative_along_basis(q0, b) == pytest.approx(expected, abs=1e-14)
        assert derivative_along_basis(q0, b) == pytest.approx(-alpha(q0, det).value, abs=1e-14)


def test_derivative_vanishes_for_product_of_uniforms():
    q = np.full((2, 2, 2), 1 / 8)
    assert derivative_along_basis(q, KernelBasisVector(0, 0, 1, 0, 1)) == 0.0


def test_derivative_matches_beta_minus_alpha_and_finite_differences(rng):
    for _ in range(200):
        m = random_positive_joint(rng, (2, 3, 2), floor=0.1)
        d = build_domain(MarginalPair.from_joint(m))
        for b in d.basis:
            got = derivative_along_basis(m, b)
            bn = Binomial.of_basis_vector(b)
            assert got == pytest.approx(beta(m, bn, b.s).value - alpha(m, bn).value, abs=1e-10)
            fd = central_difference(info_s_xy, m, b.array(m.shape).astype(float))
            assert got == pytest.approx(fd, abs=1e-6)


def test_derivative_refuses_zero_states():
    q = np.array([[[0.25, 0.0], [0.125, 0.125]], [[0.125, 0.125], [0.125, 0.125]]])
    with pytest.raises(ZeroProbabilityOnDirection):
        derivative_along_basis(q, KernelBasisVector(0, 0, 1, 0, 1))


def test_joint_distribution_input_accepted():
    d = binary_domain([0.5, 0.5], [0.3, 0.6], [0.4, 0.7])
    q = JointDistribution.from_array(d.q0.mass)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert coords(d, q).t.shape == (2,)
