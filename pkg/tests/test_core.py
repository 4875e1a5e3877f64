import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from aztecenv.core import (
    InterlacingChain,
    WeightEnvironment,
    bernoulli_matrix_params,
    conjugate,
    covering_exponents,
    covering_weight,
    covering_weight_full,
    empirical_cdf,
    is_interlacing,
    is_vertical_interlacing,
    power_sum,
    signature_weight,
)

signatures = st.lists(st.integers(0, 8), min_size=0, max_size=6).map(
    lambda parts: tuple(sorted(parts, reverse=True))
)


def test_is_interlacing_examples():
    assert is_interlacing((2,), (2, 1))
    assert not is_interlacing((0,), (3, 1))
    assert is_interlacing((), (7,))


def test_is_interlacing_length_contract():
    with pytest.raises(ValueError):
        is_interlacing((1, 1), (2, 1))


def test_vertical_interlacing_examples():
    assert is_vertical_interlacing((2, 1), (1, 1))
    assert not is_vertical_interlacing((2, 0), (0, 0))
    assert is_vertical_interlacing((5, 3, 0), (5, 3, 0))
    with pytest.raises(ValueError):
        is_vertical_interlacing((1,), (1, 0))


def test_power_sum_examples():
    assert power_sum((0, 0, 0), 1) == 3
    assert power_sum((2, 1), 2) == 10
    assert power_sum((4, 2, 2, 0), 0) == 4


@given(signatures)
def test_power_sum_order_zero_is_length(lam):
    assert power_sum(lam, 0) == len(lam)


@given(signatures)
def test_conjugate_involution(lam):
    assert conjugate(conjugate(lam)) == tuple(v for v in lam if v > 0)
    assert signature_weight(conjugate(lam)) == signature_weight(lam)


def test_empirical_cdf_examples():
    assert empirical_cdf((0, 0), 1.0) == 1.0
    assert empirical_cdf((0, 0), 0.25) == 0.5
    assert empirical_cdf((3,), -1.0) == 0.0


@given(signatures.filter(lambda s: len(s) > 0), st.floats(-5, 5), st.floats(0, 2))
def test_empirical_cdf_monotone(lam, t, dt):
    assert empirical_cdf(lam, t) <= empirical_cdf(lam, t + dt) + 1e-15


def test_environment_validation():
    with pytest.raises(ValueError):
        WeightEnvironment(M=2, beta=(0.5, 1.2), y=(0.0, 0.0))
    with pytest.raises(ValueError):
        WeightEnvironment(M=2, beta=(0.5, 0.5), y=(0.0, 0.95), delta=0.2)
    with pytest.raises(ValueError):
        WeightEnvironment(M=3, beta=(0.5, 0.5), y=(0.0, 0.0))


def test_environment_json_roundtrip():
    env = WeightEnvironment(M=3, beta=(0.2, 0.5, 0.8), y=(0.1, -0.3, 0.0), delta=0.05)
    env2 = WeightEnvironment.from_json(env.to_json())
    assert env2 == env
    assert json.loads(env.to_json())["beta"] == [0.2, 0.5, 0.8]


def test_accessors():
    env = WeightEnvironment(M=2, beta=(0.5, 0.25), y=(0.1, -0.1))
    assert np.allclose(env.w, [1.0, 1.0 / 3.0])
    assert np.allclose(env.x, [0.9, 1.1])
    assert np.allclose(env.beta_tail(1), [0.25])
    assert np.allclose(env.y_head(1), [0.1])


def _chain_m1(theta1):
    return InterlacingChain(theta=((theta1,),), lam=((0,),))


def test_covering_weight_small():
    env = WeightEnvironment(M=1, beta=(2.0 / 3.0,), y=(0.5,))  # w=2, x=0.5
    assert covering_weight(_chain_m1(0), env) == 1.0
    assert covering_weight(_chain_m1(1), env) == pytest.approx(1.0, rel=1e-14)


def test_covering_weight_validates():
    env = WeightEnvironment(M=1, beta=(0.5,), y=(0.0,))
    bad = InterlacingChain(theta=((2,),), lam=((0,),))  # vertical gap of 2
    with pytest.raises(ValueError):
        covering_weight(bad, env)


def test_covering_weight_positive_and_logspace():
    rng = np.random.default_rng(0)
    M = 80
    env = WeightEnvironment(M=M, beta=tuple(rng.uniform(0.2, 0.8, M)), y=tuple(rng.uniform(-0.5, 0.5, M)))
    # the all-zero chain has weight exactly 1 through the log-space route too
    chain = InterlacingChain(
        theta=tuple((0,) * (i + 1) for i in range(M)),
        lam=tuple((0,) * (i + 1) for i in range(M)),
    )
    assert covering_weight(chain, env) == pytest.approx(1.0)


def test_figure_monomial_attained_by_some_size3_chain():
    """A size-3 covering with the documented weight monomial exists."""
    from aztecenv.enumeration import enumerate_chains

    target = {
        "u_1": 1, "u_2": 1, "u_3": 1,
        "v_1": 2, "v_3": 1,
        "x_1": 1, "x_2": 2,
        "w_2": 1, "w_3": 2,
    }
    hits = [c for c in enumerate_chains(3) if covering_weight_full(c) == target]
    assert len(hits) == 1


def test_covering_exponents_nonnegative():
    from aztecenv.enumeration import enumerate_chains

    for chain in enumerate_chains(3):
        a, b = covering_exponents(chain)
        assert all(v >= 0 for v in a) and all(v >= 0 for v in b)


def test_bernoulli_params_shape_and_range():
    env = WeightEnvironment(M=4, beta=(0.3, 0.4, 0.5, 0.6), y=(0.1, 0.0, -0.1, 0.2))
    a = bernoulli_matrix_params(env, 2)
    assert a.shape == (2, 2)
    assert ((a > 0) & (a < 1)).all()
    with pytest.raises(ValueError):
        bernoulli_matrix_params(env, 4)
