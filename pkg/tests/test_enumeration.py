import numpy as np
import pytest

from aztecenv.core import WeightEnvironment, power_sum, signature_weight
from aztecenv.core import bernoulli_matrix_params, mean_p1_identity, var_p1_identity
from aztecenv.enumeration import (
    chain_count,
    enumerate_chains,
    exact_distribution,
    exact_joint_moments,
    level_marginal,
    partition_function,
    schur_polynomial,
    verify_marginal,
)


def _random_env(M, rng, yspread=0.6):
    return WeightEnvironment(
        M=M,
        beta=tuple(rng.uniform(0.2, 0.8, M)),
        y=tuple(rng.uniform(-yspread, yspread, M)),
    )


@pytest.mark.parametrize("M,count", [(1, 2), (2, 8), (3, 64), (4, 1024), (5, 32768)])
def test_chain_counts(M, count):
    assert chain_count(M) == count


def test_enumeration_size_guard():
    with pytest.raises(ValueError):
        next(enumerate_chains(7))


def test_chains_are_valid_and_distinct():
    seen = set()
    for chain in enumerate_chains(3):
        chain.validate()
        key = (chain.theta, chain.lam)
        assert key not in seen
        seen.add(key)


def test_partition_function_unit_weights():
    env = WeightEnvironment(M=3, beta=(0.5,) * 3, y=(0.0,) * 3)  # w = x = 1
    assert partition_function(env) == pytest.approx(64.0)
    assert partition_function(env, by_summation=True) == pytest.approx(64.0)


def test_partition_function_m1():
    env = WeightEnvironment(M=1, beta=(2.0 / 3.0,), y=(0.5,))  # w=2, x=0.5
    assert partition_function(env) == pytest.approx(2.0)
    assert partition_function(env, by_summation=True) == pytest.approx(2.0)


def test_partition_function_small_w_limit():
    env = WeightEnvironment(M=2, beta=(1e-12, 1e-12), y=(0.0, 0.0))
    assert partition_function(env, by_summation=True) == pytest.approx(1.0)


def test_partition_function_routes_agree_many_envs():
    rng = np.random.default_rng(1)
    for _ in range(50):
        M = int(rng.integers(1, 5))
        env = _random_env(M, rng)
        zs = partition_function(env, by_summation=True)
        zp = partition_function(env)
        assert abs(zs - zp) <= 1e-10 * zp


def test_probabilities_sum_to_one():
    rng = np.random.default_rng(2)
    dist = exact_distribution(_random_env(4, rng))
    assert abs(dist.probs.sum() - 1.0) < 1e-12
    assert (dist.probs > 0).all()
    assert len(dist.chains) == 2**10


def test_schur_examples():
    assert schur_polynomial((1,), (2.0, 3.0)) == pytest.approx(5.0)
    assert schur_polynomial((1, 1), (2.0, 3.0)) == pytest.approx(6.0)
    assert schur_polynomial((2, 1), (1.0, 1.0)) == pytest.approx(2.0)


def test_schur_symmetry_and_degree():
    vals = (1.3, 0.4, 2.2)
    a = schur_polynomial((2, 1), vals)
    b = schur_polynomial((2, 1), vals[::-1])
    assert a == pytest.approx(b)
    t = 1.7
    scaled = schur_polynomial((2, 1), tuple(t * v for v in vals))
    assert scaled == pytest.approx(t**3 * a)


def test_schur_contracts():
    with pytest.raises(ValueError):
        schur_polynomial((1, -1), (1.0,))
    with pytest.raises(ValueError):
        schur_polynomial((1, 2), (1.0, 1.0))
    with pytest.raises(ValueError):
        schur_polynomial((2, 1), (1.0,))


def test_verify_marginal_contract():
    rng = np.random.default_rng(3)
    env = _random_env(2, rng)
    with pytest.raises(ValueError):
        verify_marginal(env, 2)  # N must be < M
    with pytest.raises(ValueError):
        verify_marginal(_random_env(6, rng), 1)  # M too large


def test_verify_marginal_unit_weights():
    env = WeightEnvironment(M=2, beta=(0.5, 0.5), y=(0.0, 0.0))
    assert verify_marginal(env, 1) <= 1e-10


def test_verify_marginal_seeded():
    rng = np.random.default_rng(42)
    env = _random_env(3, rng)
    assert verify_marginal(env, 2) <= 1e-10


def test_exact_joint_moments_contracts():
    rng = np.random.default_rng(4)
    env = _random_env(3, rng)
    assert exact_joint_moments(env, [2], [0]) == pytest.approx(0.0)  # p_0 constant
    with pytest.raises(ValueError):
        exact_joint_moments(env, [2, 2], [1, 1])
    # at M = 1 the top signature is forced to zero, so p_1 vanishes
    env1 = WeightEnvironment(M=1, beta=(0.5,), y=(0.0,))
    assert exact_joint_moments(env1, [1], [1], centered=False) == 0.0
    # N = M is allowed: the top level is deterministic, centered moments vanish
    assert exact_joint_moments(env, [1, 3], [1, 1], centered=True) != 0.0
    assert exact_joint_moments(env, [3], [2], centered=True) == pytest.approx(0.0, abs=1e-12)


def test_exact_moments_match_bernoulli_identities():
    rng = np.random.default_rng(5)
    env = _random_env(4, rng)
    dist = exact_distribution(env)
    N = 2
    mean = exact_joint_moments(env, [N], [1], centered=False, dist=dist)
    assert mean == pytest.approx(mean_p1_identity(env, N), abs=1e-12)
    vals = np.array([power_sum(c.lam[N - 1], 1) for c in dist.chains], dtype=float)
    var = float(dist.probs @ vals**2 - (dist.probs @ vals) ** 2)
    assert var == pytest.approx(var_p1_identity(env, N), abs=1e-12)


def test_weight_law_is_bernoulli_convolution():
    """|lambda| at level N is a sum of independent Bernoulli(a_ij) variables."""
    rng = np.random.default_rng(6)
    for M, N in [(3, 1), (4, 2), (4, 3)]:
        env = _random_env(M, rng)
        dist = exact_distribution(env)
        law = {}
        for c, p in zip(dist.chains, dist.probs):
            k = signature_weight(c.lam[N - 1])
            law[k] = law.get(k, 0.0) + p
        pmf = np.array([1.0])
        for aij in bernoulli_matrix_params(env, N).ravel():
            pmf = np.convolve(pmf, [1.0 - aij, aij])
        for k, p in enumerate(pmf):
            assert abs(law.get(k, 0.0) - p) < 1e-12


def test_multi_level_centered_moment_nontrivial():
    rng = np.random.default_rng(7)
    env = _random_env(4, rng)
    v = exact_joint_moments(env, [1, 3], [1, 1])
    assert np.isfinite(v) and v != 0.0


def test_distribution_csv_export(tmp_path):
    rng = np.random.default_rng(8)
    dist = exact_distribution(_random_env(2, rng))
    path = tmp_path / "dist.csv"
    dist.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 1 + 8
    header = lines[0].split(",")
    assert header[-1] == "probability"
    assert sum(float(line.rsplit(",", 1)[1]) for line in lines[1:]) == pytest.approx(1.0)
