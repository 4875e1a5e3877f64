import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aztecenv import _kernels
from aztecenv.core import WeightEnvironment, mean_p1_identity, var_p1_identity
from aztecenv.rsk import (
    BernoulliMatrix,
    dual_rsk_shape,
    dump_samples_csv,
    monte_carlo_moments,
    sample_bernoulli_matrix,
    sample_lambda,
    sample_lambda_batch,
)


def _random_env(M, rng, yspread=0.4):
    return WeightEnvironment(
        M=M,
        beta=tuple(rng.uniform(0.25, 0.75, M)),
        y=tuple(rng.uniform(-yspread, yspread, M)),
    )


def test_shape_tiny_cases():
    assert dual_rsk_shape(np.zeros((2, 2), dtype=np.uint8)) == (0, 0)
    assert dual_rsk_shape(np.array([[0, 1], [0, 0]], dtype=np.uint8)) == (1, 0)
    full = dual_rsk_shape(np.ones((2, 2), dtype=np.uint8))
    assert sum(full) == 4 and full[0] <= 2


def test_bernoulli_matrix_sampling():
    env = _random_env(6, np.random.default_rng(0))
    mat = sample_bernoulli_matrix(env, 3, seed=1)
    assert mat.bits.shape == (3, 3)
    assert mat.ones == mat.bits.sum()
    again = sample_bernoulli_matrix(env, 3, seed=1)
    assert np.array_equal(mat.bits, again.bits)


def test_zero_weight_limit_gives_zero_signature():
    env = WeightEnvironment(M=4, beta=(1e-14,) * 4, y=(0.0,) * 4)
    assert sample_lambda(env, 2, seed=2) == (0, 0)


def test_bernoulli_matrix_validation():
    with pytest.raises(ValueError):
        BernoulliMatrix(bits=np.zeros((2, 2), dtype=np.uint8), params=np.ones((2, 2)))


def test_uniform_case_ones_count():
    # x = w = 1 makes every a_ij = 1/2
    env = WeightEnvironment(M=8, beta=(0.5,) * 8, y=(0.0,) * 8)
    N = 4
    S = 4000
    shapes = sample_lambda_batch(env, N, S, seed=3)
    total = shapes.sum()
    mean = S * N * (env.M - N) / 2.0
    sd = np.sqrt(S * N * (env.M - N) * 0.25)
    assert abs(total - mean) < 4 * sd


def test_per_sample_invariants():
    rng = np.random.default_rng(4)
    env = _random_env(12, rng)
    N = 5
    shapes = sample_lambda_batch(env, N, 300, seed=5)
    assert shapes.shape == (300, N)
    assert (np.diff(shapes, axis=1) <= 0).all()
    assert shapes.max() <= env.M - N  # support bound on the first part
    # |shape| = ones is asserted inside the batch sampler; re-check externally
    for s in range(10):
        mat = sample_bernoulli_matrix(env, N, seed=600 + s)
        shape = dual_rsk_shape(mat)
        assert sum(shape) == mat.ones


def test_batch_seed_determinism():
    env = _random_env(10, np.random.default_rng(6))
    a = sample_lambda_batch(env, 4, 700, seed=7)
    b = sample_lambda_batch(env, 4, 700, seed=7)
    assert np.array_equal(a, b)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_shape_invariants_random_matrices(n, k, seed):
    rng = np.random.default_rng(seed)
    bits = (rng.random((n, k)) < rng.uniform(0.1, 0.9)).astype(np.uint8)
    shape = dual_rsk_shape(bits)
    assert len(shape) == n
    assert all(a >= b for a, b in zip(shape, shape[1:]))
    assert sum(shape) == int(bits.sum())
    assert shape[0] <= k


def test_kernel_paths_agree():
    rng = np.random.default_rng(8)
    for _ in range(30):
        N, K = rng.integers(1, 9, 2)
        u = rng.random((4, N, K))
        a = np.ascontiguousarray(rng.uniform(0.1, 0.9, (N, K)))
        s_py, o_py = _kernels._rsk_shapes_batch_py(u, a)
        s_used, o_used = _kernels.rsk_shapes_batch(u, a)
        assert np.array_equal(s_py, s_used)
        assert np.array_equal(o_py, o_used)


def test_fallback_path_selected_by_env_flag():
    code = (
        "import aztecenv._kernels as k; "
        "print(k.USING_NUMBA)"
    )
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True, text=True,
        env={"PATH": "/usr/bin:/bin", "AZTECENV_NO_NUMBA": "1"},
    )
    assert out.stdout.strip() == "False"


def test_moment_report_and_identities():
    rng = np.random.default_rng(9)
    env = _random_env(40, rng)
    N = 20
    mc = monte_carlo_moments(env, N, (0, 1), 20000, seed=10)
    assert mc.means[0] == N and mc.mean_se[0] == 0.0 and mc.cov[0, 0] == 0.0
    z_mean = (mc.means[1] - mean_p1_identity(env, N)) / mc.mean_se[1]
    z_var = (mc.cov[1, 1] - var_p1_identity(env, N)) / mc.cov_se[1, 1]
    assert abs(z_mean) < 4 and abs(z_var) < 4
    d = mc.to_json_dict()
    assert d["num_samples"] == 20000


def test_moment_cross_check_with_quadrature():
    from aztecenv.moments import expectation_pk

    rng = np.random.default_rng(11)
    env = _random_env(40, rng)
    N = 20
    mc = monte_carlo_moments(env, N, (2,), 20000, seed=12)
    pred = expectation_pk(env, N, 2)
    assert abs(mc.means[0] - pred) < 4 * mc.mean_se[0]


def test_moment_cross_check_k_up_to_4_nominal_size():
    """Sample means of p_k, k <= 4, match the quadrature means within 4 sigma
    at the nominal Monte Carlo size."""
    from aztecenv.moments import expectation_pk

    rng = np.random.default_rng(21)
    env = _random_env(100, rng)
    N = 50
    mc = monte_carlo_moments(env, N, (1, 2, 3, 4), 100_000, seed=22)
    for c, k in enumerate((1, 2, 3, 4)):
        pred = expectation_pk(env, N, k)
        assert abs(mc.means[c] - pred) < 4 * mc.mean_se[c], k


def test_quenched_fluctuations_look_gaussian():
    """Standardized third and fourth moments of p_1 under a fixed
    environment sit near the Gaussian values at moderate size."""
    rng = np.random.default_rng(31)
    env = _random_env(60, rng)
    mc = monte_carlo_moments(env, 30, (1,), 40_000, seed=32)
    x = mc.pk_samples[:, 0]
    xc = x - x.mean()
    n = x.size
    skew = float(np.mean(xc**3) / np.mean(xc**2) ** 1.5)
    kurt = float(np.mean(xc**4) / np.mean(xc**2) ** 2)
    assert abs(skew) < 4 * np.sqrt(15.0 / n) + 0.05  # small finite-size skew allowed
    assert abs(kurt - 3.0) < 4 * np.sqrt(96.0 / n) + 0.10


def test_dump_samples_csv(tmp_path):
    shapes = np.array([[2, 1], [1, 0]])
    path = tmp_path / "samples.csv"
    dump_samples_csv(shapes, path)
    text = path.read_text().splitlines()
    assert text[0] == "part_1,part_2"
    assert text[1] == "2,1"
