"""Exact single-level sampling through Bernoulli matrices and dual insertion.

The level-N marginal of the dimer measure is a Schur measure whose normalizer
is the product of (1 + x_i w_j) over an N by (M - N) rectangle.  Drawing
independent Bernoulli(a_ij) bits with a_ij = x_i w_j / (1 + x_i w_j) and
taking the dual-insertion tableau shape of the resulting 0/1 matrix samples
that marginal exactly, which makes Monte Carlo possible at M in the hundreds.

Joint sampling across several levels is deliberately not offered: the two
marginals use different specializations on both sides and one insertion
growth does not produce their joint law.  Multi-level joints come from the
enumeration oracle only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import WeightEnvironment, bernoulli_matrix_params

__all__ = [
    "BernoulliMatrix",
    "sample_bernoulli_matrix",
    "dual_rsk_shape",
    "sample_lambda",
    "sample_lambda_batch",
    "MonteCarloMoments",
    "monte_carlo_moments",
]

CHUNK = 512  # fixed batch size keeps streams deterministic


@dataclass(frozen=True)
class BernoulliMatrix:
    """A 0/1 matrix together with its success-probability parameters."""

    bits: np.ndarray  # (N, M-N) uint8
    params: np.ndarray  # (N, M-N) float

    def __post_init__(self):
        if self.bits.shape != self.params.shape:
            raise ValueError("bits and params shapes differ")
        if ((self.params <= 0) | (self.params >= 1)).any():
            raise ValueError("parameters must lie strictly inside (0, 1)")

    @property
    def ones(self) -> int:
        return int(self.bits.sum())


def sample_bernoulli_matrix(env: WeightEnvironment, N: int, seed) -> BernoulliMatrix:
    """Independent entries with P(bit = 1) = x_i w_j / (1 + x_i w_j)."""
    a = bernoulli_matrix_params(env, N)
    rng = np.random.default_rng(seed)
    bits = (rng.random(a.shape) < a).astype(np.uint8)
    return BernoulliMatrix(bits=bits, params=a)


def dual_rsk_shape(mat: BernoulliMatrix | np.ndarray) -> tuple:
    """Shape of the dual-insertion tableau of the matrix biword.

    The biword lists the ones row by row; column indices are inserted into
    rows kept strictly increasing, bumping the first entry >= the incoming
    value.  |shape| equals the number of ones.  The resulting signature is
    padded with zeros to length N (the row count).
    """
    bits = mat.bits if isinstance(mat, BernoulliMatrix) else np.asarray(mat)
    n, _ = bits.shape
    # reuse the batch kernel with pre-decided bits: u = 1 - bit makes u < 0.5 iff bit
    uniforms = 1.0 - bits.astype(np.float64)[None, :, :]
    a = np.full(bits.shape, 0.5)
    shapes, ones = _kernels.rsk_shapes_batch(uniforms, a)
    shape = tuple(int(v) for v in shapes[0])
    assert sum(shape) == int(ones[0]) == int(bits.sum())
    return shape


def sample_lambda(env: WeightEnvironment, N: int, seed) -> tuple:
    """One draw of the level-N signature, zero-padded to length N."""
    return dual_rsk_shape(sample_bernoulli_matrix(env, N, seed))


def sample_lambda_batch(env: WeightEnvironment, N: int, num_samples: int, seed) -> np.ndarray:
    """num_samples independent level-N signatures as an (S, N) int array.

    Uniform variates are drawn in fixed-size chunks from a single stream, so
    results depend only on the seed (not on any worker configuration).
    """
    a = bernoulli_matrix_params(env, N)
    rng = np.random.default_rng(seed)
    out = np.empty((num_samples, N), dtype=np.int64)
    done = 0
    while done < num_samples:
        take = min(CHUNK, num_samples - done)
        u = rng.random((take,) + a.shape)
        shapes, ones = _kernels.rsk_shapes_batch(u, a)
        if (shapes.sum(axis=1) != ones).any():
            raise AssertionError("shape weight does not match ones count")
        out[done : done + take] = shapes
        done += take
    return out


@dataclass(frozen=True)
class MonteCarloMoments:
    """Sample means and covariances of the power sums p_k with jackknife SEs."""

    ks: tuple
    means: np.ndarray
    mean_se: np.ndarray
    cov: np.ndarray
    cov_se: np.ndarray
    num_samples: int
    pk_samples: np.ndarray  # (S, len(ks))

    def to_json_dict(self) -> dict:
        return {
            "ks": list(self.ks),
            "means": self.means.tolist(),
            "mean_se": self.mean_se.tolist(),
            "cov": self.cov.tolist(),
            "cov_se": self.cov_se.tolist(),
            "num_samples": self.num_samples,
        }


def _jackknife_cov(x: np.ndarray, y: np.ndarray):
    """Delete-one jackknife mean and SE for the covariance of two samples."""
    n = x.size
    sx, sy, sxy = x.sum(), y.sum(), (x * y).sum()
    mx = (sx - x) / (n - 1)
    my = (sy - y) / (n - 1)
    ci = (sxy - x * y) / (n - 1) - mx * my
    cbar = ci.mean()
    se = np.sqrt((n - 1) / n * ((ci - cbar) ** 2).sum())
    return cbar, se


def dump_samples_csv(shapes: np.ndarray, path) -> None:
    """Optional dump of sampled signatures, one row of parts per sample."""
    n = shapes.shape[1]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(f"part_{i + 1}" for i in range(n)) + "\n")
        for row in shapes:
            fh.write(",".join(str(int(v)) for v in row) + "\n")


def monte_carlo_moments(env: WeightEnvironment, N: int, ks, num_samples: int, seed) -> MonteCarloMoments:
    """Monte Carlo means and covariances of {p_k} at level N.

    p_0 is the constant N, reported with zero error.  Deterministic for a
    fixed seed; chunking is independent of any thread configuration.
    """
    ks = tuple(int(k) for k in ks)
    shapes = sample_lambda_batch(env, N, num_samples, seed)
    offsets = (N - 1 - np.arange(N)).astype(np.float64)
    parts = shapes + offsets[None, :]
    pk = np.empty((num_samples, len(ks)))
    for c, k in enumerate(ks):
        pk[:, c] = N if k == 0 else (parts**k).sum(axis=1)
    means = pk.mean(axis=0)
    mean_se = pk.std(axis=0, ddof=1) / np.sqrt(num_samples)
    m = len(ks)
    cov = np.zeros((m, m))
    cov_se = np.zeros((m, m))
    for i in range(m):
        for j in range(i, m):
            c, se = _jackknife_cov(pk[:, i], pk[:, j])
            cov[i, j] = cov[j, i] = c
            cov_se[i, j] = cov_se[j, i] = se
    for c, k in enumerate(ks):
        if k == 0:
            mean_se[c] = 0.0
            cov[c, :] = cov[:, c] = 0.0
            cov_se[c, :] = cov_se[:, c] = 0.0
    return MonteCarloMoments(
        ks=ks,
        means=means,
        mean_se=mean_se,
        cov=cov,
        cov_se=cov_se,
        num_samples=num_samples,
        pk_samples=pk,
    )
