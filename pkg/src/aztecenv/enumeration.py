"""Brute-force ground truth at small diamond sizes.

Everything else in the package is ultimately validated against this module:
it enumerates every interlacing chain (dimer covering), normalizes the weight
products into exact probabilities, and exposes exact marginals and quenched
moments.  Sizes are capped at M = 6 (2^21 chains); brute force is the point.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass

import numpy as np

from .core import (
    InterlacingChain,
    WeightEnvironment,
    conjugate,
    covering_weight,
    is_signature,
    power_sum,
    signature_weight,
)

__all__ = [
    "MAX_ENUM_SIZE",
    "enumerate_chains",
    "chain_count",
    "partition_function",
    "ExactDistribution",
    "exact_distribution",
    "exact_joint_moments",
    "schur_polynomial",
    "schur_measure_prob",
    "level_marginal",
    "verify_marginal",
]

MAX_ENUM_SIZE = 6


def _check_size(M: int) -> None:
    if M > MAX_ENUM_SIZE:
        raise ValueError(
            f"enumeration is limited to M <= {MAX_ENUM_SIZE} "
            f"(2^{M * (M + 1) // 2} chains at M = {M} is not desk scale)"
        )
    if M < 1:
        raise ValueError("M must be >= 1")


def _extensions(mu, cap):
    """All signatures of length len(mu)+1 interlacing above mu, first part <= cap."""
    n = len(mu)
    ranges = []
    for j in range(n + 1):
        hi = cap if j == 0 else mu[j - 1]
        lo = mu[j] if j < n else 0
        ranges.append(range(hi, lo - 1, -1))
    return itertools.product(*ranges)


def _vertical_drops(theta, cap):
    """All lam with theta_i - lam_i in {0,1}, non-increasing, lam_1 <= cap."""
    out = []
    for drops in itertools.product((0, 1), repeat=len(theta)):
        lam = tuple(theta[i] - drops[i] for i in range(len(theta)))
        if lam[0] <= cap and is_signature(lam):
            out.append(lam)
    return out


def enumerate_chains(M: int):
    """Yield every valid interlacing chain of size M exactly once.

    Proceeds level by level; part bounds theta^(i)_1 <= M-i+1 and
    lam^(i)_1 <= M-i prune branches that cannot reach the all-zero top level.
    """
    _check_size(M)

    def rec(level, prev_lam, thetas, lams):
        i = level + 1
        for theta in _extensions(prev_lam, M - i + 1):
            for lam in _vertical_drops(theta, M - i):
                if level + 1 == M:
                    if any(lam):
                        continue
                    yield InterlacingChain(theta=thetas + (theta,), lam=lams + (lam,))
                else:
                    yield from rec(level + 1, lam, thetas + (theta,), lams + (lam,))

    yield from rec(0, (), (), ())


def chain_count(M: int) -> int:
    _check_size(M)
    return sum(1 for _ in enumerate_chains(M))


def partition_function(env: WeightEnvironment, by_summation: bool = False) -> float:
    """Normalizing constant: product of (1 + x_i w_j) over 1 <= i <= j <= M.

    With by_summation=True (M <= 6 only) the same value is recomputed as the
    Kahan-compensated sum of covering weights over all chains.
    """
    if not by_summation:
        x, w = env.x, env.w
        z = 1.0
        for i in range(env.M):
            for j in range(i, env.M):
                z *= 1.0 + x[i] * w[j]
        return z
    _check_size(env.M)
    total = comp = 0.0
    for chain in enumerate_chains(env.M):
        val = covering_weight(chain, env, validate=False)
        t = total + (val - comp)
        comp = (t - total) - (val - comp)
        total = t
    return total


@dataclass(frozen=True)
class ExactDistribution:
    """All chains of one environment with their exact probabilities."""

    env: WeightEnvironment
    chains: tuple
    probs: np.ndarray

    @property
    def M(self) -> int:
        return self.env.M

    def to_csv(self, path) -> None:
        """One row per chain: flattened theta parts, flattened lam parts, probability."""
        m = self.M
        header = (
            [f"theta{i + 1}_{j + 1}" for i in range(m) for j in range(i + 1)]
            + [f"lam{i + 1}_{j + 1}" for i in range(m) for j in range(i + 1)]
            + ["probability"]
        )
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for chain, p in zip(self.chains, self.probs):
                row = [v for sig in chain.theta for v in sig]
                row += [v for sig in chain.lam for v in sig]
                row.append(repr(float(p)))
                writer.writerow(row)


def exact_distribution(env: WeightEnvironment) -> ExactDistribution:
    _check_size(env.M)
    chains = tuple(enumerate_chains(env.M))
    weights = np.array([covering_weight(c, env, validate=False) for c in chains])
    probs = weights / weights.sum()
    return ExactDistribution(env=env, chains=chains, probs=probs)


def exact_joint_moments(env, levels, ks, centered: bool = True, dist: ExactDistribution | None = None) -> float:
    """E[prod_j (p_{k_j}at level N_j - mean)] by full summation, M <= 6.

    levels must be strictly increasing; centered=False returns the raw joint
    moment.  Accepts a prebuilt ExactDistribution to amortize enumeration.
    """
    if list(levels) != sorted(set(levels)):
        raise ValueError("levels must be strictly increasing")
    if len(levels) != len(ks):
        raise ValueError("levels and ks must have equal length")
    if dist is None:
        dist = exact_distribution(env)
    vals = np.empty((len(dist.chains), len(levels)))
    for row, chain in enumerate(dist.chains):
        for col, (N, k) in enumerate(zip(levels, ks)):
            vals[row, col] = power_sum(chain.lam[N - 1], k)
    if centered:
        vals = vals - dist.probs @ vals
    return float(dist.probs @ np.prod(vals, axis=1))


def schur_polynomial(lam, values) -> float:
    """Schur polynomial s_lam evaluated at positive reals, by branching.

    Peels off one variable at a time, summing over signatures that interlace
    below lam; this avoids the divided differences of the bialternant form,
    which break down for repeated values.
    """
    lam = tuple(int(v) for v in lam)
    if any(v < 0 for v in lam):
        raise ValueError("schur_polynomial requires non-negative parts")
    if not is_signature(lam):
        raise ValueError("parts must be non-increasing")
    values = tuple(float(v) for v in values)
    nz = sum(1 for v in lam if v > 0)
    if nz > len(values):
        raise ValueError("need at least as many values as nonzero parts")
    lam = lam[:nz] if nz else ()
    cache = {}

    def rec(sig, n):
        if len(sig) > n:
            return 0.0
        if not sig:
            return 1.0
        key = (sig, n)
        if key in cache:
            return cache[key]
        top = values[n - 1]
        total = 0.0
        w = signature_weight(sig)
        for mu_full in _extensions_below(sig):
            mu = tuple(v for v in mu_full if v > 0)
            total += top ** (w - sum(mu)) * rec(mu, n - 1)
        cache[key] = total
        return total

    return rec(lam, len(values))


def _extensions_below(sig):
    """Signatures interlacing below sig, with sig implicitly padded by a zero.

    Yields tuples of length len(sig) whose trailing entries may be zero; the
    caller strips them.  This realizes one branching step on the nonzero
    profile of a padded signature.
    """
    n = len(sig)
    ranges = [
        range(sig[j], (sig[j + 1] if j + 1 < n else 0) - 1, -1) for j in range(n)
    ]
    return itertools.product(*ranges)


def schur_measure_prob(env: WeightEnvironment, N: int, lam) -> float:
    """Single-level marginal probability of lam from the Schur measure form.

    Proportional to s_lam(x_1..x_N) s_{lam'}(w_{N+1}..w_M), normalized by the
    product of (1 + w_j x_i) over the corresponding index rectangle.
    """
    if not 1 <= N < env.M:
        raise ValueError("need 1 <= N < M")
    x = env.x[:N]
    w = env.w[N:]
    norm = 1.0
    for xi in x:
        for wj in w:
            norm *= 1.0 + xi * wj
    return schur_polynomial(lam, x) * schur_polynomial(conjugate(lam), w) / norm


def level_marginal(dist: ExactDistribution, N: int) -> dict:
    """Exact marginal of the level-N signature, as a dict lam -> probability."""
    out: dict = {}
    for chain, p in zip(dist.chains, dist.probs):
        lam = chain.lam[N - 1]
        out[lam] = out.get(lam, 0.0) + p
    return out


def verify_marginal(env: WeightEnvironment, N: int, dist: ExactDistribution | None = None) -> float:
    """Max |enumeration marginal - Schur measure| over all level-N signatures."""
    if env.M > 5:
        raise ValueError("verify_marginal is limited to M <= 5")
    if not 1 <= N < env.M:
        raise ValueError("need 1 <= N < M")
    if dist is None:
        dist = exact_distribution(env)
    marg = level_marginal(dist, N)
    cap = env.M - N
    worst = 0.0
    for lam in _all_signatures(N, cap):
        p_enum = marg.get(lam, 0.0)
        p_schur = schur_measure_prob(env, N, lam)
        worst = max(worst, abs(p_enum - p_schur))
    return worst


def _all_signatures(length, cap):
    """All signatures of given length with parts in [0, cap]."""
    ranges = [range(cap, -1, -1)] * length
    for parts in itertools.product(*ranges):
        if is_signature(parts):
            yield parts
