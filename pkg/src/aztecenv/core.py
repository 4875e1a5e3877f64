"""Domain types for the one-periodic Aztec diamond dimer model.

Signatures are plain tuples of non-increasing integers.  A dimer covering of
the size-M diamond is encoded as an interlacing chain of signature pairs
(theta[i], lam[i]) of growing length, and its weight is a monomial in the
per-row edge weights.  All objects here are immutable value types.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "is_signature",
    "signature_weight",
    "conjugate",
    "is_interlacing",
    "is_vertical_interlacing",
    "power_sum",
    "empirical_atoms",
    "empirical_cdf",
    "WeightEnvironment",
    "InterlacingChain",
    "covering_exponents",
    "covering_weight",
    "covering_weight_full",
    "bernoulli_matrix_params",
    "mean_p1_identity",
    "var_p1_identity",
]


def is_signature(parts) -> bool:
    """True iff parts is a non-increasing tuple of integers."""
    return all(parts[i] >= parts[i + 1] for i in range(len(parts) - 1))


def signature_weight(parts) -> int:
    """Sum of the parts, usually written |lam|."""
    return sum(parts)


def conjugate(parts):
    """Conjugate (transposed diagram) of a signature with non-negative parts.

    Length of the result is parts[0]; the empty signature is self-conjugate.
    """
    if len(parts) == 0 or parts[0] == 0:
        return ()
    if parts[-1] < 0:
        raise ValueError("conjugate requires non-negative parts")
    out = [0] * parts[0]
    for v in parts:
        for i in range(v):
            out[i] += 1
    return tuple(out)


def is_interlacing(mu, lam) -> bool:
    """Check lam_i >= mu_i >= lam_{i+1} for mu one shorter than lam."""
    if len(lam) != len(mu) + 1:
        raise ValueError(f"lengths must differ by one, got {len(mu)} and {len(lam)}")
    return all(lam[i] >= mu[i] >= lam[i + 1] for i in range(len(mu)))


def is_vertical_interlacing(theta, lam) -> bool:
    """Check theta_i - lam_i in {0, 1} coordinatewise, equal lengths."""
    if len(theta) != len(lam):
        raise ValueError(f"lengths must match, got {len(theta)} and {len(lam)}")
    return all(theta[i] - lam[i] in (0, 1) for i in range(len(theta)))


def power_sum(lam, k: int) -> int:
    """Sum of (lam_i + N - i)^k over i = 1..N (1-based), an integer.

    k = 0 returns N.
    """
    n = len(lam)
    return sum((lam[i] + n - 1 - i) ** k for i in range(n))


def empirical_atoms(lam):
    """Atoms (lam_i + N - i)/N of the empirical particle measure, decreasing."""
    n = len(lam)
    if n == 0:
        return np.empty(0)
    return (np.asarray(lam, dtype=float) + n - 1 - np.arange(n)) / n


def empirical_cdf(lam, t: float) -> float:
    """Fraction of empirical atoms <= t.  Each atom carries mass 1/N."""
    n = len(lam)
    if n == 0:
        return 1.0
    return float(np.count_nonzero(empirical_atoms(lam) <= t)) / n


@dataclass(frozen=True)
class WeightEnvironment:
    """One realization of the per-row weights of a size-M diamond.

    beta[i] in (0, 1) and y[i] in (-1 + delta', 1 - delta') parametrize the
    row weights via w_i = beta_i / (1 - beta_i) and x_i = 1 - y_i.  delta
    controls the guaranteed gap of x from {0, 2} and drives contour radius
    selection downstream.
    """

    M: int
    beta: tuple = field(default=())
    y: tuple = field(default=())
    delta: float = 0.1

    def __post_init__(self):
        beta = tuple(float(b) for b in self.beta)
        y = tuple(float(v) for v in self.y)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "y", y)
        if self.M <= 0:
            raise ValueError("M must be positive")
        if len(beta) != self.M or len(y) != self.M:
            raise ValueError("beta and y must each have length M")
        if not 0 < self.delta < 2:
            raise ValueError("delta must lie in (0, 2)")
        if any(not 0.0 < b < 1.0 for b in beta):
            raise ValueError("beta values must lie in (0, 1)")
        if any(abs(v) > 1.0 - self.delta + 1e-12 for v in y):
            raise ValueError("y values must satisfy |y| <= 1 - delta")

    @property
    def w(self) -> np.ndarray:
        b = np.asarray(self.beta)
        return b / (1.0 - b)

    @property
    def x(self) -> np.ndarray:
        return 1.0 - np.asarray(self.y)

    def beta_tail(self, N: int) -> np.ndarray:
        """beta_{N+1}, ..., beta_M as an array."""
        return np.asarray(self.beta[N:])

    def y_head(self, N: int) -> np.ndarray:
        """y_1, ..., y_N as an array."""
        return np.asarray(self.y[:N])

    def to_json(self) -> str:
        return json.dumps(
            {"M": self.M, "beta": list(self.beta), "y": list(self.y), "delta": self.delta}
        )

    @classmethod
    def from_json(cls, text: str) -> "WeightEnvironment":
        d = json.loads(text)
        return cls(M=int(d["M"]), beta=tuple(d["beta"]), y=tuple(d["y"]), delta=float(d["delta"]))

    @classmethod
    def constant(cls, M: int, beta: float, y: float = 0.0, delta: float = 0.1):
        return cls(M=M, beta=(beta,) * M, y=(y,) * M, delta=delta)


@dataclass(frozen=True)
class InterlacingChain:
    """A dimer covering encoded as signatures theta[i], lam[i] of length i+1.

    theta and lam are tuples of signatures for levels 1..M (0-indexed here).
    lam[M-1] is the all-zero signature of length M; `lam[i-1] interlaces into
    theta[i]` horizontally and theta[i] dominates lam[i] vertically.
    """

    theta: tuple
    lam: tuple

    @property
    def M(self) -> int:
        return len(self.theta)

    def validate(self) -> None:
        m = self.M
        if len(self.lam) != m:
            raise ValueError("theta and lam must have equal length")
        prev = ()
        for i in range(m):
            th, la = self.theta[i], self.lam[i]
            if len(th) != i + 1 or len(la) != i + 1:
                raise ValueError(f"level {i + 1} signatures must have length {i + 1}")
            if not (is_signature(th) and is_signature(la)):
                raise ValueError(f"level {i + 1} parts must be non-increasing")
            if not is_interlacing(prev, th):
                raise ValueError(f"horizontal interlacing fails at level {i + 1}")
            if not is_vertical_interlacing(th, la):
                raise ValueError(f"vertical interlacing fails at level {i + 1}")
            prev = la
        if any(v != 0 for v in self.lam[m - 1]):
            raise ValueError("top-level signature must be all zero")


def covering_exponents(chain: InterlacingChain):
    """Exponents (a_i, b_i) of w_i and x_i in the covering weight.

    a_i = |theta[i]| - |lam[i]| and b_i = |theta[i]| - |lam[i-1]|, both
    non-negative for a valid chain.
    """
    a, b = [], []
    prev_w = 0
    for i in range(chain.M):
        tw = signature_weight(chain.theta[i])
        lw = signature_weight(chain.lam[i])
        a.append(tw - lw)
        b.append(tw - prev_w)
        prev_w = lw
    return a, b


def covering_weight(chain: InterlacingChain, env: WeightEnvironment, validate: bool = True) -> float:
    """Product over rows of w_i^a_i x_i^b_i for the (u = v = 1) weights."""
    if chain.M != env.M:
        raise ValueError("chain and environment sizes differ")
    if validate:
        chain.validate()
    a, b = covering_exponents(chain)
    w, x = env.w, env.x
    # large exponent spreads (M in the hundreds) overflow a plain product
    extreme = any(r > 1e8 or r < 1e-8 for r in np.concatenate([w, x]))
    if extreme or env.M > 64:
        logw = sum(a[i] * math.log(w[i]) + b[i] * math.log(x[i]) for i in range(env.M))
        return math.exp(logw)
    out = 1.0
    for i in range(env.M):
        out *= w[i] ** a[i] * x[i] ** b[i]
    return out


def covering_weight_full(chain: InterlacingChain):
    """Monomial of the full covering weight with generic u, v, w, x weights.

    Returns a dict mapping symbols 'u_i', 'v_i', 'w_i', 'x_i' (1-based) to
    integer exponents, so callers can compare monomials without evaluating.
    Row i contributes v_i^(M-i+1-b_i) u_i^(i-a_i) w_i^a_i x_i^b_i.
    """
    a, b = covering_exponents(chain)
    m = chain.M
    expo = {}
    for i in range(m):
        expo[f"u_{i + 1}"] = (i + 1) - a[i]
        expo[f"v_{i + 1}"] = (m - i) - b[i]
        expo[f"w_{i + 1}"] = a[i]
        expo[f"x_{i + 1}"] = b[i]
    return {k: e for k, e in expo.items() if e != 0}


def bernoulli_matrix_params(env: WeightEnvironment, N: int) -> np.ndarray:
    """Success probabilities a_ij = x_i w_j / (1 + x_i w_j), shape (N, M-N)."""
    if not 1 <= N < env.M:
        raise ValueError("need 1 <= N < M")
    x = env.x[:N]
    w = env.w[N:]
    xw = np.outer(x, w)
    return xw / (1.0 + xw)


def mean_p1_identity(env: WeightEnvironment, N: int) -> float:
    """Exact mean of p_1 at level N: N(N-1)/2 plus the sum of the a_ij."""
    return N * (N - 1) / 2.0 + float(bernoulli_matrix_params(env, N).sum())


def var_p1_identity(env: WeightEnvironment, N: int) -> float:
    """Exact variance of p_1 at level N: sum of a_ij (1 - a_ij)."""
    a = bernoulli_matrix_params(env, N)
    return float((a * (1.0 - a)).sum())
