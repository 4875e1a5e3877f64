"""Exact finite-size expectations at a fixed environment via contour integrals.

The mean of p_k at level N is a finite-order differential operator acting on
the product f = prod (1 - beta_j + beta_j x_i), which collapses to a single
contour integral whose integrand is built from logarithmic derivative ratios
of g(z) = prod_j (1 - beta_j z) and h(z) = prod_i (z - y_i).  Subset and
ordered-tuple sums over indices are never enumerated; they equal h-derivative
and g-derivative ratios, which keeps the cost at O((N + M) k) per node.

Leading two-level covariances come from the companion double contour integral
with the (z - w)^-2 kernel.  The remainder beyond that leading term is not
reconstructed here, so those values are used for asymptotic comparisons only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from . import _kernels
from .core import WeightEnvironment
from .enumeration import MAX_ENUM_SIZE, exact_distribution, power_sum

__all__ = [
    "stirling2",
    "ContourSpec",
    "default_contour",
    "nested_contours",
    "log_derivative_ratios",
    "F_k",
    "expectation_pk",
    "G_leading",
    "QuenchedCovariance",
    "quenched_central_moment_mc_free",
    "exact_level_covariance",
]

R_MAX = 12
REL_TOL = 1e-10
MAX_NODES = 1 << 16


@lru_cache(maxsize=None)
def stirling2(k: int, m: int) -> int:
    """Stirling number of the second kind via the standard recurrence."""
    if not 0 <= m <= k <= R_MAX:
        raise ValueError(f"need 0 <= m <= k <= {R_MAX}, got k={k}, m={m}")
    if k == 0:
        return 1
    if m == 0:
        return 0
    if m == k:
        return 1
    return m * stirling2(k - 1, m) + stirling2(k - 1, m - 1)


@dataclass(frozen=True)
class ContourSpec:
    """A circle for trapezoid quadrature; nodes double until convergence."""

    radius: float
    center: complex = 0.0
    nodes: int = 64

    def points(self, n: int | None = None) -> np.ndarray:
        n = self.nodes if n is None else n
        theta = 2.0 * np.pi * np.arange(n) / n
        return self.center + self.radius * np.exp(1j * theta)


def _band(env: WeightEnvironment, N: int):
    """Admissible radius band: above every |y_i|, below every 1/beta_j and 1."""
    y = env.y_head(N)
    beta = env.beta_tail(N)
    lo = float(np.max(np.abs(y))) if y.size else 0.0
    hi = min(1.0, float(1.0 / np.max(beta))) if beta.size else 1.0
    lo = max(lo, 0.02 * hi)
    if lo >= hi:
        raise ValueError("empty admissible band: |y| values reach the beta poles")
    return lo, hi


def default_contour(env: WeightEnvironment, N: int) -> ContourSpec:
    """Log-scale midpoint of the admissible band."""
    lo, hi = _band(env, N)
    return ContourSpec(radius=math.sqrt(lo * hi))


def nested_contours(env: WeightEnvironment, N1: int, N2: int):
    """Inner (level N1) and outer (level N2) circles at 40% / 70% of the band."""
    lo1, hi1 = _band(env, N1)
    lo2, hi2 = _band(env, N2)
    lo, hi = max(lo1, lo2), min(hi1, hi2)
    if lo >= hi:
        raise ValueError("empty common band for nested contours")
    inner = lo ** 0.6 * hi ** 0.4
    outer = lo ** 0.3 * hi ** 0.7
    return ContourSpec(radius=inner), ContourSpec(radius=outer)


def _check_admissible(env: WeightEnvironment, N: int, nodes: np.ndarray) -> None:
    y = env.y_head(N)
    beta = env.beta_tail(N)
    if y.size:
        d = np.abs(nodes[:, None] - y[None, :])
        if d.min() < 1e-8:
            i = int(np.unravel_index(d.argmin(), d.shape)[1])
            raise ValueError(f"contour passes within 1e-8 of pole y[{i}]")
    if beta.size:
        d = np.abs(1.0 - np.outer(nodes, beta))
        if d.min() < 1e-8:
            j = int(np.unravel_index(d.argmin(), d.shape)[1]) + N
            raise ValueError(f"contour passes within 1e-8 of pole 1/beta[{j}]")


def _ratio_table(log_derivs: np.ndarray) -> np.ndarray:
    """Derivative ratios f^(r)/f from log-derivatives, r = 0..rmax.

    Uses f^(n+1)/f = sum_j C(n, j) (f^(j)/f) (log f)^(n+1-j), the recurrence
    defining complete Bell polynomials.
    """
    rmax = log_derivs.shape[0] - 1
    out = np.empty_like(log_derivs)
    out[0] = 1.0
    for n in range(rmax):
        acc = np.zeros_like(out[0])
        for j in range(n + 1):
            acc += math.comb(n, j) * out[j] * log_derivs[n + 1 - j]
        out[n + 1] = acc
    return out


def _beta_ratios(env, N, nodes, rmax):
    """g^(r)/g for g(z) = prod_{j>N} (1 - beta_j z)."""
    sums = _kernels.beta_ratio_power_sums(env.beta_tail(N), nodes, rmax)
    logd = np.zeros_like(sums)
    for r in range(1, rmax + 1):
        logd[r] = -math.factorial(r - 1) * sums[r]
    return _ratio_table(logd)


def _y_ratios(env, N, nodes, rmax):
    """h^(r)/h for h(z) = prod_{i<=N} (z - y_i)."""
    sums = _kernels.y_ratio_power_sums(env.y_head(N), nodes, rmax)
    logd = np.zeros_like(sums)
    for r in range(1, rmax + 1):
        logd[r] = (-1.0) ** (r - 1) * math.factorial(r - 1) * sums[r]
    return _ratio_table(logd)


def log_derivative_ratios(points, z: complex, r_max: int, role: str = "beta"):
    """Ratios f^(r)(z)/f(z), r = 0..r_max, for one product family.

    role "beta": f(z) = prod_j (1 - p_j z);  role "y": f(z) = prod_i (z - p_i).
    Raises when z sits within 1e-8 of a pole of the log-derivative.
    """
    points = np.asarray(points, dtype=float)
    nodes = np.array([z], dtype=complex)
    if r_max > R_MAX:
        raise ValueError(f"derivative order capped at {R_MAX}")
    if role == "beta":
        if points.size and np.abs(1.0 - nodes[0] * points).min() < 1e-8:
            raise ValueError("z within 1e-8 of a 1/beta pole")
        sums = _kernels.beta_ratio_power_sums(points, nodes, r_max)
        sign = lambda r: -math.factorial(r - 1)
    elif role == "y":
        if points.size and np.abs(nodes[0] - points).min() < 1e-8:
            raise ValueError("z within 1e-8 of a y pole")
        sums = _kernels.y_ratio_power_sums(points, nodes, r_max)
        sign = lambda r: (-1.0) ** (r - 1) * math.factorial(r - 1)
    else:
        raise ValueError("role must be 'beta' or 'y'")
    logd = np.zeros_like(sums)
    for r in range(1, r_max + 1):
        logd[r] = sign(r) * sums[r]
    return list(_ratio_table(logd)[:, 0])


def _fk_integrand(env, N, k, nodes):
    """Integrand of the level-N moment contour integral of order k."""
    A = _beta_ratios(env, N, nodes, k)
    B = _y_ratios(env, N, nodes, k + 1)
    acc = np.zeros_like(nodes)
    for m in range(k + 1):
        acc += (math.comb(k, m) / (m + 1)) * B[m + 1] * A[k - m]
    return (-1.0) ** k * (1.0 - nodes) ** k * acc


def F_k(env: WeightEnvironment, N: int, k: int, contour: ContourSpec | None = None,
        debug_dump=None) -> complex:
    """Single contour integral giving the order-k building block at level N.

    k = 0 returns N (the particle count).  The circle encircles every y_i and
    no 1/beta_j; node count doubles until successive values agree to 1e-10
    relative.  debug_dump, when set to a path, writes the accepted integrand
    samples as CSV.
    """
    if not 1 <= N < env.M:
        raise ValueError("need 1 <= N < M")
    if k == 0:
        return complex(N)
    if k > R_MAX - 2:
        raise ValueError(f"order capped at {R_MAX - 2}")
    if contour is None:
        contour = default_contour(env, N)
    n = contour.nodes
    prev = None
    while n <= MAX_NODES:
        z = contour.points(n)
        _check_admissible(env, N, z)
        integrand = _fk_integrand(env, N, k, z)
        cur = (integrand * (z - contour.center)).mean()
        if prev is not None and abs(cur - prev) <= REL_TOL * max(1.0, abs(cur)):
            if debug_dump:
                with open(debug_dump, "w") as fh:
                    fh.write("re_z,im_z,re_f,im_f\n")
                    for zz, ff in zip(z, integrand):
                        fh.write(f"{zz.real!r},{zz.imag!r},{ff.real!r},{ff.imag!r}\n")
            return cur
        prev = cur
        n *= 2
    raise ArithmeticError(f"contour quadrature did not converge with {MAX_NODES} nodes")


def expectation_pk(env: WeightEnvironment, N: int, k: int, contour: ContourSpec | None = None) -> float:
    """Mean of p_k = sum_i (lam_i + N - i)^k at level N for this environment.

    Combines the contour building blocks through Stirling numbers of the
    second kind; k = 0 returns N.
    """
    if k == 0:
        return float(N)
    total = 0.0 + 0.0j
    for m in range(1, k + 1):
        total += stirling2(k, m) * F_k(env, N, m, contour)
    if abs(total.imag) > 1e-9 * max(1.0, abs(total.real)):
        raise ArithmeticError(f"imaginary residue {total.imag:.3e} in expectation_pk")
    return float(total.real)


def _g_side_outer(env, N, k, nodes):
    """Outer-variable factor of the covariance double integral (order k, level N)."""
    A = _beta_ratios(env, N, nodes, k)
    B = _y_ratios(env, N, nodes, k)
    acc = np.zeros_like(nodes)
    for m in range(k + 1):
        acc += math.comb(k, m) * B[m] * A[k - m]
    return (-1.0) ** k * (1.0 - nodes) ** k * acc


def _g_side_inner(env, N, k, nodes):
    """Inner-variable factor; empty when k = 0 (the mu sum has no terms)."""
    if k == 0:
        return np.zeros_like(nodes)
    A = _beta_ratios(env, N, nodes, k - 1)
    B = _y_ratios(env, N, nodes, k)
    acc = np.zeros_like(nodes)
    for mu in range(k):
        acc += math.comb(k, mu) * ((k - mu) / (mu + 1)) * B[mu + 1] * A[k - mu - 1]
    return (-1.0) ** k * (1.0 - nodes) ** k * acc


def G_leading(
    env: WeightEnvironment,
    N1: int,
    N2: int,
    k1: int,
    k2: int,
    contours=None,
) -> complex:
    """Leading term of the quenched covariance of (p_k1 at N1, p_k2 at N2).

    Double contour integral with the (z - w)^-2 kernel; the outer circle
    (level N2, order k2) encircles the inner one (level N1, order k1).  The
    full finite-size covariance contains further remainder integrals that are
    deliberately not computed, so at small M this does not match enumeration.
    """
    if not 1 <= N1 <= N2 < env.M:
        raise ValueError("need 1 <= N1 <= N2 < M")
    if k1 == 0 or k2 == 0:
        return 0.0 + 0.0j
    if contours is None:
        inner, outer = nested_contours(env, N1, N2)
    else:
        inner, outer = contours
        if inner.radius >= outer.radius:
            raise ValueError("inner contour must have strictly smaller radius")
    if outer.radius - inner.radius < 1e-6:
        raise ValueError("contours too close: separate the radii by more than 1e-6")
    n = max(inner.nodes, outer.nodes)
    prev = None
    while n <= MAX_NODES:
        w = inner.points(n)
        z = outer.points(n)
        _check_admissible(env, N1, w)
        _check_admissible(env, N2, z)
        fw = _g_side_inner(env, N1, k1, w) * (w - inner.center)
        fz = _g_side_outer(env, N2, k2, z) * (z - outer.center)
        cur = 0.0 + 0.0j
        for i0 in range(0, n, 1024):  # bound the kernel matrix to O(1024 n)
            zi = z[i0 : i0 + 1024]
            kern = 1.0 / (zi[:, None] - w[None, :]) ** 2
            cur += fz[i0 : i0 + 1024] @ (kern @ fw)
        cur /= n**2
        if prev is not None and abs(cur - prev) <= 1e-9 * max(1.0, abs(cur)):
            return cur
        prev = cur
        n *= 2
    raise ArithmeticError("double contour quadrature did not converge")


def exact_level_covariance(env: WeightEnvironment, N: int, k1: int, k2: int) -> float:
    """Cov(p_k1, p_k2) at one level by full enumeration, M <= 6."""
    dist = exact_distribution(env)
    v1 = np.array([power_sum(c.lam[N - 1], k1) for c in dist.chains], dtype=float)
    v2 = np.array([power_sum(c.lam[N - 1], k2) for c in dist.chains], dtype=float)
    return float(dist.probs @ (v1 * v2) - (dist.probs @ v1) * (dist.probs @ v2))


class QuenchedCovariance(NamedTuple):
    value: float
    provenance: str  # "exact" or "leading-order"


def quenched_central_moment_mc_free(env: WeightEnvironment, N: int, k1: int, k2: int) -> QuenchedCovariance:
    """Quenched Cov(p_k1, p_k2) at level N without Monte Carlo.

    Exact (enumeration) when M <= 6; otherwise the leading double-contour
    term, flagged as such since the remainder is not reconstructed.
    """
    if env.M <= MAX_ENUM_SIZE:
        return QuenchedCovariance(exact_level_covariance(env, N, k1, k2), "exact")
    val = G_leading(env, N, N, k1, k2)
    return QuenchedCovariance(float(val.real), "leading-order")
