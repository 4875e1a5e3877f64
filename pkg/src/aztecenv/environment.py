"""Random-environment generators and empirical estimation of limit series.

Three families of weights are provided: i.i.d. pairs, finite-state Markov
chains started from stationarity, and GUE eigenvalue environments.  The same
module estimates (or computes in closed form, where a formula exists) the
truncated coefficient families that the limit formulas consume:

  F1, F2    first-order series: limiting mean power sums of y and of the
            beta tail,
  G1/G2/G3  covariance series between centered power-sum statistics, in the
            sqrt(M) normalization at one level, or the M normalization for a
            level pair,
  hatted G  the same objects in the M (respectively M^2) normalization used
            by the second limit regime.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

from .core import WeightEnvironment

__all__ = [
    "PairDistribution",
    "DiscretePair",
    "UniformPair",
    "two_point_beta",
    "point_mass",
    "EnvironmentModel",
    "gen_iid",
    "gen_markov",
    "gen_gue",
    "gen_gue_full",
    "gue_eigenvalues",
    "stationary_distribution",
    "SeriesData",
    "estimate_series",
    "iid_series",
    "markov_lag_sums",
    "semicircle_moment",
]


# ---------------------------------------------------------------------------
# distributions for (y, beta) pairs
# ---------------------------------------------------------------------------

class PairDistribution:
    """Joint law of one (y, beta) pair with bounded support."""

    def expect(self, fn):
        raise NotImplementedError

    def draw(self, rng, size):
        raise NotImplementedError

    def support_ok(self, delta: float) -> bool:
        raise NotImplementedError

    def moment_y(self, j: int) -> float:
        return 1.0 if j == 0 else self.expect(lambda y, b: y**j)

    def moment_beta(self, j: int) -> float:
        return 1.0 if j == 0 else self.expect(lambda y, b: b**j)


@dataclass(frozen=True)
class DiscretePair(PairDistribution):
    """Finitely supported pair distribution; expectations are exact sums."""

    atoms: tuple  # ((y, beta), ...)
    probs: tuple

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if abs(p.sum() - 1.0) > 1e-12 or (p < 0).any():
            raise ValueError("probs must be a probability vector")
        if len(self.atoms) != len(self.probs):
            raise ValueError("atoms and probs must have equal length")

    def expect(self, fn):
        return float(sum(p * fn(y, b) for (y, b), p in zip(self.atoms, self.probs)))

    def draw(self, rng, size):
        idx = rng.choice(len(self.atoms), size=size, p=np.asarray(self.probs))
        arr = np.asarray(self.atoms, dtype=float)
        return arr[idx, 0], arr[idx, 1]

    def support_ok(self, delta):
        return all(0.0 < b < 1.0 and abs(y) <= 1.0 - delta for y, b in self.atoms)


@dataclass(frozen=True)
class UniformPair(PairDistribution):
    """Independent uniform y and beta components; quadrature expectations."""

    y_lo: float
    y_hi: float
    b_lo: float
    b_hi: float
    _gl_nodes: int = 48

    def expect(self, fn):
        ty, wy = np.polynomial.legendre.leggauss(self._gl_nodes)
        ys = 0.5 * (self.y_hi - self.y_lo) * ty + 0.5 * (self.y_hi + self.y_lo)
        bs = 0.5 * (self.b_hi - self.b_lo) * ty + 0.5 * (self.b_hi + self.b_lo)
        vals = np.array([[fn(y, b) for b in bs] for y in ys])
        return float(wy @ vals @ wy) / 4.0

    def draw(self, rng, size):
        return (
            rng.uniform(self.y_lo, self.y_hi, size),
            rng.uniform(self.b_lo, self.b_hi, size),
        )

    def support_ok(self, delta):
        return 0.0 < self.b_lo and self.b_hi < 1.0 and max(abs(self.y_lo), abs(self.y_hi)) <= 1.0 - delta


def two_point_beta(b1: float, b2: float, p: float = 0.5, y: float = 0.0) -> DiscretePair:
    return DiscretePair(atoms=((y, b1), (y, b2)), probs=(p, 1.0 - p))


def point_mass(y: float, beta: float) -> DiscretePair:
    return DiscretePair(atoms=((y, beta),), probs=(1.0,))


# ---------------------------------------------------------------------------
# environment generators
# ---------------------------------------------------------------------------

def gen_iid(dist: PairDistribution, M: int, seed, delta: float = 0.1) -> WeightEnvironment:
    """M independent (y, beta) draws, reproducible from the seed."""
    if not dist.support_ok(delta):
        raise ValueError("distribution support violates the environment bands")
    rng = np.random.default_rng(seed)
    y, b = dist.draw(rng, M)
    return WeightEnvironment(M=M, beta=tuple(b), y=tuple(y), delta=delta)


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    """Stationary row vector of an irreducible aperiodic stochastic matrix."""
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError("P must be square")
    if (P < -1e-12).any() or np.abs(P.sum(axis=1) - 1.0).max() > 1e-10:
        raise ValueError("P must be row stochastic")
    evals, evecs = np.linalg.eig(P.T)
    idx = int(np.argmin(np.abs(evals - 1.0)))
    if abs(evals[idx] - 1.0) > 1e-8:
        raise ValueError("P has no eigenvalue 1; not stochastic?")
    pi = np.real(evecs[:, idx])
    pi = pi / pi.sum()
    if (pi < -1e-10).any():
        raise ValueError("stationary vector not non-negative; P reducible?")
    mods = np.sort(np.abs(evals))[::-1]
    if mods.size > 1 and mods[1] > 1.0 - 1e-12:
        raise ValueError("second eigenvalue modulus is 1; chain not ergodic")
    return np.clip(pi, 0.0, None) / np.clip(pi, 0.0, None).sum()


def gen_markov(states, P, M: int, seed, delta: float = 0.1) -> WeightEnvironment:
    """Length-M trajectory of a finite (y, beta)-valued chain, started from
    its stationary distribution."""
    states = [(float(y), float(b)) for y, b in states]
    pi = stationary_distribution(P)
    P = np.asarray(P, dtype=float)
    rng = np.random.default_rng(seed)
    cum = np.cumsum(P, axis=1)
    path = np.empty(M, dtype=np.int64)
    path[0] = rng.choice(len(states), p=pi)
    u = rng.random(M - 1)
    for t in range(1, M):
        path[t] = np.searchsorted(cum[path[t - 1]], u[t - 1], side="right")
    arr = np.asarray(states)
    y, b = arr[path, 0], arr[path, 1]
    return WeightEnvironment(M=M, beta=tuple(b), y=tuple(y), delta=delta)


def gue_eigenvalues(M: int, rng) -> np.ndarray:
    """Ordered eigenvalues of a GUE matrix, normalized to the semicircle on
    [-2, 2].

    Sampled through the symmetric tridiagonal beta = 2 model: independent
    N(0, 1) diagonal and chi_(2(M-k))/sqrt(2) off-diagonal, all divided by
    sqrt(M).
    """
    d = rng.standard_normal(M)
    e = np.sqrt(rng.chisquare(2.0 * np.arange(M - 1, 0, -1))) / np.sqrt(2.0)
    return np.sort(eigvalsh_tridiagonal(d, e)) / np.sqrt(M)


def _beta_of_eig(l: np.ndarray) -> np.ndarray:
    return (l * l + 1.0) / (l * l + 2.0)


def gen_gue(M: int, seed, delta: float = 0.1) -> WeightEnvironment:
    """beta_{M-i+1} = (l_i^2+1)/(l_i^2+2) from the ordered GUE spectrum, y = 0."""
    rng = np.random.default_rng(seed)
    l = gue_eigenvalues(M, rng)
    beta = _beta_of_eig(l)[::-1]
    return WeightEnvironment(M=M, beta=tuple(beta), y=(0.0,) * M, delta=delta)


def gen_gue_full(M: int, N: int, seed, delta: float = 0.1) -> WeightEnvironment:
    """Unit weights up to level N; the tail carries w = l^2 + 1 for the full
    spectrum of a size M-N GUE matrix."""
    if not 1 <= N < M:
        raise ValueError("need 1 <= N < M")
    rng = np.random.default_rng(seed)
    l = gue_eigenvalues(M - N, rng)
    beta = np.concatenate([np.full(N, 0.5), _beta_of_eig(l)[::-1]])
    return WeightEnvironment(M=M, beta=tuple(beta), y=(0.0,) * M, delta=delta)


@dataclass(frozen=True)
class EnvironmentModel:
    """Configuration wrapper choosing one of the studied weight families."""

    variant: str  # deterministic | iid | markov | gue | gue-full
    dist: PairDistribution | None = None
    states: tuple = ()
    P: tuple = ()
    beta_const: float = 0.5
    y_const: float = 0.0
    delta: float = 0.1

    def sample(self, M: int, seed, N: int | None = None) -> WeightEnvironment:
        if self.variant == "deterministic":
            return WeightEnvironment.constant(M, self.beta_const, self.y_const, self.delta)
        if self.variant == "iid":
            return gen_iid(self.dist, M, seed, self.delta)
        if self.variant == "markov":
            return gen_markov(self.states, np.asarray(self.P), M, seed, self.delta)
        if self.variant == "gue":
            return gen_gue(M, seed, self.delta)
        if self.variant == "gue-full":
            if N is None:
                raise ValueError("gue-full requires the level N")
            return gen_gue_full(M, N, seed, self.delta)
        raise ValueError(f"unknown environment variant {self.variant!r}")

    @property
    def is_random(self) -> bool:
        return self.variant != "deterministic"


# ---------------------------------------------------------------------------
# series containers and estimation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeriesData:
    """Truncated coefficient data for one limit-series role.

    For roles F1/F2 coeffs is 1-D indexed from 0 (constant term 1).  For the
    covariance roles coeffs is 2-D indexed from 1 in both slots.  A single
    gamma means the one-level normalization of the matching limit formula; a
    gamma pair means the two-level (M or M^2) normalization.  G3 data is
    ordered: first index is the beta-side level, second the y-side level.
    """

    role: str
    gammas: tuple
    coeffs: np.ndarray
    stderr: np.ndarray | None = None
    provenance: str = "closed-form"
    meta: dict = field(default_factory=dict)
    reference: np.ndarray | None = None  # closed-form twin of estimated data

    def __post_init__(self):
        if self.role in ("F1", "F2"):
            if self.coeffs.ndim != 1:
                raise ValueError("F-series coefficients must be 1-D")
            if abs(self.coeffs[0] - 1.0) > 1e-9:
                raise ValueError("F-series constant term must be 1")
        elif self.role in ("G1", "G2", "G3", "G3r", "G1hat", "G2hat", "G3hat", "G3rhat"):
            if self.coeffs.ndim != 2:
                raise ValueError("G-series coefficients must be 2-D")
        else:
            raise ValueError(f"unknown series role {self.role!r}")

    @property
    def order(self) -> int:
        return self.coeffs.shape[-1]

    def to_json(self) -> str:
        return json.dumps(
            {
                "role": self.role,
                "gammas": list(self.gammas),
                "coeffs": self.coeffs.tolist(),
                "stderr": None if self.stderr is None else self.stderr.tolist(),
                "provenance": self.provenance,
                "meta": self.meta,
                "reference": None if self.reference is None else self.reference.tolist(),
            }
        )


def _f_series(coeffs, role, provenance, meta=None) -> SeriesData:
    c = np.asarray(coeffs, dtype=float)
    c[0] = 1.0
    return SeriesData(role=role, gammas=(), coeffs=c, provenance=provenance, meta=meta or {})


def semicircle_moment(fn, upper: float = 2.0, nodes: int = 256):
    """Integral of a vectorized fn against the semicircle density on [-2, upper].

    Substitutes x = 2 sin(theta) so the endpoint square roots vanish smoothly.
    Complex-valued integrands are allowed.
    """
    t, wts = np.polynomial.legendre.leggauss(nodes)
    th_hi = math.asin(min(max(upper / 2.0, -1.0), 1.0))
    a, b = -math.pi / 2.0, th_hi
    theta = 0.5 * (b - a) * t + 0.5 * (b + a)
    x = 2.0 * np.sin(theta)
    dens = (2.0 * np.cos(theta)) ** 2 / (2.0 * math.pi)  # sqrt(4-x^2) dx/dtheta
    total = 0.5 * (b - a) * np.sum(wts * dens * fn(x))
    return complex(total) if np.iscomplexobj(total) else float(total)


def _power_stats(env: WeightEnvironment, N: int, order: int):
    """X_i = mean beta-tail^i and Y_j = mean y-head^j for i, j = 1..order."""
    bt = env.beta_tail(N)
    yh = env.y_head(N)
    X = np.empty(order)
    Y = np.empty(order)
    pb = np.ones_like(bt)
    py = np.ones_like(yh)
    for r in range(order):
        pb = pb * bt
        py = py * yh
        X[r] = pb.mean()
        Y[r] = py.mean() if yh.size else 0.0
    return X, Y


def estimate_series(
    model: EnvironmentModel,
    roles,
    gammas,
    M: int,
    num_envs: int,
    seed,
    order: int = 24,
):
    """Monte Carlo estimates of the requested series at diamond size M.

    gammas is a single gamma or an ordered pair (gamma1 <= gamma2).  Returns a
    dict role -> SeriesData with standard errors from the sample covariance.
    Estimated coefficient tails do not decay below the Monte Carlo noise
    floor, so unlike closed-form series the truncation order stays fixed and
    is recorded in meta.
    """
    single = np.isscalar(gammas)
    gpair = (float(gammas),) * 2 if single else tuple(float(g) for g in gammas)
    g1, g2 = gpair
    if not 0 < g1 <= g2 <= 1:
        raise ValueError("need 0 < gamma1 <= gamma2 <= 1")
    N1, N2 = int(g1 * M), int(g2 * M)
    if not 1 <= N1 <= N2 < M:
        raise ValueError("gamma M levels must satisfy 1 <= floor(gamma M) < M")
    cov_roles = [r for r in roles if r.startswith("G")]
    low_n = bool(cov_roles) and num_envs < 1000

    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    child_seeds = ss.spawn(num_envs)
    X1 = np.empty((num_envs, order))
    Y1 = np.empty((num_envs, order))
    X2 = np.empty((num_envs, order))
    Y2 = np.empty((num_envs, order))
    for e in range(num_envs):
        env = model.sample(M, child_seeds[e], N=N2)
        X1[e], Y1[e] = _power_stats(env, N1, order)
        if N2 == N1:
            X2[e], Y2[e] = X1[e], Y1[e]
        else:
            X2[e], Y2[e] = _power_stats(env, N2, order)

    def cov_and_se(A, B):
        n = A.shape[0]
        Ac = A - A.mean(axis=0)
        Bc = B - B.mean(axis=0)
        C = Ac.T @ Bc / n
        se = np.sqrt(np.einsum("ei,ej->ij", Ac**2, Bc**2) / n - C**2) / math.sqrt(n)
        return C, se

    # normalizations per role: one-level data uses the sqrt(M)-regime (or
    # its hatted) one-level scaling; a gamma pair uses M or M^2
    if single:
        scale = {
            "G1": (M - N1, X1, X1),
            "G2": (N1, Y1, Y1),
            "G3": (math.sqrt((M - N1) * N1), X1, Y1),
            "G3r": (math.sqrt((M - N1) * N1), X1, Y1),
            "G1hat": ((M - N1) ** 2, X1, X1),
            "G2hat": (N1**2, Y1, Y1),
            "G3hat": ((M - N1) * N1, X1, Y1),
            "G3rhat": ((M - N1) * N1, X1, Y1),
        }
    else:
        # G3 couples the beta tail above N1 with y below N2; G3r the reverse
        scale = {
            "G1": (M, X1, X2),
            "G2": (M, Y1, Y2),
            "G3": (M, X1, Y2),
            "G3r": (M, X2, Y1),
            "G1hat": (M**2, X1, X2),
            "G2hat": (M**2, Y1, Y2),
            "G3hat": (M**2, X1, Y2),
            "G3rhat": (M**2, X2, Y1),
        }

    out = {}
    meta = {"M": M, "num_envs": num_envs, "order": order, "variant": model.variant}
    if low_n:
        # below the recommended sample count: keep going, but widen the error
        # bars conservatively and flag the result
        meta = dict(meta, insufficient_samples=True)
    widen = math.sqrt(1000.0 / num_envs) if low_n else 1.0
    refs = _reference_series(model, roles, gammas if not single else g1, order)
    for role in roles:
        if role in ("F1", "F2"):
            c = np.concatenate([[1.0], (Y1 if role == "F1" else X2).mean(axis=0)])
            c[0] = 1.0
            out[role] = SeriesData(
                role=role, gammas=(), coeffs=c, provenance="estimated",
                meta=meta, reference=refs.get(role),
            )
        elif role in scale:
            s, A, B = scale[role]
            C, se = cov_and_se(A, B)
            out[role] = SeriesData(
                role=role,
                gammas=(g1,) if single else gpair,
                coeffs=s * C,
                stderr=widen * s * se,
                provenance="estimated (low-n)" if low_n else "estimated",
                meta=meta,
                reference=refs.get(role),
            )
        else:
            raise ValueError(f"unknown role {role!r}")
    return out


def _reference_series(model, roles, gammas, order):
    """Closed-form or quadrature twins for estimated series, where available."""
    try:
        if model.variant == "iid":
            S = iid_series(model.dist, roles, gammas, order)
        elif model.variant == "markov":
            S = markov_series(model.states, np.asarray(model.P), roles, gammas, order)
        elif model.variant in ("gue", "gue-full") and "F2" in roles:
            from .asymptotics import gue_epsilon

            gam = gammas if np.isscalar(gammas) else gammas[0]
            upper = 2.0 if model.variant == "gue-full" else gue_epsilon(gam)
            mass = 1.0 if model.variant == "gue-full" else 1.0 - gam
            c = np.array(
                [1.0]
                + [
                    semicircle_moment(lambda x, j=j: ((x * x + 1.0) / (x * x + 2.0)) ** j, upper, 400) / mass
                    for j in range(1, order + 1)
                ]
            )
            return {"F2": c}
        else:
            return {}
        return {role: S[role].coeffs for role in roles if role in S}
    except ValueError:
        return {}


def iid_series(dist: PairDistribution, roles, gammas, order: int = 40):
    """Closed-form limit series for i.i.d. (y, beta) pairs."""
    single = np.isscalar(gammas)
    gpair = (float(gammas),) * 2 if single else tuple(float(g) for g in gammas)
    g1, g2 = gpair
    my = np.array([dist.moment_y(j) for j in range(2 * order + 1)])
    mb = np.array([dist.moment_beta(j) for j in range(2 * order + 1)])
    myb = np.array(
        [[dist.expect(lambda y, b: y**j * b**i) for j in range(1, order + 1)] for i in range(1, order + 1)]
    )
    covbb = np.array([[mb[i + j] - mb[i] * mb[j] for j in range(1, order + 1)] for i in range(1, order + 1)])
    covyy = np.array([[my[i + j] - my[i] * my[j] for j in range(1, order + 1)] for i in range(1, order + 1)])
    covby = np.array(
        [[myb[i - 1, j - 1] - mb[i] * my[j] for j in range(1, order + 1)] for i in range(1, order + 1)]
    )

    out = {}
    for role in roles:
        if role == "F1":
            out[role] = _f_series(my[: order + 1].copy(), "F1", "closed-form")
        elif role == "F2":
            out[role] = _f_series(mb[: order + 1].copy(), "F2", "closed-form")
        elif single:
            coeffs = {
                "G1": covbb,
                "G2": covyy,
                "G3": np.zeros_like(covby),
                "G3r": np.zeros_like(covby),
            }.get(role)
            if coeffs is None:
                raise ValueError("iid weights are sqrt(M)-regime; no hatted closed form")
            out[role] = SeriesData(role=role, gammas=(g1,), coeffs=coeffs, provenance="closed-form")
        else:
            coeffs = {
                "G1": covbb / (1.0 - g1),
                "G2": covyy / g2,
                "G3": covby * (g2 - g1) / ((1.0 - g1) * g2),
                "G3r": np.zeros_like(covby),
            }.get(role)
            if coeffs is None:
                raise ValueError("iid weights are sqrt(M)-regime; no hatted closed form")
            out[role] = SeriesData(role=role, gammas=gpair, coeffs=coeffs, provenance="closed-form")
    return out


def markov_series(states, P, roles, gammas, order: int = 40, tail_tol: float = 1e-13):
    """Closed-form limit series for a finite-state stationary chain.

    Built from two-sided lag sums of the state-function covariances; the
    geometric tail bound from the second eigenvalue modulus makes the sums
    effectively exact.  Cross series at one level vanish in the limit.
    """
    single = np.isscalar(gammas)
    gpair = (float(gammas),) * 2 if single else tuple(float(g) for g in gammas)
    g1, g2 = gpair
    arr = np.asarray(states, dtype=float)
    pi = stationary_distribution(np.asarray(P, dtype=float))
    my = np.array([1.0] + [float(pi @ arr[:, 0] ** j) for j in range(1, order + 1)])
    mb = np.array([1.0] + [float(pi @ arr[:, 1] ** j) for j in range(1, order + 1)])
    Sbb, Syy, Sby, _ = markov_lag_sums(states, P, order, tail_tol)
    zero = np.zeros_like(Sby)

    out = {}
    for role in roles:
        if role == "F1":
            out[role] = _f_series(my.copy(), "F1", "closed-form")
        elif role == "F2":
            out[role] = _f_series(mb.copy(), "F2", "closed-form")
        elif single:
            coeffs = {"G1": Sbb, "G2": Syy, "G3": zero, "G3r": zero}.get(role)
            if coeffs is None:
                raise ValueError("finite chains are sqrt(M)-regime; no hatted closed form")
            out[role] = SeriesData(role=role, gammas=(g1,), coeffs=coeffs, provenance="closed-form")
        else:
            coeffs = {
                "G1": Sbb / (1.0 - g1),
                "G2": Syy / g2,
                "G3": Sby * (g2 - g1) / ((1.0 - g1) * g2),
                "G3r": zero,
            }.get(role)
            if coeffs is None:
                raise ValueError("finite chains are sqrt(M)-regime; no hatted closed form")
            out[role] = SeriesData(role=role, gammas=gpair, coeffs=coeffs, provenance="closed-form")
    return out


def markov_lag_sums(states, P, order: int, tail_tol: float = 1e-13):
    """Two-sided lag sums of stationary covariances of state power functions.

    Returns (Sbb, Syy, Sby, lam2): Sbb[i, j] sums Cov(beta^i_1, beta^j_(1+m))
    over all integer lags m, Syy likewise for y, and Sby[i, j] sums
    Cov(beta^i_(1+m), y^j_1) over m >= 0 plus Cov(beta^i_1, y^j_(1+m)) over
    m >= 1.  Matrix powers stop once the contribution falls below tail_tol;
    lam2 is the second eigenvalue modulus driving the geometric decay.
    """
    arr = np.asarray(states, dtype=float)
    ys, bs = arr[:, 0], arr[:, 1]
    P = np.asarray(P, dtype=float)
    pi = stationary_distribution(P)
    evals = np.linalg.eigvals(P)
    lam2 = float(np.sort(np.abs(evals))[-2]) if len(evals) > 1 else 0.0
    if lam2 >= 1.0 - 1e-12:
        raise ValueError("second eigenvalue modulus is 1; chain not ergodic")

    Yp = np.stack([ys**j for j in range(1, order + 1)])  # (order, S)
    Bp = np.stack([bs**j for j in range(1, order + 1)])
    mby = Bp @ pi
    myy = Yp @ pi

    def lag_cov(Fp, Gp, Pm):
        # Cov(F(xi_1), G(xi_(1+m))) = sum_s pi_s F_s sum_t (P^m)_st G_t - EF EG
        joint = Fp @ (pi[:, None] * Pm) @ Gp.T
        return joint - np.outer(Fp @ pi, Gp @ pi)

    eye = np.eye(len(pi))
    Sbb = lag_cov(Bp, Bp, eye)
    Syy = lag_cov(Yp, Yp, eye)
    Sby = lag_cov(Bp, Yp, eye)
    Pm = eye.copy()
    m = 0
    bound = 1.0
    while bound > tail_tol and m < 10000:
        m += 1
        Pm = Pm @ P
        cbb = lag_cov(Bp, Bp, Pm)
        cyy = lag_cov(Yp, Yp, Pm)
        cby = lag_cov(Bp, Yp, Pm)  # beta at time 1, y at time 1+m
        cyb = lag_cov(Yp, Bp, Pm)  # y at time 1, beta at time 1+m
        Sbb += cbb + cbb.T
        Syy += cyy + cyy.T
        Sby += cby + cyb.T
        bound = max(
            np.abs(cbb).max(), np.abs(cyy).max(), np.abs(cby).max(), np.abs(cyb).max()
        )
    return Sbb, Syy, Sby, lam2
