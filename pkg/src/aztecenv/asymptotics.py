"""Numerical evaluation of the limit formulas.

All limits are expressed through two ingredients: the level bracket

    B_gamma(z) = (1 - gamma) (1 - z)/z (F2(z) - 1) + gamma (z - 1)/z F1(1/z),

built from the first-order series, and environment covariance kernels built
from the G-series.  Limiting height-function moments are single contour
integrals of powers of the bracket; covariances are double contour integrals
whose kernel is the environment combination (first regime), or that plus the
z w / (z - w)^2 free-field kernel (second regime), or the free-field kernel
alone (quenched).  Conventions used throughout:

  * values are normalized by powers of the diamond size M: limit_moment is
    the limit of E[p_k] / N^(k+1); covariance functions return the limit of
    M^-(k+l+1) (first regime) or M^-(k+l) (second regime / quenched) times
    the centered covariance of p_k at level floor(gamma2 M) and p_l at level
    floor(gamma1 M);
  * the z variable carries (gamma2, k), the w variable (gamma1, l);
  * G-coefficient arrays are indexed [level-1 axis, level-2 axis] from 1.

Closed forms for the i.i.d., Markov, and GUE example environments are
evaluated here as independent cross-check paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .environment import SeriesData, markov_lag_sums, stationary_distribution

__all__ = [
    "eval_log",
    "series_band",
    "bracket_values",
    "limit_moment",
    "annealed_cov_sqrt",
    "cov_sqrt_one_level",
    "annealed_cov_M",
    "quenched_cov",
    "wick_moment",
    "iid_limit_moment_closed_form",
    "iid_cov_closed_form",
    "markov_cov_closed_form",
    "gue_epsilon",
    "gue_F",
    "gue_F_quadrature",
    "gue_G",
    "gue_resolvent_cov",
    "gue_full_cov",
]

REL_TOL = 1e-10
MAX_SINGLE_NODES = 1 << 16
MAX_DOUBLE_NODES = 1 << 12


# ---------------------------------------------------------------------------
# evaluation helpers
# ---------------------------------------------------------------------------

def eval_log(log, **record):
    """Append one evaluation record when a log list was supplied."""
    if log is not None:
        log.append(record)


def _horner(coeffs, z):
    acc = np.zeros_like(z) + coeffs[-1]
    for c in coeffs[-2::-1]:
        acc = acc * z + c
    return acc


def _f_at(series: SeriesData, z):
    """F(z) for an F-role series."""
    return _horner(series.coeffs, z)


def _f_minus_one_at(series: SeriesData, z):
    """F(z) - 1 evaluated without cancellation (drops the constant term)."""
    c = series.coeffs
    return z * _horner(c[1:], z) if len(c) > 1 else np.zeros_like(z)


def _decay_base(coeffs_1d) -> float:
    """Geometric decay base of a coefficient tail, 0 for an all-zero tail."""
    c = np.abs(np.asarray(coeffs_1d, dtype=float))
    if c.size == 0 or c.max() == 0.0:
        return 0.0
    best = 0.0
    start = max(1, c.size // 2)
    for j in range(start, c.size):
        if c[j] > 0:
            best = max(best, c[j] ** (1.0 / (j + 1)))
    return best


def series_band(f1: SeriesData, f2: SeriesData, gs=()) -> tuple:
    """Admissible radius band (r_lo, r_hi) from truncated-series decay.

    Positive-power tails cap the outer radius; negative-power tails floor the
    inner one.  Raises when the band is empty (the declared delta was too
    small for the truncation orders in play).
    """
    pos, neg = [_decay_base(f2.coeffs[1:])], [_decay_base(f1.coeffs[1:])]
    for g in gs:
        if g is None:
            continue
        c = np.abs(g.coeffs)
        ax0 = [_decay_base(c.max(axis=1))]
        ax1 = [_decay_base(c.max(axis=0))]
        if g.role in ("G1", "G1hat"):
            pos += ax0 + ax1
        elif g.role in ("G2", "G2hat"):
            neg += ax0 + ax1
        elif g.role in ("G3", "G3hat"):  # beta powers positive, y powers negative
            pos += ax0
            neg += ax1
        elif g.role in ("G3r", "G3rhat"):
            pos += ax0
            neg += ax1
    b_plus = max(pos)
    b_minus = max(neg)
    r_hi = 0.95 * min(1.0, 1.0 / b_plus if b_plus > 0 else np.inf)
    r_lo = max(1.05 * b_minus, 0.02 * r_hi)
    if r_lo >= r_hi:
        raise ValueError(
            f"empty admissible band ({r_lo:.3f}, {r_hi:.3f}); "
            "series tails decay too slowly for any contour radius"
        )
    return r_lo, r_hi


def bracket_values(f1: SeriesData, f2: SeriesData, gamma: float, z):
    """The level bracket B_gamma at the points z."""
    fm1 = _f_minus_one_at(f2, z)
    f1inv = _horner(f1.coeffs, 1.0 / z)
    return (1.0 - gamma) * (1.0 - z) / z * fm1 + gamma * (z - 1.0) / z * f1inv


def _circle(radius, n):
    theta = 2.0 * np.pi * np.arange(n) / n
    return radius * np.exp(1j * theta)


def _single_contour(fn, radius, log=None, formula="", tol=REL_TOL):
    """(2 pi i)^-1 times the contour integral of fn over |z| = radius."""
    n = 64
    prev = None
    while n <= MAX_SINGLE_NODES:
        z = _circle(radius, n)
        cur = np.mean(fn(z) * z)
        if prev is not None and abs(cur - prev) <= tol * max(1.0, abs(cur)):
            eval_log(log, formula=formula, radius=radius, nodes=n,
                     value=[cur.real, cur.imag], residual=abs(cur - prev))
            return cur
        prev = cur
        n *= 2
    raise ArithmeticError(f"{formula or 'contour integral'} did not converge")


def _double_contour(fn, r_z, r_w, log=None, formula="", tol=1e-10):
    """(2 pi i)^-2 times the double contour integral of fn(z, w)."""
    n = 64
    prev = None
    while n <= MAX_DOUBLE_NODES:
        z = _circle(r_z, n)
        w = _circle(r_w, n)
        total = 0.0 + 0.0j
        for i0 in range(0, n, 512):
            zi = z[i0 : i0 + 512]
            vals = fn(zi[:, None], w[None, :])
            total += (vals @ w) @ zi
        cur = total / n**2
        if prev is not None and abs(cur - prev) <= tol * max(1.0, abs(cur)):
            eval_log(log, formula=formula, radii=[r_z, r_w], nodes=n,
                     value=[cur.real, cur.imag], residual=abs(cur - prev))
            return cur
        prev = cur
        n *= 2
    raise ArithmeticError(f"{formula or 'double contour integral'} did not converge")


def _real(value: complex, what: str) -> float:
    if abs(value.imag) > 1e-9 * max(1.0, abs(value.real)):
        raise ArithmeticError(f"{what}: imaginary residue {value.imag:.3e}")
    return float(value.real)


# ---------------------------------------------------------------------------
# limit shape
# ---------------------------------------------------------------------------

def limit_moment(f1: SeriesData, f2: SeriesData, gamma: float, k: int,
                 radius: float | None = None, log=None) -> float:
    """Limit of E[p_k] / N^(k+1) along N / M -> gamma.

    Single contour integral of B_gamma^(k+1) / (gamma^(k+1) (k+1) (z-1)).
    The k = 0 value is analytically 1; it is computed, not special-cased.
    """
    if k > 10:
        raise ValueError("moment order capped at 10")
    if radius is None:
        lo, hi = series_band(f1, f2)
        radius = math.sqrt(lo * hi)

    def fn(z):
        b = bracket_values(f1, f2, gamma, z) / gamma
        return b ** (k + 1) / ((k + 1) * (z - 1.0))

    val = _single_contour(fn, radius, log, f"limit_moment(k={k}, gamma={gamma})")
    return _real(val, "limit_moment")


# ---------------------------------------------------------------------------
# environment kernels from G-series
# ---------------------------------------------------------------------------

def _powmat(v, order, sign):
    """Matrix v^(sign * j) for j = 1..order; v is a 1-D complex array."""
    base = v if sign > 0 else 1.0 / v
    out = np.empty((v.size, order), dtype=complex)
    out[:, 0] = base
    for j in range(1, order):
        out[:, j] = out[:, j - 1] * base
    return out


def _g_eval(coeffs, z, w, sign_z, sign_w):
    """sum_ij coeffs[i-1, j-1] w^(sign_w i) z^(sign_z j) on the z x w grid."""
    p, q = coeffs.shape
    Vw = _powmat(w, p, sign_w)
    Vz = _powmat(z, q, sign_z)
    return Vz @ (Vw @ coeffs).T


def _to_pair_normalization(g: SeriesData, gamma1: float, gamma2: float) -> np.ndarray:
    """Coefficients in the M (or M^2) two-level normalization.

    One-level data (a single recorded gamma) requires gamma1 == gamma2 and is
    rescaled; two-level data is passed through after a gamma check.
    """
    if len(g.gammas) == 2:
        if not np.allclose(g.gammas, (gamma1, gamma2), atol=1e-12):
            raise ValueError(f"{g.role} series recorded for gammas {g.gammas}")
        return g.coeffs
    gam = g.gammas[0]
    if abs(gamma1 - gamma2) > 1e-12 or abs(gam - gamma1) > 1e-12:
        raise ValueError("one-level series require gamma1 == gamma2 == recorded gamma")
    scale = {
        "G1": 1.0 / (1.0 - gam),
        "G2": 1.0 / gam,
        "G3": 1.0 / math.sqrt(gam * (1.0 - gam)),
        "G3r": 1.0 / math.sqrt(gam * (1.0 - gam)),
        "G1hat": 1.0 / (1.0 - gam) ** 2,
        "G2hat": 1.0 / gam**2,
        "G3hat": 1.0 / (gam * (1.0 - gam)),
        "G3rhat": 1.0 / (gam * (1.0 - gam)),
    }[g.role]
    return g.coeffs * scale


def _env_kernel_factory(gs: dict | None, gamma1: float, gamma2: float, hatted: bool):
    """Callable(z, w) -> gamma-weighted environment covariance combination.

    gs maps role names (unhatted spellings G1, G2, G3, G3r) to SeriesData or
    None; a callable is passed through unchanged.  The combination is

        (1-g1)(1-g2) G1(z, w) - (1-g1) g2 G3(1/z, w)
        - g1 (1-g2) G3r(1/w, z) + g1 g2 G2(1/z, 1/w).
    """
    if gs is None:
        return lambda z, w: np.zeros((z.size, w.size), dtype=complex)
    if callable(gs):
        return gs
    suffix = "hat" if hatted else ""
    packs = {}
    for name in ("G1", "G2", "G3", "G3r"):
        g = gs.get(name) or gs.get(name + suffix)
        packs[name] = None if g is None else _to_pair_normalization(g, gamma1, gamma2)

    def kernel(z, w):
        zf = z.ravel()
        wf = w.ravel()
        out = np.zeros((zf.size, wf.size), dtype=complex)
        if packs["G1"] is not None:
            out += (1 - gamma1) * (1 - gamma2) * _g_eval(packs["G1"], zf, wf, +1, +1)
        if packs["G3"] is not None:
            out -= (1 - gamma1) * gamma2 * _g_eval(packs["G3"], zf, wf, -1, +1)
        if packs["G3r"] is not None:
            # reversed cross series: beta powers ride z, y powers ride 1/w
            p, q = packs["G3r"].shape
            Vz = _powmat(zf, p, +1)
            Vw = _powmat(wf, q, -1)
            out -= gamma1 * (1 - gamma2) * (Vz @ packs["G3r"] @ Vw.T)
        if packs["G2"] is not None:
            out += gamma1 * gamma2 * _g_eval(packs["G2"], zf, wf, -1, -1)
        return out

    return kernel


def _default_radii(f1, f2, gs, nested: bool):
    glist = []
    if isinstance(gs, dict):
        glist = [g for g in gs.values() if g is not None]
    lo, hi = series_band(f1, f2, glist)
    if nested:
        r_w, r_z = 0.45 * hi, 0.9 * hi
    else:
        mid = math.sqrt(lo * hi)
        r_w, r_z = mid, min(1.05 * mid, 0.97 * hi)
    if r_w <= lo or r_z <= lo:
        raise ValueError(f"default radii fall below the inner band edge {lo:.3f}")
    return r_z, r_w


# ---------------------------------------------------------------------------
# covariance formulas
# ---------------------------------------------------------------------------

def annealed_cov_sqrt(f1, f2, gs, gamma1, gamma2, k, l, radii=None, log=None) -> float:
    """First-regime limit of M^-(k+l+1) Cov(p_k at gamma2 M, p_l at gamma1 M).

    gs supplies the G1/G2/G3/G3r series (dict, or a callable kernel, or None
    for a deterministic environment).  There is no contour singularity, so
    the two radii may coincide; results must be insensitive to the split.
    """
    if gamma1 > gamma2:
        raise ValueError("need gamma1 <= gamma2")
    if radii is None:
        r_z, r_w = _default_radii(f1, f2, gs, nested=False)
    else:
        r_z, r_w = radii
    kern = _env_kernel_factory(gs, gamma1, gamma2, hatted=False)

    def fn(z, w):
        zf, wf = z.ravel(), w.ravel()
        bz = bracket_values(f1, f2, gamma2, zf) ** k
        bw = bracket_values(f1, f2, gamma1, wf) ** l
        return bz[:, None] * bw[None, :] * kern(zf, wf) / np.outer(zf, wf)

    val = _double_contour(fn, r_z, r_w, log, f"annealed_cov_sqrt(k={k}, l={l})")
    return _real(val, "annealed_cov_sqrt")


def cov_sqrt_one_level(f1, f2, g1, g2, g3, gamma, k1, k2, radii=None, log=None) -> float:
    """First-regime limit of N^-(k1+k2+1) Cov(p_k1, p_k2) at one level.

    Separate code path from annealed_cov_sqrt: consumes the one-level series
    normalization directly and assembles the one-level kernel combination.
    """
    if radii is None:
        r_z, r_w = _default_radii(f1, f2, {"G1": g1, "G2": g2, "G3": g3}, nested=False)
    else:
        r_z, r_w = radii
    rho = math.sqrt(1.0 / gamma - 1.0)

    def fn(z, w):
        zf, wf = z.ravel(), w.ravel()
        bz = (bracket_values(f1, f2, gamma, zf) / gamma) ** k1
        bw = (bracket_values(f1, f2, gamma, wf) / gamma) ** k2
        kern = np.zeros((zf.size, wf.size), dtype=complex)
        if g2 is not None:
            kern += _g_eval(g2.coeffs, zf, wf, -1, -1)
        if g3 is not None and np.abs(g3.coeffs).max() > 0:
            kern -= rho * _g_eval(g3.coeffs, zf, wf, -1, +1)
            p, q = g3.coeffs.shape
            kern -= rho * (_powmat(zf, p, +1) @ g3.coeffs @ _powmat(wf, q, -1).T)
        if g1 is not None:
            kern += rho**2 * _g_eval(g1.coeffs, zf, wf, +1, +1)
        return bz[:, None] * bw[None, :] * kern / np.outer(zf, wf)

    val = _double_contour(fn, r_z, r_w, log, f"cov_sqrt_one_level(k1={k1}, k2={k2})")
    return _real(val, "cov_sqrt_one_level")


def quenched_cov(f1, f2, gamma1, gamma2, k, l, radii=None, log=None) -> float:
    """Quenched limit of M^-(k+l) Cov(p_k at gamma2 M, p_l at gamma1 M).

    Pure free-field double contour integral with the (z - w)^-2 kernel; the
    environment enters only through the limit shape series.  The outer
    contour must strictly enclose the inner one.
    """
    if gamma1 > gamma2:
        raise ValueError("need gamma1 <= gamma2")
    if k == 0 or l == 0:
        return 0.0
    if radii is None:
        r_z, r_w = _default_radii(f1, f2, None, nested=True)
    else:
        r_z, r_w = radii
    if r_z < 1.5 * r_w:
        raise ValueError("free-field kernel requires r_z >= 1.5 r_w")

    def fn(z, w):
        zf, wf = z.ravel(), w.ravel()
        bz = bracket_values(f1, f2, gamma2, zf) ** k
        bw = bracket_values(f1, f2, gamma1, wf) ** l
        return bz[:, None] * bw[None, :] / (zf[:, None] - wf[None, :]) ** 2

    val = _double_contour(fn, r_z, r_w, log, f"quenched_cov(k={k}, l={l})")
    return _real(val, "quenched_cov")


@dataclass(frozen=True)
class RegimeMCovariance:
    total: float
    gff_part: float
    env_part: float


def annealed_cov_M(f1, f2, gs, gamma1, gamma2, k, l, radii=None, log=None) -> RegimeMCovariance:
    """Second-regime limit of M^-(k+l) Cov(p_k at gamma2 M, p_l at gamma1 M).

    The integrand carries the hatted environment combination plus the
    z w/(z - w)^2 free-field kernel; both contributions are also returned
    separately.  With a vanishing environment combination the total equals
    quenched_cov by construction of the formulas (asserted in tests, not
    assumed here).
    """
    if gamma1 > gamma2:
        raise ValueError("need gamma1 <= gamma2")
    if radii is None:
        r_z, r_w = _default_radii(f1, f2, gs, nested=True)
    else:
        r_z, r_w = radii
    if r_z < 1.5 * r_w:
        raise ValueError("free-field kernel requires r_z >= 1.5 r_w")
    kern = _env_kernel_factory(gs, gamma1, gamma2, hatted=True)
    if k == 0 or l == 0:
        return RegimeMCovariance(0.0, 0.0, 0.0)

    parts = {}
    for name in ("env", "gff"):

        def fn(z, w, which=name):
            zf, wf = z.ravel(), w.ravel()
            bz = bracket_values(f1, f2, gamma2, zf) ** k
            bw = bracket_values(f1, f2, gamma1, wf) ** l
            if which == "env":
                base = kern(zf, wf) / np.outer(zf, wf)
            else:
                base = 1.0 / (zf[:, None] - wf[None, :]) ** 2
            return bz[:, None] * bw[None, :] * base

        parts[name] = _double_contour(
            fn, r_z, r_w, log, f"annealed_cov_M[{name}](k={k}, l={l})"
        )
    gff = _real(parts["gff"], "annealed_cov_M gff part")
    env = _real(parts["env"], "annealed_cov_M env part")
    return RegimeMCovariance(total=gff + env, gff_part=gff, env_part=env)


def wick_moment(cov, ks) -> float:
    """Joint centered moment of a Gaussian vector from pairwise covariances.

    Zero for odd order; otherwise the sum over perfect pairings of products
    of cov(k_i, k_j).  Order is capped at 8 (105 pairings).
    """
    ks = list(ks)
    nu = len(ks)
    if nu > 8:
        raise ValueError("Wick order capped at 8")
    if nu % 2 == 1:
        return 0.0
    if nu == 0:
        return 1.0

    def pairings(idx):
        if not idx:
            yield []
            return
        a = idx[0]
        for t, b in enumerate(idx[1:], start=1):
            rest = idx[1:t] + idx[t + 1 :]
            for p in pairings(rest):
                yield [(a, b)] + p

    return float(
        sum(
            math.prod(cov(ks[i], ks[j]) for i, j in p)
            for p in pairings(list(range(nu)))
        )
    )


# ---------------------------------------------------------------------------
# closed forms for the example environments
# ---------------------------------------------------------------------------

def _dist_view(dist):
    """Quadrature view (y points, beta points, weights) of a pair law."""
    from .environment import DiscretePair, UniformPair

    if isinstance(dist, DiscretePair):
        arr = np.asarray(dist.atoms, dtype=float)
        return arr[:, 0], arr[:, 1], np.asarray(dist.probs, dtype=float)
    if isinstance(dist, UniformPair):
        t, wts = np.polynomial.legendre.leggauss(dist._gl_nodes)
        ys = 0.5 * (dist.y_hi - dist.y_lo) * t + 0.5 * (dist.y_hi + dist.y_lo)
        bs = 0.5 * (dist.b_hi - dist.b_lo) * t + 0.5 * (dist.b_hi + dist.b_lo)
        yy, bb = np.meshgrid(ys, bs, indexing="ij")
        ww = np.outer(wts, wts) / 4.0
        return yy.ravel(), bb.ravel(), ww.ravel()
    raise TypeError(f"no quadrature view for {type(dist).__name__}")


def iid_limit_moment_closed_form(dist, gamma: float, k: int, radius: float = None, log=None) -> float:
    """Limit of E[p_k] / N^(k+1) for i.i.d. pairs, in expectation form.

    The bracket is built from exact expectations over the pair law instead of
    truncated moment series, giving an independent path to limit_moment.
    """
    ypts, bpts, wts = _dist_view(dist)
    if radius is None:
        lo = max(1.05 * float(np.abs(ypts).max()), 0.02)
        hi = 0.95 * min(1.0, 1.0 / float(bpts.max()))
        radius = math.sqrt(lo * hi)

    def fn(z):
        ebeta = ((1.0 - z)[:, None] * bpts / (1.0 - np.outer(z, bpts))) @ wts
        ey = ((z - 1.0)[:, None] / np.subtract.outer(z, ypts)) @ wts
        b = (1.0 / gamma - 1.0) * ebeta + ey
        return b ** (k + 1) / ((k + 1) * (z - 1.0))

    val = _single_contour(fn, radius, log, f"iid_limit_moment_closed_form(k={k})")
    return _real(val, "iid_limit_moment_closed_form")


def iid_cov_closed_form(dist, gamma1, gamma2, k, l, radii=None, log=None) -> float:
    """First-regime covariance limit for i.i.d. (y, beta) pairs.

    Direct evaluation: the environment kernel is assembled from the three
    covariance functions of beta z/(1 - beta z) and y/(z - y) under the pair
    law, with weights (1 - gamma2), gamma1, and (gamma1 - gamma2) on the
    cross term.  The cross term vanishes for independent components.
    """
    if gamma1 > gamma2:
        raise ValueError("need gamma1 <= gamma2")
    ypts, bpts, wts = _dist_view(dist)
    if radii is None:
        r_lo = 1.05 * float(np.abs(ypts).max())
        r_hi = 0.95 * min(1.0, 1.0 / float(bpts.max()))
        r_lo = max(r_lo, 0.02 * r_hi)
        if r_lo >= r_hi:
            raise ValueError("distribution support leaves no admissible radius")
        mid = math.sqrt(r_lo * r_hi)
        r_z, r_w = min(1.05 * mid, 0.97 * r_hi), mid
    else:
        r_z, r_w = radii

    def ebeta(z):  # E[beta (1 - z) / (1 - beta z)]
        return ((1.0 - z)[..., None] * bpts / (1.0 - np.multiply.outer(z, bpts))) @ wts

    def ey(z):  # E[(z - 1) / (z - y)]
        return ((z - 1.0)[..., None] / (np.subtract.outer(z, ypts))) @ wts

    def fn(z, w):
        zf, wf = z.ravel(), w.ravel()
        bz = ((1.0 - gamma2) * ebeta(zf) + gamma2 * ey(zf)) ** k
        bw = ((1.0 - gamma1) * ebeta(wf) + gamma1 * ey(wf)) ** l
        fbz = bpts[None, :] * zf[:, None] / (1.0 - np.outer(zf, bpts))  # atom values
        fbw = bpts[None, :] * wf[:, None] / (1.0 - np.outer(wf, bpts))
        fyz = ypts[None, :] / (zf[:, None] - ypts[None, :])
        fyw = ypts[None, :] / (wf[:, None] - ypts[None, :])
        covbb = (fbz * wts) @ fbw.T - np.outer(fbz @ wts, fbw @ wts)
        covyy = (fyz * wts) @ fyw.T - np.outer(fyz @ wts, fyw @ wts)
        covyb = (fyz * wts) @ fbw.T - np.outer(fyz @ wts, fbw @ wts)
        kern = (1.0 - gamma2) * covbb + gamma1 * covyy + (gamma1 - gamma2) * covyb
        return bz[:, None] * bw[None, :] * kern / np.outer(zf, wf)

    val = _double_contour(fn, r_z, r_w, log, f"iid_cov_closed_form(k={k}, l={l})")
    return _real(val, "iid_cov_closed_form")


def markov_cov_closed_form(states, P, gamma1, gamma2, k, l, tail_tol=1e-13,
                           order=40, radii=None, log=None) -> float:
    """First-regime covariance limit for a finite stationary chain.

    The three kernel functions are power series whose coefficients are
    two-sided lag sums of state-function covariances, summed to tail_tol via
    the spectral gap.  Identical transition rows reduce this to the i.i.d.
    closed form.
    """
    if gamma1 > gamma2:
        raise ValueError("need gamma1 <= gamma2")
    arr = np.asarray(states, dtype=float)
    pi = stationary_distribution(np.asarray(P, dtype=float))
    Sbb, Syy, Sby, _ = markov_lag_sums(states, P, order, tail_tol)
    my = np.array([1.0] + [float(pi @ arr[:, 0] ** j) for j in range(1, order + 1)])
    mb = np.array([1.0] + [float(pi @ arr[:, 1] ** j) for j in range(1, order + 1)])
    f1 = SeriesData(role="F1", gammas=(), coeffs=my)
    f2 = SeriesData(role="F2", gammas=(), coeffs=mb)
    if radii is None:
        lo, hi = series_band(f1, f2, [
            SeriesData(role="G1", gammas=(gamma1,), coeffs=Sbb),
            SeriesData(role="G2", gammas=(gamma1,), coeffs=Syy),
        ])
        mid = math.sqrt(lo * hi)
        r_z, r_w = min(1.05 * mid, 0.97 * hi), mid
    else:
        r_z, r_w = radii

    def fn(z, w):
        zf, wf = z.ravel(), w.ravel()
        bz = bracket_values(f1, f2, gamma2, zf) ** k
        bw = bracket_values(f1, f2, gamma1, wf) ** l
        phi = _g_eval(Sbb, zf, wf, +1, +1)  # symmetric lag sums; orientation-free
        psi = _g_eval(Syy, zf, wf, -1, -1)
        xi = _g_eval(Sby, zf, wf, -1, +1)  # beta powers on w, y powers on 1/z
        kern = (1.0 - gamma2) * phi + gamma1 * psi + (gamma1 - gamma2) * xi
        return bz[:, None] * bw[None, :] * kern / np.outer(zf, wf)

    val = _double_contour(fn, r_z, r_w, log, f"markov_cov_closed_form(k={k}, l={l})")
    return _real(val, "markov_cov_closed_form")


# ---------------------------------------------------------------------------
# GUE example
# ---------------------------------------------------------------------------

def _semicircle_cdf(x: float) -> float:
    x = min(max(x, -2.0), 2.0)
    return (x * math.sqrt(4.0 - x * x) / 2.0 + 2.0 * math.asin(x / 2.0) + math.pi) / (2.0 * math.pi)


def gue_epsilon(gamma: float) -> float:
    """Quantile of the semicircle law with mass 1 - gamma below it."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    if gamma == 1.0:
        return -2.0
    target = 1.0 - gamma
    return float(brentq(lambda e: _semicircle_cdf(e) - target, -2.0, 2.0, xtol=1e-14))


def _check_gue_domain(z):
    z = np.asarray(z, dtype=complex)
    for s in (1.0, 2.0, 1.2):
        if np.min(np.abs(z - s)) < 1e-6:
            raise ValueError(f"z within 1e-6 of the singular point {s}")
    return z


def gue_F(z, gamma: float):
    """Limiting mean of the tail resolvent sum for the GUE environment.

    Closed form with principal branches for the square root and arctangent;
    branch continuity along contours is checked numerically in tests rather
    than tracked symbolically.
    """
    z = _check_gue_domain(z)
    eps = gue_epsilon(gamma)
    s = np.sqrt((2.0 - z) * (6.0 - 5.0 * z))
    t1 = (3.0 - 2.0 * z) / (2.0 * np.pi * (z - 1.0) ** 2) * (math.asin(eps / 2.0) + np.pi / 2.0)
    t2 = -eps * math.sqrt(max(4.0 - eps * eps, 0.0)) / (4.0 * np.pi * (z - 1.0))
    arg = np.sqrt((6.0 - 5.0 * z) / (2.0 - z)) * eps / math.sqrt(max(4.0 - eps * eps, 1e-300))
    t3 = (5.0 * z - 6.0) / (2.0 * np.pi * (z - 1.0) ** 2 * s) * (np.arctan(arg) + np.pi / 2.0)
    return t1 + t2 + t3


def gue_F_quadrature(z, gamma: float, nodes: int = 512):
    """Quadrature twin of gue_F: semicircle integral of the resolvent kernel."""
    z = np.asarray(z, dtype=complex)
    eps = gue_epsilon(gamma)
    t, wts = np.polynomial.legendre.leggauss(nodes)
    a, b = -math.pi / 2.0, math.asin(eps / 2.0)
    theta = 0.5 * (b - a) * t + 0.5 * (b + a)
    x = 2.0 * np.sin(theta)
    jac = (2.0 * np.cos(theta)) ** 2 / (2.0 * math.pi)
    phi = (x[None, :] ** 2 + 1.0) / (2.0 - z[..., None] - (z[..., None] - 1.0) * x[None, :] ** 2)
    return 0.5 * (b - a) * (phi * jac) @ wts


def _phi_dq(z, x, y):
    """Difference quotient of phi(z, x) = (x^2+1)/(2 - z - (z-1) x^2) in x.

    The numerator of phi(z,x) - phi(z,y) telescopes to exactly x^2 - y^2, so
    the quotient is (x + y) / (D(x) D(y)) with D(x) = 2 - z - (z-1) x^2; the
    closed form is exact on the diagonal as well.
    """
    dx = 2.0 - z - (z - 1.0) * x**2
    dy = 2.0 - z - (z - 1.0) * y**2
    return (x + y) / (dx * dy)


def gue_G(z, w, gamma: float, nodes: int = 200, check: bool = False):
    """Limiting covariance kernel of the GUE tail resolvent sums.

    Regularized double semicircle integral with the (4 - x y)/(x - y)^2
    kernel plus the boundary single integral at the spectral cutoff; both are
    evaluated with Gauss-Legendre in the x = 2 sin(theta) variable.  With
    check=True the value is recomputed at half the node count and a
    non-converged quadrature raises.
    """
    if check:
        a = gue_G(z, w, gamma, nodes, check=False)
        b = gue_G(z, w, gamma, max(16, nodes // 2), check=False)
        scale = max(1.0, float(np.max(np.abs(a))))
        if float(np.max(np.abs(a - b))) > 1e-8 * scale:
            raise ArithmeticError("gue_G quadrature did not converge; raise nodes")
        return a
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    eps = gue_epsilon(gamma)
    if eps <= -2.0 + 1e-15:
        return np.zeros(np.broadcast(z, w).shape, dtype=complex)
    t, wts = np.polynomial.legendre.leggauss(nodes)
    a, b = -math.pi / 2.0, math.asin(eps / 2.0)
    theta = 0.5 * (b - a) * t + 0.5 * (b + a)
    x = 2.0 * np.sin(theta)
    half = 0.5 * (b - a)

    # double integral: dq_z(x,y) dq_w(x,y) (4 - x y), measure dtheta dtheta
    # (the 1/sqrt(4-x^2) weights cancel exactly against the substitution)
    X, Y = x[:, None], x[None, :]
    K = 4.0 - X * Y
    dqz = _phi_dq(z[..., None, None], X, Y)
    dqw = _phi_dq(w[..., None, None], X, Y)
    ww = np.outer(wts, wts)
    dbl = (half**2 / (4.0 * math.pi**2)) * np.sum(dqz * dqw * K * ww, axis=(-2, -1))

    bnd_pref = -math.sqrt(max(4.0 - eps * eps, 0.0)) / (2.0 * math.pi**2)
    dqze = _phi_dq(z[..., None], x, eps)
    dqwe = _phi_dq(w[..., None], x, eps)
    bnd = bnd_pref * half * ((dqze * dqwe * (x - eps)) @ wts)
    return dbl + bnd


def gue_resolvent_cov(z1, z2):
    """Limiting covariance of GUE resolvent traces at two complex points.

    Square roots are taken with the branch cut on [-2, 2] (product of the
    principal roots of z - 2 and z + 2).
    """
    s1 = np.sqrt(z1 - 2.0 + 0j) * np.sqrt(z1 + 2.0 + 0j)
    s2 = np.sqrt(z2 - 2.0 + 0j) * np.sqrt(z2 + 2.0 + 0j)
    return (z1 * z2 - 4.0) / (2.0 * (z1 - z2) ** 2 * s1 * s2) - 1.0 / (2.0 * (z1 - z2) ** 2)


def gue_full_cov(k1, k2, gamma, radii=None, log=None) -> float:
    """Second-regime covariance limit for the full-spectrum GUE tail weights.

    Closed-form level bracket built from the explicit sqrt((2-z)(6-5z))
    combination; the covariance kernel (environment plus free field) is
    (12 - 8z - 8w + 5zw) over sqrt((2-z)(2-w)(6-5z)(6-5w)) (z-w)^2, where the
    environment part alone carries an extra -1/(z-w)^2.  Returned in the
    per-level N^-(k1+k2) normalization of the one-level second-regime
    covariance limit.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    if k1 == 0 or k2 == 0:
        return 0.0
    if radii is None:
        r_w, r_z = 0.3, 0.6
    else:
        r_z, r_w = radii
    if max(r_z, r_w) >= 1.2 - 1e-9:
        raise ValueError("contour radius reaches the branch point 6/5")

    ratio = 1.0 / gamma - 1.0

    def bracket(v):
        # per-factor principal roots stay continuous for |v| < 6/5
        s = np.sqrt(2.0 - v) * np.sqrt(6.0 - 5.0 * v)
        f_full = (5.0 * v - 6.0 + (3.0 - 2.0 * v) * s) / (2.0 * (v - 1.0) ** 2 * s)
        return ratio * (1.0 - v) * f_full + (v - 1.0) / v

    def fn(z, w):
        zf, wf = z.ravel(), w.ravel()
        bz = bracket(zf) ** k1
        bw = bracket(wf) ** k2
        rz = np.sqrt(2.0 - zf) * np.sqrt(6.0 - 5.0 * zf)
        rw = np.sqrt(2.0 - wf) * np.sqrt(6.0 - 5.0 * wf)
        num = 12.0 - 8.0 * zf[:, None] - 8.0 * wf[None, :] + 5.0 * np.outer(zf, wf)
        kern = num / np.outer(rz, rw) / (zf[:, None] - wf[None, :]) ** 2
        return bz[:, None] * bw[None, :] * kern

    val = _double_contour(fn, r_z, r_w, log, f"gue_full_cov(k1={k1}, k2={k2})")
    return _real(val, "gue_full_cov")
