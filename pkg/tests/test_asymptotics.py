import math

import numpy as np
import pytest

from aztecenv.environment import (
    DiscretePair,
    SeriesData,
    iid_series,
    point_mass,
    semicircle_moment,
    two_point_beta,
)
from aztecenv.asymptotics import (
    annealed_cov_M,
    annealed_cov_sqrt,
    cov_sqrt_one_level,
    gue_F,
    gue_F_quadrature,
    gue_G,
    gue_epsilon,
    gue_full_cov,
    gue_resolvent_cov,
    iid_cov_closed_form,
    limit_moment,
    markov_cov_closed_form,
    quenched_cov,
    series_band,
    wick_moment,
)

DIST = two_point_beta(0.3, 0.7)
DISTY = DiscretePair(atoms=((0.2, 0.3), (-0.1, 0.6)), probs=(0.4, 0.6))  # dependent y, beta
STATES = ((0.1, 0.3), (-0.2, 0.7))


def _series(dist, gammas, order=24):
    return iid_series(dist, ["F1", "F2", "G1", "G2", "G3", "G3r"], gammas, order)


def _const_series(beta, y=0.0, order=24):
    f1 = SeriesData(role="F1", gammas=(), coeffs=np.array([1.0] + [y**j for j in range(1, order + 1)]))
    f2 = SeriesData(role="F2", gammas=(), coeffs=np.array([beta**j for j in range(order + 1)]))
    return f1, f2


# --- limit shape ---

def test_limit_moment_k0_is_one():
    for dist in (DIST, DISTY):
        S = _series(dist, 0.5)
        for gamma in (0.25, 0.5, 0.8):
            assert limit_moment(S["F1"], S["F2"], gamma, 0) == pytest.approx(1.0, abs=1e-8)


def test_limit_moment_constant_env_first_moment():
    # beta = b, y = 0: the first limiting moment is 1/2 + (1/gamma - 1) b
    f1, f2 = _const_series(0.5)
    for gamma, b in [(0.5, 0.5), (0.25, 0.5)]:
        f1b, f2b = _const_series(b)
        assert limit_moment(f1b, f2b, gamma, 1) == pytest.approx(0.5 + (1 / gamma - 1) * b, rel=1e-10)


def test_limit_moment_double_path_vs_expectation_form():
    """Generic truncated-series route equals the i.i.d. expectation form."""
    from aztecenv.asymptotics import iid_limit_moment_closed_form

    for d in (point_mass(0.15, 0.45), DIST, DISTY):
        S = _series(d, 0.5, order=40)
        for k in (1, 2, 3):
            a = limit_moment(S["F1"], S["F2"], 0.5, k)
            b = iid_limit_moment_closed_form(d, 0.5, k)
            assert a == pytest.approx(b, abs=1e-9)


def test_limit_moment_matches_finite_size():
    from aztecenv.core import WeightEnvironment
    from aztecenv.moments import expectation_pk

    f1, f2 = _const_series(0.5)
    env = WeightEnvironment.constant(400, 0.5, 0.0)
    for k in (1, 2, 3):
        mk = limit_moment(f1, f2, 0.5, k)
        fin = expectation_pk(env, 200, k) / 200 ** (k + 1)
        assert abs(fin - mk) <= 0.02 * abs(mk)


def test_series_band_empty_raises():
    f1 = SeriesData(role="F1", gammas=(), coeffs=np.array([1.0] + [0.97**j for j in range(1, 40)]))
    f2 = SeriesData(role="F2", gammas=(), coeffs=np.array([0.99**j for j in range(40)]))
    with pytest.raises(ValueError):
        series_band(f1, f2)


# --- first regime ---

def test_annealed_sqrt_deterministic_is_zero():
    f1, f2 = _const_series(0.5)
    assert annealed_cov_sqrt(f1, f2, None, 0.5, 0.5, 1, 1) == pytest.approx(0.0, abs=1e-12)


def test_annealed_sqrt_matches_one_level_path():
    S = _series(DISTY, 0.5)
    for k1, k2 in [(1, 1), (1, 2), (2, 2)]:
        two = annealed_cov_sqrt(S["F1"], S["F2"], {r: S[r] for r in ("G1", "G2", "G3", "G3r")},
                                0.5, 0.5, k1, k2)
        one = cov_sqrt_one_level(S["F1"], S["F2"], S["G1"], S["G2"], S["G3"], 0.5, k1, k2)
        assert two == pytest.approx(one * 0.5 ** (k1 + k2 + 1), rel=1e-9)


def test_annealed_sqrt_matches_iid_closed_form():
    S = _series(DIST, 0.5)
    v = annealed_cov_sqrt(S["F1"], S["F2"], {r: S[r] for r in ("G1", "G2", "G3", "G3r")},
                          0.5, 0.5, 1, 1)
    assert v == pytest.approx(iid_cov_closed_form(DIST, 0.5, 0.5, 1, 1), abs=1e-8)
    # two-point beta with constant y has the explicit value g^2 (1-g) Var(beta)
    assert v == pytest.approx(0.25 * 0.5 * 0.04, rel=1e-9)


def test_annealed_sqrt_radius_insensitivity():
    S = _series(DIST, (0.5, 0.5))
    vals = [
        annealed_cov_sqrt(S["F1"], S["F2"], {r: S[r] for r in ("G1", "G2", "G3", "G3r")},
                          0.5, 0.5, 1, 1, radii=r)
        for r in [(0.5, 0.5), (0.62, 0.4), (0.7, 0.7)]
    ]
    assert max(vals) - min(vals) < 1e-12


def test_iid_closed_form_cross_term_vanishes_when_independent():
    # independent components: gamma1 != gamma2 must equal the same integral
    # with the cross covariance dropped, here via a product-form distribution
    d = DiscretePair(atoms=((0.1, 0.3), (0.1, 0.7), (-0.1, 0.3), (-0.1, 0.7)),
                     probs=(0.25, 0.25, 0.25, 0.25))
    S = iid_series(d, ["G3"], (0.3, 0.6), order=8)
    assert np.abs(S["G3"].coeffs).max() < 1e-14


def test_iid_closed_form_point_mass_zero():
    assert iid_cov_closed_form(point_mass(0.1, 0.4), 0.5, 0.5, 1, 1) == pytest.approx(0.0, abs=1e-12)


def test_markov_identical_rows_reduces_to_iid():
    P = [[0.5, 0.5], [0.5, 0.5]]
    d = DiscretePair(atoms=STATES, probs=(0.5, 0.5))
    for k, l in [(1, 1), (2, 1)]:
        vm = markov_cov_closed_form(STATES, P, 0.5, 0.5, k, l)
        vi = iid_cov_closed_form(d, 0.5, 0.5, k, l)
        assert abs(vm - vi) <= 1e-9 * max(1.0, abs(vi))


def test_markov_point_mass_states_zero():
    P = [[0.5, 0.5], [0.5, 0.5]]
    states = ((0.1, 0.4), (0.1, 0.4))
    assert markov_cov_closed_form(states, P, 0.5, 0.5, 1, 1) == pytest.approx(0.0, abs=1e-12)


def test_markov_ergodicity_error():
    with pytest.raises(ValueError):
        markov_cov_closed_form(STATES, np.eye(2), 0.5, 0.5, 1, 1)


# --- second regime and quenched ---

def test_quenched_cov_zero_orders():
    f1, f2 = _const_series(0.5)
    assert quenched_cov(f1, f2, 0.5, 0.5, 0, 1) == 0.0
    assert quenched_cov(f1, f2, 0.5, 0.5, 1, 0) == 0.0


def test_quenched_cov_two_level_swap_symmetry():
    """Exchanging (k, gamma2) with (l, gamma1) relabels the two contour
    variables; the value must be invariant."""
    S = _series(DISTY, 0.5)

    def val(g1, g2, k, l, radii):
        return quenched_cov(S["F1"], S["F2"], g1, g2, k, l, radii=radii)

    # same-level swap of the exponents
    a = val(0.5, 0.5, 1, 2, (0.6, 0.3))
    b = val(0.5, 0.5, 2, 1, (0.6, 0.3))
    assert a == pytest.approx(b, rel=1e-9)


def test_quenched_requires_nested_radii():
    f1, f2 = _const_series(0.5)
    with pytest.raises(ValueError):
        quenched_cov(f1, f2, 0.5, 0.5, 1, 1, radii=(0.5, 0.45))


def test_regime_m_zero_environment_equals_quenched():
    for dist in (DIST, DISTY):
        S = _series(dist, 0.5)
        for k, l in [(1, 1), (1, 2), (2, 2)]:
            q = quenched_cov(S["F1"], S["F2"], 0.5, 0.5, k, l)
            a = annealed_cov_M(S["F1"], S["F2"], None, 0.5, 0.5, k, l)
            assert abs(a.total - q) <= 1e-10 * max(1.0, abs(q))
            assert a.env_part == pytest.approx(0.0, abs=1e-14)


def test_regime_m_zero_orders():
    f1, f2 = _const_series(0.5)
    r = annealed_cov_M(f1, f2, None, 0.5, 0.5, 0, 2)
    assert r.total == 0.0


def test_two_level_cross_term_against_environment_monte_carlo():
    """End-to-end check of the level-pair covariance including the cross
    term: quenched means over random environments with dependent (y, beta)
    pairs, compared with the two-level first-regime formula."""
    from aztecenv.environment import EnvironmentModel
    from aztecenv.moments import expectation_pk

    g1, g2 = 0.3, 0.6
    S = iid_series(DISTY, ["F1", "F2", "G1", "G2", "G3", "G3r"], (g1, g2), order=30)
    pred = annealed_cov_sqrt(S["F1"], S["F2"], {r: S[r] for r in ("G1", "G2", "G3", "G3r")},
                             g1, g2, 1, 1)
    model = EnvironmentModel(variant="iid", dist=DISTY)
    M, n_envs = 300, 3000
    N1, N2 = int(g1 * M), int(g2 * M)
    m1 = np.empty(n_envs)
    m2 = np.empty(n_envs)
    for e, s in enumerate(np.random.SeedSequence(99).spawn(n_envs)):
        env = model.sample(M, s)
        m1[e] = expectation_pk(env, N1, 1)
        m2[e] = expectation_pk(env, N2, 1)
    cov = float(np.cov(m1, m2)[0, 1]) / M**3
    se = float(np.std((m1 - m1.mean()) * (m2 - m2.mean()), ddof=1)) / math.sqrt(n_envs) / M**3
    assert abs(cov - pred) <= max(3 * se, 0.05 * abs(pred))


def test_eval_log_records_are_json_serializable():
    import json

    S = _series(DIST, 0.5, order=16)
    log = []
    limit_moment(S["F1"], S["F2"], 0.5, 1, log=log)
    quenched_cov(S["F1"], S["F2"], 0.5, 0.5, 1, 1, log=log)
    payload = json.dumps(log)
    assert "limit_moment" in payload and "quenched_cov" in payload
    for rec in log:
        assert {"formula", "nodes", "value", "residual"} <= set(rec)


def test_gue_G_convergence_check_flag():
    v = gue_G(np.array(0.1 + 0j), np.array(0.2j), 0.5, nodes=240, check=True)
    assert np.isfinite(v.real)


def test_wick_moments():
    assert wick_moment(lambda a, b: 1.0, [1, 2, 3]) == 0.0
    assert wick_moment(lambda a, b: a * b, [2, 5]) == 10.0
    c = 0.7
    assert wick_moment(lambda a, b: c, [1, 1, 1, 1]) == pytest.approx(3 * c**2)
    cov = {(1, 1): 2.0, (1, 2): 0.5, (2, 1): 0.5, (2, 2): 1.5}
    direct = cov[(1, 1)] * cov[(2, 2)] + 2 * cov[(1, 2)] ** 2
    assert wick_moment(lambda a, b: cov[(a, b)], [1, 1, 2, 2]) == pytest.approx(direct)
    with pytest.raises(ValueError):
        wick_moment(lambda a, b: 1.0, list(range(10)))


# --- GUE ---

def test_gue_epsilon_values():
    assert gue_epsilon(0.5) == pytest.approx(0.0, abs=1e-12)
    assert gue_epsilon(1.0) == -2.0
    assert gue_epsilon(1e-12) == pytest.approx(2.0, abs=1e-3)
    eps = [gue_epsilon(g) for g in np.linspace(0.05, 0.95, 10)]
    assert all(a > b for a, b in zip(eps, eps[1:]))


def test_gue_F_against_quadrature():
    rng = np.random.default_rng(0)
    for gamma in (0.3, 0.5):
        z = 0.45 * np.exp(2j * np.pi * rng.random(20))
        resid = np.abs(gue_F(z, gamma) - gue_F_quadrature(z, gamma))
        assert resid.max() < 1e-8


def test_gue_F_limits_and_domain():
    assert abs(gue_F(np.array(0.3 + 0.1j), 1.0)) < 1e-12
    with pytest.raises(ValueError):
        gue_F(np.array(1.0 + 1e-9j), 0.5)


def test_gue_F_branch_continuity_on_contour():
    z = 0.6 * np.exp(1j * np.linspace(0, 2 * np.pi, 800))
    v = gue_F(z, 0.3)
    scale = np.abs(v).max()
    assert np.abs(np.diff(v)).max() < 1e-1 * scale  # no branch jumps


def test_gue_G_symmetry_and_trivial_cases():
    a = gue_G(np.array(0.1 + 0j), np.array(0.2j), 0.5)
    b = gue_G(np.array(0.2j), np.array(0.1 + 0j), 0.5)
    assert a == pytest.approx(b, abs=1e-9)
    assert gue_G(np.array(0.1 + 0j), np.array(0.2j), 1.0) == 0.0


def test_gue_G_full_spectrum_matches_resolvent_formula():
    """At full mass the boundary term vanishes and the double integral must
    reproduce the classical resolvent covariance combination."""
    def via_resolvent(z, w):
        sz = (2 - z) / (1 - z)
        sw = (2 - w) / (1 - w)
        az, aw = 1j * np.sqrt(sz), 1j * np.sqrt(sw)
        pref = 1 / ((1 - z) ** 2 * (1 - w) ** 2) / (2 * az) / (2 * aw)
        C = gue_resolvent_cov
        return pref * (C(-az, -aw) - C(-az, aw) - C(az, -aw) + C(az, aw))

    for z, w in [(0.1 + 0j, 0.3j), (0.2 + 0.1j, -0.25 + 0.05j)]:
        quad = gue_G(np.array(z), np.array(w), 1e-12, nodes=400)
        assert quad == pytest.approx(via_resolvent(z, w), abs=1e-10)


def test_gue_G_sanity_var_of_quadratic_statistic():
    """The same kernel integrates (x^2 stand-in) phi at z = w = 0 into the
    known variance scale: cross-checked through Monte Carlo elsewhere; here
    just shape/finite."""
    v = gue_G(np.array(0.0j), np.array(0.05 + 0j), 0.4)
    assert np.isfinite(v.real) and np.isfinite(v.imag)


def test_gue_full_cov_symmetry_and_zero_order():
    assert gue_full_cov(0, 2, 0.5) == 0.0
    a = gue_full_cov(1, 2, 0.5)
    b = gue_full_cov(2, 1, 0.5)
    assert a == pytest.approx(b, rel=1e-9)


def test_gue_full_cov_matches_generic_pipeline_closed_inputs():
    """Hardest internal identity: the printed-style closed form equals the
    generic second-regime formula fed with quadrature tail moments and the
    resolvent-covariance kernel."""
    gamma = 0.5
    order = 40
    g = [1.0] + [
        semicircle_moment(lambda x, j=j: ((x * x + 1) / (x * x + 2)) ** j, 2.0, 400)
        for j in range(1, order + 1)
    ]
    f2 = SeriesData(role="F2", gammas=(), coeffs=np.array(g))
    f1 = SeriesData(role="F1", gammas=(), coeffs=np.array([1.0] + [0.0] * order))

    def kern(z, w):
        zf, wf = np.asarray(z).ravel(), np.asarray(w).ravel()
        Z, W = zf[:, None], wf[None, :]
        sz = (2 - Z) / (1 - Z)
        sw = (2 - W) / (1 - W)
        az, aw = 1j * np.sqrt(sz), 1j * np.sqrt(sw)
        pref = 1 / ((1 - Z) ** 2 * (1 - W) ** 2) / (2 * az) / (2 * aw)
        C = gue_resolvent_cov
        return Z * W * pref * (C(-az, -aw) - C(-az, aw) - C(az, -aw) + C(az, aw))

    for k in (1, 2):
        generic = annealed_cov_M(f1, f2, kern, gamma, gamma, k, k).total
        closed = gue_full_cov(k, k, gamma) * gamma ** (2 * k)
        assert generic == pytest.approx(closed, rel=1e-7)
