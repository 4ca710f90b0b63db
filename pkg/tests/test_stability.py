import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from tamesde.core import LyapunovSpec, Model, quadratic_lyapunov
from tamesde.errors import ArgumentError, ParameterError, PreconditionError
from tamesde.models import make_model
from tamesde.schemes import DiscretePath, make_scheme
from tamesde.stability import (alpha_euler, alpha_increment_tamed, audit_semi_v_stability,
                               lyapunov_bounds, q_max_increment_tamed, rare_event_indicators,
                               supremum_bound, track_rare_events, vola_exponents, write_ledger_csv)

IDENTITY_V = LyapunovSpec(lambda x: x[..., 0])
exps = st.floats(0.0, 5.0)


def synthetic(values, T=1.0):
    v = np.asarray(values, dtype=float)
    return DiscretePath(T, v[..., None])


def test_no_exits():
    v = np.random.default_rng(0).uniform(1, 4, size=(50, 9))
    led = track_rare_events(IDENTITY_V, synthetic(v), alpha=1.0)  # threshold 8
    assert led.indicators.all()
    assert led.p_exit == 0.0
    np.testing.assert_allclose(led.ev_final, v.mean(axis=0))


def test_single_exit_is_absorbing():
    v = np.ones((1, 9))
    v[0, 3] = 100.0
    led = track_rare_events(IDENTITY_V, synthetic(v), alpha=1.0)
    np.testing.assert_array_equal(led.indicators[0], [1, 1, 1, 1, 0, 0, 0, 0, 0])
    assert led.monotone()


def test_uniform_values_exit_probability():
    N, M = 4, 10 ** 4
    thr = float(N)  # (N/T)^alpha with T = 1, alpha = 1
    v = np.random.default_rng(1).uniform(0, 2 * thr, size=(M, N + 1))
    led = track_rare_events(IDENTITY_V, synthetic(v), alpha=1.0)
    p = 1 - 2.0 ** -N
    assert abs(led.p_exit - p) <= 3 * math.sqrt(p * (1 - p) / M)


def test_nan_counts_as_exit():
    ind = rare_event_indicators([[1.0, np.nan, 1.0]], 2.0)
    np.testing.assert_array_equal(ind[0], [True, True, False])


def test_track_requires_positive_alpha_and_matching_grid():
    path = synthetic(np.ones((2, 5)))
    with pytest.raises(ArgumentError):
        track_rare_events(IDENTITY_V, path, alpha=0.0)
    with pytest.raises(ArgumentError):
        track_rare_events(IDENTITY_V, path, alpha=1.0, N=8)


def test_bounds_examples():
    assert lyapunov_bounds(0.0, 1.0, 17, 1.5, 1.0).ev_bound == 1.0
    assert lyapunov_bounds(0.0, 1.0, 4, 2.0, 1.0).rare_bound == pytest.approx(0.25)
    b = lyapunov_bounds(0.3, 2.0, 64, 0.5, 1.5, pbar=1.0)
    assert b.bootstrap_bound == pytest.approx(math.exp(0.6) * 2.5 * 2)


def test_supremum_bound():
    assert supremum_bound(0.7, 3.0, [0.0, 0.0], 2.0, 0.0) == pytest.approx(2 * math.sqrt(2))
    assert supremum_bound(0.0, 1.0, [1.0, 1.0], 1.0, 0.0) == pytest.approx(math.sqrt(2) * math.e ** 2)


@settings(max_examples=60)
@given(st.lists(st.floats(0.0, 3.0), min_size=1, max_size=5), st.integers(0, 4), st.floats(0.01, 1.0))
def test_supremum_bound_monotone_in_nu(nu, k, bump):
    k = k % len(nu)
    bigger = list(nu)
    bigger[k] += bump
    assert supremum_bound(0.5, 1.0, bigger, 1.0, 0.1) > supremum_bound(0.5, 1.0, nu, 1.0, 0.1)


def test_ledger_csv(tmp_path):
    led = track_rare_events(IDENTITY_V, synthetic(np.ones((3, 5))), alpha=1.0)
    path = tmp_path / "ledger.csv"
    write_ledger_csv(led, path, rho=0.0, EV0=1.0)
    lines = path.read_text().splitlines()
    assert lines[0] == "n,t_n,E_1OmegaV,P_exit,ev_bound,rare_bound"
    assert len(lines) == 6


def test_exponent_values():
    assert alpha_euler(4, 1, 0) == 2
    assert alpha_euler(6, 0, 2) == 1
    assert alpha_increment_tamed(3, 0, 0) == 3
    assert alpha_increment_tamed(4, 1, 0) == 2
    assert q_max_increment_tamed(3, 1, 0, 0) == 1
    assert vola_exponents(1, 0.5) == (math.inf, math.inf)
    assert vola_exponents(2, 1.2) == (math.inf, math.inf)
    assert vola_exponents(2, 1.5, 4, 1) == (9, 1)


@settings(max_examples=100)
@given(st.floats(3.0, 20.0), st.floats(0.1, 5.0))
def test_alpha_euler_symmetric(p, g):
    assert alpha_euler(p, g, g) == pytest.approx(p / (3 * g))


@settings(max_examples=200)
@given(st.floats(3.0, 20.0), exps, exps)
def test_tamed_alpha_never_exceeds_euler(p, g0, g1):
    assume(g0 + g1 > 0)
    assert alpha_increment_tamed(p, g0, g1) <= alpha_euler(p, g0, g1)


@settings(max_examples=100)
@given(st.floats(3.0, 20.0), st.floats(1.0, 4.0), exps, exps)
def test_q_max_linear_in_lyapunov_power(p, q, g0, g1):
    first = q_max_increment_tamed(p, q, g0, g1) + 0.5
    assert q_max_increment_tamed(p, 2 * q, g0, g1) + 0.5 == pytest.approx(2 * first)


def test_exponent_preconditions():
    with pytest.raises(PreconditionError):
        alpha_euler(2.5, 1, 0)
    with pytest.raises(PreconditionError):
        alpha_euler(4, 0, 0)
    with pytest.raises(PreconditionError):
        q_max_increment_tamed(2, 1, 0, 0)


def test_vola_violations():
    with pytest.raises(ParameterError, match=r"a\+1 >= 2b"):
        vola_exponents(1, 1.2)
    with pytest.raises(ParameterError, match="b >= 1/2"):
        vola_exponents(1, 0.25)


def test_audit_identity_map_never_flagged():
    m = Model.scalar(lambda x: 0.0, lambda x: 0.0)
    rep = audit_semi_v_stability(make_scheme("euler_maruyama", m), quadratic_lyapunov(1), 0.5, 1.0,
                                 [0.1, 0.01], np.array([[0.0], [1.0]]), M=10)
    assert rep.passed
    for row in rep.rows:
        assert row.ratio == pytest.approx(math.exp(-row.t))


def test_audit_brownian_second_moment():
    m = Model.scalar(lambda x: 0.0, lambda x: 1.0)
    rep = audit_semi_v_stability(make_scheme("euler_maruyama", m), quadratic_lyapunov(1), 0.5, 1.0,
                                 [0.25, 0.0625], np.array([[0.0], [1.0], [2.0]]), M=20000, seed=3)
    assert rep.rows and rep.passed
    for row in rep.rows:
        v = 1 + row.x[0] ** 2
        assert row.ratio * math.exp(row.t) * v == pytest.approx(v + row.t, rel=0.05)


def test_audit_skips_points_outside_slab():
    m = Model.scalar(lambda x: 0.0, lambda x: 1.0)
    rep = audit_semi_v_stability(make_scheme("euler_maruyama", m), quadratic_lyapunov(1), 0.5, 1.0,
                                 [0.25], np.array([[0.0], [10.0]]), M=100)
    assert len(rep.rows) == 1 and len(rep.skipped) == 1


def test_audit_em_tail_is_reported_not_asserted():
    entry = make_model("ginzburg_landau")
    t, alpha = 0.01, 0.5
    x = math.sqrt(t ** -alpha - 1.0) * 0.999
    rep = audit_semi_v_stability(make_scheme("euler_maruyama", entry.model), entry.lyapunov, alpha,
                                 entry.lyapunov.rho, [t], np.array([[x]]), M=2000, seed=1)
    assert len(rep.rows) == 1
    assert isinstance(rep.rows[0].flagged, bool)
