"""Randomized invariants; the whole module is meant to stay well under a minute."""

import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from behinv import lti
from behinv._linalg import null_space
from behinv.constrained import TrackingProblem, track
from behinv.hankel import build_data_bank, generate_pe_input, hankel, min_pe_length, pe_check
from behinv.inversion import InversionProblem, nullspace_equality_check, recover_input, run_algorithm2, solve_g
from conftest import acceptable, random_system

SETTINGS = settings(
    max_examples=40,
    deadline=None,
    derandomize=True,
    database=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)


@st.composite
def plants(draw, kinds=("strict", "feedthrough", "relative2")):
    seed = draw(st.integers(0, 2**32 - 1))
    kind = draw(st.sampled_from(kinds))
    p = draw(st.integers(1, 4))
    m = draw(st.integers(1, p))
    if kind == "relative2" and m + p > 6:
        kind = "strict"
    n = draw(st.integers(m + p if kind == "relative2" else 1, 6))
    sys = random_system(np.random.default_rng(seed), n, m, p, kind)
    L0 = acceptable(sys)
    assume(L0 is not None)
    return sys, L0, seed


def bank_for(sys, L, T_f, seed, extra=8):
    T_p = lti.observability_index(sys)
    order = sys.n + T_p + T_f + L
    T = min_pe_length(sys.m, order) + extra
    u_d = generate_pe_input(sys.m, T, order, seed, tail=L)
    _, y_d = lti.simulate(sys, None, u_d)
    return build_data_bank(u_d, y_d, T_p, T_f, L, n=sys.n)


def recorded(sys, seed, length):
    rng = np.random.default_rng(seed + 1)
    u = rng.uniform(-1, 1, size=(length, sys.m))
    x, y = lti.simulate(sys, rng.normal(size=sys.n), u)
    return u, x, y


@SETTINGS
@given(
    st.integers(1, 3),
    st.integers(1, 6),
    st.integers(0, 2**32 - 1),
    st.floats(-3, 3),
    st.floats(-3, 3),
)
def test_hankel_is_linear(q, t, seed, a, b):
    rng = np.random.default_rng(seed)
    f, g = rng.normal(size=(10, q)), rng.normal(size=(10, q))
    np.testing.assert_allclose(hankel(a * f + b * g, t), a * hankel(f, t) + b * hankel(g, t), atol=1e-12)


@SETTINGS
@given(st.integers(1, 3), st.integers(1, 5), st.integers(1, 30), st.integers(0, 10**6))
def test_pe_implies_enough_columns(q, order, length, seed):
    u = np.random.default_rng(seed).normal(size=(length, q))
    if pe_check(u, order):
        assert length - order + 1 >= q * order


@SETTINGS
@given(plants())
def test_rank_monotone_and_k_property(case):
    sys, L0, _ = case
    ranks = [0] + [lti.toeplitz_rank(sys, t) for t in range(sys.n + 1)]
    steps = np.diff(ranks)
    assert np.all(steps >= 0) and np.all(steps <= sys.m)
    inv = lti.build_model_inverse(sys, L0)
    target = np.hstack([np.eye(sys.m), np.zeros((sys.m, sys.m * L0))])
    assert np.linalg.norm(inv.K @ lti.toeplitz_matrix(sys, L0) - target) <= 1e-10


@SETTINGS
@given(plants())
def test_model_inverse_oracle_identity(case):
    sys, L0, seed = case
    u, x, y = recorded(sys, seed, 40)
    u_hat = lti.simulate_inverse(lti.build_model_inverse(sys, L0), x.at(0), y)
    np.testing.assert_allclose(u_hat.values, u[: 40 - L0], atol=1e-8)
    k = 7
    assert lti.io_residual(sys, x.at(k), u[k : k + L0 + 1].ravel(), y.values[k : k + L0 + 1].ravel(), L0) <= 1e-10


@SETTINGS
@given(plants(), st.integers(1, 3))
def test_bank_shape_and_columns(case, T_f):
    sys, L0, seed = case
    bank = bank_for(sys, L0, T_f, seed)
    N = bank.T - bank.T_p - T_f + 1
    assert {M.shape[1] for M in (bank.U_p, bank.Y_p, bank.U_f, bank.Y_fL)} == {N}
    assert bank.pe_ok
    span = bank.T_p + T_f + L0
    for c in (0, N // 2, N - 1):
        u_win = bank.u_d.values[c : c + span].ravel()
        y_win = bank.y_d.values[c : c + span].ravel()
        assert lti.is_trajectory(sys, u_win, y_win, atol=1e-9)


@SETTINGS
@given(plants(), st.integers(1, 3))
def test_exact_and_unique_recovery(case, T_f):
    sys, L0, seed = case
    bank = bank_for(sys, L0, T_f, seed)
    assert nullspace_equality_check(bank)
    u, _, y = recorded(sys, seed, bank.T_p + T_f + L0 + 5)
    problem = InversionProblem.from_trajectory(bank, u, y, 3)
    np.testing.assert_allclose(recover_input(problem), u[3 + bank.T_p : 3 + bank.T_p + T_f].ravel(), atol=1e-7)
    g, _ = solve_g(problem)
    Z = null_space(bank.stacked)
    shift = Z @ np.random.default_rng(seed).normal(size=Z.shape[1])
    assert np.max(np.abs(bank.U_f @ shift), initial=0.0) <= 1e-9


@SETTINGS
@given(plants())
def test_algorithm2_delay_law(case):
    sys, L0, seed = case
    bank = bank_for(sys, L0, 1, seed)
    u, _, y = recorded(sys, seed, 40)
    Tp = bank.T_p
    # start at k = Tp + L0 with the true windows behind it
    k0 = Tp + L0
    u_hat, _ = run_algorithm2(bank, y.segment(k0, 39), u[:Tp], y.segment(0, k0 - 1))
    np.testing.assert_allclose(u_hat.values, u[Tp : 40 - L0], atol=1e-7)


@SETTINGS
@given(plants(kinds=("strict",)), st.floats(0.05, 1.0), st.integers(0, 10**6))
def test_tracking_respects_box_and_nesting(case, bound, seed):
    sys, L0, sys_seed = case
    bank = bank_for(sys, L0, 2, sys_seed)
    u, _, y = recorded(sys, sys_seed, 20)
    prob = InversionProblem.from_trajectory(bank, u, y, 2)
    y_star = np.random.default_rng(seed).normal(size=prob.y_future.size)
    tight = track(TrackingProblem(bank, prob.u_past, prob.y_past, y_star, [-bound] * sys.m, [bound] * sys.m))
    loose = track(TrackingProblem(bank, prob.u_past, prob.y_past, y_star, [-2 * bound] * sys.m, [2 * bound] * sys.m))
    assert tight.box_violation <= 1e-8 and loose.box_violation <= 1e-8
    assert loose.objective <= tight.objective * (1 + 1e-9) + 1e-12
