import numpy as np
import pytest

from behinv import lti
from behinv.dob import disturbance_free_output, effective_input, run_dob, verify_transfer_relation
from behinv.errors import InconsistentTrajectoryError, PreconditionError
from behinv.experiments import example4, make_bank
from behinv.fixtures import EXAMPLE1, EXAMPLE2, slow_disturbance, staircase_input


@pytest.fixture(scope="module")
def dob_run(example1_rt_bank):
    u0 = staircase_input(120, 2, seed=4, rest=2)
    d = slow_disturbance(120, 2)
    return run_dob(EXAMPLE1, example1_rt_bank, u0, d)


def test_signal_identities(dob_run):
    run = dob_run
    L, s = run.L, run.startup
    assert s == run.T_p + L == 3
    d = run.d.values
    np.testing.assert_allclose(run.d_hat.values[s:], d[s - L : -L], atol=1e-6)
    np.testing.assert_allclose(run.delta.values[s:], run.u0.values[s:] - d[s - L : -L], atol=1e-6)
    np.testing.assert_array_equal(run.d_hat.values[:s], 0.0)
    np.testing.assert_array_equal(run.u.values, run.delta.values + d)


def test_estimates_follow_plant_input(dob_run):
    run = dob_run
    np.testing.assert_allclose(run.u_hat.values[run.L :], run.u.values[: -run.L], atol=1e-7)


def test_transfer_relation(dob_run):
    assert verify_transfer_relation(dob_run) <= 1e-6
    assert dob_run.residuals.max() <= 1e-8
    _, y_ref = lti.simulate(EXAMPLE1, dob_run.x0, effective_input(dob_run))
    np.testing.assert_allclose(dob_run.y.values, y_ref.values, atol=1e-6)


def test_no_disturbance_is_transparent(example1_rt_bank):
    u0 = staircase_input(60, 2, seed=1)
    run = run_dob(EXAMPLE1, example1_rt_bank, u0, np.zeros((60, 2)))
    np.testing.assert_allclose(run.y.values, disturbance_free_output(run).values, atol=1e-8)
    assert verify_transfer_relation(run) <= 1e-8
    assert np.abs(run.d_hat.values).max() <= 1e-8


def test_constant_disturbance_rejected(example1_rt_bank):
    u0 = staircase_input(80, 2, seed=2)
    d = np.tile([0.4, -0.7], (80, 1))
    run = run_dob(EXAMPLE1, example1_rt_bank, u0, d)
    y_free = disturbance_free_output(run).values
    assert np.abs(run.y.values[run.startup + 20 :] - y_free[run.startup + 20 :]).max() <= 1e-4


def test_example4_runner():
    result = example4(seed=3)
    assert result["transfer_defect"] <= 1e-6
    assert result["max_deviation_after_transient"] < result["max_deviation_without_observer"]


def test_rebuilds_bank_to_single_step(example1_bank):
    run = run_dob(EXAMPLE1, example1_bank, np.zeros((20, 2)), np.ones((20, 2)))
    assert run.bank.T_f == 1 and run.L == 1


def test_feedthrough_plant():
    plant = lti.StateSpaceSystem(EXAMPLE1.A, EXAMPLE1.B, EXAMPLE1.C, np.array([[5.0, 2.0], [-1.0, 4.0]]))
    assert lti.inverse_is_stable(lti.build_model_inverse(plant, 1))
    bank = make_bank(plant, 40, 2, 1, 1, seed=6)
    run = run_dob(plant, bank, staircase_input(60, 2, seed=2), np.tile([0.3, 0.1], (60, 1)))
    assert verify_transfer_relation(run) <= 1e-6
    np.testing.assert_allclose(run.d_hat.values[run.startup :], np.tile([0.3, 0.1], (57, 1)), atol=1e-6)


def test_zero_delay_rejected():
    bank = make_bank(EXAMPLE1, 30, 2, 1, 0, seed=1)
    with pytest.raises(PreconditionError):
        run_dob(EXAMPLE1, bank, np.zeros((10, 2)), np.zeros((10, 2)))


def test_length_and_dimension_checks(example1_rt_bank):
    with pytest.raises(PreconditionError):
        run_dob(EXAMPLE1, example1_rt_bank, np.zeros((10, 2)), np.zeros((9, 2)))
    with pytest.raises(PreconditionError):
        run_dob(EXAMPLE1, example1_rt_bank, np.zeros((10, 2)), np.zeros((10, 2)), x0=np.zeros(3))
    with pytest.raises(PreconditionError):
        run_dob(EXAMPLE2, example1_rt_bank, np.zeros((10, 2)), np.zeros((10, 2)))


def test_model_mismatch_reports_step(example2_rt_bank):
    wrong = lti.StateSpaceSystem(EXAMPLE2.A * 0.8, EXAMPLE2.B, EXAMPLE2.C, EXAMPLE2.D)
    u0 = staircase_input(40, 2, seed=3)
    with pytest.raises(InconsistentTrajectoryError) as info:
        run_dob(wrong, example2_rt_bank, u0, np.zeros((40, 2)))
    assert info.value.k >= 3
