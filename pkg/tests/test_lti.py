import json

import numpy as np
import pytest

from behinv import lti
from behinv.errors import NoInverseError, NotObservableError, PreconditionError, UnsupportedSystemError
from behinv.fixtures import EXAMPLE1, EXAMPLE2
from behinv.signals import Signal


def _convolution_output(sys, x0, u):
    """y(k) = C A^k x0 + sum_j C A^(k-1-j) B u(j) + D u(k), written out directly."""
    T = u.shape[0]
    y = np.zeros((T, sys.p))
    for k in range(T):
        y[k] = sys.C @ np.linalg.matrix_power(sys.A, k) @ x0 + sys.D @ u[k]
        for j in range(k):
            y[k] += sys.C @ np.linalg.matrix_power(sys.A, k - 1 - j) @ sys.B @ u[j]
    return y


def test_system_validates_shapes():
    with pytest.raises(PreconditionError):
        lti.StateSpaceSystem(np.eye(2), np.ones((3, 1)), np.eye(2), np.zeros((2, 1)))
    with pytest.raises(PreconditionError):
        lti.StateSpaceSystem(np.eye(2), np.ones((2, 1)), np.eye(2), np.zeros((1, 1)))


def test_system_json_round_trip(tmp_path):
    path = tmp_path / "plant.json"
    EXAMPLE2.save(path)
    loaded = lti.StateSpaceSystem.load(path)
    for name in "ABCD":
        np.testing.assert_array_equal(getattr(loaded, name), getattr(EXAMPLE2, name))
    assert set(json.loads(path.read_text())) >= {"A", "B", "C", "D"}


class TestSimulate:
    def test_zero_input_zero_state(self):
        _, y = lti.simulate(EXAMPLE1, None, np.zeros((10, 2)))
        assert np.all(y.values == 0.0)

    def test_delay_chain(self):
        sys = lti.StateSpaceSystem(np.zeros((2, 2)), np.eye(2), np.eye(2), np.zeros((2, 2)))
        _, y = lti.simulate(sys, np.zeros(2), np.array([[1.0, 2.0], [0.0, 0.0]]))
        np.testing.assert_array_equal(y.at(0), [0, 0])
        np.testing.assert_array_equal(y.at(1), [1, 2])

    def test_example1_first_markov_column(self):
        _, y = lti.simulate(EXAMPLE1, np.zeros(2), np.array([[1.0, 0.0], [0.0, 0.0]]))
        np.testing.assert_allclose(y.values, [[0, 0], [0, 2]], atol=1e-15)

    def test_matches_convolution(self):
        rng = np.random.default_rng(1)
        x0 = rng.normal(size=6)
        u = rng.normal(size=(12, 2))
        x, y = lti.simulate(EXAMPLE2, x0, u)
        np.testing.assert_allclose(y.values, _convolution_output(EXAMPLE2, x0, u), atol=1e-12)
        assert len(x) == 13
        np.testing.assert_array_equal(x.at(0), x0)

    def test_signal_start_is_kept(self):
        x, y = lti.simulate(EXAMPLE1, None, Signal(np.ones((4, 2)), start=-3))
        assert y.start == -3 and x.start == -3 and x.stop == 2

    def test_dimension_mismatch(self):
        with pytest.raises(PreconditionError):
            lti.simulate(EXAMPLE1, np.zeros(3), np.zeros((5, 2)))
        with pytest.raises(PreconditionError):
            lti.simulate(EXAMPLE1, None, np.zeros((5, 3)))


class TestStructuralMatrices:
    def test_toeplitz_t0_is_D(self):
        np.testing.assert_array_equal(lti.toeplitz_matrix(EXAMPLE1, 0), np.zeros((2, 2)))

    def test_toeplitz_t1(self):
        expected = np.array([[0, 0, 0, 0], [0, 0, 0, 0], [0, 3, 0, 0], [2, 1, 0, 0]], dtype=float)
        np.testing.assert_allclose(lti.toeplitz_matrix(EXAMPLE1, 1), expected, atol=1e-15)

    def test_toeplitz_with_zero_C(self):
        D = np.array([[1.0, 2.0]])
        sys = lti.StateSpaceSystem(np.eye(3) * 0.5, np.ones((3, 2)), np.zeros((1, 3)), D)
        np.testing.assert_array_equal(lti.toeplitz_matrix(sys, 2), np.kron(np.eye(3), D))

    def test_observability(self):
        np.testing.assert_array_equal(lti.observability_matrix(EXAMPLE1, 0), [[1, 2], [1, 0]])
        np.testing.assert_allclose(
            lti.observability_matrix(EXAMPLE1, 1), [[1, 2], [1, 0], [-0.3, -1.0], [-0.3, 0]], atol=1e-15
        )

    def test_observability_identity(self):
        sys = lti.StateSpaceSystem(np.eye(3), np.ones((3, 1)), np.eye(3), np.zeros((3, 1)))
        np.testing.assert_array_equal(lti.observability_matrix(sys, 4), np.tile(np.eye(3), (5, 1)))


class TestInherentDelay:
    def test_examples(self):
        assert lti.inherent_delay(EXAMPLE1) == 1
        assert lti.inherent_delay(EXAMPLE2) == 1

    def test_identity_feedthrough(self):
        sys = lti.StateSpaceSystem(np.eye(2) * 0.4, np.ones((2, 2)), np.ones((2, 2)), np.eye(2))
        assert lti.inherent_delay(sys) == 0

    def test_more_inputs_than_outputs(self):
        sys = lti.StateSpaceSystem(np.eye(2) * 0.4, np.eye(2), np.ones((1, 2)), np.zeros((1, 2)))
        with pytest.raises(UnsupportedSystemError):
            lti.inherent_delay(sys)

    def test_no_inverse_returns_none(self):
        # two identical input channels can never be told apart
        sys = lti.StateSpaceSystem(np.eye(2) * 0.5, np.ones((2, 2)), np.eye(2), np.zeros((2, 2)))
        assert lti.inherent_delay(sys) is None

    def test_rank_test(self):
        assert not lti.has_delay_inverse(EXAMPLE1, 0)
        assert lti.has_delay_inverse(EXAMPLE1, 1)
        assert lti.toeplitz_rank(EXAMPLE1, 0) == 0
        assert lti.toeplitz_rank(EXAMPLE1, 1) == 2


class TestObservabilityIndex:
    def test_examples(self):
        assert lti.observability_index(EXAMPLE1) == 1
        assert lti.observability_index(EXAMPLE2) == 2
        stacked = np.vstack([EXAMPLE2.C, EXAMPLE2.C @ EXAMPLE2.A])
        assert np.linalg.matrix_rank(EXAMPLE2.C) < 6 == np.linalg.matrix_rank(stacked)

    def test_identity_output(self):
        sys = lti.StateSpaceSystem(np.diag([0.1, 0.2, 0.3]), np.ones((3, 1)), np.eye(3), np.zeros((3, 1)))
        assert lti.observability_index(sys) == 1

    def test_unobservable(self):
        sys = lti.StateSpaceSystem(np.eye(2) * 0.5, np.ones((2, 1)), np.array([[1.0, 0.0]]), np.zeros((1, 1)))
        with pytest.raises(NotObservableError):
            lti.observability_index(sys)


class TestModelInverse:
    def test_example1_K(self):
        inv = lti.build_model_inverse(EXAMPLE1, 1)
        expected = np.array([[0, 0, -1 / 6, 1 / 2], [0, 0, 1 / 3, 0]])
        np.testing.assert_allclose(inv.K, expected, atol=1e-12)
        assert inv.residual <= 1e-10

    def test_example1_realization(self):
        inv = lti.build_model_inverse(EXAMPLE1, 1)
        O = lti.observability_matrix(EXAMPLE1, 1)
        np.testing.assert_allclose(inv.A_tilde, EXAMPLE1.A - EXAMPLE1.B @ inv.K @ O, atol=1e-15)
        np.testing.assert_allclose(inv.B_tilde, EXAMPLE1.B @ inv.K, atol=1e-15)
        np.testing.assert_allclose(inv.C_tilde, -inv.K @ O, atol=1e-15)
        np.testing.assert_allclose(inv.D_tilde, inv.K, atol=1e-15)

    def test_identity_feedthrough(self):
        A = np.array([[0.2, 0.1], [0.0, 0.3]])
        C = np.array([[1.0, 0.5], [0.0, 1.0]])
        sys = lti.StateSpaceSystem(A, np.eye(2), C, np.eye(2))
        inv = lti.build_model_inverse(sys, 0)
        np.testing.assert_allclose(inv.K, np.eye(2), atol=1e-14)
        np.testing.assert_allclose(inv.A_tilde, A - C, atol=1e-14)
        np.testing.assert_allclose(inv.C_tilde, -C, atol=1e-14)

    def test_example2_residual(self):
        inv = lti.build_model_inverse(EXAMPLE2, 1)
        T1 = lti.toeplitz_matrix(EXAMPLE2, 1)
        target = np.hstack([np.eye(2), np.zeros((2, 2))])
        assert np.linalg.norm(inv.K @ T1 - target) <= 1e-10

    def test_rank_failure(self):
        with pytest.raises(NoInverseError):
            lti.build_model_inverse(EXAMPLE1, 0)

    def test_example1_recovers_input(self):
        u = np.random.default_rng(3).uniform(-1, 1, size=(50, 2))
        _, y = lti.simulate(EXAMPLE1, np.zeros(2), u)
        u_hat = lti.simulate_inverse(lti.build_model_inverse(EXAMPLE1, 1), np.zeros(2), y)
        assert len(u_hat) == 49
        np.testing.assert_allclose(u_hat.values, u[:49], atol=1e-9)

    def test_zero_output(self):
        u_hat = lti.simulate_inverse(lti.build_model_inverse(EXAMPLE1, 1), np.zeros(2), np.zeros((20, 2)))
        assert np.all(u_hat.values == 0.0)

    def test_short_signal(self):
        inv = lti.build_model_inverse(EXAMPLE1, 1)
        with pytest.raises(PreconditionError):
            lti.simulate_inverse(inv, np.zeros(2), np.zeros((1, 2)))


def test_trajectory_predicates():
    u = np.random.default_rng(4).normal(size=(8, 2))
    x0 = np.array([0.3, -0.2])
    x, y = lti.simulate(EXAMPLE1, x0, u)
    assert lti.io_residual(EXAMPLE1, x.at(2), u[2:5].ravel(), y.values[2:5].ravel(), 2) <= 1e-12
    assert lti.is_trajectory(EXAMPLE1, u.ravel(), y.values.ravel())
    bad = y.values.copy()
    bad[5, 0] += 0.1
    assert not lti.is_trajectory(EXAMPLE1, u.ravel(), bad.ravel())
