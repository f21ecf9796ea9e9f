import numpy as np
import pytest

from behinv import lti
from behinv.experiments import make_bank
from behinv.fixtures import EXAMPLE1, EXAMPLE2

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_system(rng, n, m, p, kind="strict"):
    """Random plant with a stable A.

    kind: "strict" (D = 0, generically L0 = 1), "feedthrough" (full-rank D,
    L0 = 0) or "relative2" (D = 0, CB = 0, generically L0 = 2; needs n >= m + p).
    """
    A = rng.normal(size=(n, n))
    A *= rng.uniform(0.3, 0.85) / max(np.max(np.abs(np.linalg.eigvals(A))), 1e-12)
    B = rng.normal(size=(n, m))
    C = rng.normal(size=(p, n))
    D = np.zeros((p, m))
    if kind == "feedthrough":
        D = rng.normal(size=(p, m))
    elif kind == "relative2":
        proj = np.eye(n) - B @ np.linalg.pinv(B)
        C = C @ proj
    return lti.StateSpaceSystem(A, B, C, D)


def acceptable(sys):
    """Controllable, observable, invertible with a stable model inverse."""
    if not (lti.is_controllable(sys) and lti.is_observable(sys)):
        return None
    L0 = lti.inherent_delay(sys)
    if L0 is None:
        return None
    inv = lti.build_model_inverse(sys, L0)
    if not lti.inverse_is_stable(inv, 0.95):
        return None
    return L0


def random_invertible_systems(count, seed, n_max=6, p_max=4):
    """Deterministic list of ``(sys, L0)`` pairs passing :func:`acceptable`."""
    rng = np.random.default_rng(seed)
    kinds = ["strict", "feedthrough", "relative2"]
    out = []
    attempts = 0
    while len(out) < count:
        attempts += 1
        assert attempts < 50 * count, "random system generator rejected too many draws"
        kind = kinds[len(out) % 3]
        p = int(rng.integers(1, p_max + 1))
        m = int(rng.integers(1, p + 1))
        n_lo = m + p if kind == "relative2" else 1
        if n_lo > n_max:
            kind, n_lo = "strict", 1
        n = int(rng.integers(n_lo, n_max + 1))
        sys = random_system(rng, n, m, p, kind)
        L0 = acceptable(sys)
        if L0 is not None:
            out.append((sys, L0))
    return out


@pytest.fixture(scope="session")
def example1_bank():
    """T_p=2, T_f=3, L=1 on 30 excited samples."""
    return make_bank(EXAMPLE1, 30, 2, 3, 1, seed=7)


@pytest.fixture(scope="session")
def example1_rt_bank():
    return make_bank(EXAMPLE1, 40, 2, 1, 1, seed=8)


@pytest.fixture(scope="session")
def example2_rt_bank():
    return make_bank(EXAMPLE2, 70, 2, 1, 1, seed=9)
