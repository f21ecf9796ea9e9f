"""Disturbance observer whose inverse model is a data bank.

Loop, per step ``k``::

    u_hat(k)  = inverter(y(k))            # estimates u(k - L)
    d_hat(k)  = u_hat(k) - delta(k - L)
    delta(k)  = u0(k) - d_hat(k)
    u(k)      = delta(k) + d(k)           # plant input

so that ``d_hat(k) = d(k - L)`` and the plant sees ``u0(k) + d(k) - d(k - L)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InconsistentTrajectoryError, PreconditionError
from .hankel import DataBank
from .inversion import InverterState
from .lti import StateSpaceSystem, simulate
from .signals import Signal, as_signal


@dataclass(frozen=True, eq=False)
class DobRun:
    plant: StateSpaceSystem
    bank: DataBank
    x0: np.ndarray
    u0: Signal
    d: Signal
    y: Signal
    u: Signal
    u_hat: Signal
    d_hat: Signal
    delta: Signal
    residuals: np.ndarray
    startup: int

    @property
    def L(self) -> int:
        return self.bank.L

    @property
    def T_p(self) -> int:
        return self.bank.T_p


def _dob_bank(bank: DataBank, T_p, L) -> DataBank:
    T_p = bank.T_p if T_p is None else T_p
    L = bank.L if L is None else L
    if (bank.T_p, bank.T_f, bank.L) != (T_p, 1, L):
        bank = bank.rebuild(T_p=T_p, T_f=1, L=L)
    return bank


def run_dob(
    plant: StateSpaceSystem,
    bank: DataBank,
    u0,
    d,
    T_p: int | None = None,
    L: int | None = None,
    x0=None,
) -> DobRun:
    """Simulate the closed loop of ``plant`` with the data-driven observer.

    ``bank`` must come from the same plant; it is rebuilt with ``T_f = 1``
    (and the given ``T_p``, ``L``) if needed. During the first ``T_p + L``
    steps the disturbance estimate is held at zero and the inverter runs
    without its consistency check.
    """
    bank = _dob_bank(bank, T_p, L)
    L, T_p = bank.L, bank.T_p
    if L < 1:
        raise PreconditionError("the observer loop needs L >= 1; with L = 0 it is an algebraic loop")
    if (bank.m, bank.p) != (plant.m, plant.p):
        raise PreconditionError("bank dimensions do not match the plant")
    u0 = as_signal(u0, plant.m)
    d = as_signal(d, plant.m)
    if len(u0) != len(d):
        raise PreconditionError(f"u0 has {len(u0)} samples but d has {len(d)}")
    x = np.zeros(plant.n) if x0 is None else np.asarray(x0, dtype=np.float64).reshape(-1)
    if x.shape != (plant.n,):
        raise PreconditionError(f"x0 must have dimension {plant.n}")
    x_init = x.copy()

    steps = len(u0)
    startup = T_p + L
    A, B, C, D = plant.A, plant.B, plant.C, plant.D
    feedthrough = bool(np.any(D))
    state = InverterState(bank, k=u0.start)
    y = np.zeros((steps, plant.p))
    u = np.zeros((steps, plant.m))
    u_hat = np.zeros((steps, plant.m))
    d_hat = np.zeros((steps, plant.m))
    delta = np.zeros((steps, plant.m))
    residuals = np.zeros(steps)

    for k in range(steps):
        running = k >= startup
        try:
            if feedthrough:
                # u_hat(k) does not depend on u(k); probe with u(k) = 0 to break the loop.
                est = state.peek(C @ x, check=running)
            else:
                y[k] = C @ x
                est = state.step(y[k], check=running)
            d_hat[k] = est - delta[k - L] if running else 0.0
            delta[k] = u0.values[k] - d_hat[k]
            u[k] = delta[k] + d.values[k]
            if feedthrough:
                y[k] = C @ x + D @ u[k]
                est = state.step(y[k], check=running)
        except InconsistentTrajectoryError as exc:
            exc.k = u0.start + k
            raise
        u_hat[k] = est
        residuals[k] = state.last_residual
        x = A @ x + B @ u[k]

    t0 = u0.start
    return DobRun(
        plant=plant,
        bank=bank,
        x0=x_init,
        u0=u0,
        d=d,
        y=Signal(y, t0),
        u=Signal(u, t0),
        u_hat=Signal(u_hat, t0),
        d_hat=Signal(d_hat, t0),
        delta=Signal(delta, t0),
        residuals=residuals,
        startup=startup,
    )


def effective_input(run: DobRun) -> Signal:
    """``u0(k) + d(k) - d(k - L)``, with the delayed term off during startup."""
    L = run.L
    d = run.d.values
    delayed = np.zeros_like(d)
    delayed[L:] = d[:-L]
    delayed[: run.startup] = 0.0
    return Signal(run.u0.values + d - delayed, run.u0.start)


def verify_transfer_relation(run: DobRun) -> float:
    """Largest deviation of the recorded output from the open-loop plant under the effective input.

    Measured over the steps after startup.
    """
    _, y_ref = simulate(run.plant, run.x0, effective_input(run))
    diff = np.abs(run.y.values[run.startup :] - y_ref.values[run.startup :])
    return float(diff.max()) if diff.size else 0.0


def disturbance_free_output(run: DobRun) -> Signal:
    return simulate(run.plant, run.x0, run.u0)[1]


__all__ = ["DobRun", "run_dob", "effective_input", "verify_transfer_relation", "disturbance_free_output"]
