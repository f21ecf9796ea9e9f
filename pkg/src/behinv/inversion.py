"""Recover the input that produced an output, using only a data bank.

Given a past window ``(u, y)`` of length ``T_p`` and the next ``T_f + L``
outputs, any ``g`` with ``[U_p; Y_p; Y_fL] g = [u_past; y_past; y_future]``
yields the ``T_f`` inputs following the past window as ``U_f g``. The value
does not depend on which solution ``g`` is taken, provided the plant has an
L-delay inverse, ``T_p`` is at least the observability index and the bank
input is persistently exciting of order ``n + T_p + T_f + L``.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np

from ._linalg import get_rank_tol, null_space, pinv
from .errors import InconsistentTrajectoryError, PreconditionError
from .hankel import DataBank, hankel
from .signals import Signal, as_signal

# Defect allowed in the stacked solve, relative to 1 + ||rhs||.
CONSISTENCY_RTOL = 1e-6


def consistency_tolerance(rhs: np.ndarray) -> float:
    return CONSISTENCY_RTOL * (1.0 + float(np.linalg.norm(rhs)))


def _stacked_pinv(bank: DataBank) -> np.ndarray:
    key = ("pinv", get_rank_tol())
    if key not in bank._cache:
        bank._cache[key] = pinv(bank.stacked)
    return bank._cache[key]


@dataclass(frozen=True, eq=False)
class InversionProblem:
    """Stacked windows ``u_[t0, t0+Tp-1]``, ``y_[t0, t0+Tp-1]``, ``y_[t0+Tp, t0+Tp+Tf+L-1]``."""

    bank: DataBank
    u_past: np.ndarray
    y_past: np.ndarray
    y_future: np.ndarray

    def __post_init__(self):
        b = self.bank
        expected = {
            "u_past": b.m * b.T_p,
            "y_past": b.p * b.T_p,
            "y_future": b.p * (b.T_f + b.L),
        }
        for name, size in expected.items():
            vec = np.asarray(getattr(self, name), dtype=np.float64).reshape(-1)
            if vec.size != size:
                raise PreconditionError(f"{name} must have {size} entries, got {vec.size}")
            object.__setattr__(self, name, vec)

    @classmethod
    def from_trajectory(cls, bank: DataBank, u, y, t0: int) -> InversionProblem:
        """Cut the windows starting at time ``t0`` out of recorded signals."""
        u, y = as_signal(u, bank.m), as_signal(y, bank.p)
        Tp, Tf, L = bank.T_p, bank.T_f, bank.L
        return cls(
            bank,
            u.window(t0, t0 + Tp - 1),
            y.window(t0, t0 + Tp - 1),
            y.window(t0 + Tp, t0 + Tp + Tf + L - 1),
        )

    @property
    def rhs(self) -> np.ndarray:
        return np.concatenate([self.u_past, self.y_past, self.y_future])


def solve_g(problem: InversionProblem, check: bool = True) -> tuple[np.ndarray, float]:
    """Minimum-norm least-squares ``g`` and the norm of its defect.

    Raises :class:`InconsistentTrajectoryError` when the defect exceeds the
    consistency tolerance and ``check`` is set.
    """
    rhs = problem.rhs
    g = _stacked_pinv(problem.bank) @ rhs
    residual = float(np.linalg.norm(problem.bank.stacked @ g - rhs))
    tol = consistency_tolerance(rhs)
    if check and residual > tol:
        raise InconsistentTrajectoryError(
            f"windows are not a trajectory of the data-generating system "
            f"(residual {residual:.3g} > {tol:.3g})",
            residual=residual,
            tolerance=tol,
        )
    return g, residual


def recover_input(problem: InversionProblem) -> np.ndarray:
    """Stacked ``u_[t0+Tp, t0+Tp+Tf-1]`` as ``U_f g``."""
    g, _ = solve_g(problem)
    return problem.bank.U_f @ g


def nullspace_equality_check(bank: DataBank, rtol: float = 1e-8) -> bool:
    """Whether ``N([U_p; Y_p; Y_fL]) == N([U_p; Y_p; U_f; Y_fL])`` numerically.

    Only ``N(without U_f) ⊆ N(U_f)`` can fail; the other inclusion is checked
    as a sanity test.
    """
    Z = null_space(bank.stacked)
    scale = max(1.0, float(np.linalg.norm(bank.U_f, 2)))
    if Z.shape[1] and np.max(np.abs(bank.U_f @ Z)) > rtol * scale:
        return False
    full = np.vstack([bank.U_p, bank.Y_p, bank.U_f, bank.Y_fL])
    Z_full = null_space(full)
    if Z_full.shape[1]:
        scale = max(1.0, float(np.linalg.norm(bank.stacked, 2)))
        if np.max(np.abs(bank.stacked @ Z_full)) > rtol * scale:
            return False
    return True


def complete_input_tail(bank: DataBank, g: np.ndarray, t: int | None = None) -> np.ndarray:
    """Inputs ``u_[t0+t, t0+t+L-1]`` that extend a length-``t`` window to a full trajectory.

    ``t`` defaults to ``T_p + T_f``, so with a ``g`` from :func:`solve_g` the
    result continues the recovered input block.
    """
    if t is None:
        t = bank.T_p + bank.T_f
    g = np.asarray(g, dtype=np.float64).reshape(-1)
    if bank.L == 0:
        return np.zeros(0)
    if not 1 <= t <= bank.T:
        raise PreconditionError(f"window length t={t} outside [1, {bank.T}]")
    H = hankel(bank.u_d.segment(t, bank.T + bank.L - 1), bank.L)
    if g.size != H.shape[1]:
        raise PreconditionError(f"g must have {H.shape[1]} entries for t={t}, got {g.size}")
    return H @ g


def feedback_radius(bank: DataBank) -> float:
    """Spectral radius of the estimate-feedback recursion in Algorithms 1 and 2.

    Both algorithms reuse their own estimates as the input history, so an
    error in ``u_past`` reaches the next block through ``U_f pinv(S)``. With
    ``p > m`` this map need not match a stable model inverse, and a radius
    above one lets roundoff grow geometrically. A larger ``T_p`` usually
    brings it back below one.
    """
    m, Tp, Tf = bank.m, bank.T_p, bank.T_f
    P_u = bank.U_f @ _stacked_pinv(bank)[:, : m * Tp]
    # u_past -> last T_p samples of [u_past; new block]
    M = np.vstack([np.eye(m * Tp), P_u])[m * Tf :]
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def _history(init, length: int, dim: int, name: str) -> np.ndarray:
    if init is None:
        return np.zeros((length, dim))
    arr = init.values if isinstance(init, Signal) else np.asarray(init, dtype=np.float64)
    arr = arr.reshape(length, dim) if arr.size == length * dim else None
    if arr is None:
        raise PreconditionError(f"{name} must hold {length} samples of dimension {dim}")
    return np.array(arr, dtype=np.float64)


def iter_algorithm1(
    bank: DataBank, y_stream, init_u=None, init_y=None
) -> Iterator[tuple[int, np.ndarray, float]]:
    """Batch input estimation; yields ``(k, u_hat_[k, k+Tf-1], residual)``.

    ``y_stream`` starts at the first time after the history windows, which
    cover ``[y_stream.start - T_p, y_stream.start - 1]`` and default to zero
    (plant at rest). Each batch's estimate becomes part of the input history
    for the next one.
    """
    y_stream = as_signal(y_stream, bank.p)
    Tp, Tf, L, m = bank.T_p, bank.T_f, bank.L, bank.m
    u_hist = _history(init_u, Tp, m, "init_u")
    y_all = np.vstack([_history(init_y, Tp, bank.p, "init_y"), y_stream.values])
    base = y_stream.start - Tp
    batches = (len(y_stream) - L) // Tf
    u_all = np.vstack([u_hist, np.zeros((batches * Tf, m))])
    for j in range(batches):
        i = Tp + j * Tf  # offset of k from base
        problem = InversionProblem(
            bank,
            u_all[i - Tp : i].reshape(-1),
            y_all[i - Tp : i].reshape(-1),
            y_all[i : i + Tf + L].reshape(-1),
        )
        k = base + i
        try:
            g, residual = solve_g(problem)
        except InconsistentTrajectoryError as exc:
            exc.k = k
            raise
        block = (bank.U_f @ g).reshape(Tf, m)
        u_all[i : i + Tf] = block
        yield k, block, residual


def run_algorithm1(bank: DataBank, y_stream, init_u=None, init_y=None) -> Signal:
    """Estimated inputs ``u_hat(k)`` for ``k`` from ``y_stream.start`` in whole batches of ``T_f``."""
    y_stream = as_signal(y_stream, bank.p)
    blocks = [blk for _, blk, _ in iter_algorithm1(bank, y_stream, init_u, init_y)]
    values = np.vstack(blocks) if blocks else np.zeros((0, bank.m))
    return Signal(values, y_stream.start)


class InverterState:
    """Real-time input estimator: one output sample in, the input ``L`` steps back out.

    Holds ``u_[k-Tp-L, k-L-1]`` (estimates once running) and
    ``y_[k-Tp-L, k-1]``. Histories default to zero, i.e. the plant at rest
    before time ``k``. Not safe to step from several threads at once.
    """

    def __init__(self, bank: DataBank, init_u=None, init_y=None, k: int = 0):
        if bank.T_f != 1:
            raise PreconditionError(f"real-time inversion needs a bank with T_f = 1, got {bank.T_f}")
        self.bank = bank
        Tp, L = bank.T_p, bank.L
        self.u_buf = deque(_history(init_u, Tp, bank.m, "init_u"), maxlen=Tp)
        self.y_buf = deque(_history(init_y, Tp + L, bank.p, "init_y"), maxlen=Tp + L)
        self.k = int(k)
        self.last_residual = 0.0

    @property
    def T_p(self) -> int:
        return self.bank.T_p

    @property
    def L(self) -> int:
        return self.bank.L

    def _solve(self, y_k, check: bool) -> tuple[np.ndarray, float]:
        y_k = np.asarray(y_k, dtype=np.float64).reshape(-1)
        if y_k.size != self.bank.p:
            raise PreconditionError(f"y_k must have {self.bank.p} entries")
        ys = np.vstack([np.asarray(self.y_buf), y_k[None, :]])
        Tp = self.T_p
        problem = InversionProblem(
            self.bank,
            np.asarray(self.u_buf).reshape(-1),
            ys[:Tp].reshape(-1),
            ys[Tp:].reshape(-1),
        )
        try:
            g, residual = solve_g(problem, check=check)
        except InconsistentTrajectoryError as exc:
            exc.k = self.k
            raise
        return self.bank.U_f @ g, residual

    def peek(self, y_k, check: bool = True) -> np.ndarray:
        """The estimate :meth:`step` would return, without advancing."""
        return self._solve(y_k, check)[0]

    def step(self, y_k, check: bool = True) -> np.ndarray:
        """Consume ``y(k)`` and return ``u_hat(k) = u(k - L)``.

        With ``check=False`` inconsistent windows are accepted (best-fit
        estimate); otherwise the state is left untouched on error.
        """
        u_hat, residual = self._solve(y_k, check)
        self.u_buf.append(u_hat)
        self.y_buf.append(np.asarray(y_k, dtype=np.float64).reshape(-1))
        self.last_residual = residual
        self.k += 1
        return u_hat


def step_algorithm2(state: InverterState, y_k) -> np.ndarray:
    return state.step(y_k)


def run_algorithm2(bank: DataBank, y_stream, init_u=None, init_y=None) -> tuple[Signal, np.ndarray]:
    """Step the real-time estimator over a whole stream.

    Returns ``u_hat`` indexed by the step time ``k`` (so ``u_hat(k)``
    estimates ``u(k - L)``) and the per-step residuals.
    """
    y_stream = as_signal(y_stream, bank.p)
    state = InverterState(bank, init_u, init_y, k=y_stream.start)
    out = np.zeros((len(y_stream), bank.m))
    residuals = np.zeros(len(y_stream))
    for i, y_k in enumerate(y_stream.values):
        out[i] = state.step(y_k)
        residuals[i] = state.last_residual
    return Signal(out, y_stream.start), residuals


__all__ = [
    "CONSISTENCY_RTOL",
    "InversionProblem",
    "InverterState",
    "solve_g",
    "recover_input",
    "nullspace_equality_check",
    "complete_input_tail",
    "feedback_radius",
    "iter_algorithm1",
    "run_algorithm1",
    "step_algorithm2",
    "run_algorithm2",
]
