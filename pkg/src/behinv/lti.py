"""Discrete-time state-space systems, invertibility tests and the model-based inverse.

The model-based L-delay inverse built here needs the plant matrices; the
data-driven routines in :mod:`behinv.inversion` never do. It serves as the
reference the data-driven path is checked against.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from ._linalg import numerical_rank, pinv
from .errors import (
    NoInverseError,
    NotObservableError,
    PreconditionError,
    UnsupportedSystemError,
)
from .signals import Signal, as_signal

# ||K T_L - [I, 0]||_F above this means the pseudoinverse did not produce a left inverse.
K_RESIDUAL_TOL = 1e-10


def _matrix(value, name):
    arr = np.array(value, dtype=np.float64)
    if arr.ndim != 2:
        raise PreconditionError(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateSpaceSystem:
    """``x(k+1) = A x(k) + B u(k)``, ``y(k) = C x(k) + D u(k)``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        for name in "ABCD":
            object.__setattr__(self, name, _matrix(getattr(self, name), name))
        n, m, p = self.A.shape[0], self.B.shape[1], self.C.shape[0]
        if n == 0 or m == 0 or p == 0:
            raise PreconditionError("n, m and p must all be positive")
        if self.A.shape != (n, n):
            raise PreconditionError(f"A must be square, got {self.A.shape}")
        if self.B.shape != (n, m):
            raise PreconditionError(f"B must be {n}x{m}, got {self.B.shape}")
        if self.C.shape != (p, n):
            raise PreconditionError(f"C must be {p}x{n}, got {self.C.shape}")
        if self.D.shape != (p, m):
            raise PreconditionError(f"D must be {p}x{m}, got {self.D.shape}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in "ABCD"}

    @classmethod
    def from_dict(cls, data: dict) -> StateSpaceSystem:
        missing = [k for k in "ABCD" if k not in data]
        if missing:
            raise PreconditionError(f"system description lacks {', '.join(missing)}")
        return cls(*(data[k] for k in "ABCD"))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> StateSpaceSystem:
        return cls.from_dict(json.loads(Path(path).read_text()))


def simulate(sys: StateSpaceSystem, x0, u) -> tuple[Signal, Signal]:
    """Run the plant from ``x0`` under input ``u``.

    Returns the state (one sample longer than ``u``, ending in the terminal
    state) and the output, both starting at ``u.start``.
    """
    u = as_signal(u)
    if u.dim != sys.m:
        raise PreconditionError(f"input has dimension {u.dim}, system expects {sys.m}")
    if len(u) < 1:
        raise PreconditionError("input signal must have at least one sample")
    x0 = np.zeros(sys.n) if x0 is None else np.asarray(x0, dtype=np.float64).reshape(-1)
    if x0.shape != (sys.n,):
        raise PreconditionError(f"x0 must have dimension {sys.n}, got {x0.shape[0]}")
    c = np.ascontiguousarray
    x, y = _kernels.simulate_lti(
        c(sys.A), c(sys.B), c(sys.C), c(sys.D), c(x0), c(u.values, dtype=np.float64)
    )
    return Signal(x, u.start), Signal(y, u.start)


def markov_parameters(sys: StateSpaceSystem, count: int) -> list[np.ndarray]:
    """``[D, CB, CAB, ..., C A^(count-2) B]``."""
    params = [np.array(sys.D)]
    AkB = np.array(sys.B)
    for _ in range(count - 1):
        params.append(sys.C @ AkB)
        AkB = sys.A @ AkB
    return params


def toeplitz_matrix(sys: StateSpaceSystem, t: int) -> np.ndarray:
    """Block lower-triangular input-to-output map over ``t + 1`` samples."""
    if t < 0:
        raise PreconditionError("t must be nonnegative")
    m, p = sys.m, sys.p
    h = markov_parameters(sys, t + 1)
    out = np.zeros((p * (t + 1), m * (t + 1)))
    for i in range(t + 1):
        for j in range(i + 1):
            out[i * p : (i + 1) * p, j * m : (j + 1) * m] = h[i - j]
    return out


def observability_matrix(sys: StateSpaceSystem, L: int) -> np.ndarray:
    """Stack of ``C, CA, ..., CA^L``."""
    if L < 0:
        raise PreconditionError("L must be nonnegative")
    blocks = [np.array(sys.C)]
    for _ in range(L):
        blocks.append(blocks[-1] @ sys.A)
    return np.vstack(blocks)


def controllability_matrix(sys: StateSpaceSystem) -> np.ndarray:
    blocks = [np.array(sys.B)]
    for _ in range(sys.n - 1):
        blocks.append(sys.A @ blocks[-1])
    return np.hstack(blocks)


def is_controllable(sys: StateSpaceSystem) -> bool:
    return numerical_rank(controllability_matrix(sys)) == sys.n


def is_observable(sys: StateSpaceSystem) -> bool:
    return numerical_rank(observability_matrix(sys, sys.n - 1)) == sys.n


def toeplitz_rank(sys: StateSpaceSystem, t: int) -> int:
    """``rank(T_t)`` with the convention ``rank(T_-1) = 0``."""
    if t < 0:
        return 0
    return numerical_rank(toeplitz_matrix(sys, t))


def has_delay_inverse(sys: StateSpaceSystem, L: int) -> bool:
    """Rank test ``rank(T_L) - rank(T_{L-1}) == m``."""
    if sys.m > sys.p:
        return False
    return toeplitz_rank(sys, L) - toeplitz_rank(sys, L - 1) == sys.m


def inherent_delay(sys: StateSpaceSystem, L_max: int | None = None) -> int | None:
    """Smallest ``L <= L_max`` passing the rank test, or ``None``.

    ``L_max`` defaults to the state dimension.
    """
    if sys.m > sys.p:
        raise UnsupportedSystemError(
            f"system has m={sys.m} inputs and p={sys.p} outputs; inversion needs m <= p"
        )
    if L_max is None:
        L_max = sys.n
    if L_max < 0:
        raise PreconditionError("L_max must be nonnegative")
    prev = 0
    for L in range(L_max + 1):
        cur = toeplitz_rank(sys, L)
        if cur - prev == sys.m:
            return L
        prev = cur
    return None


def observability_index(sys: StateSpaceSystem) -> int:
    """Least ``l >= 1`` with ``rank([C; CA; ...; CA^(l-1)]) = n``."""
    for ell in range(1, sys.n + 1):
        if numerical_rank(observability_matrix(sys, ell - 1)) == sys.n:
            return ell
    raise NotObservableError("(C, A) is not observable")


@dataclass(frozen=True, eq=False)
class InverseRealization:
    """State-space L-delay inverse driven by stacked output windows ``y_[k,k+L]``.

    ``x(k+1) = A_tilde x(k) + B_tilde y_[k,k+L]``,
    ``u(k) = C_tilde x(k) + D_tilde y_[k,k+L]``.
    """

    A_tilde: np.ndarray
    B_tilde: np.ndarray
    C_tilde: np.ndarray
    D_tilde: np.ndarray
    L: int
    K: np.ndarray
    residual: float

    @property
    def p(self) -> int:
        return self.B_tilde.shape[1] // (self.L + 1)

    @property
    def m(self) -> int:
        return self.C_tilde.shape[0]


def left_annihilator(sys: StateSpaceSystem, L: int) -> tuple[np.ndarray, float]:
    """Minimum-norm ``K`` with ``K T_L = [I_m, 0]`` and the Frobenius residual."""
    T_L = toeplitz_matrix(sys, L)
    target = np.zeros((sys.m, sys.m * (L + 1)))
    target[:, : sys.m] = np.eye(sys.m)
    K = target @ pinv(T_L)
    return K, float(np.linalg.norm(K @ T_L - target))


def build_model_inverse(sys: StateSpaceSystem, L: int) -> InverseRealization:
    if sys.m > sys.p:
        raise UnsupportedSystemError(f"m={sys.m} > p={sys.p}; no left inverse exists")
    if L < 0:
        raise PreconditionError("L must be nonnegative")
    if not has_delay_inverse(sys, L):
        raise NoInverseError(f"rank(T_L) - rank(T_(L-1)) != m at L={L}")
    K, residual = left_annihilator(sys, L)
    if residual > K_RESIDUAL_TOL:
        raise NoInverseError(f"||K T_L - [I, 0]|| = {residual:.3g} at L={L}")
    O_L = observability_matrix(sys, L)
    KO = K @ O_L
    return InverseRealization(
        A_tilde=sys.A - sys.B @ KO,
        B_tilde=sys.B @ K,
        C_tilde=-KO,
        D_tilde=K,
        L=L,
        K=K,
        residual=residual,
    )


def simulate_inverse(inv: InverseRealization, x0, y) -> Signal:
    """Recover ``u(k)`` for ``k`` in ``[y.start, y.stop - L - 1]``."""
    y = as_signal(y)
    L = inv.L
    if y.dim != inv.p:
        raise PreconditionError(f"output has dimension {y.dim}, inverse expects {inv.p}")
    if len(y) < L + 1:
        raise PreconditionError(f"need at least L+1={L + 1} output samples, got {len(y)}")
    n = inv.A_tilde.shape[0]
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=np.float64).reshape(-1)
    if x.shape != (n,):
        raise PreconditionError(f"x0 must have dimension {n}")
    steps = len(y) - L
    # Stacked windows y_[k,k+L] as rows.
    windows = np.lib.stride_tricks.sliding_window_view(y.values, L + 1, axis=0)
    windows = windows.transpose(0, 2, 1).reshape(steps, -1)
    u = np.empty((steps, inv.m))
    for k in range(steps):
        u[k] = inv.C_tilde @ x + inv.D_tilde @ windows[k]
        x = inv.A_tilde @ x + inv.B_tilde @ windows[k]
    return Signal(u, y.start)


def inverse_is_stable(inv: InverseRealization, margin: float = 1.0) -> bool:
    """True when every eigenvalue of ``A_tilde`` lies strictly inside ``margin``."""
    return bool(np.max(np.abs(np.linalg.eigvals(inv.A_tilde))) < margin)


def io_residual(sys: StateSpaceSystem, x_k, u_window, y_window, L: int) -> float:
    """Norm of ``y_[k,k+L] - O_L x(k) - T_L u_[k,k+L]``."""
    return float(
        np.linalg.norm(
            np.asarray(y_window)
            - observability_matrix(sys, L) @ np.asarray(x_k)
            - toeplitz_matrix(sys, L) @ np.asarray(u_window)
        )
    )


def is_trajectory(sys: StateSpaceSystem, u_window, y_window, atol: float = 1e-8) -> bool:
    """Whether stacked ``(u, y)`` windows of equal length admit some initial state."""
    u_window = np.asarray(u_window, dtype=np.float64)
    y_window = np.asarray(y_window, dtype=np.float64)
    length = u_window.size // sys.m
    if u_window.size != length * sys.m or y_window.size != length * sys.p or length == 0:
        raise PreconditionError("windows must cover the same number of samples")
    O = observability_matrix(sys, length - 1)
    rhs = y_window - toeplitz_matrix(sys, length - 1) @ u_window
    x0 = pinv(O) @ rhs
    return float(np.linalg.norm(O @ x0 - rhs)) <= atol * (1.0 + np.linalg.norm(rhs))


__all__ = [
    "StateSpaceSystem",
    "InverseRealization",
    "simulate",
    "markov_parameters",
    "toeplitz_matrix",
    "observability_matrix",
    "controllability_matrix",
    "is_controllable",
    "is_observable",
    "toeplitz_rank",
    "has_delay_inverse",
    "inherent_delay",
    "observability_index",
    "left_annihilator",
    "build_model_inverse",
    "simulate_inverse",
    "inverse_is_stable",
    "io_residual",
    "is_trajectory",
]
