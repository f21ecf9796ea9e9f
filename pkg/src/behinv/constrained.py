"""Box-constrained output tracking with a data bank.

Solves::

    min_g  ||Y_fL g - y*||^2
    s.t.   [U_p; Y_p] g = [u_past; y_past],   lower <= U_f g <= upper

The equality constraint is removed by writing ``g = g0 + Z w`` with ``Z`` a
basis of ``N([U_p; Y_p])``. The remaining box constraint acts on
``v = U_f g``, which is not axis-aligned in ``w``, so the reduced problem is
split on ``v`` and solved by ADMM. The ADMM answer is then polished by
re-solving the equality-constrained least-squares problem on its active set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._linalg import null_space, pinv
from .errors import ConvergenceError, InfeasibleHistoryError, PreconditionError
from .hankel import DataBank

BOX_TOL = 1e-8
EQUALITY_RTOL = 1e-6
# Rank cut for products of data matrices (reduced problem), whose numerically
# zero singular values sit well above the size-based default.
DERIVED_RTOL = 1e-9


@dataclass(frozen=True)
class SolverConfig:
    rho: float = 1.0
    max_iter: int = 50_000
    tol: float = 1e-11
    polish: bool = True


@dataclass(frozen=True, eq=False)
class TrackingProblem:
    """Histories, desired output ``y*`` over ``T_f + L`` samples, and input bounds.

    ``lower``/``upper`` are either per-channel (length ``m``, repeated over
    the horizon) or per-sample (length ``m * T_f``); infinities are allowed.
    """

    bank: DataBank
    u_past: np.ndarray
    y_past: np.ndarray
    y_star: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        b = self.bank
        sizes = {"u_past": b.m * b.T_p, "y_past": b.p * b.T_p, "y_star": b.p * (b.T_f + b.L)}
        for name, size in sizes.items():
            vec = np.asarray(getattr(self, name), dtype=np.float64).reshape(-1)
            if vec.size != size:
                raise PreconditionError(f"{name} must have {size} entries, got {vec.size}")
            object.__setattr__(self, name, vec)
        for name in ("lower", "upper"):
            vec = np.asarray(getattr(self, name), dtype=np.float64).reshape(-1)
            if vec.size == b.m:
                vec = np.tile(vec, b.T_f)
            if vec.size != b.m * b.T_f:
                raise PreconditionError(f"{name} must have {b.m} or {b.m * b.T_f} entries")
            object.__setattr__(self, name, vec)
        if np.any(self.lower > self.upper):
            raise PreconditionError("lower bound exceeds upper bound")

    @classmethod
    def unconstrained(cls, bank, u_past, y_past, y_star) -> TrackingProblem:
        inf = np.full(bank.m, np.inf)
        return cls(bank, u_past, y_past, y_star, -inf, inf)


@dataclass(frozen=True, eq=False)
class TrackingResult:
    u: np.ndarray
    objective: float
    g: np.ndarray
    iterations: int
    primal_residual: float
    dual_residual: float
    equality_residual: float
    box_violation: float
    polished: bool


def _box_violation(v, lo, hi) -> float:
    if v.size == 0:
        return 0.0
    return float(max(np.max(lo - v, initial=0.0), np.max(v - hi, initial=0.0)))


def _constrained_lstsq(M, c, F_A, b_A):
    """min ||M w - c|| s.t. F_A w = b_A, minimum-norm; None if the equality is inconsistent."""
    if F_A.shape[0] == 0:
        return pinv(M, DERIVED_RTOL) @ c
    w_A = pinv(F_A, DERIVED_RTOL) @ b_A
    if np.linalg.norm(F_A @ w_A - b_A) > 1e-9 * (1.0 + np.linalg.norm(b_A)):
        return None
    Z_A = null_space(F_A, DERIVED_RTOL)
    if Z_A.shape[1] == 0:
        return w_A
    scale = np.linalg.norm(M, 2) if M.size else 0.0
    z = pinv(M @ Z_A, DERIVED_RTOL, DERIVED_RTOL * scale) @ (c - M @ w_A)
    return w_A + Z_A @ z


def _polish(M, c, F, r, lo, hi, v, scale_tol):
    """Re-solve on the bounds ADMM left active."""
    at_lo = v <= lo + scale_tol * (1.0 + np.abs(lo))
    at_hi = v >= hi - scale_tol * (1.0 + np.abs(hi))
    active = at_lo | at_hi
    bound = np.where(at_lo, lo, hi)
    w = _constrained_lstsq(M, c, F[active], bound[active] - r[active])
    return w


def track(problem: TrackingProblem, config: SolverConfig | None = None) -> TrackingResult:
    config = config or SolverConfig()
    bank = problem.bank
    E = np.vstack([bank.U_p, bank.Y_p])
    e = np.concatenate([problem.u_past, problem.y_past])
    g0 = pinv(E) @ e
    eq_res = float(np.linalg.norm(E @ g0 - e))
    if eq_res > EQUALITY_RTOL * (1.0 + np.linalg.norm(e)):
        raise InfeasibleHistoryError(
            f"past windows are not a trajectory of the data-generating system (residual {eq_res:.3g})"
        )
    lo, hi = problem.lower, problem.upper
    Z = null_space(E)
    M = bank.Y_fL @ Z
    c = problem.y_star - bank.Y_fL @ g0
    F = bank.U_f @ Z
    r = bank.U_f @ g0

    def objective(w):
        return float(np.sum((M @ w - c) ** 2))

    iterations, prim, dual, polished = 0, 0.0, 0.0, False
    if Z.shape[1] == 0:
        w = np.zeros(0)
    elif np.all(np.isinf(lo)) and np.all(np.isinf(hi)):
        w = pinv(M, DERIVED_RTOL) @ c
    else:
        rho = config.rho
        P = pinv(2.0 * M.T @ M + rho * F.T @ F, DERIVED_RTOL)
        w_base = np.ascontiguousarray(2.0 * P @ (M.T @ c))
        Q2 = np.ascontiguousarray(rho * P @ F.T)
        w, v, _, iterations, prim, dual = _kernels.admm_box(
            w_base,
            Q2,
            np.ascontiguousarray(F),
            np.ascontiguousarray(r),
            np.ascontiguousarray(lo),
            np.ascontiguousarray(hi),
            float(rho),
            int(config.max_iter),
            float(config.tol),
        )
        w = np.asarray(w)
        converged = prim <= config.tol and dual <= config.tol
        if config.polish:
            w_pol = _polish(M, c, F, r, lo, hi, np.asarray(v), 1e-6)
            if w_pol is not None:
                feasible = _box_violation(F @ w_pol + r, lo, hi) <= 1e-10 * (1.0 + np.max(np.abs(r), initial=0.0))
                better = objective(w_pol) <= objective(w) * (1.0 + 1e-9) + 1e-14
                if feasible and (better or not converged):
                    w, polished = w_pol, True
        if not converged and not polished:
            raise ConvergenceError(
                f"ADMM did not converge in {iterations} iterations "
                f"(primal {prim:.3g}, dual {dual:.3g})",
                primal_residual=prim,
                dual_residual=dual,
                iterations=iterations,
            )

    g = g0 + Z @ w
    u = bank.U_f @ g
    violation = _box_violation(u, lo, hi)
    if violation > BOX_TOL and Z.shape[1] == 0:
        raise InfeasibleHistoryError("the history pins the input outside the box")
    if violation > BOX_TOL:
        raise ConvergenceError(
            f"solution violates the input box by {violation:.3g}",
            primal_residual=prim,
            dual_residual=dual,
            iterations=iterations,
        )
    return TrackingResult(
        u=u,
        objective=float(np.sum((bank.Y_fL @ g - problem.y_star) ** 2)),
        g=g,
        iterations=int(iterations),
        primal_residual=float(prim),
        dual_residual=float(dual),
        equality_residual=float(np.linalg.norm(E @ g - e)),
        box_violation=violation,
        polished=polished,
    )


__all__ = ["SolverConfig", "TrackingProblem", "TrackingResult", "track"]
