"""Block-Hankel matrices, persistency of excitation and the four-block data bank."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from ._linalg import numerical_rank
from .errors import PEGenerationError, PreconditionError
from .signals import Signal, as_signal, read_signal_csv, write_signal_csv


def hankel(f, t: int) -> np.ndarray:
    """Block-Hankel matrix with ``t`` block rows built from every sample of ``f``.

    Block ``(r, c)`` is ``f(start + r + c)``; the result has shape
    ``(dim * t, len(f) - t + 1)``.

    >>> hankel([1.0, 2.0, 3.0, 4.0], 2)
    array([[1., 2., 3.],
           [2., 3., 4.]])
    """
    f = as_signal(f)
    if t < 1:
        raise PreconditionError("t must be a positive integer")
    if t > len(f):
        raise PreconditionError(f"t={t} exceeds signal length {len(f)}")
    return _kernels.block_hankel(np.ascontiguousarray(f.values, dtype=np.float64), int(t))


def pe_check(u, order: int) -> bool:
    """True when ``hankel(u, order)`` has full row rank."""
    u = as_signal(u)
    if order < 1:
        raise PreconditionError("order must be a positive integer")
    if len(u) < order:
        return False
    H = hankel(u, order)
    if H.shape[1] < H.shape[0]:
        return False
    return numerical_rank(H) == H.shape[0]


def min_pe_length(q: int, order: int) -> int:
    """Shortest signal whose order-``order`` Hankel matrix can have full row rank."""
    return (q + 1) * order - 1


def generate_pe_input(
    q: int, T: int, order: int, seed: int, tail: int = 0, max_tries: int = 32
) -> Signal:
    """Seeded uniform[-1, 1] input of length ``T + tail``, PE of ``order`` on its first ``T`` samples.

    The ``tail`` samples are drawn from the same generator; data banks need
    ``L`` of them past the excited segment.
    """
    if q < 1 or order < 1:
        raise PreconditionError("q and order must be positive")
    if T < min_pe_length(q, order):
        raise PreconditionError(
            f"length T={T} too short for PE of order {order} in dimension {q}; "
            f"need T >= {min_pe_length(q, order)}"
        )
    if tail < 0:
        raise PreconditionError("tail must be nonnegative")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        values = rng.uniform(-1.0, 1.0, size=(T + tail, q))
        if pe_check(values[:T], order):
            return Signal(values)
    raise PEGenerationError(f"no PE draw of order {order} in {max_tries} attempts")


@dataclass(frozen=True, eq=False)
class DataBank:
    """Hankel blocks ``U_p, Y_p, U_f, Y_fL`` from one experiment of length ``T + L``.

    Built by :func:`build_data_bank`; keeps the raw data so the bank can be
    rebuilt with other window lengths.
    """

    u_d: Signal
    y_d: Signal
    T_p: int
    T_f: int
    L: int
    U_p: np.ndarray = field(repr=False)
    Y_p: np.ndarray = field(repr=False)
    U_f: np.ndarray = field(repr=False)
    Y_fL: np.ndarray = field(repr=False)
    n: int | None = None
    pe_ok: bool | None = None
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    @property
    def T(self) -> int:
        return len(self.u_d) - self.L

    @property
    def m(self) -> int:
        return self.u_d.dim

    @property
    def p(self) -> int:
        return self.y_d.dim

    @property
    def columns(self) -> int:
        return self.U_p.shape[1]

    @property
    def pe_order(self) -> int | None:
        if self.n is None:
            return None
        return self.n + self.T_p + self.T_f + self.L

    @property
    def stacked(self) -> np.ndarray:
        """``[U_p; Y_p; Y_fL]``, the coefficient matrix of the input-recovery solve."""
        if "stacked" not in self._cache:
            self._cache["stacked"] = np.vstack([self.U_p, self.Y_p, self.Y_fL])
        return self._cache["stacked"]

    def rebuild(self, T_p: int | None = None, T_f: int | None = None, L: int | None = None) -> DataBank:
        """Same raw data, different window lengths.

        Changing ``L`` moves samples between the excited segment and the tail.
        """
        return build_data_bank(
            self.u_d,
            self.y_d,
            self.T_p if T_p is None else T_p,
            self.T_f if T_f is None else T_f,
            self.L if L is None else L,
            n=self.n,
        )

    def params(self) -> dict:
        out = {"T_p": self.T_p, "T_f": self.T_f, "L": self.L, "T": self.T}
        if self.n is not None:
            out.update({"n": self.n, "pe_order": self.pe_order, "pe_ok": self.pe_ok})
        return out

    def save(self, directory) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        write_signal_csv(directory / "u_d.csv", self.u_d)
        write_signal_csv(directory / "y_d.csv", self.y_d)
        (directory / "params.json").write_text(json.dumps(self.params(), indent=2, sort_keys=True) + "\n")
        return directory

    @classmethod
    def load(cls, directory) -> DataBank:
        directory = Path(directory)
        params = json.loads((directory / "params.json").read_text())
        bank = build_data_bank(
            read_signal_csv(directory / "u_d.csv"),
            read_signal_csv(directory / "y_d.csv"),
            params["T_p"],
            params["T_f"],
            params["L"],
            n=params.get("n"),
        )
        if "T" in params and params["T"] != bank.T:
            raise PreconditionError(f"params.json says T={params['T']} but data imply T={bank.T}")
        return bank


def build_data_bank(u_d, y_d, T_p: int, T_f: int, L: int, n: int | None = None) -> DataBank:
    """Assemble the data bank from input/output records of equal length ``T + L``.

    ``U_p = H_Tp(u[0, T-T_f-1])``, ``U_f = H_Tf(u[T_p, T-1])``,
    ``Y_p = H_Tp(y[0, T-T_f-1])``, ``Y_fL = H_(Tf+L)(y[T_p, T+L-1])``, all with
    ``T - T_p - T_f + 1`` columns. When the state dimension ``n`` is given the
    bank records whether ``u[0, T-1]`` is PE of order ``n + T_p + T_f + L``.
    """
    u_d = as_signal(u_d)
    y_d = as_signal(y_d)
    if len(u_d) != len(y_d):
        raise PreconditionError(f"u_d has {len(u_d)} samples but y_d has {len(y_d)}")
    if T_p < 1 or T_f < 1 or L < 0:
        raise PreconditionError("need T_p >= 1, T_f >= 1 and L >= 0")
    # Internally the raw data always start at time 0.
    u_d = Signal(u_d.values, 0)
    y_d = Signal(y_d.values, 0)
    T = len(u_d) - L
    if T <= T_p + T_f - 1:
        raise PreconditionError(
            f"data too short: T={T} must exceed T_p + T_f - 1 = {T_p + T_f - 1}"
        )
    U_p = hankel(u_d.segment(0, T - T_f - 1), T_p)
    Y_p = hankel(y_d.segment(0, T - T_f - 1), T_p)
    U_f = hankel(u_d.segment(T_p, T - 1), T_f)
    Y_fL = hankel(y_d.segment(T_p, T + L - 1), T_f + L)
    pe_ok = None
    if n is not None:
        pe_ok = pe_check(u_d.segment(0, T - 1), n + T_p + T_f + L)
    for blk in (U_p, Y_p, U_f, Y_fL):
        blk.setflags(write=False)
    return DataBank(u_d, y_d, T_p, T_f, L, U_p, Y_p, U_f, Y_fL, n=n, pe_ok=pe_ok)


__all__ = [
    "hankel",
    "pe_check",
    "min_pe_length",
    "generate_pe_input",
    "DataBank",
    "build_data_bank",
]
