"""Finite vector-valued time series and their CSV form."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import PreconditionError


@dataclass(frozen=True, eq=False)
class Signal:
    """Samples ``f(start), f(start+1), ...`` of a ``dim``-dimensional signal.

    ``values`` has shape ``(length, dim)``; a 1-D array is read as a scalar
    signal. The array is copied and frozen on construction.
    """

    values: np.ndarray
    start: int = 0

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64)
        if vals.ndim == 1:
            vals = vals.reshape(-1, 1)
        if vals.ndim != 2:
            raise PreconditionError(f"signal values must be 1-D or 2-D, got shape {vals.shape}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "start", int(self.start))

    @classmethod
    def zeros(cls, length: int, dim: int, start: int = 0) -> Signal:
        return cls(np.zeros((length, dim)), start)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def stop(self) -> int:
        """One past the last time index."""
        return self.start + len(self)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.start, self.stop)

    def at(self, k: int) -> np.ndarray:
        if not self.start <= k < self.stop:
            raise PreconditionError(f"time {k} outside [{self.start}, {self.stop - 1}]")
        return self.values[k - self.start]

    def segment(self, i: int, j: int) -> Signal:
        """Sub-signal on the closed time interval ``[i, j]``."""
        if j < i - 1 or i < self.start or j >= self.stop:
            raise PreconditionError(
                f"interval [{i}, {j}] outside signal support [{self.start}, {self.stop - 1}]"
            )
        return Signal(self.values[i - self.start : j - self.start + 1], i)

    def window(self, i: int, j: int) -> np.ndarray:
        """Stacked vector ``f_[i,j]`` of length ``dim * (j - i + 1)``."""
        return self.segment(i, j).values.reshape(-1).copy()

    def __eq__(self, other):
        if not isinstance(other, Signal):
            return NotImplemented
        return self.start == other.start and np.array_equal(self.values, other.values)

    def __repr__(self):
        return f"Signal(start={self.start}, length={len(self)}, dim={self.dim})"


def as_signal(obj, dim: int | None = None, start: int = 0) -> Signal:
    """Coerce arrays to :class:`Signal`; signals pass through unchanged."""
    sig = obj if isinstance(obj, Signal) else Signal(obj, start)
    if dim is not None and sig.dim != dim and len(sig) > 0:
        raise PreconditionError(f"expected a signal of dimension {dim}, got {sig.dim}")
    if dim is not None and len(sig) == 0 and sig.dim != dim:
        sig = Signal(np.zeros((0, dim)), sig.start)
    return sig


def write_signal_csv(path, signal: Signal, header: bool = True) -> None:
    """Write ``k, v0, v1, ...`` rows with shortest round-trip float formatting."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header:
            writer.writerow(["k"] + [f"v{i}" for i in range(signal.dim)])
        for k, row in zip(signal.times, signal.values):
            writer.writerow([int(k)] + [repr(float(v)) for v in row])


def read_signal_csv(path) -> Signal:
    path = Path(path)
    times = []
    rows = []
    with path.open(newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            try:
                k = int(rec[0])
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise PreconditionError(f"{path}:{lineno}: bad time index {rec[0]!r}") from None
            times.append(k)
            rows.append([float(c) for c in rec[1:]])
    if not rows:
        raise PreconditionError(f"{path}: no samples")
    if len({len(r) for r in rows}) != 1:
        raise PreconditionError(f"{path}: rows have differing numbers of components")
    times = np.asarray(times)
    if np.any(np.diff(times) != 1):
        raise PreconditionError(f"{path}: time index must increase by one per row")
    return Signal(np.asarray(rows), int(times[0]))
