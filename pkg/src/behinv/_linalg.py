"""SVD-based rank, pseudoinverse and null space with one shared tolerance.

Singular values count toward the rank when ``s > rtol * s_max``. The default
``rtol`` is ``max(rows, cols) * eps``; set ``BEHINV_RANK_TOL`` or call
:func:`set_rank_tol` to override it globally.
"""

import contextlib
import os

import numpy as np

_EPS = np.finfo(np.float64).eps
_rank_tol_override = None


def _env_rank_tol():
    raw = os.environ.get("BEHINV_RANK_TOL")
    if raw is None or raw.strip() == "":
        return None
    value = float(raw)
    if not value > 0:
        raise ValueError(f"BEHINV_RANK_TOL must be positive, got {raw!r}")
    return value


def get_rank_tol():
    """The active relative rank tolerance, or ``None`` for the size-based default."""
    if _rank_tol_override is not None:
        return _rank_tol_override
    return _env_rank_tol()


def set_rank_tol(value):
    global _rank_tol_override
    if value is not None and not value > 0:
        raise ValueError("rank tolerance must be positive")
    _rank_tol_override = value


@contextlib.contextmanager
def rank_tol(value):
    """Temporarily override the relative rank tolerance."""
    global _rank_tol_override
    saved = _rank_tol_override
    set_rank_tol(value)
    try:
        yield
    finally:
        _rank_tol_override = saved


def _threshold(s, shape, rtol):
    if rtol is None:
        rtol = get_rank_tol()
    if rtol is None:
        rtol = max(shape) * _EPS
    return rtol * (s[0] if s.size else 0.0)


def numerical_rank(M, rtol=None):
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > _threshold(s, M.shape, rtol)))


def pinv(M, rtol=None, atol=0.0):
    """Moore-Penrose pseudoinverse truncated at the shared rank tolerance.

    ``atol`` adds an absolute floor, for products whose own largest singular
    value may already be roundoff.
    """
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    rows, cols = M.shape
    if M.size == 0:
        return np.zeros((cols, rows))
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros((cols, rows))
    keep = s > max(_threshold(s, M.shape, rtol), atol)
    return (Vt[keep].T / s[keep]) @ U[:, keep].T


def null_space(M, rtol=None):
    """Orthonormal basis (as columns) of the numerical null space of ``M``."""
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    cols = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(cols)
    U, s, Vt = np.linalg.svd(M, full_matrices=True)
    r = 0 if s[0] == 0.0 else int(np.count_nonzero(s > _threshold(s, M.shape, rtol)))
    return Vt[r:].T.copy()
