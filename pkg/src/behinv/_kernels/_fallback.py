"""NumPy implementations of the compiled kernels in ``_core.pyx``.

Signatures and return values match the extension exactly so the two can be
swapped at import time.
"""

import numpy as np


def simulate_lti(A, B, C, D, x0, u):
    T = u.shape[0]
    x = np.empty((T + 1, A.shape[0]))
    y = np.empty((T, C.shape[0]))
    x[0] = x0
    for k in range(T):
        y[k] = C @ x[k] + D @ u[k]
        x[k + 1] = A @ x[k] + B @ u[k]
    return x, y


def block_hankel(values, t):
    length, q = values.shape
    windows = np.lib.stride_tricks.sliding_window_view(values, t, axis=0)
    # windows: (cols, q, t) -> rows ordered as (block r, component i)
    return np.ascontiguousarray(windows.transpose(2, 1, 0).reshape(q * t, length - t + 1))


def admm_box(w0, Q2, F, r, lo, hi, rho, max_iter, tol):
    v = np.clip(r, lo, hi)
    lam = np.zeros_like(r)
    w = np.zeros_like(w0)
    prim = dual = 0.0
    it = 0
    while it < max_iter:
        it += 1
        w = w0 + Q2 @ (v - r - lam)
        fw = F @ w + r
        v_new = np.clip(fw + lam, lo, hi)
        lam = lam + fw - v_new
        prim = float(np.linalg.norm(fw - v_new))
        dual = float(rho * np.linalg.norm(F.T @ (v_new - v)))
        v = v_new
        if prim <= tol and dual <= tol:
            break
    return w, v, lam, it, prim, dual
