"""NumPy backend for the Poincare-series shell kernels.

Drop-in fallback for the compiled extension ``_kernels``; identical
signatures.  Every kernel takes

  * ``mats``   -- (n, 4) complex rows (A, B, C, D), det = 1, identity first,
                  grouped in shells of increasing word length,
  * ``offsets``-- (n_shells + 1,) int64 shell boundaries,
  * paired point arrays of equal length P,

and returns per-shell partial sums of shape (n_shells, P) together with
the smallest pole distance met anywhere (the caller guards on it).
Partial sums are kept per shell so the truncation policy can inspect the
tail; points are processed in chunks to bound the broadcast temporaries.
"""

from __future__ import annotations

import numpy as np

_CHUNK_ELEMS = 4_000_000  # complex entries per (group x points) temporary


def _chunk(n_group: int, n_points: int) -> int:
    return max(1, min(n_points, _CHUNK_ELEMS // max(n_group, 1)))


def mobius_apply(mats: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Images gx and derivatives d(gx)/dx for every group element.

    For a det-1 matrix, d(gx)/dx = (C x + D)^(-2).
    """
    a, b, c, d = mats[:, 0:1], mats[:, 1:2], mats[:, 2:3], mats[:, 3:4]
    den = c * x[None, :] + d
    return (a * x[None, :] + b) / den, 1.0 / (den * den)


def _shellsum(t: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    return np.add.reduceat(t, offsets[:-1], axis=0)


def omega_partials(mats, offsets, x, y):
    """sum_g d(gx) / (gx - y)^2, shell by shell."""
    n = mats.shape[0]
    P = x.shape[0]
    out = np.empty((len(offsets) - 1, P), dtype=complex)
    mind = np.inf
    step = _chunk(n, P)
    for i in range(0, P, step):
        gx, dgx = mobius_apply(mats, x[i : i + step])
        diff = gx - y[None, i : i + step]
        mind = min(mind, float(np.abs(diff).min()))
        out[:, i : i + step] = _shellsum(dgx / (diff * diff), offsets)
    return out, mind


def omega_n_partials(mats, offsets, x, y, order):
    """sum_g d(gx)^N / (gx - y)^(2N), shell by shell."""
    n = mats.shape[0]
    P = x.shape[0]
    out = np.empty((len(offsets) - 1, P), dtype=complex)
    mind = np.inf
    step = _chunk(n, P)
    for i in range(0, P, step):
        gx, dgx = mobius_apply(mats, x[i : i + step])
        diff = gx - y[None, i : i + step]
        mind = min(mind, float(np.abs(diff).min()))
        out[:, i : i + step] = _shellsum(dgx**order / diff ** (2 * order), offsets)
    return out, mind


def proj_conn_partials(mats, offsets, x):
    """sum_{g != id} d(gx) / (gx - x)^2; shell 0 (identity) is dropped."""
    body = mats[offsets[1] :]
    n = body.shape[0]
    P = x.shape[0]
    out = np.empty((len(offsets) - 2, P), dtype=complex)
    mind = np.inf
    step = _chunk(n, P)
    off = offsets[1:] - offsets[1]
    for i in range(0, P, step):
        gx, dgx = mobius_apply(body, x[i : i + step])
        diff = gx - x[None, i : i + step]
        mind = min(mind, float(np.abs(diff).min()))
        out[:, i : i + step] = _shellsum(dgx / (diff * diff), off)
    return out, mind


def cauchy_pair_partials(mats, offsets, x, y_plus, y_minus):
    """sum_g d(gx) (1/(gx - y_plus) - 1/(gx - y_minus)), shell by shell."""
    n = mats.shape[0]
    P = x.shape[0]
    out = np.empty((len(offsets) - 1, P), dtype=complex)
    mind = np.inf
    step = _chunk(n, P)
    for i in range(0, P, step):
        gx, dgx = mobius_apply(mats, x[i : i + step])
        dp = gx - y_plus[None, i : i + step]
        dm = gx - y_minus[None, i : i + step]
        mind = min(mind, float(min(np.abs(dp).min(), np.abs(dm).min())))
        out[:, i : i + step] = _shellsum(dgx * (1.0 / dp - 1.0 / dm), offsets)
    return out, mind


def psi_partials(mats, offsets, x, y, limit_pts, order):
    """Quasiform kernel sum, shell by shell:

    sum_g d(gx)^N (1/(gx - y)) prod_l (y - A_l)/(gx - A_l),

    with the 2N-1 points A_l in the limit set.  Only |gx - y| feeds the
    pole-distance guard; gx approaching an A_l is expected for deep words
    and is tamed by the d(gx)^N factor.  A deep orbit point can round
    exactly onto an A_l (the true distance drops below one ulp); the true
    contribution of such a term is below double resolution, so it is
    dropped rather than left to produce inf.
    """
    n = mats.shape[0]
    P = x.shape[0]
    out = np.empty((len(offsets) - 1, P), dtype=complex)
    mind = np.inf
    step = _chunk(n, P)
    for i in range(0, P, step):
        gx, dgx = mobius_apply(mats, x[i : i + step])
        diff = gx - y[None, i : i + step]
        mind = min(mind, float(np.abs(diff).min()))
        t = dgx**order / diff
        for A in limit_pts:
            d = gx - A
            collided = d == 0
            t *= np.where(collided, 0.0, (y[None, i : i + step] - A) / np.where(collided, 1.0, d))
        out[:, i : i + step] = _shellsum(t, offsets)
    return out, mind
