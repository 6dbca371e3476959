"""Bottom eigenpair of a symmetric tridiagonal matrix.

The eigenvalue is located by multisection on the Sturm count (the number of
negative pivots of the LDL^T factorisation of ``T - x``), which is
deterministic and backward stable.  The eigenvector then comes from a few
steps of inverse iteration.
"""

import numpy as np
from scipy.linalg import solve_banded

from .errors import ConvergenceError

_TINY = np.finfo(float).tiny


def sturm_count(diag, off, shifts):
    """Number of eigenvalues strictly below each entry of ``shifts``.

    ``diag`` has length n, ``off`` length n-1.  All shifts are processed in
    one sweep over the rows.
    """
    x = np.atleast_1d(np.asarray(shifts, dtype=float))
    off2 = np.asarray(off, dtype=float) ** 2
    count = np.zeros(x.shape, dtype=np.int64)
    piv = diag[0] - x
    piv[piv == 0.0] = -_TINY
    count += piv < 0
    for a, b2 in zip(diag[1:], off2):
        piv = (a - x) - b2 / piv
        piv[piv == 0.0] = -_TINY
        count += piv < 0
    return count


def bottom_eigenvalue(diag, off, trial=None, sections=255, max_rounds=200):
    """Smallest eigenvalue by Sturm multisection.

    The bracket starts as ``[Gershgorin lower bound, min Rayleigh quotient]``
    where the quotients come from the unit vectors and the optional ``trial``
    vector; it shrinks by a factor ``sections + 1`` per sweep until it
    reaches rounding level.
    """
    diag = np.asarray(diag, dtype=float)
    off = np.asarray(off, dtype=float)
    a = np.abs(off)
    radius = np.zeros_like(diag)
    radius[:-1] += a
    radius[1:] += a
    lo = float(np.min(diag - radius))
    hi = float(np.min(diag))
    if trial is not None and np.any(trial):
        t = np.asarray(trial, dtype=float)
        hi = min(hi, float(t @ tridiag_matvec(diag, off, t) / (t @ t)))
    hi = min(hi + 1e-12 * max(1.0, abs(hi)), float(np.min(diag)))
    scale = float(np.max(np.abs(diag) + radius))
    atol = 4.0 * np.finfo(float).eps * max(scale, 1.0)
    for _ in range(max_rounds):
        if hi - lo <= atol:
            break
        xs = np.linspace(lo, hi, sections + 2)[1:-1]
        counts = sturm_count(diag, off, xs)
        k = int(np.searchsorted(counts, 1))  # counts are nondecreasing in x
        new_hi = xs[k] if k < xs.size else hi
        new_lo = xs[k - 1] if k > 0 else lo
        if new_hi - new_lo >= hi - lo:
            break
        lo, hi = new_lo, new_hi
    else:
        raise ConvergenceError("Sturm multisection did not shrink to tolerance",
                               diagnostics={"lo": lo, "hi": hi})
    return 0.5 * (lo + hi)


def inverse_iteration(diag, off, shift, start=None, tol=1e-13, max_iter=50):
    """Eigenvector of the eigenvalue nearest ``shift``, unit Euclidean norm.

    Stops when successive iterates differ by less than ``tol`` or the
    Rayleigh residual is at rounding level.
    """
    n = diag.size
    scale = max(1.0, float(np.max(np.abs(diag))))
    # nudge the shift off the eigenvalue so the factorisation stays regular
    sigma = shift - 64.0 * np.finfo(float).eps * scale
    ab = np.zeros((3, n))
    ab[0, 1:] = off
    ab[1] = diag - sigma
    ab[2, :-1] = off
    v = np.ones(n) if start is None else np.asarray(start, dtype=float).copy()
    v /= np.linalg.norm(v)
    for it in range(1, max_iter + 1):
        w = solve_banded((1, 1), ab, v, check_finite=False)
        w /= np.linalg.norm(w)
        if w @ v < 0:
            w = -w
        delta = np.linalg.norm(w - v)
        v = w
        if delta < tol:
            return v, it
        # nearly degenerate pairs stall the vector but not the residual
        Tv = tridiag_matvec(diag, off, v)
        if np.linalg.norm(Tv - (v @ Tv) * v) <= 256.0 * np.finfo(float).eps * scale:
            return v, it
    raise ConvergenceError("inverse iteration did not converge",
                           diagnostics={"shift": shift, "last_change": float(delta)})


def tridiag_matvec(diag, off, v):
    out = diag * v
    out[:-1] += off * v[1:]
    out[1:] += off * v[:-1]
    return out
