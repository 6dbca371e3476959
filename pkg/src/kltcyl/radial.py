"""Euclidean one-bound-state constant from the radial ground state.

The optimiser of ``(|grad u|^2 + |u|^2) / ||u||_p^2`` on R^d is, up to
scaling, the positive radial solution of
``-u'' - (d-1)/r u' + u = u^(p-1)`` with ``u'(0) = 0``.  It is found by
shooting on ``u(0)``: too large and the trajectory crosses zero, too small
and it turns back up before decaying.
"""

import math

import numpy as np
from scipy.integrate import solve_ivp

from .errors import BracketError, ParameterError


def _rhs(d, p):
    def f(r, y):
        u, up = y[0], y[1]
        upp = u - abs(u) ** (p - 2) * u - (d - 1) / r * up
        return [up, upp, (up * up + u * u) * r ** (d - 1), abs(u) ** p * r ** (d - 1)]

    return f


def _shoot(a, d, p, r_max):
    """Integrate from a small r0 using the series ``u = a + c r^2``."""
    r0 = 1e-6
    c = (a - a ** (p - 1)) / (2.0 * d)
    y0 = [a + c * r0**2, 2 * c * r0, 0.0, 0.0]

    def crossed(r, y):
        return y[0]

    crossed.terminal = True
    crossed.direction = -1

    def turned(r, y):
        return y[1]

    turned.terminal = True
    turned.direction = 1

    sol = solve_ivp(_rhs(d, p), (r0, r_max), y0, method="DOP853", rtol=1e-12, atol=1e-14,
                    events=(crossed, turned))
    if sol.t_events[0].size:
        return +1, sol
    if sol.t_events[1].size:
        return -1, sol
    return 0, sol


def _check_range(d, p):
    if d < 1 or int(d) != d:
        raise ParameterError(f"d must be a positive integer, got {d}")
    if not p > 2:
        raise ParameterError(f"need p > 2, got {p}")
    if d >= 3 and not p < 2.0 * d / (d - 2):
        raise ParameterError(f"p = {p} must lie below 2d/(d-2) = {2 * d / (d - 2)} for d = {d}")


def radial_ground_state(d, p, r_max=60.0, tol=1e-15):
    """Bisect the shooting height; returns ``(a, sol)`` for the undershooting side."""
    _check_range(d, p)
    lo = 1.0 + 1e-9
    s_lo, _ = _shoot(lo, d, p, r_max)
    if s_lo != -1:
        raise BracketError(f"shooting from u(0) = {lo} does not undershoot (d={d}, p={p})")
    hi = 2.0
    for _ in range(60):
        s_hi, _ = _shoot(hi, d, p, r_max)
        if s_hi == +1:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise BracketError(f"no overshooting height found for d={d}, p={p}")
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        side, _ = _shoot(mid, d, p, r_max)
        if side == +1:
            hi = mid
        else:
            lo = mid
    return lo, _shoot(lo, d, p, r_max)[1]


def sphere_area(d):
    """Surface measure of the unit sphere in R^d (2 for d = 1)."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def radial_quotient(d, p, r_max=60.0):
    """Minimal value of ``(|grad u|^2 + |u|^2)/||u||_p^2`` on R^d.

    The integrals ride along the shooting ODE and are cut where the
    undershooting trajectory starts to turn back (where ``u`` is already at
    rounding level, which enters the stationary quotient only quadratically).
    """
    a, sol = radial_ground_state(d, p, r_max=r_max)
    energy, lp = sol.y[2, -1], sol.y[3, -1]
    area = sphere_area(d)
    return area * energy / (area * lp) ** (2.0 / p), a


def radial_gns_constant(d, p):
    """``L^1_{gamma,d} = Q_min ** -(gamma + d/2)`` with ``gamma + d/2 = p/(p-2)``."""
    Q, _ = radial_quotient(d, p)
    return Q ** (-p / (p - 2.0))


def profile(d, p, r):
    """Ground-state profile sampled at ``r`` (zero beyond the trusted range)."""
    a, sol = radial_ground_state(d, p)
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = r <= sol.t[-1]
    sol2 = solve_ivp(_rhs(d, p), (sol.t[0], sol.t[-1]), sol.y[:, 0], method="DOP853", rtol=1e-12,
                     atol=1e-14, dense_output=True)
    out[inside] = sol2.sol(np.maximum(r[inside], sol.t[0]))[0]
    return out
