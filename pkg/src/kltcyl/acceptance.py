"""Acceptance checks, one function per criterion.

Each check returns a :class:`CriterionResult`; :func:`run_all` runs them in
order.  ``quick=True`` shrinks sample counts and sweep sizes (used by
``kltcyl verify --quick``); tolerances are never relaxed.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
import math
import time

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from . import params as _p
from .cylinder import (CylinderPotential, ground_state_2d_oracle, ground_state_symmetric,
                       instability_coefficient, operator_threshold, symmetric_potential)
from .grids import Grid1D
from .line import (SampledPotential1D, ground_state_1d, keller_gap, lq_norm_1d, optimal_samples,
                   sample_potential, default_line_grid)
from .manifold import sphere_spec
from .variational import (OptimizerConfig, euclidean_constant, evaluate_K, search_threshold,
                          solve_capital_lambda, symmetry_fraction)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    elapsed: float
    budget: float
    values: dict = field(default_factory=dict)

    @property
    def within_budget(self):
        return self.elapsed <= self.budget

    def line(self):
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.number:2d} {self.name}: {self.detail} ({self.elapsed:.1f}s / {self.budget:.0f}s)"

    def record(self):
        return {"criterion": self.number, "name": self.name, "passed": self.passed,
                "detail": self.detail, "budget_s": self.budget, "values": self.values}


def _timed(number, name, budget):
    def wrap(fn):
        def run(quick=False):
            t0 = time.perf_counter()
            passed, detail, values = fn(quick)
            return CriterionResult(number, name, bool(passed), detail, time.perf_counter() - t0, budget,
                                   values)

        run.number = number
        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run

    return wrap


def _sphere2():
    return _p.make_params(2, 2.0), sphere_spec(2)


def mu_star_closed(params=None):
    """``mu1 3^(-3/4)`` for d = 2, q = 2 (upper end of the interval with lambda1 = 1)."""
    params = params or _p.make_params(2, 2.0)
    rp = _p.rigidity_params_for(params, sphere_spec(params.d))
    return _p.mu_star_bounds(rp, params)[1]


@_timed(1, "equality case on the line", 5.0)
def criterion_1(quick=False):
    """V1 on [-20, 20] with n = 4000, Richardson with n = 8001: lambda1 = (q-1)^2 within 1e-5."""
    errs = {}
    for q in (2.0, 3.0):
        P = _p.make_params(2, q)
        V = sample_potential(_p.optimal_potential(_p.mu_one(P), P), Grid1D.symmetric(20.0, 4000))
        errs[q] = abs(ground_state_1d(V).lambda1 - (q - 1.0) ** 2)
    worst = max(errs.values())
    return worst <= 1e-5, f"max |lambda1 - (q-1)^2| = {worst:.2e}", {"errors": errs}


@_timed(2, "mu1 closed form vs quadrature", 1.0)
def criterion_2(quick=False):
    errs = {}
    for q in (1.5, 2.0, 2.5, 3.0, 5.0):
        P = _p.make_params(2, q)
        # cosh(s)^-2 = 4 e^{-2s} / (1 + e^{-2s})^2, safe for large s
        integrand = lambda s: (q * (q - 1.0) * 4.0 * math.exp(-2 * s) / (1 + math.exp(-2 * s)) ** 2) ** q
        val, _ = quad(integrand, 0.0, math.inf, epsabs=0.0, epsrel=1e-13, limit=200)
        errs[q] = abs(_p.mu_one(P) - (2.0 * val) ** (1.0 / q)) / _p.mu_one(P)
    worst = max(errs.values())
    return worst <= 1e-8, f"max relative gap = {worst:.2e}", {"errors": errs}


@_timed(3, "scaling covariance", 10.0)
def criterion_3(quick=False):
    """V_nu sampled afresh on one fixed grid; eigenvalue ratio and Lq norm ratio."""
    grid = Grid1D.symmetric(30.0, 4000)
    worst_e = worst_n = 0.0
    for q in (2.0, 3.0):
        P = _p.make_params(2, q)
        V1 = _p.optimal_potential(_p.mu_one(P), P)
        base = sample_potential(V1, grid)
        e1 = ground_state_1d(base).lambda1
        n1 = lq_norm_1d(base, q)
        for nu in (0.5, 2.0, 4.0):
            Vn = sample_potential(lambda s, nu=nu: nu**2 * V1(nu * s), grid)
            en = ground_state_1d(Vn).lambda1
            worst_e = max(worst_e, abs(en - nu**2 * e1) / nu**2)
            worst_n = max(worst_n, abs(lq_norm_1d(Vn, q) / n1 - nu ** (2.0 - 1.0 / q)))
    ok = worst_e <= 1e-4 and worst_n <= 1e-6
    return ok, f"eigen gap {worst_e:.2e}, norm-ratio gap {worst_n:.2e}", {"eigen": worst_e, "norm": worst_n}


def random_potential(rng, grid):
    """Nonnegative sum of two to four Gaussian or sech^2 bumps (zero at the ends)."""
    s = grid.points
    v = np.zeros_like(s)
    L = grid.s_max
    for _ in range(rng.integers(2, 5)):
        c = rng.uniform(-0.3 * L, 0.3 * L)
        w = rng.uniform(0.3, 1.5)
        a = rng.uniform(0.05, 3.0)
        v += a * (np.exp(-((s - c) / w) ** 2) if rng.random() < 0.5 else np.cosh((s - c) / w) ** -2)
    return SampledPotential1D(grid=grid, values=v)


@_timed(4, "Keller inequality on the line", 60.0)
def criterion_4(quick=False):
    rng = np.random.default_rng(2024)
    grid = Grid1D.symmetric(30.0, 2000)
    count = 20 if quick else 100
    worst = math.inf
    for i in range(count):
        P = _p.make_params(2, (2.0, 3.0, 1.5)[i % 3])
        worst = min(worst, keller_gap(random_potential(rng, grid), P))
    eq = 0.0
    for q in (2.0, 3.0):
        P = _p.make_params(2, q)
        for f in (0.5, 1.0, 2.0):
            mu = f * _p.mu_one(P)
            eq = max(eq, abs(keller_gap(optimal_samples(mu, P), P)))
    ok = worst >= -1e-6 and eq <= 1e-4
    return ok, f"min gap {worst:.2e} over {count} potentials, equality-family |gap| {eq:.2e}", \
        {"min_gap": worst, "equality_gap": eq}


@_timed(5, "mode solver vs 2D oracle", 120.0)
def criterion_5(quick=False):
    """Both solvers on the same (s, theta) discretisation, no extrapolation."""
    rng = np.random.default_rng(7)
    M = sphere_spec(2)
    grid = Grid1D.symmetric(20.0, 1200)
    count = 5 if quick else 20
    worst = 0.0
    for _ in range(count):
        V = random_potential(rng, grid)
        e_mode = ground_state_symmetric(V, M, richardson=False).eigenvalue
        cyl = symmetric_potential(V).as_2d(32)
        e_2d = ground_state_2d_oracle(cyl).eigenvalue
        worst = max(worst, abs(e_mode - e_2d))
    return worst <= 1e-4, f"max |mode - oracle| = {worst:.2e} over {count} potentials", {"max_diff": worst}


@lru_cache(maxsize=None)
def _threshold_report(quick):
    P, M = _sphere2()
    return search_threshold(P, M, OptimizerConfig(threshold_tol=0.02 if quick else 0.01))


@_timed(6, "threshold on S^1 (q = 2)", 900.0)
def criterion_6(quick=False):
    P, M = _sphere2()
    target = _p.mu_one(P) * 3.0 ** -0.75
    m1 = _p.mu_one(P)
    zero = brentq(lambda mu: instability_coefficient(mu, P, M), 0.1 * m1, 10 * m1, xtol=1e-14, rtol=1e-15)
    a = abs(zero - target)
    b = abs(operator_threshold(P, M, n=1000 if quick else 2000) - target) / target
    rep = _threshold_report(quick)
    lo, hi = rep.bracket
    c = lo <= target <= hi and abs(lo / target - 1) <= 0.02 and abs(hi / target - 1) <= 0.02
    signs = instability_coefficient(lo, P, M) > 0 > instability_coefficient(hi, P, M)
    ok = a <= 1e-6 and b <= 1e-3 and c and signs
    return ok, (f"(a) {a:.1e}  (b) {b:.1e} rel  (c) [{lo:.5f}, {hi:.5f}] vs {target:.5f}"), \
        {"a": a, "b": b, "bracket": [lo, hi], "target": target}


def _solver_tolerance(res, config):
    """Lambda uncertainty from the Newton stopping rule, ``rel_tol mu / mu'(Lambda)``."""
    return config.rel_tol * res.mu / res.state.l2_squared()


@lru_cache(maxsize=None)
def sweep_near_threshold(quick=False):
    """Lambda on ``count`` equispaced mu in ``[0.6, 1.5] mu_star`` (general 2D optimiser)."""
    P, M = _sphere2()
    ms = mu_star_closed(P)
    config = OptimizerConfig()
    mus = np.linspace(0.6 * ms, 1.5 * ms, 5 if quick else 10)
    rows = []
    for mu in mus:
        res = solve_capital_lambda(float(mu), P, M, "general2d", config)
        rows.append((float(mu), res.Lambda, res.lambda_R, symmetry_fraction(res.state),
                     _solver_tolerance(res, config)))
    return rows


@_timed(7, "symmetry and its breaking around mu_star", 900.0)
def criterion_7(quick=False):
    P, M = _sphere2()
    ms = mu_star_closed(P)
    config = OptimizerConfig()
    below = solve_capital_lambda(0.9 * ms, P, M, "general2d", config)
    above = solve_capital_lambda(1.1 * ms, P, M, "general2d", config)
    f_b, f_a = symmetry_fraction(below.state), symmetry_fraction(above.state)
    rel_b = abs(below.Lambda - below.lambda_R) / below.lambda_R
    gap_a = above.Lambda - above.lambda_R
    tol_a = _solver_tolerance(above, config)
    rows = sweep_near_threshold(quick)
    ordered = all(L >= LR - 3 * tol for _, L, LR, _, tol in rows)
    ok = f_b <= 1e-6 and rel_b <= 1e-3 and f_a >= 1e-2 and gap_a > 3 * tol_a and ordered
    return ok, (f"0.9mu*: frac {f_b:.1e}, rel gap {rel_b:.1e};  1.1mu*: frac {f_a:.3f}, "
                f"gap {gap_a:.2e} vs 3 tol {3 * tol_a:.1e}; sweep ordered {ordered}"), \
        {"below_fraction": f_b, "below_rel_gap": rel_b, "above_fraction": f_a, "above_gap": gap_a,
         "above_tol": tol_a}


@_timed(8, "sphere equality identity (exact)", 1.0)
def criterion_8(quick=False):
    bad = []
    for d in range(2, 11):
        for q in (2, 3, 4):
            rp = _p.rigidity_params_exact(d, Fraction(q), Fraction(d - 2), Fraction(d - 1))
            lhs = _p.lambda_star(rp, d) / (2 * (q - 1))
            if lhs != Fraction(d - 1, 2 * q - 1):
                bad.append((d, q, str(lhs)))
    return not bad, f"{27 - len(bad)}/27 exact matches", {"failures": bad}


@_timed(9, "rigidity functional", 30.0)
def criterion_9(quick=False):
    P, M = _sphere2()
    rp = _p.rigidity_params_for(P, M)
    m1 = _p.mu_one(P)
    zero = 0.0
    for f in (0.5, 1.0, 2.0):
        mu = f * m1
        V = symmetric_potential(optimal_samples(mu, P, grid=default_line_grid(mu, P, n=4000)))
        zero = max(zero, abs(evaluate_K(V, mu, P, rp, M)))
    grid = Grid1D.symmetric(12.0, 4000)
    others = []
    for fn in (lambda s: 2.0 * np.exp(-s**2 / 4.0), lambda s: 1.5 / np.cosh(s) ** 4,
               lambda s: 3.0 / np.cosh(0.7 * s) ** 2):
        V = sample_potential(fn, grid)
        mu = lq_norm_1d(V, P.q)
        others.append(evaluate_K(symmetric_potential(V), mu, P, rp, M))
    ok = zero <= 1e-6 and min(others) > 0
    return ok, f"max |K[V_1,mu]| = {zero:.1e}; non-optimal K = " + ", ".join(f"{k:.3g}" for k in others), \
        {"optimal": zero, "non_optimal": others}


@_timed(10, "semiclassical trend", 1200.0)
def criterion_10(quick=False):
    """``Lambda^gamma / (vol(S^1) mu^q)`` against the radial constant.

    ``mu`` is measured with the normalised angular measure, so the natural
    norm is ``(2 pi)^(1/q) mu``.
    """
    P, M = _sphere2()
    m1 = _p.mu_one(P)
    L = euclidean_constant(2, 2.0)
    factors = (5, 10) if quick else (5, 10, 20)
    ratios = []
    for f in factors:
        res = solve_capital_lambda(f * m1, P, M, "general2d")
        ratios.append(res.Lambda ** P.gamma / (M.volume * (f * m1) ** P.q))
    dist = [abs(r - L) for r in ratios]
    # distances may only stall at rounding level once the limit is reached
    monotone = all(b <= a + 1e-9 * L for a, b in zip(dist, dist[1:]))
    close = dist[-1] <= 0.1 * L
    return monotone and close, ("ratios " + ", ".join(f"{r:.9f}" for r in ratios) + f" -> L = {L:.9f}"
                                + f"; final rel. distance {dist[-1] / L:.1e}"), \
        {"ratios": ratios, "L": L, "factors": list(factors)}


@_timed(11, "convexity of Lambda", 900.0)
def criterion_11(quick=False):
    rows = sweep_near_threshold(quick)
    lam = np.array([r[1] for r in rows])
    second = lam[:-2] + lam[2:] - 2.0 * lam[1:-1]
    worst = float(second.min())
    return worst >= -1e-4, f"min second difference {worst:.2e} on {len(rows)} points", {"min_second": worst}


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9, criterion_10, criterion_11)


def run_all(quick=False, only=None, echo=None):
    results = []
    for crit in CRITERIA:
        if only and crit.number not in only:
            continue
        res = crit(quick)
        if echo:
            echo(res.line())
        results.append(res)
    return results
