"""The dual interpolation problem and its inversion.

For ``lambda > 0`` the optimal constant ``mu(lambda)`` is the minimum over
``u`` of

    Q_lambda[u] = (||d_s u||^2 + ||grad_g u||^2 + lambda ||u||_2^2) / ||u||_p^2

on the cylinder, and ``Lambda(mu)`` is obtained by solving
``mu(lambda) = mu`` for ``lambda``.  Minimisers are computed by a
preconditioned projected gradient method on a Fourier grid (periodic box in
``s``, uniform angles on S^1), or on the two lowest angular modes of a
sphere.  The module also evaluates the functional ``J[V]`` and the rigidity
functional ``K`` of the pressure ``r V(s)^(-1/2)``, and brackets the
symmetry-breaking threshold.
"""

from dataclasses import dataclass, field, fields, replace
from functools import lru_cache
import json
import math

import numpy as np
import scipy.fft as sfft

from . import params as _p
from .cylinder import CylinderPotential, _sphere_nodes, instability_coefficient, instability_operator_check
from .errors import (BracketError, ConvergenceError, DomainError, FormatError, InconclusiveError,
                     ParameterError)
from .grids import Grid1D, SpectralGrid, angular_count, angular_wavenumbers, fd_derivative
from .radial import radial_gns_constant

MODES = ("symmetric", "general2d", "two_mode")


@dataclass(frozen=True)
class OptimizerConfig:
    """Numerical knobs of the variational solvers.

    Grid: ``points_per_length`` samples per decay length ``1/sqrt(lambda)``,
    box half-length ``half_width`` decay lengths, at least ``m_min`` angles.
    Optimiser: stop when the relative preconditioned gradient drops below
    ``tol``; each start first gets ``probe_iter`` iterations.  ``detect`` is the symmetry-fraction level counted as broken
    symmetry and ``threshold_tol`` the relative width at which the threshold
    bisection stops.
    """

    points_per_length: float = 4.0
    half_width: float = 30.0
    m_min: int = 32
    two_mode_nodes: int = 24
    tol: float = 1e-9
    max_iter: int = 8000
    probe_iter: int = 400
    armijo: float = 1e-4
    kick: float = 0.1
    starts: int = 2
    seed: int = 0
    rel_tol: float = 1e-10
    max_newton: int = 40
    detect: float = 1e-4
    threshold_tol: float = 0.01
    lam_lo: float = 0.1
    lam_hi: float = 3.0

    def __post_init__(self):
        if self.tol <= 0 or self.rel_tol <= 0 or self.max_iter < 1 or self.max_newton < 1:
            raise ParameterError("tolerances must be positive and iteration caps at least 1")
        if self.points_per_length <= 0 or self.half_width <= 0 or self.m_min < 2:
            raise ParameterError("grid parameters must be positive (m_min >= 2)")
        if self.starts < 0 or not 0 < self.armijo < 0.5:
            raise ParameterError("need starts >= 0 and 0 < armijo < 1/2")
        if not 0 < self.lam_lo < self.lam_hi:
            raise ParameterError("need 0 < lam_lo < lam_hi")

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def config_from_mapping(mapping, base=None):
    """Override ``base`` (default config) with string or typed values."""
    base = base or OptimizerConfig()
    types = {f.name: type(getattr(base, f.name)) for f in fields(base)}
    updates = {}
    for key, raw in mapping.items():
        if key not in types:
            raise ParameterError(f"unknown optimizer setting {key!r}")
        try:
            updates[key] = types[key](float(raw)) if types[key] is int else types[key](raw)
        except (TypeError, ValueError):
            raise ParameterError(f"bad value for {key}: {raw!r}") from None
        if types[key] is int and float(raw) != updates[key]:
            raise ParameterError(f"{key} must be an integer, got {raw!r}")
    return replace(base, **updates)


def load_config(path, base=None):
    """Read ``name=value`` lines (``#`` comments allowed)."""
    mapping = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"{path}:{lineno}: expected name=value")
            key, value = (t.strip() for t in line.split("=", 1))
            mapping[key] = value
    try:
        return config_from_mapping(mapping, base)
    except ParameterError as exc:
        raise FormatError(f"{path}: {exc}") from None


# --- discretisations -------------------------------------------------------------


class FourierModel:
    """``Q_lambda`` on a :class:`SpectralGrid`; arrays have shape ``(m, n)``.

    ``ang`` scales the angular symbol, ``-Delta_g = ang * (-d2/dtheta2)``
    (``ang = lambda1`` for a circle of length ``2 pi / sqrt(lambda1)``).
    """

    def __init__(self, grid, lam, p, ang=1.0):
        self.grid, self.lam, self.p, self.ang = grid, float(lam), float(p), float(ang)
        xi = 2.0 * np.pi * sfft.rfftfreq(grid.n, d=grid.h)
        k = angular_wavenumbers(grid.m)
        self.kin_s = np.broadcast_to(xi[None, :] ** 2, (grid.m, xi.size))
        self.kin_t = np.broadcast_to(self.ang * k[:, None] ** 2, (grid.m, xi.size))
        self.symbol = self.kin_s + self.kin_t + self.lam
        self.weight = grid.weight
        self.shape = grid.shape

    def _fwd(self, u):
        return sfft.rfft2(u)

    def _inv(self, uh):
        return sfft.irfft2(uh, s=self.shape)

    def apply(self, u, symbol=None):
        return self._inv((self.symbol if symbol is None else symbol) * self._fwd(u))

    def solve(self, r):
        return self._inv(self._fwd(r) / self.symbol)

    def inner(self, a, b):
        return self.weight * float(np.sum(a * b))

    def lp_power(self, u):
        return self.weight * float(np.sum(np.abs(u) ** self.p))

    def nonlinear(self, u):
        """Gradient of ``||u||_p^p / p`` in the weighted inner product."""
        return np.abs(u) ** (self.p - 2.0) * u

    def l2_squared(self, u):
        return self.inner(u, u)

    def dirichlet_parts(self, u):
        """``(||d_s u||^2, ||grad_g u||^2)``."""
        return (self.inner(u, self.apply(u, self.kin_s)), self.inner(u, self.apply(u, self.kin_t)))

    def nonzero_mode_energy(self, u):
        """Dirichlet energy carried by the angular modes ``k != 0``."""
        v = u - u.mean(axis=0, keepdims=True)
        return self.inner(v, self.apply(v, self.kin_s + self.kin_t))

    def samples(self, u):
        return u


class TwoModeModel:
    """``u = u0(s) + u1(s) psi_1`` on a sphere, with ``psi_1`` the first harmonic.

    Arrays have shape ``(2, n)``; ``psi_1 = sqrt(dim+1) t`` has unit norm on
    the normalised sphere and the ``L^p`` norm is evaluated by Gauss-Jacobi
    quadrature in ``t = cos(polar angle)``.
    """

    def __init__(self, grid, lam, p, dim, lambda1, nodes=24):
        self.grid, self.lam, self.p = grid, float(lam), float(p)
        xi = 2.0 * np.pi * sfft.rfftfreq(grid.n, d=grid.h)
        self.kin_s = np.broadcast_to(xi[None, :] ** 2, (2, xi.size))
        self.kin_t = np.zeros((2, xi.size))
        self.kin_t[1] = float(lambda1)
        self.symbol = self.kin_s + self.kin_t + self.lam
        self.weight = grid.h
        self.shape = (2, grid.n)
        t, wt = _sphere_nodes(dim, nodes)
        self.psi = math.sqrt(dim + 1.0) * t
        self.wt = wt

    def _fwd(self, u):
        return sfft.rfft(u, axis=-1)

    def _inv(self, uh):
        return sfft.irfft(uh, n=self.grid.n, axis=-1)

    apply = FourierModel.apply
    solve = FourierModel.solve
    inner = FourierModel.inner
    l2_squared = FourierModel.l2_squared
    dirichlet_parts = FourierModel.dirichlet_parts

    def samples(self, u):
        """Values on the ``(nodes, n)`` quadrature lattice."""
        return u[0][None, :] + self.psi[:, None] * u[1][None, :]

    def lp_power(self, u):
        return self.weight * float(np.sum(self.wt @ np.abs(self.samples(u)) ** self.p))

    def nonlinear(self, u):
        U = self.samples(u)
        G = self.wt[:, None] * np.abs(U) ** (self.p - 2.0) * U
        return np.vstack([G.sum(axis=0), self.psi @ G])

    def nonzero_mode_energy(self, u):
        v = np.zeros_like(u)
        v[1] = u[1]
        return self.inner(v, self.apply(v, self.kin_s + self.kin_t))


def quotient(model, u):
    """``Q_lambda[u]``."""
    return model.inner(u, model.apply(u)) / model.lp_power(u) ** (2.0 / model.p)


def gradient(model, u):
    """Euclidean gradient of :func:`quotient` with respect to the array entries."""
    N = model.lp_power(u)
    a = model.inner(u, model.apply(u))
    g = 2.0 / N ** (2.0 / model.p) * (model.apply(u) - (a / N) * model.nonlinear(u))
    return model.weight * g


# --- state and optimiser -----------------------------------------------------------


@dataclass
class GnsState:
    """Minimiser candidate of ``Q_lambda``, normalised to ``||u||_p = 1``.

    ``u`` has shape ``(m, n)`` on a :class:`SpectralGrid` (``m = 1`` for the
    symmetric problem) or ``(2, n)`` for the two-mode truncation.
    ``symmetric`` is set when the reported state is the symmetric optimum
    because no start beat it.
    """

    u: np.ndarray
    lam: float
    quotient: float
    gradient_norm: float
    grid: SpectralGrid
    mode: str
    iterations: int
    converged: bool
    p: float
    ang: float = 1.0
    label: str = ""
    symmetric: bool = False
    symmetric_quotient: float = None
    starts: tuple = ()
    manifold_dim: int = 1
    nodes: int = 24

    @property
    def mu(self):
        return self.quotient

    def model(self):
        return _build_model(self.mode, self.grid, self.lam, self.p, self.ang, self.manifold_dim, self.nodes)

    def l2_squared(self):
        return self.model().l2_squared(self.u)


def _build_model(mode, grid, lam, p, ang, dim, nodes):
    if mode == "two_mode":
        return TwoModeModel(grid, lam, p, dim, ang, nodes)
    return FourierModel(grid, lam, p, ang)


def descend(model, u, tol=1e-9, max_iter=8000, armijo=1e-4):
    """Preconditioned projected gradient descent on ``Q_lambda``.

    With ``A = -Delta + lambda`` and ``||u||_p = 1`` the direction
    ``d = Q A^{-1}(|u|^{p-2} u) - u`` is the ``A``-gradient of ``-Q/2``;
    the unit step is the Petviashvili update.  Armijo backtracking, then
    renormalisation.  Returns ``(u, Q, gradient_norm, iterations, converged)``
    where the gradient norm is ``||d||_A / ||u||_A``.
    """
    u = u / model.lp_power(u) ** (1.0 / model.p)
    Au = model.apply(u)
    Q = model.inner(u, Au)
    gn = math.inf
    for it in range(max_iter + 1):
        n = model.nonlinear(u)
        d = Q * model.solve(n) - u
        Ad = Q * n - Au
        dA = model.inner(d, Ad)
        gn = math.sqrt(max(dA, 0.0) / Q)
        if gn <= tol:
            return u, Q, gn, it, True
        if it == max_iter:
            break
        tau = 1.0
        # below this the quotient cannot resolve the Armijo decrease; the unit
        # step is then accepted unless it raises Q beyond rounding
        noise = 64.0 * np.finfo(float).eps * Q
        at_noise = dA <= 1e3 * noise
        while True:
            v = u + tau * d
            v = v / model.lp_power(v) ** (1.0 / model.p)
            Av = model.apply(v)
            Qv = model.inner(v, Av)
            if Qv <= Q - 2.0 * armijo * tau * dA or (at_noise and tau == 1.0 and Qv <= Q + noise):
                break
            tau *= 0.5
            if tau < 1e-12:
                # no decrease left at rounding level
                return u, Q, gn, it, False
        u, Au, Q = v, Av, Qv
    return u, Q, gn, max_iter, False


def _profile(s, lam, p):
    """One-dimensional optimiser shape ``cosh(sqrt(lam) s)**(-2/(p-2))``."""
    x = np.minimum(np.abs(math.sqrt(lam) * s), 300.0)
    return np.cosh(x) ** (-2.0 / (p - 2.0))


def gns_grid(lam, params, M, mode, config):
    rate = math.sqrt(lam)
    m = 1
    if mode == "general2d":
        m = angular_count(rate / math.sqrt(M.lambda1), config.points_per_length, config.m_min)
    return SpectralGrid.for_decay(rate, config.points_per_length, config.half_width, m=m)


def _check_mode(mode, params, M):
    if mode not in MODES:
        raise ParameterError(f"mode must be one of {MODES}, got {mode!r}")
    if M.d != params.d:
        raise ParameterError(f"manifold of dimension {M.dim} does not match d = {params.d}")
    if mode == "general2d" and M.dim != 1:
        raise ParameterError("general2d optimisation is only available for d = 2 (M a circle)")
    if mode == "two_mode" and not (M.is_sphere and M.dim >= 2):
        raise ParameterError("two_mode optimisation needs a sphere of dimension >= 2")


def _starts(mode, grid, lam, p, M, config, warm):
    s = grid.points
    base = _profile(s, lam, p)
    out = []
    if warm is not None:
        out.append(("warm", np.array(warm, dtype=float)))
    if mode == "symmetric":
        out.append(("profile", base[None, :].copy()))
        return out
    if mode == "two_mode":
        ones = base ** (p / 2.0)
        out.append(("kick", np.vstack([base, config.kick * ones])))
        for i in range(config.starts):
            rng = np.random.default_rng([config.seed, i])
            amp = config.kick * rng.uniform(0.5, 2.0) * rng.choice([-1.0, 1.0])
            shift = rng.uniform(-1.0, 1.0) / math.sqrt(lam)
            sh = _profile(s - shift, lam, p)
            out.append((f"random{i}", np.vstack([sh, amp * sh ** (p / 2.0)])))
        return out
    theta = grid.angles[:, None]
    out.append(("kick", base[None, :] * (1.0 + config.kick * np.cos(theta))))
    chord2 = (2.0 * np.sin(theta / 2.0)) ** 2 / M.lambda1
    rho = np.sqrt(s[None, :] ** 2 + chord2)
    out.append(("spot", _profile(rho, lam, p)))
    for i in range(config.starts):
        rng = np.random.default_rng([config.seed, i])
        mod = np.zeros_like(theta)
        for k in (1, 2, 3):
            mod = mod + rng.normal() * np.cos(k * theta + rng.uniform(0, 2 * np.pi)) / k
        mod = mod / max(1e-12, float(np.max(np.abs(mod))))
        out.append((f"random{i}", base[None, :] * (1.0 + config.kick * mod)))
    return out


def gns_constant(lam, params, M, mode="symmetric", config=None, grid=None, warm=None):
    """Optimal constant ``mu(lambda)`` and the best minimiser found.

    The symmetric optimum is always computed as a reference.  Non-symmetric
    modes add a first-harmonic kick of it, a localized start and
    ``config.starts`` seeded random perturbations; the reported state is the
    symmetric one (with ``symmetric=True``) unless some start beats it.
    Raises :class:`ConvergenceError` carrying the best state when that
    state did not reach ``config.tol``.
    """
    if not lam > 0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    config = config or OptimizerConfig()
    _check_mode(mode, params, M)
    grid = grid or gns_grid(lam, params, M, mode, config)
    ang = M.lambda1
    model = _build_model(mode, grid, lam, params.p, ang, M.dim, config.two_mode_nodes)
    run = lambda u0: descend(model, u0, config.tol, config.max_iter, config.armijo)
    base = _profile(grid.points, lam, params.p)
    sym0 = np.zeros(model.shape)
    if mode == "two_mode":
        sym0[0] = base
    else:
        sym0[:] = base[None, :]
    su, sQ, sgn, sit, sconv = run(sym0)
    make = lambda u, Q, gn, it, conv, label, flag: GnsState(
        u=u, lam=float(lam), quotient=float(Q), gradient_norm=float(gn), grid=grid, mode=mode,
        iterations=int(it), converged=bool(conv), p=params.p, ang=ang, label=label, symmetric=flag,
        symmetric_quotient=float(sQ), manifold_dim=M.dim, nodes=config.two_mode_nodes)
    best = make(su, sQ, sgn, sit, sconv, "symmetric", mode != "symmetric")
    summary = [("symmetric", float(sQ), bool(sconv), int(sit))]
    starts = _starts(mode, grid, lam, params.p, M, config, warm)
    if mode == "symmetric":
        starts = [st for st in starts if st[0] == "warm"]
    # every start gets a short budget; unfinished ones are only continued
    # when they undercut the best finished value
    probes = []
    for label, u0 in starts:
        if u0.shape != model.shape:
            continue
        u, Q, gn, it, conv = descend(model, u0, config.tol, min(config.probe_iter, config.max_iter),
                                     config.armijo)
        probes.append([label, u, Q, gn, it, conv])
    margin = 1e-11 * sQ
    for row in sorted(probes, key=lambda r: r[2]):
        label, u, Q, gn, it, conv = row
        if not conv and Q < best.quotient - margin and it < config.max_iter:
            u, Q, gn, extra, conv = run(u)
            it += extra
        summary.append((label, float(Q), bool(conv), int(it)))
        if Q < best.quotient - margin:
            best = make(u, Q, gn, it, conv, label, False)
    best.starts = tuple(summary)
    if not best.converged:
        raise ConvergenceError(
            f"optimiser did not converge at lambda = {lam:g} ({mode}): gradient norm "
            f"{best.gradient_norm:.3g} after {best.iterations} iterations",
            state=best, diagnostics={"starts": best.starts})
    return best.quotient, best


def symmetric_mu(lam, params):
    """Closed form ``mu1 (lambda/(q-1)^2)^(1/beta)`` of the symmetric problem."""
    return _p.invert_lambda_R(lam, params)


def symmetry_fraction(state):
    """Share of the Dirichlet energy carried by nonzero angular modes."""
    if state.mode == "symmetric":
        return 0.0
    model = state.model()
    ds, dg = model.dirichlet_parts(state.u)
    total = ds + dg
    if total <= 0:
        return 0.0
    return float(model.nonzero_mode_energy(state.u) / total)


def fraction_of(u, grid, ang=1.0, mode="general2d", p=4.0, dim=1):
    """:func:`symmetry_fraction` of raw samples on ``grid`` (shape ``(m, n)``)."""
    u = np.asarray(u, dtype=float)
    st = GnsState(u=u, lam=1.0, quotient=float("nan"), gradient_norm=float("nan"), grid=grid,
                  mode=mode, iterations=0, converged=True, p=p, ang=ang, manifold_dim=dim)
    return symmetry_fraction(st)


# --- inversion to Lambda(mu) -------------------------------------------------------


@lru_cache(maxsize=None)
def euclidean_constant(d, q):
    """``L^1_{q-d/2,d}`` from the radial ground state."""
    return radial_gns_constant(d, 2.0 * q / (q - 1.0))


def semiclassical_lambda(mu, params, M):
    """Large-mu estimate ``(vol(M) L^1 mu^q)^(1/gamma)``, or None if unavailable."""
    if M.volume is None or params.gamma <= 0:
        return None
    return (M.volume * euclidean_constant(params.d, params.q) * mu**params.q) ** (1.0 / params.gamma)


@dataclass
class LambdaResult:
    mu: float
    Lambda: float
    state: GnsState
    newton_iterations: int
    lambda_R: float
    history: list = field(default_factory=list)

    def record(self):
        return {"mu": self.mu, "lambda": self.Lambda, "symmetry_fraction": symmetry_fraction(self.state),
                "iterations": self.state.iterations, "residual": self.state.gradient_norm}


def _grid_key(lam):
    """Quantise lambda to powers of 2^(1/4) so nearby Newton iterates share a grid."""
    return 2.0 ** (math.ceil(4.0 * math.log2(lam)) / 4.0)


def solve_capital_lambda(mu, params, M, mode="symmetric", config=None, warm=None):
    """Solve ``mu(lambda) = mu`` by safeguarded Newton iteration.

    ``mu(lambda)`` is concave and increasing with derivative
    ``||u||_2^2 / ||u||_p^2`` at the minimiser, so Newton steps from the left
    of the root are monotone; a step leaving the current bracket is replaced
    by bisection.  The start is ``max(Lambda_R(mu), semiclassical estimate)``.
    """
    if not mu > 0:
        raise ParameterError(f"mu must be positive, got {mu}")
    config = config or OptimizerConfig()
    _check_mode(mode, params, M)
    lam = _p.lambda_R(mu, params)
    if mode != "symmetric":
        semi = semiclassical_lambda(mu, params, M)
        if semi is not None:
            lam = max(lam, semi)
    lo = hi = None
    history = []
    grids = {}
    state = None
    for it in range(1, config.max_newton + 1):
        key = _grid_key(lam)
        grid = grids.setdefault(key, gns_grid(key, params, M, mode, config))
        w = state.u if state is not None and state.grid == grid else warm
        m_lam, state = gns_constant(lam, params, M, mode, config, grid=grid, warm=w)
        warm = None
        f = m_lam - mu
        history.append((lam, m_lam))
        if abs(f) <= config.rel_tol * mu:
            return LambdaResult(mu=float(mu), Lambda=float(lam), state=state, newton_iterations=it,
                                lambda_R=_p.lambda_R(mu, params), history=history)
        if f < 0:
            lo = lam if lo is None else max(lo, lam)
        else:
            hi = lam if hi is None else min(hi, lam)
        slope = state.l2_squared()
        new = lam - f / slope
        if (lo is not None and new <= lo) or (hi is not None and new >= hi) or new <= 0:
            if lo is not None and hi is not None:
                new = 0.5 * (lo + hi)
            elif lo is not None:
                new = 2.0 * lo
            else:
                new = 0.5 * hi
        lam = new
    raise BracketError(f"mu(lambda) = {mu:g} not resolved after {config.max_newton} Newton steps; "
                       f"samples (lambda, mu): {history}")


def capital_lambda(mu, params, M, mode="symmetric", config=None):
    """``Lambda(mu)`` for the chosen discretisation."""
    return solve_capital_lambda(mu, params, M, mode, config).Lambda


# --- dual functionals ---------------------------------------------------------------


def potential_from_state(state, mu, params):
    """``V = mu u^(p-2) / ||u||_p^(p-2)`` on the state's grid."""
    if state.mode == "two_mode":
        raise ParameterError("two-mode states have no angular grid to sample V on")
    if not mu > 0:
        raise ParameterError(f"mu must be positive, got {mu}")
    u = np.abs(state.u)
    model = state.model()
    lp = model.lp_power(u) ** (1.0 / state.p)
    V = mu * u ** (state.p - 2.0) / lp ** (state.p - 2.0)
    if state.mode == "symmetric":
        return CylinderPotential("symmetric", state.grid, V[0])
    return CylinderPotential("general2d", state.grid, V)


def _energy_parts_fd(u2d, grid, ang):
    """Finite-difference ``(||d_s u||^2, ||grad_g u||^2)`` on a Grid1D, Dirichlet in s."""
    m = u2d.shape[0]
    es = float(np.mean(grid.grad_energy(u2d, axis=-1)))
    if m == 1:
        return es, 0.0
    ht = 2.0 * np.pi / m
    dt = np.roll(u2d, -1, axis=0) - u2d
    eg = ang * grid.h * float(np.sum(dt**2)) / (m * ht**2)
    return es, eg


def evaluate_J(V, params, M=None):
    """``(||V||_q^q - ||grad V^((q-1)/2)||^2) / ||V^((q-1)/2)||^2``.

    Spectral differentiation on a :class:`SpectralGrid`, three-point
    differences (zero boundary values) on a :class:`Grid1D`.
    """
    ang = M.lambda1 if M is not None else 1.0
    vals = np.asarray(V.values, dtype=float)
    if np.any(vals < 0):
        raise DomainError("evaluate_J needs a nonnegative potential")
    v2 = vals if vals.ndim == 2 else vals[None, :]
    q = params.q
    u = v2 ** ((q - 1.0) / 2.0)
    if isinstance(V.grid, SpectralGrid):
        grid = SpectralGrid(V.grid.half_length, V.grid.n, v2.shape[0])
        model = FourierModel(grid, 0.0, params.p, ang)
        es, eg = model.dirichlet_parts(u)
        w = grid.weight
    else:
        es, eg = _energy_parts_fd(u, V.grid, ang)
        w = V.grid.h / v2.shape[0]
    l2 = w * float(np.sum(u * u))
    if l2 == 0:
        raise DomainError("J is undefined for the zero potential")
    return (w * float(np.sum(v2**q)) - es - eg) / l2


@dataclass(frozen=True)
class PressureData:
    """Pressure ``p_V(r) = r V(s)^(-1/2)`` with ``r = exp(-alpha s)`` on the window."""

    alpha: float
    s: np.ndarray
    r: np.ndarray
    p_vals: np.ndarray
    weight: np.ndarray
    window: tuple


def _window(vals, floor):
    col_min = vals.min(axis=0)
    vmax = float(np.max(vals))
    if not vmax > 0:
        raise DomainError("pressure needs a positive potential")
    inside = np.nonzero(col_min >= floor * vmax)[0]
    if inside.size < 5:
        raise DomainError("evaluation window has fewer than 5 points")
    i0, i1 = int(inside[0]), int(inside[-1]) + 1
    if inside.size != i1 - i0:
        raise DomainError("V drops to (numerically) zero inside the evaluation window")
    return i0, i1


def pressure_data(V, mu, params, floor=1e-10):
    """Sample the pressure of ``V`` (angles along the first axis for 2D potentials)."""
    if not mu > 0:
        raise ParameterError(f"mu must be positive, got {mu}")
    vals = np.asarray(V.values, dtype=float)
    v2 = vals if vals.ndim == 2 else vals[None, :]
    i0, i1 = _window(v2, floor)
    alpha = math.sqrt(_p.lambda_R(mu, params)) / (params.q - 1.0)
    s = V.grid.points[i0:i1]
    r = np.exp(-alpha * s)
    pv = r[None, :] * v2[:, i0:i1] ** -0.5
    return PressureData(alpha=alpha, s=s, r=r, p_vals=pv if vals.ndim == 2 else pv[0],
                        weight=r ** (2.0 * params.q - 1.0), window=(i0, i1))


def evaluate_K(V, mu, params, rp, M=None, floor=1e-10):
    """Rigidity functional of the pressure of ``V``.

    With ``W = V^(-1/2)`` and ``omega = alpha e^(alpha s) V^((2q-1)/2)`` the
    change of variables ``r = e^(-alpha s)`` turns the three terms into

        (2q-1)/(2q) |W_ss - alpha^2 W - Delta_g W/(2q-1)|^2 + 2 |grad_g W_s|^2
        + (lambda_star - 2 Lambda_R(mu)/(q-1)) |grad_g W|^2

    integrated against ``omega ds`` and the normalised measure on M.
    ``s``-derivatives use fourth-order differences inside the window where
    ``V >= floor max V``; angular derivatives are spectral (M = S^1 only).
    """
    vals = np.asarray(V.values, dtype=float)
    v2 = vals if vals.ndim == 2 else vals[None, :]
    if np.any(v2 < 0):
        raise DomainError("the pressure is undefined for negative potentials")
    i0, i1 = _window(v2, floor)
    q = params.q
    alpha = math.sqrt(_p.lambda_R(mu, params)) / (q - 1.0)
    s = V.grid.points[i0:i1]
    h = V.grid.h
    Vw = v2[:, i0:i1]
    W = Vw**-0.5
    omega = alpha * np.exp(alpha * s)[None, :] * Vw ** ((2.0 * q - 1.0) / 2.0)
    Wss = fd_derivative(W, h, 2)
    m = v2.shape[0]
    if m > 1:
        ang = M.lambda1 if M is not None else 1.0
        k = angular_wavenumbers(m)[:, None]
        Wh = np.fft.fft(W, axis=0)
        lapW = np.real(np.fft.ifft(-ang * k**2 * Wh, axis=0))
        gW = math.sqrt(ang) * np.real(np.fft.ifft(1j * k * Wh, axis=0))
        gWs = fd_derivative(gW, h, 1)
    else:
        lapW = gW = gWs = np.zeros_like(W)
    c3 = _p.rigidity_coefficient(mu, params, rp)
    first = (2.0 * q - 1.0) / (2.0 * q) * (Wss - alpha**2 * W - lapW / (2.0 * q - 1.0)) ** 2
    integrand = omega * (first + 2.0 * gWs**2 + c3 * gW**2)
    return h * float(np.sum(integrand.mean(axis=0)))


# --- threshold --------------------------------------------------------------------


@dataclass
class ThresholdReport:
    mu_lo: float
    mu_hi: float
    method: str
    interval: tuple
    samples: list
    closed_form: float = None

    @property
    def bracket(self):
        return self.mu_lo, self.mu_hi

    def __iter__(self):
        return iter((self.mu_lo, self.mu_hi))


def default_mode(M):
    if M.dim == 1:
        return "general2d"
    if M.is_sphere:
        return "two_mode"
    return None


def search_threshold(params, M, config=None, rp=None):
    """Bracket the symmetry-breaking threshold.

    With a non-symmetric optimiser available (circle, or sphere via the
    two-mode truncation) the bisection runs on ``lambda`` with the symmetry
    fraction of the converged optimum as detector, and the bracket is mapped
    to ``mu`` through ``mu(lambda)``.  Otherwise the sign of the operator
    route to the instability coefficient is bisected in ``mu``.
    """
    config = config or OptimizerConfig()
    rp = rp or _p.rigidity_params_for(params, M)
    interval = _p.mu_star_bounds(rp, params)
    closed = interval[1] if M.is_sphere else None
    mode = default_mode(M)
    scale = (params.q - 1.0) ** 2 * M.lambda1
    lam_lo, lam_hi = config.lam_lo * scale, config.lam_hi * scale
    samples = []

    if mode is None:
        mu_lo, mu_hi = symmetric_mu(lam_lo, params), symmetric_mu(lam_hi, params)
        if (mu_hi - mu_lo) <= config.threshold_tol * mu_hi:
            return ThresholdReport(mu_lo, mu_hi, "instability", interval, samples, closed)
        f = lambda mu: instability_operator_check(mu, params, M)
        f_lo, f_hi = f(mu_lo), f(mu_hi)
        samples += [(mu_lo, f_lo), (mu_hi, f_hi)]
        if not (f_lo > 0 > f_hi):
            raise InconclusiveError("instability coefficient does not change sign on the bracket",
                                    samples=samples)
        while (mu_hi - mu_lo) > config.threshold_tol * mu_hi:
            mid = 0.5 * (mu_lo + mu_hi)
            fm = f(mid)
            samples.append((mid, fm))
            if fm > 0:
                mu_lo = mid
            else:
                mu_hi = mid
        return ThresholdReport(mu_lo, mu_hi, "instability", interval, samples, closed)

    def probe(lam):
        mu, st = gns_constant(lam, params, M, mode, config)
        frac = symmetry_fraction(st)
        samples.append({"lambda": lam, "mu": mu, "symmetry_fraction": frac,
                        "iterations": st.iterations, "residual": st.gradient_norm})
        return mu, frac > config.detect

    mu_lo, mu_hi = symmetric_mu(lam_lo, params), symmetric_mu(lam_hi, params)
    if (mu_hi - mu_lo) <= config.threshold_tol * mu_hi:
        return ThresholdReport(mu_lo, mu_hi, f"variational:{mode}", interval, samples, closed)
    mu_lo, broken_lo = probe(lam_lo)
    mu_hi, broken_hi = probe(lam_hi)
    if broken_lo or not broken_hi:
        raise InconclusiveError("symmetry detector does not switch across the initial bracket",
                                samples=samples)
    while (mu_hi - mu_lo) > config.threshold_tol * mu_hi:
        lam = math.sqrt(lam_lo * lam_hi)
        mu, broken = probe(lam)
        if broken:
            lam_hi, mu_hi = lam, mu
        else:
            lam_lo, mu_lo = lam, mu
    _check_monotone(samples, config.detect)
    return ThresholdReport(mu_lo, mu_hi, f"variational:{mode}", interval, samples, closed)


def _check_monotone(samples, detect):
    flags = [r["symmetry_fraction"] > detect for r in sorted(samples, key=lambda r: r["lambda"])]
    if any(a and not b for a, b in zip(flags, flags[1:])):
        raise InconclusiveError("symmetry detector is not monotone in lambda", samples=samples)


def threshold_search(params, M, config=None):
    """``(mu_lo, mu_hi)`` from :func:`search_threshold`."""
    rep = search_threshold(params, M, config)
    return rep.mu_lo, rep.mu_hi


def records_to_json(records):
    """One JSON object per line with sorted keys."""
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
