"""Schrodinger operators ``-d2/ds2 - V`` on the line.

The operator is discretised with three-point central differences on a
truncated interval with Dirichlet ends.  Eigenvalues come from Sturm
multisection, eigenvectors from inverse iteration, and one Richardson step
over ``h`` and ``h/2`` (or ``2h`` when only samples are available) removes
the leading ``O(h**2)`` error.
"""

from dataclasses import dataclass, field, replace
import math
import warnings

import numpy as np

from . import params as _p
from .errors import FormatError
from .grids import Grid1D
from .tridiag import bottom_eigenvalue, inverse_iteration, tridiag_matvec


@dataclass(frozen=True)
class SampledPotential1D:
    """Samples of V at the interior points of ``grid``.

    ``func`` is kept when the potential came from a callable, so solvers can
    resample it on refined grids.
    """

    grid: Grid1D
    values: np.ndarray
    q_norm_cache: tuple = None
    func: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("potential samples must be finite")
        object.__setattr__(self, "values", v)

    @property
    def s(self):
        return self.grid.points

    def on(self, grid):
        """Resample on another grid (requires ``func``)."""
        if self.func is None:
            raise ValueError("no callable attached; cannot resample")
        return sample_potential(self.func, grid)


def sample_potential(func, grid):
    return SampledPotential1D(grid=grid, values=np.asarray(func(grid.points), dtype=float), func=func)


@dataclass(frozen=True)
class SpectralResult:
    """Bottom of the spectrum of a discretised Schrodinger operator.

    ``eigenvalue`` is signed (negative for a bound state) and already
    Richardson-extrapolated when ``extrapolated`` is set; ``raw_eigenvalue``
    is the value on the finest grid, to which ``eigenfunction`` and
    ``residual`` refer.  ``error_estimate`` is the size of the Richardson
    correction, an estimate of the error of ``raw_eigenvalue``.
    """

    eigenvalue: float
    lambda1: float
    eigenfunction: np.ndarray
    residual: float
    error_estimate: float
    raw_eigenvalue: float
    grid: object = None
    extrapolated: bool = False
    iterations: int = 0


def _operator(V):
    h = V.grid.h
    diag = 2.0 / h**2 - V.values
    off = np.full(V.grid.n - 1, -1.0 / h**2)
    return diag, off


def _solve_raw(V):
    diag, off = _operator(V)
    trial = np.sqrt(np.clip(V.values, 0.0, None))
    e = bottom_eigenvalue(diag, off, trial=trial if np.any(trial) else None)
    u, its = inverse_iteration(diag, off, e)
    if u.sum() < 0:
        u = -u
    h = V.grid.h
    u = u / math.sqrt(h)  # unit discrete L2 norm
    r = tridiag_matvec(diag, off, u) - e * u
    return e, u, math.sqrt(h * float(r @ r)), its


def ground_state_1d(V, richardson=True, boundary_tol=1e-8):
    """Bottom eigenpair of ``-D2 - V`` on ``V.grid``.

    With ``richardson`` the eigenvalue is recomputed on ``h/2`` when ``V``
    carries a callable, otherwise on the ``2h`` subgrid, and extrapolated as
    ``e_fine + (e_fine - e_coarse)/3``.
    """
    scale = max(1.0, float(np.max(np.abs(V.values)))) if V.values.size else 1.0
    if max(abs(V.values[0]), abs(V.values[-1])) > boundary_tol * scale:
        warnings.warn("potential is not negligible at the truncation endpoints; "
                      "the Dirichlet truncation error may dominate", RuntimeWarning, stacklevel=2)
    if not richardson:
        e, u, res, its = _solve_raw(V)
        return SpectralResult(eigenvalue=e, lambda1=max(0.0, -e), eigenfunction=u, residual=res,
                              error_estimate=float("nan"), raw_eigenvalue=e, grid=V.grid, iterations=its)
    if V.func is not None:
        coarse, fine = V, V.on(V.grid.refined())
    else:
        cg = V.grid.coarsened()
        coarse = SampledPotential1D(grid=cg, values=V.values[1:2 * cg.n:2])
        fine = V
    e_c = _solve_raw(coarse)[0]
    e_f, u, res, its = _solve_raw(fine)
    e_x = e_f + (e_f - e_c) / 3.0
    return SpectralResult(eigenvalue=e_x, lambda1=max(0.0, -e_x), eigenfunction=u, residual=res,
                          error_estimate=abs(e_x - e_f), raw_eigenvalue=e_f, grid=fine.grid,
                          extrapolated=True, iterations=its)


def lq_norm_1d(V, q, positive_part=False):
    """Trapezoid approximation of ``||V||_q`` (boundary values taken as zero)."""
    v = np.clip(V.values, 0.0, None) if positive_part else np.abs(V.values)
    return float(V.grid.integrate(v**q)) ** (1.0 / q)


def scale_potential(V, nu):
    """``V_nu(s) = nu**2 V(nu s)`` sampled on the grid dilated by ``1/nu``.

    The samples are exact (no interpolation): ``V_nu(s_i/nu) = nu**2 V(s_i)``.
    """
    if not nu > 0:
        raise ValueError("nu must be positive")
    func = None
    if V.func is not None:
        f = V.func
        func = _Scaled(f, float(nu))
    return SampledPotential1D(grid=V.grid.scaled(nu), values=nu**2 * V.values, func=func)


@dataclass(frozen=True)
class _Scaled:
    f: object
    nu: float

    def __call__(self, s):
        return self.nu**2 * np.asarray(self.f(self.nu * np.asarray(s)), dtype=float)


def keller_gap(V, params, richardson=True):
    """``Lambda_R(||V_+||_q) - lambda_1[V]``; nonnegative by the line inequality.

    A potential with vanishing positive part has no bound state, and the gap
    is 0 by convention.
    """
    mu = lq_norm_1d(V, params.q, positive_part=True)
    if mu == 0.0:
        return 0.0
    res = ground_state_1d(V, richardson=richardson)
    return _p.lambda_R(mu, params) - res.lambda1


def default_line_grid(mu, params, n=2000, half_width=20.0):
    """Interval ``[-half_width/nu, half_width/nu]`` adapted to ``V_{1,mu}``."""
    nu = _p.scaling_nu(mu, params)
    return Grid1D.symmetric(half_width / nu, n)


def optimal_samples(mu, params, grid=None, factor=1.0):
    """``factor * V_{1,mu}`` on ``grid`` (default from :func:`default_line_grid`)."""
    grid = grid or default_line_grid(mu, params)
    V = _p.optimal_potential(mu, params)
    func = V if factor == 1.0 else _Factor(V, float(factor))
    return sample_potential(func, grid)


@dataclass(frozen=True)
class _Factor:
    f: object
    c: float

    def __call__(self, s):
        return self.c * self.f(s)


# --- file format ---------------------------------------------------------------


def load_potential_1d(path, rel_tol=1e-9):
    """Two-column ``s value`` file of interior samples on a uniform grid."""
    try:
        data = np.loadtxt(path, comments="#", ndmin=2)
    except ValueError as exc:
        raise FormatError(f"{path}: cannot parse potential file ({exc})") from None
    if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] < 16:
        raise FormatError(f"{path}: expected at least 16 rows of 's value'")
    s, v = data[:, 0], data[:, 1]
    ds = np.diff(s)
    h = float(np.mean(ds))
    # allow for the rounding of the printed abscissae themselves
    slack = rel_tol * abs(h) + 8 * np.finfo(float).eps * float(np.max(np.abs(s)))
    if h <= 0 or np.max(np.abs(ds - h)) > slack:
        raise FormatError(f"{path}: grid is not uniform within relative spacing {rel_tol:g}")
    if not np.all(np.isfinite(v)):
        raise FormatError(f"{path}: non-finite potential values")
    grid = Grid1D(float(s[0] - h), float(s[-1] + h), int(s.size))
    return SampledPotential1D(grid=grid, values=v)


def save_potential_1d(V, path):
    np.savetxt(path, np.column_stack([V.s, V.values]), fmt="%.17g")


def with_cache(V, q):
    return replace(V, q_norm_cache=(q, lq_norm_1d(V, q)))
