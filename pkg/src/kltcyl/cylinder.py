"""Ground states of ``-d2/ds2 - Delta_g - V`` on the cylinder R x M.

Potentials depending on ``s`` only are handled by separation of variables:
mode ``l`` sees the shifted operator ``-D2 + lambda_l - V``.  For M = S^1 a
dense five-point discretisation with inverse iteration serves as an
independent oracle.  The remaining functions quantify the second-order
instability of the optimal one-dimensional potential.
"""

from dataclasses import dataclass
import csv
import io
import math

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.sparse.linalg import splu
from scipy.special import roots_jacobi

from . import params as _p
from .errors import ConvergenceError, FormatError, ParameterError
from .grids import Grid1D
from .line import SampledPotential1D, SpectralResult, default_line_grid, ground_state_1d, optimal_samples
from .manifold import extend_sphere

MAX_ORACLE_SIZE = 200_000


@dataclass(frozen=True)
class CylinderPotential:
    """Potential on R x M.

    ``kind`` is ``"symmetric"`` (``values`` has shape ``(n,)``) or
    ``"general2d"`` (shape ``(m, n)``, rows indexed by the angle on S^1).
    ``grid`` is a :class:`Grid1D` for the finite-difference solvers or a
    :class:`~kltcyl.grids.SpectralGrid` for potentials built from
    variational states.
    """

    kind: str
    grid: object
    values: np.ndarray
    m: int = 1

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if self.kind == "symmetric":
            if v.shape != (self.grid.n,):
                raise ValueError(f"symmetric potential needs shape ({self.grid.n},), got {v.shape}")
            object.__setattr__(self, "m", 1)
        elif self.kind == "general2d":
            if v.ndim != 2 or v.shape[1] != self.grid.n:
                raise ValueError(f"general2d potential needs shape (m, {self.grid.n}), got {v.shape}")
            object.__setattr__(self, "m", v.shape[0])
        else:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        object.__setattr__(self, "values", v)

    @property
    def angles(self):
        return 2.0 * np.pi * np.arange(self.m) / self.m

    def as_2d(self, m=None):
        """Broadcast a symmetric potential onto ``m`` angles."""
        if self.kind == "general2d":
            return self
        return CylinderPotential("general2d", self.grid, np.tile(self.values, (m or 1, 1)))

    def angular_mean(self):
        if self.kind == "symmetric":
            return self
        return CylinderPotential("symmetric", self.grid, self.values.mean(axis=0))

    def to_line(self):
        if self.kind != "symmetric" or not isinstance(self.grid, Grid1D):
            raise ValueError("only symmetric finite-difference potentials map to the line")
        return SampledPotential1D(grid=self.grid, values=self.values)


def symmetric_potential(V):
    """Wrap a :class:`SampledPotential1D` as a symmetric cylinder potential."""
    return CylinderPotential("symmetric", V.grid, V.values)


@dataclass(frozen=True)
class ModeResult:
    ells: np.ndarray
    lambdas: np.ndarray
    multiplicities: np.ndarray
    mode_eigenvalues: np.ndarray
    eigenvalue: float
    mode: int
    base: SpectralResult

    @property
    def lambda1(self):
        return max(0.0, -self.eigenvalue)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["ell", "lambda_ell", "e_ell"])
        for ell, lam, e in zip(self.ells, self.lambdas, self.mode_eigenvalues):
            w.writerow([int(ell), repr(float(lam)), repr(float(e))])
        return buf.getvalue()


def default_lmax(M, sup_v, e0):
    """Smallest ``l`` with ``lambda_l > sup V + |e_0|`` (the last available if none)."""
    ev = np.asarray(M.eigenvalues)
    above = np.nonzero(ev > sup_v + abs(e0))[0]
    return int(above[0]) if above.size else len(ev) - 1


def ground_state_symmetric(V, M, L_max=None, richardson=True):
    """Per-mode bottom eigenvalues ``e_l = e_0 + lambda_l`` for an s-only potential."""
    line = V.to_line() if isinstance(V, CylinderPotential) else V
    base = ground_state_1d(line, richardson=richardson)
    e0 = base.eigenvalue
    if L_max is None:
        L_max = default_lmax(M, max(0.0, float(np.max(line.values))), e0)
        if M.is_sphere and L_max == len(M.eigenvalues) - 1:
            ell = len(M.eigenvalues)
            while ell * (ell + M.d - 2) <= max(0.0, float(np.max(line.values))) + abs(e0):
                ell += 1
            M = extend_sphere(M, ell)
            L_max = ell
    else:
        M = extend_sphere(M, L_max)
        if L_max >= len(M.eigenvalues):
            raise ParameterError(f"manifold spec only carries {len(M.eigenvalues)} eigenvalues")
    lambdas = np.asarray(M.eigenvalues[: L_max + 1], dtype=float)
    es = e0 + lambdas
    k = int(np.argmin(es))
    return ModeResult(ells=np.arange(L_max + 1), lambdas=lambdas,
                      multiplicities=np.asarray(M.multiplicities[: L_max + 1]),
                      mode_eigenvalues=es, eigenvalue=float(es[k]), mode=k, base=base)


# --- dense oracle on R x S^1 -----------------------------------------------------


def _oracle_matrix(V):
    g = V.grid
    n, m = g.n, V.m
    h = g.h
    ht = 2.0 * np.pi / m
    Ts = sp.diags([-np.ones(n - 1), 2.0 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]) / h**2
    if m == 1:
        Tt = sp.csr_matrix((1, 1))
    elif m == 2:
        Tt = sp.csr_matrix(np.array([[2.0, -2.0], [-2.0, 2.0]]) / ht**2)
    else:
        Tt = sp.diags([-np.ones(m - 1), 2.0 * np.ones(m), -np.ones(m - 1)], [-1, 0, 1], format="lil")
        Tt[0, m - 1] = -1.0
        Tt[m - 1, 0] = -1.0
        Tt = Tt.tocsr() / ht**2
    H = sp.kron(sp.identity(m), Ts) + sp.kron(Tt, sp.identity(n)) - sp.diags(V.values.ravel())
    return H.tocsc()


def ground_state_2d_oracle(V, e_guess=None, tol=1e-10, max_iter=500):
    """Bottom eigenpair of the five-point discretisation on R x S^1.

    Dirichlet in ``s``, periodic in the angle.  Shifted inverse iteration
    from the all-ones vector, with one Rayleigh update of the shift.  The
    default shift comes from the angular mean of ``V``, whose ground energy
    bounds the true one from above.
    """
    if V.kind != "general2d":
        V = V.as_2d(8)
    if not isinstance(V.grid, Grid1D):
        raise ParameterError("the 2D oracle needs a finite-difference grid")
    N = V.grid.n * V.m
    if N > MAX_ORACLE_SIZE:
        raise ParameterError(f"oracle size n*m = {N} exceeds the memory guard {MAX_ORACLE_SIZE}")
    w = V.grid.h / V.m
    H = _oracle_matrix(V)
    if e_guess is None:
        e_guess = ground_state_1d(V.angular_mean().to_line(), richardson=False).eigenvalue
    shift = e_guess - max(1e-3, 0.05 * abs(e_guess))
    I = sp.identity(N, format="csc")
    x = np.ones(N)
    x /= math.sqrt(w * (x @ x))
    lu = splu(H - shift * I)
    refined = False
    for it in range(1, max_iter + 1):
        y = lu.solve(x)
        y /= math.sqrt(w * (y @ y))
        if y.sum() < 0:
            y = -y
        Hy = H @ y
        e = w * float(y @ Hy)
        res = math.sqrt(w * float(np.sum((Hy - e * y) ** 2)))
        change = math.sqrt(w * float(np.sum((y - x) ** 2)))
        x = y
        if res <= tol:
            break
        if not refined and change < 1e-4:
            # Rayleigh shift, kept just below the estimate so we stay on the bottom
            lu = splu(H - (e - 1e-8 * max(1.0, abs(e))) * I)
            refined = True
    else:
        raise ConvergenceError("2D inverse iteration hit the iteration limit",
                               diagnostics={"residual": res, "eigenvalue": e, "shift": shift})
    u = x.reshape(V.m, V.grid.n)
    if u.min() < -1e-6 * u.max():
        raise ConvergenceError("2D oracle converged to a sign-changing state; lower the shift",
                               diagnostics={"eigenvalue": e, "shift": shift})
    return SpectralResult(eigenvalue=e, lambda1=max(0.0, -e), eigenfunction=u, residual=res,
                          error_estimate=float("nan"), raw_eigenvalue=e, grid=V.grid, iterations=it)


# --- second variation of the symmetric optimum ------------------------------------


def instability_coefficient(mu, params, M):
    """``lambda1^M - (p^2 - 4)/4 Lambda_R(mu)``; negative means symmetry breaking."""
    return M.lambda1 - 0.25 * (params.p**2 - 4.0) * _p.lambda_R(mu, params)


def instability_threshold(params, M):
    """Zero of :func:`instability_coefficient`, ``mu1 (lambda1/(2q-1))**(1/beta)``."""
    return _p.mu_one(params) * (M.lambda1 / (2.0 * params.q - 1.0)) ** (1.0 / params.beta)


def instability_operator_check(mu, params, M, n=2000, half_width=20.0):
    """Operator route to the same coefficient.

    Computes ``e* = inf spec(-D2 - (p-1) V_{1,mu})`` numerically and returns
    ``lambda1^M + e* + Lambda_R(mu)``, which equals the instability
    coefficient because ``e* = -(p/2)^2 Lambda_R(mu)``.
    """
    grid = default_line_grid(mu, params, n=n, half_width=half_width)
    V = optimal_samples(mu, params, grid=grid, factor=params.p - 1.0)
    e_star = ground_state_1d(V).eigenvalue
    return M.lambda1 + e_star + _p.lambda_R(mu, params)


def operator_threshold(params, M, n=2000, rtol=1e-10):
    """Zero crossing of :func:`instability_operator_check` in mu."""
    m1 = _p.mu_one(params)
    f = lambda mu: instability_operator_check(mu, params, M, n=n)
    lo, hi = 1e-3 * m1, m1
    while f(hi) > 0:
        lo, hi = hi, 2.0 * hi
    return brentq(f, lo, hi, rtol=rtol)


@dataclass(frozen=True)
class EnergySplit:
    symmetric_part: float
    correction: float

    def __iter__(self):
        return iter((self.symmetric_part, self.correction))


def _sphere_nodes(dim, count):
    """Quadrature for ``t = z_d`` on the normalised ``dim``-sphere (weights sum to 1)."""
    a = (dim - 2) / 2.0
    t, w = roots_jacobi(count, a, a)
    return t, w / w.sum()


def _split_setup(mu, params, M, n_s):
    if not M.is_sphere:
        raise ParameterError("the explicit perturbation test needs a sphere (first harmonic known)")
    if M.d != params.d:
        raise ParameterError(f"manifold dimension {M.dim} does not match d = {params.d}")
    phi = _p.optimal_eigenfunction(mu, params)
    rate = phi.nu * min(params.q - 1.0, 1.0)
    L = 45.0 / rate
    s = np.linspace(-L, L, n_s)
    h = s[1] - s[0]
    f = phi(s)
    fp = phi.derivative(s)
    chi = f ** (params.p / 2)
    chip = 0.5 * params.p * f ** (params.p / 2 - 1.0) * fp
    return s, h, f, fp, chi, chip


def _perturbed_forms(mu, eps, params, M, n_s, n_t):
    s, h, f, fp, chi, chip = _split_setup(mu, params, M, n_s)
    t, wt = _sphere_nodes(M.dim, n_t)
    psi = math.sqrt(M.dim + 1) * t  # unit L2 norm on the normalised sphere
    U = f[None, :] + eps * chi[None, :] * psi[:, None]
    dU = fp[None, :] + eps * chip[None, :] * psi[:, None]
    mean = lambda X: h * np.sum(wt @ X)
    grad_s = mean(dU**2)
    grad_g = eps**2 * M.lambda1 * h * np.sum(chi**2)
    lp = mean(np.abs(U) ** params.p) ** (1.0 / params.p)
    l2 = mean(U**2)
    return grad_s + grad_g - mu * lp**2, l2


def perturbation_energy_split(mu, eps, params, M, n_s=6001, n_t=24):
    """Quadratic form of ``phi_eps = phi_mu + eps phi_mu^(p/2) psi_1`` split by order in eps.

    ``symmetric_part`` is the form at ``eps = 0``.  ``correction`` is the
    change of the Rayleigh quotient rescaled by ``||phi_mu||_2^2``, so that
    ``correction/eps^2`` tends to ``4/(p+2) c(mu) ||phi_mu||_2^2`` with
    ``c`` the instability coefficient.
    """
    if abs(eps) > 0.5:
        raise ParameterError("|eps| must not exceed 0.5")
    F0, n0 = _perturbed_forms(mu, 0.0, params, M, n_s, n_t)
    F, n = _perturbed_forms(mu, eps, params, M, n_s, n_t)
    return EnergySplit(symmetric_part=F0, correction=n0 * (F / n - F0 / n0))


def split_limit(mu, params, M, n_s=6001):
    """Closed-form limit of ``correction/eps^2``."""
    _, h, f, *_ = _split_setup(mu, params, M, n_s)
    return 4.0 / (params.p + 2.0) * instability_coefficient(mu, params, M) * h * np.sum(f**2)


def norm_identities(mu, params, n_s=6001):
    """Quadratures ``(||phi_mu||_p^p, ||phi_mu||_2^2)``; the first is ``4/(p+2)`` times the second."""
    phi = _p.optimal_eigenfunction(mu, params)
    L = 45.0 / (phi.nu * min(params.q - 1.0, 1.0))
    s = np.linspace(-L, L, n_s)
    h = s[1] - s[0]
    f = phi(s)
    return h * np.sum(f**params.p), h * np.sum(f**2)


def perturbed_l2_ratio(mu, eps, params, M, n_s=6001, n_t=24):
    """``||phi_eps||_2^2 / ||phi_mu||_2^2``, equal to ``1 + 4 eps^2/(p+2)``."""
    _, n0 = _perturbed_forms(mu, 0.0, params, M, n_s, n_t)
    _, n = _perturbed_forms(mu, eps, params, M, n_s, n_t)
    return n / n0


def richardson_eps(mu, params, M, eps=(0.02, 0.01), **kw):
    """Extrapolate ``correction/eps^2`` to ``eps -> 0`` (error is even in eps)."""
    e1, e2 = eps
    r1 = perturbation_energy_split(mu, e1, params, M, **kw).correction / e1**2
    r2 = perturbation_energy_split(mu, e2, params, M, **kw).correction / e2**2
    k = (e1 / e2) ** 2
    return (k * r2 - r1) / (k - 1.0)


# --- file formats ----------------------------------------------------------------


def load_potential_2d(path):
    """Header ``n m s_min s_max`` then ``n*m`` values, row-major over (s_i, theta_j)."""
    with open(path) as fh:
        tokens = fh.read().split()
    try:
        n, m = int(tokens[0]), int(tokens[1])
        s_min, s_max = float(tokens[2]), float(tokens[3])
        vals = np.array([float(t) for t in tokens[4:]])
    except (ValueError, IndexError) as exc:
        raise FormatError(f"{path}: malformed 2D potential file ({exc})") from None
    if vals.size != n * m:
        raise FormatError(f"{path}: expected {n * m} values, found {vals.size}")
    if not np.all(np.isfinite(vals)):
        raise FormatError(f"{path}: non-finite values")
    try:
        grid = Grid1D(s_min, s_max, n)
    except ParameterError as exc:
        raise FormatError(f"{path}: {exc}") from None
    return CylinderPotential("general2d", grid, vals.reshape(n, m).T.copy())


def save_potential_2d(V, path):
    V2 = V.as_2d()
    with open(path, "w") as fh:
        fh.write(f"{V2.grid.n} {V2.m} {V2.grid.s_min!r} {V2.grid.s_max!r}\n")
        for row in V2.values.T:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")
