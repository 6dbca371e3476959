"""Closed-form constants for Keller-Lieb-Thirring inequalities on the line and on cylinders.

Everything here is a pure function of its arguments.  The rigidity formulas
(``delta``, ``lambda_theta``, ``theta_star``) only use field operations, so
passing :class:`fractions.Fraction` inputs gives exact rational results.
"""

from dataclasses import dataclass
import math

from .errors import ParameterError


@dataclass(frozen=True)
class InequalityParams:
    """Exponent bundle for a cylinder of dimension ``d``.

    ``p = 2q/(q-1)`` is the dual (GNS) exponent, ``beta = 2q/(2q-1)`` the
    exponent of the one-dimensional optimal curve and ``gamma = q - d/2`` the
    semiclassical exponent.
    """

    d: int
    q: float
    p: float
    beta: float
    gamma: float


def make_params(d, q):
    """Validate ``(d, q)`` and derive ``p``, ``beta`` and ``gamma``."""
    if int(d) != d or d < 2:
        raise ParameterError(f"dimension d must be an integer >= 2, got {d!r}")
    d = int(d)
    q = float(q)
    if not math.isfinite(q) or q <= d / 2:
        raise ParameterError(f"need q > d/2 = {d / 2:g}, got q = {q:g}")
    p = 2.0 * q / (q - 1.0)
    beta = 2.0 * q / (2.0 * q - 1.0)
    if d >= 3 and not p < 2.0 * d / (d - 2):
        raise ParameterError(f"p = {p:g} is not below the critical exponent {2 * d / (d - 2):g}")
    return InequalityParams(d=d, q=q, p=p, beta=beta, gamma=q - d / 2)


def q_from_p(p):
    return p / (p - 2.0)


def mu_one(params):
    """Lq norm of ``V1(s) = q(q-1)/cosh(s)**2``.

    Closed form ``q(q-1) (sqrt(pi) Gamma(q) / Gamma(q+1/2))**(1/q)``; the
    Gamma ratio is taken through ``lgamma`` so large ``q`` does not overflow.
    """
    q = params.q
    log_ratio = 0.5 * math.log(math.pi) + math.lgamma(q) - math.lgamma(q + 0.5)
    return q * (q - 1.0) * math.exp(log_ratio / q)


def _positive(name, x):
    if not x > 0:
        raise ParameterError(f"{name} must be positive, got {x!r}")


def lambda_R(mu, params):
    """Optimal eigenvalue bound on the line, ``(q-1)**2 (mu/mu1)**beta``."""
    _positive("mu", mu)
    return (params.q - 1.0) ** 2 * (mu / mu_one(params)) ** params.beta


def invert_lambda_R(lam, params):
    """The norm ``mu`` with ``lambda_R(mu) = lam``."""
    _positive("lambda", lam)
    return mu_one(params) * (lam / (params.q - 1.0) ** 2) ** (1.0 / params.beta)


def scaling_nu(mu, params):
    """Dilation factor ``nu = (mu/mu1)**(q/(2q-1))`` of the optimal family."""
    _positive("mu", mu)
    q = params.q
    return (mu / mu_one(params)) ** (q / (2.0 * q - 1.0))


@dataclass(frozen=True)
class OptimalPotential:
    """``V_{1,mu}(s) = nu**2 q(q-1) / cosh(nu s)**2`` as a vectorised callable."""

    mu: float
    nu: float
    q: float

    def __call__(self, s):
        import numpy as np

        return self.nu**2 * self.q * (self.q - 1.0) / np.cosh(self.nu * np.asarray(s, dtype=float)) ** 2


@dataclass(frozen=True)
class OptimalEigenfunction:
    """``phi_mu(s) = cosh(nu s)**(1-q)``, positive with ``phi_mu(0) = 1``."""

    mu: float
    nu: float
    q: float

    def __call__(self, s):
        import numpy as np

        x = np.abs(self.nu * np.asarray(s, dtype=float))
        # cosh(x)**(1-q) written to avoid overflow for large |x|
        return np.exp((1.0 - self.q) * (x + np.log1p(np.exp(-2.0 * x)) - math.log(2.0)))

    def derivative(self, s):
        import numpy as np

        s = np.asarray(s, dtype=float)
        return (1.0 - self.q) * self.nu * np.tanh(self.nu * s) * self(s)


def optimal_potential(mu, params):
    return OptimalPotential(mu=float(mu), nu=scaling_nu(mu, params), q=params.q)


def optimal_eigenfunction(mu, params):
    return OptimalEigenfunction(mu=float(mu), nu=scaling_nu(mu, params), q=params.q)


# --- rigidity constants -------------------------------------------------------


@dataclass(frozen=True)
class RigidityParams:
    """Data entering ``lambda_theta``.

    ``n`` defaults to ``2q``; ``theta`` is only used by :func:`lambda_theta`
    when no explicit value is passed.
    """

    n: float
    delta: float
    theta: float
    kappa: float
    lambda1_M: float


def delta_of(n, d):
    return (n - d) / ((d - 1) * (n - 1))


def rigidity_params(params, kappa, lambda1_M, n=None, theta=0.0):
    d = params.d
    if n is None:
        n = 2.0 * params.q
    if not n > d:
        raise ParameterError(f"need n > d for a positive delta, got n = {n}, d = {d}")
    return RigidityParams(n=n, delta=delta_of(n, d), theta=theta, kappa=kappa, lambda1_M=lambda1_M)


def rigidity_params_for(params, manifold, n=None, theta=0.0):
    return rigidity_params(params, manifold.kappa, manifold.lambda1, n=n, theta=theta)


def rigidity_params_exact(d, q, kappa, lambda1_M, n=None, theta=0):
    """Same as :func:`rigidity_params` but with no float coercion, for Fraction inputs."""
    if n is None:
        n = 2 * q
    return RigidityParams(n=n, delta=delta_of(n, d), theta=theta, kappa=kappa, lambda1_M=lambda1_M)


def lambda_theta(rp, d, theta=None):
    """``(1 + delta theta (d-1)/(d-2)) kappa + delta (1-theta) lambda1_M``.

    For ``d = 2`` the kappa coefficient is singular; only the flat circle
    (``kappa = 0``) is accepted and the kappa term is dropped.
    """
    if theta is None:
        theta = rp.theta
    if d == 2:
        if rp.kappa != 0:
            raise ParameterError("lambda_theta with d = 2 requires kappa = 0 (flat circle)")
        return rp.delta * (1 - theta) * rp.lambda1_M
    if d < 2:
        raise ParameterError(f"lambda_theta needs d >= 2, got {d}")
    return (1 + rp.delta * theta * (d - 1) / (d - 2)) * rp.kappa + rp.delta * (1 - theta) * rp.lambda1_M


def theta_star(rp, d):
    n = rp.n
    num = (d - 2) * (n - 1) * (3 * n + 1 - d * (3 * n + 5))
    den = (d + 1) * (d * (n * n - n - 4) - n * n + 3 * n + 2)
    if den == 0:
        raise ParameterError(f"theta_star is degenerate for d = {d}, n = {n} (vanishing denominator)")
    return num / den


def lambda_star(rp, d):
    return lambda_theta(rp, d, theta_star(rp, d))


def lambda_zero(rp, d):
    """Lichnerowicz-based lower bound ``kappa + delta lambda1_M`` (``lambda_theta`` at 0)."""
    return lambda_theta(rp, d, 0)


def mu_star_bounds(rp, params):
    """Interval ``(lower, upper)`` known to contain the symmetry-breaking threshold.

    ``lower**beta = lambda_star/(2(q-1)) mu1**beta`` and
    ``upper**beta = lambda1_M/(2q-1) mu1**beta``.  A non-positive
    ``lambda_star`` gives the trivial lower bound 0.
    """
    q, beta = params.q, params.beta
    m1 = mu_one(params)
    ls = float(lambda_star(rp, params.d))
    lower = m1 * (ls / (2.0 * (q - 1.0))) ** (1.0 / beta) if ls > 0 else 0.0
    upper = m1 * (float(rp.lambda1_M) / (2.0 * q - 1.0)) ** (1.0 / beta)
    return lower, upper


def rigidity_coefficient(mu, params, rp):
    """Coefficient ``lambda_star - 2 Lambda_R(mu)/(q-1)`` of the angular term of K."""
    return float(lambda_star(rp, params.d)) - 2.0 * lambda_R(mu, params) / (params.q - 1.0)


def semiclassical_ratio(Lambda, mu, params):
    """``Lambda**gamma / mu**q``, which tends to the Euclidean constant as mu grows."""
    return Lambda ** params.gamma / mu ** params.q
