from fractions import Fraction
import math

import numpy as np
import pytest
from scipy.integrate import quad

from kltcyl import params as P
from kltcyl.errors import ParameterError
from kltcyl.manifold import sphere_spec


def _lq_norm_quad(f, q):
    val, _ = quad(lambda s: abs(f(s)) ** q, -60, 60, epsabs=0, epsrel=1e-13, limit=400, points=[0.0])
    return val ** (1 / q)


@pytest.mark.parametrize("d,q", [(2, 2.0), (3, 3.0), (2, 1.5), (4, 2.5)])
def test_derived_exponents(d, q):
    pr = P.make_params(d, q)
    assert pr.p == pytest.approx(2 * q / (q - 1))
    assert pr.beta == pytest.approx(2 * q / (2 * q - 1))
    assert pr.gamma == pytest.approx(q - d / 2)
    assert P.q_from_p(pr.p) == pytest.approx(q)


@pytest.mark.parametrize("d,q", [(1, 2.0), (2, 1.0), (3, 1.5), (3, 1.4), (2.5, 3.0), (2, float("nan"))])
def test_invalid_params(d, q):
    with pytest.raises(ParameterError):
        P.make_params(d, q)


def test_q_rule_is_named():
    with pytest.raises(ParameterError, match=r"q > d/2"):
        P.make_params(3, 1.4)


def test_mu_one_q2_exact(p22):
    # sqrt(pi) Gamma(2)/Gamma(5/2) = 4/3, so mu1 = 2 (4/3)^(1/2)
    assert P.mu_one(p22) == pytest.approx(4 / math.sqrt(3), rel=1e-15)


@pytest.mark.parametrize("q", [1.5, 2.0, 2.5, 3.0, 5.0, 40.0])
def test_mu_one_matches_quadrature(q):
    pr = P.make_params(2, q)
    f = lambda s: q * (q - 1) * (2 / (math.exp(s) + math.exp(-s))) ** 2
    assert P.mu_one(pr) == pytest.approx(_lq_norm_quad(f, q), rel=1e-10)


@pytest.mark.parametrize("q", [2.0, 3.0])
def test_lambda_R_and_inverse(q):
    pr = P.make_params(2, q)
    m1 = P.mu_one(pr)
    assert P.lambda_R(m1, pr) == pytest.approx((q - 1) ** 2)
    for mu in (0.1, 1.0, 7.5):
        assert P.invert_lambda_R(P.lambda_R(mu, pr), pr) == pytest.approx(mu, rel=1e-13)
    assert P.scaling_nu(m1, pr) == pytest.approx(1.0)


def test_lambda_R_rejects_nonpositive(p22):
    with pytest.raises(ParameterError):
        P.lambda_R(0.0, p22)


@pytest.mark.parametrize("q,mu", [(2.0, 0.7), (3.0, 5.0)])
def test_optimal_potential_has_norm_mu(q, mu):
    pr = P.make_params(2, q)
    V = P.optimal_potential(mu, pr)
    assert _lq_norm_quad(V, q) == pytest.approx(mu, rel=1e-9)


@pytest.mark.parametrize("q,mu", [(2.0, 1.3), (3.0, 0.4)])
def test_optimal_eigenfunction_solves_ode(q, mu):
    pr = P.make_params(2, q)
    V, phi = P.optimal_potential(mu, pr), P.optimal_eigenfunction(mu, pr)
    s = np.linspace(-3, 3, 13)
    h = 1e-4
    second = (phi(s + h) - 2 * phi(s) + phi(s - h)) / h**2
    resid = -second - V(s) * phi(s) + P.lambda_R(mu, pr) * phi(s)
    assert np.max(np.abs(resid)) < 1e-5
    fd = (phi(s + h) - phi(s - h)) / (2 * h)
    assert np.allclose(phi.derivative(s), fd, atol=1e-8)


def test_eigenfunction_no_overflow(p22):
    phi = P.optimal_eigenfunction(P.mu_one(p22), p22)
    assert np.all(np.isfinite(phi(np.array([-1e4, 0.0, 1e4]))))


def test_theta_star_exact_d3_n6():
    rp = P.rigidity_params_exact(3, Fraction(3), Fraction(1), Fraction(2))
    assert P.theta_star(rp, 3) == Fraction(-125, 124)


def test_delta_default_n_is_2q(p22):
    rp = P.rigidity_params(p22, 0.0, 1.0)
    assert rp.n == 4.0
    assert rp.delta == pytest.approx((4 - 2) / ((2 - 1) * (4 - 1)))


def test_rigidity_needs_n_above_d(p22):
    with pytest.raises(ParameterError):
        P.rigidity_params(p22, 0.0, 1.0, n=2.0)


def test_lambda_theta_d2_requires_flat_circle(p22):
    rp = P.rigidity_params(p22, 0.5, 1.0)
    with pytest.raises(ParameterError):
        P.lambda_theta(rp, 2)


@pytest.mark.parametrize("d", range(2, 11))
@pytest.mark.parametrize("q", [2, 3, 4])
def test_sphere_identity_exact(d, q):
    rp = P.rigidity_params_exact(d, Fraction(q), Fraction(d - 2), Fraction(d - 1))
    assert P.lambda_star(rp, d) / (2 * (q - 1)) == Fraction(d - 1, 2 * q - 1)


def test_sphere_interval_collapses_d2(p22, circle):
    rp = P.rigidity_params_for(p22, circle)
    lo, hi = P.mu_star_bounds(rp, p22)
    assert lo == pytest.approx(hi, rel=1e-14)
    assert hi == pytest.approx(P.mu_one(p22) * 3 ** -0.75, rel=1e-14)
    assert hi == pytest.approx(1.013114, abs=1e-6)
    assert P.lambda_R(hi, p22) == pytest.approx(1 / 3)


def test_generic_interval_is_proper():
    pr = P.make_params(3, 2.0)
    rp = P.rigidity_params(pr, kappa=0.0, lambda1_M=2.0)
    lo, hi = P.mu_star_bounds(rp, pr)
    assert 0 < lo < hi


def test_negative_lambda_star_gives_zero_lower_bound():
    pr = P.make_params(3, 2.0)
    rp = P.rigidity_params(pr, kappa=-5.0, lambda1_M=0.1)
    assert P.mu_star_bounds(rp, pr)[0] == 0.0


def test_rigidity_coefficient_vanishes_at_lower_bound():
    pr = P.make_params(3, 2.0)
    rp = P.rigidity_params(pr, kappa=0.0, lambda1_M=2.0)
    lo, _ = P.mu_star_bounds(rp, pr)
    assert P.rigidity_coefficient(lo, pr, rp) == pytest.approx(0.0, abs=1e-12)
    assert P.rigidity_coefficient(0.9 * lo, pr, rp) > 0 > P.rigidity_coefficient(1.1 * lo, pr, rp)


def test_semiclassical_ratio(p22):
    assert P.semiclassical_ratio(4.0, 2.0, p22) == pytest.approx(4.0 / 4.0)
