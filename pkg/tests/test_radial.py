import math

import numpy as np
import pytest

from kltcyl import params as P
from kltcyl.errors import ParameterError
from kltcyl.radial import profile, radial_gns_constant, radial_ground_state, radial_quotient


@pytest.mark.parametrize("q", [2.0, 3.0])
def test_one_dimensional_constant(q):
    """On the line Lambda_R^gamma = L mu^q gives L = (q-1)^(2q-1) / mu1^q."""
    pr = P.make_params(2, q)
    expected = (q - 1) ** (2 * q - 1) / P.mu_one(pr) ** q
    assert radial_gns_constant(1, pr.p) == pytest.approx(expected, rel=1e-8)


def test_one_dimensional_profile_is_sech():
    # -u'' + u = u^3 has u = sqrt(2) sech(r)
    a, _ = radial_ground_state(1, 4.0)
    assert a == pytest.approx(math.sqrt(2), rel=1e-9)
    r = np.linspace(0, 5, 11)
    assert np.allclose(profile(1, 4.0, r), math.sqrt(2) / np.cosh(r), atol=1e-7)


def test_townes_soliton():
    """d = 2, p = 4: the Townes profile has R(0) = 2.20620 and ||R||_2^2 = 11.70090.

    Pohozaev gives ||grad R||^2 = ||R||^2 = ||R||_4^4 / 2, so the minimal
    quotient is sqrt(2 ||R||_2^2).
    """
    Q, a = radial_quotient(2, 4.0)
    assert a == pytest.approx(2.20620, abs=2e-5)
    assert Q == pytest.approx(math.sqrt(2 * 11.700896), rel=2e-6)
    assert radial_gns_constant(2, 4.0) == pytest.approx(Q**-2)


def test_townes_against_grid_minimiser():
    """Independent check: minimise the quotient on a 2D Fourier grid."""
    n, L = 128, 16.0
    x = (np.arange(n) - n / 2) * (2 * L / n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    k = 2 * np.pi * np.fft.fftfreq(n, d=2 * L / n)
    A = k[:, None] ** 2 + k[None, :] ** 2 + 1.0
    w = (2 * L / n) ** 2
    u = np.exp(-(X**2 + Y**2))
    for _ in range(400):
        u = u / (w * np.sum(u**4)) ** 0.25
        Q = w * np.sum(u * np.real(np.fft.ifft2(A * np.fft.fft2(u))))
        u = Q * np.real(np.fft.ifft2(np.fft.fft2(u**3) / A))
    u = u / (w * np.sum(u**4)) ** 0.25
    Q_grid = w * np.sum(u * np.real(np.fft.ifft2(A * np.fft.fft2(u))))
    assert radial_quotient(2, 4.0)[0] == pytest.approx(Q_grid, rel=1e-6)


@pytest.mark.parametrize("d,p", [(0, 4.0), (2, 2.0), (3, 6.0), (1.5, 4.0)])
def test_invalid(d, p):
    with pytest.raises(ParameterError):
        radial_ground_state(d, p)
