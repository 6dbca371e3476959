import numpy as np
import pytest
from scipy.linalg import eigh_tridiagonal

from kltcyl.tridiag import bottom_eigenvalue, inverse_iteration, sturm_count, tridiag_matvec


@pytest.fixture(params=[0, 1, 2])
def random_tridiag(request):
    rng = np.random.default_rng(request.param)
    n = 200
    return rng.normal(size=n) * 3, rng.normal(size=n - 1)


def test_sturm_count_matches_dense(random_tridiag):
    diag, off = random_tridiag
    ev = eigh_tridiagonal(diag, off, eigvals_only=True)
    shifts = np.array([ev[0] - 1, 0.5 * (ev[3] + ev[4]), ev[-1] + 1])
    assert list(sturm_count(diag, off, shifts)) == [0, 4, diag.size]


def test_bottom_eigenvalue(random_tridiag):
    diag, off = random_tridiag
    ev = eigh_tridiagonal(diag, off, eigvals_only=True, select="i", select_range=(0, 0))[0]
    assert bottom_eigenvalue(diag, off) == pytest.approx(ev, abs=1e-12)


def test_inverse_iteration_residual(random_tridiag):
    diag, off = random_tridiag
    e = bottom_eigenvalue(diag, off)
    v, its = inverse_iteration(diag, off, e)
    assert np.linalg.norm(v) == pytest.approx(1.0)
    assert np.linalg.norm(tridiag_matvec(diag, off, v) - e * v) < 1e-10
    assert its <= 50


def test_degenerate_double_well_terminates():
    # two identical deep wells far apart: nearly degenerate ground pair
    n, h = 3000, 0.02
    s = (np.arange(n) - n / 2) * h
    V = 2 / np.cosh(s - 20) ** 2 + 2 / np.cosh(s + 20) ** 2
    diag, off = 2 / h**2 - V, np.full(n - 1, -1 / h**2)
    e = bottom_eigenvalue(diag, off)
    v, _ = inverse_iteration(diag, off, e)
    assert np.linalg.norm(tridiag_matvec(diag, off, v) - e * v) < 1e-8


def test_matvec():
    diag, off = np.array([1.0, 2.0, 3.0]), np.array([4.0, 5.0])
    dense = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    x = np.array([1.0, -1.0, 2.0])
    assert np.allclose(tridiag_matvec(diag, off, x), dense @ x)
