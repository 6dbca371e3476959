"""Grids shared by the solvers.

:class:`Grid1D` is a Dirichlet finite-difference grid of interior points on
``[s_min, s_max]``.  :class:`SpectralGrid` is a periodic box in ``s`` times
a uniform angular grid, used by the Fourier discretisation of the
variational problems; functions there are assumed to decay well inside the
box.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class Grid1D:
    s_min: float
    s_max: float
    n: int

    def __post_init__(self):
        if not self.s_min < self.s_max:
            raise ParameterError(f"need s_min < s_max, got [{self.s_min}, {self.s_max}]")
        if self.n < 16:
            raise ParameterError(f"need at least 16 interior points, got {self.n}")

    @property
    def h(self):
        return (self.s_max - self.s_min) / (self.n + 1)

    @property
    def points(self):
        return self.s_min + self.h * np.arange(1, self.n + 1)

    def refined(self):
        """Same interval, half the spacing."""
        return Grid1D(self.s_min, self.s_max, 2 * self.n + 1)

    def coarsened(self):
        """Spacing ``2h`` keeping every other interior point (odd-indexed).

        When ``n`` is even the right end moves in by ``h``.
        """
        k = (self.n - 1) // 2 if self.n % 2 else self.n // 2
        return Grid1D(self.s_min, self.s_min + 2 * self.h * (k + 1), k)

    def scaled(self, nu):
        return Grid1D(self.s_min / nu, self.s_max / nu, self.n)

    @staticmethod
    def symmetric(half_width, n):
        return Grid1D(-half_width, half_width, n)

    # quadrature and discrete forms on interior samples (zero boundary values)

    def integrate(self, f, axis=-1):
        return self.h * np.sum(f, axis=axis)

    def grad_energy(self, u, axis=-1):
        """``sum ((u[i+1]-u[i])/h)**2 h`` with zero boundary values.

        Equals ``h u.(-D2)u`` for the three-point Dirichlet Laplacian.
        """
        u = np.moveaxis(np.asarray(u, dtype=float), axis, -1)
        pad = [(0, 0)] * (u.ndim - 1) + [(1, 1)]
        du = np.diff(np.pad(u, pad), axis=-1)
        return np.sum(du**2, axis=-1) / self.h

    def derivative(self, f, order=1):
        return fd_derivative(f, self.h, order)


# fourth-order one-sided stencils for the first two points (coefficients of f0..f5)
_D1_EDGE = (np.array([-25.0, 48.0, -36.0, 16.0, -3.0, 0.0]) / 12.0,
            np.array([-3.0, -10.0, 18.0, -6.0, 1.0, 0.0]) / 12.0)
_D2_EDGE = (np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / 12.0,
            np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0]) / 12.0)


def fd_derivative(f, h, order=1):
    """Fourth-order differences along the last axis (one-sided at the ends)."""
    f = np.asarray(f, dtype=float)
    if f.shape[-1] < 6:
        raise ValueError("need at least 6 samples")
    out = np.empty_like(f)
    if order == 1:
        out[..., 2:-2] = (-f[..., 4:] + 8 * f[..., 3:-1] - 8 * f[..., 1:-3] + f[..., :-4]) / 12.0
        edge, sign = _D1_EDGE, -1.0
    elif order == 2:
        out[..., 2:-2] = (-f[..., 4:] + 16 * f[..., 3:-1] - 30 * f[..., 2:-2]
                          + 16 * f[..., 1:-3] - f[..., :-4]) / 12.0
        edge, sign = _D2_EDGE, 1.0
    else:
        raise ValueError("order must be 1 or 2")
    head, tail = f[..., :6], f[..., -6:][..., ::-1]
    for i, c in enumerate(edge):
        out[..., i] = head @ c
        out[..., -1 - i] = sign * (tail @ c)
    return out / h**order


def angular_wavenumbers(m):
    return np.fft.fftfreq(m, d=1.0 / m)


@dataclass(frozen=True)
class SpectralGrid:
    """``n`` points on the periodic interval ``[-half_length, half_length)`` times ``m`` angles.

    The angular measure has total mass one, so integrals are plain means
    over the angular axis.  Arrays are laid out as ``(m, n)``.
    """

    half_length: float
    n: int
    m: int = 1

    def __post_init__(self):
        if self.half_length <= 0 or self.n < 8 or self.m < 1:
            raise ParameterError(f"invalid spectral grid {self}")

    @property
    def h(self):
        return 2.0 * self.half_length / self.n

    @property
    def points(self):
        return -self.half_length + self.h * np.arange(self.n)

    @property
    def angles(self):
        return 2.0 * np.pi * np.arange(self.m) / self.m

    @property
    def shape(self):
        return (self.m, self.n)

    @property
    def weight(self):
        return self.h / self.m

    def xi(self):
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.h)

    def symbols(self):
        """Fourier symbols of ``-d2/ds2`` and ``-d2/dtheta2`` on the ``(m, n)`` layout."""
        xi2 = self.xi() ** 2
        k2 = angular_wavenumbers(self.m) ** 2
        return np.broadcast_to(xi2[None, :], self.shape), np.broadcast_to(k2[:, None], self.shape)

    @staticmethod
    def for_decay(rate, points_per_length=4.0, half_width=30.0, m=1):
        """Grid resolving functions decaying like ``exp(-rate |s|)``.

        Spacing ``1/(points_per_length rate)``, box half-length
        ``half_width/rate``, an even number of points of FFT-friendly size.
        """
        from scipy.fft import next_fast_len

        n = next_fast_len(int(math.ceil(2.0 * half_width * points_per_length)))
        n += n % 2
        return SpectralGrid(half_length=half_width / rate, n=n, m=m)


def angular_count(rate, points_per_length, m_min):
    """Angular points resolving features of width ``1/rate`` on a unit circle."""
    from scipy.fft import next_fast_len

    m = max(int(m_min), int(math.ceil(2.0 * math.pi * points_per_length * rate)))
    m = next_fast_len(m)
    return m + m % 2
