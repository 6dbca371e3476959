"""Spectral description of the compact factor M of the cylinder R x M.

M is never meshed.  It is described by its dimension, the Ricci lower bound
kappa and the Laplace-Beltrami eigenvalues with multiplicities.  Norms on M
use the measure rescaled to total mass one, so sphere eigenvalues keep their
unit-radius values l(l + d - 2).
"""

from dataclasses import dataclass, field
from math import comb, gamma, pi

import numpy as np

from .errors import FormatError, ParameterError


@dataclass(frozen=True)
class ManifoldSpec:
    dim: int
    kappa: float
    eigenvalues: tuple
    multiplicities: tuple
    name: str = "generic"
    kind: str = "generic"
    # natural (unnormalised) volume, only known for model spaces
    volume: float = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        mult = np.asarray(self.multiplicities)
        if self.dim < 1:
            raise ParameterError(f"manifold dimension must be >= 1, got {self.dim}")
        if ev.ndim != 1 or ev.size < 2 or ev.size != mult.size:
            raise ParameterError("need at least lambda_0 and lambda_1, with one multiplicity each")
        if ev[0] != 0.0 or mult[0] != 1:
            raise ParameterError("lambda_0 must be 0 with multiplicity 1 (M connected)")
        if np.any(ev[1:] <= 0) or np.any(np.diff(ev) < 0):
            raise ParameterError("eigenvalues must be nondecreasing and positive from index 1")
        if np.any(mult < 1):
            raise ParameterError("multiplicities must be positive integers")

    @property
    def lambda1(self):
        return float(self.eigenvalues[1])

    @property
    def d(self):
        """Dimension of the cylinder R x M."""
        return self.dim + 1

    @property
    def is_sphere(self):
        return self.kind == "sphere"


def sphere_multiplicity(ell, dim):
    """Dimension of degree-``ell`` spherical harmonics on the ``dim``-sphere."""
    if ell == 0:
        return 1
    if dim == 1:
        return 2
    return comb(ell + dim, dim) - comb(ell + dim - 2, dim)


def sphere_spec(d, L_max=8):
    """Unit sphere S^{d-1}: eigenvalues l(l+d-2), Ricci bound d-2."""
    if d < 2:
        raise ParameterError(f"sphere_spec needs d >= 2, got {d}")
    if L_max < 1:
        raise ParameterError("L_max must be >= 1")
    dim = d - 1
    ells = range(L_max + 1)
    return ManifoldSpec(
        dim=dim,
        kappa=float(d - 2),
        eigenvalues=tuple(float(l * (l + d - 2)) for l in ells),
        multiplicities=tuple(sphere_multiplicity(l, dim) for l in ells),
        name=f"S^{dim}",
        kind="sphere",
        volume=2.0 * pi ** (d / 2) / gamma(d / 2),
    )


def extend_sphere(M, ell_needed):
    """Return a sphere spec carrying at least ``ell_needed + 1`` eigenvalues."""
    if not M.is_sphere or len(M.eigenvalues) > ell_needed:
        return M
    return sphere_spec(M.d, ell_needed)


def lichnerowicz_check(spec):
    """``kappa dim/(dim-1) <= lambda1`` (up to 1e-12).

    On a circle Ricci vanishes identically, so the check degenerates to
    ``kappa <= 0``.
    """
    if spec.dim == 1:
        return spec.kappa <= 0
    return spec.kappa * spec.dim / (spec.dim - 1) <= spec.lambda1 + 1e-12


def load_manifold(path, name=None):
    """Read a manifold file: header ``dim kappa``, then ``lambda multiplicity`` lines.

    Blank lines and ``#`` comments are ignored.  The Lichnerowicz inequality
    is enforced on top of the ManifoldSpec invariants.
    """
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                rows.append(line.split())
    if not rows:
        raise FormatError(f"{path}: empty manifold file")
    try:
        dim = int(rows[0][0])
        kappa = float(rows[0][1])
        ev = [float(r[0]) for r in rows[1:]]
        mult = [int(r[1]) for r in rows[1:]]
    except (ValueError, IndexError) as exc:
        raise FormatError(f"{path}: malformed manifold file ({exc})") from None
    try:
        spec = ManifoldSpec(dim=dim, kappa=kappa, eigenvalues=tuple(ev), multiplicities=tuple(mult),
                            name=name or str(path))
    except ParameterError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if not lichnerowicz_check(spec):
        raise FormatError(f"{path}: kappa = {kappa} violates the Lichnerowicz bound with lambda1 = {spec.lambda1}")
    return spec


def save_manifold(spec, path):
    with open(path, "w") as fh:
        fh.write(f"{spec.dim} {spec.kappa!r}\n")
        for lam, m in zip(spec.eigenvalues, spec.multiplicities):
            fh.write(f"{lam!r} {m}\n")
