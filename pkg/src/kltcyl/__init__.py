"""Numerical companion for Keller-Lieb-Thirring inequalities on cylinders R x M.

Submodules: :mod:`params` (closed forms), :mod:`manifold` (spectral data of
M), :mod:`line` and :mod:`cylinder` (Schrodinger ground states),
:mod:`variational` (the dual interpolation problem, Lambda(mu), J and K),
:mod:`acceptance` and :mod:`cli`.
"""

from .errors import (BracketError, ConvergenceError, DomainError, FormatError, InconclusiveError,
                     KLTError, ParameterError)
from .params import InequalityParams, RigidityParams, make_params, mu_one, lambda_R
from .manifold import ManifoldSpec, load_manifold, sphere_spec

__version__ = "0.1.0"

__all__ = [
    "BracketError", "ConvergenceError", "DomainError", "FormatError", "InconclusiveError", "KLTError",
    "ParameterError", "InequalityParams", "RigidityParams", "make_params", "mu_one", "lambda_R",
    "ManifoldSpec", "load_manifold", "sphere_spec",
]
