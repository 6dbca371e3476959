"""Exception hierarchy shared by the solvers and the command-line driver."""


class KLTError(Exception):
    """Base class for all package errors."""


class ParameterError(KLTError, ValueError):
    """An input violates an admissible-range rule."""


class FormatError(KLTError, ValueError):
    """A data file could not be parsed or failed validation."""


class DomainError(KLTError, ValueError):
    """A quantity is undefined for the given input (e.g. a vanishing potential)."""


class ConvergenceError(KLTError, RuntimeError):
    """An iterative solver stopped before reaching its tolerance.

    ``state`` carries the best iterate found, ``diagnostics`` a dict of
    whatever the solver thought useful for a post mortem.
    """

    def __init__(self, message, state=None, diagnostics=None):
        super().__init__(message)
        self.state = state
        self.diagnostics = dict(diagnostics or {})


class BracketError(ConvergenceError):
    """A root could not be bracketed."""


class InconclusiveError(KLTError):
    """A detector gave non-monotone answers across a bracket."""

    def __init__(self, message, samples=None):
        super().__init__(message)
        self.samples = list(samples or [])
