"""Exception hierarchy shared by every module."""

from __future__ import annotations


class GxeError(Exception):
    """Base class for all package errors."""


class DataError(GxeError, ValueError):
    """Invalid case-control data (bad codes, non-finite cells, constant columns)."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class DimensionError(GxeError, ValueError):
    def __init__(self, message, axis=None):
        super().__init__(message)
        self.axis = axis


class PrevalenceError(GxeError, ValueError):
    pass


class NumericError(GxeError, FloatingPointError):
    def __init__(self, message, subject=None):
        super().__init__(message)
        self.subject = subject


class SeparationError(GxeError):
    pass


class NonConvergence(GxeError):
    """Solver hit its iteration limit; carries the last iterate."""

    def __init__(self, message, omega=None, score_norm=None, iterations=None):
        super().__init__(message)
        self.omega = omega
        self.score_norm = score_norm
        self.iterations = iterations


class CovarianceError(GxeError):
    def __init__(self, message, condition=None, min_eigenvalue=None):
        super().__init__(message)
        self.condition = condition
        self.min_eigenvalue = min_eigenvalue


class ExcessiveBootstrapFailure(GxeError):
    def __init__(self, message, failures=None):
        super().__init__(message)
        self.failures = failures or []


class ScenarioError(GxeError, ValueError):
    pass


class DegenerateScoreError(GxeError, ValueError):
    pass


class InsufficientData(GxeError, ValueError):
    pass


class ReplicationFailure(GxeError):
    def __init__(self, message, failures=None):
        super().__init__(message)
        self.failures = failures or []
