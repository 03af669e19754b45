# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Exceptions raised by the regulation toolkit."""


class BehecoBaseError(Exception):
    """Base exceptions for the regulation toolkit."""


class DimensionError(BehecoBaseError, ValueError):
    """Represents an error while matching matrix or sequence dimensions."""


class NoiseBoundError(BehecoBaseError, ValueError):
    """Represents an error while validating a measurement noise bound."""


class HorizonError(BehecoBaseError, ValueError):
    """Represents an error while splitting data into past and future windows."""


class HeuristicInputError(BehecoBaseError, ValueError):
    """Represents an error while fitting the input scaling heuristic."""


class ConstraintError(BehecoBaseError, ValueError):
    """Represents an error while validating box constraint bounds."""


class RankCollapseError(BehecoBaseError):
    """Represents an error while inverting a perturbed data matrix that lost rank."""


class SolverError(BehecoBaseError):
    """Represents an error while solving a linear system or quadratic program."""


class CertificateError(BehecoBaseError):
    """Represents an error while computing the suboptimality certificate."""


class InfeasibilityError(BehecoBaseError):
    """Base class for problems that have no feasible point."""


class InnerProblemInfeasibleError(InfeasibilityError):
    """Represents an error while finding a feasible worst-case noise realization."""


class InfeasibleTighteningError(InfeasibilityError):
    """Represents an error while tightening an output box by its error radius."""


class InfeasibleProblemError(InfeasibilityError):
    """Represents an error while solving a constrained input problem.

    Attributes:
        report: Per-output description of the constraint set that failed.
    """

    def __init__(self, msg: str, report: dict | None = None):
        """Initialize a new instance of the InfeasibleProblemError exception.

        Args:
            msg: Explanation of the error.
            report: Per-output description of the constraint set that failed.
        """
        super().__init__(msg)
        self.report = report or {}


class ExperimentRunError(BehecoBaseError):
    """Represents an error while running experiment trials."""


class OutputWriteError(BehecoBaseError):
    """Represents an error while writing results to disk."""
