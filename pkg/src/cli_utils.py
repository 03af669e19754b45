# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Module for functions containing command line utilities."""

import functools
import logging
import typing

import state
from exceptions import BehecoBaseError, InfeasibilityError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2

A = typing.TypeVar("A")


def exit_code_on_error(
    command: typing.Callable[[A], None],
) -> typing.Callable[[A], int]:
    """Create a decorator that maps toolkit errors of a subcommand to exit codes.

    Args:
        command: The subcommand to wrap.

    Returns:
        The function wrapper.
    """

    @functools.wraps(command)
    def wrapper(args: A) -> int:
        """Run the subcommand and translate failures.

        Args:
            args: The parsed command line arguments.

        Returns:
            0 on success, 2 on infeasibility and 1 on any other toolkit or configuration error.
        """
        try:
            command(args)
        except InfeasibilityError as exc:
            logger.exception("Problem is infeasible")
            report = getattr(exc, "report", None)
            if report:
                logger.error("Infeasibility report: %s", report)
            return EXIT_INFEASIBLE
        except state.ConfigInvalidError as exc:
            logger.exception("Wrong configuration: %s", exc.msg)
            return EXIT_ERROR
        except BehecoBaseError:
            logger.exception("Command failed")
            return EXIT_ERROR
        return EXIT_OK

    return wrapper
