# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Fixtures for the beheco test suites."""


from pytest import Parser


def pytest_addoption(parser: Parser):
    """Add options to pytest parser.

    Args:
        parser: The pytest argument parser.
    """
    parser.addoption(
        "--trials",
        action="store",
        type=int,
        default=50,
        help="The number of seeded trials of the statistical integration tests.",
    )
    parser.addoption(
        "--processes",
        action="store",
        type=int,
        default=None,
        help="The number of worker processes of the integration sweeps.",
    )
