# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Module holding the benchmark systems and their default experiment scenarios."""

import dataclasses
import math

import numpy as np

from lti import StateSpace

EQ18_SYSTEM = StateSpace(
    A=0.99 * np.array([[0.7, 0.2, 0.0], [0.3, 0.7, -0.1], [0.0, -0.2, 0.8]]),
    B=np.array([[1.0], [2.0], [1.5]]),
    C=np.array([[1.0, 1.0, 1.0]]),
    D=np.zeros((1, 1)),
)

ROOM_TEMP_SYSTEM = StateSpace(
    A=np.array(
        [
            [0.8511, 0.0541, 0.0707],
            [0.1293, 0.8635, 0.0055],
            [0.0989, 0.0032, 0.7541],
        ]
    ),
    B=np.array([[0.07], [0.006], [0.004]]),
    C=np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
    D=np.zeros((2, 1)),
)

# Printed noisy recent window of the SISO benchmark; its clean counterpart is re-derived.
SISO_RECENT_U = (-5.2254, 7.2684, -22.5535)
SISO_RECENT_Y = (-1.1242, -23.7291, 13.3406)


@dataclasses.dataclass(frozen=True)
class RegulationScenario:  # pylint: disable=too-many-instance-attributes
    """Default SISO regulation experiment.

    Attributes:
        L_id: The block length used to identify the past window length.
        n_blocks: The number of historical blocks, T = n_blocks * L_id.
        input_std: The standard deviation of the historical inputs.
        identification_delta: The noise bound of the identification data.
        fallback_l_p: The past window length used when identification is inconclusive.
        l_f: The future window length.
        q: The output weight scale.
        r: The input weight scale.
        reference: The constant output reference.
        recent_u: The recent inputs.
        recent_y: The recent noisy outputs.
        averaging: The number of repeated historical experiments averaged.
    """

    L_id: int = 8
    n_blocks: int = 20
    input_std: float = 2.0
    identification_delta: float = 1e-3
    fallback_l_p: int = 3
    l_f: int = 3
    q: float = 1.0
    r: float = 10.0
    reference: float = 0.0
    recent_u: tuple[float, ...] = SISO_RECENT_U
    recent_y: tuple[float, ...] = SISO_RECENT_Y
    averaging: int = 1


@dataclasses.dataclass(frozen=True)
class SafetyScenario:  # pylint: disable=too-many-instance-attributes
    """Default constrained room temperature experiment.

    The system starts at equilibrium, so the recent window is all zeros.

    Attributes:
        L_id: The block length used to identify the past window lengths.
        n_blocks: The number of historical blocks, T = n_blocks * L_id.
        input_std: The standard deviation of the historical inputs.
        identification_delta: The noise bound of the identification data.
        fallback_l_p: The past window length used when identification is inconclusive.
        l_f: The future window length.
        q: The output weight scale.
        r: The input weight scale.
        reference: The constant reference of every output.
        output_lower: The lower bound of the first output over the future window.
        averaging: The number of repeated historical experiments averaged.
    """

    L_id: int = 8
    n_blocks: int = 33
    input_std: float = 1000.0
    identification_delta: float = 0.01
    fallback_l_p: int = 3
    l_f: int = 5
    q: float = 1.0
    r: float = 10.0
    reference: float = 10.0
    output_lower: tuple[float, ...] = (-math.inf, 5.0, 5.0, 5.0, 5.0)
    averaging: int = 1
