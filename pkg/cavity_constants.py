"""Physical constants used across the toolkit.

Values come from ``scipy.constants`` (CODATA). h, c and k_B are exact in the
2019 SI, so they are identical in the 2018 and later adjustments.
"""

from __future__ import annotations

import math

from scipy import constants

PLANCK = constants.h  # J s
HBAR = PLANCK / (2 * math.pi)  # J s
SPEED_OF_LIGHT = constants.c  # m/s
BOLTZMANN = constants.k  # J/K

PPM = 1e-6
