"""Explicit integer families recurrent for r circle rotations but not for all.

The package builds the block families stage by stage with exact big-integer
and rational arithmetic, constructs the nested-interval witness angles that
certify non-recurrence, and audits every defining inequality with certified
enclosures.  See the README for the CLI and file formats.
"""

from . import circle, dirichlet, jsonio, klapprox  # noqa: F401
from .circle import ChordEnclosure, Comparison, DistZ, UAngle, chord, compare_chord, dist_to_Z, pow_chord, reduce  # noqa: F401
from .dirichlet import DichotomyParams, NetHit, PowerCollapse, dichotomy, dichotomy_params, minimal_constants, net_constants  # noqa: F401
from .errors import *  # noqa: F401,F403
from .klapprox import IndepReport, IntVec, calibrate_c, check_condition, e_set, simultaneous_hit  # noqa: F401

__version__ = "0.1.0"
