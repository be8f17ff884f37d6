"""Exact local base change for GL_n along tame cyclic extensions of Q_p."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .localfield import (PadicElem, TowerSpec, apply_theta, make_tower, norm_trace, parse,
                         serialize, teichmuller, theta_power, valuation_invert)
from .matgrp import (CongruenceLevel, MatrixE, TwistedElem, dth_root_tu, in_congruence,
                     is_norm_of, is_regular, is_top_unipotent, theta_fixed_level,
                     twisted_conjugate, twisted_norm)
from .descent import (LatticePair, LieElement, cayley, cayley_inv, descend, is_top_nilpotent,
                      split_theta_eigen)
from .orbital import (DEFAULT_NORMALIZATION, HaarNormalization, MatchReport, OrbitalValue,
                      TestFunction, check_matching, norm_witness, normalizing_factor_H,
                      normalizing_factor_twisted, orbital_integral, transfer_factor, volume)
