"""thinbeam: a numerical laboratory for brittle thin-strip elasticity.

The package evaluates and minimizes the rescaled Griffith energy of a thin
2D strip, its 1D brittle bending limit, and the rigidity machinery (good
rectangles, rigid-motion fits, truss determinants) that connects the two.
"""

__version__ = "0.1.0"

from .beam import BeamProblem, BeamState, beam_energy, brute_force_beam, solve_beam
from .compactness import (
    bridge_check,
    build_piecewise_fields,
    classify_rectangles,
    compactness_extract,
    fit_rigid_motions,
    profile_fit,
)
from .grids import DisplacementField, Grid
from .phasefield import DamageField, StripProblem, at_energy, extract_crack, minimize_alternating
from .recovery import LimitProfile, build_recovery, gamma_sweep, limit_energy
from .sharp import CrackSet, EnergyBreakdown, evaluate_Eh
from .tensor import (
    BendingResult,
    ElasticTensor,
    bending_constant,
    coercivity_constant,
    isotropic_tensor,
)
from .truss import OrientedLine, SegmentPair, line_function_f, solve_rigid_from_truss, truss_det

__all__ = [
    "__version__",
    "BeamProblem",
    "BeamState",
    "BendingResult",
    "CrackSet",
    "DamageField",
    "DisplacementField",
    "ElasticTensor",
    "EnergyBreakdown",
    "Grid",
    "LimitProfile",
    "OrientedLine",
    "SegmentPair",
    "StripProblem",
    "at_energy",
    "beam_energy",
    "bending_constant",
    "bridge_check",
    "brute_force_beam",
    "build_piecewise_fields",
    "build_recovery",
    "classify_rectangles",
    "coercivity_constant",
    "compactness_extract",
    "evaluate_Eh",
    "extract_crack",
    "fit_rigid_motions",
    "gamma_sweep",
    "isotropic_tensor",
    "limit_energy",
    "line_function_f",
    "minimize_alternating",
    "profile_fit",
    "solve_beam",
    "solve_rigid_from_truss",
    "truss_det",
]
