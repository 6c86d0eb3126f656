"""Verification lab and solver for radial gradient-diffusivity reaction-diffusion equations."""

from .numerics import (HyperDual, QuadratureResult, differentiate, integrate,
                       invert_monotone, upper_incomplete_gamma)
from .model import (ProblemSpec, CaseTag, classify, eval_g, eval_h, pde_rhs,
                    problem_from_dict, problem_to_dict)

__version__ = "0.1.0"
