"""X-ray transforms over families of plane curves.

Curve families with conjugate points (unit circles, ellipses, spirals and
general curvature fields), Jacobi-field tools, the weighted transform and its
adjoint on a grid, backprojection and Landweber reconstruction, and the
conjugate-covector maps that predict where artifacts appear.
"""

__version__ = "0.1.0"

from .conjugate import ConjugateChain, Covector, artifact_mask, conjugate_chain, conjugate_covectors
from .curves import (ConjugateLocus, CurveFamily, Ellipse, GeneralLambda, PhasePoint, Spiral, UnitCircle,
                     conjugate_locus, eval_curve, exp_jacobian_det, exp_map)
from .errors import ChartError, ConfigError, GridFormatError, LambdaXrayError, NumericalError
from .grid import GridFunction, square_grid
from .jacobi import (Chart, JacobiSolution, ProjectionPair, first_conjugate_time, projection_pair,
                     solve_frame_ode, solve_jacobi_scalar, wronskian)
from .phantoms import CoherentState, TruncatedGaussian, generate
from .reconstruction import (LandweberConfig, ReconstructionReport, analytic_backprojection, backproject,
                             estimate_operator_norm, filtered_backproject, landweber, relative_error,
                             smooth_cutoff, sqrt_laplacian_filter)
from .transform import WeightField, adjoint, forward, forward_general

__all__ = [
    "ChartError", "ConfigError", "GridFormatError", "LambdaXrayError", "NumericalError",
    "GridFunction", "square_grid",
    "PhasePoint", "CurveFamily", "UnitCircle", "Ellipse", "Spiral", "GeneralLambda",
    "ConjugateLocus", "eval_curve", "exp_map", "exp_jacobian_det", "conjugate_locus",
    "Chart", "JacobiSolution", "ProjectionPair", "solve_frame_ode", "solve_jacobi_scalar",
    "first_conjugate_time", "projection_pair", "wronskian",
    "WeightField", "forward", "adjoint", "forward_general",
    "LandweberConfig", "ReconstructionReport", "sqrt_laplacian_filter", "backproject",
    "filtered_backproject", "analytic_backprojection", "smooth_cutoff", "estimate_operator_norm",
    "landweber", "relative_error",
    "Covector", "ConjugateChain", "conjugate_covectors", "conjugate_chain", "artifact_mask",
    "TruncatedGaussian", "CoherentState", "generate",
]
