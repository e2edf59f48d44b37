"""Axisymmetric Gavrilov flows: profiles, generatrix solver, torus flow and field checks."""

from .errors import (GavriflowError, ParameterError, SingularSystemError, InadmissiblePointError,
                     DomainError, ExtensionError, DataError)
from .scenario import FlowScenario, figure1_scenario, load_scenario
from .profiles import (ProfileTriple, RationalSeries, alpha_closed_form, consistency_rhs,
                       integrate_profiles, series_beta_gamma)
from .consistency import JetPoint, closure, eval_FG, jacobi_bracket, completeness_residual
from .axisolver import GeneratrixGrid, solve_f, detect_symmetry, extend_periodic, find_pc
from .minpoint import BivariatePoly, PsiField, psi_taylor, psi_march, isolines, critical_points
from .fields import (AxisymField, CartesianField, GeneratrixFamily, reconstruct, euler_residuals,
                     verify_geometry, plane_section_integral, make_evendim_flow, localize,
                     bernoulli_audit)

__version__ = "0.1.0"
