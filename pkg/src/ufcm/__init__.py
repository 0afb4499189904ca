"""Universal fast composite minimization.

First-order solvers for heterogeneous composite problems
``min g0(x) + h(g1(x), ..., gm(x)) + u(x)``: the sliding primal-dual method,
its restarted variant, the aggregate curvature constants that parameterize
them, an exact prox catalog, quality certificates, reference oracles, and a
benchmark harness.
"""

from .constants import AdaConstants, ada_convexity, ada_smoothness, holder_approx_constant
from .model import (AnchoredConjugate, AveragedConjugate, Component, Composer,
                    ConvexityProfile, EvaluationDomainError, HolderProfile,
                    PrimalDualPoint, ProblemInstance, Regularizer, SaddleData,
                    gap_value, lagrangian_value, make_problem, objective_value)
from .prox import ProxHandle, conjugate_prox, project_simplex, prox_step
from .restart import RestartPlan, choose_K, doubling_ladder, restart_plan, rufcm
from .solver import (SolverAbort, SolverConfig, build_schedule, check_conditions,
                     inner_sliding, ufcm)

__all__ = [
    "AdaConstants", "AnchoredConjugate", "AveragedConjugate", "Component",
    "Composer", "ConvexityProfile", "EvaluationDomainError", "HolderProfile",
    "PrimalDualPoint", "ProblemInstance", "ProxHandle", "Regularizer",
    "RestartPlan", "SaddleData", "SolverAbort", "SolverConfig",
    "ada_convexity", "ada_smoothness", "build_schedule", "check_conditions",
    "choose_K", "conjugate_prox", "doubling_ladder", "gap_value",
    "holder_approx_constant", "inner_sliding", "lagrangian_value",
    "make_problem", "objective_value", "project_simplex", "prox_step",
    "restart_plan", "rufcm", "ufcm",
]

__version__ = "0.1.0"
