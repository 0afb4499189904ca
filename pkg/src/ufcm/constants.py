"""Universal curvature constants.

Three aggregates drive the solver schedules and complexity predictions:

* the tolerance-indexed approximate smoothness of a single Holder-smooth
  term (:func:`holder_approx_constant`);
* the aggregate dualized smoothness, a weighted sum when every component has a
  Lipschitz gradient and otherwise the unique positive root of a fixed-point
  equation tying the tolerance to the accuracy target
  (:func:`ada_smoothness`);
* the aggregate dualized convexity, defined implicitly the same way
  (:func:`ada_convexity`).

Both implicit equations reduce to ``1 = sum_j c_j * t**e_j`` with every
``e_j < 0``, so the residual ``1 - sum_j c_j t**e_j`` is strictly increasing in
``t`` and the root is unique and bracketable.  Roots are located by bisection
on a log scale and polished with a few Newton steps; every returned root is
re-verified by direct substitution to 1e-10 relative residual.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import ConvexityProfile, HolderProfile, ProblemInstance, SaddleData

_ROOT_RTOL = 1e-10


@dataclass(frozen=True)
class AdaConstants:
    """Solved aggregate constants with the parameters that produced them."""

    l_ada: float
    mu_ada: float
    epsilon: float
    r: float
    D_x: float
    delta_used: float


def holder_approx_constant(L: float, p: float, delta: float) -> float:
    """Smallest quadratic-overestimation constant at tolerance delta.

    Equality choice ((1-p)/(1+p) / delta)**((1-p)/(1+p)) * L**(2/(1+p)); the
    exponent-zero case (p = 1) yields bracket factor exactly 1.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    a = (1.0 - p) / (1.0 + p)
    bracket = 1.0 if a == 0.0 else (a / delta) ** a
    return bracket * L ** (2.0 / (1.0 + p))


def _positive_root(coeffs, exps) -> float:
    """Unique positive root of sum_j c_j * t**e_j = 1 with c_j > 0, e_j < 0."""
    coeffs = np.asarray(coeffs, float)
    exps = np.asarray(exps, float)

    def residual(t):
        return 1.0 - float(np.sum(coeffs * t ** exps))

    def dresidual(t):
        return -float(np.sum(coeffs * exps * t ** (exps - 1.0)))

    lo, hi = 1e-12, max(1.0, float(np.sum(coeffs))) * 1e6
    while residual(hi) < 0.0:
        hi *= 1e3
    while residual(lo) > 0.0:
        lo *= 1e-3
        if lo < 1e-300:
            raise ArithmeticError("positive root bracketing failed")
    llo, lhi = math.log(lo), math.log(hi)
    for _ in range(200):
        mid = 0.5 * (llo + lhi)
        if residual(math.exp(mid)) >= 0.0:
            lhi = mid
        else:
            llo = mid
        if lhi - llo < 1e-14:
            break
    root = math.exp(0.5 * (llo + lhi))
    for _ in range(3):
        root -= residual(root) / dresidual(root)
    if abs(residual(root)) > _ROOT_RTOL:
        raise ArithmeticError("fixed-point residual too large after polish")
    return root


def ada_smoothness(holder: Sequence[HolderProfile], lambda_star, r: float,
                   epsilon: float, D_x: float,
                   mu_ada: Optional[float] = None) -> float:
    """Aggregate dualized smoothness constant.

    With every exponent p_j = 1 this is exactly ``sum_j (lambda_j* + r) L_j``.
    Otherwise it is the positive root of the defining fixed-point equation,
    using width factor min(2*sqrt(6)*D_x/sqrt(eps), 4*sqrt(6)/sqrt(mu_ada))
    when ``mu_ada`` is supplied and positive.  The component count entering the
    equation is the post-rewrite count, i.e. ``len(holder)``.
    """
    lam = np.asarray(lambda_star, float)
    if len(holder) != lam.size:
        raise ValueError("profile and multiplier lengths differ")
    if np.min(lam) < 0:
        raise ValueError("multipliers must be nonnegative")
    weights = np.array([(lam[j] + r) * holder[j].L for j in range(len(holder))])
    if np.max(weights) <= 0.0:
        raise ArithmeticError("all weighted smoothness terms vanish; no positive root")
    if all(h.p == 1.0 for h in holder):
        return float(np.sum(weights))
    if epsilon <= 0 or D_x <= 0:
        raise ValueError("epsilon and D_x must be positive")
    m = len(holder)
    width = 2.0 * math.sqrt(6.0) * D_x / math.sqrt(epsilon)
    if mu_ada is not None and mu_ada > 0.0:
        width = min(width, 4.0 * math.sqrt(6.0) / math.sqrt(mu_ada))
    coeffs, exps = [], []
    for j, h in enumerate(holder):
        if weights[j] == 0.0:
            continue
        a = (1.0 - h.p) / (1.0 + h.p)
        bracket = 1.0 if a == 0.0 else (a * m * width / epsilon) ** a
        coeffs.append(bracket * weights[j] ** (2.0 / (1.0 + h.p)))
        exps.append(-(1.0 + 3.0 * h.p) / (2.0 * (1.0 + h.p)))
    return _positive_root(coeffs, exps)


def ada_convexity(convexity: Sequence[ConvexityProfile], lambda_star,
                  epsilon: float) -> float:
    """Aggregate dualized convexity constant; 0 when no weighted curvature."""
    lam = np.asarray(lambda_star, float)
    if len(convexity) != lam.size:
        raise ValueError("profile and multiplier lengths differ")
    if np.min(lam) < 0:
        raise ValueError("multipliers must be nonnegative")
    weights = np.array([lam[j] * convexity[j].mu for j in range(len(convexity))])
    if np.max(weights, initial=0.0) <= 0.0:
        return 0.0
    if all(c.q == 1.0 for c in convexity):
        return float(np.sum(weights))
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    coeffs, exps = [], []
    for j, c in enumerate(convexity):
        if weights[j] == 0.0:
            continue
        coeffs.append(2.0 * weights[j] / (c.q + 1.0) * epsilon ** ((c.q - 1.0) / 2.0))
        exps.append(-(c.q + 1.0) / 2.0)
    return _positive_root(coeffs, exps)


def smoothness_residual(l_value: float, holder, lambda_star, r, epsilon, D_x,
                        mu_ada: Optional[float] = None) -> float:
    """Defining-equation residual 1 - sum_j c_j L**e_j at a trial L.

    Strictly increasing in the trial value; zero at the aggregate constant.
    """
    lam = np.asarray(lambda_star, float)
    m = len(holder)
    width = 2.0 * math.sqrt(6.0) * D_x / math.sqrt(epsilon)
    if mu_ada is not None and mu_ada > 0.0:
        width = min(width, 4.0 * math.sqrt(6.0) / math.sqrt(mu_ada))
    total = 0.0
    for j, h in enumerate(holder):
        w = (lam[j] + r) * h.L
        if w == 0.0:
            continue
        a = (1.0 - h.p) / (1.0 + h.p)
        bracket = 1.0 if a == 0.0 else (a * m * width / epsilon) ** a
        total += bracket * w ** (2.0 / (1.0 + h.p)) \
            * l_value ** (-(1.0 + 3.0 * h.p) / (2.0 * (1.0 + h.p)))
    return 1.0 - total


def delta_for(l_ada: float, epsilon: float, D_x: float,
              mu_ada: Optional[float] = None) -> float:
    """Tolerance realized inside the implicit smoothness definition."""
    width = 2.0 * math.sqrt(6.0) * D_x / math.sqrt(epsilon)
    if mu_ada is not None and mu_ada > 0.0:
        width = min(width, 4.0 * math.sqrt(6.0) / math.sqrt(mu_ada))
    return epsilon / (math.sqrt(l_ada) * width)


def solve_constants(problem: ProblemInstance, saddle: SaddleData, epsilon: float,
                    r: float, use_mu_width: bool = False) -> AdaConstants:
    """Solve both aggregates for a problem with an oracle saddle.

    The convexity constant is independent of the smoothness constant, so it is
    solved first and substituted when the fully general width is requested.
    """
    holder = [c.holder for c in problem.components]
    convexity = [c.convexity for c in problem.components]
    lam = saddle.lambda_star
    mu = ada_convexity(convexity, lam, epsilon)
    l_ada = ada_smoothness(holder, lam, r, epsilon, saddle.D_x,
                           mu_ada=mu if use_mu_width else None)
    delta = delta_for(l_ada, epsilon, saddle.D_x, mu if use_mu_width else None)
    return AdaConstants(l_ada=l_ada, mu_ada=mu, epsilon=epsilon, r=r,
                        D_x=saddle.D_x, delta_used=delta)
