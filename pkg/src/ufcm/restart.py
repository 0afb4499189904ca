"""Restarted runs and the geometric constant ladder.

The restart driver replays the base solver K times with shrinking distance
bounds.  Whether the primal or dual sequence carries over between executions
is decided by two structural tests: aggregate convexity against eps/D_x^2 for
the primal side, composer smoothness against D_lambda^2/eps for the dual side.

The ladder trades knowledge of the aggregate smoothness constant for distance
bounds by trying the doubling sequence 2^0, 2^1, ... as the constant.  There
is no runtime certificate for either scheme; callers pick budgets up front.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import ProblemInstance, objective_value
from .solver import SolverConfig, Trace, UfcmResult, ufcm

_DLAM_FLOOR = 1e-9


def choose_K(Q0: float, epsilon: float) -> int:
    """Execution count ceil(log2((Q0 + eps)/eps)), floored at one."""
    if Q0 < 0:
        raise ValueError("initial gap must be nonnegative")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return max(1, math.ceil(math.log2((Q0 + epsilon) / epsilon)))


@dataclass(frozen=True)
class RestartPlan:
    """Per-execution budgets, distance bounds, and balancing constants."""

    K: int
    T: np.ndarray            # outer budget per execution, applied as ceil(T_k)
    Dx: np.ndarray
    Dlam: np.ndarray
    restart_primal: bool
    restart_dual: np.ndarray  # bool per execution
    C: np.ndarray
    Delta: np.ndarray
    epsilon: float
    r: float
    l_ada: float
    mu_ada: float
    L_h: float


def restart_plan(epsilon: float, r: float, D_x: float, D_lambda: float,
                 l_ada: float, mu_ada: float, L_h: float, K: int) -> RestartPlan:
    """Build the execution schedule for K restarted runs.

    Primal branch: when mu_ada >= 4 eps / D_x^2 every budget is the constant
    sqrt(96 l_ada / mu_ada) and the primal distance bound halves (in squared
    terms) each execution; otherwise budgets grow geometrically against the
    fixed bound D_x.  Dual branch: the bound sqrt(2^(K-k) eps L_h) replaces
    D_lambda whenever it is the smaller of the two, which never happens for a
    nonsmooth composer.  Dual bounds are floored at a tiny positive value so
    the balancing ratio C stays finite when the dual start is exact.
    """
    if K < 1:
        raise ValueError("need at least one execution")
    if min(epsilon, r, D_x, D_lambda, l_ada) <= 0 or mu_ada < 0:
        raise ValueError("plan parameters must be positive")
    mu_case = mu_ada >= 4.0 * epsilon / D_x ** 2
    T = np.empty(K)
    Dx = np.empty(K)
    Dlam = np.empty(K)
    dual = np.zeros(K, dtype=bool)
    for k in range(K):
        if mu_case:
            T[k] = math.sqrt(96.0 * l_ada / mu_ada)
            Dx[k] = math.sqrt(2.0 ** (K - k + 1) * epsilon / mu_ada)
        else:
            T[k] = math.sqrt(24.0 * l_ada * D_x ** 2 / (2.0 ** (K - k - 1) * epsilon))
            Dx[k] = D_x
        if math.isfinite(L_h):
            cand = math.sqrt(2.0 ** (K - k + 1) * epsilon * L_h)
            Dlam[k] = max(min(D_lambda, cand), _DLAM_FLOOR)
            dual[k] = math.sqrt(2.0 ** (K - k) * epsilon * L_h) <= D_lambda
        else:
            Dlam[k] = D_lambda
            dual[k] = False
    C = Dlam / Dx
    Delta = C / (2.0 * l_ada)
    return RestartPlan(K=int(K), T=T, Dx=Dx, Dlam=Dlam, restart_primal=bool(mu_case),
                       restart_dual=dual, C=C, Delta=Delta, epsilon=epsilon, r=r,
                       l_ada=l_ada, mu_ada=mu_ada, L_h=L_h)


@dataclass
class RufcmResult:
    x: np.ndarray
    lam: np.ndarray
    nu: object
    runs: list
    trace: Trace
    plan: RestartPlan


def _merge_traces(runs, marks_extra=None) -> Trace:
    merged = Trace()
    offset_t = 0
    for idx, res in enumerate(runs):
        tr = res.trace
        merged.restart_marks.append({
            "run": idx,
            "t_offset": offset_t,
            "T": tr.outer.T,
            "grad_evals": tr.grad_evals,
            "prox_evals": tr.prox_evals,
        })
        for i, t in enumerate(tr.ts):
            merged.ts.append(offset_t + t)
            merged.grad_evals_at.append(merged.grad_evals + tr.grad_evals_at[i])
            merged.prox_evals_at.append(merged.prox_evals + tr.prox_evals_at[i])
            merged.objective.append(tr.objective[i])
            merged.feasibility.append(tr.feasibility[i])
            merged.dist_x.append(tr.dist_x[i])
            merged.dist_lambda.append(tr.dist_lambda[i])
            merged.weighted_gap.append(tr.weighted_gap[i])
        merged.grad_evals += tr.grad_evals
        merged.prox_evals += tr.prox_evals
        offset_t += tr.outer.T
    return merged


def rufcm(problem: ProblemInstance, z0, plan: RestartPlan, l_ada: float,
          trace_every: int = 1, nu_norm: str = "fro") -> RufcmResult:
    """Run K planned executions, carrying iterates per the plan's flags."""
    x0 = np.asarray(z0[0], float).copy()
    lam0 = np.asarray(z0[1], float).copy()
    x_k, lam_k = x0, lam0
    runs = []
    for k in range(plan.K):
        cfg = SolverConfig(epsilon=plan.epsilon, r=plan.r, C=float(plan.C[k]),
                           Delta=float(plan.Delta[k]), l_ada=l_ada,
                           T=math.ceil(plan.T[k]), trace_every=trace_every,
                           nu_norm=nu_norm)
        res = ufcm(problem, (x_k, lam_k), cfg)
        runs.append(res)
        x_k = res.x if plan.restart_primal else x0
        lam_k = res.lam if plan.restart_dual[k] else lam0
    last = runs[-1]
    return RufcmResult(x=last.x, lam=last.lam, nu=last.nu, runs=runs,
                       trace=_merge_traces(runs), plan=plan)


@dataclass
class LadderResult:
    x: np.ndarray
    lam: np.ndarray
    nu: object
    best_rung: int
    runs: list
    trace: Trace


def _ladder_key(problem, x):
    """Objective when finite, else feasibility-then-surrogate lexicographic."""
    f = objective_value(problem, x)
    if math.isfinite(f):
        return (0.0, f)
    start = problem.composer.constraint_from
    z = problem.g_values(x)
    viol = float(np.linalg.norm(np.maximum(z[start:], 0.0))) if start is not None else math.inf
    surrogate = float(np.sum(z[:start])) if start else 0.0
    return (viol, surrogate + problem.regularizer.value(x))


def doubling_ladder(problem: ProblemInstance, z0, epsilon: float, D_x: float,
                    D_lambda: float, r: float, max_rungs: int,
                    trace_every: int = 1) -> LadderResult:
    """Try trial constants 2^0, 2^1, ... and keep the best-scoring output.

    Rung j runs the base solver for ceil(sqrt(24 * 2^j * D_x^2 / eps)) outer
    iterations with balancing C = D_lambda / D_x and Delta = C / (2 * 2^j).
    Total gradient cost is geometric, dominated by the last rung.  No runtime
    certificate exists; callers verify quality against oracle data.
    """
    if max_rungs < 1:
        raise ValueError("need at least one rung")
    C = D_lambda / D_x
    runs = []
    best = None
    best_key = None
    for j in range(max_rungs):
        L_j = 2.0 ** j
        T_j = math.ceil(math.sqrt(24.0 * L_j * D_x ** 2 / epsilon))
        cfg = SolverConfig(epsilon=epsilon, r=r, C=C, Delta=C / (2.0 * L_j),
                           l_ada=L_j, T=T_j, trace_every=trace_every)
        res = ufcm(problem, z0, cfg)
        runs.append(res)
        key = _ladder_key(problem, res.x)
        if best_key is None or key < best_key:
            best, best_key = j, key
    chosen = runs[best]
    return LadderResult(x=chosen.x, lam=chosen.lam, nu=chosen.nu,
                        best_rung=best, runs=runs, trace=_merge_traces(runs))
