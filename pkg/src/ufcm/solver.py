"""Sliding primal-dual solver for composite problems.

The outer loop takes a momentum step, refreshes the conjugate block with one
gradient evaluation of every component, and delegates the coupled (x, lambda)
update to an inner loop of alternating prox steps on u and h*.  Outer weights
and stepsizes follow fixed closed-form schedules parameterized by the
aggregate smoothness constant and two balancing constants C and Delta; inner
parameters are driven by the running conjugate-block norms.

All reductions run in index-ascending order so repeated runs of the same
configuration produce bit-identical traces on one platform.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import (AnchoredConjugate, AveragedConjugate, PrimalDualPoint,
                    ProblemInstance, constraint_violation, gap_value,
                    lagrangian_value, objective_value)


class SolverAbort(RuntimeError):
    """Raised when iterates blow up or stop being finite."""

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}


@dataclass
class SolverConfig:
    epsilon: float
    r: float
    C: float
    Delta: float
    l_ada: float
    T: int
    trace_every: int = 1
    nu_norm: str = "fro"
    force_theta_zero: bool = False  # regression hook, not part of the method
    # measurement-only early exit for sweeps; the method itself has no
    # stopping criterion, so this requires oracle knowledge of the target
    stop_objective: Optional[float] = None

    def __post_init__(self):
        if self.epsilon <= 0 or self.r <= 0:
            raise ValueError("epsilon and r must be positive")
        if self.C <= 0 or self.Delta <= 0 or self.l_ada <= 0:
            raise ValueError("C, Delta, and the smoothness constant must be positive")
        if self.T < 1:
            raise ValueError("need at least one outer iteration")
        if self.nu_norm not in ("fro", "spectral"):
            raise ValueError("nu_norm must be 'fro' or 'spectral'")


# ---------------------------------------------------------------------------
# schedules

@dataclass(frozen=True)
class OuterSchedule:
    """Closed-form outer weights and stepsizes, arrays indexed by t = 1..T.

    Index 0 holds the formal boundary values (omega_0 = 0, tau_0 = -1/2) that
    only exist to make theta_1 = 0.
    """

    l_ada: float
    C: float
    Delta: float
    T: int
    omega: np.ndarray
    tau: np.ndarray
    eta: np.ndarray
    theta: np.ndarray


def build_schedule(l_ada: float, C: float, Delta: float, T: int) -> OuterSchedule:
    if l_ada <= 0 or C <= 0 or Delta <= 0 or T < 1:
        raise ValueError("schedule parameters must be positive")
    t = np.arange(T + 1, dtype=float)
    omega = t.copy()
    tau = (t - 1.0) / 2.0
    eta = np.full(T + 1, math.inf)
    eta[1:] = 2.0 * l_ada / t[1:]          # l_ada / tau_{t+1}
    theta = np.zeros(T + 1)
    theta[1:] = tau[1:] / (tau[:-1] + 1.0)
    return OuterSchedule(l_ada, C, Delta, int(T), omega, tau, eta, theta)


@dataclass
class InnerSchedule:
    """Realized inner parameters; M additionally carries M_0 = ||nu^0||."""

    M: list = field(default_factory=list)
    S: list = field(default_factory=list)
    Mtil: list = field(default_factory=list)
    beta: list = field(default_factory=list)
    gamma: list = field(default_factory=list)
    rho: list = field(default_factory=list)
    omegatil: list = field(default_factory=list)


def inner_params(C: float, Delta: float, t: int, M_t: float,
                 Mtil_prev: Optional[float] = None):
    """Inner loop sizes for outer step t: (S_t, Mtil_t, beta, gamma, rho).

    S_t is floored at 1 so a zero conjugate norm never empties the loop, and
    rho_1 = 1 (inert: the term it scales vanishes at initialization).
    """
    S = max(1, math.ceil(M_t * Delta * t))
    Mtil = S / (Delta * t)
    rho = 1.0 if Mtil_prev is None else Mtil / Mtil_prev
    return S, Mtil, C * Mtil, Mtil / C, rho


def _nu_norm(rows: np.ndarray, mode: str) -> float:
    if mode == "fro":
        return float(np.linalg.norm(rows))
    # spectral estimate by 20 power iterations on the smaller gram matrix
    m, n = rows.shape
    gram = rows @ rows.T if m <= n else rows.T @ rows
    v = np.ones(gram.shape[0]) / math.sqrt(gram.shape[0])
    for _ in range(20):
        w = gram @ v
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        v = w / nw
    return math.sqrt(float(v @ gram @ v))


# ---------------------------------------------------------------------------
# condition checker

_CONDITION_TAGS = ("a1", "a2", "a3", "a4", "b3", "c1", "c2", "c3")


@dataclass
class ConditionReport:
    ok: bool
    violations: list

    def __bool__(self):
        return self.ok


def check_conditions(outer: OuterSchedule, inner: InnerSchedule,
                     nu_norms=None, rtol: float = 1e-12) -> ConditionReport:
    """Validate the eight stepsize requirements over a realized horizon.

    ``nu_norms`` is the sequence [M_0, ..., M_T]; it defaults to the realized
    norms stored in the inner schedule.  Chain conditions couple steps t-1 and
    t and so start at t = 2; the t = 1 instance of the correction-term bound
    is vacuous because the difference it scales is identically zero at
    initialization.
    """
    T = outer.T
    M = list(inner.M) if nu_norms is None else list(nu_norms)
    if len(M) != T + 1 or len(inner.S) != T:
        raise ValueError("schedule horizons do not match")
    beta = inner.beta
    gamma = inner.gamma
    omt = inner.omegatil
    om, ta, et = outer.omega, outer.tau, outer.eta
    L = outer.l_ada

    def le(a, b):
        return a <= b + rtol * max(abs(a), abs(b), 1.0)

    bad = []
    for t in range(2, T + 1):
        i, j = t - 1, t - 2   # inner arrays are 0-based over t = 1..T
        if not le(om[t] * et[t], om[t - 1] * et[t - 1]):
            bad.append(("a1", t))
        if not le(om[t] * ta[t], om[t - 1] * (ta[t - 1] + 1.0)):
            bad.append(("a2", t))
        if not le((om[t - 1] / om[t]) * L, et[t - 1] * ta[t]):
            bad.append(("a3", t))
        if not le(omt[i] * beta[i], omt[j] * beta[j]):
            bad.append(("c1", t))
        if not le(omt[i] * gamma[i], omt[j] * gamma[j]):
            bad.append(("c2", t))
        rho = omt[j] / omt[i]
        if not le(rho * rho * M[t - 1] ** 2, gamma[i] * beta[i]):
            bad.append(("c3", t))
    for t in range(1, T + 1):
        if not le(M[t] ** 2, gamma[t - 1] * beta[t - 1]):
            bad.append(("b3", t))
    if not le(L, et[T] * (ta[T] + 1.0)):
        bad.append(("a4", T))
    bad.sort(key=lambda v: (v[1], v[0]))
    return ConditionReport(ok=not bad, violations=bad)


# ---------------------------------------------------------------------------
# inner loop

@dataclass
class WarmState:
    y0: np.ndarray
    lam0: np.ndarray
    lam_m1: np.ndarray


def inner_sliding(problem: ProblemInstance, x_prev, nu_t: AnchoredConjugate,
                  nu_prev_rows, warm: WarmState, S_t: int, eta_t: float,
                  beta_t: float, gamma_t: float, rho_t: float):
    """Run the S_t alternating prox steps of one outer iteration.

    Each step takes one prox on u (the two quadratic penalties merge into a
    single prox at a weighted center, exact for the Euclidean prox) and one
    conjugate prox on h, and returns the uniform averages together with the
    carried warm-start triple (y_S, lambda_S, lambda_{S-1}).
    """
    if S_t < 1:
        raise ValueError("inner loop needs at least one step")
    if min(eta_t, beta_t, gamma_t) <= 0:
        raise ValueError("inner stepsizes must be positive")
    rows = nu_t.rows
    shift = nu_t.anchor_values - rows @ nu_t.anchor   # nu y + shift = nu(y-x) + g(x)
    reg = problem.regularizer
    comp = problem.composer
    y = warm.y0
    lam_sm1 = warm.lam0
    lam_sm2 = warm.lam_m1
    denom = eta_t + beta_t
    x_acc = np.zeros_like(np.asarray(x_prev, float))
    lam_acc = np.zeros_like(np.asarray(lam_sm1, float))
    for s in range(1, S_t + 1):
        if s == 1:
            htil = rows.T @ lam_sm1 + rho_t * (nu_prev_rows.T @ (lam_sm1 - lam_sm2))
        else:
            htil = rows.T @ (2.0 * lam_sm1 - lam_sm2)
        y = reg.prox((eta_t * x_prev + beta_t * y - htil) / denom, denom)
        lam = comp.conjugate_prox(lam_sm1 + (rows @ y + shift) / gamma_t, gamma_t)
        x_acc += y
        lam_acc += lam
        lam_sm2 = lam_sm1
        lam_sm1 = lam
    x_t = x_acc / S_t
    lam_tilde = lam_acc / S_t
    return x_t, lam_tilde, WarmState(y0=y, lam0=lam_sm1, lam_m1=lam_sm2), S_t


# ---------------------------------------------------------------------------
# traces

@dataclass
class Trace:
    """Per-run record: sampled rows, realized schedules, and exact counters."""

    ts: list = field(default_factory=list)
    grad_evals_at: list = field(default_factory=list)
    prox_evals_at: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    feasibility: list = field(default_factory=list)
    dist_x: list = field(default_factory=list)
    dist_lambda: list = field(default_factory=list)
    weighted_gap: list = field(default_factory=list)
    gap_bound: float = math.nan
    outer: Optional[OuterSchedule] = None
    inner: InnerSchedule = field(default_factory=InnerSchedule)
    grad_evals: int = 0
    prox_evals: int = 0
    restart_marks: list = field(default_factory=list)
    gap_at_t: list = field(default_factory=list)   # per-t Q(z^t, z*), full horizon
    dist_x_full: list = field(default_factory=list)

    def rows(self):
        for i in range(len(self.ts)):
            yield {
                "t": self.ts[i],
                "grad_evals": self.grad_evals_at[i],
                "prox_evals": self.prox_evals_at[i],
                "objective": self.objective[i],
                "feasibility": self.feasibility[i],
                "dist_x": self.dist_x[i],
                "dist_lambda": self.dist_lambda[i],
                "weighted_gap": self.weighted_gap[i],
                "gap_bound": self.gap_bound,
            }


@dataclass
class UfcmResult:
    x: np.ndarray
    lam: np.ndarray
    nu: AveragedConjugate
    trace: Trace

    def point(self) -> PrimalDualPoint:
        return PrimalDualPoint(self.x, self.lam, self.nu)


# ---------------------------------------------------------------------------
# the method

def ufcm(problem: ProblemInstance, z0, config: SolverConfig) -> UfcmResult:
    """Run T outer iterations from z0 = (x0, lambda0) and return the averages.

    Oracle accounting is exact by construction: T + 1 gradient sweeps of the
    component block (one at the start point plus one per outer iteration) and
    sum(S_t) sliding units, each of which is one prox on u and one on h*.
    Diagnostic evaluations for the trace bypass the counters.
    """
    x0 = np.asarray(z0[0], dtype=float).copy()
    lam0 = np.asarray(z0[1], dtype=float).copy()
    if x0.shape != (problem.dimension,):
        raise ValueError("x0 has the wrong dimension")
    if lam0.shape != (problem.m,):
        raise ValueError("lambda0 has the wrong dimension")
    if not problem.composer.dual_feasible(lam0):
        raise ValueError("lambda0 lies outside the dual domain")

    T = config.T
    C, Delta = config.C, config.Delta
    outer = build_schedule(config.l_ada, C, Delta, T)
    saddle = problem.known_saddle

    nu0 = problem.anchored_at(x0)
    grad_evals = 1
    prox_evals = 0
    trace = Trace(outer=outer)
    trace.inner.M.append(_nu_norm(nu0.rows, config.nu_norm))

    guard = 1e12 * (1.0 + float(np.linalg.norm(x0))
                    + (saddle.D_x if saddle is not None else 0.0))

    nu_star = None
    if saddle is not None:
        nu_star = problem.anchored_at(saddle.x_star)
        dx0 = float(np.linalg.norm(x0 - saddle.x_star))
        dl0 = float(np.linalg.norm(lam0 - saddle.lambda_star))
        trace.gap_bound = 0.5 * (C / Delta + 2.0 * config.l_ada) * dx0 ** 2 \
            + 0.5 / (C * Delta) * dl0 ** 2

    x_prev2 = x0
    x_prev = x0
    x_under = x0
    rows_prev = nu0.rows
    warm = WarmState(y0=x0.copy(), lam0=lam0.copy(), lam_m1=lam0.copy())
    Mtil_prev = None

    n, m = problem.dimension, problem.m
    omega_sum = 0.0
    xbar_acc = np.zeros(n)
    lambar_acc = np.zeros(m)
    nubar_wt = np.zeros(m)
    nubar_rows = np.zeros((m, n))
    nubar_vals = np.zeros(m)
    wgap = 0.0

    for t in range(1, T + 1):
        theta = 0.0 if config.force_theta_zero else outer.theta[t]
        x_tilde = x_prev + theta * (x_prev - x_prev2)
        x_under = (outer.tau[t] * x_under + x_tilde) / (1.0 + outer.tau[t])
        nu_t = problem.anchored_at(x_under)
        grad_evals += 1
        M_t = _nu_norm(nu_t.rows, config.nu_norm)
        S_t, Mtil, beta, gamma, rho = inner_params(C, Delta, t, M_t, Mtil_prev)
        x_t, lam_tilde, warm, used = inner_sliding(
            problem, x_prev, nu_t, rows_prev, warm, S_t, outer.eta[t], beta, gamma, rho)
        prox_evals += used

        if not np.all(np.isfinite(x_t)) or float(np.linalg.norm(x_t)) > guard:
            raise SolverAbort(
                "iterate left the trust region or became non-finite",
                diagnostic={"t": t, "x": x_t, "lam": lam_tilde,
                            "grad_evals": grad_evals, "prox_evals": prox_evals})

        ins = trace.inner
        ins.M.append(M_t)
        ins.S.append(S_t)
        ins.Mtil.append(Mtil)
        ins.beta.append(beta)
        ins.gamma.append(gamma)
        ins.rho.append(rho)
        ins.omegatil.append(outer.omega[t] / S_t)

        w = outer.omega[t]
        omega_sum += w
        xbar_acc += w * x_t
        lambar_acc += w * lam_tilde
        wl = w * lam_tilde
        nubar_wt += wl
        nubar_rows += wl[:, None] * nu_t.rows
        nubar_vals += wl * nu_t.conjugate_values()

        if saddle is not None:
            q_t = (lagrangian_value(problem, x_t, saddle.lambda_star, nu_star)
                   - lagrangian_value(problem, saddle.x_star, lam_tilde, nu_t))
            wgap += w * q_t
            trace.gap_at_t.append(q_t)
            trace.dist_x_full.append(float(np.linalg.norm(x_t - saddle.x_star)))

        stop_now = False
        if t % config.trace_every == 0 or t == T:
            xbar_t = xbar_acc / omega_sum
            obj = objective_value(problem, xbar_t)
            trace.ts.append(t)
            trace.grad_evals_at.append(grad_evals)
            trace.prox_evals_at.append(prox_evals)
            trace.objective.append(obj)
            trace.feasibility.append(constraint_violation(problem, xbar_t))
            if saddle is not None:
                trace.dist_x.append(float(np.linalg.norm(x_t - saddle.x_star)))
                trace.dist_lambda.append(float(np.linalg.norm(lam_tilde - saddle.lambda_star)))
                trace.weighted_gap.append(wgap)
            else:
                trace.dist_x.append(math.nan)
                trace.dist_lambda.append(math.nan)
                trace.weighted_gap.append(math.nan)
            if config.stop_objective is not None and obj <= config.stop_objective:
                stop_now = True

        x_prev2 = x_prev
        x_prev = x_t
        rows_prev = nu_t.rows
        Mtil_prev = Mtil
        if stop_now:
            break

    executed = len(trace.inner.S)
    if executed < T:
        trace.outer = build_schedule(config.l_ada, C, Delta, executed)

    xbar = xbar_acc / omega_sum
    lambar = lambar_acc / omega_sum
    rows_bar = np.empty((m, n))
    vals_bar = np.empty(m)
    for j in range(m):
        if nubar_wt[j] > 0.0:
            rows_bar[j] = nubar_rows[j] / nubar_wt[j]
            vals_bar[j] = nubar_vals[j] / nubar_wt[j]
        else:
            rows_bar[j] = nu0.rows[j]
            vals_bar[j] = nu0.conjugate_values()[j]

    trace.grad_evals = grad_evals
    trace.prox_evals = prox_evals
    return UfcmResult(x=xbar, lam=lambar, nu=AveragedConjugate(rows_bar, vals_bar),
                      trace=trace)


def theorem_iterations(l_ada: float, D_x: float, epsilon: float) -> float:
    """Outer-iteration bound sqrt(24 * L * D_x^2 / eps) under default balancing."""
    return math.sqrt(24.0 * l_ada * D_x ** 2 / epsilon)


def theorem_prox_bound(N: float, Delta: float, M: float) -> float:
    """Sliding-unit bound ceil(N) + ceil(N)^2 * Delta * M."""
    return math.ceil(N) + math.ceil(N) ** 2 * Delta * M
