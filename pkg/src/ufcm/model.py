"""Composite problem model.

A problem is ``min_x h(g_1(x), ..., g_m(x)) + u(x)`` over a feasible set folded
into the regularizer prox, with h closed, convex, and componentwise
nondecreasing.  An explicit objective term g_0 is absorbed by rewriting the
composer as ``(z_0, z) -> z_0 + h(z)`` and prepending g_0 to the component
list; :func:`make_problem` performs that rewrite.

Conjugate variables are never obtained by optimization.  They are stored as
:class:`AnchoredConjugate`, a gradient matrix together with its generator
point, so each conjugate value g_j*(nu_j) = <nu_j, y> - g_j(y) is exact by
Fenchel equality.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import logsumexp as _lse

from . import prox as proxlib

_DUAL_TOL = 1e-9


class EvaluationDomainError(ValueError):
    """A component returned a non-finite value where a real was required."""


# ---------------------------------------------------------------------------
# curvature profiles and components

@dataclass(frozen=True)
class HolderProfile:
    """Upper curvature: ||grad f(x) - grad f(y)|| <= L ||x-y||^p, p in [0, 1]."""

    L: float
    p: float

    def __post_init__(self):
        if self.L < 0:
            raise ValueError("Holder constant L must be nonnegative")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("Holder exponent p must lie in [0, 1]")


@dataclass(frozen=True)
class ConvexityProfile:
    """Lower curvature: uniform convexity with modulus mu and exponent q >= 1."""

    mu: float = 0.0
    q: float = 1.0

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("uniform convexity modulus must be nonnegative")
        if self.q < 1.0:
            raise ValueError("uniform convexity exponent must be >= 1")


@dataclass(frozen=True)
class Component:
    """One scalar component g_j with first-order oracle and curvature profiles."""

    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    holder: HolderProfile
    convexity: ConvexityProfile = ConvexityProfile()
    name: str = ""


# ---------------------------------------------------------------------------
# composers

@dataclass(frozen=True)
class Composer:
    """Composing function h with exact prox, conjugate table, and dual domain.

    ``conjugate`` returns h*(lambda), +inf outside dom h*.  ``constraint_from``
    marks the first coordinate that carries hard-constraint semantics (used by
    feasibility reporting); None when the composer has no indicator part.
    """

    handle: proxlib.ProxHandle
    value: Callable[[np.ndarray], float]
    conjugate: Callable[[np.ndarray], float]
    project_dual: Callable[[np.ndarray], np.ndarray]
    smoothness_Lh: float
    dual_dim: int
    kind: str
    constraint_from: Optional[int] = None
    monotone: bool = True

    def prox(self, z, tau):
        return proxlib.prox_step(self.handle, tau, z)

    def conjugate_prox(self, v, tau):
        return proxlib.conjugate_prox(self.handle, tau, v)

    def dual_feasible(self, lam, tol=_DUAL_TOL) -> bool:
        return np.isfinite(self.conjugate(np.asarray(lam, float)))


def identity_sum(m: int) -> Composer:
    ones = np.ones(m)

    def value(z):
        return float(np.sum(z))

    def conjugate(lam):
        return 0.0 if np.max(np.abs(lam - 1.0)) <= _DUAL_TOL else math.inf

    return Composer(
        handle=proxlib.identity_sum(),
        value=value,
        conjugate=conjugate,
        project_dual=lambda v: ones.copy(),
        smoothness_Lh=0.0,
        dual_dim=m,
        kind="identity-sum",
    )


def nonpositive_indicator(m: int) -> Composer:
    def value(z):
        return 0.0 if np.max(z) <= _DUAL_TOL else math.inf

    def conjugate(lam):
        return 0.0 if np.min(lam) >= -_DUAL_TOL else math.inf

    return Composer(
        handle=proxlib.nonpositive_indicator(),
        value=value,
        conjugate=conjugate,
        project_dual=lambda v: np.maximum(v, 0.0),
        smoothness_Lh=math.inf,
        dual_dim=m,
        kind="nonpositive-indicator",
        constraint_from=0,
    )


def finite_max(m: int) -> Composer:
    def value(z):
        return float(np.max(z))

    def conjugate(lam):
        lam = np.asarray(lam, float)
        if np.min(lam) < -_DUAL_TOL or abs(np.sum(lam) - 1.0) > _DUAL_TOL:
            return math.inf
        return 0.0

    return Composer(
        handle=proxlib.finite_max(),
        value=value,
        conjugate=conjugate,
        project_dual=proxlib.project_simplex,
        smoothness_Lh=math.inf,
        dual_dim=m,
        kind="finite-max",
    )


def log_sum_exp(m: int, eta: float) -> Composer:
    if eta <= 0:
        raise ValueError("eta must be positive")

    def value(z):
        return float(eta * _lse(np.asarray(z, float) / eta))

    def conjugate(lam):
        lam = np.asarray(lam, float)
        if np.min(lam) < -_DUAL_TOL or abs(np.sum(lam) - 1.0) > _DUAL_TOL:
            return math.inf
        lam = np.maximum(lam, 0.0)
        mask = lam > 0.0
        return float(eta * np.sum(lam[mask] * np.log(lam[mask])))

    return Composer(
        handle=proxlib.logsumexp(eta),
        value=value,
        conjugate=conjugate,
        project_dual=proxlib.project_simplex,
        smoothness_Lh=1.0 / eta,
        dual_dim=m,
        kind="logsumexp",
    )


def squared_hinge(m: int, eta: float) -> Composer:
    """h(z) = (1/eta) * sum_j max(z_j, 0)^2, the smooth nonpositivity penalty.

    Conjugate pair: h*(lam) = (eta/4) ||lam||^2 on the nonnegative orthant;
    gradient of h is (2/eta)-Lipschitz.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")

    def value(z):
        return float(np.sum(np.maximum(np.asarray(z, float), 0.0) ** 2) / eta)

    def conjugate(lam):
        lam = np.asarray(lam, float)
        if np.min(lam) < -_DUAL_TOL:
            return math.inf
        return float(eta / 4.0 * np.sum(np.maximum(lam, 0.0) ** 2))

    return Composer(
        handle=proxlib.squared_hinge(eta),
        value=value,
        conjugate=conjugate,
        project_dual=lambda v: np.maximum(v, 0.0),
        smoothness_Lh=2.0 / eta,
        dual_dim=m,
        kind="squared-hinge",
    )


def absorb(inner: Composer) -> Composer:
    """Rewrite h into (z_0, z) -> z_0 + h(z), pinning the first multiplier to 1."""

    def value(z):
        z = np.asarray(z, float)
        return float(z[0]) + inner.value(z[1:])

    def conjugate(lam):
        lam = np.asarray(lam, float)
        if abs(lam[0] - 1.0) > _DUAL_TOL:
            return math.inf
        return inner.conjugate(lam[1:])

    def project_dual(v):
        v = np.asarray(v, float)
        return np.concatenate([[1.0], inner.project_dual(v[1:])])

    shift = None if inner.constraint_from is None else inner.constraint_from + 1
    return Composer(
        handle=proxlib.absorbed(inner.handle),
        value=value,
        conjugate=conjugate,
        project_dual=project_dual,
        smoothness_Lh=inner.smoothness_Lh,
        dual_dim=inner.dual_dim + 1,
        kind="absorbed-" + inner.kind,
        constraint_from=shift,
    )


# ---------------------------------------------------------------------------
# regularizers

@dataclass(frozen=True)
class Regularizer:
    """Simple term u with exact prox; the feasible set X is folded into it."""

    handle: proxlib.ProxHandle
    value: Callable[[np.ndarray], float]
    feasible_set: str = "R^n"

    def prox(self, x, tau):
        return proxlib.prox_step(self.handle, tau, x)


def free_regularizer() -> Regularizer:
    return Regularizer(proxlib.zero(), lambda x: 0.0, "R^n")


def box_regularizer(lo, hi) -> Regularizer:
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)

    def value(x):
        inside = np.all(x >= lo - _DUAL_TOL) and np.all(x <= hi + _DUAL_TOL)
        return 0.0 if inside else math.inf

    return Regularizer(proxlib.box(lo, hi), value, "box")


def ball_regularizer(radius, center=None) -> Regularizer:
    def value(x):
        d = x if center is None else x - np.asarray(center, float)
        return 0.0 if np.linalg.norm(d) <= radius * (1 + _DUAL_TOL) + _DUAL_TOL else math.inf

    return Regularizer(proxlib.l2_ball(radius, center), value, "l2-ball")


def l1_regularizer(weight=1.0) -> Regularizer:
    return Regularizer(proxlib.l1(weight), lambda x: float(weight * np.sum(np.abs(x))), "R^n")


def quadratic_regularizer(curvature=0.0, linear=None) -> Regularizer:
    def value(x):
        v = 0.5 * curvature * float(x @ x)
        if linear is not None:
            v += float(np.asarray(linear, float) @ x)
        return v

    return Regularizer(proxlib.quadratic(curvature, linear), value, "R^n")


# ---------------------------------------------------------------------------
# conjugate variables

@dataclass(frozen=True)
class AnchoredConjugate:
    """Rows nu_j = grad g_j(anchor) with g_j(anchor) stored alongside.

    Fenchel equality at the generator point makes every conjugate value exact:
    g_j*(nu_j) = <nu_j, anchor> - g_j(anchor).
    """

    rows: np.ndarray
    anchor: np.ndarray
    anchor_values: np.ndarray

    def conjugate_values(self) -> np.ndarray:
        return self.rows @ self.anchor - self.anchor_values


@dataclass(frozen=True)
class AveragedConjugate:
    """Convex combination of anchored conjugates with aggregated values.

    The stored value upper-bounds the true conjugate of the averaged rows (the
    conjugate is convex), which makes Lagrangian evaluations conservative: the
    gap computed from it never understates the true gap.
    """

    rows: np.ndarray
    values: np.ndarray

    def conjugate_values(self) -> np.ndarray:
        return self.values


@dataclass(frozen=True)
class PrimalDualPoint:
    x: np.ndarray
    lam: np.ndarray
    nu: AnchoredConjugate


@dataclass(frozen=True)
class SaddleData:
    """Oracle saddle point with the distance/gradient bounds tests rely on."""

    x_star: np.ndarray
    lambda_star: np.ndarray
    p_star: float
    grad_norm_bound: float
    D_x: float
    D_lambda: float


# ---------------------------------------------------------------------------
# the problem instance

@dataclass(frozen=True)
class ProblemInstance:
    components: tuple
    composer: Composer
    regularizer: Regularizer
    dimension: int
    known_saddle: Optional[SaddleData] = None

    def __post_init__(self):
        if len(self.components) < 1:
            raise ValueError("a problem needs at least one component")
        if len(self.components) != self.composer.dual_dim:
            raise ValueError("composer arity does not match the component count")

    @property
    def m(self) -> int:
        return len(self.components)

    def g_values(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        vals = np.array([c.value(x) for c in self.components], dtype=float)
        if not np.all(np.isfinite(vals)):
            raise EvaluationDomainError("component value is not finite")
        return vals

    def g_gradients(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        rows = np.stack([np.asarray(c.gradient(x), float) for c in self.components])
        if not np.all(np.isfinite(rows)):
            raise EvaluationDomainError("component gradient is not finite")
        return rows

    def anchored_at(self, x) -> AnchoredConjugate:
        x = np.asarray(x, dtype=float).copy()
        return AnchoredConjugate(self.g_gradients(x), x, self.g_values(x))

    def with_saddle(self, saddle: SaddleData) -> "ProblemInstance":
        return ProblemInstance(self.components, self.composer, self.regularizer,
                               self.dimension, saddle)


def make_problem(components: Sequence[Component], composer: Composer,
                 regularizer: Optional[Regularizer] = None,
                 objective: Optional[Component] = None,
                 known_saddle: Optional[SaddleData] = None,
                 dimension: Optional[int] = None) -> ProblemInstance:
    """Build an instance, absorbing an explicit objective into the composer."""
    comps = list(components)
    if objective is not None:
        comps = [objective] + comps
        composer = absorb(composer)
    if regularizer is None:
        regularizer = free_regularizer()
    if dimension is None:
        raise ValueError("dimension must be given")
    return ProblemInstance(tuple(comps), composer, regularizer, int(dimension), known_saddle)


# ---------------------------------------------------------------------------
# objective, Lagrangian, gap

def objective_value(problem: ProblemInstance, x) -> float:
    """h(g(x)) + u(x) with +inf outside X or dom h; non-finite g is an error."""
    x = np.asarray(x, float)
    if x.shape != (problem.dimension,):
        raise ValueError("x has the wrong dimension")
    z = problem.g_values(x)
    val = problem.composer.value(z) + problem.regularizer.value(x)
    if math.isnan(val):
        raise EvaluationDomainError("objective evaluated to NaN")
    return float(val)


def lagrangian_value(problem: ProblemInstance, x, lam, nu) -> float:
    """Extended Lagrangian <lam, nu x - g*(nu)> - h*(lam) + u(x).

    Returns -inf when lam falls outside dom h* (the caller decides) and +inf
    when x is infeasible for the regularizer.
    """
    x = np.asarray(x, float)
    lam = np.asarray(lam, float)
    hstar = problem.composer.conjugate(lam)
    if math.isinf(hstar):
        return -math.inf
    uval = problem.regularizer.value(x)
    if math.isinf(uval):
        return math.inf
    pairing = float(lam @ (nu.rows @ x - nu.conjugate_values()))
    val = pairing - hstar + uval
    if math.isnan(val):
        raise EvaluationDomainError("Lagrangian evaluated to NaN")
    return val


def gap_value(problem: ProblemInstance, z: PrimalDualPoint, zhat: PrimalDualPoint) -> float:
    """Q(z, zhat) = L(x; lam_hat, nu_hat) - L(x_hat; lam, nu)."""
    lead = lagrangian_value(problem, z.x, zhat.lam, zhat.nu)
    trail = lagrangian_value(problem, zhat.x, z.lam, z.nu)
    return lead - trail


def constraint_violation(problem: ProblemInstance, x) -> float:
    """dist(g(x), R^m_-) over the composer's hard-constraint coordinates."""
    start = problem.composer.constraint_from
    if start is None:
        return 0.0
    z = problem.g_values(x)[start:]
    return float(np.linalg.norm(np.maximum(z, 0.0)))
