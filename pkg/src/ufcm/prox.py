"""Catalog of exact proximal and projection operators.

Every catalog kind evaluates ``prox_{f,tau}(x) = argmin_y f(y) + tau/2 ||y-x||^2``
in closed form, except the entropy-regularized simplex prox which is solved by
safeguarded scalar root finding to first-order residual below 1e-12.  Conjugate
proxes are obtained from the Moreau identity

    prox_{f*,tau}(x) = x - prox_{f,1/tau}(tau x) / tau

unless a direct formula is cheaper.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import wrightomega


@dataclass(frozen=True)
class ProxHandle:
    """Tagged catalog entry with per-kind numeric parameters."""

    kind: str
    params: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# constructors

def zero() -> ProxHandle:
    return ProxHandle("zero")


def box(lo, hi) -> ProxHandle:
    return ProxHandle("box", {"lo": np.asarray(lo, float), "hi": np.asarray(hi, float)})


def l2_ball(radius: float, center=None) -> ProxHandle:
    if radius <= 0:
        raise ValueError("l2 ball needs a positive radius")
    return ProxHandle("l2-ball", {"radius": float(radius), "center": center})


def l1(weight: float = 1.0) -> ProxHandle:
    if weight < 0:
        raise ValueError("l1 weight must be nonnegative")
    return ProxHandle("l1", {"weight": float(weight)})


def quadratic(curvature: float = 0.0, linear=None) -> ProxHandle:
    """f(y) = curvature/2 ||y||^2 + <linear, y>."""
    if curvature < 0:
        raise ValueError("quadratic curvature must be nonnegative")
    return ProxHandle("quadratic", {"a": float(curvature), "b": linear})


def identity_sum() -> ProxHandle:
    return ProxHandle("identity-sum")


def nonpositive_indicator() -> ProxHandle:
    return ProxHandle("nonpositive-indicator")


def finite_max() -> ProxHandle:
    return ProxHandle("finite-max")


def logsumexp(eta: float) -> ProxHandle:
    if eta <= 0:
        raise ValueError("logsumexp smoothing eta must be positive")
    return ProxHandle("logsumexp", {"eta": float(eta)})


def squared_hinge(eta: float) -> ProxHandle:
    if eta <= 0:
        raise ValueError("squared hinge eta must be positive")
    return ProxHandle("squared-hinge", {"eta": float(eta)})


def absorbed(inner: ProxHandle) -> ProxHandle:
    """Separable sum of a linear first coordinate and ``inner`` on the rest."""
    return ProxHandle("absorbed", {"inner": inner})


def custom(prox_fn, value_fn=None) -> ProxHandle:
    return ProxHandle("custom", {"prox": prox_fn, "value": value_fn})


# ---------------------------------------------------------------------------
# primal prox

def prox_step(f: ProxHandle, tau: float, x) -> np.ndarray:
    """Evaluate prox_{f,tau}(x); unique minimizer of f(y) + tau/2 ||y-x||^2."""
    if tau <= 0:
        raise ValueError("prox parameter tau must be positive")
    x = np.asarray(x, dtype=float)
    kind = f.kind
    if kind == "zero":
        return x.copy()
    if kind == "box":
        return np.clip(x, f.params["lo"], f.params["hi"])
    if kind == "l2-ball":
        c = f.params["center"]
        d = x if c is None else x - np.asarray(c, float)
        nrm = float(np.linalg.norm(d))
        r = f.params["radius"]
        if nrm <= r:
            return x.copy()
        proj = d * (r / nrm)
        return proj if c is None else np.asarray(c, float) + proj
    if kind == "l1":
        thr = f.params["weight"] / tau
        return np.sign(x) * np.maximum(np.abs(x) - thr, 0.0)
    if kind == "quadratic":
        a = f.params["a"]
        b = f.params["b"]
        num = tau * x if b is None else tau * x - np.asarray(b, float)
        return num / (a + tau)
    if kind == "identity-sum":
        return x - 1.0 / tau
    if kind == "nonpositive-indicator":
        return np.minimum(x, 0.0)
    if kind == "finite-max":
        return x - project_simplex(tau * x) / tau
    if kind == "logsumexp":
        return x - _entropic_simplex_prox(tau * x, 1.0 / tau, f.params["eta"]) / tau
    if kind == "squared-hinge":
        c = 1.0 / f.params["eta"]
        return np.where(x > 0.0, tau * x / (2.0 * c + tau), x)
    if kind == "absorbed":
        head = np.array([x[0] - 1.0 / tau])
        return np.concatenate([head, prox_step(f.params["inner"], tau, x[1:])])
    if kind == "custom":
        return np.asarray(f.params["prox"](x, tau), dtype=float)
    raise ValueError(f"unknown prox kind {kind!r}")


# ---------------------------------------------------------------------------
# conjugate prox

def conjugate_prox(h: ProxHandle, tau: float, x) -> np.ndarray:
    """Evaluate prox_{h*,tau}(x) via the Moreau identity or a direct formula."""
    if tau <= 0:
        raise ValueError("prox parameter tau must be positive")
    x = np.asarray(x, dtype=float)
    kind = h.kind
    if kind == "identity-sum":
        return np.ones_like(x)
    if kind == "nonpositive-indicator":
        return np.maximum(x, 0.0)
    if kind == "finite-max":
        return project_simplex(x)
    if kind == "logsumexp":
        return _entropic_simplex_prox(x, tau, h.params["eta"])
    if kind == "squared-hinge":
        eta = h.params["eta"]
        return np.maximum(0.0, tau * x / (eta / 2.0 + tau))
    if kind == "absorbed":
        head = np.array([1.0])
        return np.concatenate([head, conjugate_prox(h.params["inner"], tau, x[1:])])
    # generic Moreau bridge
    return x - prox_step(h, 1.0 / tau, tau * x) / tau


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex.

    Sort-then-threshold; entries tied at the threshold are treated alike
    because the active-count test is evaluated on the sorted vector.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("project_simplex expects a nonempty 1-d vector")
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, v.size + 1)
    active = u + (1.0 - css) / j > 0.0
    k = int(np.nonzero(active)[0][-1]) + 1
    theta = (css[k - 1] - 1.0) / k
    return np.maximum(v - theta, 0.0)


def _entropic_simplex_prox(v, tau, eta, maxiter=200):
    """argmin over the simplex of eta*sum(l log l) + tau/2 ||l - v||^2.

    Interior KKT system: eta*log(l_j) + eta + tau*(l_j - v_j) + alpha = 0 with a
    scalar multiplier alpha for the sum constraint.  Each l_j(alpha) solves
    eta*log l + tau*l = tau*v_j - eta - alpha, inverted stably with the Wright
    omega function; alpha is found by safeguarded bracketing + brentq.
    """
    v = np.asarray(v, dtype=float)
    tau = float(tau)
    eta = float(eta)
    log_ratio = math.log(tau / eta)

    def lam_of(alpha):
        arg = log_ratio + (tau * v - eta - alpha) / eta
        return (eta / tau) * wrightomega(arg).real

    def excess(alpha):
        return float(np.sum(lam_of(alpha))) - 1.0

    a = 0.0
    f0 = excess(a)
    step = max(1.0, eta, tau * float(np.max(np.abs(v))) if v.size else 1.0)
    if f0 > 0.0:
        hi = a + step
        it = 0
        while excess(hi) > 0.0:
            hi = a + (hi - a) * 2.0
            it += 1
            if it > 200:
                raise RuntimeError("entropic prox bracketing failed")
        lo = a
    else:
        lo = a - step
        it = 0
        while excess(lo) < 0.0:
            lo = a - (a - lo) * 2.0
            it += 1
            if it > 200:
                raise RuntimeError("entropic prox bracketing failed")
        hi = a
    alpha = brentq(excess, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=maxiter)
    lam = lam_of(alpha)
    return lam / np.sum(lam)
