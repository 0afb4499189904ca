"""Desk-scale instance catalog.

Every instance is small enough (n <= 10, m <= 5) for the reference oracles to
produce certified saddle data, and each carries a canonical start point and
the structural metadata its oracle consumes.  Objective terms are passed
through :func:`ufcm.model.make_problem`, which absorbs them into the composer
as an extra leading component.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from . import model, oracles

FIXTURE_SEED = 20260801


@dataclass(frozen=True)
class CatalogInstance:
    instance_id: str
    problem: model.ProblemInstance
    x0: np.ndarray
    lam0: np.ndarray
    oracle_hint: dict
    description: str


def _quadratic_component(center, weight=1.0, name="quad"):
    center = np.asarray(center, float)

    def value(x):
        d = x - center
        return 0.5 * weight * float(d @ d)

    def gradient(x):
        return weight * (x - center)

    return model.Component(value, gradient,
                           holder=model.HolderProfile(L=weight, p=1.0),
                           convexity=model.ConvexityProfile(mu=weight, q=1.0),
                           name=name)


def _affine_component(a, b, name="affine"):
    a = np.asarray(a, float)

    def value(x):
        return float(a @ x) - b

    def gradient(x):
        return a.copy()

    return model.Component(value, gradient,
                           holder=model.HolderProfile(L=0.0, p=1.0),
                           convexity=model.ConvexityProfile(),
                           name=name)


def _abs_component(center, weight=1.0, shift=0.0, name="abs"):
    def value(x):
        return weight * abs(float(x[0]) - center) + shift

    def gradient(x):
        return np.array([weight * np.sign(float(x[0]) - center)])

    return model.Component(value, gradient,
                           holder=model.HolderProfile(L=2.0 * weight, p=0.0),
                           convexity=model.ConvexityProfile(),
                           name=name)


def _power_component(exponent_p, weight=1.0, name="power"):
    """f(x) = weight/(1+p) * |x|^(1+p) in one dimension; gradient is
    weight * sign(x) |x|^p, which is (2^(1-p) * weight, p)-Holder."""
    p = float(exponent_p)

    def value(x):
        return weight / (1.0 + p) * abs(float(x[0])) ** (1.0 + p)

    def gradient(x):
        v = float(x[0])
        return np.array([weight * np.sign(v) * abs(v) ** p])

    mu = weight if p == 1.0 else 0.0
    return model.Component(value, gradient,
                           holder=model.HolderProfile(L=2.0 ** (1.0 - p) * weight, p=p),
                           convexity=model.ConvexityProfile(mu=mu, q=1.0),
                           name=name)


def _scaled_quad_1d(weight, name="quad1d"):
    def value(x):
        return 0.5 * weight * float(x[0]) ** 2

    def gradient(x):
        return np.array([weight * float(x[0])])

    return model.Component(value, gradient,
                           holder=model.HolderProfile(L=weight, p=1.0),
                           convexity=model.ConvexityProfile(mu=weight, q=1.0),
                           name=name)


# ---------------------------------------------------------------------------
# builders

def _qp_affine() -> CatalogInstance:
    xc = np.array([2.0, 1.0, 0.0])
    a1, b1 = np.array([1.0, 0.0, 0.0]), 1.0       # x1 <= 1, active
    a2, b2 = np.array([0.0, -1.0, 0.0]), 1.0      # -x2 <= 1, inactive
    problem = model.make_problem(
        components=[_affine_component(a1, b1, "g1"), _affine_component(a2, b2, "g2")],
        composer=model.nonpositive_indicator(2),
        objective=_quadratic_component(xc, name="g0"),
        dimension=3)
    hint = {"kind": "qp", "P": np.eye(3), "q": -xc,
            "A": np.stack([a1, a2]), "b": np.array([b1, b2]),
            "objective_shift": 0.5 * float(xc @ xc), "seed": FIXTURE_SEED}
    return CatalogInstance(
        "qp-affine", problem, np.zeros(3), np.array([1.0, 0.0, 0.0]), hint,
        "strongly convex quadratic with two affine constraints, one active")


def _qp_quadcon() -> CatalogInstance:
    c = np.array([2.0, 0.0])

    def g1_value(x):
        d = x - c
        return 0.5 * (float(d @ d) - 1.0)

    def g1_gradient(x):
        return x - c

    g1 = model.Component(g1_value, g1_gradient,
                         holder=model.HolderProfile(L=1.0, p=1.0),
                         convexity=model.ConvexityProfile(mu=1.0, q=1.0),
                         name="g1")
    problem = model.make_problem(
        components=[g1],
        composer=model.nonpositive_indicator(1),
        objective=_quadratic_component(np.zeros(2), name="g0"),
        dimension=2)
    hint = {"kind": "qcqp", "P": np.eye(2), "q": np.zeros(2),
            "Pc": np.eye(2), "qc": -c, "cc": 0.5 * float(c @ c) - 0.5,
            "seed": FIXTURE_SEED}
    return CatalogInstance(
        "qp-quadcon", problem, np.zeros(2), np.array([1.0, 0.0]), hint,
        "quadratic objective with one strongly convex quadratic constraint")


def _minimax_1d() -> CatalogInstance:
    g1 = _power_component(1.0, weight=2.0, name="g1")      # x^2
    g2 = _abs_component(2.0, weight=1.0, shift=-1.0, name="g2")
    problem = model.make_problem(
        components=[g1, g2], composer=model.finite_max(2), dimension=1)
    hint = {"kind": "grid-1d", "range": (-4.0, 4.0), "seed": FIXTURE_SEED}
    return CatalogInstance(
        "minimax-1d", problem, np.array([2.0]), np.array([0.5, 0.5]), hint,
        "pointwise max of a smooth quadratic and a Lipschitz piecewise-linear term")


def _sum_hetero() -> CatalogInstance:
    g1 = _scaled_quad_1d(1.0, "g1")
    g2 = _abs_component(1.0, weight=1.0, name="g2")
    problem = model.make_problem(
        components=[g1, g2], composer=model.identity_sum(2), dimension=1)
    hint = {"kind": "grid-1d", "range": (-4.0, 4.0), "seed": FIXTURE_SEED}
    return CatalogInstance(
        "sum-hetero", problem, np.array([-1.0]), np.array([1.0, 1.0]), hint,
        "heterogeneous sum of a smooth and a nonsmooth Lipschitz component")


def _logsumexp_2d() -> CatalogInstance:
    eta = 0.5
    centers = np.array([[1.0, 0.0], [-1.0, 0.0]])
    comps = [_quadratic_component(centers[0], name="g1"),
             _quadratic_component(centers[1], name="g2")]
    problem = model.make_problem(
        components=comps, composer=model.log_sum_exp(2, eta), dimension=2)
    hint = {"kind": "smoothed-max", "centers": centers, "seed": FIXTURE_SEED}
    return CatalogInstance(
        "logsumexp-2d", problem, np.array([1.5, 1.0]), np.array([0.9, 0.1]), hint,
        "entropic smoothing of the max of two quadratics (smooth composer)")


def _sqhinge() -> CatalogInstance:
    eta = 1.0
    xc = np.array([2.0, 0.0])
    a1, b1 = np.array([1.0, 0.0]), 1.0
    problem = model.make_problem(
        components=[_affine_component(a1, b1, "g1")],
        composer=model.squared_hinge(1, eta),
        objective=_quadratic_component(xc, name="g0"),
        dimension=2)
    hint = {"kind": "squared-hinge", "xc": xc, "A": a1[None, :],
            "b": np.array([b1]), "eta": eta, "seed": FIXTURE_SEED}
    return CatalogInstance(
        "sqhinge", problem, np.zeros(2), np.array([1.0, 0.0]), hint,
        "squared-hinge penalty on an affine constraint (smooth composer)")


_HOLDER_WEIGHTS = {1.0: 1.0, 0.5: 0.35, 0.0: 0.13}


def _holder_1d(p: float) -> CatalogInstance:
    w = _HOLDER_WEIGHTS[p]
    g = _power_component(p, weight=w, name="g1")
    problem = model.make_problem(
        components=[g], composer=model.identity_sum(1), dimension=1)
    hint = {"kind": "grid-1d", "range": (-3.0, 3.0), "seed": FIXTURE_SEED}
    tag = f"holder-1d-p{int(round(100 * p)):03d}"
    return CatalogInstance(
        tag, problem, np.array([1.0]), np.array([1.0]), hint,
        f"single component |x|^{1 + p:g}-type term with Holder exponent {p:g}")


_BUILDERS = {
    "qp-affine": _qp_affine,
    "qp-quadcon": _qp_quadcon,
    "minimax-1d": _minimax_1d,
    "sum-hetero": _sum_hetero,
    "logsumexp-2d": _logsumexp_2d,
    "sqhinge": _sqhinge,
    "holder-1d-p100": lambda: _holder_1d(1.0),
    "holder-1d-p050": lambda: _holder_1d(0.5),
    "holder-1d-p000": lambda: _holder_1d(0.0),
}


def instance_ids():
    return list(_BUILDERS)


def build_instance(instance_id: str) -> CatalogInstance:
    try:
        return _BUILDERS[instance_id]()
    except KeyError:
        raise KeyError(f"unknown instance {instance_id!r}") from None


def fixtures_dir() -> Path:
    return Path(resources.files("ufcm") / "fixtures")


def fixture_path(instance_id: str, directory=None) -> Path:
    base = Path(directory) if directory is not None else fixtures_dir()
    return base / f"{instance_id}.json"


def compute_oracle(inst: CatalogInstance, tol: float = 1e-8) -> oracles.OracleResult:
    return oracles.reference_saddle(inst.problem, tol=tol, hint=inst.oracle_hint,
                                    start=(inst.x0, inst.lam0))


def regenerate_fixtures(directory=None, tol: float = 1e-8) -> dict:
    """Recompute every catalog fixture from its oracle and write JSON files."""
    base = Path(directory) if directory is not None else fixtures_dir()
    base.mkdir(parents=True, exist_ok=True)
    written = {}
    for instance_id in instance_ids():
        inst = build_instance(instance_id)
        result = compute_oracle(inst, tol=tol)
        payload = oracles.fixture_payload(instance_id, result, FIXTURE_SEED)
        oracles.write_fixture(fixture_path(instance_id, base), payload)
        written[instance_id] = payload
    return written


def load_instance(instance_id: str, with_saddle: bool = True,
                  fixtures: Optional[Path] = None) -> CatalogInstance:
    inst = build_instance(instance_id)
    if not with_saddle:
        return inst
    path = fixture_path(instance_id, fixtures)
    if not path.exists():
        raise FileNotFoundError(f"missing oracle fixture {path}")
    payload = oracles.load_fixture(path)
    if payload.get("instance") != instance_id:
        raise ValueError(f"fixture {path} does not match instance {instance_id!r}")
    saddle = oracles.saddle_from_fixture(payload)
    problem = inst.problem.with_saddle(saddle)
    return CatalogInstance(inst.instance_id, problem, inst.x0, inst.lam0,
                           inst.oracle_hint, inst.description)
