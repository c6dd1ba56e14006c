"""Seeded random instances: convex combinations of ellipsoid projections.

Every generated ellipsoid contains the origin in its interior, so the zero
vector is a certified common fixed point of all generated operators.  All
randomness flows through one numpy Generator per instance; the draw order
is fixed (per operator: member count, raw weights, then each ellipsoid as
sparsity mask, dense values, linear term), so a spec regenerates the same
instance bit for bit.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .ellipsoid import AdmmConfig, Ellipsoid
from .errors import CannotExitSets
from .operators import ConvexCombination, EllipsoidProjection


@dataclass
class InstanceSpec:
    """Parameters of one random instance.

    density defaults to 2/n (capped at 1), the expected two nonzeros per
    matrix row.  eta is the common coordinate of the starting point and
    must be negative so the start lies outside the positive-leaning sets.
    """

    n: int
    p: int
    seed: int
    gamma: float = 1.0
    density: float | None = None
    r_range: tuple[int, ...] = (3, 4, 5)
    eta: float = -5.0

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if self.gamma <= 0.0:
            raise ValueError("gamma must be positive")
        if self.density is None:
            self.density = min(1.0, 2.0 / self.n)
        if not 0.0 < self.density <= 1.0:
            raise ValueError("density must lie in (0, 1]")
        self.r_range = tuple(int(r) for r in self.r_range)
        if not self.r_range or any(r < 1 for r in self.r_range):
            raise ValueError("r_range must hold positive member counts")
        if self.eta >= 0.0:
            raise ValueError("eta must be negative")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "seed": self.seed,
            "gamma": self.gamma,
            "density": self.density,
            "r_range": list(self.r_range),
            "eta": self.eta,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "InstanceSpec":
        return cls(
            n=int(data["n"]),
            p=int(data["p"]),
            seed=int(data["seed"]),
            gamma=float(data["gamma"]),
            density=float(data["density"]),
            r_range=tuple(int(r) for r in data["r_range"]),
            eta=float(data["eta"]),
        )


@dataclass
class FppInstance:
    """Generated problem: p operators on R^n with certified common fixed point."""

    spec: InstanceSpec
    operators: list[ConvexCombination]
    fixed_point: np.ndarray


def gen_ellipsoid(n: int, rng: np.random.Generator, gamma: float = 1.0,
                  density: float | None = None) -> Ellipsoid:
    """One random ellipsoid containing the origin in its interior.

    A = gamma I + B'B with B sparse (entries standard normal with the given
    density), b uniform on [0, 1]^n, and the level alpha = b'Ab + 1, which
    keeps g(0) = -alpha strictly negative.
    """
    if density is None:
        density = min(1.0, 2.0 / n)
    mask = rng.random((n, n)) < density
    B = np.where(mask, rng.standard_normal((n, n)), 0.0)
    A = gamma * np.eye(n) + B.T @ B
    A = 0.5 * (A + A.T)
    b = rng.random(n)
    alpha = float(b @ A @ b) + 1.0
    return Ellipsoid(A, b, alpha)


def gen_operator(n: int, rng: np.random.Generator, spec: InstanceSpec,
                 admm: AdmmConfig | None = None) -> ConvexCombination:
    """One random convex combination of ellipsoid projections."""
    r = int(rng.choice(np.asarray(spec.r_range)))
    raw = rng.random(r)
    weights = raw / raw.sum()
    members = [
        EllipsoidProjection(
            gen_ellipsoid(n, rng, spec.gamma, spec.density), method="admm", admm=admm
        )
        for _ in range(r)
    ]
    return ConvexCombination(members, weights)


def gen_instance(spec: InstanceSpec, admm: AdmmConfig | None = None) -> FppInstance:
    """All p operators of an instance from one seeded stream."""
    rng = np.random.default_rng(spec.seed)
    operators = [gen_operator(spec.n, rng, spec, admm) for _ in range(spec.p)]
    return FppInstance(spec=spec, operators=operators, fixed_point=np.zeros(spec.n))


def initial_point(instance: FppInstance) -> np.ndarray:
    """Constant starting vector (eta, ..., eta) outside every generated set.

    If some ellipsoid still contains the candidate, eta is doubled, up to
    ten times; generated sets are bounded so this fails only on broken data.
    """
    eta = instance.spec.eta
    ellipsoids = [
        proj.ellipsoid for op in instance.operators for proj in op.operators
    ]
    for _ in range(11):
        x = np.full(instance.spec.n, eta)
        if all(e.g(x) > 0.0 for e in ellipsoids):
            return x
        eta *= 2.0
    raise CannotExitSets("no scaled constant start lies outside every set")


def instance_to_dict(instance: FppInstance) -> dict:
    """Plain-data form of an instance (spec plus every operator's data)."""
    return {
        "spec": instance.spec.to_dict(),
        "operators": [
            {
                "weights": op.weights.tolist(),
                "ellipsoids": [proj.ellipsoid.to_dict() for proj in op.operators],
            }
            for op in instance.operators
        ],
    }


def instance_from_dict(data: dict, admm: AdmmConfig | None = None) -> FppInstance:
    spec = InstanceSpec.from_dict(data["spec"])
    operators = []
    for op_data in data["operators"]:
        members = [
            EllipsoidProjection(
                Ellipsoid.from_dict(e, spec.n), method="admm", admm=admm
            )
            for e in op_data["ellipsoids"]
        ]
        operators.append(ConvexCombination(members, np.asarray(op_data["weights"])))
    return FppInstance(spec=spec, operators=operators, fixed_point=np.zeros(spec.n))


def save_instance(instance: FppInstance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(instance), fh, indent=2)
        fh.write("\n")


def load_instance(path, admm: AdmmConfig | None = None) -> FppInstance:
    with open(path, encoding="utf-8") as fh:
        return instance_from_dict(json.load(fh), admm)
