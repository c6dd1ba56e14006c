"""Firmly nonexpansive operators and checks on their algebra.

The closed set of operator kinds is: identity, halfspace-projection,
affine-subspace-projection, ball-projection, ellipsoid-projection,
convex-combination, composition, and the blockwise "lifted" kind defined in
product_space.  Operators are immutable, validate their input dimension on
every call, and return new arrays.

Convex combinations (and block applications) of ellipsoid projections are
evaluated as one batched solve, one batch row per member set.  Rows of a
batch never interact, so the fused path returns exactly what member-by-
member evaluation returns; it only removes per-member loop overhead.
"""
from __future__ import annotations

import numpy as np

from .ellipsoid import (
    AdmmConfig,
    Ellipsoid,
    EllipsoidStack,
    admm_project_stacked,
    kkt_project_stacked,
)
from .errors import DimensionMismatch, EmptyOperatorList, InvalidWeight

# Fused evaluation is skipped when the stacked eigenvector arrays would
# exceed this many floats (memory gate; results are identical either way).
FUSE_GATE = 1 << 22

_FUSED_EVALUATION = True


def set_fused_evaluation(enabled: bool) -> bool:
    """Globally enable or disable batched ellipsoid evaluation.

    Disabled, every combination and block application falls back to the
    plain member-by-member loop.  Outputs are bit-identical either way;
    only wall time changes.  Returns the previous setting.
    """
    global _FUSED_EVALUATION
    previous = _FUSED_EVALUATION
    _FUSED_EVALUATION = bool(enabled)
    return previous


def _check_vec(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (dim,):
        raise DimensionMismatch(f"point has shape {x.shape}, expected ({dim},)")
    return x


class Identity:
    """Identity operator on R^dim."""

    kind = "identity"

    def __init__(self, dim: int):
        self.dim = int(dim)

    def __call__(self, x) -> np.ndarray:
        return _check_vec(x, self.dim).copy()


class HalfspaceProjection:
    """Projection onto {x : normal. x <= offset}."""

    kind = "halfspace-projection"

    def __init__(self, normal, offset: float):
        normal = np.asarray(normal, dtype=float)
        if normal.ndim != 1 or not np.isfinite(normal).all():
            raise ValueError("normal must be a finite vector")
        sq = float(normal @ normal)
        if sq == 0.0:
            raise ValueError("normal must be nonzero")
        self.normal = normal
        self.offset = float(offset)
        self.dim = normal.shape[0]
        self._sq = sq

    def __call__(self, x) -> np.ndarray:
        x = _check_vec(x, self.dim)
        excess = float(self.normal @ x) - self.offset
        if excess <= 0.0:
            return x.copy()
        return x - (excess / self._sq) * self.normal


class AffineSubspace:
    """Affine subspace anchor + span(basis rows); basis rows are orthonormal."""

    def __init__(self, anchor, basis):
        anchor = np.asarray(anchor, dtype=float)
        basis = np.asarray(basis, dtype=float)
        if anchor.ndim != 1:
            raise ValueError("anchor must be a vector")
        if basis.ndim != 2 or basis.shape[1] != anchor.shape[0]:
            raise DimensionMismatch(
                f"basis shape {basis.shape} does not match anchor dimension {anchor.shape[0]}"
            )
        gram = basis @ basis.T
        if basis.shape[0] and np.abs(gram - np.eye(basis.shape[0])).max() > 1e-12:
            raise ValueError("basis rows must be orthonormal")
        self.anchor = anchor
        self.basis = basis
        self.dim = anchor.shape[0]

    @classmethod
    def from_span(cls, anchor, vectors) -> "AffineSubspace":
        """Build from any spanning rows; orthonormalizes and drops rank loss."""
        vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
        _, s, vt = np.linalg.svd(vectors, full_matrices=False)
        keep = s > 1e-12 * (s[0] if s.size else 1.0)
        return cls(anchor, vt[keep])

    def project(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatch(f"point has shape {x.shape}, expected ({self.dim},)")
        d = x - self.anchor
        return self.anchor + (d @ self.basis.T) @ self.basis


class AffineSubspaceProjection:
    """Projection onto an affine subspace."""

    kind = "affine-subspace-projection"

    def __init__(self, subspace: AffineSubspace):
        self.subspace = subspace
        self.dim = subspace.dim

    def __call__(self, x) -> np.ndarray:
        return self.subspace.project(x)


class BallProjection:
    """Projection onto the closed ball of given center and radius."""

    kind = "ball-projection"

    def __init__(self, center, radius: float):
        center = np.asarray(center, dtype=float)
        radius = float(radius)
        if center.ndim != 1 or not np.isfinite(center).all():
            raise ValueError("center must be a finite vector")
        if radius <= 0.0:
            raise ValueError("radius must be positive")
        self.center = center
        self.radius = radius
        self.dim = center.shape[0]

    def __call__(self, x) -> np.ndarray:
        x = _check_vec(x, self.dim)
        d = x - self.center
        dist = float(np.linalg.norm(d))
        if dist <= self.radius:
            return x.copy()
        return self.center + (self.radius / dist) * d


class EllipsoidProjection:
    """Projection onto an ellipsoid through one of the two solvers.

    method "admm" runs the splitting iteration (benchmark default); method
    "kkt" runs the direct root-find (reference).
    """

    kind = "ellipsoid-projection"

    def __init__(
        self,
        ellipsoid: Ellipsoid,
        method: str = "admm",
        admm: AdmmConfig | None = None,
        kkt_tol: float = 1e-10,
    ):
        if method not in ("admm", "kkt"):
            raise ValueError(f"unknown projection method {method!r}")
        self.ellipsoid = ellipsoid
        self.method = method
        self.admm = admm if admm is not None else AdmmConfig()
        self.kkt_tol = float(kkt_tol)
        self.dim = ellipsoid.dim

    def _solver_key(self):
        return (self.method, self.admm, self.kkt_tol)

    def __call__(self, x) -> np.ndarray:
        x = _check_vec(x, self.dim)
        stack = self.ellipsoid.stack()
        if self.method == "admm":
            return admm_project_stacked(stack, x[None, :], self.admm)[0][0]
        return kkt_project_stacked(stack, x[None, :], self.kkt_tol)[0]


class ConvexCombination:
    """Weighted mean of operators: x -> sum_i weights[i] * ops[i](x).

    Weights must be nonnegative and sum to one within 1e-12.  A combination
    of projections is firmly nonexpansive but in general not idempotent.
    """

    kind = "convex-combination"

    def __init__(self, operators, weights):
        operators = tuple(operators)
        if not operators:
            raise EmptyOperatorList("convex combination needs at least one operator")
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (len(operators),):
            raise InvalidWeight(
                f"{len(operators)} operators but weight shape {weights.shape}"
            )
        if (weights < 0.0).any():
            raise InvalidWeight("weights must be nonnegative")
        if abs(float(weights.sum()) - 1.0) > 1e-12:
            raise InvalidWeight("weights must sum to one within 1e-12")
        dim = operators[0].dim
        if any(op.dim != dim for op in operators):
            raise DimensionMismatch("combined operators must share one dimension")
        self.operators = operators
        self.weights = weights
        self.dim = dim
        self._fuse_cache: tuple | None | bool = False  # False = not computed yet

    def _fused(self):
        """(stack, solver key) when every member projects onto an ellipsoid."""
        if self._fuse_cache is False:
            parts = None
            if all(isinstance(op, EllipsoidProjection) for op in self.operators):
                keys = {op._solver_key() for op in self.operators}
                if len(keys) == 1:
                    stack = EllipsoidStack([op.ellipsoid for op in self.operators])
                    parts = (stack, keys.pop())
            self._fuse_cache = parts
        return self._fuse_cache

    def __call__(self, x) -> np.ndarray:
        x = _check_vec(x, self.dim)
        fused = self._fused() if _FUSED_EVALUATION else None
        if fused is not None:
            stack, key = fused
            rows = np.broadcast_to(x, (len(stack), self.dim))
            return self.weights @ _project_rows(stack, rows, key)
        outs = np.stack([op(x) for op in self.operators])
        return self.weights @ outs


class Composition:
    """Sequential application: the first listed operator is applied first."""

    kind = "composition"

    def __init__(self, operators):
        operators = tuple(operators)
        if not operators:
            raise EmptyOperatorList("composition needs at least one operator")
        dim = operators[0].dim
        if any(op.dim != dim for op in operators):
            raise DimensionMismatch("composed operators must share one dimension")
        self.operators = operators
        self.dim = dim

    def __call__(self, x) -> np.ndarray:
        x = _check_vec(x, self.dim).copy()
        for op in self.operators:
            x = op(x)
        return x


def _project_rows(stack: EllipsoidStack, rows: np.ndarray, key) -> np.ndarray:
    method, admm_cfg, kkt_tol = key
    if method == "admm":
        return admm_project_stacked(stack, rows, admm_cfg)[0]
    return kkt_project_stacked(stack, rows, kkt_tol)


def _ellipsoid_parts(op):
    """(stack, weights, solver key) when op is built from ellipsoid projections."""
    if isinstance(op, EllipsoidProjection):
        return op.ellipsoid.stack(), np.ones(1), op._solver_key()
    if isinstance(op, ConvexCombination):
        fused = op._fused()
        if fused is not None:
            return fused[0], op.weights, fused[1]
    return None


def apply_each(operators, points) -> list[np.ndarray]:
    """Apply operators[i] to its input row, fusing ellipsoid work when possible.

    points is either one vector shared by every operator or an array with
    one row per operator.  Returns the list of outputs; identical to the
    plain per-operator loop.
    """
    operators = list(operators)
    if not operators:
        raise EmptyOperatorList("need at least one operator")
    points = np.asarray(points, dtype=float)
    shared = points.ndim == 1
    if not shared and points.shape[0] != len(operators):
        raise DimensionMismatch(
            f"{len(operators)} operators but {points.shape[0]} input rows"
        )

    parts = [_ellipsoid_parts(op) for op in operators] if _FUSED_EVALUATION else [None]
    if all(p is not None for p in parts):
        keys = {p[2] for p in parts}
        total = sum(len(p[0]) for p in parts)
        n = operators[0].dim
        if len(keys) == 1 and total * n * n <= FUSE_GATE:
            big = EllipsoidStack.concatenate([p[0] for p in parts])
            if shared:
                rows = np.broadcast_to(points, (total, n))
            else:
                counts = [len(p[0]) for p in parts]
                rows = np.repeat(points, counts, axis=0)
            proj = _project_rows(big, rows, keys.pop())
            outs = []
            start = 0
            for p in parts:
                stop = start + len(p[0])
                outs.append(p[1] @ proj[start:stop])
                start = stop
            return outs

    if shared:
        return [op(points) for op in operators]
    return [op(points[i]) for i, op in enumerate(operators)]


def translate(op, shift):
    """Operator of the same kind for the set moved by the given vector."""
    shift = np.asarray(shift, dtype=float)
    if shift.shape != (op.dim,):
        raise DimensionMismatch(f"shift has shape {shift.shape}, expected ({op.dim},)")
    if isinstance(op, Identity):
        return Identity(op.dim)
    if isinstance(op, HalfspaceProjection):
        return HalfspaceProjection(op.normal, op.offset + float(op.normal @ shift))
    if isinstance(op, AffineSubspaceProjection):
        sub = op.subspace
        return AffineSubspaceProjection(AffineSubspace(sub.anchor + shift, sub.basis))
    if isinstance(op, BallProjection):
        return BallProjection(op.center + shift, op.radius)
    if isinstance(op, EllipsoidProjection):
        e = op.ellipsoid
        # {y : g(y - shift) <= 0} expanded back to the same quadratic form.
        b = e.b - e.A @ shift
        alpha = e.alpha + 2.0 * float(e.b @ shift) - float(shift @ e.A @ shift)
        if alpha <= 0.0:
            raise ValueError("translated ellipsoid would not contain the origin")
        return EllipsoidProjection(
            Ellipsoid(e.A, b, alpha), op.method, op.admm, op.kkt_tol
        )
    if isinstance(op, ConvexCombination):
        return ConvexCombination([translate(t, shift) for t in op.operators], op.weights)
    if isinstance(op, Composition):
        return Composition([translate(t, shift) for t in op.operators])
    raise TypeError(f"cannot translate operator of type {type(op).__name__}")


def firm_nonexpansiveness_slack(operator, x, y) -> float:
    """<T(x) - T(y), x - y> - ||T(x) - T(y)||^2; nonnegative at every pair
    exactly when the operator is firmly nonexpansive there."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = np.asarray(operator(x), dtype=float) - np.asarray(operator(y), dtype=float)
    return float(np.vdot(d, x - y) - np.vdot(d, d))


def fixed_point_residual(operator, x) -> float:
    """||x - T(x)||; zero exactly on fixed points."""
    x = np.asarray(x, dtype=float)
    return float(np.linalg.norm(x - np.asarray(operator(x), dtype=float)))


def translated_projection_deviation(projection, shift, weight: float, samples) -> float:
    """How far (1-w) P_C + w P_{C+shift} is from the projection onto C + w*shift.

    Zero (up to rounding) when shift is orthogonal to the affine hull of C;
    positive deviations witness that the combination is not that projection.
    """
    if not 0.0 < weight < 1.0:
        raise InvalidWeight("weight must lie strictly between 0 and 1")
    shifted = translate(projection, shift)
    target = translate(projection, weight * np.asarray(shift, dtype=float))
    worst = 0.0
    for x in samples:
        x = np.asarray(x, dtype=float)
        mix = (1.0 - weight) * projection(x) + weight * shifted(x)
        worst = max(worst, float(np.linalg.norm(mix - target(x))))
    return worst


def fixed_set_witness_check(proj_a, proj_b, u, v, weight: float) -> tuple[float, float]:
    """Residuals at the witness w = (1-weight) u + weight v.

    Returns (||P(w) - w|| for the combination P = (1-weight) P_A + weight P_B,
    max(||P_A(w) - u||, ||P_B(w) - v||)).  Both vanish when (u, v) realizes
    the distance between the two sets.
    """
    if not 0.0 < weight < 1.0:
        raise InvalidWeight("weight must lie strictly between 0 and 1")
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    w = (1.0 - weight) * u + weight * v
    pa = np.asarray(proj_a(w), dtype=float)
    pb = np.asarray(proj_b(w), dtype=float)
    residual = float(np.linalg.norm((1.0 - weight) * pa + weight * pb - w))
    mismatch = max(float(np.linalg.norm(pa - u)), float(np.linalg.norm(pb - v)))
    return residual, mismatch


def idempotence_violation_search(operator, samples) -> float:
    """max ||T(T(x)) - T(x)|| over the samples; zero for projections."""
    worst = 0.0
    seen = False
    for x in samples:
        seen = True
        tx = np.asarray(operator(np.asarray(x, dtype=float)), dtype=float)
        worst = max(worst, float(np.linalg.norm(operator(tx) - tx)))
    if not seen:
        raise ValueError("need at least one sample")
    return worst


def gradient_check(projection, x, h: float = 1e-5) -> float:
    """Relative gap between the finite-difference gradient of the squared
    distance to the set and its closed form 2 (x - P(x))."""
    if h <= 0.0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float)
    analytic = 2.0 * (x - np.asarray(projection(x), dtype=float))

    def dist_sq(u):
        d = u - np.asarray(projection(u), dtype=float)
        return float(d @ d)

    fd = np.zeros_like(x)
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = h
        fd[i] = (dist_sq(x + e) - dist_sq(x - e)) / (2.0 * h)
    return float(np.linalg.norm(fd - analytic) / (1.0 + np.linalg.norm(analytic)))
