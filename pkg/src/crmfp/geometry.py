"""Circumcenters of point triples and reflections through operators.

Points are 1-d float arrays; every routine here also accepts higher-rank
arrays (blocks of vectors) since only inner products and norms are used.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CollinearNoCircumcenter, DimensionMismatch

# Two points closer than COINCIDENCE_RTOL * (1 + max input norm) count as one.
COINCIDENCE_RTOL = 1e-12
# The Gram system is treated as rank deficient below this relative determinant.
GRAM_RANK_RTOL = 1e-24


@dataclass
class CircumcenterOutcome:
    """Circumcenter together with the degeneracy class it was computed under.

    kind is "proper" (three affinely independent points), "single-point"
    (all inputs coincide) or "midpoint" (exactly two distinct points).
    """

    kind: str
    center: np.ndarray


def _dot(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.vdot(a, b))


def _norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def circumcenter3(p0, p1, p2) -> CircumcenterOutcome:
    """Point of the affine hull of three points equidistant from all of them.

    For affinely independent points the center solves a 2x2 Gram system in
    the basis (p1 - p0, p2 - p0); it is computed through an orthonormalized
    basis for accuracy on thin triangles.  Coincident inputs degrade to the
    midpoint of the distinct pair (or the point itself); pairwise-distinct
    collinear inputs have no equidistant point in their affine hull and
    raise CollinearNoCircumcenter.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if p0.shape != p1.shape or p0.shape != p2.shape:
        raise DimensionMismatch(
            f"points must share one shape, got {p0.shape}, {p1.shape}, {p2.shape}"
        )

    scale = 1.0 + max(_norm(p0), _norm(p1), _norm(p2))
    tol = COINCIDENCE_RTOL * scale
    d01 = _norm(p0 - p1)
    d02 = _norm(p0 - p2)
    d12 = _norm(p1 - p2)

    if d01 <= tol and d02 <= tol and d12 <= tol:
        return CircumcenterOutcome("single-point", p0.copy())
    if d01 <= tol:
        return CircumcenterOutcome("midpoint", 0.5 * (p0 + p2))
    if d02 <= tol:
        return CircumcenterOutcome("midpoint", 0.5 * (p0 + p1))
    if d12 <= tol:
        return CircumcenterOutcome("midpoint", 0.5 * (p0 + p1))

    v1 = p1 - p0
    v2 = p2 - p0
    n1 = _norm(v1)
    n2 = _norm(v2)
    # Orthonormalize (v1, v2); r22 measures the component of v2 off the line
    # of v1, and det(Gram) = (n1 * r22)^2.
    q1 = v1 / n1
    r12 = _dot(q1, v2)
    w = v2 - r12 * q1
    r22 = _norm(w)

    if (n1 * r22) ** 2 <= GRAM_RANK_RTOL * (n1 * n2) ** 2:
        # Collinear: equidistance from p0 and p1 forces the center onto the
        # midpoint hyperplane; solve in the line and check the remaining
        # equation for consistency.
        a = 0.5 * n1
        residual = abs(a * r12 - 0.5 * n2 * n2)
        if residual > 1e-10 * max(n1 * n1, n2 * n2):
            raise CollinearNoCircumcenter(
                "three pairwise-distinct collinear points have no circumcenter"
            )
        return CircumcenterOutcome("midpoint", p0 + a * q1)

    q2 = w / r22
    a = 0.5 * n1
    b = (0.5 * n2 * n2 - a * r12) / r22
    return CircumcenterOutcome("proper", p0 + a * q1 + b * q2)


def reflect(operator, x) -> np.ndarray:
    """Reflection of x through an operator: 2 T(x) - x."""
    x = np.asarray(x, dtype=float)
    return 2.0 * np.asarray(operator(x), dtype=float) - x
