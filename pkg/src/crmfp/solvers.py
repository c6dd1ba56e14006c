"""Fixed-point iterations for common-fixed-point problems.

Four steps are provided.  map_step alternates one operator with an affine
(or diagonal) subspace projection; crm_step replaces the alternating step
by the circumcenter of the current iterate and two successive reflections,
which stays in the subspace and never does worse than the alternating
step; ppm_step averages many operators; spm_step chains them.  run() wraps
any of them with a displacement stopping rule, optional distance tracking
against a known solution, and optional per-iteration checks that raise
DiagnosticFailure when a structural property is violated numerically.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import (
    DiagnosticFailure,
    EmptyOperatorList,
    InsufficientHistory,
    NotInSubspace,
)
from .geometry import circumcenter3
from .operators import apply_each

# Degeneracy guard inside the circumcentering step.
EPS_DEG = 1e-12
# Relative tolerances of the runtime checks.
MEMBERSHIP_RTOL = 1e-8
ORTHOGONALITY_RTOL = 1e-8
FEJER_SLACK_TOL = 1e-8

_DIAGNOSTICS = ("fejer", "orthogonality", "membership")
_KINDS = ("map", "crm", "ppm", "spm")


@dataclass
class SolverConfig:
    """Stopping rule (displacement norm) and which runtime checks to run."""

    tolerance: float = 1e-6
    max_iterations: int = 50000
    diagnostics: tuple[str, ...] = ()

    def __post_init__(self):
        if not (self.tolerance > 0.0 and np.isfinite(self.tolerance)):
            raise ValueError("tolerance must be positive and finite")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        unknown = set(self.diagnostics) - set(_DIAGNOSTICS)
        if unknown:
            raise ValueError(f"unknown diagnostics: {sorted(unknown)}")


@dataclass
class IterationTrace:
    """Everything a run produced.

    residual_history holds the displacement ||x_{k+1} - x_k|| per step (its
    length is the iteration count); fixed_point_residuals holds
    ||x_k - T(x_k)|| where the step evaluates a single operator, else the
    displacement again.  dist_history, present when a solution was supplied,
    starts at the initial point (length iterations + 1).
    """

    iterations: int
    stop_reason: str
    residual_history: list[float]
    fixed_point_residuals: list[float]
    final_point: np.ndarray
    dist_history: list[float] | None = None
    elapsed_s: float = 0.0


@dataclass
class RateEstimate:
    """Per-step contraction ratios of a distance history and two summaries."""

    per_step_ratios: list[float]
    sup_ratio: float
    geometric_mean_ratio: float


def _norm(a) -> float:
    return float(np.linalg.norm(a))


def _require_in_subspace(subspace, x) -> None:
    gap = _norm(subspace.project(x) - x)
    if gap > MEMBERSHIP_RTOL * (1.0 + _norm(x)):
        raise NotInSubspace(f"point is {gap:.3e} away from the subspace")


def map_step(operator, subspace, z) -> np.ndarray:
    """Alternating step: project the operator image onto the subspace."""
    z = np.asarray(z, dtype=float)
    return subspace.project(np.asarray(operator(z), dtype=float))


def _crm_parts(operator, subspace, x):
    """(next iterate, T(x), reflection, projected reflection) for one step.

    Degenerate configurations are resolved before circumcentering: a
    reflection already in the subspace yields the midpoint of x and the
    reflection (= T(x)); a reflection projecting back onto x yields x.
    """
    tx = np.asarray(operator(x), dtype=float)
    r = 2.0 * tx - x
    pr = subspace.project(r)
    if _norm(r - pr) <= EPS_DEG * (1.0 + _norm(r)):
        return tx, tx, r, pr
    if _norm(x - pr) <= EPS_DEG * (1.0 + _norm(x)):
        return x.copy(), tx, r, pr
    w = 2.0 * pr - r
    return circumcenter3(x, r, w).center, tx, r, pr


def crm_step(operator, subspace, x) -> np.ndarray:
    """Circumcentering step from a point of the subspace.

    Returns the point of the subspace equidistant from x, the reflection of
    x through the operator, and the reflection of that through the
    subspace.  Raises NotInSubspace when x is not (numerically) in the
    subspace.

    The circumcenter lies in the subspace in exact arithmetic; the result
    is re-projected so rounding drift cannot compound across steps (near
    convergence the circumscribed triangle flattens and a step amplifies
    any out-of-subspace component of its input).
    """
    x = np.asarray(x, dtype=float)
    _require_in_subspace(subspace, x)
    return subspace.project(_crm_parts(operator, subspace, x)[0])


def ppm_step(operators, x) -> np.ndarray:
    """Parallel step: mean of all operator images."""
    operators = list(operators)
    if not operators:
        raise EmptyOperatorList("parallel step needs at least one operator")
    x = np.asarray(x, dtype=float)
    return np.mean(np.stack(apply_each(operators, x)), axis=0)


def spm_step(operators, x) -> np.ndarray:
    """Sequential step: chain all operators, first listed applied first."""
    operators = list(operators)
    if not operators:
        raise EmptyOperatorList("sequential step needs at least one operator")
    x = np.asarray(x, dtype=float).copy()
    for op in operators:
        x = np.asarray(op(x), dtype=float)
    return x


def run(kind, problem, x0, cfg: SolverConfig | None = None, solution=None) -> IterationTrace:
    """Iterate one of the steps until the displacement drops below tolerance.

    Parameters
    ----------
    kind : one of "map", "crm", "ppm", "spm".
    problem : (operator, subspace) for "map" and "crm"; a sequence of
        operators for "ppm" and "spm".
    x0 : starting point ("crm" requires it to lie in the subspace).
    cfg : SolverConfig; cfg.diagnostics may request per-iteration checks.
        "fejer" checks that the squared distance to the supplied solution
        decreases by at least the squared step of the alternating operator
        (monotonicity only for "spm") up to slack 1e-8; "orthogonality" and
        "membership" are specific to "crm" and check that each new iterate
        is orthogonal to the operator displacement and stays in the
        subspace.  Violations raise DiagnosticFailure.
    solution : known common fixed point; enables dist_history and "fejer".
    """
    if kind not in _KINDS:
        raise ValueError(f"unknown step kind {kind!r}; expected one of {_KINDS}")
    if cfg is None:
        cfg = SolverConfig()

    want_fejer = "fejer" in cfg.diagnostics
    want_orth = "orthogonality" in cfg.diagnostics
    want_member = "membership" in cfg.diagnostics
    if (want_orth or want_member) and kind != "crm":
        raise ValueError("orthogonality/membership checks apply to crm runs only")
    if want_fejer and solution is None:
        raise ValueError("the fejer check needs a known solution")

    if kind in ("map", "crm"):
        operator, subspace = problem
    else:
        operators = list(problem)
        if not operators:
            raise EmptyOperatorList(f"{kind} needs at least one operator")

    x = np.asarray(x0, dtype=float).copy()
    if kind == "crm":
        _require_in_subspace(subspace, x)

    sol = None if solution is None else np.asarray(solution, dtype=float)
    residuals: list[float] = []
    fix_residuals: list[float] = []
    dists: list[float] | None = None
    if sol is not None:
        dists = [_norm(x - sol)]

    stop_reason = "max-iterations"
    t0 = time.perf_counter()
    for k in range(cfg.max_iterations):
        tx = None
        if kind == "crm":
            # Checks below see the raw circumcenter (that is the claimed
            # geometry); the iterate continues from its projection so eps
            # drift out of the subspace cannot compound.
            raw, tx, _r, _pr = _crm_parts(operator, subspace, x)
            xn = subspace.project(raw)
        elif kind == "map":
            tx = np.asarray(operator(x), dtype=float)
            xn = subspace.project(tx)
        elif kind == "ppm":
            xn = ppm_step(operators, x)
        else:
            xn = spm_step(operators, x)

        res = _norm(xn - x)
        residuals.append(res)
        fix_residuals.append(res if tx is None else _norm(tx - x))

        new_dist = None if sol is None else _norm(xn - sol)
        if want_member:
            gap = _norm(xn - raw)
            if gap > MEMBERSHIP_RTOL * (1.0 + _norm(raw)):
                raise DiagnosticFailure("membership", k, gap)
        if want_orth:
            inner = float(np.vdot(x - tx, raw - tx))
            bound = ORTHOGONALITY_RTOL * (1.0 + _norm(x - tx) * _norm(raw - tx))
            if abs(inner) > bound:
                raise DiagnosticFailure("orthogonality", k, inner)
        if want_fejer:
            slack = dists[-1] ** 2 - new_dist**2
            if kind == "crm":
                slack -= _norm(subspace.project(tx) - x) ** 2
            elif kind in ("map", "ppm"):
                slack -= res**2
            if slack < -FEJER_SLACK_TOL:
                raise DiagnosticFailure("fejer", k, slack)

        if dists is not None:
            dists.append(new_dist)
        x = xn
        if res < cfg.tolerance:
            stop_reason = "converged"
            break
    elapsed = time.perf_counter() - t0

    return IterationTrace(
        iterations=len(residuals),
        stop_reason=stop_reason,
        residual_history=residuals,
        fixed_point_residuals=fix_residuals,
        final_point=x,
        dist_history=dists,
        elapsed_s=elapsed,
    )


# Ratios are only formed where the denominator exceeds this floor.
RATE_FLOOR = 100.0 * float(np.finfo(float).eps)


def estimate_rate(dist_history) -> RateEstimate:
    """Contraction ratios d_{k+1} / d_k of a distance history.

    Pairs whose denominator is at or below 100 machine epsilons are dropped
    (they carry no rate information); if no pair survives, the history is
    insufficient.  The geometric mean is zero when any surviving ratio is
    zero (an exact hit).
    """
    h = np.asarray(dist_history, dtype=float)
    if h.ndim != 1 or h.size < 2:
        raise InsufficientHistory("need at least two distances")
    ratios = [float(h[k + 1] / h[k]) for k in range(h.size - 1) if h[k] > RATE_FLOOR]
    if not ratios:
        raise InsufficientHistory("all denominators at or below the floor")
    sup = max(ratios)
    if min(ratios) <= 0.0:
        geo = 0.0
    else:
        geo = float(np.exp(np.mean(np.log(ratios))))
    return RateEstimate(per_step_ratios=ratios, sup_ratio=sup, geometric_mean_ratio=geo)
