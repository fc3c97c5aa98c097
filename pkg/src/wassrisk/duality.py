"""Robust expected value via the scalar dual formula.

The largest expectation of a convex piecewise-linear f over all
measures within transport distance theta of a baseline equals

    inf over lam >= 0 of  lam * theta + E[ f_lam ]

with f_lam the quadratic-cost sup-transform and the expectation taken
under the baseline.  The objective is convex in lam, so a golden-section
search over log(lam) suffices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ._golden import minimize_log_expanding
from .errors import ValidationError
from .measures import integrate
from .pwl import PwlConvex, lambda_c_transform

__all__ = ["DualSolveReport", "dual_objective", "robust_expected_value"]


@dataclass(frozen=True)
class DualSolveReport:
    """Outcome of the one-dimensional dual minimization.

    ``lam`` is ``inf`` for theta = 0 (the infimum is a lam -> infinity
    limit and is not attained) and 0 for constant payoffs.  ``bracket``
    is None when no search ran.
    """

    value: float
    lam: float
    evaluations: int
    bracket: tuple[float, float] | None
    converged: bool


def dual_objective(f: PwlConvex, baseline, theta: float, lam: float) -> float:
    """lam * theta + E[ f_lam ] under the baseline measure."""
    if theta < 0:
        raise ValidationError("theta must be nonnegative")
    return float(lam) * theta + integrate(lambda_c_transform(f, lam), baseline)


def robust_expected_value(
    f: PwlConvex,
    baseline,
    theta: float,
    tol: float = 1e-8,
    bracket: tuple[float, float] = (1e-6, 1e6),
    max_iter: int = 200,
) -> DualSolveReport:
    """Worst-case expectation of f over the transport ball of radius theta.

    Minimizes ``dual_objective`` over lam by golden-section search on a
    log axis, widening the bracket tenfold per side (up to 1e-12 / 1e12)
    if the minimum sits on an endpoint.  An endpoint minimum that
    survives expansion is reported with ``converged=False`` rather than
    clamped silently.
    """
    if theta < 0:
        raise ValidationError("theta must be nonnegative")
    if tol <= 0:
        raise ValidationError("tol must be positive")
    if theta == 0.0:
        return DualSolveReport(
            value=integrate(f, baseline),
            lam=math.inf,
            evaluations=1,
            bracket=None,
            converged=True,
        )
    if f.lipschitz == 0.0:
        # flat payoff: the transform is the identity and the objective
        # decreases to E[f] as lam -> 0
        return DualSolveReport(
            value=integrate(f, baseline),
            lam=0.0,
            evaluations=1,
            bracket=None,
            converged=True,
        )
    evals = 0

    def objective(lam: float) -> float:
        nonlocal evals
        evals += 1
        return dual_objective(f, baseline, theta, lam)

    res, used, interior = minimize_log_expanding(
        objective, bracket[0], bracket[1], rel_tol=tol, max_iter=max_iter
    )
    return DualSolveReport(
        value=res.minimum,
        lam=res.argmin,
        evaluations=evals,
        bracket=used,
        converged=interior,
    )
