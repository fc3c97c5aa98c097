"""Golden-section minimization for one-dimensional unimodal functions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .errors import ValidationError

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class GoldenResult:
    argmin: float
    minimum: float
    iterations: int
    evaluations: int
    converged: bool


def golden_section_min(
    func: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-8,
    max_iter: int = 200,
) -> GoldenResult:
    """Minimize a unimodal func on [lo, hi] to absolute bracket width tol.

    Returns the best probed point; ``converged`` is False only when the
    iteration cap fired before the bracket shrank to tol.
    """
    if not lo < hi:
        raise ValidationError("need lo < hi")
    if tol <= 0:
        raise ValidationError("tol must be positive")
    x1 = hi - _INV_PHI * (hi - lo)
    x2 = lo + _INV_PHI * (hi - lo)
    f1, f2 = func(x1), func(x2)
    evals = 2
    iters = 0
    while hi - lo > tol and iters < max_iter:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INV_PHI * (hi - lo)
            f1 = func(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INV_PHI * (hi - lo)
            f2 = func(x2)
        evals += 1
        iters += 1
    if f1 <= f2:
        xbest, fbest = x1, f1
    else:
        xbest, fbest = x2, f2
    return GoldenResult(
        argmin=xbest,
        minimum=fbest,
        iterations=iters,
        evaluations=evals,
        converged=hi - lo <= tol,
    )


def minimize_log_expanding(
    func: Callable[[float], float],
    lo: float,
    hi: float,
    rel_tol: float = 1e-8,
    max_iter: int = 200,
    lo_floor: float = 1e-12,
    hi_cap: float = 1e12,
) -> tuple[GoldenResult, tuple[float, float], bool]:
    """Log-axis golden-section with geometric bracket expansion.

    When the minimizer lands on an endpoint of [lo, hi], that side is
    widened tenfold (bounded by lo_floor / hi_cap) and the search reruns.
    Returns the final result, the bracket actually used, and whether the
    minimum was certified interior.
    """
    tol_u = math.log1p(rel_tol)
    res = None
    for _ in range(30):
        res = golden_section_min_log(func, lo, hi, rel_tol, max_iter)
        at_lo = math.log(res.argmin) - math.log(lo) <= 3.0 * tol_u
        at_hi = math.log(hi) - math.log(res.argmin) <= 3.0 * tol_u
        if at_lo and lo > lo_floor:
            lo = max(lo / 10.0, lo_floor)
            continue
        if at_hi and hi < hi_cap:
            hi = min(hi * 10.0, hi_cap)
            continue
        return res, (lo, hi), not (at_lo or at_hi) and res.converged
    return res, (lo, hi), False


def golden_section_min_log(
    func: Callable[[float], float],
    lo: float,
    hi: float,
    rel_tol: float = 1e-8,
    max_iter: int = 200,
) -> GoldenResult:
    """Golden-section on a log-transformed positive axis.

    Minimizes u -> func(exp(u)) over [log lo, log hi]; because u ->
    exp(u) is strictly increasing, unimodality of func on [lo, hi] is
    preserved.  rel_tol is the relative bracket width on the original
    axis.
    """
    if not 0 < lo < hi:
        raise ValidationError("need 0 < lo < hi")
    res = golden_section_min(
        lambda u: func(math.exp(u)),
        math.log(lo),
        math.log(hi),
        tol=math.log1p(rel_tol),
        max_iter=max_iter,
    )
    x = math.exp(res.argmin)
    return GoldenResult(
        argmin=x,
        minimum=res.minimum,
        iterations=res.iterations,
        evaluations=res.evaluations,
        converged=res.converged,
    )
