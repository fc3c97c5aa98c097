"""Expected Shortfall and its worst-case version over a transport ball.

Expected Shortfall at level beta of a liability f under a measure nu is
computed through its minimization form

    ES(f) = min over alpha of  alpha + E[ (f - alpha)^+ ] / (1 - beta),

whose minimizer is the beta-quantile of f.  Robustifying over all nu
within transport distance theta of the baseline and dualizing the inner
supremum turns this into a nested scalar minimization:

    min over alpha, lam of
        alpha + ( lam * theta + E[ ((f - alpha)^+)_lam ] ) / (1 - beta)

where (.)_lam is the quadratic-cost sup-transform.  Both one-dimensional
problems are convex and solved by golden-section search, alpha on the
outside over quantile bounds derived from the Markov inequality, lam on
the inside over a log axis.

Since f is a max of affine pieces, (f - alpha)^+ is the same max with
intercepts lowered by alpha plus an appended zero piece, and its
transform just raises each intercept by |slope|^2 / (2 lam).  The
expectation on a fixed point set is therefore a clipped-max reduction
over precomputed dot products, which is what ``_TransformEvaluator``
caches and the kernels evaluate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._golden import golden_section_min, minimize_log_expanding
from ._kernels import expected_clipped_max
from .errors import ComputeError, ValidationError
from .measures import (
    ProductLognormal,
    QuadratureGrid,
    integrate,
    lognormal_quantile,
    price_call,
)
from .pwl import PwlConvex, scale

__all__ = [
    "RobustEsProblem",
    "EsSolveReport",
    "es_nonrobust",
    "var_bounds",
    "robust_es",
    "robust_es_call_closed_form",
    "first_order_check",
    "coherence_suite",
]


@dataclass(frozen=True)
class RobustEsProblem:
    """Payoff, baseline, ambiguity radius, confidence, solver knobs."""

    payoff: PwlConvex
    baseline: object
    theta: float
    beta: float
    alpha_tol: float = 1e-6
    lambda_rel_tol: float = 1e-7
    lambda_bracket: tuple[float, float] = (1e-6, 1e6)
    max_iter: int = 200

    def __post_init__(self) -> None:
        if not 0.0 < self.beta < 1.0:
            raise ValidationError("beta must lie strictly in (0, 1)")
        if self.theta < 0:
            raise ValidationError("theta must be nonnegative")
        if self.alpha_tol <= 0 or self.lambda_rel_tol <= 0:
            raise ValidationError("tolerances must be positive")
        lo, hi = self.lambda_bracket
        if not 0 < lo < hi:
            raise ValidationError("lambda bracket must satisfy 0 < lo < hi")


@dataclass(frozen=True)
class EsSolveReport:
    """Solution of the nested minimization.

    ``lam`` is ``inf`` for theta = 0 (no inner search) and 0 for
    constant payoffs.  ``alpha`` estimates the worst-case quantile.
    """

    value: float
    alpha: float
    lam: float
    v_min: float
    v_max: float
    alpha_evaluations: int
    objective_evaluations: int
    converged: bool


class _TransformEvaluator:
    """Cached dot products of baseline points against payoff slopes.

    ``integral(alpha, lam)`` returns E[ ((f - alpha)^+)_lam ] and
    ``integral_plain(alpha)`` the untransformed E[ (f - alpha)^+ ].  On
    a tensor grid the dot products are built axis by axis, which avoids
    materializing the point array.
    """

    def __init__(self, f: PwlConvex, baseline):
        self.masses = np.ascontiguousarray(baseline.masses())
        n = f.npieces
        if isinstance(baseline, QuadratureGrid):
            shape = tuple(a.size for a in baseline.axes)
            P = np.empty((int(np.prod(shape)), n))
            for p in range(n):
                acc = np.zeros((1,) * len(shape))
                for k, ax in enumerate(baseline.axes):
                    form = [1] * len(shape)
                    form[k] = ax.size
                    acc = acc + f.slope_matrix[p, k] * ax.reshape(form)
                P[:, p] = acc.ravel()
        else:
            P = baseline.points() @ f.slope_matrix.T
        self.P = np.ascontiguousarray(P)
        self.intercepts = f.intercepts.copy()
        self.sq_norms = (f.slope_matrix**2).sum(axis=1)

    def integral(self, alpha: float, lam: float) -> float:
        offsets = self.intercepts + self.sq_norms / (2.0 * lam)
        return float(expected_clipped_max(self.P, self.masses, offsets, alpha))

    def integral_plain(self, alpha: float) -> float:
        return float(expected_clipped_max(self.P, self.masses, self.intercepts, alpha))

    def abs_mean(self) -> float:
        vals = (self.P + self.intercepts).max(axis=1)
        np.abs(vals, out=vals)
        return float(vals @ self.masses)


def _doubling_bound(a: float, level: float) -> float:
    """Smallest power-of-two t >= 1 with a / t <= level."""
    t = 1.0
    for _ in range(200):
        if a / t <= level:
            return t
        t *= 2.0
    raise ComputeError("tail bound search failed to terminate")


def _bounds_from_abs_mean(
    abs_mean: float, lip: float, theta: float, beta: float
) -> tuple[float, float]:
    a = abs_mean + lip * math.sqrt(theta)
    return -_doubling_bound(a, beta), _doubling_bound(a, 1.0 - beta)


def var_bounds(f: PwlConvex, baseline, theta: float, beta: float):
    """Interval containing the beta-quantile of f under every measure
    within transport distance theta of the baseline.

    Transporting within budget theta moves E|f| by at most a multiple
    of Lip(f) * sqrt(theta); with that allowance the Markov inequality
    caps the mass beyond level t at (E|f| + Lip(f) sqrt(theta)) / t.
    Doubling t until the cap falls below 1 - beta (resp. beta) gives
    the upper (resp. lower) endpoint.  The bounds are deliberately
    crude; they only fence in the outer search.
    """
    if not 0.0 < beta < 1.0:
        raise ValidationError("beta must lie strictly in (0, 1)")
    if theta < 0:
        raise ValidationError("theta must be nonnegative")
    abs_mean = integrate(lambda pts: np.abs(f(pts)), baseline)
    return _bounds_from_abs_mean(abs_mean, f.lipschitz, theta, beta)


def _minimize_alpha(objective, v_min: float, v_max: float, tol: float, max_iter: int):
    if v_max - v_min <= tol:
        mid = 0.5 * (v_min + v_max)
        return mid, objective(mid), 1, True
    res = golden_section_min(objective, v_min, v_max, tol=tol, max_iter=max_iter)
    return res.argmin, res.minimum, res.evaluations, res.converged


def es_nonrobust(
    f: PwlConvex,
    baseline,
    beta: float,
    alpha_tol: float = 1e-6,
) -> float:
    """Expected Shortfall at level beta under the baseline itself."""
    report = robust_es(
        RobustEsProblem(payoff=f, baseline=baseline, theta=0.0, beta=beta,
                        alpha_tol=alpha_tol)
    )
    return report.value


def robust_es(p: RobustEsProblem) -> EsSolveReport:
    """Worst-case Expected Shortfall over the transport ball.

    theta = 0 skips the inner search (plain Expected Shortfall); a
    constant payoff is its own Expected Shortfall at every radius.
    Inner brackets that keep their minimum on an endpoint after
    expansion mark the report as not converged.
    """
    f = p.payoff
    spread = 1.0 / (1.0 - p.beta)
    ev = _TransformEvaluator(f, p.baseline)

    if f.lipschitz == 0.0:
        const = float(f.intercepts.max())
        v_min, v_max = _bounds_from_abs_mean(abs(const), 0.0, p.theta, p.beta)
        return EsSolveReport(
            value=const, alpha=const, lam=0.0 if p.theta > 0 else math.inf,
            v_min=v_min, v_max=v_max, alpha_evaluations=0,
            objective_evaluations=0, converged=True,
        )

    v_min, v_max = _bounds_from_abs_mean(ev.abs_mean(), f.lipschitz, p.theta, p.beta)
    kernel_calls = 0

    if p.theta == 0.0:
        def objective(alpha: float) -> float:
            nonlocal kernel_calls
            kernel_calls += 1
            return alpha + spread * ev.integral_plain(alpha)

        alpha, value, outer_evals, ok = _minimize_alpha(
            objective, v_min, v_max, p.alpha_tol, p.max_iter
        )
        return EsSolveReport(
            value=value, alpha=alpha, lam=math.inf, v_min=v_min, v_max=v_max,
            alpha_evaluations=outer_evals, objective_evaluations=kernel_calls,
            converged=ok,
        )

    inner_ok = True

    def inner(alpha: float):
        nonlocal kernel_calls, inner_ok

        def h(lam: float) -> float:
            nonlocal kernel_calls
            kernel_calls += 1
            return spread * (lam * p.theta + ev.integral(alpha, lam))

        res, _, interior = minimize_log_expanding(
            h, p.lambda_bracket[0], p.lambda_bracket[1],
            rel_tol=p.lambda_rel_tol, max_iter=p.max_iter,
        )
        inner_ok = inner_ok and interior
        return alpha + res.minimum, res.argmin

    outer_evals = 0

    def outer(alpha: float) -> float:
        nonlocal outer_evals
        outer_evals += 1
        return inner(alpha)[0]

    alpha, _, _, outer_conv = _minimize_alpha(
        outer, v_min, v_max, p.alpha_tol, p.max_iter
    )
    value, lam = inner(alpha)
    return EsSolveReport(
        value=value, alpha=alpha, lam=lam, v_min=v_min, v_max=v_max,
        alpha_evaluations=outer_evals, objective_evaluations=kernel_calls,
        converged=outer_conv and inner_ok,
    )


def robust_es_call_closed_form(
    strike: float,
    m: ProductLognormal,
    theta: float,
    beta: float,
    grid: QuadratureGrid | None = None,
) -> float:
    """Analytic worst-case Expected Shortfall of a call liability.

    (q - k) + call(q) / (1 - beta) + sqrt(2 theta / (1 - beta)) with q
    the beta-quantile of the baseline; the strike-independent square
    root is the whole robustification correction while the strike stays
    below q.
    """
    if not 0.0 < beta < 1.0:
        raise ValidationError("beta must lie strictly in (0, 1)")
    if theta < 0:
        raise ValidationError("theta must be nonnegative")
    q = lognormal_quantile(m, 0, beta)
    call_q = price_call(m, q, grid)
    return (q - float(strike)) + call_q / (1.0 - beta) + math.sqrt(
        2.0 * theta / (1.0 - beta)
    )


def first_order_check(
    strike: float,
    m: ProductLognormal,
    theta: float,
    beta: float,
    report: EsSolveReport,
) -> dict:
    """Stationarity diagnostics for a solved call problem.

    The analytic optimum has lam = sqrt((1 - beta) / (2 theta)) and
    shifts the effective strike k + alpha - 1/(2 lam) onto the baseline
    beta-quantile; both gaps should sit at solver-tolerance level.
    """
    if theta <= 0:
        raise ValidationError("the diagnostics need theta > 0")
    lam_formula = math.sqrt((1.0 - beta) / (2.0 * theta))
    q = lognormal_quantile(m, 0, beta)
    return {
        "lambda_star": report.lam,
        "lambda_formula": lam_formula,
        "lambda_gap": abs(report.lam - lam_formula),
        "quantile_gap": abs(
            float(strike) + report.alpha - 1.0 / (2.0 * report.lam) - q
        ),
    }


def coherence_suite(
    f: PwlConvex,
    g: PwlConvex,
    baseline,
    theta: float,
    beta: float,
    shift: float = 3.0,
    **solver_kwargs,
) -> dict:
    """Numeric coherence diagnostics for the worst-case Expected Shortfall.

    Checks cash additivity (adding a constant moves the value by that
    constant), positive homogeneity at factors 1/2 and 2, and
    subadditivity of f and g; all gaps should be at solver-noise level.
    """

    def solve(payoff: PwlConvex) -> float:
        return robust_es(
            RobustEsProblem(
                payoff=payoff, baseline=baseline, theta=theta, beta=beta,
                **solver_kwargs,
            )
        ).value

    rho_f = solve(f)
    rho_g = solve(g)
    rho_shift = solve(f + shift)
    rho_half = solve(scale(f, 0.5))
    rho_two = solve(scale(f, 2.0))
    rho_sum = solve(f + g)
    return {
        "rho_f": rho_f,
        "rho_g": rho_g,
        "translation_gap": abs(rho_shift - rho_f - shift),
        "homogeneity_gap_half": abs(rho_half - 0.5 * rho_f)
        / max(abs(0.5 * rho_f), 1e-12),
        "homogeneity_gap_two": abs(rho_two - 2.0 * rho_f)
        / max(abs(2.0 * rho_f), 1e-12),
        "subadditivity_violation": max(rho_sum - rho_f - rho_g, 0.0),
    }
