"""Three-asset portfolio evaluation.

The portfolio mixes a plain share, a share plus 0.75 at-the-money calls
on it, and a share plus 0.75 at-the-money puts on it, with independent
lognormal underlyings.  Its payoff is convex piecewise-linear in the
three terminal prices with exactly four pieces (call/put each in or out
of the money), so the worst-case Expected Shortfall machinery applies
directly.  One monetary unit is received up front; risk is reported on
the payoff less that unit, as a percentage.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import ValidationError
from .measures import ProductLognormal, QuadratureGrid, build_grid, price_call, price_put
from .pwl import AffinePiece, PwlConvex
from .risk import RobustEsProblem, robust_es

__all__ = [
    "ThreeAssetSpec",
    "DEFAULT_WEIGHT_ROWS",
    "asset_measure",
    "price_premiums",
    "build_three_asset_payoff",
    "net_liability",
    "run_table1",
    "table_to_csv",
]

DEFAULT_WEIGHT_ROWS = (
    (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0),
    (0.1, 0.8, 0.1),
    (0.1, 0.1, 0.8),
)


@dataclass(frozen=True)
class ThreeAssetSpec:
    """Portfolio weights, option terms, and lognormal parameters.

    ``call_premium`` / ``put_premium`` of None mean "price them from the
    premium measure"; explicit values override pricing.
    """

    weights: NDArray[np.float64]
    strike_call: float = 1.0
    strike_put: float = 1.0
    option_multiplier: float = 0.75
    rate: float = 0.025
    call_premium: float | None = None
    put_premium: float | None = None
    mu: NDArray[np.float64] = (0.0601, 0.0529, 0.0713)
    sigma: NDArray[np.float64] = (0.1836, 0.1198, 0.2167)

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float).copy()
        mu = np.asarray(self.mu, dtype=float).copy()
        sigma = np.asarray(self.sigma, dtype=float).copy()
        if w.shape != (3,) or mu.shape != (3,) or sigma.shape != (3,):
            raise ValidationError("weights, mu, sigma must each have three entries")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValidationError("weights must be nonnegative and sum to one")
        if self.strike_call <= 0 or self.strike_put <= 0:
            raise ValidationError("strikes must be positive")
        if np.any(sigma <= 0):
            raise ValidationError("sigma entries must be positive")
        for name, arr in (("weights", w), ("mu", mu), ("sigma", sigma)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def asset_measure(s: ThreeAssetSpec) -> ProductLognormal:
    """The physical three-dimensional baseline distribution."""
    return ProductLognormal(s.mu, s.sigma)


def _pricing_measure(s: ThreeAssetSpec, asset_index: int, premium_measure: str):
    sigma = s.sigma[asset_index]
    if premium_measure == "risk_neutral":
        # forward equals 1 + r: mean-matched lognormal with the asset's sigma
        mu = math.log(1.0 + s.rate) - 0.5 * sigma * sigma
    elif premium_measure == "physical":
        mu = s.mu[asset_index]
    else:
        raise ValidationError(
            f"premium_measure must be 'risk_neutral' or 'physical', got {premium_measure!r}"
        )
    return ProductLognormal([mu], [sigma])


def price_premiums(
    s: ThreeAssetSpec,
    premium_measure: str = "risk_neutral",
    nodes: int = 2001,
    tail_mass: float = 1e-7,
) -> tuple[float, float]:
    """Discounted call and put premiums for the two option legs."""
    m_call = _pricing_measure(s, 1, premium_measure)
    m_put = _pricing_measure(s, 2, premium_measure)
    disc = 1.0 / (1.0 + s.rate)
    c0 = disc * price_call(m_call, s.strike_call, build_grid(m_call, nodes, tail_mass))
    p0 = disc * price_put(m_put, s.strike_put, build_grid(m_put, nodes, tail_mass))
    return c0, p0


def _resolved_premiums(s: ThreeAssetSpec, premium_measure: str) -> tuple[float, float]:
    if s.call_premium is not None and s.put_premium is not None:
        return float(s.call_premium), float(s.put_premium)
    c0, p0 = price_premiums(s, premium_measure)
    if s.call_premium is not None:
        c0 = float(s.call_premium)
    if s.put_premium is not None:
        p0 = float(s.put_premium)
    return c0, p0


def build_three_asset_payoff(
    s: ThreeAssetSpec, premium_measure: str = "risk_neutral"
) -> PwlConvex:
    """Four-piece max-of-affine form of the weighted portfolio payoff.

    The pieces enumerate call in/out of the money crossed with put
    in/out: slopes pick up the option multiplier on the leg that is in
    the money, intercepts collect strikes and financed premiums.
    """
    w1, w2, w3 = s.weights
    q = s.option_multiplier
    grow = 1.0 + s.rate
    c0, p0 = _resolved_premiums(s, premium_measure)
    prem = q * w2 * (-c0 * grow) + q * w3 * (-p0 * grow)
    call_itm = -q * w2 * s.strike_call
    put_itm = q * w3 * s.strike_put
    return PwlConvex(
        [
            AffinePiece([w1, (1 + q) * w2, (1 - q) * w3], prem + call_itm + put_itm),
            AffinePiece([w1, (1 + q) * w2, w3], prem + call_itm),
            AffinePiece([w1, w2, (1 - q) * w3], prem + put_itm),
            AffinePiece([w1, w2, w3], prem),
        ]
    )


def net_liability(payoff: PwlConvex) -> PwlConvex:
    """Payoff less the one unit received up front."""
    return payoff + (-1.0)


def _solve_rows_for_weights(
    weights,
    thetas,
    beta: float,
    grid: QuadratureGrid,
    premium_measure: str,
    alpha_tol: float,
    lambda_rel_tol: float,
) -> list[dict]:
    spec = ThreeAssetSpec(weights=np.asarray(weights, dtype=float))
    liability = net_liability(build_three_asset_payoff(spec, premium_measure))
    rows = []
    for theta in thetas:
        report = robust_es(
            RobustEsProblem(
                payoff=liability,
                baseline=grid,
                theta=float(theta),
                beta=beta,
                alpha_tol=alpha_tol,
                lambda_rel_tol=lambda_rel_tol,
            )
        )
        w = spec.weights
        rows.append(
            {
                "w1": float(w[0]),
                "w2": float(w[1]),
                "w3": float(w[2]),
                "theta": float(theta),
                "robust_es": report.value,
                "robust_es_pct": 100.0 * report.value,
                "converged": report.converged,
            }
        )
    return rows


def run_table1(
    weight_rows=DEFAULT_WEIGHT_ROWS,
    thetas=(0.0, 1.0),
    beta: float = 0.95,
    nodes: int = 201,
    tail_mass: float = 1e-7,
    premium_measure: str = "risk_neutral",
    alpha_tol: float = 1e-5,
    lambda_rel_tol: float = 1e-6,
    threads: int = 1,
) -> list[dict]:
    """Worst-case Expected Shortfall of the net liability, row by row.

    Rows iterate weight vectors in the given order with each ambiguity
    radius nested inside, values as percentages of the initial unit.
    ``threads`` fans weight vectors out across a thread pool; the output
    order is independent of it.
    """
    weight_rows = [tuple(float(x) for x in w) for w in weight_rows]
    if not weight_rows:
        raise ValidationError("need at least one weight vector")
    thetas = [float(t) for t in thetas]
    if not thetas:
        raise ValidationError("need at least one theta")
    ref = ThreeAssetSpec(weights=np.asarray(weight_rows[0], dtype=float))
    grid = build_grid(asset_measure(ref), nodes, tail_mass)

    def job(w):
        return _solve_rows_for_weights(
            w, thetas, beta, grid, premium_measure, alpha_tol, lambda_rel_tol
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(job, weight_rows))
    else:
        blocks = [job(w) for w in weight_rows]
    return [row for block in blocks for row in block]


def table_to_csv(rows: list[dict]) -> str:
    """CSV with header w1,w2,w3,theta,robust_es_pct."""
    out = io.StringIO()
    out.write("w1,w2,w3,theta,robust_es_pct\n")
    for r in rows:
        out.write(
            f"{r['w1']:.10g},{r['w2']:.10g},{r['w3']:.10g},"
            f"{r['theta']:.10g},{r['robust_es_pct']:.10g}\n"
        )
    return out.getvalue()
