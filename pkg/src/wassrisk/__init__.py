"""Distributionally robust expectations and Expected Shortfall.

Ambiguity is an optimal-transport ball with quadratic cost around a
baseline measure; payoffs are convex piecewise-linear.  The package
computes worst-case expected values via a scalar dual problem,
worst-case Expected Shortfall via a nested scalar minimization, exact
discrete transport distances, and a three-asset portfolio study, with
brute-force oracles for validation.
"""

from .duality import DualSolveReport, dual_objective, robust_expected_value
from .errors import ComputeError, DimensionMismatch, ValidationError, WassriskError
from .measures import (
    DiscreteMeasure,
    ProductLognormal,
    QuadratureGrid,
    build_grid,
    discrete_from_grid,
    integrate,
    lognormal_quantile,
    measure_from_dict,
    measure_to_dict,
    normal_cdf,
    price_call,
    price_put,
    standard_normal_quantile,
)
from .portfolio import (
    DEFAULT_WEIGHT_ROWS,
    ThreeAssetSpec,
    asset_measure,
    build_three_asset_payoff,
    net_liability,
    price_premiums,
    run_table1,
    table_to_csv,
)
from .pwl import (
    AffinePiece,
    PwlConvex,
    QuadraticAffine,
    brute_force_lc,
    lambda_c_transform,
    lc_via_legendre,
    legendre_quadratic_affine,
    make_call,
    make_put,
    make_straddle,
    prune,
    scale,
)
from .risk import (
    EsSolveReport,
    RobustEsProblem,
    coherence_suite,
    es_nonrobust,
    first_order_check,
    robust_es,
    robust_es_call_closed_form,
    var_bounds,
)
from .transport import Coupling, dc_discrete, primal_robust_ev_oracle, quadratic_cost

__version__ = "0.1.0"
