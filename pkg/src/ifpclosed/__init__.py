"""Closed-form consumption functions for the deterministic income-fluctuation
problem with a borrowing constraint, and the numerical oracles that verify them.

The depletion map mu(T) (assets exhausted in exactly T) has an exact
Lambert-W inverse at r = 0 and a closed-form small-r approximation; the
time-0 consumption function, its Jacobian and Hessian follow in closed form.
Everything is cross-checked against solver-grade oracles: safeguarded Newton
inversion, RK4 budget integration, quadrature, finite differences, and a
grid value-iteration solve of the discrete-time model.
"""

from .consumption import (
    ConsumptionDerivatives,
    PiecewiseLinearPolicy,
    consumption_approx_small_r,
    consumption_derivatives,
    consumption_from_depletion_time,
    consumption_now_r0,
    consumption_path,
    consumption_unconstrained,
    discrete_policy,
    hessian_closed,
    jacobian_closed,
)
from .depletion_map import (
    DepletionTime,
    KnotSequence,
    best_depletion_time,
    h_approx_small_r,
    h_closed_r0,
    h_numeric,
    mu,
    mu_discrete,
    mu_prime,
)
from .model_core import (
    DerivedConstants,
    ModelParams,
    crra_utility,
    derived_constants,
    validate,
    value_upper_bound,
)
from .special_functions import (
    BRANCH_POINT,
    BranchPoint,
    lambert_w0,
    lambert_wm1,
    lambert_wm1_neg_exp,
    wm1_initial_guess,
)
from .validation import (
    AssetPath,
    DpSolution,
    approximation_error_report,
    fd_gradient,
    fd_hessian,
    grid_dp,
    make_asset_grid,
    pdv_utility,
    simulate_assets,
)

__version__ = "0.1.0"
