"""Economic primitives: parameters, CRRA utility, and the analytic value bound.

Single, consistent time unit throughout: rho and r are per-unit-time rates,
y is a flow of consumption units per unit time.  rho is treated as a rate
(no rho < 1 requirement is imposed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "DerivedConstants",
    "ModelParams",
    "crra_utility",
    "derived_constants",
    "validate",
    "value_upper_bound",
]


@dataclass(frozen=True)
class ModelParams:
    """Primitives of the consumption-savings problem.

    rho:   subjective discount rate (> r)
    r:     net interest rate (>= 0)
    gamma: relative risk aversion (> 0); gamma = 1 means log utility
    y:     permanent income flow (> 0)

    Construction does not validate; call :func:`validate` at API boundaries.
    """

    rho: float
    r: float
    gamma: float
    y: float


@dataclass(frozen=True)
class DerivedConstants:
    """Coefficient bundle appearing in the closed forms.

    b   = rho/gamma
    b_r = (r*(gamma-1) + rho)/gamma   (-> b as r -> 0)
    c_r = a + y/b_r, at the evaluation point a handed to the factory
    d_r = (rho - r)/(r*(gamma-1) + rho)   (-> 1 as r -> 0)

    The impatience condition makes r*(gamma-1) + rho > rho - r > 0, so
    b_r > 0 and d_r in (0, 1].
    """

    b: float
    b_r: float
    c_r: float
    d_r: float


def validate(params: ModelParams) -> ModelParams:
    """Return ``params`` unchanged if all invariants hold, else raise.

    Raises ValueError naming the violated invariant: impatience (rho > r),
    r >= 0, gamma > 0, or y > 0.
    """
    if not params.r >= 0.0:
        raise ValueError(f"interest rate must be nonnegative: r={params.r}")
    if not params.rho > params.r:
        raise ValueError(
            f"impatience condition violated: need rho > r, got rho={params.rho}, r={params.r}"
        )
    if not params.gamma > 0.0:
        raise ValueError(f"risk aversion must be positive: gamma={params.gamma}")
    if not params.y > 0.0:
        raise ValueError(f"permanent income must be positive: y={params.y}")
    return params


def derived_constants(params: ModelParams, a: float = 0.0) -> DerivedConstants:
    """Coefficients b, b_r, c_r, d_r for ``params``, with c_r evaluated at ``a``."""
    b = params.rho / params.gamma
    big_b = params.r * (params.gamma - 1.0) + params.rho
    b_r = big_b / params.gamma
    d_r = (params.rho - params.r) / big_b
    return DerivedConstants(b=b, b_r=b_r, c_r=a + params.y / b_r, d_r=d_r)


def crra_utility(c: float, gamma: float) -> float:
    """CRRA utility c^(1-gamma)/(1-gamma); log(c) at gamma = 1 (continuous limit)."""
    if not c > 0.0:
        raise ValueError(f"crra_utility: consumption must be positive, got c={c}")
    if gamma == 1.0:
        return math.log(c)
    return c ** (1.0 - gamma) / (1.0 - gamma)


def value_upper_bound(params: ModelParams, a: float) -> float:
    """Upper bound u(rho*a + y)/rho on lifetime utility from initial assets a >= 0.

    Any feasible plan's discounted utility lies strictly below this unless
    consumption is constant at rho*a + y forever.
    """
    if a < 0.0:
        raise ValueError(f"value_upper_bound: need a >= 0, got a={a}")
    return crra_utility(params.rho * a + params.y, params.gamma) / params.rho
