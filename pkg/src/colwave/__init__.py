"""colwave: nets of smooth solutions to small-nonlinearity wave equations.

Builds per-epsilon solutions of u_tt - Lap(u) = eps**b f(u) in space
dimensions 1-3 by Picard iteration on the classical solution operator,
and measures convergence in the ultra-metric calculus of seminorm decay
exponents along a geometric epsilon ladder.
"""

from .errors import (
    ColwaveError,
    DivergenceError,
    InsufficientDataError,
    LifespanExceededError,
    UnsupportedOrderError,
    ValidationError,
)
from .nets import (
    EpsilonLadder,
    GeneralizedNumber,
    InitialDatum,
    NonlinearitySpec,
    Problem,
    eval_datum,
    datum_derivative,
    eval_nonlinearity,
    make_ladder,
    power_number,
)
from .seminorms import (
    Field,
    Net,
    NetClass,
    SpaceTimeGrid,
    ValuationEstimate,
    classify,
    seminorm,
    ultra_metric,
    ultra_pseudo_seminorm,
    valuation,
)
from .linwave import (
    QuadratureSpec,
    check_support,
    duhamel,
    linear_value,
    operator_norm_probe,
    solve_linear,
)
from .semilinear import SolveReport, picard_solve, residual, residual_sup, solve_net
from .verify import (
    check_association,
    check_contraction,
    check_uniqueness_surrogate,
    check_wave_oracle,
    ode_check,
    oracle_lifespan,
)

__version__ = "0.1.0"

__all__ = [
    "ColwaveError",
    "DivergenceError",
    "InsufficientDataError",
    "LifespanExceededError",
    "UnsupportedOrderError",
    "ValidationError",
    "EpsilonLadder",
    "GeneralizedNumber",
    "InitialDatum",
    "NonlinearitySpec",
    "Problem",
    "eval_datum",
    "datum_derivative",
    "eval_nonlinearity",
    "make_ladder",
    "power_number",
    "Field",
    "Net",
    "NetClass",
    "SpaceTimeGrid",
    "ValuationEstimate",
    "classify",
    "seminorm",
    "ultra_metric",
    "ultra_pseudo_seminorm",
    "valuation",
    "QuadratureSpec",
    "check_support",
    "duhamel",
    "linear_value",
    "operator_norm_probe",
    "solve_linear",
    "SolveReport",
    "picard_solve",
    "residual",
    "residual_sup",
    "solve_net",
    "check_association",
    "check_contraction",
    "check_uniqueness_surrogate",
    "check_wave_oracle",
    "ode_check",
    "oracle_lifespan",
    "__version__",
]
