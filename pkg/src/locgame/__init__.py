"""Location games with reference points on the unit interval."""

from .core import (
    ArityError,
    CostModel,
    DeviationWitness,
    InvalidCostError,
    LocgameError,
    MarketPartition,
    Profile,
    UnsupportedConfigurationError,
    compute_delta,
    neighborhood,
    partition,
    payoff,
)
from .solver import (
    ConditionReport,
    EquilibriumOutcome,
    FarFlags,
    check_conditions,
    delta_loss,
    far_flags,
    solve,
    solve_duopoly,
    solve_n,
    solve_triopoly,
)

from .oracle import BestResponseResult, best_response_exact, falsify_on_grid, is_equilibrium_exact
from .analysis import (
    PhaseGrid,
    ProbabilityEstimate,
    cost_thresholds_duopoly,
    eta_constant,
    existence_probability_duopoly,
    monte_carlo_existence,
    phase_grid,
    regular_threshold,
    symmetric_triopoly_phi,
    theta_constant,
    undifferentiated_probability_duopoly,
)

__version__ = "0.1.0"
