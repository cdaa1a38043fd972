"""Best-arm identification for unit-variance Gaussian bandits."""

from .complexity import (
    BanditInstance,
    CharacteristicBounds,
    DomainError,
    GapVector,
    OptimalAllocation,
    SolverError,
    brute_force_weights,
    characteristic_bounds,
    compute_gaps,
    g_value,
    kl_bernoulli,
    lower_bound,
    phi,
    solve_allocation,
)
from .confidence import (
    BiasedAllocation,
    ConfidenceRegion,
    RadiusKind,
    RadiusScheme,
    brute_force_eb_bandit,
    build_region,
    exploration_biased_weights,
    radius,
)
from .simulator import (
    AggregateStats,
    RunResult,
    SimulationConfig,
    TrajectorySpec,
    monte_carlo,
    run_once,
)
from .strategies import (
    Strategy,
    StrategySpec,
    StrategyState,
    ThresholdKind,
    ThresholdSpec,
    TrackingMode,
)

__version__ = "0.1.0"
