"""cageflow: synthetic crowd scenarios, lossless capacity-grid encoding, and
long-term crowd-flow ground truth with evaluation tooling."""

__version__ = "0.1.0"

from .codec import (
    DEFAULT_N,
    CageTensor,
    CompressionPlan,
    FlowMap,
    Placement,
    Region,
    VisibilityGrid,
    check_consistency,
    compress,
    decompress,
    encode_scenario,
    plan_compression,
    pool_flow,
    segment_regions,
    visibility,
)
from .errors import (
    AllZeroMapError,
    CageflowError,
    DimensionMismatchError,
    DimsTooSmallError,
    DoesNotFitError,
    GoalOnObstacleError,
    InconsistentPlanError,
    InfeasibleError,
    NoGoalError,
    ParamOutOfRangeError,
    UnreachableError,
)
from .grid import (
    UNREACHABLE,
    AgentField,
    Environment,
    GoalField,
    Scenario,
    Violation,
    distance_field,
    goal_field,
    greedy_descends_to_zero,
    greedy_path,
    validate_scenario,
)
