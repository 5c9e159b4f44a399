"""Training and prioritized composition of concurrently executable robot tasks."""

from .controller import (
    PriorityStack,
    QPData,
    QPSolution,
    build_qp,
    chain_priority_matrix,
    control_step,
    sigma,
    solve,
)
from .dynamics import (
    ControlAffineSystem,
    euler_step,
    lie_derivatives,
    single_integrator_team,
)
from .errors import (
    ConfigurationError,
    IndistackError,
    NumericalError,
    ShapeError,
    TrainingError,
)
from .estimator import FittedValueIteration
from .independence import (
    IndependenceReport,
    is_independent,
    orthogonality_residual,
    prop3_policy_gap,
    report,
)
from .scenarios import (
    ScenarioConfig,
    builtin,
    build_stack,
    evaluate,
    sample_initial_states,
    simulate_stack,
    train_task,
)
from .tasks import (
    AvoidRegions,
    Formation,
    GoToPoint,
    InputMetric,
    LiftedValueFunction,
    Penalty,
    Region,
    TaskSpec,
    eval_state_cost,
    input_metric_at,
    lift_task,
)
from .training import (
    TrainConfig,
    forward_view_weights,
    optimal_input,
    rollout_target,
    rollout_targets,
    train_independent,
    value_iteration,
)
from .value_net import AdamState, ValueNet, fit_batch

__version__ = "0.1.0"
