"""Online convex optimization with long-term constraints via virtual queues."""

from .algorithm import (
    AlgorithmParams,
    FunctionLosses,
    LinearLosses,
    RoundTrace,
    RunResult,
    certified_bounds,
    default_schedule,
    run,
    run_doubling,
    step_fast_linear,
    step_inner_solver,
)
from .baselines import DualState, ogd_step, primal_dual_step, project_polyhedron
from .harness import CostGenerator, compare, compute_metrics, cost_at, generate_instance, hindsight_optimum
from .problem import (
    GenericConstraints,
    LinearConstraints,
    ProblemInstance,
    SimpleSet,
    derive_constants,
    estimate_slater,
    project_simple,
    scaled_constraints,
)
from .tuner import TunerProblem, evaluate_bounds, tune
from .vqueue import QueueState, drift, queue_update, violation_from_queue

__version__ = "0.1.0"
