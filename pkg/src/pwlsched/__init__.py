"""Exact piecewise-linear calculus and dynamic programming for single-machine
family scheduling with controllable processing times."""

from .argmin import (
    ArgminPolicy,
    CrossingSets,
    JumpTimes,
    PolicySegment,
    argmin_policy,
    crossing_sets,
    jump_times,
    omega,
    solve_window,
    value_function,
)
from .pwl import (
    INF,
    DeviationCost,
    PwlFunction,
    Rational,
    WinnerInterval,
    add_constant,
    as_rational,
    lower_envelope,
    min_of,
    pwl_sum,
    ramp,
    shift,
)
from .scheduler import (
    ClassData,
    InstanceError,
    Job,
    ProblemInstance,
    SchedState,
    Solution,
    eval_strategy,
    load_instance,
    replay,
    solve,
    stage_cost,
    state_graph,
)

__version__ = "0.1.0"
