"""knobtune: sample-efficient black-box configuration tuning.

Wraps any suggest/observe optimizer with three search-space
transformations: a randomized low-dimensional projection (sparse sign-hash
or dense Gaussian), probability-biased sampling of hybrid knobs' special
values, and bucketization of the optimizer-facing coordinates.
"""

from .evaluators import EvalOutcome, EvaluatorSpawnError, make_evaluator
from .history import History, Observation, read_history
from .metrics import compare_groups, final_improvement, time_to_optimal
from .optimizers import GPOptimizer, RandomOptimizer, lhs_sample, make_optimizer
from .pipeline import (
    Grid,
    KnobAssignment,
    PipelineConfig,
    apply_bias,
    assemble_config,
    bucketize_grid,
    normalize_unit,
    unit_to_value,
)
from .projection import (
    ProjectionMatrix,
    clip_to_unit,
    make_hesbo,
    make_identity,
    make_rembo,
    project,
)
from .session import SessionConfig, SessionError, crash_penalty, run_session, should_stop
from .space import (
    ConfigSpace,
    KnobSpec,
    SpaceError,
    builtin_space_path,
    effective_numeric_range,
    is_hybrid,
    parse_space,
)

__version__ = "0.1.0"
