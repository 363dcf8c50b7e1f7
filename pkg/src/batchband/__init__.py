"""batchband: batched-feedback bandit simulation, certification, and replay."""

from .core import (
    BatchGrid,
    DecisionRule,
    GridError,
    History,
    HistoryEntry,
    Instance,
    PROB_TOL,
    average_rule,
    batch_index,
    compare_rules,
    derive_seed,
    make_grid,
    rule_value,
)
from .environments import (
    BernoulliEnv,
    LinearContextualEnv,
    LoggedRecord,
    make_linear_env,
    parse_env,
    preset,
    read_logged_csv,
    synth_logged_dataset,
    write_logged_csv,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    RegretTable,
    check_theorem_bounds,
    regret_curve,
    run_experiment,
)
from .meta import (
    MonotoneBound,
    approx_delayed_start_run,
    check_phase,
    delayed_start_run,
    tau_instance,
)
from .policies import (
    FixedArmPolicy,
    LinTsPolicy,
    LinUcbPolicy,
    ThompsonBetaPolicy,
    TwoPhaseSwitchPolicy,
    UcbPolicy,
    UniformPolicy,
    make_policy,
)
from .replay import ReplayResult, relative_cr, replay_evaluate
from .specifications import RunRecord, run_batch, run_online, run_short

__version__ = "0.1.0"

__all__ = [
    "BatchGrid",
    "BernoulliEnv",
    "ConfigError",
    "DecisionRule",
    "ExperimentConfig",
    "FixedArmPolicy",
    "GridError",
    "History",
    "HistoryEntry",
    "Instance",
    "LinTsPolicy",
    "LinUcbPolicy",
    "LinearContextualEnv",
    "LoggedRecord",
    "MonotoneBound",
    "PROB_TOL",
    "RegretTable",
    "ReplayResult",
    "RunRecord",
    "ThompsonBetaPolicy",
    "TwoPhaseSwitchPolicy",
    "UcbPolicy",
    "UniformPolicy",
    "approx_delayed_start_run",
    "average_rule",
    "batch_index",
    "check_phase",
    "check_theorem_bounds",
    "compare_rules",
    "delayed_start_run",
    "derive_seed",
    "make_grid",
    "make_linear_env",
    "make_policy",
    "parse_env",
    "preset",
    "read_logged_csv",
    "regret_curve",
    "relative_cr",
    "replay_evaluate",
    "rule_value",
    "run_batch",
    "run_experiment",
    "run_online",
    "run_short",
    "synth_logged_dataset",
    "tau_instance",
    "write_logged_csv",
    "__version__",
]
