"""Monte-Carlo experiment runner and theorem-bound checker.

``run_experiment`` sweeps (environment x policy x batch size) cells, runs
``reps`` independent trajectories per cell with seeds derived from
``(master_seed, cell key, rep index)``, and aggregates into a
``RegretTable``.  Work is split per cell; any thread count produces
byte-identical output because seeds never depend on scheduling and the
reduction walks cells in configured order.

``check_theorem_bounds`` estimates the three quantities of the regret
sandwich for a batch specification: the online regret R_n, the batch
regret R_n(b), and b times the regret of an online run over the number of
batches M (the short-specification identity).  Each inequality gets a
2-standard-error verdict; the gate passes on the upper bound and the
non-strict lower bound.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .assumptions import RegretCurve
from .core import derive_seed, make_grid
from .environments import parse_env
from .meta import MonotoneBound, approx_delayed_start_run, delayed_start_run
from .policies import POLICY_NAMES, UniformPolicy, make_policy
from .specifications import run_batch, run_online, run_short

MODES = ("plain", "delayed_start", "approx_delayed_start")


class ConfigError(ValueError):
    """Raised for invalid experiment configuration, before any run starts."""


def resolve_threads(requested: int | None = None) -> int:
    """Thread count: explicit value, else BATCHBAND_THREADS, else cpu count."""
    if requested is not None:
        if requested < 1:
            raise ConfigError("threads must be >= 1")
        return requested
    env_val = os.environ.get("BATCHBAND_THREADS")
    if env_val:
        try:
            n = int(env_val)
        except ValueError:
            raise ConfigError(f"BATCHBAND_THREADS={env_val!r} is not an integer")
        if n < 1:
            raise ConfigError("BATCHBAND_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative sweep description.

    ``envs`` entries are preset names or inline comma-separated means;
    ``policies`` are registry names.  ``mode`` selects plain runs or one of
    the delayed-start wrappers (``delta`` and ``bound_from`` apply to the
    approximate one).
    """

    envs: tuple
    policies: tuple
    n: int
    batch_sizes: tuple
    reps: int
    master_seed: int
    mode: str = "plain"
    delta: float = 0.01
    bound_from: str = "instance"
    policy_params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "envs", tuple(self.envs))
        object.__setattr__(self, "policies", tuple(self.policies))
        object.__setattr__(self, "batch_sizes", tuple(int(b) for b in self.batch_sizes))
        object.__setattr__(self, "policy_params", dict(self.policy_params))

    def validate(self) -> None:
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if not self.envs or not self.policies or not self.batch_sizes:
            raise ConfigError("envs, policies, and batch_sizes must be non-empty")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError("delta must lie in (0, 1)")
        if self.bound_from not in ("instance", "oracle"):
            raise ConfigError("bound_from must be 'instance' or 'oracle'")
        for e in self.envs:
            try:
                parse_env(e)
            except (ValueError, KeyError) as exc:
                raise ConfigError(f"bad env {e!r}: {exc}") from exc
        for p in self.policies:
            if p not in POLICY_NAMES:
                raise ConfigError(f"unknown policy {p!r}; choose from {POLICY_NAMES}")
            if p in ("linucb", "lints"):
                raise ConfigError(
                    f"policy {p!r} needs contextual environments; the sweep "
                    "harness runs finite-armed presets (see replay for contextual use)"
                )
        for b in self.batch_sizes:
            if b < 1:
                raise ConfigError(f"batch size {b} must be >= 1")
            if self.n < b:
                raise ConfigError(f"horizon {self.n} shorter than batch {b}")

    def cells(self):
        """Cell tuples in deterministic configured order."""
        return [
            (e, p, b)
            for e in self.envs
            for p in self.policies
            for b in self.batch_sizes
        ]


@dataclass(eq=False)
class CellResult:
    env: str
    policy: str
    spec: str
    b: int
    n: int
    reps: int
    mean_final: float
    stderr_final: float
    opt_frac: float
    mean_pull_counts: np.ndarray
    tau_mean: float | None
    tau_none: int | None
    curve_mean: np.ndarray
    curve_stderr: np.ndarray


@dataclass(eq=False)
class RegretTable:
    rows: list
    config: ExperimentConfig

    def row(self, env: str, policy_label: str, b: int) -> CellResult:
        for r in self.rows:
            if r.env == env and r.policy == policy_label and r.b == b:
                return r
        raise KeyError(f"no cell ({env}, {policy_label}, b={b})")

    def to_results_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(
                [
                    "env", "policy", "spec", "b", "n", "reps",
                    "mean_final_regret", "stderr_final_regret",
                    "mean_optimal_fraction", "tau_hat_mean", "tau_hat_none",
                ]
            )
            for r in self.rows:
                w.writerow(
                    [
                        r.env, r.policy, r.spec, str(r.b), str(r.n), str(r.reps),
                        repr(r.mean_final), repr(r.stderr_final), repr(r.opt_frac),
                        "" if r.tau_mean is None else repr(r.tau_mean),
                        "" if r.tau_none is None else str(r.tau_none),
                    ]
                )

    def to_curves_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["cell", "t", "mean", "stderr"])
            for r in self.rows:
                cell = f"{r.env}|{r.policy}|{r.spec}|{r.b}"
                for t in range(r.n):
                    w.writerow(
                        [cell, str(t + 1), repr(float(r.curve_mean[t])),
                         repr(float(r.curve_stderr[t]))]
                    )


def _cell_key(env: str, policy: str, mode: str, n: int, b: int, delta, bound_from) -> str:
    if mode == "plain":
        return f"{env}|{policy}|{mode}|{n}|{b}"
    return f"{env}|{policy}|{mode}|{n}|{b}|{delta!r}|{bound_from}"


def _run_cell(payload):
    """One cell's repetitions; module-level so process pools can pickle it."""
    (env_spec, policy_name, params, n, b, reps, master_seed, mode, delta, bound_from) = payload
    env = parse_env(env_spec)
    if policy_name == "two_phase" and "switch_t" not in params:
        params = dict(params, switch_t=n // 2)
    grid = make_grid(n, b)
    key = _cell_key(env_spec, policy_name, mode, n, b, delta, bound_from)

    finals = np.empty(reps)
    opt_fracs = np.empty(reps)
    pulls = np.zeros(env.k)
    curve_sum = np.zeros(grid.n)
    curve_sq = np.zeros(grid.n)
    taus = []
    none_count = 0
    label = None
    spec = None
    for i in range(reps):
        seed = derive_seed(master_seed, key, i)
        policy = make_policy(policy_name, env.k, params=params, env_means=env.means)
        if mode == "plain":
            rec = run_batch(policy, env, grid, seed, env_label=env_spec)
        elif mode == "delayed_start":
            rec = delayed_start_run(
                policy, UniformPolicy(env.k), MonotoneBound(env.means), env, grid,
                seed, env_label=env_spec,
            )
        else:
            rec = approx_delayed_start_run(
                policy, env, grid, delta, seed, bound_from=bound_from,
                env_label=env_spec,
            )
        finals[i] = rec.final_regret
        opt_fracs[i] = rec.optimal_pulls / grid.n
        pulls += rec.pull_counts
        curve_sum += rec.pseudo_regret
        curve_sq += rec.pseudo_regret**2
        if rec.phase is not None:
            if rec.phase.tau_hat is None:
                none_count += 1
            else:
                taus.append(rec.phase.tau_hat)
        label = rec.policy
        spec = rec.spec

    mean_final = float(finals.mean())
    stderr_final = float(finals.std(ddof=1) / np.sqrt(reps)) if reps > 1 else 0.0
    curve_mean = curve_sum / reps
    if reps > 1:
        var = np.clip(curve_sq / reps - curve_mean**2, 0.0, None) * reps / (reps - 1)
        curve_stderr = np.sqrt(var / reps)
    else:
        curve_stderr = np.zeros_like(curve_mean)
    tau_mean = float(np.mean(taus)) if taus else None
    tau_none = none_count if mode != "plain" else None
    return CellResult(
        env=env_spec, policy=label, spec=spec, b=b, n=grid.n, reps=reps,
        mean_final=mean_final, stderr_final=stderr_final,
        opt_frac=float(opt_fracs.mean()), mean_pull_counts=pulls / reps,
        tau_mean=tau_mean, tau_none=tau_none,
        curve_mean=curve_mean, curve_stderr=curve_stderr,
    )


def run_experiment(config: ExperimentConfig, threads: int = 1) -> RegretTable:
    """Run every configured cell and aggregate; output is thread-invariant."""
    config.validate()
    payloads = [
        (
            e, p, config.policy_params.get(p, {}), config.n, b, config.reps,
            config.master_seed, config.mode, config.delta, config.bound_from,
        )
        for (e, p, b) in config.cells()
    ]
    if threads <= 1 or len(payloads) == 1:
        rows = [_run_cell(pl) for pl in payloads]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_run_cell, payloads))
    return RegretTable(rows=rows, config=config)


@dataclass(eq=False)
class BoundInequality:
    name: str
    lhs_label: str
    rhs_label: str
    lhs: float
    rhs: float
    stderr: float
    verdict: str
    gate_pass: bool

    @property
    def diff(self) -> float:
        return self.rhs - self.lhs


@dataclass(eq=False)
class BoundReport:
    policy: str
    env: str
    n: int
    b: int
    m: int
    reps: int
    mean_online: float
    se_online: float
    mean_batch: float
    se_batch: float
    mean_m: float
    se_m: float
    inequalities: list

    @property
    def gate_pass(self) -> bool:
        return all(iq.gate_pass for iq in self.inequalities)


def _verdict(diff: float, se: float) -> str:
    if se == 0.0:
        return "holds" if diff > 0 else ("boundary" if diff == 0.0 else "violated")
    if diff > 2 * se:
        return "holds"
    if diff < -2 * se:
        return "violated"
    return "inconclusive"


def check_theorem_bounds(
    policy_name: str,
    env_spec: str,
    n: int,
    b: int,
    reps: int,
    master_seed: int = 0,
    policy_params: dict | None = None,
    threads: int = 1,
) -> BoundReport:
    """Monte-Carlo check of R_n(online) <= R_n(batch b) <= b * R_M(online).

    Batch size 1 collapses all three quantities and is rejected.  The
    strict lower inequality is reported with a 2-standard-error verdict but
    only its non-strict version gates; the upper inequality gates at the
    same slack.
    """
    if b < 2:
        raise ConfigError("bound check needs b >= 2; at b=1 the sandwich collapses")
    env = parse_env(env_spec)
    params = dict(policy_params or {})
    if policy_name == "two_phase" and "switch_t" not in params:
        params["switch_t"] = n // 2
    grid = make_grid(n, b)
    n, m = grid.n, grid.M

    def one_rep(i):
        pol = make_policy(policy_name, env.k, params=params, env_means=env.means)
        key = f"thm|{env_spec}|{policy_name}|{n}|{b}"
        r_on = run_online(pol, env, n, derive_seed(master_seed, key, "online", i))
        pol2 = make_policy(policy_name, env.k, params=params, env_means=env.means)
        r_b = run_batch(pol2, env, grid, derive_seed(master_seed, key, "batch", i))
        pol3 = make_policy(policy_name, env.k, params=params, env_means=env.means)
        r_m = run_online(pol3, env, m, derive_seed(master_seed, key, "short", i))
        return r_on.final_regret, r_b.final_regret, r_m.final_regret

    chunks = _split_reps(reps, threads)
    if threads <= 1 or len(chunks) == 1:
        triples = [one_rep(i) for i in range(reps)]
    else:
        payloads = [
            (policy_name, env_spec, params, n, b, master_seed, lo, hi)
            for lo, hi in chunks
        ]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_bound_chunk, payloads))
        triples = [t for part in parts for t in part]
    arr = np.array(triples)
    means = arr.mean(axis=0)
    if reps > 1:
        ses = arr.std(axis=0, ddof=1) / np.sqrt(reps)
    else:
        ses = np.zeros(3)
    mean_on, mean_b, mean_m = (float(x) for x in means)
    se_on, se_b, se_m = (float(x) for x in ses)

    d_low = mean_b - mean_on
    se_low = float(np.hypot(se_b, se_on))
    d_up = b * mean_m - mean_b
    se_up = float(np.hypot(b * se_m, se_b))
    inequalities = [
        BoundInequality(
            name="lower", lhs_label="R_n(online)", rhs_label=f"R_n(b={b})",
            lhs=mean_on, rhs=mean_b, stderr=se_low,
            verdict=_verdict(d_low, se_low), gate_pass=d_low >= -2 * se_low,
        ),
        BoundInequality(
            name="upper", lhs_label=f"R_n(b={b})", rhs_label=f"{b}*R_{m}(online)",
            lhs=mean_b, rhs=b * mean_m, stderr=se_up,
            verdict=_verdict(d_up, se_up), gate_pass=d_up >= -2 * se_up,
        ),
    ]
    return BoundReport(
        policy=policy_name, env=env_spec, n=n, b=b, m=m, reps=reps,
        mean_online=mean_on, se_online=se_on, mean_batch=mean_b, se_batch=se_b,
        mean_m=mean_m, se_m=se_m, inequalities=inequalities,
    )


def _split_reps(reps: int, threads: int):
    if threads <= 1:
        return [(0, reps)]
    per = max(1, reps // (threads * 4))
    return [(lo, min(lo + per, reps)) for lo in range(0, reps, per)]


def _bound_chunk(payload):
    policy_name, env_spec, params, n, b, master_seed, lo, hi = payload
    env = parse_env(env_spec)
    grid = make_grid(n, b)
    key = f"thm|{env_spec}|{policy_name}|{n}|{b}"
    out = []
    for i in range(lo, hi):
        pol = make_policy(policy_name, env.k, params=params, env_means=env.means)
        r_on = run_online(pol, env, n, derive_seed(master_seed, key, "online", i))
        pol2 = make_policy(policy_name, env.k, params=params, env_means=env.means)
        r_b = run_batch(pol2, env, grid, derive_seed(master_seed, key, "batch", i))
        pol3 = make_policy(policy_name, env.k, params=params, env_means=env.means)
        r_m = run_online(pol3, env, grid.M, derive_seed(master_seed, key, "short", i))
        out.append((r_on.final_regret, r_b.final_regret, r_m.final_regret))
    return out


def regret_curve(
    policy, env, spec: str, grid, reps: int, master_seed: int = 0,
) -> RegretCurve:
    """Pointwise mean and stderr of cumulative pseudo-regret over reps."""
    if spec not in ("online", "batch", "short"):
        raise ConfigError("spec must be online, batch, or short")
    s = np.zeros(grid.n)
    sq = np.zeros(grid.n)
    for i in range(reps):
        seed = derive_seed(master_seed, "curve", spec, grid.n, grid.b, i)
        if spec == "online":
            rec = run_online(policy, env, grid.n, seed)
        elif spec == "batch":
            rec = run_batch(policy, env, grid, seed)
        else:
            rec = run_short(policy, env, grid, seed)
        s += rec.pseudo_regret
        sq += rec.pseudo_regret**2
    mean = s / reps
    if reps > 1:
        var = np.clip(sq / reps - mean**2, 0.0, None) * reps / (reps - 1)
        stderr = np.sqrt(var / reps)
    else:
        stderr = np.zeros_like(mean)
    return RegretCurve(mean, stderr, reps)
