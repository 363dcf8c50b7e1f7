"""Run engine for the three feedback schedules.

A policy interacts with an environment over a batch grid.  The schedules
differ only in what feedback the policy sees and when:

* online: every step's feedback is visible before the next decision
  (the degenerate grid with batch size 1);
* batch: all feedback from batch ``j`` is released together after the
  batch ends;
* short: only the first step of each batch is ever released, so after
  ``j`` batches the policy has seen ``j`` entries.

Decisions inside a batch are made from the frozen pre-batch state, so the
played rule is constant within a batch for every policy in this package.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .core import BatchGrid, History, HistoryEntry, make_grid
from .environments import BernoulliEnv, LinearContextualEnv

OPT_TOL = 1e-12


@dataclass(eq=False)
class RunRecord:
    """Full trace of one run.

    ``pseudo_regret`` and ``optimal_hits`` are cumulative per step;
    ``pull_counts`` is indexed by arm.  ``phase`` is filled by the
    delayed-start runners, ``history`` only when requested.
    """

    spec: str
    policy: str
    env: str
    n: int
    b: int
    seed: int
    actions: np.ndarray
    pseudo_regret: np.ndarray
    optimal_hits: np.ndarray
    pull_counts: np.ndarray
    phase: object | None = None
    history: History | None = field(default=None, repr=False)

    @property
    def final_regret(self) -> float:
        return float(self.pseudo_regret[-1])

    @property
    def optimal_pulls(self) -> int:
        return int(self.optimal_hits[-1])


def _spec_tag(visibility: str, b: int) -> str:
    if visibility == "short":
        return "short"
    return "online" if b == 1 else "batch"


def _run(
    policy,
    env,
    grid: BatchGrid,
    seed: int,
    visibility: str,
    policy_label: str | None = None,
    env_label: str = "custom",
    collect_history: bool = False,
) -> RunRecord:
    if visibility not in ("batch", "short"):
        raise ValueError(f"unknown visibility {visibility!r}")
    rng = np.random.default_rng(seed)
    n, b, M = grid.n, grid.b, grid.M
    contextual = isinstance(env, LinearContextualEnv)
    actions = np.empty(n, dtype=np.int64)
    deltas = np.empty(n)
    opt = np.empty(n, dtype=bool)
    history = History() if collect_history else None
    state = policy.init_state()
    if not contextual:
        gap_vec = env.gap_vector()

    for j in range(M):
        lo = j * b
        hi = lo + b
        if contextual:
            ctx = env.sample_contexts(rng, b)
            feats = env.features_batch(ctx)
            acts = policy.act_batch(state, b, rng, feature_sets=feats)
            rows = np.arange(b)
            chosen = feats[rows, acts]
            rews = env.sample_rewards(chosen, rng)
            mm = env.mean_matrix(ctx)
            best = mm.max(axis=1)
            step_means = mm[rows, acts]
            deltas[lo:hi] = best - step_means
            opt[lo:hi] = step_means >= best - OPT_TOL
            feed_actions = chosen
        else:
            acts = policy.act_batch(state, b, rng)
            rews = env.sample_rewards(acts, rng)
            deltas[lo:hi] = gap_vec[acts]
            feed_actions = acts
        actions[lo:hi] = acts

        if visibility == "short":
            feed_actions = feed_actions[:1]
            feed_rewards = rews[:1]
        else:
            feed_rewards = rews
        if history is not None:
            if visibility == "short":
                entry_action = chosen[0] if contextual else int(acts[0])
                history.append(HistoryEntry(lo + 1, entry_action, float(rews[0])))
            else:
                for i in range(b):
                    entry_action = chosen[i] if contextual else int(acts[i])
                    history.append(
                        HistoryEntry(lo + 1 + i, entry_action, float(rews[i]))
                    )
            history.release_all()
        state = policy.update_arrays(state, feed_actions, feed_rewards)

    if not contextual:
        opt = deltas == 0.0
    return RunRecord(
        spec=_spec_tag(visibility, b),
        policy=policy_label if policy_label is not None else policy.name,
        env=env_label,
        n=n,
        b=b,
        seed=seed,
        actions=actions,
        pseudo_regret=np.cumsum(deltas),
        optimal_hits=np.cumsum(opt),
        pull_counts=np.bincount(actions, minlength=env.k),
        history=history,
    )


def run_online(policy, env, n: int, seed: int, **kwargs) -> RunRecord:
    """Run with every step's feedback visible immediately (batch size 1)."""
    return _run(policy, env, make_grid(n, 1), seed, "batch", **kwargs)


def run_batch(policy, env, grid: BatchGrid, seed: int, **kwargs) -> RunRecord:
    """Run with feedback released once per batch boundary."""
    return _run(policy, env, grid, seed, "batch", **kwargs)


def run_short(policy, env, grid: BatchGrid, seed: int, **kwargs) -> RunRecord:
    """Run releasing only the first entry of each batch."""
    return _run(policy, env, grid, seed, "short", **kwargs)


RUN_CSV_HEADER = [
    "spec",
    "policy",
    "env",
    "n",
    "b",
    "seed",
    "final_regret",
    "optimal_pulls",
]


def records_to_csv(records, path) -> None:
    """Write one CSV row per run record with the standard header."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RUN_CSV_HEADER)
        for r in records:
            writer.writerow(
                [
                    r.spec,
                    r.policy,
                    r.env,
                    str(r.n),
                    str(r.b),
                    str(r.seed),
                    repr(r.final_regret),
                    str(r.optimal_pulls),
                ]
            )
