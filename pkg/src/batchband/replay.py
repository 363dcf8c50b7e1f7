"""Offline replay evaluation of policies on logged bandit data.

The evaluator streams logged records in order.  At each record the policy
proposes an action from its currently visible history; when the proposal
equals the logged action the record is matched and its reward is scored
against the success threshold.  Matched records accumulate into a pending
batch, and the policy's history advances only once every ``b`` matched
records, so the effective horizon is the matched count, not the raw
record count.  Unmatched records are skipped without touching history,
which keeps the estimate unbiased under uniform logging.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .environments import DataError, block_features

SUCCESS_THRESHOLD = 0.5


@dataclass(frozen=True)
class ReplayResult:
    """Replay outcome for one (policy, batch size) configuration.

    ``cr`` is ``None`` when no record matched; ``defined`` flags that
    degenerate case explicitly.
    """

    policy: str
    b: int
    matched: int
    successes: int
    cr: float | None
    relative_cr: float | None = None

    @property
    def defined(self) -> bool:
        return self.matched > 0


def replay_evaluate(
    policy,
    dataset,
    b: int,
    seed: int,
    policy_label: str | None = None,
) -> ReplayResult:
    """Score ``policy`` on logged records under a batch-``b`` constraint.

    Parameters
    ----------
    policy
        Policy object; linear policies read each record's context, finite
        armed policies ignore it.
    dataset
        Sequence of ``LoggedRecord``; line numbers in errors count the CSV
        header as line 1, so record ``i`` is line ``i + 2``.
    b
        Matched records per history update; the final partial batch is
        scored but never fed back (the stream ends first).
    seed
        Seeds the proposal stream, so results are reproducible given
        (dataset, policy configuration, seed).
    """
    dataset = list(dataset)
    if not dataset:
        raise DataError("dataset is empty")
    if b < 1:
        raise DataError(f"batch size {b} must be >= 1")
    k = policy.k
    contextual = hasattr(policy, "dim")
    rng = np.random.default_rng(seed)
    state = policy.init_state()
    matched = 0
    successes = 0
    pending_keys: list = []
    pending_rewards: list = []
    for i, rec in enumerate(dataset):
        if not 0 <= rec.action < k:
            raise DataError(
                f"line {i + 2}: action {rec.action} out of range for k={k}"
            )
        if contextual:
            feats = block_features(rec.context, k)
            proposal = policy.act(state, rng, feature_set=feats)
        else:
            proposal = policy.act(state, rng)
        if proposal != rec.action:
            continue
        matched += 1
        if rec.reward >= SUCCESS_THRESHOLD:
            successes += 1
        pending_keys.append(feats[rec.action] if contextual else rec.action)
        pending_rewards.append(rec.reward)
        if len(pending_rewards) == b:
            state = policy.update_arrays(
                state, np.asarray(pending_keys), np.asarray(pending_rewards)
            )
            pending_keys.clear()
            pending_rewards.clear()
    cr = successes / matched if matched else None
    label = policy_label or getattr(policy, "name", type(policy).__name__)
    return ReplayResult(
        policy=label, b=b, matched=matched, successes=successes, cr=cr
    )


def relative_cr(result: ReplayResult, baseline: ReplayResult) -> float:
    """Conversion rate of ``result`` normalized by a positive baseline."""
    if result.cr is None:
        raise DataError("result has no matched records; CR is undefined")
    if baseline.cr is None or baseline.cr <= 0.0:
        raise DataError("baseline CR must be positive")
    return result.cr / baseline.cr


def with_relative(result: ReplayResult, baseline: ReplayResult) -> ReplayResult:
    """Copy of ``result`` with ``relative_cr`` filled in."""
    return ReplayResult(
        policy=result.policy,
        b=result.b,
        matched=result.matched,
        successes=result.successes,
        cr=result.cr,
        relative_cr=relative_cr(result, baseline),
    )


REPLAY_CSV_HEADER = ["policy", "b", "matched", "successes", "cr", "relative_cr"]


def write_replay_csv(results, path) -> None:
    """Write replay results, one row per (policy, b) configuration."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REPLAY_CSV_HEADER)
        for r in results:
            w.writerow(
                [
                    r.policy,
                    str(r.b),
                    str(r.matched),
                    str(r.successes),
                    "" if r.cr is None else repr(r.cr),
                    "" if r.relative_cr is None else repr(r.relative_cr),
                ]
            )
